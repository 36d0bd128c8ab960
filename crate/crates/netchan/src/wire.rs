//! Bit-exact datagram vocabulary shared by every process.
//!
//! Layout (all integers little-endian):
//!   header, 20 bytes: magic "NHL1", version u8, msg_type u8, robot_id u16,
//!                     seq u32, send_time_ns u64
//!   payload per msg_type:
//!     CRITICAL_POINT: mission_id u32, critical_index i32 (-1 = unrestricted)
//!     ROBOT_STATUS:   mission_id u32, path_index i32, x f64, y f64,
//!                     theta f64, v f64
//!     EGM_JOINTS:     joint_count u8, joint_count x f64
//!     EGM_CTRL:       command u8 (0 = deactivate, 1 = activate)

use thiserror::Error;

pub const WIRE_MAGIC: [u8; 4] = *b"NHL1";
pub const WIRE_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    CriticalPoint = 1,
    RobotStatus = 2,
    EgmJoints = 3,
    EgmCtrl = 4,
}

impl MsgType {
    pub fn from_u8(v: u8) -> Option<MsgType> {
        match v {
            1 => Some(MsgType::CriticalPoint),
            2 => Some(MsgType::RobotStatus),
            3 => Some(MsgType::EgmJoints),
            4 => Some(MsgType::EgmCtrl),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MsgType::CriticalPoint => "critical_point",
            MsgType::RobotStatus => "robot_status",
            MsgType::EgmJoints => "egm_joints",
            MsgType::EgmCtrl => "egm_ctrl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum EgmCommand {
    Deactivate = 0,
    Activate = 1,
}

/// Typed payload; the variant determines the wire msg_type.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    CriticalPoint { mission_id: u32, critical_index: i32 },
    RobotStatus { mission_id: u32, path_index: i32, x: f64, y: f64, theta: f64, v: f64 },
    EgmJoints { joints: Vec<f64> },
    EgmCtrl { command: EgmCommand },
}

impl Payload {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Payload::CriticalPoint { .. } => MsgType::CriticalPoint,
            Payload::RobotStatus { .. } => MsgType::RobotStatus,
            Payload::EgmJoints { .. } => MsgType::EgmJoints,
            Payload::EgmCtrl { .. } => MsgType::EgmCtrl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub version: u8,
    pub robot_id: u16,
    pub seq: u32,
    pub send_time_ns: u64,
    pub payload: Payload,
}

impl WireMessage {
    pub fn new(robot_id: u16, seq: u32, send_time_ns: u64, payload: Payload) -> Self {
        WireMessage { version: WIRE_VERSION, robot_id, seq, send_time_ns, payload }
    }

    pub fn msg_type(&self) -> MsgType {
        self.payload.msg_type()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("buffer of {0} bytes is shorter than the {HEADER_LEN}-byte header")]
    Truncated(usize),
    #[error("bad magic {0:02X?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown msg_type {0}")]
    UnknownMsgType(u8),
    #[error("payload length {got} does not match {expected} expected for {msg_type}")]
    PayloadLength { msg_type: &'static str, expected: usize, got: usize },
    #[error("invalid {field} value {value}")]
    BadValue { field: &'static str, value: u8 },
}

pub fn encode_message(msg: &WireMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 48);
    out.extend_from_slice(&WIRE_MAGIC);
    out.push(msg.version);
    out.push(msg.msg_type() as u8);
    out.extend_from_slice(&msg.robot_id.to_le_bytes());
    out.extend_from_slice(&msg.seq.to_le_bytes());
    out.extend_from_slice(&msg.send_time_ns.to_le_bytes());
    match &msg.payload {
        Payload::CriticalPoint { mission_id, critical_index } => {
            out.extend_from_slice(&mission_id.to_le_bytes());
            out.extend_from_slice(&critical_index.to_le_bytes());
        }
        Payload::RobotStatus { mission_id, path_index, x, y, theta, v } => {
            out.extend_from_slice(&mission_id.to_le_bytes());
            out.extend_from_slice(&path_index.to_le_bytes());
            out.extend_from_slice(&x.to_le_bytes());
            out.extend_from_slice(&y.to_le_bytes());
            out.extend_from_slice(&theta.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        Payload::EgmJoints { joints } => {
            debug_assert!(joints.len() <= u8::MAX as usize);
            out.push(joints.len() as u8);
            for q in joints {
                out.extend_from_slice(&q.to_le_bytes());
            }
        }
        Payload::EgmCtrl { command } => {
            out.push(*command as u8);
        }
    }
    out
}

pub fn decode_message(bytes: &[u8]) -> Result<WireMessage, WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated(bytes.len()));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != WIRE_MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let version = bytes[4];
    if version != WIRE_VERSION {
        return Err(WireError::UnsupportedVersion(version));
    }
    let raw_type = bytes[5];
    let msg_type = MsgType::from_u8(raw_type).ok_or(WireError::UnknownMsgType(raw_type))?;
    let robot_id = u16::from_le_bytes(bytes[6..8].try_into().unwrap());
    let seq = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let send_time_ns = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let body = &bytes[HEADER_LEN..];

    let payload = match msg_type {
        MsgType::CriticalPoint => {
            expect_len(msg_type, body.len(), 8)?;
            Payload::CriticalPoint {
                mission_id: u32::from_le_bytes(body[0..4].try_into().unwrap()),
                critical_index: i32::from_le_bytes(body[4..8].try_into().unwrap()),
            }
        }
        MsgType::RobotStatus => {
            expect_len(msg_type, body.len(), 40)?;
            Payload::RobotStatus {
                mission_id: u32::from_le_bytes(body[0..4].try_into().unwrap()),
                path_index: i32::from_le_bytes(body[4..8].try_into().unwrap()),
                x: f64::from_le_bytes(body[8..16].try_into().unwrap()),
                y: f64::from_le_bytes(body[16..24].try_into().unwrap()),
                theta: f64::from_le_bytes(body[24..32].try_into().unwrap()),
                v: f64::from_le_bytes(body[32..40].try_into().unwrap()),
            }
        }
        MsgType::EgmJoints => {
            if body.is_empty() {
                return Err(WireError::PayloadLength {
                    msg_type: msg_type.name(),
                    expected: 1,
                    got: 0,
                });
            }
            let count = body[0] as usize;
            expect_len(msg_type, body.len(), 1 + 8 * count)?;
            let joints = body[1..]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Payload::EgmJoints { joints }
        }
        MsgType::EgmCtrl => {
            expect_len(msg_type, body.len(), 1)?;
            let command = match body[0] {
                0 => EgmCommand::Deactivate,
                1 => EgmCommand::Activate,
                v => return Err(WireError::BadValue { field: "egm_ctrl.command", value: v }),
            };
            Payload::EgmCtrl { command }
        }
    };
    Ok(WireMessage { version, robot_id, seq, send_time_ns, payload })
}

fn expect_len(msg_type: MsgType, got: usize, expected: usize) -> Result<(), WireError> {
    if got != expected {
        Err(WireError::PayloadLength { msg_type: msg_type.name(), expected, got })
    } else {
        Ok(())
    }
}
