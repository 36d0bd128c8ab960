//! Per-message timestamp records: the software stand-in for a hardware
//! network probe, at 1 ns resolution.
//!
//! CSV layout: header `endpoint,direction,msg_type,robot_id,seq,t_ns`, one
//! record per line, UTF-8, LF line endings.

use crate::wire::{MsgType, WireMessage};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TapDirection {
    Send,
    Recv,
}

impl TapDirection {
    pub fn name(&self) -> &'static str {
        match self {
            TapDirection::Send => "send",
            TapDirection::Recv => "recv",
        }
    }
}

/// Message type as seen by the tap; undecodable datagrams log as Unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TapMsgType {
    Known(MsgType),
    Unknown,
}

impl TapMsgType {
    pub fn name(&self) -> &'static str {
        match self {
            TapMsgType::Known(t) => t.name(),
            TapMsgType::Unknown => "unknown",
        }
    }
}

impl fmt::Display for TapMsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapRecord {
    pub endpoint: String,
    pub direction: TapDirection,
    pub msg_type: TapMsgType,
    pub robot_id: u16,
    pub seq: u32,
    pub t_ns: u64,
}

impl TapRecord {
    fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}\n",
            self.endpoint,
            self.direction.name(),
            self.msg_type.name(),
            self.robot_id,
            self.seq,
            self.t_ns
        )
    }
}

pub const TAP_CSV_HEADER: &str = "endpoint,direction,msg_type,robot_id,seq,t_ns";

#[derive(Debug, Error)]
pub enum TapError {
    #[error("tap io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: malformed tap row: {reason}")]
    Malformed { path: String, line: usize, reason: String },
}

/// In-memory tap for emulated runs; order of appends is preserved.
#[derive(Debug, Clone)]
pub struct TapLog {
    endpoint: String,
    records: Vec<TapRecord>,
}

impl TapLog {
    pub fn new(endpoint: &str) -> Self {
        TapLog { endpoint: endpoint.to_string(), records: Vec::new() }
    }

    pub fn append(&mut self, record: TapRecord) {
        self.records.push(record);
    }

    pub fn append_msg(&mut self, direction: TapDirection, msg: &WireMessage, t_ns: u64) {
        self.records.push(TapRecord {
            endpoint: self.endpoint.clone(),
            direction,
            msg_type: TapMsgType::Known(msg.msg_type()),
            robot_id: msg.robot_id,
            seq: msg.seq,
            t_ns,
        });
    }

    pub fn records(&self) -> &[TapRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TapRecord> {
        self.records
    }

    pub fn save(&self, path: &Path) -> Result<(), TapError> {
        let mut w = TapWriter::create(path, &self.endpoint)?;
        for r in &self.records {
            w.append(r.clone())?;
        }
        w.flush()
    }
}

/// File-backed tap used by the long-running agent and proxy processes.
/// Records are flushed as they are written so a killed process still leaves
/// a usable tap behind.
pub struct TapWriter {
    endpoint: String,
    path: String,
    out: BufWriter<File>,
}

impl TapWriter {
    pub fn create(path: &Path, endpoint: &str) -> Result<Self, TapError> {
        let file = File::create(path)
            .map_err(|source| TapError::Io { path: path.display().to_string(), source })?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{TAP_CSV_HEADER}")
            .map_err(|source| TapError::Io { path: path.display().to_string(), source })?;
        Ok(TapWriter { endpoint: endpoint.to_string(), path: path.display().to_string(), out })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn append(&mut self, record: TapRecord) -> Result<(), TapError> {
        self.out
            .write_all(record.to_csv_line().as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|source| TapError::Io { path: self.path.clone(), source })
    }

    pub fn append_raw(
        &mut self,
        direction: TapDirection,
        msg_type: TapMsgType,
        robot_id: u16,
        seq: u32,
        t_ns: u64,
    ) -> Result<(), TapError> {
        self.append(TapRecord {
            endpoint: self.endpoint.clone(),
            direction,
            msg_type,
            robot_id,
            seq,
            t_ns,
        })
    }

    pub fn flush(&mut self) -> Result<(), TapError> {
        self.out.flush().map_err(|source| TapError::Io { path: self.path.clone(), source })
    }
}

/// Load a tap CSV, preserving record order. Malformed rows report the
/// 1-based line number.
pub fn load_tap(path: &Path) -> Result<Vec<TapRecord>, TapError> {
    let path_str = path.display().to_string();
    let file =
        File::open(path).map_err(|source| TapError::Io { path: path_str.clone(), source })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| TapError::Io { path: path_str.clone(), source })?;
        let lineno = idx + 1;
        if idx == 0 {
            if line != TAP_CSV_HEADER {
                return Err(TapError::Malformed {
                    path: path_str,
                    line: lineno,
                    reason: format!("expected header {TAP_CSV_HEADER:?}"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        records.push(parse_row(&line, &path_str, lineno)?);
    }
    Ok(records)
}

fn parse_row(line: &str, path: &str, lineno: usize) -> Result<TapRecord, TapError> {
    let err = |reason: String| TapError::Malformed { path: path.to_string(), line: lineno, reason };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 6 {
        return Err(err(format!("expected 6 fields, got {}", fields.len())));
    }
    let direction = match fields[1] {
        "send" => TapDirection::Send,
        "recv" => TapDirection::Recv,
        other => return Err(err(format!("bad direction {other:?}"))),
    };
    let msg_type = match fields[2] {
        "critical_point" => TapMsgType::Known(MsgType::CriticalPoint),
        "robot_status" => TapMsgType::Known(MsgType::RobotStatus),
        "egm_joints" => TapMsgType::Known(MsgType::EgmJoints),
        "egm_ctrl" => TapMsgType::Known(MsgType::EgmCtrl),
        "unknown" => TapMsgType::Unknown,
        other => return Err(err(format!("bad msg_type {other:?}"))),
    };
    let robot_id =
        fields[3].parse::<u16>().map_err(|e| err(format!("bad robot_id {:?}: {e}", fields[3])))?;
    let seq = fields[4].parse::<u32>().map_err(|e| err(format!("bad seq {:?}: {e}", fields[4])))?;
    let t_ns = fields[5].parse::<u64>().map_err(|e| err(format!("bad t_ns {:?}: {e}", fields[5])))?;
    Ok(TapRecord { endpoint: fields[0].to_string(), direction, msg_type, robot_id, seq, t_ns })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(seq: u32, t_ns: u64) -> TapRecord {
        TapRecord {
            endpoint: "ep".into(),
            direction: TapDirection::Send,
            msg_type: TapMsgType::Known(MsgType::RobotStatus),
            robot_id: 2,
            seq,
            t_ns,
        }
    }

    #[test]
    fn save_and_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tap.csv");
        let mut log = TapLog::new("ep");
        for i in 0..3 {
            log.append(rec(i, 100 + i as u64));
        }
        log.save(&path).unwrap();
        let back = load_tap(&path).unwrap();
        assert_eq!(back, log.records());
    }

    #[test]
    fn empty_file_yields_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tap.csv");
        TapWriter::create(&path, "ep").unwrap();
        assert!(load_tap(&path).unwrap().is_empty());
    }

    #[test]
    fn order_and_count_preserved_for_large_logs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tap.csv");
        let mut log = TapLog::new("ep");
        for i in 0..10_000u32 {
            log.append(rec(i, i as u64));
        }
        log.save(&path).unwrap();
        let back = load_tap(&path).unwrap();
        assert_eq!(back.len(), 10_000);
        assert!(back.windows(2).all(|w| w[0].seq + 1 == w[1].seq));
    }

    #[test]
    fn malformed_row_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tap.csv");
        std::fs::write(&path, format!("{TAP_CSV_HEADER}\nep,send,robot_status,2,nope,5\n"))
            .unwrap();
        match load_tap(&path) {
            Err(TapError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_msg_type_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tap.csv");
        let mut w = TapWriter::create(&path, "agent").unwrap();
        w.append_raw(TapDirection::Recv, TapMsgType::Unknown, 0, 42, 7).unwrap();
        w.flush().unwrap();
        let back = load_tap(&path).unwrap();
        assert_eq!(back[0].msg_type, TapMsgType::Unknown);
        assert_eq!(back[0].seq, 42);
    }
}
