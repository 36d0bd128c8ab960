//! Message transport for the network-in-the-loop testbed: impairment
//! sampling, discrete-event delivery on a virtual clock, real UDP forwarding
//! agents, the bit-exact wire format, and a timestamping packet tap.

pub mod agent;
pub mod channel;
pub mod profile;
pub mod sched;
pub mod tap;
pub mod wire;

pub use agent::{run_forward_agent, run_impairment_proxy, wall_ns, AgentStats, ProxyConfig};
pub use channel::{gilbert_elliott_step, sample_channel, ChannelOutcome, GeState, LinkState};
pub use profile::{
    builtin_profile, ChannelMode, ChannelProfile, Direction, GeParams, Jitter, LinkSettings,
    LossModel, ProfileError, BUILTIN_PROFILES,
};
pub use sched::{emu_send, EmuEvent, Scheduler};
pub use tap::{load_tap, TapDirection, TapError, TapLog, TapMsgType, TapRecord, TapWriter};
pub use wire::{
    decode_message, encode_message, EgmCommand, MsgType, Payload, WireError, WireMessage,
};
