//! Channel impairment profiles: per-direction delay, jitter and loss models,
//! plus the named defaults used throughout the experiment harness.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Direction of a message relative to the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Controller -> robot (critical points, EGM control and joint streams).
    Command,
    /// Robot -> controller (status reports).
    Status,
}

/// How the channel is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// Deterministic in-process delivery on the virtual clock.
    Emulated,
    /// Datagrams leave the process over real UDP sockets; any impairment
    /// comes from the network in between (agents, proxy, or real links).
    RealPassthrough,
}

/// Jitter added on top of the base one-way delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Jitter {
    #[default]
    None,
    /// Uniform draw in [-half_width_ns, +half_width_ns]; the total delay is
    /// clamped at zero.
    Uniform { half_width_ns: u64 },
    /// Nonnegative exponential draw with the given mean.
    Exponential { mean_ns: u64 },
}

/// Parameters of the two-state Gilbert-Elliott loss chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeParams {
    pub p_good_to_bad: f64,
    pub p_bad_to_good: f64,
    pub loss_in_good: f64,
    pub loss_in_bad: f64,
}

impl GeParams {
    /// Stationary mean loss rate pi_G*loss_G + pi_B*loss_B of the chain.
    /// A chain that never transitions keeps its start state (Good).
    pub fn stationary_loss_rate(&self) -> f64 {
        let denom = self.p_good_to_bad + self.p_bad_to_good;
        if denom == 0.0 {
            return self.loss_in_good;
        }
        let pi_bad = self.p_good_to_bad / denom;
        (1.0 - pi_bad) * self.loss_in_good + pi_bad * self.loss_in_bad
    }
}

/// Per-message loss model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossModel {
    /// I.i.d. loss with probability `p` per message.
    Bernoulli { p: f64 },
    /// Bursty loss driven by a two-state Markov chain.
    GilbertElliott(GeParams),
}

impl LossModel {
    /// Long-run mean loss rate of the model.
    pub fn mean_loss_rate(&self) -> f64 {
        match self {
            LossModel::Bernoulli { p } => *p,
            LossModel::GilbertElliott(ge) => ge.stationary_loss_rate(),
        }
    }
}

impl Default for LossModel {
    fn default() -> Self {
        LossModel::Bernoulli { p: 0.0 }
    }
}

/// Impairment settings for one direction of a link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LinkSettings {
    /// Base one-way delay applied to every delivered message.
    #[serde(default)]
    pub delay_ns: u64,
    #[serde(default)]
    pub jitter: Jitter,
    #[serde(default)]
    pub loss: LossModel,
}

impl LinkSettings {
    pub fn fixed_delay(delay_ns: u64) -> Self {
        LinkSettings { delay_ns, jitter: Jitter::None, loss: LossModel::Bernoulli { p: 0.0 } }
    }

    pub fn mean_delay_ns(&self) -> u64 {
        match self.jitter {
            Jitter::None => self.delay_ns,
            // Uniform jitter is symmetric around the base delay.
            Jitter::Uniform { .. } => self.delay_ns,
            Jitter::Exponential { mean_ns } => self.delay_ns + mean_ns,
        }
    }
}

/// Socket endpoints for a real-passthrough deployment, one pair per direction.
/// `send_to` is the remote forwarding agent; `bind` is where the forwarded
/// stream comes back in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassthroughEndpoints {
    pub command_send_to: String,
    pub command_bind: String,
    #[serde(default)]
    pub status_send_to: Option<String>,
    #[serde(default)]
    pub status_bind: Option<String>,
}

/// A named channel configuration: emulated impairment per direction, or a
/// real-passthrough socket layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub name: String,
    pub mode: ChannelMode,
    /// Settings applied to both directions unless overridden.
    #[serde(default)]
    pub link: LinkSettings,
    /// Optional distinct settings for the command direction.
    #[serde(default)]
    pub command_override: Option<LinkSettings>,
    /// Optional distinct settings for the status direction.
    #[serde(default)]
    pub status_override: Option<LinkSettings>,
    /// Required when mode = real-passthrough.
    #[serde(default)]
    pub passthrough: Option<PassthroughEndpoints>,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile {name}: {field} = {value} is outside [0, 1]")]
    BadProbability { name: String, field: &'static str, value: f64 },
    #[error("profile {name}: real-passthrough profiles carry no impairment parameters")]
    PassthroughWithImpairment { name: String },
    #[error("profile {name}: real-passthrough profiles need a [passthrough] endpoint table")]
    PassthroughWithoutEndpoints { name: String },
    #[error("no built-in profile named {0:?} and no such file")]
    UnknownProfile(String),
    #[error("failed to read profile file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("failed to parse profile file {path}: {source}")]
    Parse { path: String, source: toml::de::Error },
}

impl ChannelProfile {
    /// Uniform emulated profile with identical settings in both directions.
    pub fn emulated(name: &str, link: LinkSettings) -> Self {
        ChannelProfile {
            name: name.to_string(),
            mode: ChannelMode::Emulated,
            link,
            command_override: None,
            status_override: None,
            passthrough: None,
        }
    }

    /// Effective settings for one direction.
    pub fn link(&self, direction: Direction) -> &LinkSettings {
        let over = match direction {
            Direction::Command => self.command_override.as_ref(),
            Direction::Status => self.status_override.as_ref(),
        };
        over.unwrap_or(&self.link)
    }

    /// The same profile with every Gilbert-Elliott loss model replaced by an
    /// i.i.d. Bernoulli model at the chain's stationary mean rate. Delay and
    /// jitter settings are untouched.
    pub fn iid_equivalent(&self) -> ChannelProfile {
        fn flatten(link: &LinkSettings) -> LinkSettings {
            LinkSettings {
                delay_ns: link.delay_ns,
                jitter: link.jitter,
                loss: LossModel::Bernoulli { p: link.loss.mean_loss_rate() },
            }
        }
        ChannelProfile {
            name: format!("{}-iid", self.name),
            mode: self.mode,
            link: flatten(&self.link),
            command_override: self.command_override.as_ref().map(flatten),
            status_override: self.status_override.as_ref().map(flatten),
            passthrough: self.passthrough.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let name = &self.name;
        let check_p = |field: &'static str, value: f64| -> Result<(), ProfileError> {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                Err(ProfileError::BadProbability { name: name.clone(), field, value })
            } else {
                Ok(())
            }
        };
        let check_link = |link: &LinkSettings| -> Result<(), ProfileError> {
            match link.loss {
                LossModel::Bernoulli { p } => check_p("loss.p", p)?,
                LossModel::GilbertElliott(ge) => {
                    check_p("loss.p_good_to_bad", ge.p_good_to_bad)?;
                    check_p("loss.p_bad_to_good", ge.p_bad_to_good)?;
                    check_p("loss.loss_in_good", ge.loss_in_good)?;
                    check_p("loss.loss_in_bad", ge.loss_in_bad)?;
                }
            }
            Ok(())
        };
        check_link(&self.link)?;
        if let Some(l) = &self.command_override {
            check_link(l)?;
        }
        if let Some(l) = &self.status_override {
            check_link(l)?;
        }
        if self.mode == ChannelMode::RealPassthrough {
            let impaired = |l: &LinkSettings| {
                l.delay_ns != 0 || l.jitter != Jitter::None || l.loss != LossModel::default()
            };
            if impaired(&self.link)
                || self.command_override.as_ref().is_some_and(impaired)
                || self.status_override.as_ref().is_some_and(impaired)
            {
                return Err(ProfileError::PassthroughWithImpairment { name: name.clone() });
            }
            if self.passthrough.is_none() {
                return Err(ProfileError::PassthroughWithoutEndpoints { name: name.clone() });
            }
        }
        Ok(())
    }

    /// Resolve a built-in profile name, falling back to a TOML profile file.
    pub fn resolve(name_or_path: &str) -> Result<ChannelProfile, ProfileError> {
        if let Some(profile) = builtin_profile(name_or_path) {
            return Ok(profile);
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(ProfileError::UnknownProfile(name_or_path.to_string()));
        }
        Self::load(path)
    }

    /// Load and validate a profile from a TOML file.
    pub fn load(path: &Path) -> Result<ChannelProfile, ProfileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
        let profile: ChannelProfile = toml::from_str(&text)
            .map_err(|source| ProfileError::Parse { path: path.display().to_string(), source })?;
        profile.validate()?;
        Ok(profile)
    }
}

/// Names of the built-in profiles, in report order.
pub const BUILTIN_PROFILES: [&str; 4] = ["ideal", "ethernet-lab", "wifi6-short", "wifi6-long"];

/// Built-in emulated profiles. The Wi-Fi ones are calibration stand-ins for a
/// short-range (~20 m) and long-range (~35 m) link; override via profile files
/// when real KPIs are available.
pub fn builtin_profile(name: &str) -> Option<ChannelProfile> {
    let link = match name {
        "ideal" => LinkSettings::fixed_delay(0),
        "ethernet-lab" => LinkSettings::fixed_delay(200_000),
        "wifi6-short" => LinkSettings {
            delay_ns: 1_000_000,
            jitter: Jitter::Exponential { mean_ns: 2_000_000 },
            loss: LossModel::GilbertElliott(GeParams {
                p_good_to_bad: 3.3e-5,
                p_bad_to_good: 0.01,
                loss_in_good: 2e-4,
                loss_in_bad: 0.6,
            }),
        },
        "wifi6-long" => LinkSettings {
            delay_ns: 2_000_000,
            jitter: Jitter::Exponential { mean_ns: 6_000_000 },
            loss: LossModel::GilbertElliott(GeParams {
                p_good_to_bad: 2.1e-5,
                p_bad_to_good: 2e-3,
                loss_in_good: 5e-4,
                loss_in_bad: 0.95,
            }),
        },
        _ => return None,
    };
    Some(ChannelProfile::emulated(name, link))
}
