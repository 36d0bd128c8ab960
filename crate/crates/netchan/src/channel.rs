//! Per-message channel sampling: loss first, then delay plus jitter.
//!
//! All randomness flows through an explicit seeded generator so emulated runs
//! are bit-for-bit reproducible.

use crate::profile::{Direction, GeParams, Jitter, LinkSettings, LossModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Result of pushing one message through the channel model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelOutcome {
    /// Message lost; nothing is delivered.
    Drop,
    /// Message delivered after this many nanoseconds.
    DeliverAfter(u64),
}

/// State of the Gilbert-Elliott chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeState {
    #[default]
    Good,
    Bad,
}

/// Advance the chain one step, then sample loss at the new state's rate.
pub fn gilbert_elliott_step(
    state: GeState,
    params: &GeParams,
    rng: &mut impl Rng,
) -> (GeState, bool) {
    let next = match state {
        GeState::Good => {
            if draw(rng, params.p_good_to_bad) {
                GeState::Bad
            } else {
                GeState::Good
            }
        }
        GeState::Bad => {
            if draw(rng, params.p_bad_to_good) {
                GeState::Good
            } else {
                GeState::Bad
            }
        }
    };
    let loss_p = match next {
        GeState::Good => params.loss_in_good,
        GeState::Bad => params.loss_in_bad,
    };
    (next, draw(rng, loss_p))
}

// Bernoulli draw that is exact at p = 0 and p = 1.
fn draw(rng: &mut impl Rng, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.random_bool(p)
    }
}

/// Mutable sampling state for one direction of one link: the RNG stream and
/// the loss-model state it carries.
#[derive(Debug, Clone)]
pub struct LinkState {
    rng: ChaCha8Rng,
    ge: GeState,
}

impl LinkState {
    /// Derive a state from a run seed. Each direction gets its own RNG stream
    /// so the two directions' draw sequences are independent of interleaving.
    pub fn new(seed: u64, direction: Direction) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(match direction {
            Direction::Command => 1,
            Direction::Status => 2,
        });
        LinkState { rng, ge: GeState::Good }
    }

    /// State seeded directly, for standalone use (proxy, tests).
    pub fn from_seed(seed: u64) -> Self {
        LinkState { rng: ChaCha8Rng::seed_from_u64(seed), ge: GeState::Good }
    }

    pub fn ge_state(&self) -> GeState {
        self.ge
    }
}

/// Sample the channel for one message: returns `Drop` or the total extra
/// delay (base delay plus jitter draw, never negative). Mutates only `state`.
pub fn sample_channel(link: &LinkSettings, state: &mut LinkState) -> ChannelOutcome {
    let lost = match &link.loss {
        LossModel::Bernoulli { p } => draw(&mut state.rng, *p),
        LossModel::GilbertElliott(params) => {
            let (next, lost) = gilbert_elliott_step(state.ge, params, &mut state.rng);
            state.ge = next;
            lost
        }
    };
    if lost {
        return ChannelOutcome::Drop;
    }
    let extra_ns = match link.jitter {
        Jitter::None => link.delay_ns,
        Jitter::Uniform { half_width_ns } => {
            let hw = half_width_ns as i64;
            let draw = state.rng.random_range(-hw..=hw);
            (link.delay_ns as i64).saturating_add(draw).max(0) as u64
        }
        Jitter::Exponential { mean_ns } => {
            if mean_ns == 0 {
                link.delay_ns
            } else {
                let exp = Exp::new(1.0 / mean_ns as f64).expect("positive rate");
                link.delay_ns + exp.sample(&mut state.rng).round() as u64
            }
        }
    };
    ChannelOutcome::DeliverAfter(extra_ns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{GeParams, Jitter, LinkSettings, LossModel};

    fn bernoulli_link(p: f64, delay_ns: u64) -> LinkSettings {
        LinkSettings { delay_ns, jitter: Jitter::None, loss: LossModel::Bernoulli { p } }
    }

    #[test]
    fn certain_loss_always_drops() {
        let link = bernoulli_link(1.0, 123);
        let mut st = LinkState::from_seed(7);
        for _ in 0..1000 {
            assert_eq!(sample_channel(&link, &mut st), ChannelOutcome::Drop);
        }
    }

    #[test]
    fn lossless_fixed_delay_is_exact() {
        let link = bernoulli_link(0.0, 10_000_000);
        let mut st = LinkState::from_seed(7);
        for _ in 0..1000 {
            assert_eq!(sample_channel(&link, &mut st), ChannelOutcome::DeliverAfter(10_000_000));
        }
    }

    // 3-sigma binomial confidence band around p for each grid value.
    #[test]
    fn bernoulli_drop_rate_within_three_sigma() {
        const N: u64 = 100_000;
        for (seed, p) in [(1u64, 0.0f64), (2, 0.1), (3, 0.5), (4, 1.0)] {
            let link = bernoulli_link(p, 0);
            let mut st = LinkState::from_seed(seed);
            let mut drops = 0u64;
            for _ in 0..N {
                if sample_channel(&link, &mut st) == ChannelOutcome::Drop {
                    drops += 1;
                }
            }
            let rate = drops as f64 / N as f64;
            let sigma = (p * (1.0 - p) / N as f64).sqrt();
            if p == 0.0 || p == 1.0 {
                assert_eq!(rate, p, "equality cases are exact");
            } else {
                assert!((rate - p).abs() <= 3.0 * sigma, "p={p} rate={rate}");
            }
        }
    }

    #[test]
    fn ge_absorbing_good_never_loses() {
        let params = GeParams {
            p_good_to_bad: 0.0,
            p_bad_to_good: 0.5,
            loss_in_good: 0.0,
            loss_in_bad: 1.0,
        };
        let mut st = GeState::Good;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            let (next, lost) = gilbert_elliott_step(st, &params, &mut rng);
            st = next;
            assert!(!lost);
        }
    }

    #[test]
    fn ge_absorbing_bad_loses_from_first_step() {
        let params = GeParams {
            p_good_to_bad: 1.0,
            p_bad_to_good: 0.0,
            loss_in_good: 0.0,
            loss_in_bad: 1.0,
        };
        let mut st = GeState::Good;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for step in 0..1000 {
            let (next, lost) = gilbert_elliott_step(st, &params, &mut rng);
            st = next;
            assert!(lost, "step {step}");
            assert_eq!(st, GeState::Bad);
        }
    }

    // Oracle: closed-form stationary rate of the two-state chain, with the
    // Markov-aware asymptotic variance of the empirical mean
    //   v = Var(X) + 2*lambda/(1-lambda) * pi_G*pi_B*(l_B - l_G)^2,
    // lambda = 1 - p_gb - p_bg being the chain's second eigenvalue.
    #[test]
    fn ge_empirical_loss_matches_stationary_rate() {
        let params = GeParams {
            p_good_to_bad: 0.01,
            p_bad_to_good: 0.15,
            loss_in_good: 0.002,
            loss_in_bad: 0.7,
        };
        const N: u64 = 200_000;
        let mut st = GeState::Good;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut losses = 0u64;
        for _ in 0..N {
            let (next, lost) = gilbert_elliott_step(st, &params, &mut rng);
            st = next;
            if lost {
                losses += 1;
            }
        }
        let pi_b = params.p_good_to_bad / (params.p_good_to_bad + params.p_bad_to_good);
        let pi_g = 1.0 - pi_b;
        let mean = pi_g * params.loss_in_good + pi_b * params.loss_in_bad;
        let var_x = pi_g * params.loss_in_good * (1.0 - params.loss_in_good)
            + pi_b * params.loss_in_bad * (1.0 - params.loss_in_bad)
            + pi_g * (params.loss_in_good - mean).powi(2)
            + pi_b * (params.loss_in_bad - mean).powi(2);
        let lambda = 1.0 - params.p_good_to_bad - params.p_bad_to_good;
        let dl = params.loss_in_bad - params.loss_in_good;
        let v = var_x + 2.0 * lambda / (1.0 - lambda) * pi_g * pi_b * dl * dl;
        let sigma = (v / N as f64).sqrt();
        let rate = losses as f64 / N as f64;
        assert!((rate - mean).abs() <= 3.0 * sigma, "rate={rate} mean={mean} sigma={sigma}");
    }

    #[test]
    fn uniform_jitter_stays_in_band_and_clamps_at_zero() {
        let link = LinkSettings {
            delay_ns: 1000,
            jitter: Jitter::Uniform { half_width_ns: 5000 },
            loss: LossModel::Bernoulli { p: 0.0 },
        };
        let mut st = LinkState::from_seed(3);
        let mut saw_clamp = false;
        for _ in 0..10_000 {
            match sample_channel(&link, &mut st) {
                ChannelOutcome::DeliverAfter(x) => {
                    assert!(x <= 6000);
                    if x == 0 {
                        saw_clamp = true;
                    }
                }
                ChannelOutcome::Drop => panic!("lossless link dropped"),
            }
        }
        assert!(saw_clamp, "negative tail should clamp to zero");
    }

    #[test]
    fn exponential_jitter_mean_is_close() {
        let link = LinkSettings {
            delay_ns: 0,
            jitter: Jitter::Exponential { mean_ns: 3_000_000 },
            loss: LossModel::Bernoulli { p: 0.0 },
        };
        let mut st = LinkState::from_seed(11);
        const N: u64 = 100_000;
        let mut total = 0u64;
        for _ in 0..N {
            match sample_channel(&link, &mut st) {
                ChannelOutcome::DeliverAfter(x) => total += x,
                ChannelOutcome::Drop => unreachable!(),
            }
        }
        let mean = total as f64 / N as f64;
        // 3 sigma of the sample mean of Exp(mean 3e6): sd = mean/sqrt(N).
        let band = 3.0 * 3_000_000.0 / (N as f64).sqrt();
        assert!((mean - 3_000_000.0).abs() < band, "mean={mean}");
    }

    #[test]
    fn identical_seeds_give_identical_outcome_sequences() {
        let link = LinkSettings {
            delay_ns: 500,
            jitter: Jitter::Uniform { half_width_ns: 400 },
            loss: LossModel::Bernoulli { p: 0.3 },
        };
        let mut a = LinkState::new(42, Direction::Command);
        let mut b = LinkState::new(42, Direction::Command);
        for _ in 0..5000 {
            assert_eq!(sample_channel(&link, &mut a), sample_channel(&link, &mut b));
        }
    }
}
