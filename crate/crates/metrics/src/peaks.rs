//! Motion-loop counting by peak detection.
//!
//! A sample counts as a peak when it is a strict local maximum within the
//! separation window (ties resolve to the earliest sample) and its value
//! exceeds min + threshold_fraction * (max - min) of the whole series.

/// Relative threshold used by the experiment pipelines.
pub const DEFAULT_PEAK_THRESHOLD_FRACTION: f64 = 0.5;

/// Count motion loops in a uniformly sampled series.
///
/// `dt_s` is the sample spacing; `min_separation_s` the half-window within
/// which a peak must dominate (callers use half the loop period).
pub fn count_motion_loops(
    series: &[f64],
    dt_s: f64,
    threshold_fraction: f64,
    min_separation_s: f64,
) -> usize {
    if series.is_empty() {
        return 0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in series {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        // Constant (or single-sample) series has no peaks above threshold.
        return 0;
    }
    let threshold = lo + threshold_fraction * (hi - lo);
    let window = (min_separation_s / dt_s).round().max(1.0) as usize;

    let mut count = 0;
    'outer: for i in 0..series.len() {
        let v = series[i];
        if v <= threshold {
            continue;
        }
        let start = i.saturating_sub(window);
        let end = (i + window).min(series.len() - 1);
        for j in start..=end {
            if j == i {
                continue;
            }
            // Earliest sample of a plateau wins the tie.
            if series[j] > v || (series[j] == v && j < i) {
                continue 'outer;
            }
        }
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(periods: usize, samples_per_period: usize, amplitude: f64) -> Vec<f64> {
        let n = periods * samples_per_period;
        (0..n)
            .map(|k| {
                amplitude
                    * (2.0 * std::f64::consts::PI * k as f64 / samples_per_period as f64).sin()
            })
            .collect()
    }

    #[test]
    fn full_periods_count_once_each() {
        let series = sine(10, 504, 0.3);
        let n = count_motion_loops(&series, 1.0, DEFAULT_PEAK_THRESHOLD_FRACTION, 252.0);
        assert_eq!(n, 10);
    }

    #[test]
    fn constant_series_has_no_peaks() {
        let series = vec![2.5; 1000];
        assert_eq!(count_motion_loops(&series, 1.0, 0.5, 10.0), 0);
        assert_eq!(count_motion_loops(&[], 1.0, 0.5, 10.0), 0);
    }

    // Scale invariance of the relative threshold.
    #[test]
    fn count_is_amplitude_and_period_invariant() {
        for k in [1usize, 2, 3, 7, 25, 100] {
            for amplitude in [1e-6, 0.3, 1.0, 500.0] {
                let series = sine(k, 100, amplitude);
                let n = count_motion_loops(&series, 0.01, 0.5, 0.5);
                assert_eq!(n, k, "k={k} amplitude={amplitude}");
            }
        }
    }

    #[test]
    fn plateau_counts_once_at_earliest_sample() {
        // Plateau of three equal samples above threshold.
        let series = vec![0.0, 0.2, 1.0, 1.0, 1.0, 0.2, 0.0];
        assert_eq!(count_motion_loops(&series, 1.0, 0.5, 3.0), 1);
    }

    #[test]
    fn sub_threshold_peaks_are_ignored() {
        // Second bump stays below min + 0.5*(max-min) = 0.5.
        let series = vec![0.0, 1.0, 0.0, 0.4, 0.0, 1.0, 0.0];
        assert_eq!(count_motion_loops(&series, 1.0, 0.5, 1.0), 2);
    }
}
