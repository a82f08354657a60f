//! System-level signals and damping metrics computed from simulated traces.

#[allow(unused_imports)]
use num_traits::Float;

/// Inertia-weighted mean speed `Σ H·S·ω / Σ H·S`. `None` when no machine
/// carries inertia.
pub fn coi_frequency(speeds: &[f64], inertias: &[f64], ratings: &[f64]) -> Option<f64> {
    let (num, den) = speeds
        .iter()
        .zip(inertias)
        .zip(ratings)
        .fold((0.0, 0.0), |(n, d), ((w, h), s)| (n + h * s * w, d + h * s));
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingMetrics {
    /// Max minus min after the event.
    pub peak_to_peak: f64,
    /// Second over first same-sign peak of the deviation from the final
    /// value; below 1 means damped.
    pub peak_ratio: Option<f64>,
    /// Time from the event after which the trace stays within ±2 % of its
    /// largest deviation around the final value.
    pub settling_time: f64,
    /// Inverse spacing of the two peaks used for `peak_ratio` (Hz).
    pub modal_frequency: Option<f64>,
}

/// First sample at or after `t_event`; for a duplicated event instant this
/// is the post-event row.
pub fn post_event_start(t: &[f64], t_event: f64) -> usize {
    let mut i = t.iter().position(|&ti| ti >= t_event - 1e-9).unwrap_or(t.len());
    while i + 1 < t.len() && t[i + 1] == t[i] {
        i += 1;
    }
    i
}

pub fn damping_metrics(t: &[f64], y: &[f64], t_event: f64) -> DampingMetrics {
    let flat = DampingMetrics {
        peak_to_peak: 0.0,
        peak_ratio: None,
        settling_time: 0.0,
        modal_frequency: None,
    };
    let i0 = post_event_start(t, t_event);
    if t.len().saturating_sub(i0) < 2 {
        return flat;
    }
    let (t, y) = (&t[i0..], &y[i0..]);
    let final_value = y[y.len() - 1];
    let d: alloc::vec::Vec<f64> = y.iter().map(|v| v - final_value).collect();
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let max_dev = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_dev == 0.0 {
        return DampingMetrics { peak_to_peak: max - min, ..flat };
    }

    let band = 0.02 * max_dev;
    let settling_time = match d.iter().rposition(|v| v.abs() > band) {
        None => 0.0,
        Some(j) => t[(j + 1).min(t.len() - 1)] - t_event,
    };

    let floor = 0.05 * max_dev;
    let extrema: alloc::vec::Vec<(usize, bool)> = (1..d.len() - 1)
        .filter_map(|i| {
            let is_max = d[i] > d[i - 1] && d[i] >= d[i + 1];
            let is_min = d[i] < d[i - 1] && d[i] <= d[i + 1];
            ((is_max || is_min) && d[i].abs() >= floor).then_some((i, is_max))
        })
        .collect();
    let (peak_ratio, modal_frequency) = match extrema.first() {
        Some(&(i1, kind)) => match extrema[1..].iter().find(|(_, k)| *k == kind) {
            Some(&(i2, _)) => (Some(d[i2].abs() / d[i1].abs()), Some(1.0 / (t[i2] - t[i1]))),
            None => (None, None),
        },
        None => (None, None),
    };

    DampingMetrics {
        peak_to_peak: max - min,
        peak_ratio,
        settling_time,
        modal_frequency,
    }
}

/// Pearson correlation coefficient; `None` for constant or mismatched input.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::TAU;
    use proptest::prelude::*;

    #[test]
    fn coi_examples() {
        assert_eq!(coi_frequency(&[1.0, 1.0, 1.0], &[6.5, 6.5, 6.175], &[900.0; 3]), Some(1.0));
        let w = coi_frequency(&[0.99, 1.01], &[5.0, 5.0], &[100.0, 100.0]).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        assert_eq!(coi_frequency(&[], &[], &[]), None);
    }

    #[test]
    fn decaying_sinusoid_peak_ratio() {
        let t: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.005).collect();
        let y: Vec<f64> = t.iter().map(|&t| (-0.5 * t).exp() * (TAU * t).sin()).collect();
        let m = damping_metrics(&t, &y, 0.0);
        let r = m.peak_ratio.unwrap();
        assert!((r / (-0.5f64).exp() - 1.0).abs() < 0.02, "ratio {r}");
        assert!((m.modal_frequency.unwrap() - 1.0).abs() < 0.02);
        assert!(m.peak_to_peak > 1.0 && m.peak_to_peak < 2.0);
        assert!(m.settling_time > 5.0 && m.settling_time < 9.0, "{}", m.settling_time);
    }

    #[test]
    fn constant_channel() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let m = damping_metrics(&t, &[1.0; 100], 0.2);
        assert_eq!(m.peak_to_peak, 0.0);
        assert_eq!(m.settling_time, 0.0);
        assert_eq!(m.peak_ratio, None);
    }

    #[test]
    fn duplicate_event_row_uses_post_value() {
        let t = [0.0, 1.0, 1.0, 2.0];
        assert_eq!(post_event_start(&t, 1.0), 2);
        let m = damping_metrics(&t, &[5.0, 5.0, 0.0, 0.0], 1.0);
        assert_eq!(m.peak_to_peak, 0.0);
    }

    #[test]
    fn pearson_signs() {
        let a: Vec<f64> = (0..50).map(|k| (k as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = a.iter().map(|v| -2.0 * v + 1.0).collect();
        assert!((pearson(&a, &b).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pearson(&a, &[0.0; 50]), None);
    }

    proptest! {
        #[test]
        fn coi_is_a_weighted_mean(
            w in proptest::collection::vec((0.9f64..1.1, 0.1f64..10.0, 1.0f64..1000.0), 1..8),
        ) {
            let speeds: Vec<f64> = w.iter().map(|x| x.0).collect();
            let h: Vec<f64> = w.iter().map(|x| x.1).collect();
            let s: Vec<f64> = w.iter().map(|x| x.2).collect();
            let c = coi_frequency(&speeds, &h, &s).unwrap();
            let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(c >= lo - 1e-12 && c <= hi + 1e-12);
        }

        #[test]
        fn metrics_shift_invariant(offset in -10.0f64..10.0, a in 0.01f64..5.0) {
            let t: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
            let y: Vec<f64> = t.iter().map(|&t| a * (-0.3 * t).exp() * (TAU * 0.7 * t).cos()).collect();
            let ys: Vec<f64> = y.iter().map(|v| v + offset).collect();
            let (m1, m2) = (damping_metrics(&t, &y, 0.0), damping_metrics(&t, &ys, 0.0));
            prop_assert!((m1.peak_to_peak - m2.peak_to_peak).abs() < 1e-9 * (1.0 + offset.abs()));
            prop_assert_eq!(m1.settling_time, m2.settling_time);
        }
    }
}
