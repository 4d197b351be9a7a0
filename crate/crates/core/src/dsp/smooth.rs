use crate::error::{Error, Result};
use crate::model::TimeSeries;

const TIME_EPS: f64 = 1e-9;

/// Centered moving average over time.
///
/// Each output sample at time `t` is the mean of the input samples in
/// `[t - window_s/2, t + window_s/2]`, truncated at the edges. Outputs are
/// emitted on input timestamps spaced at least `step_s` apart; `step_s <= 0`
/// keeps every input timestamp.
pub fn central_moving_average(series: &TimeSeries, window_s: f64, step_s: f64) -> Result<TimeSeries> {
    if series.is_empty() {
        return Err(Error::EmptyStream(format!("{} moving average", series.kind)));
    }
    if !(window_s > 0.0) {
        return Err(Error::InvalidInput(format!("window must be positive, got {window_s}")));
    }
    if step_s > window_s {
        return Err(Error::InvalidInput(format!(
            "step {step_s} s exceeds window {window_s} s; windows would not overlap"
        )));
    }

    let ts = &series.timestamps;
    let mut out_idx = Vec::with_capacity(ts.len());
    for (i, &t) in ts.iter().enumerate() {
        match out_idx.last() {
            Some(&last) if step_s > 0.0 && t < ts[last] + step_s - TIME_EPS => {}
            _ => out_idx.push(i),
        }
    }

    let half = window_s / 2.0;
    let bounds: Vec<(usize, usize)> = {
        let (mut lo, mut hi) = (0usize, 0usize);
        out_idx
            .iter()
            .map(|&i| {
                let t = ts[i];
                while ts[lo] < t - half - TIME_EPS {
                    lo += 1;
                }
                while hi < ts.len() && ts[hi] <= t + half + TIME_EPS {
                    hi += 1;
                }
                (lo, hi)
            })
            .collect()
    };

    let values = series
        .values
        .iter()
        .map(|ch| {
            let mut prefix = Vec::with_capacity(ch.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for v in ch {
                acc += v;
                prefix.push(acc);
            }
            bounds
                .iter()
                .map(|&(lo, hi)| match hi - lo {
                    1 => ch[lo],
                    n => (prefix[hi] - prefix[lo]) / n as f64,
                })
                .collect()
        })
        .collect();
    let timestamps = out_idx.iter().map(|&i| ts[i]).collect();
    series.with_samples(timestamps, values)
}

/// Centered running median over `2 * half + 1` samples, truncated at edges.
pub fn moving_median(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut buf = Vec::with_capacity(2 * half + 1);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            buf.clear();
            buf.extend_from_slice(&x[lo..hi]);
            buf.sort_by(f64::total_cmp);
            let m = buf.len();
            if m % 2 == 1 {
                buf[m / 2]
            } else {
                0.5 * (buf[m / 2 - 1] + buf[m / 2])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SampleRate, SensorKind, Unit};
    use proptest::prelude::*;

    fn series(values: Vec<f64>, rate: f64) -> TimeSeries {
        let ts = (0..values.len()).map(|i| i as f64 / rate).collect();
        TimeSeries::single(SensorKind::Ppg, ts, values, Unit::Arbitrary, SampleRate::Hz(rate)).unwrap()
    }

    #[test]
    fn constant_stays_constant() {
        let s = series(vec![3.25; 50], 10.0);
        let out = central_moving_average(&s, 2.0, 0.0).unwrap();
        assert!(out.values[0].iter().all(|v| (v - 3.25).abs() < 1e-15));
        assert_eq!(out.len(), 50);
    }

    #[test]
    fn impulse_matches_boxcar_convolution() {
        let mut x = vec![0.0; 21];
        x[10] = 1.0;
        let out = central_moving_average(&series(x.clone(), 1.0), 5.0, 0.0).unwrap();
        // direct convolution with a centered 5-tap boxcar
        for i in 0..21usize {
            let lo = i.saturating_sub(2);
            let hi = (i + 3).min(21);
            let want: f64 = x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
            assert!((out.values[0][i] - want).abs() < 1e-15);
        }
        for i in 8..=12 {
            assert!((out.values[0][i] - 0.2).abs() < 1e-15);
        }
        assert_eq!(out.values[0][7], 0.0);
    }

    #[test]
    fn sub_sample_window_is_identity() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let out = central_moving_average(&series(x.clone(), 4.0), 0.1, 0.0).unwrap();
        assert_eq!(out.values[0], x);
    }

    #[test]
    fn step_decimates_output() {
        let out = central_moving_average(&series(vec![1.0; 100], 10.0), 2.0, 1.0).unwrap();
        assert_eq!(out.len(), 10);
        assert!((out.timestamps[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let empty = series(vec![], 1.0);
        assert!(central_moving_average(&empty, 1.0, 0.0).is_err());
        let s = series(vec![1.0; 5], 1.0);
        assert!(central_moving_average(&s, 0.0, 0.0).is_err());
        assert!(central_moving_average(&s, 1.0, 2.0).is_err());
    }

    #[test]
    fn median() {
        assert_eq!(moving_median(&[1.0, 9.0, 2.0, 3.0, 4.0], 1), vec![5.0, 2.0, 3.0, 3.0, 3.5]);
    }

    proptest! {
        #[test]
        fn offset_commutes(xs in proptest::collection::vec(-10.0f64..10.0, 1..60),
                           c in -100.0f64..100.0, w in 0.5f64..8.0) {
            let a = central_moving_average(&series(xs.clone(), 2.0), w, 0.0).unwrap();
            let shifted: Vec<f64> = xs.iter().map(|v| v + c).collect();
            let b = central_moving_average(&series(shifted, 2.0), w, 0.0).unwrap();
            for (u, v) in a.values[0].iter().zip(&b.values[0]) {
                prop_assert!((u + c - v).abs() < 1e-9);
            }
        }
    }
}
