use crate::error::{Error, Result};
use crate::model::{SampleRate, TimeSeries};

/// Piecewise-linear interpolation of `(ts, vs)` at sorted query times.
/// Queries outside the sample range clamp to the end values.
pub fn interp_sorted(ts: &[f64], vs: &[f64], queries: &[f64]) -> Vec<f64> {
    debug_assert_eq!(ts.len(), vs.len());
    let n = ts.len();
    let mut j = 0usize;
    queries
        .iter()
        .map(|&q| {
            if q <= ts[0] {
                return vs[0];
            }
            if q >= ts[n - 1] {
                return vs[n - 1];
            }
            while ts[j + 1] < q {
                j += 1;
            }
            let (t0, t1) = (ts[j], ts[j + 1]);
            let w = (q - t0) / (t1 - t0);
            vs[j] + w * (vs[j + 1] - vs[j])
        })
        .collect()
}

/// Uniform grid from `t0` to `t1` (inclusive up to rounding) at `rate_hz`.
pub fn uniform_grid(t0: f64, t1: f64, rate_hz: f64) -> Vec<f64> {
    let n = ((t1 - t0) * rate_hz + 1e-9).floor() as usize + 1;
    (0..n).map(|i| t0 + i as f64 / rate_hz).collect()
}

/// Linear interpolation onto a uniform grid spanning the original time range.
pub fn resample_uniform(series: &TimeSeries, rate_hz: f64) -> Result<TimeSeries> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(Error::InvalidInput(format!("resample rate must be positive, got {rate_hz}")));
    }
    if series.len() < 2 {
        return Err(Error::TooShort(format!(
            "{} has {} samples; resampling needs 2",
            series.kind,
            series.len()
        )));
    }
    let grid = uniform_grid(series.timestamps[0], *series.timestamps.last().unwrap(), rate_hz);
    let values = series
        .values
        .iter()
        .map(|ch| interp_sorted(&series.timestamps, ch, &grid))
        .collect();
    let mut out = series.with_samples(grid, values)?;
    out.rate = SampleRate::Hz(rate_hz);
    Ok(out)
}

/// Nearest-neighbour samples on an external grid, `None` where the nearest
/// sample is farther than the allowed gap.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSeries {
    pub timestamps: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn align_to_grid(series: &TimeSeries, grid: &[f64], max_gap_s: f64) -> AlignedSeries {
    let ts = &series.timestamps;
    let nearest: Vec<Option<usize>> = grid
        .iter()
        .map(|&g| {
            if ts.is_empty() {
                return None;
            }
            let k = ts.partition_point(|&t| t < g);
            let best = match (k.checked_sub(1), (k < ts.len()).then_some(k)) {
                (Some(a), Some(b)) => {
                    if g - ts[a] <= ts[b] - g {
                        a
                    } else {
                        b
                    }
                }
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => return None,
            };
            ((ts[best] - g).abs() <= max_gap_s).then_some(best)
        })
        .collect();
    let values = series
        .values
        .iter()
        .map(|ch| nearest.iter().map(|n| n.map(|i| ch[i])).collect())
        .collect();
    AlignedSeries {
        timestamps: grid.to_vec(),
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SensorKind, Unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn irregular(ts: Vec<f64>, vs: Vec<f64>) -> TimeSeries {
        TimeSeries::single(SensorKind::Eda, ts, vs, Unit::MicroSiemens, SampleRate::Irregular).unwrap()
    }

    #[test]
    fn two_points_at_four_hz() {
        let s = irregular(vec![0.0, 1.0], vec![0.0, 1.0]);
        let r = resample_uniform(&s, 4.0).unwrap();
        assert_eq!(r.timestamps, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(r.values[0], vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(r.rate, SampleRate::Hz(4.0));
    }

    #[test]
    fn own_rate_is_identity() {
        let ts: Vec<f64> = (0..200).map(|i| i as f64 / 16.0).collect();
        let vs: Vec<f64> = ts.iter().map(|t| (t * 1.3).sin()).collect();
        let r = resample_uniform(&irregular(ts.clone(), vs.clone()), 16.0).unwrap();
        assert_eq!(r.len(), ts.len());
        for (a, b) in r.values[0].iter().zip(&vs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn random_irregular_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = 0.0;
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for _ in 0..300 {
            t += rng.gen_range(0.01..0.5);
            ts.push(t);
            vs.push(rng.gen_range(-3.0..3.0));
        }
        let r = resample_uniform(&irregular(ts.clone(), vs.clone()), 7.0).unwrap();
        for (q, got) in r.timestamps.iter().zip(&r.values[0]) {
            // independent oracle: scan every segment
            let mut want = None;
            for k in 0..ts.len() - 1 {
                if ts[k] <= *q && *q <= ts[k + 1] {
                    want = Some(vs[k] + (vs[k + 1] - vs[k]) * (q - ts[k]) / (ts[k + 1] - ts[k]));
                    break;
                }
            }
            assert!((got - want.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn resample_errors() {
        let s = irregular(vec![0.0], vec![1.0]);
        assert!(resample_uniform(&s, 4.0).is_err());
        let s = irregular(vec![0.0, 1.0], vec![1.0, 2.0]);
        assert!(resample_uniform(&s, 0.0).is_err());
        assert!(resample_uniform(&s, -3.0).is_err());
    }

    #[test]
    fn align_identity_and_gap() {
        let ts = vec![0.0, 0.5, 1.0, 2.0];
        let s = irregular(ts.clone(), vec![1.0, 2.0, 3.0, 4.0]);
        let a = align_to_grid(&s, &ts, 0.1);
        assert_eq!(a.values[0], vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]);
        let a = align_to_grid(&s, &[12.0], 1.0);
        assert_eq!(a.values[0], vec![None]);
    }

    #[test]
    fn align_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ts: Vec<f64> = (0..400).map(|_| rng.gen_range(0.0..100.0)).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let vs: Vec<f64> = ts.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let grid: Vec<f64> = (0..1000).map(|i| -5.0 + i as f64 * 0.11).collect();
        let s = irregular(ts.clone(), vs.clone());
        let a = align_to_grid(&s, &grid, 0.2);
        for (g, got) in grid.iter().zip(&a.values[0]) {
            let mut best = 0;
            for k in 0..ts.len() {
                if (ts[k] - g).abs() < (ts[best] - g).abs() {
                    best = k;
                }
            }
            let want = ((ts[best] - g).abs() <= 0.2).then_some(vs[best]);
            assert_eq!(*got, want);
        }
    }
}
