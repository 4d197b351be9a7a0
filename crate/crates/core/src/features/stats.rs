use crate::error::{Error, Result};

pub const STAT_NAMES: [&str; 10] = [
    "sum_values",
    "median",
    "mean",
    "length",
    "standard_deviation",
    "variance",
    "root_mean_square",
    "maximum",
    "absolute_maximum",
    "minimum",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatFeatures {
    pub sum_values: f64,
    pub median: f64,
    pub mean: f64,
    pub length: f64,
    pub standard_deviation: f64,
    pub variance: f64,
    pub root_mean_square: f64,
    pub maximum: f64,
    pub absolute_maximum: f64,
    pub minimum: f64,
}

impl StatFeatures {
    pub fn values(&self) -> [f64; 10] {
        [
            self.sum_values,
            self.median,
            self.mean,
            self.length,
            self.standard_deviation,
            self.variance,
            self.root_mean_square,
            self.maximum,
            self.absolute_maximum,
            self.minimum,
        ]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> {
        STAT_NAMES.into_iter().zip(self.values())
    }
}

/// Summary statistics of one channel; population variance.
pub fn stat_features(x: &[f64]) -> Result<StatFeatures> {
    if x.is_empty() {
        return Err(Error::EmptyStream("statistics over an empty window".into()));
    }
    let n = x.len() as f64;
    let sum: f64 = x.iter().sum();
    let mean = sum / n;
    let variance = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let (minimum, maximum) = (sorted[0], sorted[m - 1]);
    Ok(StatFeatures {
        sum_values: sum,
        median,
        mean,
        length: n,
        standard_deviation: variance.sqrt(),
        variance,
        root_mean_square: rms,
        maximum,
        absolute_maximum: maximum.abs().max(minimum.abs()),
        minimum,
    })
}

/// Per-sample Euclidean norm of three axes.
pub fn magnitude(x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .zip(z)
        .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        let s = stat_features(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.sum_values, s.mean, s.median, s.length), (6.0, 2.0, 2.0, 3.0));
        assert_eq!((s.maximum, s.minimum, s.absolute_maximum), (3.0, 1.0, 3.0));

        let s = stat_features(&[3.0, -4.0]).unwrap();
        assert!((s.root_mean_square - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!((s.absolute_maximum, s.maximum), (4.0, 3.0));

        let s = stat_features(&[-2.5; 7]).unwrap();
        assert_eq!((s.standard_deviation, s.variance, s.root_mean_square), (0.0, 0.0, 2.5));
    }

    #[test]
    fn empty_is_error() {
        assert!(stat_features(&[]).is_err());
    }

    #[test]
    fn magnitude_of_axes() {
        assert_eq!(magnitude(&[3.0, 0.0], &[4.0, 0.0], &[0.0, -2.0]), vec![5.0, 2.0]);
    }

    proptest! {
        #[test]
        fn ordering_invariants(x in proptest::collection::vec(-1e3f64..1e3, 1..200)) {
            let s = stat_features(&x).unwrap();
            prop_assert!((s.variance - s.standard_deviation.powi(2)).abs() <= 1e-9 * s.variance.max(1.0));
            prop_assert!(s.absolute_maximum >= s.maximum.abs());
            prop_assert!(s.maximum >= s.minimum);
            prop_assert!(s.minimum <= s.median && s.median <= s.maximum);
        }
    }
}
