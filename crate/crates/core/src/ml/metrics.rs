use crate::error::{Error, Result};
use crate::model::Metrics;

/// MAE, RMSE and R² of predictions against targets. R² is missing when the
/// targets are constant.
pub fn compute_metrics(predictions: &[f64], targets: &[f64]) -> Result<Metrics> {
    if predictions.len() != targets.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::InvalidInput("metrics need at least one target".into()));
    }
    let n = targets.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (p, y) in predictions.iter().zip(targets) {
        let e = p - y;
        abs += e.abs();
        sq += e * e;
    }
    let mean_y = targets.iter().sum::<f64>() / n;
    let ss_tot: f64 = targets.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    Ok(Metrics {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        r2: (ss_tot > 0.0).then(|| 1.0 - sq / ss_tot),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let y = [1.0, 2.0, 4.0];
        let m = compute_metrics(&y, &y).unwrap();
        assert_eq!((m.mae, m.rmse, m.r2), (0.0, 0.0, Some(1.0)));
        let p: Vec<f64> = y.iter().map(|v| v + 0.5).collect();
        let m = compute_metrics(&p, &y).unwrap();
        assert!((m.mae - 0.5).abs() < 1e-15 && (m.rmse - 0.5).abs() < 1e-15);
        let mean = [7.0 / 3.0; 3];
        assert!(compute_metrics(&mean, &y).unwrap().r2.unwrap().abs() < 1e-15);
        assert_eq!(compute_metrics(&[1.0, 2.0], &[3.0, 3.0]).unwrap().r2, None);
        assert!(compute_metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(pairs in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..100)) {
            let (p, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = compute_metrics(&p, &y).unwrap();
            prop_assert!(m.rmse >= m.mae - 1e-12);
        }
    }
}
