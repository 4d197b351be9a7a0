use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns with a standard deviation below this are treated as constant.
const CONSTANT_SD: f64 = 1e-12;

/// Z-score standardization followed by a truncated principal-axis rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Per input column.
    pub means: Vec<f64>,
    /// Per input column, population sd; constant columns keep 0.
    pub sds: Vec<f64>,
    /// Input columns that entered the decomposition.
    pub kept_columns: Vec<usize>,
    /// `k` unit-norm rows over the kept columns.
    pub components: Vec<Vec<f64>>,
    /// Variance share of every principal axis, descending.
    pub explained_variance_ratio: Vec<f64>,
    pub k: usize,
}

impl PcaModel {
    pub fn n_inputs(&self) -> usize {
        self.means.len()
    }

    pub fn dropped_columns(&self) -> Vec<usize> {
        (0..self.n_inputs()).filter(|c| !self.kept_columns.contains(c)).collect()
    }

    pub fn cumulative_explained(&self) -> f64 {
        self.explained_variance_ratio[..self.k].iter().sum()
    }

    fn standardize(&self, row: &[f64]) -> Vec<f64> {
        self.kept_columns
            .iter()
            .map(|&c| (row[c] - self.means[c]) / self.sds[c])
            .collect()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        let z = self.standardize(row);
        self.components
            .iter()
            .map(|comp| comp.iter().zip(&z).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), self.k);
        let mut row = vec![0.0; x.ncols()];
        for i in 0..x.nrows() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = x[(i, j)];
            }
            for (j, v) in self.transform_row(&row).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Back-projection to input units; constant columns return their mean.
    pub fn inverse_transform_row(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.means.clone();
        for (pos, &c) in self.kept_columns.iter().enumerate() {
            let z: f64 = self.components.iter().zip(scores).map(|(comp, s)| comp[pos] * s).sum();
            out[c] = self.means[c] + z * self.sds[c];
        }
        out
    }
}

/// Fits standardization and PCA, keeping the fewest components whose
/// cumulative explained variance reaches `variance_target`.
pub fn pca_fit(x: &DMatrix<f64>, variance_target: f64) -> Result<PcaModel> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::Insufficient(format!("PCA needs at least 2 rows, got {n}")));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::InvalidInput(format!("variance target {variance_target} outside (0, 1]")));
    }
    let mut means = vec![0.0; d];
    let mut sds = vec![0.0; d];
    for c in 0..d {
        let col = x.column(c);
        let m = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        means[c] = m;
        sds[c] = var.sqrt();
    }
    let kept_columns: Vec<usize> = (0..d).filter(|&c| sds[c] > CONSTANT_SD * means[c].abs().max(1.0)).collect();
    for c in 0..d {
        if !kept_columns.contains(&c) {
            sds[c] = 0.0;
        }
    }
    if kept_columns.is_empty() {
        return Ok(PcaModel {
            means,
            sds,
            kept_columns,
            components: Vec::new(),
            explained_variance_ratio: Vec::new(),
            k: 0,
        });
    }

    let z = DMatrix::from_fn(n, kept_columns.len(), |i, j| {
        let c = kept_columns[j];
        (x[(i, c)] - means[c]) / sds[c]
    });
    let svd = z.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let energy: Vec<f64> = order.iter().map(|&i| svd.singular_values[i].powi(2)).collect();
    let total: f64 = energy.iter().sum();
    let explained_variance_ratio: Vec<f64> = energy.iter().map(|e| e / total).collect();
    let mut k = 0;
    let mut cum = 0.0;
    while k < explained_variance_ratio.len() {
        cum += explained_variance_ratio[k];
        k += 1;
        if cum >= variance_target - 1e-12 {
            break;
        }
    }
    let components = order[..k]
        .iter()
        .map(|&i| {
            let mut row: Vec<f64> = v_t.row(i).iter().copied().collect();
            // sign convention: largest-magnitude loading positive
            let pivot = row.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            if pivot < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            row
        })
        .collect();
    Ok(PcaModel {
        means,
        sds,
        kept_columns,
        components,
        explained_variance_ratio,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian(seed: u64, n: usize, d: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        DMatrix::from_fn(n, d, |_, _| normal.sample(&mut rng))
    }

    fn rank2(seed: u64) -> DMatrix<f64> {
        let latent = gaussian(seed, 200, 2);
        let mix = DMatrix::from_row_slice(2, 6, &[1.0, 2.0, -1.0, 0.5, 3.0, 0.0, 0.0, 1.0, 1.0, -2.0, 0.5, 4.0]);
        latent * mix
    }

    pub(crate) fn orthonormality_error(m: &PcaModel) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    #[test]
    fn low_rank_data() {
        let x = rank2(1);
        let m = pca_fit(&x, 0.99).unwrap();
        assert_eq!(m.k, 2);
        assert!((m.cumulative_explained() - 1.0).abs() < 1e-12);
        assert!(orthonormality_error(&m) < 1e-9);
        let scores = m.transform(&x);
        for i in 0..x.nrows() {
            let back = m.inverse_transform_row(&scores.row(i).iter().copied().collect::<Vec<_>>());
            for j in 0..x.ncols() {
                assert!((back[j] - x[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_dimensional_input_is_standardized() {
        let x = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 6.0]);
        let m = pca_fit(&x, 0.99).unwrap();
        assert_eq!(m.k, 1);
        let sd = (((1.0f64 - 3.0).powi(2) + 1.0 + 0.0 + 9.0) / 4.0).sqrt();
        let z = m.transform(&x);
        for i in 0..4 {
            assert!((z[(i, 0)] - (x[(i, 0)] - 3.0) / sd).abs() < 1e-12);
        }
    }

    #[test]
    fn isotropic_keeps_everything() {
        let m = pca_fit(&gaussian(5, 1000, 5), 0.99).unwrap();
        assert_eq!(m.k, 5);
        for r in &m.explained_variance_ratio {
            assert!((r - 0.2).abs() < 0.03);
        }
    }

    #[test]
    fn constant_columns_dropped() {
        let mut x = gaussian(2, 50, 3);
        x.column_mut(1).fill(4.0);
        let m = pca_fit(&x, 0.99).unwrap();
        assert_eq!(m.kept_columns, vec![0, 2]);
        assert_eq!(m.dropped_columns(), vec![1]);
        let back = m.inverse_transform_row(&vec![0.0; m.k]);
        assert_eq!(back[1], 4.0);
    }

    #[test]
    fn too_few_rows() {
        assert!(pca_fit(&gaussian(1, 1, 3), 0.99).is_err());
    }

    #[test]
    fn wide_data_is_allowed() {
        let m = pca_fit(&gaussian(3, 5, 20), 0.99).unwrap();
        assert!(m.k <= 5);
        assert!(orthonormality_error(&m) < 1e-9);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn reconstruction_within_discarded_variance(seed in 0u64..1000, target in 0.5f64..1.0) {
            let x = gaussian(seed, 40, 6) + rank2(seed).rows(0, 40).into_owned();
            let m = pca_fit(&x, target).unwrap();
            proptest::prop_assert!(m.cumulative_explained() >= target - 1e-12);
            if m.k > 1 {
                let prev: f64 = m.explained_variance_ratio[..m.k - 1].iter().sum();
                proptest::prop_assert!(prev < target);
            }
            // standardized space: total variance equals the kept column count
            let d = m.kept_columns.len() as f64;
            let scores = m.transform(&x);
            let mut sse = 0.0;
            for i in 0..x.nrows() {
                let row: Vec<f64> = x.row(i).iter().copied().collect();
                let back = m.inverse_transform_row(&scores.row(i).iter().copied().collect::<Vec<_>>());
                for j in 0..x.ncols() {
                    let e = (back[j] - row[j]) / m.sds[j];
                    sse += e * e;
                }
            }
            let mse = sse / x.nrows() as f64;
            proptest::prop_assert!(mse <= (1.0 - m.cumulative_explained()) * d + 1e-9);
        }
    }
}
