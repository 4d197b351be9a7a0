//! Squared-error gradient boosting over depth-limited regression trees.
//!
//! Split candidates per feature are midpoints between consecutive distinct
//! training values, thinned by rank to at most [`MAX_CANDIDATES`]. Rows are
//! pre-binned against those thresholds so node statistics are histograms;
//! the larger child's histogram is the parent's minus the smaller child's.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_CANDIDATES: usize = 256;
const MIN_GAIN: f64 = 1e-12;
/// Nodes with fewer rows search splits by sorting instead of histograms.
const SORTED_SPLIT_ROWS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Row fraction drawn without replacement for each tree.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_trees: 200,
            max_depth: 6,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        /// Already scaled by the learning rate.
        value: f64,
    },
    Split {
        feature: usize,
        /// Rows with `x <= threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, feature: impl Fn(usize) -> f64) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature: f,
                    threshold,
                    left,
                    right,
                } => i = if feature(*f) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub params: GbdtParams,
    /// Training-target mean.
    pub base_prediction: f64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl GbdtModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base_prediction + self.trees.iter().map(|t| t.predict(|f| row[f])).sum::<f64>()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.staged_predict(x, &[self.trees.len()]).pop().unwrap()
    }

    /// Predictions using only the first `s` trees, for every `s` in `stages`.
    pub fn staged_predict(&self, x: &DMatrix<f64>, stages: &[usize]) -> Vec<Vec<f64>> {
        let mut acc = vec![self.base_prediction; x.nrows()];
        let mut out = Vec::with_capacity(stages.len());
        let mut order: Vec<usize> = (0..stages.len()).collect();
        order.sort_by_key(|&i| stages[i]);
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; stages.len()];
        let mut done = 0;
        for &si in &order {
            let upto = stages[si].min(self.trees.len());
            for tree in &self.trees[done..upto] {
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += tree.predict(|f| x[(i, f)]);
                }
            }
            done = done.max(upto);
            slots[si] = Some(acc.clone());
        }
        out.extend(slots.into_iter().map(Option::unwrap));
        out
    }
}

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

fn candidate_thresholds(col: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut u: Vec<f64> = col.collect();
    u.sort_by(f64::total_cmp);
    u.dedup();
    if u.len() < 2 {
        return Vec::new();
    }
    let gaps = u.len() - 1;
    let mid = |g: usize| u[g] + (u[g + 1] - u[g]) / 2.0;
    if gaps <= MAX_CANDIDATES {
        (0..gaps).map(mid).collect()
    } else {
        (1..=MAX_CANDIDATES).map(|q| mid(q * gaps / (MAX_CANDIDATES + 1))).collect()
    }
}

struct Binned {
    /// Column-major bin index per row.
    cols: Vec<Vec<u16>>,
    thresholds: Vec<Vec<f64>>,
    /// Start of each feature's block in a flat histogram.
    offsets: Vec<usize>,
    hist_len: usize,
}

impl Binned {
    fn new(x: &DMatrix<f64>) -> Self {
        let mut cols = Vec::with_capacity(x.ncols());
        let mut thresholds = Vec::with_capacity(x.ncols());
        let mut offsets = Vec::with_capacity(x.ncols());
        let mut hist_len = 0;
        for j in 0..x.ncols() {
            let col = x.column(j);
            let thr = candidate_thresholds(col.iter().copied());
            cols.push(
                col.iter()
                    .map(|v| thr.partition_point(|t| t < v) as u16)
                    .collect(),
            );
            offsets.push(hist_len);
            hist_len += thr.len() + 1;
            thresholds.push(thr);
        }
        Binned {
            cols,
            thresholds,
            offsets,
            hist_len,
        }
    }
}

/// Per-bin gradient sum and row count.
#[derive(Clone, Copy, Default)]
struct Bin {
    sum: f64,
    cnt: u32,
}

struct Hist(Vec<Bin>);

impl Hist {
    fn build(b: &Binned, rows: &[u32], grad: &[f64]) -> Hist {
        let mut h = vec![Bin::default(); b.hist_len];
        for (col, &off) in b.cols.iter().zip(&b.offsets) {
            let h = &mut h[off..];
            for &r in rows {
                let bin = &mut h[col[r as usize] as usize];
                bin.sum += grad[r as usize];
                bin.cnt += 1;
            }
        }
        Hist(h)
    }

    fn minus(mut self, other: &Hist) -> Hist {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            a.sum -= b.sum;
            a.cnt -= b.cnt;
        }
        self
    }
}

struct Grower<'a> {
    binned: &'a Binned,
    grad: &'a [f64],
    params: &'a GbdtParams,
    nodes: Vec<Node>,
    scratch: Vec<u32>,
    pairs: Vec<(u16, f64)>,
    /// `inv[k] = 1/k`.
    inv: &'a [f64],
}

impl Grower<'_> {
    /// Child score `sl²/nl + sr²/nr`; the split gain is this minus the
    /// parent's `sum²/n`.
    fn score(&self, sl: f64, nl: u32, sum: f64, n: u32) -> f64 {
        let sr = sum - sl;
        sl * sl * self.inv[nl as usize] + sr * sr * self.inv[(n - nl) as usize]
    }

    /// Best `(feature, bin)` by variance reduction; ties keep the first found.
    fn best_split(&self, h: &Hist, sum: f64, n: u32) -> Option<(usize, usize)> {
        let msl = self.params.min_samples_leaf.max(1) as u32;
        let mut best: Option<(usize, usize)> = None;
        let mut best_gain = sum * sum * self.inv[n as usize] + MIN_GAIN;
        for (f, thr) in self.binned.thresholds.iter().enumerate() {
            let off = self.binned.offsets[f];
            let (mut sl, mut nl) = (0.0, 0u32);
            for j in 0..thr.len() {
                let bin = h.0[off + j];
                if bin.cnt == 0 {
                    // same partition as the previous bin
                    continue;
                }
                sl += bin.sum;
                nl += bin.cnt;
                if nl < msl {
                    continue;
                }
                if n - nl < msl {
                    break;
                }
                let gain = self.score(sl, nl, sum, n);
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((f, j));
                }
            }
        }
        best
    }

    /// Same search as [`Self::best_split`] by sorting the node's rows per
    /// feature; cheaper than a full histogram for small nodes.
    fn best_split_sorted(&mut self, rows: &[u32], sum: f64, n: u32) -> Option<(usize, usize)> {
        let msl = self.params.min_samples_leaf.max(1) as u32;
        let mut best: Option<(usize, usize)> = None;
        let mut best_gain = sum * sum * self.inv[n as usize] + MIN_GAIN;
        let mut pairs = std::mem::take(&mut self.pairs);
        for (f, thr) in self.binned.thresholds.iter().enumerate() {
            let col = &self.binned.cols[f];
            pairs.clear();
            pairs.extend(rows.iter().map(|&r| (col[r as usize], self.grad[r as usize])));
            pairs.sort_by_key(|p| p.0);
            let (mut sl, mut nl) = (0.0, 0u32);
            let mut i = 0;
            while i < pairs.len() {
                let bin = pairs[i].0;
                while i < pairs.len() && pairs[i].0 == bin {
                    sl += pairs[i].1;
                    nl += 1;
                    i += 1;
                }
                if bin as usize >= thr.len() || n - nl < msl {
                    break;
                }
                if nl < msl {
                    continue;
                }
                let gain = self.score(sl, nl, sum, n);
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((f, bin as usize));
                }
            }
        }
        self.pairs = pairs;
        best
    }

    fn grow(&mut self, rows: &mut [u32], hist: Option<Hist>, sum: f64, depth: usize) -> usize {
        let idx = self.nodes.len();
        let n = rows.len() as u32;
        self.nodes.push(Node::Leaf {
            value: self.params.learning_rate * sum / n as f64,
        });
        if depth >= self.params.max_depth || (n as usize) < 2 * self.params.min_samples_leaf.max(1) {
            return idx;
        }
        let small = rows.len() < SORTED_SPLIT_ROWS;
        let hist = if small {
            None
        } else {
            Some(hist.unwrap_or_else(|| Hist::build(self.binned, rows, self.grad)))
        };
        let split = match &hist {
            Some(h) => self.best_split(h, sum, n),
            None => self.best_split_sorted(rows, sum, n),
        };
        let Some((f, j)) = split else {
            return idx;
        };
        let col = &self.binned.cols[f];
        self.scratch.clear();
        self.scratch.extend(rows.iter().copied().filter(|&r| col[r as usize] as usize <= j));
        let nl = self.scratch.len();
        self.scratch.extend(rows.iter().copied().filter(|&r| col[r as usize] as usize > j));
        rows.copy_from_slice(&self.scratch);
        let (left_rows, right_rows) = rows.split_at_mut(nl);

        let sum_of = |rs: &[u32]| rs.iter().map(|&r| self.grad[r as usize]).sum::<f64>();
        let (sl, sr) = (sum_of(left_rows), sum_of(right_rows));
        let needs = |rs: &[u32]| rs.len() >= SORTED_SPLIT_ROWS;
        let (hl, hr) = match hist {
            Some(parent) if needs(left_rows) || needs(right_rows) => {
                // build the smaller child, derive the larger by subtraction
                if left_rows.len() <= right_rows.len() {
                    let hl = Hist::build(self.binned, left_rows, self.grad);
                    let hr = parent.minus(&hl);
                    (needs(left_rows).then_some(hl), Some(hr))
                } else {
                    let hr = Hist::build(self.binned, right_rows, self.grad);
                    let hl = parent.minus(&hr);
                    (Some(hl), needs(right_rows).then_some(hr))
                }
            }
            _ => (None, None),
        };
        let left = self.grow(left_rows, hl, sl, depth + 1);
        let right = self.grow(right_rows, hr, sr, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: f,
            threshold: self.binned.thresholds[f][j],
            left,
            right,
        };
        idx
    }
}

fn validate(x: &DMatrix<f64>, y: &[f64], p: &GbdtParams) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::InvalidInput(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Model("non-finite value in boosting input".into()));
    }
    if y.len() < 2 * p.min_samples_leaf.max(1) {
        return Err(Error::Insufficient(format!(
            "{} rows; need at least {} for min_samples_leaf {}",
            y.len(),
            2 * p.min_samples_leaf.max(1),
            p.min_samples_leaf
        )));
    }
    if !(p.learning_rate > 0.0) || !(p.subsample > 0.0 && p.subsample <= 1.0) || p.max_depth == 0 {
        return Err(Error::InvalidInput(format!("invalid boosting parameters {p:?}")));
    }
    Ok(())
}

pub fn gbdt_fit(x: &DMatrix<f64>, y: &[f64], params: &GbdtParams) -> Result<GbdtModel> {
    validate(x, y, params)?;
    let n = y.len();
    let binned = Binned::new(x);
    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut grad = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    let n_sample = ((n as f64 * params.subsample).round() as usize).clamp(1, n);
    let inv: Vec<f64> = (0..=n).map(|k| 1.0 / k as f64).collect();

    for t in 0..params.n_trees {
        for i in 0..n {
            grad[i] = y[i] - pred[i];
        }
        let mut rows: Vec<u32> = if n_sample == n {
            (0..n as u32).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ (t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut idx: Vec<u32> = sample(&mut rng, n, n_sample).into_iter().map(|i| i as u32).collect();
            idx.sort_unstable();
            idx
        };
        let sum: f64 = rows.iter().map(|&r| grad[r as usize]).sum();
        let mut grower = Grower {
            binned: &binned,
            grad: &grad,
            params,
            nodes: Vec::new(),
            scratch: Vec::with_capacity(rows.len()),
            pairs: Vec::new(),
            inv: &inv,
        };
        grower.grow(&mut rows, None, sum, 0);
        let tree = Tree { nodes: grower.nodes };
        for (i, p) in pred.iter_mut().enumerate() {
            *p += tree.predict(|f| x[(i, f)]);
        }
        trees.push(tree);
    }
    Ok(GbdtModel {
        params: *params,
        base_prediction: base,
        n_features: x.ncols(),
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_x(seed: u64, n: usize, d: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.gen_range(-2.0..2.0))
    }

    fn sd(y: &[f64]) -> f64 {
        let m = y.iter().sum::<f64>() / y.len() as f64;
        (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
    }

    #[test]
    fn fits_step_function() {
        let x = random_x(1, 500, 3);
        let y: Vec<f64> = (0..500).map(|i| if x[(i, 1)] > 0.3 { 5.0 } else { 1.0 }).collect();
        let m = gbdt_fit(&x, &y, &GbdtParams::default()).unwrap();
        let p = m.predict(&x);
        let mae = p.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum::<f64>() / 500.0;
        assert!(mae < 0.05 * sd(&y), "{mae}");
    }

    #[test]
    fn constant_target_is_reproduced() {
        let x = random_x(2, 50, 2);
        let m = gbdt_fit(&x, &[2.5; 50], &GbdtParams::default()).unwrap();
        assert!(m.predict(&x).iter().all(|p| *p == 2.5));
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn deterministic_and_depth_limited() {
        let x = random_x(3, 300, 4);
        let y: Vec<f64> = (0..300).map(|i| x[(i, 0)].sin() + x[(i, 2)] * x[(i, 3)]).collect();
        let params = GbdtParams {
            n_trees: 30,
            max_depth: 3,
            subsample: 0.7,
            seed: 9,
            ..Default::default()
        };
        let a = gbdt_fit(&x, &y, &params).unwrap();
        let b = gbdt_fit(&x, &y, &params).unwrap();
        assert_eq!(a, b);
        assert!(a.trees.iter().all(|t| t.depth() <= 3));
        let pa: Vec<u64> = a.predict(&x).iter().map(|v| v.to_bits()).collect();
        let pb: Vec<u64> = b.predict(&x).iter().map(|v| v.to_bits()).collect();
        assert_eq!(pa, pb);
    }

    #[test]
    fn staged_prediction_prefixes() {
        let x = random_x(4, 120, 2);
        let y: Vec<f64> = (0..120).map(|i| x[(i, 0)] * 2.0).collect();
        let params = GbdtParams {
            n_trees: 40,
            ..Default::default()
        };
        let full = gbdt_fit(&x, &y, &params).unwrap();
        let staged = full.staged_predict(&x, &[40, 10]);
        let short = gbdt_fit(&x, &y, &GbdtParams { n_trees: 10, ..params }).unwrap();
        assert_eq!(staged[1], short.predict(&x));
        assert_eq!(staged[0], full.predict(&x));
        assert_eq!(full.predict_row(&[0.5, 0.1]), full.predict(&DMatrix::from_row_slice(1, 2, &[0.5, 0.1]))[0]);
    }

    #[test]
    fn candidate_cap() {
        let thr = candidate_thresholds((0..10_000).map(f64::from));
        assert_eq!(thr.len(), MAX_CANDIDATES);
        assert!(thr.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(candidate_thresholds([1.0, 3.0, 3.0, 2.0].into_iter()), vec![1.5, 2.5]);
        assert!(candidate_thresholds([4.0; 3].into_iter()).is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        let x = random_x(5, 8, 1);
        assert!(gbdt_fit(&x, &[1.0; 8], &GbdtParams::default()).is_err());
        let mut x = random_x(5, 20, 1);
        x[(3, 0)] = f64::NAN;
        assert!(gbdt_fit(&x, &[1.0; 20], &GbdtParams::default()).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_transform_invariance(seed in 0u64..10_000, f in 0usize..3) {
            let x = random_x(seed, 80, 3);
            let y: Vec<f64> = (0..80).map(|i| x[(i, 0)] + x[(i, 1)].powi(2) - x[(i, 2)]).collect();
            let params = GbdtParams { n_trees: 15, max_depth: 3, min_samples_leaf: 3, ..Default::default() };
            let a = gbdt_fit(&x, &y, &params).unwrap();
            let mut xt = x.clone();
            for i in 0..80 {
                xt[(i, f)] = x[(i, f)].powi(3) * 7.0 + 2.0;
            }
            let b = gbdt_fit(&xt, &y, &params).unwrap();
            proptest::prop_assert_eq!(a.predict(&x), b.predict(&xt));
        }
    }
}
