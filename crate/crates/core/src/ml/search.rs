use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbdt::{gbdt_fit, GbdtParams};
use crate::error::{Error, Result};

/// Discrete boosting grid; each axis is sampled independently of the others
/// through a flat index over their product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub max_depth: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub n_trees: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            max_depth: (3..=8).collect(),
            learning_rate: vec![0.03, 0.05, 0.1, 0.2],
            n_trees: vec![100, 200, 400],
            min_samples_leaf: vec![1, 5, 20],
        }
    }
}

impl SearchSpace {
    pub fn single(p: &GbdtParams) -> Self {
        SearchSpace {
            max_depth: vec![p.max_depth],
            learning_rate: vec![p.learning_rate],
            n_trees: vec![p.n_trees],
            min_samples_leaf: vec![p.min_samples_leaf],
        }
    }

    pub fn size(&self) -> usize {
        self.max_depth.len() * self.learning_rate.len() * self.n_trees.len() * self.min_samples_leaf.len()
    }

    /// Mixed-radix decoding of a flat grid index.
    pub fn point(&self, mut i: usize, seed: u64) -> GbdtParams {
        let mut take = |len: usize| {
            let v = i % len;
            i /= len;
            v
        };
        let d = take(self.max_depth.len());
        let l = take(self.learning_rate.len());
        let t = take(self.n_trees.len());
        let m = take(self.min_samples_leaf.len());
        GbdtParams {
            n_trees: self.n_trees[t],
            max_depth: self.max_depth[d],
            learning_rate: self.learning_rate[l],
            min_samples_leaf: self.min_samples_leaf[m],
            subsample: 1.0,
            seed,
        }
    }
}

/// One train/validation partition, already in model input space.
#[derive(Debug, Clone)]
pub struct InnerSplit {
    pub x_train: DMatrix<f64>,
    pub y_train: Vec<f64>,
    pub x_val: DMatrix<f64>,
    pub y_val: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: GbdtParams,
    pub best_score: f64,
    /// Every sampled candidate with its mean validation MAE, in sample order.
    pub trials: Vec<(GbdtParams, f64)>,
}

fn mae(p: &[f64], y: &[f64]) -> f64 {
    p.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64
}

/// Seeded random search without replacement over the grid. Candidates are
/// scored by mean validation MAE across `splits`; the lowest wins and ties go
/// to the earliest sampled. Candidates that differ only in tree count share
/// one fit through staged predictions.
pub fn random_search(space: &SearchSpace, splits: &[InnerSplit], budget: usize, seed: u64) -> Result<SearchResult> {
    if space.size() == 0 {
        return Err(Error::InvalidInput("empty search space".into()));
    }
    if budget == 0 {
        return Err(Error::InvalidInput("search budget must be >= 1".into()));
    }
    if splits.is_empty() {
        return Err(Error::Insufficient("random search needs at least one validation split".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, space.size(), budget.min(space.size())).into_vec();
    let candidates: Vec<GbdtParams> = picks.iter().map(|&i| space.point(i, seed)).collect();

    // (depth, lr bits, leaf) -> candidate indices
    let mut groups: BTreeMap<(usize, u64, usize), Vec<usize>> = BTreeMap::new();
    for (ci, c) in candidates.iter().enumerate() {
        groups
            .entry((c.max_depth, c.learning_rate.to_bits(), c.min_samples_leaf))
            .or_default()
            .push(ci);
    }
    let jobs: Vec<(&Vec<usize>, &InnerSplit)> = groups
        .values()
        .flat_map(|members| splits.iter().map(move |s| (members, s)))
        .collect();
    let scored: Vec<Vec<(usize, f64)>> = jobs
        .par_iter()
        .map(|(members, split)| {
            let stages: Vec<usize> = members.iter().map(|&ci| candidates[ci].n_trees).collect();
            let most = *stages.iter().max().unwrap();
            let params = GbdtParams {
                n_trees: most,
                ..candidates[members[0]]
            };
            match gbdt_fit(&split.x_train, &split.y_train, &params) {
                Ok(model) => model
                    .staged_predict(&split.x_val, &stages)
                    .iter()
                    .zip(members.iter())
                    .map(|(p, &ci)| (ci, mae(p, &split.y_val)))
                    .collect(),
                Err(_) => members.iter().map(|&ci| (ci, f64::INFINITY)).collect(),
            }
        })
        .collect();

    let mut totals = vec![0.0; candidates.len()];
    for job in &scored {
        for &(ci, s) in job {
            totals[ci] += s;
        }
    }
    let trials: Vec<(GbdtParams, f64)> = candidates
        .iter()
        .zip(&totals)
        .map(|(c, t)| (*c, t / splits.len() as f64))
        .collect();
    let mut best = 0;
    for (i, (_, s)) in trials.iter().enumerate() {
        if *s < trials[best].1 {
            best = i;
        }
    }
    if !trials[best].1.is_finite() {
        return Err(Error::Model("no candidate could be fitted on the inner splits".into()));
    }
    Ok(SearchResult {
        best: trials[best].0,
        best_score: trials[best].1,
        trials,
    })
}
