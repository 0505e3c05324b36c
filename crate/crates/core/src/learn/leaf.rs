use crate::circuit::{LeafModel, VarKind, VariableMeta};

use super::LearnParams;

/// Fits a univariate leaf: Laplace-smoothed frequencies for discrete
/// variables, an equal-width histogram over the observed range otherwise.
pub fn fit_leaf(column: &[f64], meta: &VariableMeta, params: &LearnParams) -> LeafModel {
    match meta.kind {
        VarKind::Discrete { cardinality } => {
            let mut counts = vec![0usize; cardinality];
            for &v in column {
                counts[v as usize] += 1;
            }
            let alpha = params.laplace_alpha;
            let denom = column.len() as f64 + alpha * cardinality as f64;
            let probs: Vec<f64> = counts.iter().map(|&c| (c as f64 + alpha) / denom).collect();
            LeafModel::categorical(meta.id, &probs)
        }
        VarKind::Continuous { .. } => fit_histogram(column, meta.id, params.n_bins),
    }
}

fn fit_histogram(column: &[f64], variable: usize, n_bins: usize) -> LeafModel {
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let guard = f64::EPSILON.sqrt() * lo.abs().max(1.0);
    if hi - lo <= guard {
        // Degenerate range: a single bin around the value.
        let edges = vec![lo - guard, hi + guard];
        let width = edges[1] - edges[0];
        return LeafModel::histogram(variable, edges, vec![1.0 / width]);
    }

    let bins = n_bins.max(1);
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|b| lo + width * b as f64).collect();
    edges.push(hi);
    let mut counts = vec![0usize; bins];
    for &v in column {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = column.len() as f64;
    let densities: Vec<f64> = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (n * (w[1] - w[0])))
        .collect();
    LeafModel::histogram(variable, edges, densities)
}
