use crate::circuit::{VarKind, VariableMeta};

/// G-statistic of independence between two columns divided by the row count.
///
/// Discrete columns are used as-is; continuous ones are cut into `n_bins`
/// quantile bins first. The value equals twice the empirical mutual
/// information in nats, so it is 0 for independent columns and
/// `2·ln 2` for two identical fair coins.
pub fn pairwise_dependence(
    a: &[f64],
    b: &[f64],
    meta_a: &VariableMeta,
    meta_b: &VariableMeta,
    n_bins: usize,
) -> f64 {
    assert_eq!(a.len(), b.len(), "columns must have equal length");
    let (codes_a, ka) = discretize(a, meta_a, n_bins);
    let (codes_b, kb) = discretize(b, meta_b, n_bins);
    g_per_row(&codes_a, ka, &codes_b, kb)
}

/// Category codes and their count for a column.
pub(crate) fn discretize(
    column: &[f64],
    meta: &VariableMeta,
    n_bins: usize,
) -> (Vec<usize>, usize) {
    match meta.kind {
        VarKind::Discrete { cardinality } => {
            (column.iter().map(|&v| v as usize).collect(), cardinality)
        }
        VarKind::Continuous { .. } => {
            let cuts = quantile_cuts(column, n_bins.max(1));
            let codes = column
                .iter()
                .map(|&v| cuts.partition_point(|&c| c <= v))
                .collect();
            (codes, cuts.len() + 1)
        }
    }
}

/// Interior cut points at the `i/n_bins` quantiles, deduplicated.
fn quantile_cuts(column: &[f64], n_bins: usize) -> Vec<f64> {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts: Vec<f64> = (1..n_bins)
        .map(|i| sorted[(i * n / n_bins).min(n - 1)])
        .collect();
    cuts.dedup();
    // A cut at the minimum would leave the first bin empty.
    cuts.retain(|&c| c > sorted[0]);
    cuts
}

pub(crate) fn g_per_row(a: &[usize], ka: usize, b: &[usize], kb: usize) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut joint = vec![0usize; ka * kb];
    let mut ma = vec![0usize; ka];
    let mut mb = vec![0usize; kb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * kb + j] += 1;
        ma[i] += 1;
        mb[j] += 1;
    }
    let nf = n as f64;
    let mut g = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let o = joint[i * kb + j];
            if o > 0 {
                let expected = ma[i] as f64 * mb[j] as f64 / nf;
                g += o as f64 * (o as f64 / expected).ln();
            }
        }
    }
    (2.0 * g / nf).max(0.0)
}

/// Connected components of the graph joining columns whose score exceeds
/// `threshold`. Components are listed by smallest member, members ascending.
pub fn dependence_components(scores: &[Vec<f64>], threshold: f64) -> Vec<Vec<usize>> {
    let n = scores.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if scores[i][j] > threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn binary(id: usize) -> VariableMeta {
        VariableMeta::discrete(id, format!("b{id}"), 2)
    }

    #[test]
    fn identical_columns_score_high() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..1000).map(|_| rng.random_range(0..2) as f64).collect();
        let s = pairwise_dependence(&a, &a.clone(), &binary(0), &binary(1), 8);
        assert!(s > 0.5, "{s}");
        // Fair coin: 2·ln 2 up to sampling noise.
        assert!((s - 2.0 * std::f64::consts::LN_2).abs() < 0.01);
    }

    #[test]
    fn independent_coins_score_near_zero() {
        let mut below = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..10_000).map(|_| rng.random_range(0..2) as f64).collect();
            let b: Vec<f64> = (0..10_000).map(|_| rng.random_range(0..2) as f64).collect();
            if pairwise_dependence(&a, &b, &binary(0), &binary(1), 8) < 0.01 {
                below += 1;
            }
        }
        assert!(below >= 99, "{below}");
    }

    #[test]
    fn continuous_columns_use_quantile_bins() {
        let meta = VariableMeta::continuous(0, "u", 0.0, 1.0);
        let col: Vec<f64> = (0..800).map(|i| i as f64 / 800.0).collect();
        let (codes, k) = discretize(&col, &meta, 8);
        assert_eq!(k, 8);
        let mut counts = vec![0; k];
        codes.iter().for_each(|&c| counts[c] += 1);
        assert!(counts.iter().all(|&c| c == 100), "{counts:?}");
        let constant = vec![2.5; 50];
        assert_eq!(discretize(&constant, &meta, 8).1, 1);
    }

    #[test]
    fn components_follow_threshold() {
        let scores = vec![
            vec![0.0, 0.5, 0.0, 0.0],
            vec![0.5, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.2],
            vec![0.0, 0.0, 0.2, 0.0],
        ];
        assert_eq!(
            dependence_components(&scores, 0.1),
            vec![vec![0, 1], vec![2, 3]]
        );
        assert_eq!(
            dependence_components(&scores, 0.3),
            vec![vec![0, 1], vec![2], vec![3]]
        );
        assert_eq!(dependence_components(&scores, 0.0).len(), 2);
    }
}
