//! LearnSPN-style structure learning.
//!
//! The recursion alternates two moves on a (rows × columns) slice of the
//! data: split the columns into groups that look mutually independent
//! (product node), or cluster the rows (sum node). Slices that are small
//! enough are fully factorized into univariate leaves.

mod dependence;
mod kmeans;
mod leaf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dependence::{dependence_components, pairwise_dependence};
pub use kmeans::kmeans;
pub use leaf::fit_leaf;

use crate::circuit::{Circuit, CircuitBuilder, Evidence, NodeId, Value, VarKind, VariableMeta};
use crate::error::{Error, Result};

/// Column-major numeric table with one [`VariableMeta`] per column.
///
/// Discrete columns hold category indices stored as `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    variables: Vec<VariableMeta>,
    columns: Vec<Vec<f64>>,
}

impl DataMatrix {
    pub fn new(variables: Vec<VariableMeta>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if variables.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} variables but {} columns",
                variables.len(),
                columns.len()
            )));
        }
        let rows = columns.first().map_or(0, Vec::len);
        for (meta, col) in variables.iter().zip(&columns) {
            if col.len() != rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, expected {rows}",
                    meta.name,
                    col.len()
                )));
            }
            let bad = match meta.kind {
                VarKind::Discrete { cardinality } => col
                    .iter()
                    .find(|&&v| !(v >= 0.0 && v.fract() == 0.0 && (v as usize) < cardinality)),
                VarKind::Continuous { .. } => col.iter().find(|v| !v.is_finite()),
            };
            if let Some(v) = bad {
                return Err(Error::Schema(format!(
                    "column `{}` holds invalid value {v}",
                    meta.name
                )));
            }
        }
        Ok(Self { variables, columns })
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[r]).collect()
    }

    /// Fully assigned evidence for row `r`.
    pub fn evidence(&self, r: usize) -> Evidence {
        Evidence::full(
            self.variables
                .iter()
                .zip(&self.columns)
                .map(|(meta, col)| match meta.kind {
                    VarKind::Discrete { .. } => Value::Category(col[r] as usize),
                    VarKind::Continuous { .. } => Value::Real(col[r]),
                })
                .collect(),
        )
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        Self {
            variables: self.variables.clone(),
            columns,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnParams {
    /// Slices with fewer rows are fully factorized.
    pub min_instances: usize,
    /// Column pairs scoring above this are treated as dependent.
    pub independence_threshold: f64,
    pub n_row_clusters: usize,
    pub n_bins: usize,
    pub laplace_alpha: f64,
    pub seed: u64,
}

impl Default for LearnParams {
    fn default() -> Self {
        Self {
            min_instances: 64,
            independence_threshold: 0.1,
            n_row_clusters: 2,
            n_bins: 8,
            laplace_alpha: 1.0,
            seed: 0,
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.min_instances == 0 {
            return bad("min_instances must be positive");
        }
        if !(self.independence_threshold > 0.0 && self.independence_threshold <= 1.0) {
            return bad("independence_threshold must lie in (0, 1]");
        }
        if self.n_row_clusters < 2 {
            return bad("n_row_clusters must be at least 2");
        }
        if self.n_bins == 0 {
            return bad("n_bins must be positive");
        }
        if !(self.laplace_alpha > 0.0 && self.laplace_alpha.is_finite()) {
            return bad("laplace_alpha must be positive");
        }
        Ok(())
    }

    /// Smoothing used by [`LearnParams::default_grid`]. With eleven design
    /// levels and leaves of ~64 rows, `alpha = 1` leaks enough mass into
    /// unseen designs to put a visible floor under `P(y=1 | x)`.
    pub const GRID_LAPLACE_ALPHA: f64 = 0.01;

    /// The eight-point default grid, in a fixed order.
    pub fn default_grid(seed: u64) -> Vec<LearnParams> {
        let mut grid = Vec::new();
        for min_instances in [64, 256] {
            for independence_threshold in [0.01, 0.1] {
                for n_bins in [8, 16] {
                    grid.push(LearnParams {
                        min_instances,
                        independence_threshold,
                        n_bins,
                        laplace_alpha: Self::GRID_LAPLACE_ALPHA,
                        seed,
                        ..LearnParams::default()
                    });
                }
            }
        }
        grid
    }
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub circuit: Circuit,
    pub params: LearnParams,
    /// Mean per-row log-likelihood on the training rows.
    pub train_loglik: f64,
    /// Mean per-row log-likelihood on held-out rows, when there were any.
    pub valid_loglik: Option<f64>,
}

/// Summary of one grid point, for training reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub params: LearnParams,
    pub node_count: Option<usize>,
    pub train_loglik: Option<f64>,
    pub valid_loglik: Option<f64>,
    pub error: Option<String>,
}

/// Learns a circuit over all columns of `data`.
pub fn learn(data: &DataMatrix, params: &LearnParams) -> Result<TrainedModel> {
    params.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut learner = Learner {
        data,
        params,
        builder: CircuitBuilder::new(data.variables.clone()),
        rng: ChaCha8Rng::seed_from_u64(params.seed),
    };
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let cols: Vec<usize> = (0..data.n_cols()).collect();
    let root = learner.grow(&rows, &cols, true);
    let circuit = learner.builder.build(root)?;
    if let Some(v) = circuit.report().violations.first() {
        return Err(Error::InvalidCircuit(
            circuit.report().violations.len(),
            v.to_string(),
        ));
    }
    let train_loglik = mean_log_likelihood(&circuit, data)?;
    Ok(TrainedModel {
        circuit,
        params: params.clone(),
        train_loglik,
        valid_loglik: None,
    })
}

/// Mean log-density of the fully observed rows.
///
/// Per-row values are summed sequentially so the result does not depend on
/// thread scheduling.
pub fn mean_log_likelihood(circuit: &Circuit, data: &DataMatrix) -> Result<f64> {
    if data.n_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let per_row = (0..data.n_rows())
        .into_par_iter()
        .map(|r| circuit.evaluate_exact(&data.evidence(r)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_row.iter().sum::<f64>() / per_row.len() as f64)
}

/// Trains one model per grid point and keeps the best on validation data.
pub fn grid_search(
    train: &DataMatrix,
    valid: &DataMatrix,
    grid: &[LearnParams],
) -> Result<TrainedModel> {
    grid_search_with_summary(train, valid, grid).map(|(best, _)| best)
}

/// [`grid_search`] plus a per-candidate summary in grid order.
///
/// Candidates within 1e-6 of the best validation log-likelihood are
/// compared by node count, then by grid position.
pub fn grid_search_with_summary(
    train: &DataMatrix,
    valid: &DataMatrix,
    grid: &[LearnParams],
) -> Result<(TrainedModel, Vec<CandidateSummary>)> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(
            "hyperparameter grid is empty".into(),
        ));
    }
    let outcomes: Vec<Result<TrainedModel>> = grid
        .par_iter()
        .map(|p| {
            let mut model = learn(train, p)?;
            model.valid_loglik = Some(mean_log_likelihood(&model.circuit, valid)?);
            Ok(model)
        })
        .collect();

    let summary = grid
        .iter()
        .zip(&outcomes)
        .map(|(p, o)| match o {
            Ok(m) => CandidateSummary {
                params: p.clone(),
                node_count: Some(m.circuit.len()),
                train_loglik: Some(m.train_loglik),
                valid_loglik: m.valid_loglik,
                error: None,
            },
            Err(e) => CandidateSummary {
                params: p.clone(),
                node_count: None,
                train_loglik: None,
                valid_loglik: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut best: Option<TrainedModel> = None;
    let mut errors = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(m) => {
                best = Some(match best {
                    None => m,
                    Some(b) => select_better(b, m),
                })
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    match best {
        Some(b) => Ok((b, summary)),
        None => Err(Error::AllCandidatesFailed(errors.join("; "))),
    }
}

/// Keeps `incumbent` unless `challenger` is clearly better or ties with a
/// smaller circuit.
fn select_better(incumbent: TrainedModel, challenger: TrainedModel) -> TrainedModel {
    let a = incumbent.valid_loglik.unwrap_or(f64::NEG_INFINITY);
    let b = challenger.valid_loglik.unwrap_or(f64::NEG_INFINITY);
    if b > a + 1e-6 || ((b - a).abs() <= 1e-6 && challenger.circuit.len() < incumbent.circuit.len())
    {
        challenger
    } else {
        incumbent
    }
}

struct Learner<'a> {
    data: &'a DataMatrix,
    params: &'a LearnParams,
    builder: CircuitBuilder,
    rng: ChaCha8Rng,
}

impl Learner<'_> {
    fn grow(&mut self, rows: &[usize], cols: &[usize], try_split: bool) -> NodeId {
        if cols.len() == 1 {
            return self.leaf(rows, cols[0]);
        }
        if rows.len() < self.params.min_instances {
            return self.factorize(rows, cols);
        }
        if try_split {
            let groups = self.independent_groups(rows, cols);
            if groups.len() > 1 {
                let children = groups.iter().map(|g| self.grow(rows, g, false)).collect();
                return self.builder.product(children);
            }
        }
        let clusters = self.cluster_rows(rows, cols);
        if clusters.len() < 2 {
            return self.factorize(rows, cols);
        }
        let total = rows.len() as f64;
        let weights: Vec<f64> = clusters.iter().map(|c| c.len() as f64 / total).collect();
        let children = clusters.iter().map(|c| self.grow(c, cols, true)).collect();
        self.builder.sum(children, &weights)
    }

    fn leaf(&mut self, rows: &[usize], col: usize) -> NodeId {
        let values: Vec<f64> = rows.iter().map(|&r| self.data.columns[col][r]).collect();
        let leaf = fit_leaf(&values, &self.data.variables[col], self.params);
        self.builder.leaf(leaf)
    }

    fn factorize(&mut self, rows: &[usize], cols: &[usize]) -> NodeId {
        let children = cols.iter().map(|&c| self.leaf(rows, c)).collect();
        self.builder.product(children)
    }

    /// Column groups (as column ids) connected by dependence above the threshold.
    fn independent_groups(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<usize>> {
        let coded: Vec<(Vec<usize>, usize)> = cols
            .iter()
            .map(|&c| {
                let values: Vec<f64> = rows.iter().map(|&r| self.data.columns[c][r]).collect();
                dependence::discretize(&values, &self.data.variables[c], self.params.n_bins)
            })
            .collect();
        let m = cols.len();
        let mut scores = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                let s = dependence::g_per_row(&coded[i].0, coded[i].1, &coded[j].0, coded[j].1);
                scores[i][j] = s;
                scores[j][i] = s;
            }
        }
        dependence_components(&scores, self.params.independence_threshold)
            .into_iter()
            .map(|g| g.into_iter().map(|i| cols[i]).collect())
            .collect()
    }

    /// Non-empty row clusters, in cluster-index order.
    fn cluster_rows(&mut self, rows: &[usize], cols: &[usize]) -> Vec<Vec<usize>> {
        let n = rows.len() as f64;
        let stats: Vec<(f64, f64)> = cols
            .iter()
            .map(|&c| {
                let col = &self.data.columns[c];
                let mean = rows.iter().map(|&r| col[r]).sum::<f64>() / n;
                let var = rows.iter().map(|&r| (col[r] - mean).powi(2)).sum::<f64>() / n;
                (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
            })
            .collect();
        let points: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| {
                cols.iter()
                    .zip(&stats)
                    .map(|(&c, (mean, sd))| (self.data.columns[c][r] - mean) / sd)
                    .collect()
            })
            .collect();
        let assign = kmeans(&points, self.params.n_row_clusters, 50, &mut self.rng);
        let mut clusters = vec![Vec::new(); self.params.n_row_clusters];
        for (&r, &a) in rows.iter().zip(&assign) {
            clusters[a].push(r);
        }
        clusters.retain(|c| !c.is_empty());
        clusters
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::circuit::Node;

    fn binary_matrix(cols: Vec<Vec<f64>>) -> DataMatrix {
        let vars = (0..cols.len())
            .map(|i| VariableMeta::discrete(i, format!("x{i}"), 2))
            .collect();
        DataMatrix::new(vars, cols).unwrap()
    }

    #[test]
    fn all_zero_column_gives_smoothed_leaf() {
        let m = learn(&binary_matrix(vec![vec![0.0; 10]]), &LearnParams::default()).unwrap();
        assert_eq!(m.circuit.len(), 1);
        let Node::Leaf(leaf) = m.circuit.node(m.circuit.root()) else {
            panic!()
        };
        assert!((leaf.table()[0].exp() - 11.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn independent_columns_split_at_the_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = (0..10_000).map(|_| rng.random_range(0..2) as f64).collect();
        let b = (0..10_000).map(|_| rng.random_range(0..2) as f64).collect();
        let m = learn(&binary_matrix(vec![a, b]), &LearnParams::default()).unwrap();
        assert!(matches!(
            m.circuit.node(m.circuit.root()),
            Node::Product { .. }
        ));
    }

    #[test]
    fn copied_column_clusters_at_the_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a: Vec<f64> = (0..1_000).map(|_| rng.random_range(0..2) as f64).collect();
        let m = learn(&binary_matrix(vec![a.clone(), a]), &LearnParams::default()).unwrap();
        assert!(m.circuit.node(m.circuit.root()).is_sum());
        assert!(m.circuit.is_valid());
    }

    #[test]
    fn tiny_dataset_is_fully_factorized() {
        let m = learn(
            &binary_matrix(vec![vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 0.0]]),
            &LearnParams::default(),
        )
        .unwrap();
        let Node::Product { children } = m.circuit.node(m.circuit.root()) else {
            panic!()
        };
        assert_eq!(children.len(), 2);
    }

    #[test]
    fn empty_data_and_bad_params_are_rejected() {
        let empty = binary_matrix(vec![vec![]]);
        assert!(matches!(
            learn(&empty, &LearnParams::default()),
            Err(Error::EmptyDataset)
        ));
        let bad = LearnParams {
            n_row_clusters: 1,
            ..LearnParams::default()
        };
        assert!(learn(&binary_matrix(vec![vec![0.0]]), &bad).is_err());
    }

    #[test]
    fn schema_checks_reject_out_of_range_categories() {
        let vars = vec![VariableMeta::discrete(0, "x", 2)];
        assert!(DataMatrix::new(vars.clone(), vec![vec![0.0, 2.0]]).is_err());
        assert!(DataMatrix::new(vars, vec![vec![0.0, 0.5]]).is_err());
    }

    #[test]
    fn grid_of_one_returns_that_model() {
        let data = binary_matrix(vec![vec![0.0, 1.0, 1.0, 0.0]]);
        let p = LearnParams {
            laplace_alpha: 2.0,
            ..LearnParams::default()
        };
        let m = grid_search(&data, &data, std::slice::from_ref(&p)).unwrap();
        assert_eq!(m.params, p);
        assert!(m.valid_loglik.is_some());
    }
}
