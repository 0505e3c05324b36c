//! Random valid circuits.

use rand::seq::SliceRandom;
use rand::Rng;
use spnplan_core::circuit::{Circuit, CircuitBuilder, LeafModel, NodeId, VariableMeta};

#[derive(Clone, Debug)]
pub struct Shape {
    pub n_vars: usize,
    /// Discrete cardinalities are drawn from `2..=max_card`.
    pub max_card: usize,
    /// Probability that a variable is continuous.
    pub p_continuous: f64,
    pub max_nodes: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            n_vars: 4,
            max_card: 3,
            p_continuous: 0.3,
            max_nodes: 60,
        }
    }
}

/// Normalized random weights bounded away from zero.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

pub fn random_variables<R: Rng>(rng: &mut R, shape: &Shape) -> Vec<VariableMeta> {
    (0..shape.n_vars)
        .map(|i| {
            if rng.random_bool(shape.p_continuous) {
                let lo = rng.random_range(-5.0..5.0);
                VariableMeta::continuous(i, format!("c{i}"), lo, lo + rng.random_range(0.5..4.0))
            } else {
                VariableMeta::discrete(
                    i,
                    format!("x{i}"),
                    rng.random_range(2..=shape.max_card.max(2)),
                )
            }
        })
        .collect()
}

fn min_cost(scope: usize) -> usize {
    if scope == 1 {
        1
    } else {
        scope + 1
    }
}

struct Gen<'a, R> {
    rng: &'a mut R,
    vars: &'a [VariableMeta],
    b: CircuitBuilder,
}

impl<R: Rng> Gen<'_, R> {
    fn leaf(&mut self, v: usize) -> NodeId {
        let meta = &self.vars[v];
        match meta.cardinality() {
            Some(card) => {
                let p = random_simplex(self.rng, card);
                self.b.categorical(v, &p)
            }
            None => {
                let spnplan_core::circuit::VarKind::Continuous { lower, upper } = meta.kind else {
                    unreachable!()
                };
                let bins = self.rng.random_range(1..=4);
                let mut cuts: Vec<f64> = (0..bins - 1)
                    .map(|_| self.rng.random_range(lower..upper))
                    .collect();
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let mut edges = vec![lower];
                edges.extend(cuts.into_iter().filter(|&c| c > lower && c < upper));
                edges.push(upper);
                let mass = random_simplex(self.rng, edges.len() - 1);
                let dens = mass
                    .iter()
                    .zip(edges.windows(2))
                    .map(|(m, w)| m / (w[1] - w[0]))
                    .collect();
                self.b.leaf(LeafModel::histogram(v, edges, dens))
            }
        }
    }

    /// Builds a node over `scope` using at most `avail` nodes; returns the
    /// node and how many nodes it used.
    fn grow(&mut self, scope: &[usize], avail: usize) -> (NodeId, usize) {
        if scope.len() == 1 {
            if avail >= 3 && self.rng.random_bool(0.35) {
                let k = if avail >= 4 {
                    self.rng.random_range(2..=3)
                } else {
                    2
                };
                let kids: Vec<NodeId> = (0..k).map(|_| self.leaf(scope[0])).collect();
                let w = random_simplex(self.rng, k);
                return (self.b.sum(kids, &w), k + 1);
            }
            return (self.leaf(scope[0]), 1);
        }
        let base = min_cost(scope.len());
        let sum_ok = avail >= 1 + 2 * base;
        if sum_ok && self.rng.random_bool(0.45) {
            let k = if avail >= 1 + 3 * base && self.rng.random_bool(0.3) {
                3
            } else {
                2
            };
            let mut left = avail - 1;
            let mut kids = Vec::new();
            for i in 0..k {
                let reserve = (k - i - 1) * base;
                let room = left - reserve;
                let share = base + self.rng.random_range(0..=(room - base)) / 2;
                let (n, used) = self.grow(scope, share.max(base));
                kids.push(n);
                left -= used;
            }
            let w = random_simplex(self.rng, k);
            return (self.b.sum(kids, &w), avail - left);
        }
        // Product: random partition into 2..=3 blocks, singletons if room is short.
        let mut vars = scope.to_vec();
        vars.shuffle(self.rng);
        let blocks = self.rng.random_range(2..=scope.len().min(3));
        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); blocks];
        for (i, v) in vars.into_iter().enumerate() {
            let slot = if i < blocks {
                i
            } else {
                self.rng.random_range(0..blocks)
            };
            parts[slot].push(v);
        }
        let need: usize = 1 + parts.iter().map(|p| min_cost(p.len())).sum::<usize>();
        if need > avail {
            parts = scope.iter().map(|&v| vec![v]).collect();
        }
        let mut left = avail - 1;
        let mut kids = Vec::new();
        for i in 0..parts.len() {
            let reserve: usize = parts[i + 1..].iter().map(|p| min_cost(p.len())).sum();
            let base = min_cost(parts[i].len());
            let room = left - reserve;
            let share = base + self.rng.random_range(0..=(room - base)) / 2;
            let (n, used) = self.grow(&parts[i].clone(), share);
            kids.push(n);
            left -= used;
        }
        (self.b.product(kids), avail - left)
    }
}

/// Random smooth, decomposable circuit with at most `shape.max_nodes` nodes.
pub fn random_circuit<R: Rng>(rng: &mut R, shape: &Shape) -> Circuit {
    let vars = random_variables(rng, shape);
    random_circuit_over(rng, vars, shape.max_nodes)
}

pub fn random_circuit_over<R: Rng>(
    rng: &mut R,
    vars: Vec<VariableMeta>,
    max_nodes: usize,
) -> Circuit {
    let scope: Vec<usize> = (0..vars.len()).collect();
    assert!(
        max_nodes >= min_cost(scope.len()),
        "node budget too small for {} variables",
        scope.len()
    );
    let b = CircuitBuilder::new(vars.clone());
    let mut g = Gen {
        rng,
        vars: &vars,
        b,
    };
    let (root, _) = g.grow(&scope, max_nodes);
    let c = g.b.build(root).expect("generated circuit is well formed");
    assert!(c.is_valid(), "{:?}", c.report());
    c
}
