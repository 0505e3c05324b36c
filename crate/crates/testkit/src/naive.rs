//! Direct probability-space evaluation by recursion over the node list.
//!
//! Shares no code with the library's log-space passes, so agreement
//! between the two is evidence that both are right.

use spnplan_core::circuit::{Circuit, Evidence, LeafForm, Node, Value};

fn leaf_prob(form: &LeafForm, value: Option<&Value>) -> f64 {
    match (form, value) {
        (_, None) => 1.0,
        (LeafForm::Categorical { log_probs }, Some(Value::Category(k))) => log_probs[*k].exp(),
        (
            LeafForm::Histogram {
                bin_edges,
                log_densities,
            },
            Some(Value::Real(x)),
        ) => {
            let last = bin_edges.len() - 1;
            for b in 0..last {
                let inside = *x >= bin_edges[b]
                    && (*x < bin_edges[b + 1] || (b + 1 == last && *x <= bin_edges[last]));
                if inside {
                    return log_densities[b].exp();
                }
            }
            spnplan_core::LOG_PROB_FLOOR.exp()
        }
        _ => panic!("value kind does not match leaf"),
    }
}

fn eval(c: &Circuit, ev: &Evidence, n: usize, max_mode: bool, memo: &mut [Option<f64>]) -> f64 {
    if let Some(v) = memo[n] {
        return v;
    }
    let v = match c.node(n) {
        Node::Leaf(leaf) => leaf_prob(&leaf.form, ev.get(leaf.variable)),
        Node::Product { children } => children
            .iter()
            .map(|&ch| eval(c, ev, ch, max_mode, memo))
            .product(),
        Node::Sum {
            children,
            log_weights,
        } => {
            let terms = children
                .iter()
                .zip(log_weights)
                .map(|(&ch, w)| w.exp() * eval(c, ev, ch, max_mode, memo));
            if max_mode {
                terms.fold(0.0, f64::max)
            } else {
                terms.sum()
            }
        }
    };
    memo[n] = Some(v);
    v
}

/// Density (or probability) of `ev`, marginalizing unassigned variables.
pub fn prob(c: &Circuit, ev: &Evidence) -> f64 {
    eval(c, ev, c.root(), false, &mut vec![None; c.len()])
}

/// Max-product value: sums replaced by the largest weighted child.
pub fn max_prob(c: &Circuit, ev: &Evidence) -> f64 {
    eval(c, ev, c.root(), true, &mut vec![None; c.len()])
}

/// Every full assignment of the discrete variables in `vars`, odometer order.
pub fn assignments(cards: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; cards.len()];
    loop {
        out.push(cur.clone());
        let mut i = cards.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < cards[i] {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// `Σ` over completions of `ev` of the full-joint probability, for
/// circuits whose variables are all discrete.
pub fn brute_marginal(c: &Circuit, ev: &Evidence) -> f64 {
    let n = c.variables().len();
    let free: Vec<usize> = (0..n).filter(|&v| ev.get(v).is_none()).collect();
    let cards: Vec<usize> = free
        .iter()
        .map(|&v| {
            c.variables()[v]
                .cardinality()
                .expect("brute force needs discrete variables")
        })
        .collect();
    let mut total = 0.0;
    for a in assignments(&cards) {
        let mut full = ev.clone();
        for (&v, &k) in free.iter().zip(&a) {
            full.set(v, Some(Value::Category(k)));
        }
        total += prob(c, &full);
    }
    total
}
