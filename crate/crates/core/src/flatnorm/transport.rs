//! Balanced transportation and transport-with-cancellation on a bipartite
//! graph with a dump node.

use num_rational::BigRational;
use num_traits::Zero;

use super::simplex::{self, exact, FlowArc, InitialTree, Scalar};
use super::{FlatNormError, FlowEntry, NormParams, TransportSolution};
use crate::measure::{distance, SignedMeasure};

/// Largest instance accepted by the exact rational solvers.
pub const EXACT_MAX_ATOMS: usize = 8;

/// Optimal plan of a balanced transportation problem (dense).
#[derive(Clone, Debug, PartialEq)]
pub struct TransportationPlan<T> {
    pub flow: Vec<Vec<T>>,
    pub objective: T,
}

fn check_balanced_input(
    costs_len: usize,
    row_lens: impl Iterator<Item = usize>,
    supplies: &[f64],
    demands: &[f64],
    costs_finite: bool,
) -> Result<(), FlatNormError> {
    if costs_len != supplies.len() || row_lens.into_iter().any(|l| l != demands.len()) {
        return Err(FlatNormError::InvalidInput(
            "cost matrix shape does not match supplies and demands".into(),
        ));
    }
    if !costs_finite {
        return Err(FlatNormError::InvalidInput(
            "costs must be finite and nonnegative".into(),
        ));
    }
    if let Some(&x) = supplies
        .iter()
        .chain(demands)
        .find(|x| !x.is_finite() || **x < 0.0)
    {
        return Err(FlatNormError::NegativeWeight(x));
    }
    let s: f64 = supplies.iter().sum();
    let d: f64 = demands.iter().sum();
    if (s - d).abs() > 1e-12 * s.max(d).max(1.0) {
        return Err(FlatNormError::MassMismatch { left: s, right: d });
    }
    Ok(())
}

fn balanced<T: Scalar>(
    costs: &[Vec<T>],
    supplies: &[T],
    demands: &[T],
) -> Result<TransportationPlan<T>, FlatNormError> {
    let m = supplies.len();
    let n = demands.len();
    let mut supply: Vec<T> = supplies.to_vec();
    supply.extend(demands.iter().map(|d| -d.clone()));
    let mut arcs = Vec::with_capacity(m * n);
    for (i, row) in costs.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            arcs.push(FlowArc {
                from: i,
                to: m + j,
                cost: c.clone(),
            });
        }
    }
    let sol = simplex::solve(&supply, &arcs, None)?;
    let mut flow = vec![vec![T::zero(); n]; m];
    for (k, f) in sol.flows.into_iter().enumerate() {
        flow[k / n][k % n] = f;
    }
    Ok(TransportationPlan {
        flow,
        objective: sol.objective,
    })
}

/// Balanced transportation problem `min sum c_ij pi_ij` with exact marginals.
pub fn solve_transportation(
    costs: &[Vec<f64>],
    supplies: &[f64],
    demands: &[f64],
) -> Result<TransportationPlan<f64>, FlatNormError> {
    let finite = costs.iter().flatten().all(|c| c.is_finite() && *c >= 0.0);
    check_balanced_input(
        costs.len(),
        costs.iter().map(Vec::len),
        supplies,
        demands,
        finite,
    )?;
    balanced(costs, supplies, demands)
}

/// Exact rational counterpart of [`solve_transportation`] for tiny instances.
pub fn solve_transportation_exact(
    costs: &[Vec<BigRational>],
    supplies: &[BigRational],
    demands: &[BigRational],
) -> Result<TransportationPlan<BigRational>, FlatNormError> {
    if supplies.len() > EXACT_MAX_ATOMS || demands.len() > EXACT_MAX_ATOMS {
        return Err(FlatNormError::TooLarge(EXACT_MAX_ATOMS));
    }
    let zero = BigRational::zero();
    if costs.len() != supplies.len() || costs.iter().any(|r| r.len() != demands.len()) {
        return Err(FlatNormError::InvalidInput(
            "cost matrix shape does not match supplies and demands".into(),
        ));
    }
    if costs.iter().flatten().any(|c| *c < zero) {
        return Err(FlatNormError::InvalidInput(
            "costs must be nonnegative".into(),
        ));
    }
    if let Some(x) = supplies.iter().chain(demands).find(|x| **x < zero) {
        return Err(FlatNormError::NegativeWeight(x.as_f64()));
    }
    let s: BigRational = supplies.iter().cloned().sum();
    let d: BigRational = demands.iter().cloned().sum();
    if s != d {
        return Err(FlatNormError::MassMismatch {
            left: s.as_f64(),
            right: d.as_f64(),
        });
    }
    balanced(costs, supplies, demands)
}

/// Classical W1 between positive measures of equal mass.
pub fn w1_classic(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
) -> Result<(f64, TransportSolution), FlatNormError> {
    mu.check_dim(nu)?;
    require_positive(mu)?;
    require_positive(nu)?;
    let (m, n) = (mu.len(), nu.len());
    let costs: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| distance(mu.position(i), nu.position(j)))
                .collect()
        })
        .collect();
    let plan = solve_transportation(&costs, mu.weights(), nu.weights())?;
    let mut flow = Vec::new();
    for (i, row) in plan.flow.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            if f > 0.0 {
                flow.push(FlowEntry {
                    source: i,
                    target: j,
                    mass: f,
                });
            }
        }
    }
    let sol = TransportSolution {
        flow,
        moved_source: mu.clone(),
        moved_target: nu.clone(),
        cancelled_source_mass: 0.0,
        cancelled_target_mass: 0.0,
        value: plan.objective,
    };
    Ok((plan.objective, sol))
}

pub(crate) fn require_positive(mu: &SignedMeasure) -> Result<(), FlatNormError> {
    match mu.weights().iter().find(|w| **w < 0.0) {
        Some(&w) => Err(FlatNormError::NegativeWeight(w)),
        None => Ok(()),
    }
}

struct DumpNetwork<T> {
    supply: Vec<T>,
    arcs: Vec<FlowArc<T>>,
    pairs: Vec<(usize, usize)>,
    tree: InitialTree,
}

/// Node layout: sources `0..m`, source-side dump `m`, targets `m+1..=m+n`,
/// target-side dump `m+n+1`. The first `m+n+1` arcs form a feasible
/// starting tree (cancel everything).
fn dump_network<T: Scalar>(
    src: &[T],
    tgt: &[T],
    a: &T,
    cost: impl Fn(usize, usize) -> Option<T>,
) -> DumpNetwork<T> {
    let (m, n) = (src.len(), tgt.len());
    let dump_s = m;
    let dump_t = m + n + 1;
    let src_mass = src.iter().fold(T::zero(), |acc, w| acc + w.clone());
    let tgt_mass = tgt.iter().fold(T::zero(), |acc, w| acc + w.clone());
    let mut supply: Vec<T> = src.to_vec();
    supply.push(tgt_mass);
    supply.extend(tgt.iter().map(|w| -w.clone()));
    supply.push(-src_mass);

    let mut arcs = Vec::with_capacity(m + n + 1 + m * n);
    for i in 0..m {
        arcs.push(FlowArc {
            from: i,
            to: dump_t,
            cost: a.clone(),
        });
    }
    for j in 0..n {
        arcs.push(FlowArc {
            from: dump_s,
            to: m + 1 + j,
            cost: a.clone(),
        });
    }
    arcs.push(FlowArc {
        from: dump_s,
        to: dump_t,
        cost: T::zero(),
    });
    let tree = InitialTree {
        root: dump_s,
        arcs: (0..arcs.len()).collect(),
    };
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if let Some(c) = cost(i, j) {
                arcs.push(FlowArc {
                    from: i,
                    to: m + 1 + j,
                    cost: c,
                });
                pairs.push((i, j));
            }
        }
    }
    DumpNetwork {
        supply,
        arcs,
        pairs,
        tree,
    }
}

/// Transport with cancellation between two positive measures, solved on the
/// complete bipartite graph plus dump nodes.
pub(crate) fn gw_bipartite(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    p: NormParams,
) -> Result<TransportSolution, FlatNormError> {
    let net = dump_network(mu.weights(), nu.weights(), &p.a, |i, j| {
        let c = p.b * distance(mu.position(i), nu.position(j));
        // Transport at cost >= 2a never beats cancelling both ends.
        (c < 2.0 * p.a).then_some(c)
    });
    let sol = simplex::solve(&net.supply, &net.arcs, Some(net.tree))?;
    let (m, n) = (mu.len(), nu.len());
    let base = m + n + 1;
    let mut flow = Vec::new();
    let mut row = vec![0.0; m];
    let mut col = vec![0.0; n];
    for (k, &(i, j)) in net.pairs.iter().enumerate() {
        let f = sol.flows[base + k];
        if f > 0.0 {
            flow.push(FlowEntry {
                source: i,
                target: j,
                mass: f,
            });
            row[i] += f;
            col[j] += f;
        }
    }
    let cancelled_source_mass = sol.flows[..m].iter().sum();
    let cancelled_target_mass = sol.flows[m..m + n].iter().sum();
    Ok(TransportSolution {
        flow,
        moved_source: SignedMeasure::from_flat(mu.dim(), mu.flat_positions().to_vec(), row)?,
        moved_target: SignedMeasure::from_flat(nu.dim(), nu.flat_positions().to_vec(), col)?,
        cancelled_source_mass,
        cancelled_target_mass,
        value: sol.objective,
    })
}

/// Exact rational optimum of the transport-with-cancellation program.
///
/// Costs are exact in one dimension; in higher dimensions the Euclidean
/// distances are first rounded to doubles. No arcs are pruned.
pub fn gw_distance_exact(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    p: NormParams,
) -> Result<BigRational, FlatNormError> {
    mu.check_dim(nu)?;
    require_positive(mu)?;
    require_positive(nu)?;
    if mu.len() > EXACT_MAX_ATOMS || nu.len() > EXACT_MAX_ATOMS {
        return Err(FlatNormError::TooLarge(EXACT_MAX_ATOMS));
    }
    let src: Vec<BigRational> = mu.weights().iter().map(|&w| exact(w)).collect();
    let tgt: Vec<BigRational> = nu.weights().iter().map(|&w| exact(w)).collect();
    let b = exact(p.b);
    let net = dump_network(&src, &tgt, &exact(p.a), |i, j| {
        let (x, y) = (mu.position(i), nu.position(j));
        let d = if x.len() == 1 {
            let diff = exact(x[0]) - exact(y[0]);
            if diff < BigRational::zero() {
                -diff
            } else {
                diff
            }
        } else {
            exact(distance(x, y))
        };
        Some(b.clone() * d)
    });
    Ok(simplex::solve(&net.supply, &net.arcs, Some(net.tree))?.objective)
}
