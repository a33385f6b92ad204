//! Primal network simplex for uncapacitated min-cost flow.
//!
//! The solver is generic over [`Scalar`] so the same code runs in double
//! precision and in exact rational arithmetic. Trees are kept strongly
//! feasible (zero-flow tree arcs point away from the root), and the leaving
//! arc is chosen by the usual last-blocking-arc rule, which rules out cycling.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimplexError {
    #[error("supplies are not balanced")]
    Unbalanced,
    #[error("the network has no feasible flow")]
    Infeasible,
    #[error("the problem is unbounded")]
    Unbounded,
    #[error("initial tree is not a feasible spanning tree")]
    BadInitialTree,
    #[error("iteration limit reached")]
    IterationLimit,
}

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn of_f64(x: f64) -> Self;
    fn as_f64(&self) -> f64;
    /// Reduced-cost tolerance for a problem whose costs are bounded by `scale`.
    fn tolerance(scale: &Self) -> Self;
    fn abs_val(&self) -> Self;
}

impl Scalar for f64 {
    fn of_f64(x: f64) -> Self {
        x
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn tolerance(scale: &Self) -> Self {
        1e-12 * scale.max(1.0)
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

impl Scalar for BigRational {
    fn of_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite input")
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn tolerance(_: &Self) -> Self {
        BigRational::zero()
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

/// Exact rational value of a double, for oracle comparisons.
pub fn exact(x: f64) -> BigRational {
    <BigRational as FromPrimitive>::from_f64(x)
        .unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

#[derive(Clone, Debug)]
pub struct FlowArc<T> {
    pub from: usize,
    pub to: usize,
    pub cost: T,
}

/// Optimal flow: one value per input arc, plus node potentials.
#[derive(Clone, Debug)]
pub struct FlowSolution<T> {
    pub flows: Vec<T>,
    pub objective: T,
    pub potentials: Vec<T>,
}

/// A spanning tree to start from, given as arc indices plus a root node.
/// Tree flows are derived from the supplies.
pub struct InitialTree {
    pub root: usize,
    pub arcs: Vec<usize>,
}

const NONE: usize = usize::MAX;

struct State<T> {
    nodes: usize,
    arcs: Vec<FlowArc<T>>,
    flow: Vec<T>,
    in_tree: Vec<bool>,
    tree_adj: Vec<Vec<usize>>,
    root: usize,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pi: Vec<T>,
    order: Vec<usize>,
}

impl<T: Scalar> State<T> {
    fn other(&self, e: usize, x: usize) -> usize {
        let a = &self.arcs[e];
        if a.from == x {
            a.to
        } else {
            a.from
        }
    }

    /// Recomputes parent pointers, depths and potentials from the tree arcs.
    fn rebuild(&mut self) -> bool {
        self.parent.iter_mut().for_each(|p| *p = NONE);
        self.order.clear();
        let mut seen = vec![false; self.nodes];
        seen[self.root] = true;
        self.depth[self.root] = 0;
        self.pi[self.root] = T::zero();
        let mut queue = VecDeque::from([self.root]);
        while let Some(x) = queue.pop_front() {
            self.order.push(x);
            for k in 0..self.tree_adj[x].len() {
                let e = self.tree_adj[x][k];
                let y = self.other(e, x);
                if seen[y] {
                    continue;
                }
                seen[y] = true;
                self.parent[y] = x;
                self.pred[y] = e;
                self.depth[y] = self.depth[x] + 1;
                let c = self.arcs[e].cost.clone();
                self.pi[y] = if self.arcs[e].from == x {
                    self.pi[x].clone() + c
                } else {
                    self.pi[x].clone() - c
                };
                queue.push_back(y);
            }
        }
        self.order.len() == self.nodes
    }

    fn reduced_cost(&self, e: usize) -> T {
        let a = &self.arcs[e];
        a.cost.clone() + self.pi[a.from].clone() - self.pi[a.to].clone()
    }
}

/// Solves `min sum cost*flow` subject to flow conservation
/// `out(x) - in(x) = supply[x]` and `flow >= 0`.
///
/// Without an initial tree, an artificial root with big-M arcs is added.
pub fn solve<T: Scalar>(
    supply: &[T],
    arcs: &[FlowArc<T>],
    initial: Option<InitialTree>,
) -> Result<FlowSolution<T>, SimplexError> {
    let n = supply.len();
    let m = arcs.len();
    let mut max_cost = T::zero();
    for a in arcs {
        let c = a.cost.abs_val();
        if c > max_cost {
            max_cost = c;
        }
    }
    let mut total_supply = T::zero();
    let mut positive_supply = T::zero();
    for s in supply {
        total_supply = total_supply + s.clone();
        if *s > T::zero() {
            positive_supply = positive_supply + s.clone();
        }
    }
    let balance_tol = T::tolerance(&positive_supply) * T::of_f64(1e3);
    if total_supply.abs_val() > balance_tol {
        return Err(SimplexError::Unbalanced);
    }

    let mut all_arcs: Vec<FlowArc<T>> = arcs.to_vec();
    let mut supplies: Vec<T> = supply.to_vec();
    let (nodes, root, tree_arcs, artificial) = match initial {
        Some(tree) => {
            if tree.root >= n || tree.arcs.len() + 1 != n {
                return Err(SimplexError::BadInitialTree);
            }
            (n, tree.root, tree.arcs, false)
        }
        None => {
            let big_m = T::of_f64((n + 1) as f64) * (max_cost.clone() + T::one());
            let root = n;
            supplies.push(T::zero());
            let mut tree = Vec::with_capacity(n);
            for (i, s) in supply.iter().enumerate() {
                tree.push(all_arcs.len());
                let (from, to) = if *s > T::zero() { (i, root) } else { (root, i) };
                all_arcs.push(FlowArc {
                    from,
                    to,
                    cost: big_m.clone(),
                });
            }
            (n + 1, root, tree, true)
        }
    };

    let total_arcs = all_arcs.len();
    let mut st = State {
        nodes,
        flow: vec![T::zero(); total_arcs],
        in_tree: vec![false; total_arcs],
        tree_adj: vec![Vec::new(); nodes],
        root,
        parent: vec![NONE; nodes],
        pred: vec![NONE; nodes],
        depth: vec![0; nodes],
        pi: vec![T::zero(); nodes],
        order: Vec::with_capacity(nodes),
        arcs: all_arcs,
    };
    for &e in &tree_arcs {
        if e >= total_arcs || st.in_tree[e] {
            return Err(SimplexError::BadInitialTree);
        }
        st.in_tree[e] = true;
        let (f, t) = (st.arcs[e].from, st.arcs[e].to);
        st.tree_adj[f].push(e);
        st.tree_adj[t].push(e);
    }
    if !st.rebuild() {
        return Err(SimplexError::BadInitialTree);
    }

    // Tree flows: each subtree ships its net supply across its parent arc.
    let flow_tol = T::tolerance(&positive_supply) * T::of_f64(1e3);
    let mut excess = supplies.clone();
    for idx in (1..st.order.len()).rev() {
        let x = st.order[idx];
        let e = st.pred[x];
        let p = st.parent[x];
        let ex = excess[x].clone();
        let f = if st.arcs[e].from == x {
            ex.clone()
        } else {
            -ex.clone()
        };
        if f < -flow_tol.clone() {
            return Err(SimplexError::BadInitialTree);
        }
        st.flow[e] = if f < T::zero() { T::zero() } else { f };
        excess[p] = excess[p].clone() + ex;
    }

    let big_scale = if artificial {
        T::of_f64((n + 1) as f64) * (max_cost.clone() + T::one())
    } else {
        max_cost.clone()
    };
    let eps = {
        let base = T::tolerance(&max_cost);
        let drift = T::tolerance(&big_scale) * T::of_f64(2e-3);
        if drift > base {
            drift
        } else {
            base
        }
    };

    let block = ((total_arcs as f64).sqrt().ceil() as usize).max(10);
    let mut next = 0usize;
    let limit = 50 * (total_arcs + nodes).max(100) * nodes.max(1);
    let neg_eps = -eps;
    for _ in 0..limit {
        // Block pricing.
        let mut entering = NONE;
        let mut best = neg_eps.clone();
        let mut scanned = 0;
        while scanned < total_arcs {
            let end = (scanned + block).min(total_arcs);
            for _ in scanned..end {
                let e = next;
                next += 1;
                if next == total_arcs {
                    next = 0;
                }
                if st.in_tree[e] {
                    continue;
                }
                let rc = st.reduced_cost(e);
                if rc < best {
                    best = rc;
                    entering = e;
                }
            }
            scanned = end;
            if entering != NONE {
                break;
            }
        }
        if entering == NONE {
            return finish(st, m, artificial, &flow_tol);
        }

        let u = st.arcs[entering].from;
        let v = st.arcs[entering].to;
        let (mut x, mut y) = (u, v);
        while x != y {
            if st.depth[x] > st.depth[y] {
                x = st.parent[x];
            } else if st.depth[y] > st.depth[x] {
                y = st.parent[y];
            } else {
                x = st.parent[x];
                y = st.parent[y];
            }
        }
        let join = x;

        // Flow travels join -> ... -> u -> v -> ... -> join.
        let mut delta: Option<T> = None;
        let mut leave = NONE;
        let mut x = u;
        while x != join {
            let e = st.pred[x];
            if st.arcs[e].from == x {
                let f = st.flow[e].clone();
                if delta.as_ref().is_none_or(|d| f < *d) {
                    delta = Some(f);
                    leave = x;
                }
            }
            x = st.parent[x];
        }
        let mut y = v;
        while y != join {
            let e = st.pred[y];
            if st.arcs[e].to == y {
                let f = st.flow[e].clone();
                if delta.as_ref().is_none_or(|d| f <= *d) {
                    delta = Some(f);
                    leave = y;
                }
            }
            y = st.parent[y];
        }
        let Some(delta) = delta else {
            return Err(SimplexError::Unbounded);
        };

        if !delta.is_zero() {
            st.flow[entering] = st.flow[entering].clone() + delta.clone();
            let mut x = u;
            while x != join {
                let e = st.pred[x];
                st.flow[e] = if st.arcs[e].to == x {
                    st.flow[e].clone() + delta.clone()
                } else {
                    st.flow[e].clone() - delta.clone()
                };
                x = st.parent[x];
            }
            let mut y = v;
            while y != join {
                let e = st.pred[y];
                st.flow[e] = if st.arcs[e].from == y {
                    st.flow[e].clone() + delta.clone()
                } else {
                    st.flow[e].clone() - delta.clone()
                };
                y = st.parent[y];
            }
        }

        let out = st.pred[leave];
        st.in_tree[out] = false;
        for end in [st.arcs[out].from, st.arcs[out].to] {
            st.tree_adj[end].retain(|&e| e != out);
        }
        st.in_tree[entering] = true;
        st.tree_adj[u].push(entering);
        st.tree_adj[v].push(entering);
        st.rebuild();
    }
    Err(SimplexError::IterationLimit)
}

fn finish<T: Scalar>(
    st: State<T>,
    real_arcs: usize,
    artificial: bool,
    flow_tol: &T,
) -> Result<FlowSolution<T>, SimplexError> {
    if artificial && st.flow[real_arcs..].iter().any(|f| f > flow_tol) {
        return Err(SimplexError::Infeasible);
    }
    let mut objective = T::zero();
    for e in 0..real_arcs {
        if !st.flow[e].is_zero() {
            objective = objective + st.flow[e].clone() * st.arcs[e].cost.clone();
        }
    }
    let mut flows = st.flow;
    flows.truncate(real_arcs);
    let mut potentials = st.pi;
    if artificial {
        potentials.pop();
    }
    Ok(FlowSolution {
        flows,
        objective,
        potentials,
    })
}
