//! Bounded-Lipschitz potentials: the dual side of the signed distance.
//!
//! The program maximizes `sum_k s_k phi_k` over potentials on the sites of
//! `mu - nu` with `|phi_k| <= a` and `|phi_k - phi_l| <= b |z_k - z_l|`.
//! It is solved with a dense dictionary simplex, independently of the
//! network code used for the primal.

use super::{DualSolution, FlatNormError, NormParams};
use crate::measure::{distance, linear_combine, Point, SignedMeasure};

/// `max c.x` subject to `A x <= rhs`, `x >= 0`, with `rhs >= 0`.
struct DenseLp {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
}

impl DenseLp {
    /// Returns the optimal `x`, or `None` if the program is unbounded.
    fn solve(self) -> Option<Vec<f64>> {
        let n = self.cost.len();
        let m = self.rows.len();
        // Dictionary: x_basic[i] = rhs[i] - sum_j t[i][j] * x_nonbasic[j].
        let mut t = self.rows;
        let mut rhs = self.rhs;
        let mut obj = self.cost;
        // Labels: 0..n are structural variables, n.. are slacks.
        let mut nonbasic: Vec<usize> = (0..n).collect();
        let mut basic: Vec<usize> = (n..n + m).collect();
        let scale = obj.iter().fold(1.0_f64, |s, c| s.max(c.abs()));
        let tol = 1e-12 * scale;
        let piv_tol = 1e-12;
        let mut degenerate_run = 0usize;

        loop {
            let bland = degenerate_run > n + 10;
            let entering = if bland {
                (0..n)
                    .filter(|&j| obj[j] > tol)
                    .min_by_key(|&j| nonbasic[j])
            } else {
                (0..n)
                    .filter(|&j| obj[j] > tol)
                    .max_by(|&i, &j| obj[i].total_cmp(&obj[j]).then(j.cmp(&i)))
            };
            let Some(col) = entering else { break };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if t[i][col] > piv_tol {
                    let ratio = rhs[i] / t[i][col];
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - 1e-15 || (ratio <= best + 1e-15 && basic[i] < basic[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let (row, ratio) = leave?;
            degenerate_run = if ratio <= 1e-15 {
                degenerate_run + 1
            } else {
                0
            };

            let p = t[row][col];
            let inv = 1.0 / p;
            for v in t[row].iter_mut() {
                *v *= inv;
            }
            t[row][col] = inv;
            rhs[row] *= inv;
            let pivot_row = t[row].clone();
            let pivot_rhs = rhs[row];
            for i in 0..m {
                if i == row {
                    continue;
                }
                let f = t[i][col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if j != col {
                        t[i][j] -= f * pivot_row[j];
                    }
                }
                t[i][col] = -f * inv;
                rhs[i] = (rhs[i] - f * pivot_rhs).max(0.0);
            }
            let f = obj[col];
            for j in 0..n {
                if j != col {
                    obj[j] -= f * pivot_row[j];
                }
            }
            obj[col] = -f * inv;
            std::mem::swap(&mut basic[row], &mut nonbasic[col]);
        }

        let mut x = vec![0.0; n];
        for (i, &label) in basic.iter().enumerate() {
            if label < n {
                x[label] = rhs[i];
            }
        }
        Some(x)
    }
}

/// Dual optimum for the signed distance between `mu` and `nu`.
pub fn dual_value(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    p: NormParams,
) -> Result<(f64, DualSolution), FlatNormError> {
    let diff = linear_combine(1.0, mu, -1.0, nu)?;
    let k = diff.len();
    let sites: Vec<Point> = diff.atoms().map(|(x, _)| Point::new(x.to_vec())).collect();
    if k == 0 {
        let empty = DualSolution {
            sites,
            potentials: Vec::new(),
            value: 0.0,
        };
        return Ok((0.0, empty));
    }
    let s = diff.weights();

    // Shifted variables psi = phi + a live in [0, 2a].
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..k {
        let mut r = vec![0.0; k];
        r[i] = 1.0;
        rows.push(r);
        rhs.push(2.0 * p.a);
    }
    let one_dim = diff.dim() == 1;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            // On the line, neighbouring constraints imply all the others.
            if one_dim && i.abs_diff(j) != 1 {
                continue;
            }
            let bound = p.b * distance(diff.position(i), diff.position(j));
            // Implied by the box constraints.
            if bound >= 2.0 * p.a {
                continue;
            }
            let mut r = vec![0.0; k];
            r[i] = 1.0;
            r[j] = -1.0;
            rows.push(r);
            rhs.push(bound);
        }
    }
    let lp = DenseLp {
        rows,
        rhs,
        cost: s.to_vec(),
    };
    let psi = lp.solve().ok_or(FlatNormError::DualUnbounded)?;
    let potentials: Vec<f64> = psi.iter().map(|v| (v - p.a).clamp(-p.a, p.a)).collect();
    let value = s.iter().zip(&potentials).map(|(w, f)| w * f).sum::<f64>();
    Ok((
        value,
        DualSolution {
            sites,
            potentials,
            value,
        },
    ))
}
