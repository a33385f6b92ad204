//! Flow maps of frozen velocity fields.

use rayon::prelude::*;

use super::velocity::FrozenField;
use super::DynamicsError;
use crate::measure::SignedMeasure;

/// Default number of RK4 substeps per flow evaluation for kernel fields.
pub const DEFAULT_SUBSTEPS: usize = 4;

/// Above this many atoms, push-forwards integrate atoms in parallel.
const PARALLEL_ATOMS: usize = 4096;

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0.0 {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

/// Matrix exponential by scaling and squaring of a Taylor polynomial.
pub fn expm(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| m[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let a: Vec<Vec<f64>> = m
        .iter()
        .map(|r| r.iter().map(|v| v * scale).collect())
        .collect();
    let mut result: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut term = result.clone();
    for k in 1..=20 {
        term = mat_mul(&term, &a);
        let inv = 1.0 / k as f64;
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

/// A flow map `x -> Phi_tau(x)` ready to apply to many points.
pub enum FlowMap<'a> {
    Identity,
    Translate(Vec<f64>),
    /// `x -> E x + e` from the exponential of the augmented generator.
    Affine(Vec<Vec<f64>>, Vec<f64>),
    Rk4 {
        field: &'a FrozenField,
        tau: f64,
        substeps: usize,
    },
}

impl<'a> FlowMap<'a> {
    pub fn new(field: &'a FrozenField, tau: f64, substeps: usize) -> Self {
        if tau == 0.0 || field.is_zero() {
            return FlowMap::Identity;
        }
        match field {
            FrozenField::Constant(c) => FlowMap::Translate(c.iter().map(|v| v * tau).collect()),
            FrozenField::Linear { matrix, offset } => {
                let d = offset.len();
                let mut gen = vec![vec![0.0; d + 1]; d + 1];
                for i in 0..d {
                    for j in 0..d {
                        gen[i][j] = tau * matrix[i][j];
                    }
                    gen[i][d] = tau * offset[i];
                }
                let e = expm(&gen);
                let lin = (0..d).map(|i| e[i][..d].to_vec()).collect();
                let shift = (0..d).map(|i| e[i][d]).collect();
                FlowMap::Affine(lin, shift)
            }
            FrozenField::Kernel(_) => FlowMap::Rk4 {
                field,
                tau,
                substeps: substeps.max(1),
            },
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            FlowMap::Identity => out.copy_from_slice(x),
            FlowMap::Translate(s) => {
                for ((o, xi), si) in out.iter_mut().zip(x).zip(s) {
                    *o = xi + si;
                }
            }
            FlowMap::Affine(e, shift) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = shift[i] + e[i].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            FlowMap::Rk4 {
                field,
                tau,
                substeps,
            } => rk4(field, x, *tau, *substeps, out),
        }
    }
}

fn rk4(field: &FrozenField, x: &[f64], tau: f64, substeps: usize, out: &mut [f64]) {
    let d = x.len();
    let h = tau / substeps as f64;
    out.copy_from_slice(x);
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for _ in 0..substeps {
        field.eval(out, &mut k1);
        for i in 0..d {
            tmp[i] = out[i] + 0.5 * h * k1[i];
        }
        field.eval(&tmp, &mut k2);
        for i in 0..d {
            tmp[i] = out[i] + 0.5 * h * k2[i];
        }
        field.eval(&tmp, &mut k3);
        for i in 0..d {
            tmp[i] = out[i] + h * k3[i];
        }
        field.eval(&tmp, &mut k4);
        for i in 0..d {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// `Phi_tau(x)` for the frozen field.
pub fn flow_map(
    field: &FrozenField,
    x: &[f64],
    tau: f64,
    substeps: usize,
) -> Result<Vec<f64>, DynamicsError> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(DynamicsError::InvalidScenario(format!(
            "flow time must be finite and nonnegative, got {tau}"
        )));
    }
    let mut out = vec![0.0; x.len()];
    FlowMap::new(field, tau, substeps).apply(x, &mut out);
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(DynamicsError::NonFinite)
    }
}

/// `Phi_tau # mu`.
pub fn push_through(
    mu: &SignedMeasure,
    field: &FrozenField,
    tau: f64,
    substeps: usize,
) -> Result<SignedMeasure, DynamicsError> {
    let map = FlowMap::new(field, tau, substeps);
    if matches!(map, FlowMap::Identity) {
        return Ok(mu.clone());
    }
    let d = mu.dim();
    let src = mu.flat_positions();
    let mut out = vec![0.0; src.len()];
    if mu.len() >= PARALLEL_ATOMS {
        out.par_chunks_mut(d)
            .zip(src.par_chunks(d))
            .for_each(|(y, x)| map.apply(x, y));
    } else {
        for (y, x) in out.chunks_mut(d).zip(src.chunks(d)) {
            map.apply(x, y);
        }
    }
    if !out.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    Ok(SignedMeasure::from_flat(d, out, mu.weights().to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_flows() {
        let c = FrozenField::Constant(vec![1.0]);
        assert_eq!(flow_map(&c, &[0.0], 0.5, 4).unwrap(), vec![0.5]);
        let zero = FrozenField::Constant(vec![0.0, 0.0]);
        assert_eq!(
            flow_map(&zero, &[0.3, -1.0], 2.0, 4).unwrap(),
            vec![0.3, -1.0]
        );
        let decay = FrozenField::Linear {
            matrix: vec![vec![-1.0]],
            offset: vec![0.0],
        };
        for t in [0.1, 1.0, 3.0] {
            let y = flow_map(&decay, &[1.0], t, 4).unwrap()[0];
            assert!((y - (-t).exp()).abs() < 1e-14, "{t}: {y}");
        }
    }

    #[test]
    fn affine_flow_with_offset() {
        // x' = 2x + 1 from x0 = 0.5: x(t) = (x0 + 1/2) e^{2t} - 1/2.
        let f = FrozenField::Linear {
            matrix: vec![vec![2.0]],
            offset: vec![1.0],
        };
        let y = flow_map(&f, &[0.5], 0.7, 4).unwrap()[0];
        assert!((y - ((1.4f64).exp() - 0.5)).abs() < 1e-13);
        // Rotation in the plane.
        let rot = FrozenField::Linear {
            matrix: vec![vec![0.0, -1.0], vec![1.0, 0.0]],
            offset: vec![0.0, 0.0],
        };
        let y = flow_map(&rot, &[1.0, 0.0], std::f64::consts::FRAC_PI_2, 4).unwrap();
        assert!(y[0].abs() < 1e-14 && (y[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_time_rejected() {
        assert!(flow_map(&FrozenField::Constant(vec![1.0]), &[0.0], -1.0, 4).is_err());
    }
}
