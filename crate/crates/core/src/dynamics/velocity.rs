//! Velocity functionals `v[mu]` and their frozen fields.

use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::flatnorm::NormParams;
use crate::measure::{norm, SignedMeasure};

/// Lipschitz constant of the bump profile `psi(s) = (1 - s^2)^2`.
pub const BUMP_LIP: f64 = 1.539_600_717_839_002; // 8 / (3 sqrt 3)

/// Compactly supported bump `(1 - s^2)^2` on `[0, 1)`, zero beyond.
pub fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        q * q
    }
}

/// Overrides for the certified constants, e.g. to exercise the failure path
/// of the verification commands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub lip_l: f64,
    pub bound_m: f64,
    pub h1_k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocitySpec {
    /// `v(x) = c`.
    Constant { c: Vec<f64> },
    /// `v(x) = A x + offset`; bounded on the ball of radius `domain_radius`.
    Linear {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        domain_radius: f64,
    },
    /// `v[mu](x) = sum_i w_i K(x - x_i)` with
    /// `K(z) = amplitude * bump(|z| / radius) * direction`.
    Kernel {
        amplitude: f64,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mass_cap: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        certificate: Option<Certificate>,
    },
}

/// A velocity functional with certified constants: spatial Lipschitz
/// constant `lip_l`, sup bound `bound_m`, and `h1_k` bounding
/// `|v[mu] - v[nu]|` by `h1_k` times the signed distance of `mu` and `nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityModel {
    spec: VelocitySpec,
    dim: usize,
    params: NormParams,
    mass_cap: f64,
    pub lip_l: f64,
    pub bound_m: f64,
    pub h1_k: f64,
}

fn finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

impl VelocityModel {
    /// Certifies `spec` for `dim`-dimensional measures under `params`. The
    /// kernel kind is certified up to the mass cap given in `spec`, or
    /// `default_cap`.
    pub fn new(
        spec: VelocitySpec,
        dim: usize,
        params: NormParams,
        default_cap: f64,
    ) -> Result<Self, DynamicsError> {
        let invalid = |msg: &str| Err(DynamicsError::InvalidModel(msg.to_string()));
        let (lip_l, bound_m, h1_k, mass_cap) = match &spec {
            VelocitySpec::Constant { c } => {
                if c.len() != dim || !finite(c) {
                    return invalid(
                        "constant velocity must be a finite vector of the measure dimension",
                    );
                }
                (0.0, norm(c), 0.0, f64::INFINITY)
            }
            VelocitySpec::Linear {
                matrix,
                offset,
                domain_radius,
            } => {
                if matrix.len() != dim
                    || matrix.iter().any(|r| r.len() != dim || !finite(r))
                    || offset.len() != dim
                    || !finite(offset)
                {
                    return invalid(
                        "linear velocity needs a finite d x d matrix and a d-vector offset",
                    );
                }
                if !(domain_radius.is_finite() && *domain_radius >= 0.0) {
                    return invalid("domain_radius must be finite and nonnegative");
                }
                // Frobenius norm bounds the operator norm.
                let fro = matrix.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
                (fro, fro * domain_radius + norm(offset), 0.0, f64::INFINITY)
            }
            VelocitySpec::Kernel {
                amplitude,
                radius,
                direction,
                mass_cap,
                certificate,
            } => {
                if !amplitude.is_finite() || !(radius.is_finite() && *radius > 0.0) {
                    return invalid("kernel needs a finite amplitude and a positive radius");
                }
                if let Some(e) = direction {
                    if e.len() != dim || !finite(e) || (norm(e) - 1.0).abs() > 1e-12 {
                        return invalid(
                            "kernel direction must be a unit vector of the measure dimension",
                        );
                    }
                }
                let cap = mass_cap.unwrap_or(default_cap);
                if !(cap.is_finite() && cap >= 0.0) {
                    return invalid("mass cap must be finite and nonnegative");
                }
                let k = amplitude.abs();
                let lip = k * BUMP_LIP / radius;
                match certificate {
                    Some(c) => (c.lip_l, c.bound_m, c.h1_k, cap),
                    None => (
                        lip * cap,
                        k * cap,
                        f64::max(k / params.a, lip / params.b),
                        cap,
                    ),
                }
            }
        };
        Ok(VelocityModel {
            spec,
            dim,
            params,
            mass_cap,
            lip_l,
            bound_m,
            h1_k,
        })
    }

    pub fn spec(&self) -> &VelocitySpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mass_cap(&self) -> f64 {
        self.mass_cap
    }

    pub fn params(&self) -> NormParams {
        self.params
    }

    /// True when the field does not depend on the measure.
    pub fn is_local(&self) -> bool {
        !matches!(self.spec, VelocitySpec::Kernel { .. })
    }

    /// Freezes `v[mu]` into a field of `x` alone.
    pub fn freeze(&self, mu: &SignedMeasure) -> Result<FrozenField, DynamicsError> {
        if mu.dim() != self.dim {
            return Err(DynamicsError::DimensionMismatch {
                expected: self.dim,
                found: mu.dim(),
            });
        }
        Ok(match &self.spec {
            VelocitySpec::Constant { c } => FrozenField::Constant(c.clone()),
            VelocitySpec::Linear { matrix, offset, .. } => FrozenField::Linear {
                matrix: matrix.clone(),
                offset: offset.clone(),
            },
            VelocitySpec::Kernel {
                amplitude,
                radius,
                direction,
                ..
            } => {
                let mass = mu.mass();
                if mass > self.mass_cap * (1.0 + 1e-12) {
                    return Err(DynamicsError::MassCapExceeded {
                        mass,
                        cap: self.mass_cap,
                    });
                }
                let mut dir = direction.clone().unwrap_or_else(|| vec![0.0; self.dim]);
                if direction.is_none() {
                    dir[0] = 1.0;
                }
                FrozenField::Kernel(KernelField::new(mu, *amplitude, *radius, dir))
            }
        })
    }

    /// `v[mu](x)`, after checking that `params` are the ones the model was
    /// certified for.
    pub fn eval(
        &self,
        mu: &SignedMeasure,
        x: &[f64],
        params: NormParams,
    ) -> Result<Vec<f64>, DynamicsError> {
        if params != self.params {
            return Err(DynamicsError::ParamsMismatch);
        }
        if x.len() != self.dim {
            return Err(DynamicsError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let field = self.freeze(mu)?;
        let mut out = vec![0.0; self.dim];
        field.eval(x, &mut out);
        Ok(out)
    }
}

/// A velocity field of position only.
#[derive(Clone, Debug)]
pub enum FrozenField {
    Constant(Vec<f64>),
    Linear {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    Kernel(KernelField),
}

impl FrozenField {
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            FrozenField::Constant(c) => out.copy_from_slice(c),
            FrozenField::Linear { matrix, offset } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = offset[i] + matrix[i].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            FrozenField::Kernel(k) => k.eval(x, out),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FrozenField::Constant(c) => c.iter().all(|v| *v == 0.0),
            FrozenField::Linear { matrix, offset } => {
                matrix.iter().flatten().chain(offset).all(|v| *v == 0.0)
            }
            FrozenField::Kernel(k) => k.amplitude == 0.0 || k.weights.is_empty(),
        }
    }
}

/// Convolution of a measure with the bump kernel.
///
/// In one dimension the field is a quartic polynomial in `x - y_i` on the
/// window `|x - y_i| < r`, so prefix sums of the moments `w_i (y_i - c)^j`,
/// `j = 0..4`, give each evaluation in O(log n). Sorted atoms are grouped
/// into bins narrower than `r`, each with its own center `c` and running
/// sums, which keeps the moment expansion well conditioned; a window meets
/// at most three bins.
#[derive(Clone, Debug)]
pub struct KernelField {
    amplitude: f64,
    radius: f64,
    direction: Vec<f64>,
    dim: usize,
    positions: Vec<f64>,
    weights: Vec<f64>,
    /// Bin of each atom.
    bin_of: Vec<usize>,
    /// First atom index and center of each bin.
    bins: Vec<(usize, f64)>,
    /// Running moment sums within the bin, inclusive of the atom.
    cumulative: Vec<[f64; 5]>,
}

impl KernelField {
    fn new(mu: &SignedMeasure, amplitude: f64, radius: f64, direction: Vec<f64>) -> Self {
        let dim = mu.dim();
        let positions = mu.flat_positions().to_vec();
        let weights = mu.weights().to_vec();
        let mut bin_of = Vec::new();
        let mut bins: Vec<(usize, f64)> = Vec::new();
        let mut cumulative = Vec::new();
        if dim == 1 {
            bin_of.reserve(weights.len());
            cumulative.reserve(weights.len());
            let mut i = 0;
            while i < positions.len() {
                let start = i;
                let left = positions[start];
                while i < positions.len() && positions[i] - left < radius {
                    i += 1;
                }
                let center = 0.5 * (left + positions[i - 1]);
                let b = bins.len();
                bins.push((start, center));
                let mut acc = [0.0; 5];
                for j in start..i {
                    let d = positions[j] - center;
                    let mut p = weights[j];
                    for slot in acc.iter_mut() {
                        *slot += p;
                        p *= d;
                    }
                    cumulative.push(acc);
                    bin_of.push(b);
                }
            }
        }
        KernelField {
            amplitude,
            radius,
            direction,
            dim,
            positions,
            weights,
            bin_of,
            bins,
            cumulative,
        }
    }

    /// Sum of `w_i bump(|x - y_i| / r)` over atoms `lo..hi` of one bin.
    fn bin_sum(&self, x: f64, b: usize, lo: usize, hi: usize) -> f64 {
        let (start, center) = self.bins[b];
        let upper = self.cumulative[hi - 1];
        let s: [f64; 5] = if lo > start {
            let lower = self.cumulative[lo - 1];
            std::array::from_fn(|j| upper[j] - lower[j])
        } else {
            upper
        };
        let xc = x - center;
        let x2 = xc * xc;
        let m2 = x2 * s[0] - 2.0 * xc * s[1] + s[2];
        let m4 = x2 * x2 * s[0] - 4.0 * x2 * xc * s[1] + 6.0 * x2 * s[2] - 4.0 * xc * s[3] + s[4];
        let r2 = self.radius * self.radius;
        s[0] - 2.0 * m2 / r2 + m4 / (r2 * r2)
    }

    fn scalar_1d(&self, x: f64) -> f64 {
        let r = self.radius;
        // Canonical positions are sorted, so the window is a contiguous range.
        let lo = self.positions.partition_point(|&y| y <= x - r);
        let hi = self.positions.partition_point(|&y| y < x + r);
        let mut total = 0.0;
        let mut i = lo;
        while i < hi {
            let b = self.bin_of[i];
            let bin_end = self.bins.get(b + 1).map_or(self.positions.len(), |n| n.0);
            let end = bin_end.min(hi);
            total += self.bin_sum(x, b, i, end);
            i = end;
        }
        total
    }

    fn scalar_direct(&self, x: &[f64]) -> f64 {
        self.positions
            .chunks_exact(self.dim)
            .zip(&self.weights)
            .map(|(y, w)| {
                let d = crate::measure::distance(x, y);
                w * bump(d / self.radius)
            })
            .sum()
    }

    /// Direct summation, used to cross-check the windowed evaluation.
    pub fn eval_direct(&self, x: &[f64], out: &mut [f64]) {
        let s = self.amplitude * self.scalar_direct(x);
        for (o, e) in out.iter_mut().zip(&self.direction) {
            *o = s * e;
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let s = if self.dim == 1 {
            self.amplitude * self.scalar_1d(x[0])
        } else {
            self.amplitude * self.scalar_direct(x)
        };
        for (o, e) in out.iter_mut().zip(&self.direction) {
            *o = s * e;
        }
    }
}
