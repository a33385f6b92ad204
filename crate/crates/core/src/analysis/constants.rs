use serde::Serialize;

use crate::dynamics::Scenario;

/// Model constants and the derived growth/error constants of the scheme.
///
/// `c1_dep` and `c1_dep_b` are the two readings of the continuous-dependence
/// rate (without and with the factor `b` on the velocity term); `c1_cauchy`
/// and `c2_cauchy` enter the level-to-level error bound; `c2_lip` is the
/// time-Lipschitz constant at the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoremConstants {
    #[serde(rename = "L")]
    pub lip_l: f64,
    #[serde(rename = "M")]
    pub bound_m: f64,
    #[serde(rename = "h1_K")]
    pub h1_k: f64,
    #[serde(rename = "P")]
    pub mass_p: f64,
    #[serde(rename = "Q")]
    pub lip_q: f64,
    #[serde(rename = "R")]
    pub radius_r: f64,
    pub a: f64,
    pub b: f64,
    pub initial_mass: f64,
    pub horizon: f64,
    #[serde(rename = "C1_dep")]
    pub c1_dep: f64,
    #[serde(rename = "C1_dep_b")]
    pub c1_dep_b: f64,
    #[serde(rename = "C1_cauchy")]
    pub c1_cauchy: f64,
    #[serde(rename = "C2_cauchy")]
    pub c2_cauchy: f64,
    #[serde(rename = "C2_lip")]
    pub c2_lip: f64,
}

impl TheoremConstants {
    pub fn from_scenario(s: &Scenario) -> Self {
        let v = s.velocity();
        let h = s.source();
        let p = s.params();
        let mut c = TheoremConstants {
            lip_l: v.lip_l,
            bound_m: v.bound_m,
            h1_k: v.h1_k,
            mass_p: h.mass_p,
            lip_q: h.lip_q,
            radius_r: h.radius_r,
            a: p.a,
            b: p.b,
            initial_mass: s.initial().mass(),
            horizon: s.horizon(),
            c1_dep: 0.0,
            c1_dep_b: 0.0,
            c1_cauchy: 0.0,
            c2_cauchy: 0.0,
            c2_lip: 0.0,
        };
        c.c1_dep = c.dependence_rate(c.initial_mass, false);
        c.c1_dep_b = c.dependence_rate(c.initial_mass, true);
        let (l, m, k, pp, q, m0) = (
            c.lip_l,
            c.bound_m,
            c.h1_k,
            c.mass_p,
            c.lip_q,
            c.initial_mass,
        );
        c.c1_cauchy = 1.0 + 3.0 * l + (pp + m0) * (1.0 + l) + k * pp + q;
        c.c2_cauchy = 0.25 * (m * pp * (1.0 + 2.0 * k) + m0 + pp * (1.0 + c.a));
        c.c2_lip = c.time_lipschitz(c.horizon, 0.0);
        c
    }

    /// `2L + 2K(P + min_mass) + Q`, with the velocity term scaled by `b`
    /// when `with_b` is set.
    pub fn dependence_rate(&self, min_mass: f64, with_b: bool) -> f64 {
        let scale = if with_b { self.b } else { 1.0 };
        2.0 * self.lip_l + 2.0 * scale * self.h1_k * (self.mass_p + min_mass) + self.lip_q
    }

    /// `P + bM(P(t + tau) + |mu_0|)`.
    pub fn time_lipschitz(&self, t: f64, tau: f64) -> f64 {
        self.mass_p + self.b * self.bound_m * (self.mass_p * (t + tau) + self.initial_mass)
    }

    /// Slack in the time-Lipschitz estimate from evaluating it on a grid of
    /// step `dt`.
    pub fn time_lipschitz_slack(&self, dt: f64) -> f64 {
        2.0 * dt * (self.b * self.bound_m * (self.mass_p + self.initial_mass) + self.mass_p)
    }

    /// `(C2/C1)(e^{C1 T} - 1) T 2^-k`: bound on the distance between
    /// consecutive refinement levels `k` and `k + 1`.
    pub fn cauchy_bound(&self, k: u32) -> f64 {
        let growth = if self.c1_cauchy == 0.0 {
            self.horizon
        } else {
            (self.c1_cauchy * self.horizon).exp_m1() / self.c1_cauchy
        };
        self.c2_cauchy * growth * self.horizon * 0.5f64.powi(k as i32)
    }

    /// Coarsest level at which `L dt <= 1`.
    pub fn min_level(&self) -> u32 {
        (self.lip_l * self.horizon).max(1.0).log2().ceil() as u32
    }

    /// `max(support_radius(mu_0), R)`.
    pub fn initial_radius(&self, s: &Scenario) -> f64 {
        s.initial().support_radius().max(self.radius_r)
    }
}
