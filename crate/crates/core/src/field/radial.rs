//! Radial profiles g(t), t = |z|², and their exact Hessian eigenvalues.
//!
//! For u(z) = g(|z|²) the complex Hessian is g′·I + g″·z z* with
//! eigenvalues g′ (multiplicity n−1) and g′ + t·g″ (multiplicity 1).
//! The closed forms housed here are the oracles for the grid code: the
//! quadratic c·t, the logarithm ½·log t, and the power −t^{1−n/m} whose
//! σ_m vanishes identically away from the origin.

use std::sync::Arc;

use crate::error::{domain_err, Result};
use crate::field::domain::GridDomain;
use crate::field::grid::GridField;
use crate::field::hessian::radius_sq_of;
use crate::symmfunc::Spectrum;

#[derive(Clone, Debug)]
pub enum RadialProfile {
    /// g(t) = c·t, i.e. u = c|z|².
    Quadratic { c: f64 },
    /// g(t) = ½·log t, i.e. u = log|z|.
    Log,
    /// g(t) = −t^{1−n/m}; σ_m of the associated u vanishes for t > 0.
    PowerSingular { n: usize, m: usize },
    /// Tabulated profile on a t-lattice with derivatives, interpolated by
    /// cubic Hermite pieces (used for radial ODE solutions).
    Sampled {
        ts: Vec<f64>,
        g: Vec<f64>,
        dg: Vec<f64>,
        ddg: Vec<f64>,
        label: String,
    },
}

impl RadialProfile {
    pub fn label(&self) -> String {
        match self {
            RadialProfile::Quadratic { c } => format!("quad:{c}"),
            RadialProfile::Log => "log".into(),
            RadialProfile::PowerSingular { n, m } => format!("G(n={n},m={m})"),
            RadialProfile::Sampled { label, .. } => label.clone(),
        }
    }

    fn gamma(n: usize, m: usize) -> f64 {
        1.0 - n as f64 / m as f64
    }

    pub fn g(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Quadratic { c } => c * t,
            RadialProfile::Log => 0.5 * t.ln(),
            RadialProfile::PowerSingular { n, m } => {
                let gam = Self::gamma(*n, *m);
                if gam == 0.0 {
                    -1.0
                } else {
                    -t.powf(gam)
                }
            }
            RadialProfile::Sampled { .. } => self.hermite(t, 0),
        }
    }

    pub fn g1(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Quadratic { c } => *c,
            RadialProfile::Log => 0.5 / t,
            RadialProfile::PowerSingular { n, m } => {
                let gam = Self::gamma(*n, *m);
                if gam == 0.0 {
                    0.0
                } else {
                    -gam * t.powf(gam - 1.0)
                }
            }
            RadialProfile::Sampled { .. } => self.hermite(t, 1),
        }
    }

    pub fn g2(&self, t: f64) -> f64 {
        match self {
            RadialProfile::Quadratic { .. } => 0.0,
            RadialProfile::Log => -0.5 / (t * t),
            RadialProfile::PowerSingular { n, m } => {
                let gam = Self::gamma(*n, *m);
                if gam == 0.0 {
                    0.0
                } else {
                    -gam * (gam - 1.0) * t.powf(gam - 2.0)
                }
            }
            RadialProfile::Sampled { .. } => self.hermite(t, 2),
        }
    }

    /// Piecewise-cubic Hermite evaluation for sampled profiles:
    /// order 0 interpolates (g, dg), order 1 interpolates (dg, ddg),
    /// order 2 interpolates ddg linearly.
    fn hermite(&self, t: f64, order: usize) -> f64 {
        let RadialProfile::Sampled { ts, g, dg, ddg, .. } = self else {
            unreachable!()
        };
        let n = ts.len();
        let i = match ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let (t0, t1) = (ts[i], ts[i + 1]);
        let dt = t1 - t0;
        let s = ((t - t0) / dt).clamp(0.0, 1.0);
        let cubic = |f0: f64, f1: f64, d0: f64, d1: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * f0
                + (s3 - 2.0 * s2 + s) * dt * d0
                + (-2.0 * s3 + 3.0 * s2) * f1
                + (s3 - s2) * dt * d1
        };
        match order {
            0 => cubic(g[i], g[i + 1], dg[i], dg[i + 1]),
            1 => cubic(dg[i], dg[i + 1], ddg[i], ddg[i + 1]),
            2 => ddg[i] * (1.0 - s) + ddg[i + 1] * s,
            _ => unreachable!(),
        }
    }

    /// Max abs deviation of (g1 vs central differences of g, g2 vs
    /// central differences of g1) over the probe points.
    pub fn fd_consistency(&self, probes: &[f64], eps: f64) -> (f64, f64) {
        let mut e1: f64 = 0.0;
        let mut e2: f64 = 0.0;
        for &t in probes {
            let fd1 = (self.g(t + eps) - self.g(t - eps)) / (2.0 * eps);
            let fd2 = (self.g1(t + eps) - self.g1(t - eps)) / (2.0 * eps);
            e1 = e1.max((fd1 - self.g1(t)).abs());
            e2 = e2.max((fd2 - self.g2(t)).abs());
        }
        (e1, e2)
    }

    /// Samples u(z) = g(|z|²) on a domain.
    pub fn sample(&self, domain: Arc<GridDomain>) -> GridField {
        GridField::from_fn(domain, |p| self.g(radius_sq_of(p)))
    }
}

/// Exact eigenvalues of the complex Hessian of g(|z|²) at radius² = t:
/// g′(t) with multiplicity n−1 and g′(t) + t·g″(t) with multiplicity 1.
pub fn radial_hessian_eigenvalues(profile: &RadialProfile, t: f64, n: usize) -> Result<Spectrum> {
    if !(t > 0.0) {
        return domain_err("radial eigenvalues need t > 0");
    }
    let g1 = profile.g1(t);
    let top = g1 + t * profile.g2(t);
    let mut vals = vec![g1; n - 1];
    vals.push(top);
    Spectrum::new(vals)
}
