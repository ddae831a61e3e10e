//! Discrete complex Hessians on grid fields.
//!
//! Second derivatives use the 3-point stencil, mixed ones the 4-point
//! cross stencil, both O(h²). The Hessian entry is
//! u_{z_j z̄_k} = ¼[(∂_{x_j x_k} + ∂_{y_j y_k})u + i(∂_{x_j y_k} − ∂_{y_j x_k})u],
//! assembled directly in Hermitian form. Quadratic polynomials are
//! reproduced exactly.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{domain_err, Result};
use crate::field::domain::{DomainKind, GridDomain};
use crate::field::grid::GridField;
use crate::hermlin::HermitianMatrix;
use crate::symmfunc::binomial;

/// Density normalization: `Raw` is σ_m itself, `Form` carries the wedge
/// factor m!(n−m)!/n! that converts σ_m into the coefficient of the
/// volume form. Every report states which one is in force.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    Form,
}

impl Normalization {
    pub fn factor(&self, n: usize, m: usize) -> f64 {
        match self {
            Normalization::Raw => 1.0,
            Normalization::Form => {
                // m!(n-m)!/n! = 1/C(n,m)
                1.0 / binomial(n, m)
            }
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::Form => "form",
        }
    }
}

#[inline]
fn shifted(dom: &GridDomain, flat: usize, axis: usize, step: isize) -> usize {
    if dom.kind() == DomainKind::Torus {
        dom.neighbor(flat, axis, step).unwrap()
    } else {
        (flat as isize + step * dom.strides()[axis] as isize) as usize
    }
}

#[inline]
fn second_diff(dom: &GridDomain, v: &[f64], flat: usize, axis: usize, inv_h2: f64) -> f64 {
    let p = v[shifted(dom, flat, axis, 1)];
    let m = v[shifted(dom, flat, axis, -1)];
    (p + m - 2.0 * v[flat]) * inv_h2
}

#[inline]
fn cross_diff(
    dom: &GridDomain,
    v: &[f64],
    flat: usize,
    a: usize,
    b: usize,
    inv_4h2: f64,
) -> f64 {
    let pp = v[shifted(dom, shifted(dom, flat, a, 1), b, 1)];
    let mm = v[shifted(dom, shifted(dom, flat, a, -1), b, -1)];
    let pm = v[shifted(dom, shifted(dom, flat, a, 1), b, -1)];
    let mp = v[shifted(dom, shifted(dom, flat, a, -1), b, 1)];
    (pp + mm - pm - mp) * inv_4h2
}

/// Complex Hessian of `u` at one interior point; None when the stencil
/// touches a non-finite sample.
pub fn hessian_at(u: &GridField, flat: usize) -> Option<HermitianMatrix> {
    let dom = u.domain();
    let v = u.values();
    let n = dom.n();
    let h = dom.spacing();
    let inv_h2 = 1.0 / (h * h);
    let inv_4h2 = 0.25 * inv_h2;
    let mut ok = true;
    let mat = HermitianMatrix::from_upper(n, |j, k| {
        let (xj, yj) = (2 * j, 2 * j + 1);
        let (xk, yk) = (2 * k, 2 * k + 1);
        let e = if j == k {
            let re = 0.25 * (second_diff(dom, v, flat, xj, inv_h2) + second_diff(dom, v, flat, yj, inv_h2));
            Complex64::new(re, 0.0)
        } else {
            let re = 0.25 * (cross_diff(dom, v, flat, xj, xk, inv_4h2) + cross_diff(dom, v, flat, yj, yk, inv_4h2));
            let im = 0.25 * (cross_diff(dom, v, flat, xj, yk, inv_4h2) - cross_diff(dom, v, flat, yj, xk, inv_4h2));
            Complex64::new(re, im)
        };
        if !e.re.is_finite() || !e.im.is_finite() {
            ok = false;
        }
        e
    });
    if ok {
        Some(mat)
    } else {
        None
    }
}

/// The complex Hessian at every interior point. Entries are None where
/// the stencil touched a non-finite sample (only possible for partially
/// defined fields).
pub struct HessianField {
    domain: Arc<GridDomain>,
    mats: Vec<Option<HermitianMatrix>>,
}

impl HessianField {
    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    /// Matrix at the i-th interior point (aligned with `domain.interior()`).
    pub fn at_interior_index(&self, i: usize) -> Option<&HermitianMatrix> {
        self.mats[i].as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Option<&HermitianMatrix>)> {
        self.domain
            .interior()
            .iter()
            .copied()
            .zip(self.mats.iter().map(|m| m.as_ref()))
    }

    pub fn at_flat(&self, flat: u32) -> Option<&HermitianMatrix> {
        let pos = self.domain.interior().binary_search(&flat).ok()?;
        self.mats[pos].as_ref()
    }
}

/// Assembles the full Hessian field of `u`.
pub fn complex_hessian(u: &GridField) -> Result<HessianField> {
    let dom = u.domain().clone();
    let mats: Vec<Option<HermitianMatrix>> = dom
        .interior()
        .iter()
        .map(|&f| hessian_at(u, f as usize))
        .collect();
    if !mats.is_empty() && mats.iter().all(|m| m.is_none()) {
        return domain_err("no interior point has a complete Hessian stencil");
    }
    Ok(HessianField { domain: dom, mats })
}

/// σ_m of the eigenvalues of (shift·I + complex Hessian) at one point.
#[inline]
pub(crate) fn point_sigma(u: &GridField, flat: usize, m: usize, shift: f64) -> f64 {
    match hessian_at(u, flat) {
        Some(mat) => {
            let mat = if shift != 0.0 {
                mat.add(&HermitianMatrix::identity(mat.dim()).scale(shift))
            } else {
                mat
            };
            mat.minor_sums()[m]
        }
        None => f64::NAN,
    }
}

/// The density field S_m(λ(Hu)) with the selected normalization. NaN at
/// exterior/boundary points and wherever the stencil is incomplete.
pub fn hessian_density(u: &GridField, m: usize, norm: Normalization) -> Result<GridField> {
    shifted_hessian_density(u, m, norm, 0.0)
}

/// Same as [`hessian_density`] for the shifted operator shift·I + Hu
/// (shift = 1 is the metric form on the flat torus).
pub fn shifted_hessian_density(
    u: &GridField,
    m: usize,
    norm: Normalization,
    shift: f64,
) -> Result<GridField> {
    let dom = u.domain().clone();
    let n = dom.n();
    if m < 1 || m > n {
        return domain_err(format!("density degree {m} out of range for n={n}"));
    }
    let factor = norm.factor(n, m);
    let mut values = vec![f64::NAN; dom.points()];
    for &f in dom.interior() {
        values[f as usize] = factor * point_sigma(u, f as usize, m, shift);
    }
    GridField::from_values(dom, values)
}

/// Interior points where the eigenvalues of (shift·I + Hu) leave the
/// closed cone Γ_m with slack `tol` (that is, some S_k ≤ −tol). An empty
/// list certifies discrete m-subharmonicity at that margin. Points whose
/// stencil is incomplete are skipped.
pub fn shifted_msh_certificate(
    u: &GridField,
    m: usize,
    tol: f64,
    shift: f64,
) -> Result<Vec<u32>> {
    let dom = u.domain();
    let n = dom.n();
    if m < 1 || m > n {
        return domain_err(format!("certificate degree {m} out of range for n={n}"));
    }
    let mut bad = Vec::new();
    for &f in dom.interior() {
        if let Some(mat) = hessian_at(u, f as usize) {
            let mat = if shift != 0.0 {
                mat.add(&HermitianMatrix::identity(n).scale(shift))
            } else {
                mat
            };
            let s = mat.minor_sums();
            if s[1..=m].iter().any(|&v| v <= -tol) {
                bad.push(f);
            }
        }
    }
    Ok(bad)
}

/// Certificate for the plain Hessian (see [`shifted_msh_certificate`]).
pub fn msh_certificate(u: &GridField, m: usize, tol: f64) -> Result<Vec<u32>> {
    shifted_msh_certificate(u, m, tol, 0.0)
}

/// Evaluates |z|² on grid positions (shared convenience).
pub fn radius_sq_of(pos: &[f64]) -> f64 {
    pos.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::domain::GridDomain;

    #[test]
    fn quadratic_is_exact_identity() {
        for n in 1..=3usize {
            let dom = GridDomain::box_on(n, 7, -1.0, 1.0).unwrap();
            let u = GridField::from_fn(dom.clone(), radius_sq_of);
            for &f in dom.interior() {
                let h = hessian_at(&u, f as usize).unwrap();
                for j in 0..n {
                    for k in 0..n {
                        let want = if j == k { 1.0 } else { 0.0 };
                        let got = h.get(j, k);
                        assert!(
                            (got - Complex64::new(want, 0.0)).norm() < 1e-12,
                            "n={n} ({j},{k}) -> {got}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn pluriharmonic_has_zero_hessian() {
        // Re(z_1²) = x² − y²
        let dom = GridDomain::box_on(2, 7, -1.0, 1.0).unwrap();
        let u = GridField::from_fn(dom.clone(), |p| p[0] * p[0] - p[1] * p[1]);
        for &f in dom.interior() {
            let h = hessian_at(&u, f as usize).unwrap();
            for j in 0..2 {
                for k in 0..2 {
                    assert!(h.get(j, k).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixed_entries_match_closed_forms() {
        // u = Re(z_1 z̄_2): H_12 = 1/2. u = Im(z_1 z̄_2): H_12 = −i/2.
        let dom = GridDomain::box_on(2, 7, -1.0, 1.0).unwrap();
        let re = GridField::from_fn(dom.clone(), |p| p[0] * p[2] + p[1] * p[3]);
        let im = GridField::from_fn(dom.clone(), |p| p[1] * p[2] - p[0] * p[3]);
        let f = dom.interior()[dom.interior().len() / 2] as usize;
        let hre = hessian_at(&re, f).unwrap();
        let him = hessian_at(&im, f).unwrap();
        assert!((hre.get(0, 1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((him.get(0, 1) - Complex64::new(0.0, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn density_of_scaled_quadratic() {
        for n in 1..=3usize {
            for m in 1..=n {
                let c = 0.7;
                let dom = GridDomain::box_on(n, 5, -1.0, 1.0).unwrap();
                let u = GridField::from_fn(dom.clone(), |p| c * radius_sq_of(p));
                let d = hessian_density(&u, m, Normalization::Raw).unwrap();
                let want = binomial(n, m) * c.powi(m as i32);
                for &f in dom.interior() {
                    assert!((d.value(f as usize) - want).abs() < 1e-11, "n={n} m={m}");
                }
                // the form normalization divides by C(n,m)
                let df = hessian_density(&u, m, Normalization::Form).unwrap();
                for &f in dom.interior() {
                    assert!((df.value(f as usize) - c.powi(m as i32)).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn trace_density_is_discrete_laplacian() {
        // m = 1: density = Σ u_{z_j z̄_j} = ¼ Δ_{2n} u
        let dom = GridDomain::box_on(2, 9, -1.0, 1.0).unwrap();
        let u = GridField::from_fn(dom.clone(), |p| {
            (p[0] * 1.3).sin() + 0.5 * (p[2] + 0.2 * p[3]).cos() + p[1] * p[1]
        });
        let d = hessian_density(&u, 1, Normalization::Raw).unwrap();
        let h = dom.spacing();
        for &f in dom.interior() {
            let mut lap = 0.0;
            for a in 0..dom.axes() {
                let p = u.value((f as isize + dom.strides()[a] as isize) as usize);
                let m_ = u.value((f as isize - dom.strides()[a] as isize) as usize);
                lap += (p + m_ - 2.0 * u.value(f as usize)) / (h * h);
            }
            assert!((d.value(f as usize) - 0.25 * lap).abs() < 1e-11);
        }
    }

    #[test]
    fn certificate_flags_concave_fields() {
        let dom = GridDomain::box_on(2, 7, -1.0, 1.0).unwrap();
        let plus = GridField::from_fn(dom.clone(), radius_sq_of);
        let minus = GridField::from_fn(dom.clone(), |p| -radius_sq_of(p));
        for m in 1..=2 {
            assert!(msh_certificate(&plus, m, 0.0).unwrap().is_empty());
            assert!(!msh_certificate(&minus, m, 0.0).unwrap().is_empty());
        }
    }

    #[test]
    fn torus_hessian_wraps() {
        let dom = GridDomain::torus(1, 16).unwrap();
        let u = GridField::from_fn(dom.clone(), |p| (std::f64::consts::TAU * p[0]).cos());
        let d = hessian_density(&u, 1, Normalization::Raw).unwrap();
        // every point must evaluate (no NaN anywhere on the torus)
        for &f in dom.interior() {
            assert!(d.value(f as usize).is_finite());
        }
        // discrete second difference of cos(2πx): eigenvalue −(2/h)²sin²(πh)
        let h = dom.spacing();
        let lam = -(2.0 / h * (std::f64::consts::PI * h).sin()).powi(2);
        for &f in dom.interior() {
            let x = dom.position_vec(f as usize)[0];
            let want = 0.25 * lam * (std::f64::consts::TAU * x).cos();
            assert!((d.value(f as usize) - want).abs() < 1e-10);
        }
    }
}
