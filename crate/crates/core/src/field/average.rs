//! Ball averages, the Laplacian-approximating operator T_ε, and
//! mollification.
//!
//! All three are stencil sums over the integer offsets whose cell
//! centers fall in the Euclidean ε-ball. The ball average uses uniform
//! weights; mollification uses the C² bump (1 − (r/ε)²)³. Weights are
//! normalized to unit sum on the grid, so constants are reproduced
//! exactly.

use crate::error::{domain_err, Result};
use crate::field::domain::{DomainKind, GridDomain, PointClass};
use crate::field::grid::GridField;

struct Stencil {
    deltas: Vec<Vec<isize>>,
    flat_deltas: Vec<isize>,
    weights: Vec<f64>,
    /// Σ w_d |d·h|² — the discrete second moment of the stencil.
    moment2: f64,
    rad_cells: isize,
}

fn build_stencil(dom: &GridDomain, eps: f64, bump: bool) -> Result<Stencil> {
    let h = dom.spacing();
    if !(eps >= 2.0 * h * (1.0 - 1e-12)) {
        return domain_err(format!("averaging radius {eps} below 2h = {}", 2.0 * h));
    }
    let axes = dom.axes();
    let rad_cells = (eps / h * (1.0 + 1e-12)).floor() as isize;
    if dom.kind() == DomainKind::Torus && 2 * rad_cells + 1 > dom.shape()[0] as isize {
        return domain_err("averaging radius exceeds half the torus period");
    }
    let r2 = eps * eps * (1.0 + 1e-12);
    let mut deltas = Vec::new();
    let mut flat_deltas = Vec::new();
    let mut weights = Vec::new();
    let mut d = vec![-rad_cells; axes];
    'outer: loop {
        let dist2: f64 = d.iter().map(|&x| (x as f64 * h).powi(2)).sum();
        if dist2 <= r2 {
            let w = if bump {
                let s = dist2 / (eps * eps);
                if s < 1.0 {
                    (1.0 - s).powi(3)
                } else {
                    0.0
                }
            } else {
                1.0
            };
            if w > 0.0 {
                let flat: isize = d
                    .iter()
                    .zip(dom.strides())
                    .map(|(&x, &s)| x * s as isize)
                    .sum();
                deltas.push(d.clone());
                flat_deltas.push(flat);
                weights.push(w);
            }
        }
        // odometer over [-rad, rad]^axes
        let mut a = 0;
        loop {
            if a == axes {
                break 'outer;
            }
            d[a] += 1;
            if d[a] <= rad_cells {
                break;
            }
            d[a] = -rad_cells;
            a += 1;
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut moment2 = 0.0;
    for (dd, w) in deltas.iter().zip(&weights) {
        let dist2: f64 = dd.iter().map(|&x| (x as f64 * h).powi(2)).sum();
        moment2 += w * dist2;
    }
    Ok(Stencil {
        deltas,
        flat_deltas,
        weights,
        moment2,
        rad_cells,
    })
}

/// Weighted stencil sum over interior points whose full stencil lands on
/// points accepted by `accept`. Non-admissible points stay NaN.
fn apply_stencil(
    u: &GridField,
    st: &Stencil,
    accept: impl Fn(PointClass) -> bool,
) -> Result<GridField> {
    let dom = u.domain().clone();
    let axes = dom.axes();
    let vals = u.values();
    let mut out = vec![f64::NAN; dom.points()];
    let torus = dom.kind() == DomainKind::Torus;
    let mut idx = vec![0usize; axes];
    let mut any = false;
    for &f in dom.interior() {
        let flat = f as usize;
        dom.indices(flat, &mut idx);
        if !torus {
            let margin_ok = (0..axes).all(|a| {
                idx[a] as isize >= st.rad_cells
                    && idx[a] as isize + st.rad_cells <= dom.shape()[a] as isize - 1
            });
            if !margin_ok {
                continue;
            }
            let mut acc = 0.0;
            let mut ok = true;
            for (k, &fd) in st.flat_deltas.iter().enumerate() {
                let target = (flat as isize + fd) as usize;
                if !accept(dom.classify(target)) {
                    ok = false;
                    break;
                }
                acc += st.weights[k] * vals[target];
            }
            if ok {
                out[flat] = acc;
                any = true;
            }
        } else {
            let mut acc = 0.0;
            for (k, dd) in st.deltas.iter().enumerate() {
                let mut target = 0usize;
                for a in 0..axes {
                    let s = dom.shape()[a] as isize;
                    let wrapped = (idx[a] as isize + dd[a]).rem_euclid(s) as usize;
                    target += wrapped * dom.strides()[a];
                }
                acc += st.weights[k] * vals[target];
            }
            out[flat] = acc;
            any = true;
        }
    }
    if !any {
        return domain_err("no interior point has the required averaging margin");
    }
    GridField::from_values(dom, out)
}

/// Mean of u over the Euclidean ε-ball (cell-center membership rule,
/// weights normalized to unit sum). Defined at interior points whose
/// whole stencil is interior; NaN elsewhere.
pub fn ball_average(u: &GridField, eps: f64) -> Result<GridField> {
    let st = build_stencil(u.domain(), eps, false)?;
    apply_stencil(u, &st, |c| c == PointClass::Interior)
}

/// The Laplacian-approximating operator built from the ball average.
///
/// Classically T_ε = (n+1)/ε² (u_(ε) − u); here the divisor is the
/// discrete second moment of the actual stencil, T = n·(u_(ε) − u)/μ₂ʰ
/// with μ₂ʰ = Σ w_d |d·h|². Since μ₂ʰ → ε²·n/(n+1) as h → 0 the two
/// normalizations agree in the limit, and the discrete one makes T exact
/// on quadratics: T(|z|²) = n identically, independent of how the ball
/// is resolved. For smooth u, T_ε(u) → Σ_j u_{z_j z̄_j} at rate O(ε²).
pub fn t_epsilon(u: &GridField, eps: f64) -> Result<GridField> {
    let st = build_stencil(u.domain(), eps, false)?;
    let averaged = apply_stencil(u, &st, |c| c == PointClass::Interior)?;
    let n = u.domain().n() as f64;
    let scale = n / st.moment2;
    averaged.combine(u, scale, -scale)
}

/// Convolution with the radially symmetric C² bump (1 − (r/ε)²)³ of
/// radius ε, normalized to unit mass on the grid. The stencil may use
/// boundary values; points without an ε-margin inside interior ∪
/// boundary stay NaN.
pub fn mollify(u: &GridField, eps: f64) -> Result<GridField> {
    let st = build_stencil(u.domain(), eps, true)?;
    apply_stencil(u, &st, |c| c != PointClass::Exterior)
}

/// Discrete second moment of the uniform ε-ball stencil (test oracle and
/// calibration constant).
pub fn ball_second_moment(dom: &GridDomain, eps: f64) -> Result<f64> {
    Ok(build_stencil(dom, eps, false)?.moment2)
}

/// Discrete second moment of the mollifier stencil.
pub fn bump_second_moment(dom: &GridDomain, eps: f64) -> Result<f64> {
    Ok(build_stencil(dom, eps, true)?.moment2)
}
