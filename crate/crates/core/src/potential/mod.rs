//! Capacity and the estimate-verification harness: relative extremal
//! functions, volume–capacity frontiers, comparison principles, the two
//! stability measurements, equicontinuity probes, and the interior
//! Laplacian bound built from T_ε.
//!
//! All Hessian masses integrated here use the form normalization
//! (m!(n−m)!/n!)·σ_m so that capacity numbers are comparable across m;
//! every report states the normalization.

pub mod report;

use std::sync::Arc;

use crate::error::{domain_err, Result};
use crate::field::average::t_epsilon;
use crate::field::domain::{GridDomain, PointClass};
use crate::field::grid::GridField;
use crate::field::hessian::{hessian_at, hessian_density, Normalization};
use crate::hermlin::{cominor_matrix, trace_product};
use crate::solver::{maximal_solution, solve_dirichlet, SolveConfig, SolveReport};

pub use report::{ExperimentReport, SummaryLine};

/// Two-sided capacity report: `lower` is the best value over the
/// candidate family, `extremal` the mass of the relative extremal
/// function. Both use the form-normalized density.
#[derive(Clone, Debug)]
pub struct CapacityEstimate {
    pub lower: f64,
    pub extremal: f64,
    pub k_points: usize,
    pub m: usize,
    pub normalization: Normalization,
}

/// Least-squares fit of y against x (already in log coordinates where
/// appropriate). A single sample degenerates to slope 0 with r² = 0.
#[derive(Clone, Debug)]
pub struct ExponentFit {
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl ExponentFit {
    pub fn fit(samples: Vec<(f64, f64)>) -> ExponentFit {
        let n = samples.len() as f64;
        if samples.len() < 2 {
            let intercept = samples.first().map(|s| s.1).unwrap_or(0.0);
            return ExponentFit {
                samples,
                slope: 0.0,
                intercept,
                r2: 0.0,
            };
        }
        let sx: f64 = samples.iter().map(|s| s.0).sum();
        let sy: f64 = samples.iter().map(|s| s.1).sum();
        let sxx: f64 = samples.iter().map(|s| s.0 * s.0).sum();
        let sxy: f64 = samples.iter().map(|s| s.0 * s.1).sum();
        let denom = n * sxx - sx * sx;
        let slope = if denom.abs() < 1e-300 {
            0.0
        } else {
            (n * sxy - sx * sy) / denom
        };
        let intercept = (sy - slope * sx) / n;
        let mean_y = sy / n;
        let ss_tot: f64 = samples.iter().map(|s| (s.1 - mean_y).powi(2)).sum();
        let ss_res: f64 = samples
            .iter()
            .map(|s| (s.1 - slope * s.0 - intercept).powi(2))
            .sum();
        let r2 = if ss_tot > 0.0 {
            (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
        } else {
            0.0
        };
        ExponentFit {
            samples,
            slope,
            intercept,
            r2,
        }
    }
}

fn check_k_inside(k: &[u32], omega: &Arc<GridDomain>) -> Result<()> {
    if k.is_empty() {
        return domain_err("compact set K is empty");
    }
    for &f in k {
        if omega.classify(f as usize) != PointClass::Interior {
            return domain_err("K must consist of interior points");
        }
        // K must stay off the boundary ring so the annulus is nonempty
        for a in 0..omega.axes() {
            for step in [-1isize, 1] {
                let nb = (f as isize + step * omega.strides()[a] as isize) as usize;
                if omega.classify(nb) == PointClass::Boundary {
                    return domain_err("K touches the outer boundary ring");
                }
            }
        }
    }
    Ok(())
}

/// Discrete relative extremal function of K in Ω: −1 on K, 0 on ∂Ω,
/// σ_m = 0 (through the lift sequence) on the annulus, clamped into
/// [−1, 0] after the lift. The returned field lives on the original
/// domain with value −1 on K.
pub fn extremal_function(
    k: &[u32],
    omega: &Arc<GridDomain>,
    m: usize,
    cfg: &SolveConfig,
) -> Result<GridField> {
    check_k_inside(k, omega)?;
    let obstacle = omega.with_extra_boundary(k)?;
    let k_set: std::collections::HashSet<u32> = k.iter().copied().collect();
    let phi = {
        let mut field = GridField::constant(obstacle.clone(), 0.0);
        let vals = field.values_mut();
        for &f in k {
            vals[f as usize] = -1.0;
        }
        field
    };
    let mut cfg_lift = cfg.clone();
    if cfg_lift.degenerate_lift.is_empty() {
        // capacity work needs the residual mass error below the
        // discretization error, not below the Newton tolerance; a short
        // geometric lift reaching ~h² is enough and much cheaper
        let h = omega.spacing();
        let floor = (h * h * 0.1).max(cfg.tol_residual);
        let mut eps = Vec::new();
        let mut e = 0.5;
        while e > floor {
            eps.push(e);
            e *= 0.25;
        }
        eps.push(floor);
        cfg_lift.degenerate_lift = eps;
    }
    let report = maximal_solution(&phi, m, &cfg_lift)?;
    // transplant onto the original domain and project onto [−1, 0]
    let mut values = vec![f64::NAN; omega.points()];
    for flat in 0..omega.points() {
        if omega.classify(flat) == PointClass::Exterior {
            continue;
        }
        let v = if k_set.contains(&(flat as u32)) {
            -1.0
        } else {
            report.solution.value(flat)
        };
        values[flat] = v.clamp(-1.0, 0.0);
    }
    GridField::from_values(omega.clone(), values)
}

/// Form-normalized m-Hessian mass of `u` over the points of `region`.
pub fn hessian_mass(u: &GridField, m: usize, region: &[u32]) -> Result<f64> {
    let density = hessian_density(u, m, Normalization::Form)?;
    let vol = u.domain().cell_volume();
    let mut acc = 0.0;
    for &f in region {
        let v = density.value(f as usize);
        if v.is_finite() {
            acc += v;
        }
    }
    Ok(acc * vol)
}

/// Capacity of K relative to Ω: the extremal-function mass over K plus
/// the best lower candidate (clipped scaled copies of the extremal
/// function and clipped concentric quadratics).
pub fn capacity(
    k: &[u32],
    omega: &Arc<GridDomain>,
    m: usize,
    cfg: &SolveConfig,
) -> Result<CapacityEstimate> {
    let u_star = extremal_function(k, omega, m, cfg)?;
    let extremal = hessian_mass(&u_star, m, k)?;

    let mut lower: f64 = 0.0;
    // clipped rescalings of the extremal function stay in the candidate class
    for c in [1.0, 1.3, 1.8] {
        let v = u_star.map(|x| (c * x).clamp(-1.0, 0.0));
        lower = lower.max(hessian_mass(&v, m, k)?);
    }
    // clipped concentric quadratics a(|z−z₀|²/R² − 1)
    let dom = omega.clone();
    let axes = dom.axes();
    let mut center = vec![0.0; axes];
    for d in 0..axes {
        center[d] = dom.origin()[d] + 0.5 * (dom.shape()[d] - 1) as f64 * dom.spacing();
    }
    let mut r_sup: f64 = 0.0;
    for &fu in dom.boundary() {
        let p = dom.position_vec(fu as usize);
        let q: f64 = p.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum();
        r_sup = r_sup.max(q);
    }
    for a in [0.5, 1.0, 2.0, 4.0] {
        let center = center.clone();
        let v = GridField::from_fn(dom.clone(), |p| {
            let q: f64 = p.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum();
            (a * (q / r_sup - 1.0)).clamp(-1.0, 0.0)
        });
        lower = lower.max(hessian_mass(&v, m, k)?);
    }
    Ok(CapacityEstimate {
        lower,
        extremal,
        k_points: k.len(),
        m,
        normalization: Normalization::Form,
    })
}

/// Volume–capacity frontier over a family of compact sets: for each
/// exponent p, the fit of log V against p·log cap and the empirical
/// constant max V/cap^p.
pub fn volume_capacity_frontier(
    ks: &[Vec<u32>],
    omega: &Arc<GridDomain>,
    m: usize,
    ps: &[f64],
    cfg: &SolveConfig,
) -> Result<Vec<(f64, ExponentFit, f64)>> {
    if ks.is_empty() {
        return domain_err("frontier needs at least one compact set");
    }
    let vol = omega.cell_volume();
    let mut caps = Vec::new();
    for k in ks {
        let est = capacity(k, omega, m, cfg)?;
        caps.push((k.len() as f64 * vol, est.extremal));
    }
    let mut out = Vec::new();
    for &p in ps {
        let samples: Vec<(f64, f64)> = caps.iter().map(|&(v, c)| (p * c.ln(), v.ln())).collect();
        let c_emp = caps
            .iter()
            .map(|&(v, c)| v / c.powf(p))
            .fold(f64::NEG_INFINITY, f64::max);
        if !c_emp.is_finite() {
            return domain_err("volume/capacity ratio is not finite across the family");
        }
        out.push((p, ExponentFit::fit(samples), c_emp));
    }
    Ok(out)
}

/// Both sides of the comparison inequality on the set {u < v}:
/// lhs = ∫_{u<v} σ_m(v), rhs = ∫_{u<v} σ_m(u) (form-normalized), plus
/// the number of points in the set. Requires u ≥ v on the boundary ring.
pub fn comparison_check(u: &GridField, v: &GridField, m: usize) -> Result<(f64, f64, usize)> {
    let dom = u.domain().clone();
    if !dom.same_layout(v.domain()) {
        return domain_err("comparison requires a shared domain");
    }
    let mut scale: f64 = 1.0;
    for &f in dom.boundary() {
        scale = scale.max(u.value(f as usize).abs()).max(v.value(f as usize).abs());
    }
    for &f in dom.boundary() {
        if u.value(f as usize) < v.value(f as usize) - 1e-9 * scale {
            return domain_err("comparison hypothesis u ≥ v fails on the boundary ring");
        }
    }
    let set: Vec<u32> = dom
        .interior()
        .iter()
        .copied()
        .filter(|&f| u.value(f as usize) < v.value(f as usize))
        .collect();
    let lhs = hessian_mass(v, m, &set)?;
    let rhs = hessian_mass(u, m, &set)?;
    Ok((lhs, rhs, set.len()))
}

/// Comparison inequality on the flat torus, with the metric-shifted
/// masses σ_m(λ(I + Hu)): lhs = ∫_{u<v} σ_m-mass of v, rhs = the same
/// for u. No boundary hypothesis (the torus has none).
pub fn comparison_check_torus(
    u: &GridField,
    v: &GridField,
    m: usize,
) -> Result<(f64, f64, usize)> {
    let dom = u.domain().clone();
    if dom.kind() != crate::field::domain::DomainKind::Torus {
        return domain_err("torus comparison expects a torus domain");
    }
    if !dom.same_layout(v.domain()) {
        return domain_err("comparison requires a shared domain");
    }
    let set: Vec<u32> = dom
        .interior()
        .iter()
        .copied()
        .filter(|&f| u.value(f as usize) < v.value(f as usize))
        .collect();
    let factor = Normalization::Form.factor(dom.n(), m);
    let vol = dom.cell_volume();
    let du = crate::field::hessian::shifted_hessian_density(u, m, Normalization::Raw, 1.0)?;
    let dv = crate::field::hessian::shifted_hessian_density(v, m, Normalization::Raw, 1.0)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for &f in &set {
        lhs += dv.value(f as usize);
        rhs += du.value(f as usize);
    }
    Ok((lhs * factor * vol, rhs * factor * vol, set.len()))
}

/// Stability measurement against the density difference: returns
/// (sup_Ω(v−u) − sup_∂Ω(v−u), ‖f_u − f_v‖_q^{1/m}) for solver outputs
/// u, v with densities f_u, f_v. Requires q > n/m.
pub fn stability_density(
    u: &GridField,
    v: &GridField,
    f_u: &GridField,
    f_v: &GridField,
    q: f64,
    m: usize,
) -> Result<(f64, f64)> {
    let dom = u.domain().clone();
    let n = dom.n() as f64;
    if !(q > n / m as f64) {
        return domain_err(format!("stability needs q > n/m = {}", n / m as f64));
    }
    let mut sup_int = f64::NEG_INFINITY;
    for &f in dom.interior() {
        sup_int = sup_int.max(v.value(f as usize) - u.value(f as usize));
    }
    let mut sup_bd = f64::NEG_INFINITY;
    for &f in dom.boundary() {
        sup_bd = sup_bd.max(v.value(f as usize) - u.value(f as usize));
    }
    let diff = f_u.combine(f_v, 1.0, -1.0)?;
    let norm = diff.lq_norm(q, dom.interior())?;
    Ok(((sup_int - sup_bd).max(0.0), norm.powf(1.0 / m as f64)))
}

/// Stability measurement against the L^{q'} norm of the positive part:
/// returns (sup(v−u), ‖(v−u)₊‖_{q'}^{p/(n+p(m+1))}) with p = p'/q'.
/// Exponent bookkeeping: q > n/m, q' the conjugate, p' ∈ (q', n/(n−m)).
pub fn stability_norm(
    u: &GridField,
    v: &GridField,
    q: f64,
    p_prime: f64,
    m: usize,
) -> Result<(f64, f64)> {
    let dom = u.domain().clone();
    let n = dom.n() as f64;
    let mf = m as f64;
    if !(q > n / mf) {
        return domain_err(format!("stability needs q > n/m = {}", n / mf));
    }
    if m == dom.n() {
        return domain_err("norm stability needs m < n for the exponent window");
    }
    let q_conj = q / (q - 1.0);
    let p_max = n / (n - mf);
    if !(p_prime > q_conj && p_prime < p_max) {
        return domain_err(format!("p' must lie in (q', n/(n−m)) = ({q_conj}, {p_max})"));
    }
    let p = p_prime / q_conj;
    let exponent = p / (n + p * (mf + 1.0));
    let mut sup = f64::NEG_INFINITY;
    for &f in dom.interior() {
        sup = sup.max(v.value(f as usize) - u.value(f as usize));
    }
    let pos = v.combine(u, 1.0, -1.0)?.map(|x| x.max(0.0));
    let norm = pos.lq_norm(q_conj, dom.interior())?;
    Ok((sup, norm.powf(exponent)))
}

/// Worst oscillation of each solution over axis separations of
/// `scales_cells` grid cells, plus the shared (family-max) modulus.
pub struct ModulusTable {
    pub scales_cells: Vec<usize>,
    pub per_solution: Vec<Vec<f64>>,
    pub shared: Vec<f64>,
}

/// Solves the Dirichlet problem for each density and measures the
/// oscillation moduli of the solution family over dyadic separations.
pub fn equicontinuity_probe(
    densities: &[GridField],
    phi: &GridField,
    m: usize,
    cfg: &SolveConfig,
    scales_cells: &[usize],
) -> Result<ModulusTable> {
    let mut per_solution = Vec::new();
    for f in densities {
        let rep = solve_dirichlet(f, phi, m, cfg)?;
        per_solution.push(oscillation_moduli(&rep.solution, scales_cells));
    }
    let shared = (0..scales_cells.len())
        .map(|i| {
            per_solution
                .iter()
                .map(|row| row[i])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(ModulusTable {
        scales_cells: scales_cells.to_vec(),
        per_solution,
        shared,
    })
}

/// Max over interior point pairs at axis separation `cells` of
/// |u(p) − u(p + cells·e_a)|.
pub fn oscillation_moduli(u: &GridField, scales_cells: &[usize]) -> Vec<f64> {
    let dom = u.domain().clone();
    scales_cells
        .iter()
        .map(|&cells| {
            let mut worst: f64 = 0.0;
            for &fu in dom.interior() {
                let f = fu as usize;
                for a in 0..dom.axes() {
                    if let Some(nb) = dom.neighbor(f, a, cells as isize) {
                        if dom.classify(nb) == PointClass::Interior {
                            let d = (u.value(f) - u.value(nb)).abs();
                            if d.is_finite() {
                                worst = worst.max(d);
                            }
                        }
                    }
                }
            }
            worst
        })
        .collect()
}

/// Interior regularity measurement built from T_ε.
#[derive(Clone, Debug)]
pub struct InteriorBound {
    /// sup over the subdomain of T_ε(u)
    pub sup_t: f64,
    /// min over the subdomain of the cominor-contracted Hessian of T_ε(u)
    pub defect_min: f64,
    /// computable lower-bound scale m·sup ψ^{(m−1)/m}·sup (T_ε ψ^{1/m})_−
    pub defect_bound: f64,
    pub eps: f64,
}

/// Measures sup_{Ω'} T_ε(u) and the subharmonicity defect of T_ε(u)
/// against the linearized operator at u, for a solve with density ψ
/// bounded below by a positive constant.
pub fn interior_laplacian_bound(
    u: &GridField,
    psi: &GridField,
    m: usize,
    eps: f64,
    region: &[u32],
) -> Result<InteriorBound> {
    let dom = u.domain().clone();
    if region.is_empty() {
        return domain_err("interior bound needs a nonempty subdomain");
    }
    let mut inf_psi = f64::INFINITY;
    let mut sup_psi: f64 = 0.0;
    for &f in dom.interior() {
        let v = psi.value(f as usize);
        inf_psi = inf_psi.min(v);
        sup_psi = sup_psi.max(v);
    }
    if !(inf_psi > 0.0) {
        return domain_err("density must be bounded below by a positive constant");
    }
    let t = t_epsilon(u, eps)?;
    let mut sup_t = f64::NEG_INFINITY;
    for &f in region {
        let v = t.value(f as usize);
        if v.is_finite() {
            sup_t = sup_t.max(v);
        }
    }
    // defect: cominor(Hu) contracted with H(T_ε u) over the subdomain
    let mut defect_min = f64::INFINITY;
    for &f in region {
        let (Some(hu), Some(ht)) = (hessian_at(u, f as usize), hessian_at(&t, f as usize)) else {
            continue;
        };
        let w = cominor_matrix(&hu, m)?;
        defect_min = defect_min.min(trace_product(&w, &ht));
    }
    if !defect_min.is_finite() || !sup_t.is_finite() {
        return domain_err("subdomain must stay clear of the averaging margin");
    }
    // calibration from the density: T_ε(ψ^{1/m}) bounded below by its own
    // measured negative part
    let psi_root = psi.map(|v| v.powf(1.0 / m as f64));
    let t_psi = t_epsilon(&psi_root, eps)?;
    let mut t_psi_neg: f64 = 0.0;
    for &f in region {
        let v = t_psi.value(f as usize);
        if v.is_finite() {
            t_psi_neg = t_psi_neg.max(-v);
        }
    }
    let defect_bound = m as f64 * sup_psi.powf((m as f64 - 1.0) / m as f64) * t_psi_neg;
    Ok(InteriorBound {
        sup_t,
        defect_min,
        defect_bound,
        eps,
    })
}

/// Convenience: full SolveReport of the Dirichlet problem plus its
/// form-normalized total mass (used to normalize unit-mass experiments).
pub fn solve_with_mass(
    f: &GridField,
    phi: &GridField,
    m: usize,
    cfg: &SolveConfig,
) -> Result<(SolveReport, f64)> {
    let rep = solve_dirichlet(f, phi, m, cfg)?;
    let dom = rep.solution.domain().clone();
    let mass = hessian_mass(&rep.solution, m, dom.interior())?;
    Ok((rep, mass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::domain::GridDomain;
    use crate::field::hessian::radius_sq_of;

    fn cap_cfg() -> SolveConfig {
        SolveConfig {
            tol_residual: 1e-7,
            admissibility_margin: 1e-7,
            ..SolveConfig::default()
        }
    }

    #[test]
    fn exponent_fit_recovers_line() {
        let samples: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 3.0 - 2.0 * i as f64)).collect();
        let fit = ExponentFit::fit(samples);
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let single = ExponentFit::fit(vec![(1.0, 2.0)]);
        assert_eq!(single.slope, 0.0);
        assert_eq!(single.r2, 0.0);
    }

    #[test]
    fn extremal_function_basics() {
        let dom = GridDomain::box_on(1, 9, -1.0, 1.0).unwrap();
        let k: Vec<u32> = dom.interior_where(|p| radius_sq_of(p) < 0.5);
        let u = extremal_function(&k, &dom, 1, &cap_cfg()).unwrap();
        for &f in &k {
            assert_eq!(u.value(f as usize), -1.0);
        }
        for &f in dom.interior() {
            let v = u.value(f as usize);
            assert!((-1.0..=0.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn extremal_rejects_bad_k() {
        let dom = GridDomain::box_on(1, 9, -1.0, 1.0).unwrap();
        // a point adjacent to the boundary ring
        let k = vec![dom.flat(&[1, 4]) as u32];
        assert!(extremal_function(&k, &dom, 1, &cap_cfg()).is_err());
        assert!(extremal_function(&[], &dom, 1, &cap_cfg()).is_err());
    }

    #[test]
    fn capacity_monotone_in_k() {
        let dom = GridDomain::ball(1, 17, 1.0).unwrap();
        let k1 = dom.interior_where(|p| radius_sq_of(p) <= 0.04);
        let k2 = dom.interior_where(|p| radius_sq_of(p) <= 0.16);
        let cfg = cap_cfg();
        let c1 = capacity(&k1, &dom, 1, &cfg).unwrap();
        let c2 = capacity(&k2, &dom, 1, &cfg).unwrap();
        assert!(c1.extremal > 0.0);
        let h = dom.spacing();
        assert!(
            c1.extremal <= c2.extremal * (1.0 + 5.0 * h),
            "monotonicity: {} vs {}",
            c1.extremal,
            c2.extremal
        );
    }

    #[test]
    fn comparison_check_trivial_and_hypothesis() {
        let dom = GridDomain::box_on(1, 9, -1.0, 1.0).unwrap();
        let u = GridField::from_fn(dom.clone(), radius_sq_of);
        let (lhs, rhs, count) = comparison_check(&u, &u, 1).unwrap();
        assert_eq!((lhs, rhs, count), (0.0, 0.0, 0));
        let v = u.map(|x| x + 1.0);
        assert!(comparison_check(&u, &v, 1).is_err());
    }

    #[test]
    fn stability_exponent_bookkeeping() {
        let dom = GridDomain::box_on(2, 7, -1.0, 1.0).unwrap();
        let u = GridField::from_fn(dom.clone(), radius_sq_of);
        // q = 4, n = 2, m = 1: q' = 4/3, p' window (4/3, 2)
        assert!(stability_norm(&u, &u, 4.0, 1.6, 1).is_ok());
        assert!(stability_norm(&u, &u, 4.0, 1.2, 1).is_err());
        assert!(stability_norm(&u, &u, 4.0, 2.1, 1).is_err());
        assert!(stability_density(&u, &u, &u, &u, 1.5, 1).is_err());
    }

    #[test]
    fn oscillation_moduli_monotone_for_smooth_fields() {
        let dom = GridDomain::box_on(1, 17, -1.0, 1.0).unwrap();
        let u = GridField::from_fn(dom.clone(), |p| (1.3 * p[0]).sin() + 0.5 * p[1]);
        let mods = oscillation_moduli(&u, &[1, 2, 4]);
        assert!(mods[0] <= mods[1] && mods[1] <= mods[2]);
    }
}
