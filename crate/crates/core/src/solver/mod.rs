//! Damped-Newton solvers for the m-Hessian equation.
//!
//! The Dirichlet problem σ_m(u_{z_j z̄_k}) = f, u = φ on the boundary, is
//! solved through the concave reformulation F(u) = S_m^{1/m}(λ(Hu)) −
//! f^{1/m}: its linearization has the positive semidefinite cominor
//! coefficient matrix, each step solves the frozen-coefficient system
//! with diagonally preconditioned conjugate gradients, and backtracking
//! halves the step until the iterate keeps the cone certificate and does
//! not increase the sup residual. Densities with zeros are handled
//! through the lift sequence ε_k ↓ (solve with max(f, ε_k), warm-started).
//!
//! The flat-torus equation σ_m(λ(I + Hu)) = f with mean-normalized f
//! fixes the gauge max u = 0. The discrete operator admits no exact
//! conservation law for m ≥ 2, so a scalar compatibility factor γ ≈ 1
//! multiplying the target is solved alongside u (the analog of the
//! constant adjustment in the continuous normalization); the report
//! records γ^m and the residual is measured against the adjusted target.

pub mod linear;
pub mod radial_ode;


use crate::error::{domain_err, numerical_err, Result};
use crate::field::domain::DomainKind;
use crate::field::grid::GridField;
use crate::field::hessian::hessian_at;
use crate::hermlin::{cominor_matrix, HermitianMatrix};
use crate::symmfunc::binomial;

pub use linear::{harmonic_extension, solve_poisson, CG_TOL_REL};
pub use radial_ode::{radial_residual, solve_radial, solve_radial_annulus};

use linear::{pcg, pcg_normal, EllipticOperator};

const MAX_BACKTRACK: usize = 30;

/// Tuning knobs for a Newton solve.
#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub max_iter: usize,
    /// sup-norm tolerance on S_m^{1/m} − f^{1/m}
    pub tol_residual: f64,
    /// initial step length in (0, 1]
    pub damping: f64,
    /// cone slack δ ≥ 0: iterates must keep all S_k > −δ
    pub admissibility_margin: f64,
    /// lift sequence for degenerate densities; empty means the default
    /// ε_k = 2^{−k}·sup f down to tol_residual
    pub degenerate_lift: Vec<f64>,
    pub cg_max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iter: 60,
            tol_residual: 1e-9,
            damping: 1.0,
            admissibility_margin: 1e-9,
            degenerate_lift: Vec::new(),
            cg_max_iter: 200_000,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return domain_err("tol_residual must be positive");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return domain_err("damping must lie in (0, 1]");
        }
        if self.admissibility_margin < 0.0 {
            return domain_err("admissibility margin must be nonnegative");
        }
        Ok(())
    }
}

/// One accepted Newton step, as emitted in the diagnostics CSV.
#[derive(Clone, Debug)]
pub struct IterRow {
    pub iter: usize,
    pub residual: f64,
    pub step: f64,
    pub violations: usize,
}

/// Solver output: the solution field plus the convergence trace.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: GridField,
    pub residual_history: Vec<f64>,
    /// certificate violation count at each recorded iterate
    pub admissibility: Vec<usize>,
    pub converged: bool,
    pub wall_iterations: usize,
    /// discrete compatibility factor γ^m of the torus solve
    pub torus_constant: Option<f64>,
    pub diagnostics: Vec<IterRow>,
}

impl SolveReport {
    /// Per-iteration diagnostics as CSV rows `iter,residual,step,violations`.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("iter,residual,step,violations\n");
        for row in &self.diagnostics {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.iter, row.residual, row.step, row.violations
            ));
        }
        out
    }
}

#[inline]
fn signed_root(x: f64, m: usize) -> f64 {
    if m == 1 {
        x
    } else {
        x.signum() * x.abs().powf(1.0 / m as f64)
    }
}

/// Per-iterate evaluation: residual vector r = S_m^{1/m} − target_root,
/// its sup norm, and the count of cone violations at margin δ.
struct Evaluation {
    residual: Vec<f64>,
    sup: f64,
    violations: usize,
}

fn evaluate(u: &GridField, target_root: &[f64], m: usize, delta: f64, shift: f64) -> Evaluation {
    let dom = u.domain();
    let n = dom.n();
    let mut residual = vec![0.0; dom.points()];
    let mut sup: f64 = 0.0;
    let mut violations = 0usize;
    for &fu in dom.interior() {
        let f = fu as usize;
        match hessian_at(u, f) {
            Some(mut mat) => {
                if shift != 0.0 {
                    mat = mat.add(&HermitianMatrix::identity(n).scale(shift));
                }
                let s = mat.minor_sums();
                if s[1..=m].iter().any(|&v| v <= -delta) {
                    violations += 1;
                }
                let r = signed_root(s[m], m) - target_root[f];
                residual[f] = r;
                sup = sup.max(r.abs());
            }
            None => {
                violations += 1;
                residual[f] = f64::NAN;
            }
        }
    }
    Evaluation {
        residual,
        sup,
        violations,
    }
}

/// Installs the linearization coefficients (1/m)·S_m^{(1-m)/m}·W at every
/// interior point, with S_m floored away from zero for conditioning.
fn assemble(u: &GridField, m: usize, shift: f64, target_root: &[f64], op: &mut EllipticOperator) {
    let dom = u.domain().clone();
    let n = dom.n();
    let mf = m as f64;
    for &fu in dom.interior() {
        let f = fu as usize;
        if let Some(mut mat) = hessian_at(u, f) {
            if shift != 0.0 {
                mat = mat.add(&HermitianMatrix::identity(n).scale(shift));
            }
            let s = mat.minor_sums();
            let w = cominor_matrix(&mat, m).expect("degree checked");
            let scaling = if m == 1 {
                1.0
            } else {
                // clamp keeps the scaling finite far from the cone edge;
                // inactive once S_m ≈ target
                let floor = (0.5 * target_root[f].abs()).powi(m as i32).max(1e-14);
                let s_eff = s[m].max(floor);
                (1.0 / mf) * s_eff.powf((1.0 - mf) / mf)
            };
            op.set_point(f, &w.scale(scaling));
        }
    }
}

struct NewtonOutcome {
    u: GridField,
    gamma: f64,
    history: Vec<f64>,
    admissibility: Vec<usize>,
    diagnostics: Vec<IterRow>,
    converged: bool,
    iterations: usize,
}

/// Core damped-Newton driver shared by the Dirichlet and torus solvers.
/// `f_target` must already be strictly positive; boundary values of the
/// initial iterate are kept fixed (the linear steps vanish there).
/// `cg_tol` is the relative residual of the inner linear solves:
/// production steps use [`CG_TOL_REL`], the boundary-homotopy polish runs
/// looser since its iterates are discarded.
fn newton_drive(
    f_target: &GridField,
    init: GridField,
    m: usize,
    cfg: &SolveConfig,
    torus: bool,
    cg_tol: f64,
) -> Result<NewtonOutcome> {
    let dom = init.domain().clone();
    let shift = if torus { 1.0 } else { 0.0 };
    let delta = cfg.admissibility_margin;
    let total = dom.points();
    let n_int = dom.interior().len() as f64;

    let mut froot = vec![0.0; total];
    for &fu in dom.interior() {
        let f = fu as usize;
        froot[f] = signed_root(f_target.value(f), m);
    }
    let froot_mean: f64 =
        dom.interior().iter().map(|&f| froot[f as usize]).sum::<f64>() / n_int;

    let mut gamma = 1.0f64;
    let target_with = |gamma: f64, out: &mut Vec<f64>| {
        out.clear();
        out.extend(froot.iter().map(|&v| gamma * v));
    };
    let mut target_root = Vec::with_capacity(total);
    target_with(gamma, &mut target_root);

    let mut u = init;
    let mut eval = evaluate(&u, &target_root, m, delta, shift);
    if eval.violations > 0 {
        return numerical_err(format!(
            "initial iterate fails the cone certificate at {} points",
            eval.violations
        ));
    }
    let mut history = vec![eval.sup];
    let mut admissibility = vec![eval.violations];
    let mut diagnostics = vec![IterRow {
        iter: 0,
        residual: eval.sup,
        step: 0.0,
        violations: eval.violations,
    }];
    let mut op = EllipticOperator::zeros(dom.clone());
    let mut converged = eval.sup <= cfg.tol_residual;
    let mut iterations = 0usize;

    while !converged && iterations < cfg.max_iter {
        assemble(&u, m, shift, &target_root, &mut op);
        // torus: absorb the mean of the residual into the target factor
        let dgamma = if torus {
            let mean_r: f64 = dom
                .interior()
                .iter()
                .map(|&f| eval.residual[f as usize])
                .sum::<f64>()
                / n_int;
            mean_r / froot_mean
        } else {
            0.0
        };
        let mut rhs = vec![0.0; total];
        for &fu in dom.interior() {
            let f = fu as usize;
            rhs[f] = eval.residual[f] - dgamma * froot[f];
        }
        let (dx, _cg) = pcg(&op, &rhs, cg_tol, cfg.cg_max_iter, torus)?;

        let slack = 1e-12 * (1.0 + eval.sup);
        let mut backtrack = |dx: &[f64]| -> Option<(GridField, Evaluation, f64, f64)> {
            let mut step = cfg.damping;
            for _ in 0..=MAX_BACKTRACK {
                let mut trial = u.clone();
                for &fu in dom.interior() {
                    let f = fu as usize;
                    trial.values_mut()[f] += step * dx[f];
                }
                let trial_gamma = gamma + step * dgamma;
                target_with(trial_gamma, &mut target_root);
                let trial_eval = evaluate(&trial, &target_root, m, delta, shift);
                if trial_eval.violations == 0 && trial_eval.sup <= eval.sup + slack {
                    return Some((trial, trial_eval, trial_gamma, step));
                }
                step *= 0.5;
            }
            None
        };
        let mut accepted = backtrack(&dx);
        if accepted.is_none() {
            // the symmetrized-operator direction stalls when coefficients
            // vary at the stencil scale; fall back to the exact Newton
            // direction through the normal equations
            let (dx2, _cg2) = pcg_normal(&op, &rhs, 1e-10, cfg.cg_max_iter, torus)?;
            accepted = backtrack(&dx2);
        }
        let Some((trial, trial_eval, trial_gamma, used_step)) = accepted else {
            return numerical_err(format!(
                "backtracking exhausted at iteration {}: residual {:.3e} cannot be decreased \
                 while keeping the cone certificate",
                iterations + 1,
                eval.sup
            ));
        };
        u = trial;
        eval = trial_eval;
        gamma = trial_gamma;
        iterations += 1;
        history.push(eval.sup);
        admissibility.push(eval.violations);
        diagnostics.push(IterRow {
            iter: iterations,
            residual: eval.sup,
            step: used_step,
            violations: eval.violations,
        });
        converged = eval.sup <= cfg.tol_residual && eval.violations == 0;
        // stagnation guard: several steps without measurable progress
        if !converged && iterations >= 6 {
            let prev = history[history.len() - 2];
            if eval.sup >= prev - slack && eval.sup > cfg.tol_residual * 4.0 {
                break;
            }
        }
    }

    Ok(NewtonOutcome {
        u,
        gamma,
        history,
        admissibility,
        diagnostics,
        converged,
        iterations,
    })
}

fn check_density(f: &GridField) -> Result<(f64, f64)> {
    let dom = f.domain();
    let mut inf = f64::INFINITY;
    let mut sup = f64::NEG_INFINITY;
    for &fu in dom.interior() {
        let v = f.value(fu as usize);
        if !v.is_finite() {
            return domain_err("density must be finite on the interior");
        }
        if v < 0.0 {
            return domain_err(format!("density must be nonnegative (found {v})"));
        }
        inf = inf.min(v);
        sup = sup.max(v);
    }
    Ok((inf, sup))
}

fn default_lift(scale: f64, tol: f64) -> Vec<f64> {
    let mut eps = Vec::new();
    let mut e = 0.5 * scale;
    while e > tol {
        eps.push(e);
        e *= 0.5;
    }
    eps.push(e);
    eps
}

/// Cone certificate of an iterate at slack δ (shift 0): true when every
/// interior point keeps S_1..S_m > −δ.
fn certificate_ok(u: &GridField, m: usize, delta: f64) -> bool {
    let dom = u.domain();
    for &fu in dom.interior() {
        match hessian_at(u, fu as usize) {
            Some(mat) => {
                let s = mat.minor_sums();
                if s[1..=m].iter().any(|&v| v <= -delta) {
                    return false;
                }
            }
            None => return false,
        }
    }
    true
}

/// Drives a bounded-domain solve from the quadratic anchor to the target
/// boundary data and through the lift stages.
///
/// The anchor u = A(|z−z₀|² − R²) is exactly admissible with margin for
/// any boundary shape, so the solve starts from its own trace and the
/// boundary data is continued toward φ along φ_t = (1−t)·anchor + t·φ.
/// Each step adds t-increments of the harmonic extension of (φ − anchor)
/// — on boxes and for m = 1 the full step t: 0 → 1 passes the cone
/// certificate at once and this reduces to a single direct solve; on
/// staircase (ball) boundaries the harmonic extension carries O(1)
/// Hessian spikes in the first cell layer, and the adaptive step with a
/// short Newton polish walks through them.
fn solve_bounded(
    stages: &[GridField],
    phi: &GridField,
    m: usize,
    cfg: &SolveConfig,
) -> Result<(Vec<NewtonOutcome>, GridField)> {
    let dom = phi.domain().clone();
    let n = dom.n();
    let axes = dom.axes();
    let mut center = vec![0.0; axes];
    for d in 0..axes {
        center[d] = dom.origin()[d] + 0.5 * (dom.shape()[d] - 1) as f64 * dom.spacing();
    }
    let quad = {
        let center = center.clone();
        move |p: &[f64]| -> f64 {
            p.iter()
                .zip(&center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
        }
    };
    let mut r_sup: f64 = 0.0;
    for &fu in dom.boundary() {
        r_sup = r_sup.max(quad(&dom.position_vec(fu as usize)));
    }
    let f0 = &stages[0];
    let mut sup_f: f64 = 0.0;
    for &fu in dom.interior() {
        sup_f = sup_f.max(f0.value(fu as usize));
    }
    let amp = (sup_f / binomial(n, m)).powf(1.0 / m as f64) + 1.0;

    let anchor = GridField::from_fn(dom.clone(), |p| amp * (quad(p) - r_sup));
    let delta_bd = phi.combine(&anchor, 1.0, -1.0)?;
    let h_delta = harmonic_extension(&delta_bd)?;
    let delta = cfg.admissibility_margin;

    let mut polish_cfg = cfg.clone();
    polish_cfg.max_iter = 2;

    let mut u = anchor.clone();
    let mut t = 0.0f64;
    let mut homotopy_diags: Vec<IterRow> = Vec::new();
    while t < 1.0 {
        let mut dt = 1.0 - t;
        let mut stepped = false;
        while dt > 1e-4 {
            let t_next = if dt >= 1.0 - t { 1.0 } else { t + dt };
            let mut trial = u.combine(&h_delta, 1.0, t_next - t)?;
            {
                // keep the boundary blend exact in floating point
                let vals = trial.values_mut();
                for &fu in dom.boundary() {
                    let f = fu as usize;
                    vals[f] = (1.0 - t_next) * anchor.value(f) + t_next * phi.value(f);
                }
            }
            if certificate_ok(&trial, m, delta) {
                if t_next >= 1.0 {
                    u = trial;
                    t = 1.0;
                    stepped = true;
                    break;
                }
                match newton_drive(f0, trial, m, &polish_cfg, false, 1e-6) {
                    Ok(out) => {
                        homotopy_diags.extend(out.diagnostics);
                        u = out.u;
                        t = t_next;
                        stepped = true;
                        break;
                    }
                    Err(_) => {}
                }
            }
            dt *= 0.5;
        }
        if !stepped {
            return numerical_err(
                "boundary continuation stalled: no admissible step toward the target data",
            );
        }
    }

    let mut outcomes = Vec::new();
    let mut init = u;
    for stage in stages {
        let out = newton_drive(stage, init, m, cfg, false, CG_TOL_REL)?;
        init = out.u.clone();
        outcomes.push(out);
    }
    // fold the homotopy polish rows into the first outcome's diagnostics
    if !homotopy_diags.is_empty() {
        if let Some(first) = outcomes.first_mut() {
            homotopy_diags.extend(first.diagnostics.drain(..));
            first.diagnostics = homotopy_diags;
        }
    }
    let solution = outcomes.last().expect("at least one stage").u.clone();
    Ok((outcomes, solution))
}

fn collect_report(outcomes: Vec<NewtonOutcome>, solution: GridField) -> SolveReport {
    let last = outcomes.last().expect("at least one stage");
    let residual_history = last.history.clone();
    let admissibility = last.admissibility.clone();
    let converged = last.converged;
    let mut diagnostics = Vec::new();
    let mut counter = 0usize;
    for out in &outcomes {
        for row in &out.diagnostics {
            diagnostics.push(IterRow {
                iter: counter,
                residual: row.residual,
                step: row.step,
                violations: row.violations,
            });
            counter += 1;
        }
    }
    let wall_iterations = diagnostics.len().saturating_sub(1);
    SolveReport {
        solution,
        residual_history,
        admissibility,
        converged,
        wall_iterations,
        torus_constant: None,
        diagnostics,
    }
}

/// Dirichlet solver for σ_m(u_{z_j z̄_k}) = f with u = φ on ∂Ω.
///
/// f is the raw σ_m density (see `Normalization`); φ is read at boundary
/// points only. Densities with zeros are driven through the lift
/// sequence; the final residual is then measured against the last lifted
/// density max(f, ε_last).
pub fn solve_dirichlet(
    f: &GridField,
    phi: &GridField,
    m: usize,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    let dom = f.domain().clone();
    if dom.kind() == DomainKind::Torus {
        return domain_err("solve_dirichlet expects a box or ball domain");
    }
    if !dom.same_layout(phi.domain()) {
        return domain_err("density and boundary data live on different domains");
    }
    if m < 1 || m > dom.n() {
        return domain_err(format!("degree {m} out of range for n={}", dom.n()));
    }
    for &fu in dom.boundary() {
        if !phi.value(fu as usize).is_finite() {
            return domain_err("boundary data must be finite");
        }
    }
    let (inf_f, sup_f) = check_density(f)?;

    let stages: Vec<GridField> = if inf_f > 0.0 {
        vec![f.clone()]
    } else {
        let eps = if cfg.degenerate_lift.is_empty() {
            default_lift(if sup_f > 0.0 { sup_f } else { 1.0 }, cfg.tol_residual)
        } else {
            cfg.degenerate_lift.clone()
        };
        eps.into_iter().map(|e| f.map(|v| v.max(e))).collect()
    };

    let (outcomes, solution) = solve_bounded(&stages, phi, m, cfg)?;
    Ok(collect_report(outcomes, solution))
}

/// Maximal m-subharmonic function with boundary values φ: the degenerate
/// equation σ_m(u) = 0 through the lift sequence σ_m ≡ ε_k, warm-started;
/// stages must be nonincreasing in k up to discretization slack.
pub fn maximal_solution(phi: &GridField, m: usize, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let dom = phi.domain().clone();
    if dom.kind() == DomainKind::Torus {
        return domain_err("maximal_solution expects a box or ball domain");
    }
    let eps = if cfg.degenerate_lift.is_empty() {
        default_lift(1.0, cfg.tol_residual)
    } else {
        cfg.degenerate_lift.clone()
    };
    let stages: Vec<GridField> = eps
        .iter()
        .map(|&e| GridField::constant(dom.clone(), e))
        .collect();
    let (outcomes, solution) = solve_bounded(&stages, phi, m, cfg)?;

    // lift stages must rise (smaller density, larger solution) up to
    // discretization slack
    let min_phi = dom
        .boundary()
        .iter()
        .map(|&f| phi.value(f as usize))
        .fold(f64::INFINITY, f64::min);
    let osc = phi.max_boundary() - min_phi;
    let slack = 10.0 * dom.spacing().powi(2) * (1.0 + osc.abs()) + 100.0 * cfg.tol_residual;
    for pair in outcomes.windows(2) {
        let mut drop: f64 = 0.0;
        for &fu in dom.interior() {
            drop = drop.max(pair[0].u.value(fu as usize) - pair[1].u.value(fu as usize));
        }
        if drop > slack {
            return numerical_err(format!(
                "lift stages are not monotone: stage dropped by {drop:.3e} (slack {slack:.3e})"
            ));
        }
    }
    Ok(collect_report(outcomes, solution))
}

/// Periodic solver for σ_m(λ(I + Hu)) = f on the flat torus.
///
/// f is rescaled so its grid mean is C(n,m), the discrete σ_m of u ≡ 0;
/// the scalar factor γ absorbing the residual discrete compatibility
/// defect is solved with u and reported as γ^m. The gauge max u = 0 is
/// fixed by subtraction at the end.
pub fn solve_torus(f: &GridField, m: usize, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let dom = f.domain().clone();
    if dom.kind() != DomainKind::Torus {
        return domain_err("solve_torus expects a torus domain");
    }
    if m < 1 || m > dom.n() {
        return domain_err(format!("degree {m} out of range for n={}", dom.n()));
    }
    check_density(f)?;
    let mean: f64 = dom
        .interior()
        .iter()
        .map(|&fu| f.value(fu as usize))
        .sum::<f64>()
        / dom.interior().len() as f64;
    if !(mean > 0.0) {
        return domain_err("torus density must have positive mean");
    }
    let cnm = binomial(dom.n(), m);
    let f_tilde = f.map(|v| v * cnm / mean);
    let init = GridField::constant(dom.clone(), 0.0);
    let out = newton_drive(&f_tilde, init, m, cfg, true, CG_TOL_REL)?;
    let mut u = out.u;
    let gauge = u.max_interior();
    for v in u.values_mut().iter_mut() {
        *v -= gauge;
    }
    Ok(SolveReport {
        solution: u,
        residual_history: out.history,
        admissibility: out.admissibility,
        converged: out.converged,
        wall_iterations: out.iterations,
        torus_constant: Some(out.gamma.powi(m as i32)),
        diagnostics: out.diagnostics,
    })
}
