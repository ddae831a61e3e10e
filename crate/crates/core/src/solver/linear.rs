//! Matrix-free linear algebra for the Newton steps: variable-coefficient
//! second-order operators in divergence-free (frozen-coefficient) form,
//! their symmetrization, and diagonally preconditioned conjugate
//! gradients.
//!
//! The operator is L v = Σ_{j,k} G_{jk} v_{z_j z̄_k} with a Hermitian
//! coefficient matrix G per interior point, expanded over the real axes
//! into per-axis second differences plus 4-point cross stencils. All
//! vectors live on the full grid with zeros outside the interior, so
//! stencil gathers need no index translation.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{domain_err, numerical_err, Result};
use crate::field::domain::{DomainKind, GridDomain};
use crate::field::grid::GridField;
use crate::hermlin::HermitianMatrix;

/// Relative residual at which every inner linear solve stops.
pub const CG_TOL_REL: f64 = 1e-10;

/// Axis-pair layout of the cross-stencil coefficients for complex
/// dimension n: for every j < k the four pairs
/// (x_j,x_k), (y_j,y_k), (x_j,y_k), (y_j,x_k).
pub(crate) fn cross_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            pairs.push((2 * j, 2 * k));
            pairs.push((2 * j + 1, 2 * k + 1));
            pairs.push((2 * j, 2 * k + 1));
            pairs.push((2 * j + 1, 2 * k));
        }
    }
    pairs
}

/// Frozen-coefficient elliptic operator on a grid domain.
pub(crate) struct EllipticOperator {
    domain: Arc<GridDomain>,
    /// coefficient of the second difference along each axis, 1/h² folded in
    axis: Vec<Vec<f64>>,
    /// coefficient of each cross stencil, 1/(4h²) folded in
    cross: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize)>,
}

impl EllipticOperator {
    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        let n = domain.n();
        let total = domain.points();
        let axis = vec![vec![0.0; total]; 2 * n];
        let pairs = cross_pairs(n);
        let cross = vec![vec![0.0; total]; pairs.len()];
        EllipticOperator {
            domain,
            axis,
            cross,
            pairs,
        }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    /// Installs the Hermitian coefficient matrix G at one interior point.
    #[inline]
    pub fn set_point(&mut self, flat: usize, g: &HermitianMatrix) {
        let n = self.domain.n();
        let h = self.domain.spacing();
        let inv_h2 = 1.0 / (h * h);
        let inv_4h2 = 0.25 * inv_h2;
        for j in 0..n {
            let c = 0.25 * g.get(j, j).re * inv_h2;
            self.axis[2 * j][flat] = c;
            self.axis[2 * j + 1][flat] = c;
        }
        let mut p = 0;
        for j in 0..n {
            for k in (j + 1)..n {
                let gjk: Complex64 = g.get(j, k);
                let (re, im) = (gjk.re, gjk.im);
                // off-diagonal pair contribution to tr(G·Hu):
                // 2[Re G·Re u_{z_j z̄_k} + Im G·Im u_{z_j z̄_k}]
                // with u_{z_j z̄_k} = ¼[(cxx + cyy) + i(cxy − cyx)]
                self.cross[p][flat] = 0.5 * re * inv_4h2; // (x_j, x_k)
                self.cross[p + 1][flat] = 0.5 * re * inv_4h2; // (y_j, y_k)
                self.cross[p + 2][flat] = 0.5 * im * inv_4h2; // (x_j, y_k)
                self.cross[p + 3][flat] = -0.5 * im * inv_4h2; // (y_j, x_k)
                p += 4;
            }
        }
    }

    /// Installs G = c·I everywhere (the trace operator Σ u_{z_j z̄_j}
    /// scaled by c).
    pub fn set_constant_trace(&mut self, c: f64) {
        let g = HermitianMatrix::identity(self.domain.n()).scale(c);
        let interior: Vec<u32> = self.domain.interior().to_vec();
        for f in interior {
            self.set_point(f as usize, &g);
        }
    }

    /// out ← ½(L + Lᵀ) v on interior points (out is zeroed elsewhere).
    /// The transpose is gathered with the neighbor's coefficients, which
    /// are zero outside the interior, so no masking is needed.
    pub fn apply_sym(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let dom = &self.domain;
        match dom.kind() {
            DomainKind::Torus => self.apply_sym_torus(v, out),
            _ => self.apply_sym_flat(v, out),
        }
    }

    fn apply_sym_flat(&self, v: &[f64], out: &mut [f64]) {
        let dom = &self.domain;
        let strides = dom.strides();
        let axes = dom.axes();
        for &fu in dom.interior() {
            let f = fu as usize;
            let c = v[f];
            let mut acc = 0.0;
            for a in 0..axes {
                let s = strides[a] as isize;
                let fp = (f as isize + s) as usize;
                let fm = (f as isize - s) as usize;
                let ca = &self.axis[a];
                // forward operator with coefficients at f, transpose with
                // the neighbors' coefficients
                acc += ca[f] * (v[fp] + v[fm] - 2.0 * c);
                acc += ca[fp] * v[fp] + ca[fm] * v[fm] - 2.0 * ca[f] * c;
            }
            for (p, &(a, b)) in self.pairs.iter().enumerate() {
                let sa = strides[a] as isize;
                let sb = strides[b] as isize;
                let fpp = (f as isize + sa + sb) as usize;
                let fmm = (f as isize - sa - sb) as usize;
                let fpm = (f as isize + sa - sb) as usize;
                let fmp = (f as isize - sa + sb) as usize;
                let cc = &self.cross[p];
                acc += cc[f] * (v[fpp] + v[fmm] - v[fpm] - v[fmp]);
                acc += cc[fpp] * v[fpp] + cc[fmm] * v[fmm] - cc[fpm] * v[fpm] - cc[fmp] * v[fmp];
            }
            out[f] = 0.5 * acc;
        }
    }

    fn apply_sym_torus(&self, v: &[f64], out: &mut [f64]) {
        let dom = &self.domain;
        let axes = dom.axes();
        let mut idx = vec![0usize; axes];
        for &fu in dom.interior() {
            let f = fu as usize;
            dom.indices(f, &mut idx);
            let c = v[f];
            let mut acc = 0.0;
            let shift = |a: usize, step: isize, base: &[usize]| -> usize {
                let s = dom.shape()[a] as isize;
                let w = (base[a] as isize + step).rem_euclid(s) as usize;
                base.iter()
                    .enumerate()
                    .map(|(d, &i)| if d == a { w } else { i } * dom.strides()[d])
                    .sum()
            };
            for a in 0..axes {
                let fp = shift(a, 1, &idx);
                let fm = shift(a, -1, &idx);
                let ca = &self.axis[a];
                acc += ca[f] * (v[fp] + v[fm] - 2.0 * c);
                acc += ca[fp] * v[fp] + ca[fm] * v[fm] - 2.0 * ca[f] * c;
            }
            for (p, &(a, b)) in self.pairs.iter().enumerate() {
                let mut idx2 = idx.clone();
                let sa = dom.shape()[a] as isize;
                let sb = dom.shape()[b] as isize;
                let mut corner = |da: isize, db: isize| -> usize {
                    idx2[a] = (idx[a] as isize + da).rem_euclid(sa) as usize;
                    idx2[b] = (idx[b] as isize + db).rem_euclid(sb) as usize;
                    let r = dom.flat(&idx2);
                    idx2[a] = idx[a];
                    idx2[b] = idx[b];
                    r
                };
                let fpp = corner(1, 1);
                let fmm = corner(-1, -1);
                let fpm = corner(1, -1);
                let fmp = corner(-1, 1);
                let cc = &self.cross[p];
                acc += cc[f] * (v[fpp] + v[fmm] - v[fpm] - v[fmp]);
                acc += cc[fpp] * v[fpp] + cc[fmm] * v[fmm] - cc[fpm] * v[fpm] - cc[fmp] * v[fmp];
            }
            out[f] = 0.5 * acc;
        }
    }

    /// Diagonal of −½(L + Lᵀ): the cross stencils have no center weight,
    /// so only the axis terms contribute.
    pub fn negative_diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.domain.points()];
        for &fu in self.domain.interior() {
            let f = fu as usize;
            let mut acc = 0.0;
            for a in 0..self.domain.axes() {
                acc += 2.0 * self.axis[a][f];
            }
            d[f] = acc;
        }
        d
    }
}

pub(crate) struct CgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
    pub truncated: bool,
}

/// Conjugate gradients on A = −½(L+Lᵀ) with Jacobi preconditioning.
/// Solves A x = b over interior points; `project_mean` restricts the
/// solve to the mean-zero complement of the constant kernel (torus).
/// Nonpositive curvature truncates the iteration and returns the current
/// iterate (the Newton line search absorbs the shortened step).
pub(crate) fn pcg(
    op: &EllipticOperator,
    b: &[f64],
    tol_rel: f64,
    max_iter: usize,
    project_mean: bool,
) -> Result<(Vec<f64>, CgOutcome)> {
    let dom = op.domain().clone();
    let total = dom.points();
    let interior = dom.interior();
    let n_int = interior.len() as f64;
    let mut diag = op.negative_diagonal();
    for &fu in interior {
        let f = fu as usize;
        if !(diag[f] > 0.0) {
            // degenerate coefficient; fall back to identity scaling there
            diag[f] = 1.0;
        }
    }
    let project = |v: &mut [f64]| {
        if project_mean {
            let mean: f64 = interior.iter().map(|&f| v[f as usize]).sum::<f64>() / n_int;
            for &fu in interior {
                v[fu as usize] -= mean;
            }
        }
    };

    let mut x = vec![0.0; total];
    let mut r = b.to_vec();
    project(&mut r);
    let norm_b = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok((
            x,
            CgOutcome {
                iterations: 0,
                rel_residual: 0.0,
                converged: true,
                truncated: false,
            },
        ));
    }
    let mut z = vec![0.0; total];
    let apply_precond = |r: &[f64], z: &mut [f64]| {
        for &fu in interior {
            let f = fu as usize;
            z[f] = r[f] / diag[f];
        }
    };
    apply_precond(&r, &mut z);
    project(&mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; total];
    let mut rz: f64 = interior
        .iter()
        .map(|&f| r[f as usize] * z[f as usize])
        .sum();
    let mut outcome = CgOutcome {
        iterations: 0,
        rel_residual: 1.0,
        converged: false,
        truncated: false,
    };
    for it in 0..max_iter {
        // A = −sym(L)
        op.apply_sym(&p, &mut ap);
        for v in ap.iter_mut() {
            *v = -*v;
        }
        project(&mut ap);
        let pap: f64 = interior
            .iter()
            .map(|&f| p[f as usize] * ap[f as usize])
            .sum();
        if !(pap > 0.0) {
            outcome.truncated = true;
            outcome.iterations = it;
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            outcome.rel_residual = rn / norm_b;
            return Ok((x, outcome));
        }
        let alpha = rz / pap;
        for &fu in interior {
            let f = fu as usize;
            x[f] += alpha * p[f];
            r[f] -= alpha * ap[f];
        }
        let rn = interior
            .iter()
            .map(|&f| r[f as usize] * r[f as usize])
            .sum::<f64>()
            .sqrt();
        outcome.iterations = it + 1;
        outcome.rel_residual = rn / norm_b;
        if outcome.rel_residual <= tol_rel {
            outcome.converged = true;
            return Ok((x, outcome));
        }
        apply_precond(&r, &mut z);
        project(&mut z);
        let rz_new: f64 = interior
            .iter()
            .map(|&f| r[f as usize] * z[f as usize])
            .sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for &fu in interior {
            let f = fu as usize;
            p[f] = z[f] + beta * p[f];
        }
    }
    numerical_err(format!(
        "conjugate gradients stalled at relative residual {:.3e} after {} iterations",
        outcome.rel_residual, max_iter
    ))
}

/// Solves the linear Dirichlet problem Σ_j u_{z_j z̄_j} = f with u = φ on
/// the boundary by one conjugate-gradient solve on the (symmetric,
/// constant-coefficient) trace operator. This is the independent linear
/// route used to cross-check the Newton solver at m = 1 and to build
/// harmonic extensions (f ≡ 0).
pub fn solve_poisson(f: &GridField, phi: &GridField) -> Result<GridField> {
    let dom = f.domain().clone();
    if dom.kind() == DomainKind::Torus {
        return domain_err("poisson path expects a bounded domain");
    }
    if !dom.same_layout(phi.domain()) {
        return domain_err("f and boundary data live on different domains");
    }
    let mut op = EllipticOperator::zeros(dom.clone());
    op.set_constant_trace(1.0);

    // move boundary values to the right-hand side: A u_int = −(f − L u_bd)
    let total = dom.points();
    let mut u_bd = vec![0.0; total];
    for &fu in dom.boundary() {
        let v = phi.value(fu as usize);
        if !v.is_finite() {
            return domain_err("boundary data must be finite on the boundary");
        }
        u_bd[fu as usize] = v;
    }
    let mut l_bd = vec![0.0; total];
    apply_forward(&op, &u_bd, &mut l_bd);
    let mut b = vec![0.0; total];
    for &fu in dom.interior() {
        let fl = fu as usize;
        let fv = f.value(fl);
        if !fv.is_finite() {
            return domain_err("density must be finite on the interior");
        }
        b[fl] = -(fv - l_bd[fl]);
    }
    let (x, out) = pcg(&op, &b, CG_TOL_REL, 200_000, false)?;
    if !out.converged {
        return numerical_err("poisson solve did not converge");
    }
    let mut values = vec![f64::NAN; total];
    for &fu in dom.boundary() {
        values[fu as usize] = u_bd[fu as usize];
    }
    for &fu in dom.interior() {
        values[fu as usize] = x[fu as usize];
    }
    GridField::from_values(dom, values)
}

/// Transpose application Lᵀ v, gathered with the neighbors' coefficients
/// (zero outside the interior).
pub(crate) fn apply_adjoint(op: &EllipticOperator, v: &[f64], out: &mut [f64]) {
    let dom = op.domain().clone();
    out.fill(0.0);
    let strides = dom.strides();
    let axes = dom.axes();
    let torus = dom.kind() == DomainKind::Torus;
    let mut idx = vec![0usize; axes];
    for &fu in dom.interior() {
        let f = fu as usize;
        let mut acc = 0.0;
        if torus {
            dom.indices(f, &mut idx);
        }
        let at = |a: usize, step: isize, b: Option<(usize, isize)>| -> usize {
            if !torus {
                let mut t = f as isize + step * strides[a] as isize;
                if let Some((bb, sb)) = b {
                    t += sb * strides[bb] as isize;
                }
                t as usize
            } else {
                let mut id = idx.clone();
                id[a] = (id[a] as isize + step).rem_euclid(dom.shape()[a] as isize) as usize;
                if let Some((bb, sb)) = b {
                    id[bb] = (id[bb] as isize + sb).rem_euclid(dom.shape()[bb] as isize) as usize;
                }
                dom.flat(&id)
            }
        };
        for a in 0..axes {
            let ca = &op.axis[a];
            let fp = at(a, 1, None);
            let fm = at(a, -1, None);
            acc += ca[fp] * v[fp] + ca[fm] * v[fm] - 2.0 * ca[f] * v[f];
        }
        for (p, &(a, b)) in op.pairs.iter().enumerate() {
            let cc = &op.cross[p];
            let fpp = at(a, 1, Some((b, 1)));
            let fmm = at(a, -1, Some((b, -1)));
            let fpm = at(a, 1, Some((b, -1)));
            let fmp = at(a, -1, Some((b, 1)));
            acc += cc[fpp] * v[fpp] + cc[fmm] * v[fmm] - cc[fpm] * v[fpm] - cc[fmp] * v[fmp];
        }
        out[f] = acc;
    }
}

/// Conjugate gradients on the normal equations (−L)ᵀ(−L) x = (−L)ᵀ b:
/// the exact Newton direction through a symmetric positive system. Used
/// as the fallback when the symmetrized-operator step stalls; about
/// cond(L) times slower than [`pcg`] per digit, so not the default.
pub(crate) fn pcg_normal(
    op: &EllipticOperator,
    b: &[f64],
    tol_rel: f64,
    max_iter: usize,
    project_mean: bool,
) -> Result<(Vec<f64>, CgOutcome)> {
    let dom = op.domain().clone();
    let total = dom.points();
    let interior = dom.interior();
    let n_int = interior.len() as f64;
    let project = |v: &mut [f64]| {
        if project_mean {
            let mean: f64 = interior.iter().map(|&f| v[f as usize]).sum::<f64>() / n_int;
            for &fu in interior {
                v[fu as usize] -= mean;
            }
        }
    };
    let mut fwd = vec![0.0; total];
    let mut adj = vec![0.0; total];
    // normal-equation rhs: Aᵀ b with A = −L
    let mut bn = b.to_vec();
    project(&mut bn);
    apply_adjoint(op, &bn, &mut adj);
    let mut rhs: Vec<f64> = adj.iter().map(|&v| -v).collect();
    project(&mut rhs);
    // Jacobi preconditioner from the squared diagonal of A
    let diag_a = op.negative_diagonal();
    let diag: Vec<f64> = diag_a
        .iter()
        .map(|&d| if d > 0.0 { d * d } else { 1.0 })
        .collect();

    let apply_normal = |x: &[f64], out: &mut [f64], fwd: &mut [f64]| {
        apply_forward(op, x, fwd);
        apply_adjoint(op, fwd, out);
    };

    let mut x = vec![0.0; total];
    let mut r = rhs.clone();
    let norm_b = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok((
            x,
            CgOutcome {
                iterations: 0,
                rel_residual: 0.0,
                converged: true,
                truncated: false,
            },
        ));
    }
    let mut z = vec![0.0; total];
    for &fu in interior {
        let f = fu as usize;
        z[f] = r[f] / diag[f];
    }
    project(&mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; total];
    let mut rz: f64 = interior.iter().map(|&f| r[f as usize] * z[f as usize]).sum();
    let mut outcome = CgOutcome {
        iterations: 0,
        rel_residual: 1.0,
        converged: false,
        truncated: false,
    };
    for it in 0..max_iter {
        apply_normal(&p, &mut ap, &mut fwd);
        project(&mut ap);
        let pap: f64 = interior.iter().map(|&f| p[f as usize] * ap[f as usize]).sum();
        if !(pap > 0.0) {
            outcome.truncated = true;
            outcome.iterations = it;
            return Ok((x, outcome));
        }
        let alpha = rz / pap;
        for &fu in interior {
            let f = fu as usize;
            x[f] += alpha * p[f];
            r[f] -= alpha * ap[f];
        }
        let rn = interior
            .iter()
            .map(|&f| r[f as usize] * r[f as usize])
            .sum::<f64>()
            .sqrt();
        outcome.iterations = it + 1;
        outcome.rel_residual = rn / norm_b;
        if outcome.rel_residual <= tol_rel {
            outcome.converged = true;
            return Ok((x, outcome));
        }
        for &fu in interior {
            let f = fu as usize;
            z[f] = r[f] / diag[f];
        }
        project(&mut z);
        let rz_new: f64 = interior.iter().map(|&f| r[f as usize] * z[f as usize]).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for &fu in interior {
            let f = fu as usize;
            p[f] = z[f] + beta * p[f];
        }
    }
    // a partially converged exact-Newton direction is still usable
    Ok((x, outcome))
}

/// Forward application L v with the point's own coefficients. Also used
/// when folding fixed boundary values into a right-hand side (constant
/// coefficient operators are exactly symmetric there).
pub(crate) fn apply_forward(op: &EllipticOperator, v: &[f64], out: &mut [f64]) {
    let dom = op.domain().clone();
    out.fill(0.0);
    let strides = dom.strides();
    let axes = dom.axes();
    let mut idx = vec![0usize; axes];
    let torus = dom.kind() == DomainKind::Torus;
    for &fu in dom.interior() {
        let f = fu as usize;
        let mut acc = 0.0;
        if torus {
            dom.indices(f, &mut idx);
        }
        let at = |a: usize, step: isize, b: Option<(usize, isize)>| -> usize {
            if !torus {
                let mut t = f as isize + step * strides[a] as isize;
                if let Some((bb, sb)) = b {
                    t += sb * strides[bb] as isize;
                }
                t as usize
            } else {
                let mut id = idx.clone();
                id[a] = (id[a] as isize + step).rem_euclid(dom.shape()[a] as isize) as usize;
                if let Some((bb, sb)) = b {
                    id[bb] = (id[bb] as isize + sb).rem_euclid(dom.shape()[bb] as isize) as usize;
                }
                dom.flat(&id)
            }
        };
        for a in 0..axes {
            let ca = op.axis[a][f];
            acc += ca * (v[at(a, 1, None)] + v[at(a, -1, None)] - 2.0 * v[f]);
        }
        for (p, &(a, b)) in op.pairs.iter().enumerate() {
            let cc = op.cross[p][f];
            acc += cc
                * (v[at(a, 1, Some((b, 1)))] + v[at(a, -1, Some((b, -1)))]
                    - v[at(a, 1, Some((b, -1)))]
                    - v[at(a, -1, Some((b, 1)))]);
        }
        out[f] = acc;
    }
}

/// Harmonic extension: the trace-Laplace solve with zero density.
pub fn harmonic_extension(phi: &GridField) -> Result<GridField> {
    let zero = GridField::constant(phi.domain().clone(), 0.0);
    solve_poisson(&zero, phi)
}

/// Checks that a field matches given boundary data exactly (Dirichlet
/// solves never move boundary points).
pub fn boundary_matches(u: &GridField, phi: &GridField) -> bool {
    u.domain()
        .boundary()
        .iter()
        .all(|&f| (u.value(f as usize) - phi.value(f as usize)).abs() == 0.0)
}
