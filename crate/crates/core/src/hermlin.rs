//! Dense Hermitian linear algebra at small dimension (n ≤ 4).
//!
//! Eigenvalues come from cyclic complex Jacobi rotations, which are
//! branch-free and very accurate at these sizes. The symmetric functions
//! S_k of the eigenvalues are also available exactly as sums of principal
//! k×k minors, without any eigendecomposition; the hot paths in the grid
//! code use that route.

use num_complex::Complex64;

use crate::error::{domain_err, Result};
use crate::symmfunc::{sym_all_raw, Spectrum};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 4;

const JACOBI_SWEEP_LIMIT: usize = 60;
const JACOBI_OFF_TOL: f64 = 1e-14;

/// An n×n complex Hermitian matrix, n ≤ 4, stored inline.
#[derive(Clone, Copy, Debug)]
pub struct HermitianMatrix {
    dim: usize,
    e: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl HermitianMatrix {
    /// Builds a matrix from row-major entries, checking hermiticity to
    /// 1e-14 (absolute, relative to the largest entry for large data) and
    /// then symmetrizing so the stored matrix is Hermitian exactly, with
    /// real diagonal.
    pub fn new(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if dim < 1 || dim > MAX_DIM {
            return domain_err(format!("matrix dimension {dim} outside 1..=4"));
        }
        if entries.len() != dim * dim {
            return domain_err("entry count does not match dimension");
        }
        let scale = entries
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max)
            .max(1.0);
        for j in 0..dim {
            for k in j..dim {
                let d = entries[j * dim + k] - entries[k * dim + j].conj();
                if d.norm() > 1e-14 * scale {
                    return domain_err(format!(
                        "matrix is not Hermitian at ({j},{k}): asymmetry {}",
                        d.norm()
                    ));
                }
            }
        }
        let mut m = HermitianMatrix::zero(dim);
        for j in 0..dim {
            for k in j..dim {
                let avg = 0.5 * (entries[j * dim + k] + entries[k * dim + j].conj());
                let avg = if j == k { Complex64::new(avg.re, 0.0) } else { avg };
                m.e[j][k] = avg;
                m.e[k][j] = avg.conj();
            }
        }
        Ok(m)
    }

    /// Builds from the upper triangle (k ≥ j); the lower triangle is the
    /// conjugate mirror and the diagonal keeps only its real part. No
    /// hermiticity check is needed by construction.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        debug_assert!(dim >= 1 && dim <= MAX_DIM);
        let mut m = HermitianMatrix::zero(dim);
        for j in 0..dim {
            for k in j..dim {
                let v = f(j, k);
                let v = if j == k { Complex64::new(v.re, 0.0) } else { v };
                m.e[j][k] = v;
                m.e[k][j] = v.conj();
            }
        }
        m
    }

    pub fn zero(dim: usize) -> Self {
        HermitianMatrix {
            dim,
            e: [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = HermitianMatrix::zero(dim);
        for j in 0..dim {
            m.e[j][j] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = HermitianMatrix::zero(values.len());
        for (j, &v) in values.iter().enumerate() {
            m.e[j][j] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.e[j][k]
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut m = *self;
        for j in 0..self.dim {
            for k in 0..self.dim {
                m.e[j][k] += other.e[j][k];
            }
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut m = *self;
        for j in 0..self.dim {
            for k in 0..self.dim {
                m.e[j][k] *= c;
            }
        }
        m
    }

    /// Plain matrix product (the result is Hermitian only when the
    /// factors commute; callers that need Hermitian output symmetrize).
    fn matmul(&self, other: &Self) -> [[Complex64; MAX_DIM]; MAX_DIM] {
        let mut out = [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM];
        for j in 0..self.dim {
            for k in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..self.dim {
                    acc += self.e[j][l] * other.e[l][k];
                }
                out[j][k] = acc;
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim {
            for k in 0..self.dim {
                s += self.e[j][k].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// S_0..S_dim of the eigenvalues, computed exactly as sums of
    /// principal minors (no eigendecomposition).
    pub fn minor_sums(&self) -> [f64; MAX_DIM + 1] {
        let n = self.dim;
        let mut s = [0.0f64; MAX_DIM + 1];
        s[0] = 1.0;
        for k in 1..=n {
            let mut total = 0.0;
            // iterate over k-subsets of 0..n via bitmask
            for mask in 1u32..(1 << n) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let mut rows = [0usize; MAX_DIM];
                let mut cnt = 0;
                for i in 0..n {
                    if mask & (1 << i) != 0 {
                        rows[cnt] = i;
                        cnt += 1;
                    }
                }
                total += self.principal_det(&rows[..k]);
            }
            s[k] = total;
        }
        s
    }

    /// Real determinant of the principal submatrix on `rows` (Hermitian
    /// principal minors are real; the imaginary residue is dropped).
    fn principal_det(&self, rows: &[usize]) -> f64 {
        match rows.len() {
            1 => self.e[rows[0]][rows[0]].re,
            2 => {
                let (a, b) = (rows[0], rows[1]);
                self.e[a][a].re * self.e[b][b].re - self.e[a][b].norm_sqr()
            }
            3 => det3(&sub3(self, rows)).re,
            4 => det4(&self.e).re,
            _ => unreachable!(),
        }
    }

    /// Eigenvalues, sorted descending. Cyclic complex Jacobi rotations,
    /// sweeping until the off-diagonal Frobenius mass drops below
    /// 1e-14 · ‖A‖_F.
    pub fn eigvals(&self) -> Spectrum {
        let n = self.dim;
        let norm = self.frobenius();
        if n == 1 || norm == 0.0 {
            let vals: Vec<f64> = (0..n).map(|j| self.e[j][j].re).collect();
            return Spectrum::new(vals).expect("finite diagonal");
        }
        let mut a = self.e;
        let stop = (JACOBI_OFF_TOL * norm).powi(2);
        for _sweep in 0..JACOBI_SWEEP_LIMIT {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += 2.0 * a[p][q].norm_sqr();
                }
            }
            if off <= stop {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, n, p, q);
                }
            }
        }
        let vals: Vec<f64> = (0..n).map(|j| a[j][j].re).collect();
        Spectrum::new(vals).expect("jacobi produced non-finite eigenvalue")
    }
}

fn sub3(m: &HermitianMatrix, rows: &[usize]) -> [[Complex64; 3]; 3] {
    let mut s = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in rows.iter().enumerate() {
            s[i][j] = m.e[r][c];
        }
    }
    s
}

fn det3(a: &[[Complex64; 3]; 3]) -> Complex64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn det4(a: &[[Complex64; MAX_DIM]; MAX_DIM]) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for col in 0..4 {
        let mut minor = [[Complex64::new(0.0, 0.0); 3]; 3];
        for r in 1..4 {
            let mut cc = 0;
            for c in 0..4 {
                if c == col {
                    continue;
                }
                minor[r - 1][cc] = a[r][c];
                cc += 1;
            }
        }
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * a[0][col] * det3(&minor);
    }
    total
}

/// One complex Jacobi rotation annihilating the (p,q) entry.
fn jacobi_rotate(a: &mut [[Complex64; MAX_DIM]; MAX_DIM], n: usize, p: usize, q: usize) {
    let apq = a[p][q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let alpha = a[p][p].re;
    let beta = a[q][q].re;
    let tau = (beta - alpha) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // column update: col_p ← c·col_p − s·conj(phase)·col_q, col_q ← s·phase·col_p + c·col_q
    for j in 0..n {
        let vp = a[j][p];
        let vq = a[j][q];
        a[j][p] = c * vp - s * phase.conj() * vq;
        a[j][q] = s * phase * vp + c * vq;
    }
    // row update with conjugated coefficients
    for j in 0..n {
        let wp = a[p][j];
        let wq = a[q][j];
        a[p][j] = c * wp - s * phase * wq;
        a[q][j] = s * phase.conj() * wp + c * wq;
    }
    a[p][p] = Complex64::new(alpha - t * r, 0.0);
    a[q][q] = Complex64::new(beta + t * r, 0.0);
    a[p][q] = Complex64::new(0.0, 0.0);
    a[q][p] = Complex64::new(0.0, 0.0);
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
pub fn eigvals(m: &HermitianMatrix) -> Spectrum {
    m.eigvals()
}

/// S_m of the eigenvalues of `a`, via exact principal-minor sums.
pub fn sigma(a: &HermitianMatrix, m: usize) -> Result<f64> {
    if m > a.dim() {
        return domain_err(format!("sigma degree {m} out of range for n={}", a.dim()));
    }
    Ok(a.minor_sums()[m])
}

/// A positive definite Hermitian metric together with its Cholesky factor.
#[derive(Clone, Copy, Debug)]
pub struct Metric {
    matrix: HermitianMatrix,
    chol: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl Metric {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let n = matrix.dim();
        let mut l = [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM];
        for j in 0..n {
            let mut d = matrix.e[j][j].re;
            for k in 0..j {
                d -= l[j][k].norm_sqr();
            }
            if d <= 0.0 {
                return domain_err("metric is not positive definite");
            }
            l[j][j] = Complex64::new(d.sqrt(), 0.0);
            for i in (j + 1)..n {
                let mut v = matrix.e[i][j];
                for k in 0..j {
                    v -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = v / l[j][j].re;
            }
        }
        Ok(Metric { matrix, chol: l })
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn cholesky_factor(&self) -> &[[Complex64; MAX_DIM]; MAX_DIM] {
        &self.chol
    }
}

/// Eigenvalues of M relative to the metric V, i.e. of L⁻¹ M L⁻* where
/// V = L L*. These define the cones Γ_k(V).
pub fn eigvals_relative(m: &HermitianMatrix, v: &Metric) -> Result<Spectrum> {
    let n = m.dim();
    if v.matrix.dim() != n {
        return domain_err("metric dimension mismatch");
    }
    let l = &v.chol;
    // forward solve L Y = M, column by column
    let mut y = [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM];
    for col in 0..n {
        for row in 0..n {
            let mut acc = m.e[row][col];
            for k in 0..row {
                acc -= l[row][k] * y[k][col];
            }
            y[row][col] = acc / l[row][row].re;
        }
    }
    // solve B L* = Y row by row (L* is upper triangular)
    let mut b = [[Complex64::new(0.0, 0.0); MAX_DIM]; MAX_DIM];
    for row in 0..n {
        for col in 0..n {
            let mut acc = y[row][col];
            for k in 0..col {
                // (L*)[k][col] = conj(L[col][k])
                acc -= b[row][k] * l[col][k].conj();
            }
            b[row][col] = acc / l[col][col].re;
        }
    }
    let herm = HermitianMatrix::from_upper(n, |j, k| 0.5 * (b[j][k] + b[k][j].conj()));
    Ok(herm.eigvals())
}

/// Full polarization D(A_1, …, A_m) of A ↦ S_m(λ(A)): the symmetric
/// multilinear form with D(A,…,A) = S_m(λ(A)), evaluated by
/// inclusion-exclusion over subset sums:
/// D = (1/m!) Σ_{∅≠S⊆{1..m}} (−1)^{m−|S|} S_m(λ(Σ_{i∈S} A_i)).
/// Subset sums are built incrementally so each is formed once.
pub fn mixed_sigma(mats: &[HermitianMatrix]) -> Result<f64> {
    let m = mats.len();
    if m == 0 {
        return domain_err("mixed_sigma needs at least one matrix");
    }
    let n = mats[0].dim();
    if mats.iter().any(|a| a.dim() != n) {
        return domain_err("mixed_sigma arguments must share a dimension");
    }
    if m > n {
        return domain_err(format!("mixed degree {m} exceeds dimension {n}"));
    }
    let mut sums: Vec<HermitianMatrix> = vec![HermitianMatrix::zero(n); 1 << m];
    let mut total = 0.0;
    for s in 1usize..(1 << m) {
        let low = s & s.wrapping_neg();
        let idx = low.trailing_zeros() as usize;
        sums[s] = sums[s ^ low].add(&mats[idx]);
        let sm = sums[s].minor_sums()[m];
        let sign = if (m - s.count_ones() as usize) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        total += sign * sm;
    }
    let mut fact = 1.0;
    for i in 2..=m {
        fact *= i as f64;
    }
    Ok(total / fact)
}

/// Derivative matrix of A ↦ S_m(λ(A)): the Hermitian matrix W with
/// dS_m(A)·B = tr(W B). Assembled exactly from the symmetric functions
/// of A as the matrix polynomial
/// W = Σ_{j=0}^{m-1} (−1)^j S_{m-1-j}(λ(A)) A^j,
/// which reduces to the identity for m = 1 and to the adjugate for
/// m = n. Positive semidefinite whenever λ(A) ∈ Γ̄_m.
pub fn cominor_matrix(a: &HermitianMatrix, m: usize) -> Result<HermitianMatrix> {
    let n = a.dim();
    if m < 1 || m > n {
        return domain_err(format!("cominor degree {m} out of range for n={n}"));
    }
    let s = a.minor_sums();
    let mut w = HermitianMatrix::identity(n).scale(s[m - 1]);
    if m >= 2 {
        let mut power = *a; // A^j for j = 1..m-1
        for j in 1..m {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            w = w.add(&power.scale(sign * s[m - 1 - j]));
            if j + 1 < m {
                let prod = power.matmul(a);
                power = HermitianMatrix::from_upper(n, |r, c| 0.5 * (prod[r][c] + prod[c][r].conj()));
            }
        }
    }
    Ok(HermitianMatrix::from_upper(n, |j, k| 0.5 * (w.e[j][k] + w.e[k][j].conj())))
}

/// Re tr(W·B) for Hermitian W, B — the pairing under which
/// `cominor_matrix` is the gradient of S_m.
pub fn trace_product(w: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let n = w.dim();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            acc += (w.e[j][k] * b.e[k][j]).re;
        }
    }
    acc
}

/// Both sides of the mixed Gårding inequality
/// D(A_1,…,A_m) ≥ Π_i S_m(λ(A_i))^{1/m}
/// for matrices whose eigenvalues lie in the open cone Γ_m.
pub fn garding_mixed_check(mats: &[HermitianMatrix]) -> Result<(f64, f64)> {
    let m = mats.len();
    for (i, a) in mats.iter().enumerate() {
        let s = a.minor_sums();
        if s[1..=m.min(a.dim())].iter().any(|&v| v <= 0.0) {
            return domain_err(format!("argument {i} is outside the open cone Γ_{m}"));
        }
    }
    let lhs = mixed_sigma(mats)?;
    let mut rhs = 1.0;
    for a in mats {
        rhs *= a.minor_sums()[m].powf(1.0 / m as f64);
    }
    Ok((lhs, rhs))
}

/// S_k(λ) for k = 0..=upto straight from a value slice (helper shared
/// with the cone code).
pub fn sym_values(values: &[f64], upto: usize) -> Vec<f64> {
    sym_all_raw(values, upto)
}
