//! Elementary symmetric polynomials and the Γ_m cone algebra.
//!
//! Everything here operates on sorted real eigenvalue vectors. S_k is
//! evaluated through the coefficient recurrence of Π(1 + λ_i t) with
//! compensated summation, which stays stable for mixed-sign input;
//! subset enumeration exists only as a test oracle.

use crate::error::{domain_err, Error, Result};
use crate::rng::Rng64;

/// A sorted (descending) vector of real eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Builds a spectrum, sorting the entries in decreasing order.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain_err("spectrum must have length >= 1");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain_err("spectrum entries must be finite");
        }
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Spectrum { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Γ_m membership report: `member` holds iff every margin S_1..S_m
/// exceeds the tolerance passed to [`cone_membership`].
#[derive(Clone, Debug)]
pub struct ConeVerdict {
    pub member: bool,
    pub margins: Vec<f64>,
    pub m: usize,
}

/// Binomial coefficient C(n, k) as f64 (exact for the small n used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num: f64 = 1.0;
    for i in 0..k {
        num = num * (n - i) as f64 / (i + 1) as f64;
    }
    num.round()
}

/// All of S_0..S_upto for a raw value slice, by the coefficient
/// recurrence of Π(1 + λ_i t) with per-coefficient compensation.
pub(crate) fn sym_all_raw(values: &[f64], upto: usize) -> Vec<f64> {
    let mut e = vec![0.0f64; upto + 1];
    let mut comp = vec![0.0f64; upto + 1];
    e[0] = 1.0;
    for (i, &lam) in values.iter().enumerate() {
        let top = upto.min(i + 1);
        for j in (1..=top).rev() {
            let term = lam * e[j - 1] - comp[j];
            let t = e[j] + term;
            comp[j] = (t - e[j]) - term;
            e[j] = t;
        }
    }
    e
}

/// S_k(λ), the k-th elementary symmetric polynomial; S_0 = 1.
pub fn elem_sym(lambda: &Spectrum, k: usize) -> Result<f64> {
    let n = lambda.len();
    if k > n {
        return domain_err(format!("elem_sym degree {k} out of range for n={n}"));
    }
    Ok(sym_all_raw(lambda.values(), k)[k])
}

/// S_k of λ with the i-th entry replaced by zero; equals ∂S_{k+1}/∂λ_i.
pub fn elem_sym_reduced(lambda: &Spectrum, k: usize, i: usize) -> Result<f64> {
    let n = lambda.len();
    if i >= n {
        return domain_err(format!("reduced index {i} out of range for n={n}"));
    }
    if k > n - 1 {
        return domain_err(format!("reduced degree {k} out of range for n={n}"));
    }
    let filtered: Vec<f64> = lambda
        .values()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, &v)| v)
        .collect();
    Ok(sym_all_raw(&filtered, k)[k])
}

/// Tests λ against the cone Γ_m: member iff S_k(λ) > tol for k = 1..m.
///
/// tol = 0 tests the open cone; pass tol = -δ for the closed cone with
/// slack δ. The margins carry all S_1..S_m values.
pub fn cone_membership(lambda: &Spectrum, m: usize, tol: f64) -> Result<ConeVerdict> {
    let n = lambda.len();
    if m < 1 || m > n {
        return domain_err(format!("cone order {m} out of range for n={n}"));
    }
    let all = sym_all_raw(lambda.values(), m);
    let margins = all[1..=m].to_vec();
    let member = margins.iter().all(|&s| s > tol);
    Ok(ConeVerdict { member, margins, m })
}

/// Normalized means μ_k = (S_k/C(n,k))^{1/k} for k = 1..m.
///
/// Requires λ in the closed cone Γ̄_m (all S_k ≥ 0), otherwise the
/// fractional roots are undefined.
pub fn maclaurin_chain(lambda: &Spectrum, m: usize) -> Result<Vec<f64>> {
    let n = lambda.len();
    if m < 1 || m > n {
        return domain_err(format!("chain order {m} out of range for n={n}"));
    }
    let all = sym_all_raw(lambda.values(), m);
    let mut chain = Vec::with_capacity(m);
    for k in 1..=m {
        let sk = all[k];
        if sk < 0.0 {
            return domain_err(format!(
                "maclaurin_chain requires closed-cone input, S_{k} = {sk}"
            ));
        }
        chain.push((sk / binomial(n, k)).powf(1.0 / k as f64));
    }
    Ok(chain)
}

/// Both sides of the pairing inequality
/// Σ_i μ_i S_{m-1;i}(λ) ≥ m S_m(μ)^{1/m} S_m(λ)^{(m-1)/m}
/// for λ, μ in the open cone Γ_m.
pub fn garding_pairing(lambda: &Spectrum, mu: &Spectrum, m: usize) -> Result<(f64, f64)> {
    let n = lambda.len();
    if mu.len() != n {
        return domain_err("pairing requires spectra of equal length");
    }
    for (name, spec) in [("lambda", lambda), ("mu", mu)] {
        let verdict = cone_membership(spec, m, 0.0)?;
        if !verdict.member {
            return Err(Error::Domain(format!("{name} is outside the open cone Γ_{m}")));
        }
    }
    let mut lhs = 0.0;
    for i in 0..n {
        lhs += mu.values()[i] * elem_sym_reduced(lambda, m - 1, i)?;
    }
    let sm_mu = sym_all_raw(mu.values(), m)[m];
    let sm_la = sym_all_raw(lambda.values(), m)[m];
    let mf = m as f64;
    let rhs = mf * sm_mu.powf(1.0 / mf) * sm_la.powf((mf - 1.0) / mf);
    Ok((lhs, rhs))
}

/// Stack-allocated S_1..S_m positivity check for the sampler hot path.
#[inline]
fn margins_positive(values: &[f64], m: usize, shift: f64) -> bool {
    let mut e = [0.0f64; 9];
    e[0] = 1.0;
    for (i, &raw) in values.iter().enumerate() {
        let lam = raw + shift;
        let top = m.min(i + 1);
        for j in (1..=top).rev() {
            e[j] += lam * e[j - 1];
        }
    }
    e[1..=m].iter().all(|&s| s > 0.0)
}

/// Draws a point of the open cone Γ_m ⊂ ℝ^n.
///
/// A standard-normal vector g is shifted along the diagonal, g + c·1,
/// with c bisected to the cone entry; a positive jitter above the entry
/// value and a random overall scale spread samples from near the
/// boundary to deep inside. Uniform box sampling almost never lands in
/// Γ_m for m close to n, so the shift construction is used instead, with
/// a rejection retry as a final guard.
pub fn sample_gamma_m(n: usize, m: usize, rng: &mut Rng64) -> Spectrum {
    assert!(m >= 1 && m <= n && n <= 8);
    let mut g = [0.0f64; 8];
    loop {
        for slot in g.iter_mut().take(n) {
            *slot = rng.normal();
        }
        let vals = &g[..n];
        // the section {c : g + c·1 ∈ Γ_m} is a half-line; bracket its endpoint
        let mut hi = 1.0;
        let mut tries = 0;
        while !margins_positive(vals, m, hi) {
            hi *= 2.0;
            tries += 1;
            if tries > 24 {
                break;
            }
        }
        if !margins_positive(vals, m, hi) {
            continue;
        }
        let mut lo = -hi;
        for _ in 0..22 {
            let mid = 0.5 * (lo + hi);
            if margins_positive(vals, m, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let jitter = rng.uniform_in(0.02, 1.0);
        let scale = rng.uniform_in(0.25, 4.0);
        let lam: Vec<f64> = vals.iter().map(|&v| (v + hi + jitter) * scale).collect();
        let spec = match Spectrum::new(lam) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if let Ok(v) = cone_membership(&spec, m, 0.0) {
            if v.member {
                return spec;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Subset-enumeration oracle for S_k, exponential cost, test-only.
    pub(crate) fn elem_sym_brute(values: &[f64], k: usize) -> f64 {
        let n = values.len();
        if k == 0 {
            return 1.0;
        }
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut prod = 1.0;
            for (i, &v) in values.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    prod *= v;
                }
            }
            total += prod;
        }
        total
    }

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn elem_sym_small_cases() {
        assert_eq!(elem_sym(&spec(&[1.0, 1.0, 1.0]), 2).unwrap(), 3.0);
        assert_eq!(elem_sym(&spec(&[3.0, 2.0, 1.0]), 2).unwrap(), 11.0);
        assert_eq!(
            elem_sym(&spec(&[3.0, 2.0, 1.0]), 2).unwrap(),
            elem_sym_brute(&[3.0, 2.0, 1.0], 2)
        );
        assert_eq!(elem_sym(&spec(&[5.0, 0.0, -2.0]), 3).unwrap(), 0.0);
        assert_eq!(elem_sym(&spec(&[4.0, -1.0]), 0).unwrap(), 1.0);
    }

    #[test]
    fn elem_sym_rejects_bad_degree() {
        assert!(elem_sym(&spec(&[1.0, 2.0]), 3).is_err());
    }

    #[test]
    fn spectrum_sorts_and_validates() {
        let s = spec(&[1.0, 3.0, 2.0]);
        assert_eq!(s.values(), &[3.0, 2.0, 1.0]);
        assert!(Spectrum::new(vec![]).is_err());
        assert!(Spectrum::new(vec![f64::NAN]).is_err());
        assert!(Spectrum::new(vec![f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn reduced_matches_examples() {
        assert_eq!(elem_sym_reduced(&spec(&[1.0, 1.0, 1.0]), 1, 0).unwrap(), 2.0);
        // (3,2,1) with the middle entry zeroed: S_2(3,0,1) = 3
        assert_eq!(elem_sym_reduced(&spec(&[3.0, 2.0, 1.0]), 2, 1).unwrap(), 3.0);
        assert!(elem_sym_reduced(&spec(&[1.0, 2.0]), 2, 0).is_err());
        assert!(elem_sym_reduced(&spec(&[1.0, 2.0]), 1, 5).is_err());
    }

    #[test]
    fn reduced_is_partial_derivative() {
        // (S_{k+1}(λ+εe_i) - S_{k+1}(λ-εe_i)) / 2ε → S_{k;i}(λ)
        let base = [3.0, 2.0, 1.0, -0.5];
        let eps = 1e-6;
        for k in 0..=2usize {
            for i in 0..4 {
                let mut up = base.to_vec();
                up[i] += eps;
                let mut dn = base.to_vec();
                dn[i] -= eps;
                let fd = (elem_sym_brute(&up, k + 1) - elem_sym_brute(&dn, k + 1)) / (2.0 * eps);
                let red = elem_sym_reduced(&spec(&base), k, base_index_after_sort(&base, i))
                    .unwrap();
                // base is already sorted descending so indices agree
                assert!((fd - red).abs() < 1e-8, "k={k} i={i}: {fd} vs {red}");
            }
        }
    }

    fn base_index_after_sort(_values: &[f64], i: usize) -> usize {
        i
    }

    #[test]
    fn cone_membership_examples() {
        let v = cone_membership(&spec(&[1.0, 1.0, 1.0]), 3, 0.0).unwrap();
        assert!(v.member);
        assert_eq!(v.margins, vec![3.0, 3.0, 1.0]);

        let v = cone_membership(&spec(&[3.0, -1.0, -1.0]), 2, 0.0).unwrap();
        assert!(!v.member);
        assert_eq!(v.margins[1], -5.0);

        // S_2 = 0 exactly: outside the open cone, inside the closed one
        let v = cone_membership(&spec(&[2.0, 2.0, -1.0]), 2, 0.0).unwrap();
        assert!(!v.member);
        let v = cone_membership(&spec(&[2.0, 2.0, -1.0]), 2, -1e-12).unwrap();
        assert!(v.member);

        assert!(cone_membership(&spec(&[1.0]), 2, 0.0).is_err());
    }

    #[test]
    fn maclaurin_chain_examples() {
        let chain = maclaurin_chain(&spec(&[2.5, 2.5, 2.5]), 3).unwrap();
        for mu in chain {
            assert!((mu - 2.5).abs() < 1e-12);
        }
        let chain = maclaurin_chain(&spec(&[3.0, 2.0, 1.0]), 3).unwrap();
        assert!((chain[0] - 2.0).abs() < 1e-12);
        assert!((chain[1] - (11.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((chain[2] - 6.0f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(chain[0] >= chain[1] && chain[1] >= chain[2]);

        assert!(maclaurin_chain(&spec(&[1.0, -3.0]), 2).is_err());
    }

    #[test]
    fn garding_pairing_examples() {
        // λ = μ gives Euler's identity: both sides equal m·S_m
        let lam = spec(&[3.0, 2.0, 1.0]);
        let (lhs, rhs) = garding_pairing(&lam, &lam, 2).unwrap();
        assert!((lhs - 2.0 * 11.0).abs() < 1e-12);
        assert!((lhs - rhs).abs() < 1e-10);

        let mu = spec(&[1.0, 1.0, 1.0]);
        let (lhs, rhs) = garding_pairing(&lam, &mu, 2).unwrap();
        assert!((lhs - 12.0).abs() < 1e-12);
        assert!((rhs - 2.0 * (3.0f64).sqrt() * (11.0f64).sqrt()).abs() < 1e-12);
        assert!(lhs >= rhs);

        assert!(garding_pairing(&spec(&[1.0, -1.0]), &spec(&[1.0, 1.0]), 2).is_err());
    }

    #[test]
    fn sampler_lands_in_cone() {
        let mut rng = Rng64::seed_from(11);
        for n in 1..=4usize {
            for m in 1..=n {
                for _ in 0..200 {
                    let lam = sample_gamma_m(n, m, &mut rng);
                    let v = cone_membership(&lam, m, 0.0).unwrap();
                    assert!(v.member, "n={n} m={m} λ={:?}", lam.values());
                }
            }
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(6, 0), 1.0);
        assert_eq!(binomial(6, 6), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
        assert_eq!(binomial(10, 3), 120.0);
    }
}
