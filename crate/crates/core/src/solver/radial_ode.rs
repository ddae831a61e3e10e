//! High-accuracy radial oracle for σ_m(u) = f with radial data.
//!
//! For u = g(|z|²) the equation reduces to the scalar ODE
//! C(n−1,m)·g′^m + C(n−1,m−1)·g′^{m−1}(g′ + t·g″) = f(t),
//! which collapses under the integrating factor t^n to the first
//! integral (t^n g′^m)′ = (n/C(n,m))·t^{n−1} f(t). The solver evaluates
//! that integral with per-interval Simpson quadrature on a fine lattice,
//! so the only error is quadrature error; the returned profile also
//! carries g″ for Hermite interpolation, recovered by central
//! differences of g′ on the lattice.

use crate::error::{domain_err, numerical_err, Result};
use crate::field::radial::RadialProfile;
use crate::symmfunc::binomial;

const LATTICE_NODES: usize = 10_000;

fn cumulative_simpson(f: &impl Fn(f64) -> f64, t0: f64, t1: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    // returns (ts, integral of f from t0 to each node)
    let dt = (t1 - t0) / nodes as f64;
    let mut ts = Vec::with_capacity(nodes + 1);
    let mut acc = Vec::with_capacity(nodes + 1);
    let mut total = 0.0;
    ts.push(t0);
    acc.push(0.0);
    for i in 0..nodes {
        let a = t0 + i as f64 * dt;
        let b = a + dt;
        let mid = 0.5 * (a + b);
        total += dt / 6.0 * (f(a) + 4.0 * f(mid) + f(b));
        ts.push(b);
        acc.push(total);
    }
    (ts, acc)
}

fn central_diff(ts: &[f64], v: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        if i == 0 {
            d[i] = (v[1] - v[0]) / (ts[1] - ts[0]);
        } else if i == n - 1 {
            d[i] = (v[n - 1] - v[n - 2]) / (ts[n - 1] - ts[n - 2]);
        } else {
            d[i] = (v[i + 1] - v[i - 1]) / (ts[i + 1] - ts[i - 1]);
        }
    }
    d
}

/// Residual of a profile under the radial equation, measured on interior
/// lattice nodes relative to max(1, sup f). Used as the solver's
/// self-check and exposed for tests.
pub fn radial_residual(
    profile: &RadialProfile,
    f: &impl Fn(f64) -> f64,
    m: usize,
    n: usize,
    t_lo: f64,
    t_hi: f64,
) -> f64 {
    let c_lead = binomial(n - 1, m);
    let c_sub = binomial(n - 1, m - 1);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    let probes = 500;
    for i in 1..probes {
        let t = t_lo + (t_hi - t_lo) * i as f64 / probes as f64;
        let v = profile.g1(t);
        let vp = profile.g2(t);
        let lhs = c_lead * v.powi(m as i32) + c_sub * v.powi(m as i32 - 1) * (v + t * vp);
        let target = f(t);
        scale = scale.max(target.abs());
        worst = worst.max((lhs - target).abs());
    }
    worst / scale
}

/// Solves the radial Dirichlet problem on [0, t_max] (t = |z|²) with
/// regularity at the origin (g′ bounded) and g(t_max) = boundary_value.
pub fn solve_radial(
    f: impl Fn(f64) -> f64,
    m: usize,
    n: usize,
    t_max: f64,
    boundary_value: f64,
) -> Result<RadialProfile> {
    if m < 1 || m > n {
        return domain_err(format!("radial degree {m} out of range for n={n}"));
    }
    if !(t_max > 0.0) {
        return domain_err("radial solve needs t_max > 0");
    }
    let c_nm = binomial(n, m);
    let weight = |s: f64| -> f64 { s.powi(n as i32 - 1) * f(s) };
    // first integral: t^n v^m = (n/C(n,m)) ∫_0^t s^{n-1} f ds
    let (ts, integral) = cumulative_simpson(&weight, 0.0, t_max, LATTICE_NODES);
    for (i, &w) in integral.iter().enumerate() {
        if w < -1e-12 * (1.0 + w.abs()) {
            return domain_err(format!("density must be nonnegative (mass {w} at node {i})"));
        }
    }
    let mf = 1.0 / m as f64;
    let dg: Vec<f64> = ts
        .iter()
        .zip(&integral)
        .map(|(&t, &w)| {
            if t == 0.0 {
                (f(0.0) / c_nm).max(0.0).powf(mf)
            } else {
                ((n as f64 / c_nm) * w.max(0.0) / t.powi(n as i32)).powf(mf)
            }
        })
        .collect();
    finish_profile(ts, dg, boundary_value, "radial-ode", true)
}

/// Solves the radial problem on the annulus t ∈ [t0, t1] with prescribed
/// values g(t0) = g_lo and g(t1) = g_hi, g_hi ≥ g_lo. The free constant
/// of the first integral is found by bisection on the induced increment.
pub fn solve_radial_annulus(
    f: impl Fn(f64) -> f64,
    m: usize,
    n: usize,
    t0: f64,
    g_lo: f64,
    t1: f64,
    g_hi: f64,
) -> Result<RadialProfile> {
    if m < 1 || m > n {
        return domain_err(format!("radial degree {m} out of range for n={n}"));
    }
    if !(t0 > 0.0 && t1 > t0) {
        return domain_err("annulus needs 0 < t0 < t1");
    }
    if g_hi < g_lo {
        return domain_err("annulus boundary values must be nondecreasing outward");
    }
    let c_nm = binomial(n, m);
    let weight = |s: f64| -> f64 { s.powi(n as i32 - 1) * f(s) };
    let (ts, j) = cumulative_simpson(&weight, t0, t1, LATTICE_NODES);
    if j.iter().any(|&w| w < -1e-12) {
        return domain_err("density must be nonnegative");
    }
    let mf = 1.0 / m as f64;
    let increment = |c0: f64| -> f64 {
        // trapezoid of v = ((c0 + (n/C)j)/t^n)^{1/m} over the lattice
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (i, (&t, &w)) in ts.iter().zip(&j).enumerate() {
            let v = ((c0 + (n as f64 / c_nm) * w).max(0.0) / t.powi(n as i32)).powf(mf);
            if i > 0 {
                acc += 0.5 * (v + prev) * (ts[i] - ts[i - 1]);
            }
            prev = v;
        }
        acc
    };
    let target = g_hi - g_lo;
    let mut lo = 0.0;
    if increment(lo) > target + 1e-14 {
        return domain_err("annulus data admits no nondecreasing radial solution");
    }
    let mut hi = 1.0;
    while increment(hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return numerical_err("annulus constant search failed to bracket");
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if increment(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c0 = 0.5 * (lo + hi);
    let dg: Vec<f64> = ts
        .iter()
        .zip(&j)
        .map(|(&t, &w)| ((c0 + (n as f64 / c_nm) * w).max(0.0) / t.powi(n as i32)).powf(mf))
        .collect();
    finish_profile(ts, dg, g_lo, "radial-annulus", false)
}

fn finish_profile(
    ts: Vec<f64>,
    dg: Vec<f64>,
    anchor_value: f64,
    label: &str,
    anchor_at_end: bool,
) -> Result<RadialProfile> {
    // integrate v once more (trapezoid on the fine lattice) to get g
    let nodes = ts.len();
    let mut g = vec![0.0; nodes];
    for i in 1..nodes {
        g[i] = g[i - 1] + 0.5 * (dg[i] + dg[i - 1]) * (ts[i] - ts[i - 1]);
    }
    let shift = if anchor_at_end {
        anchor_value - g[nodes - 1]
    } else {
        anchor_value - g[0]
    };
    for v in g.iter_mut() {
        *v += shift;
    }
    let ddg = central_diff(&ts, &dg);
    Ok(RadialProfile::Sampled {
        ts,
        g,
        dg,
        ddg,
        label: label.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_density_gives_quadratic() {
        // f = C(n,m)·c^m  ⇒  g(t) = c·t + shift
        for (n, m, c) in [(2usize, 1usize, 0.7f64), (2, 2, 1.3), (3, 2, 0.9)] {
            let cnm = binomial(n, m);
            let f = move |_t: f64| cnm * c.powi(m as i32);
            let profile = solve_radial(f, m, n, 1.0, c).unwrap();
            for t in [0.05, 0.3, 0.77, 1.0] {
                assert!((profile.g(t) - c * t).abs() < 1e-9, "n={n} m={m} t={t}");
                assert!((profile.g1(t) - c).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn self_check_residual_small_for_smooth_density() {
        let n = 2;
        let m = 2;
        let f = |t: f64| 4.0 + 3.0 * t + (2.0 * t).sin();
        let profile = solve_radial(f, m, n, 1.0, 0.0).unwrap();
        let res = radial_residual(&profile, &f, m, n, 0.02, 0.98);
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn zero_density_annulus_is_affine_in_power() {
        // f = 0 on [t0, t1]: g = a + b·t^{1−n/m}, an affine image of the
        // singular power profile
        let (n, m) = (3usize, 2usize);
        let profile = solve_radial_annulus(|_| 0.0, m, n, 0.25, -1.0, 1.0, 0.0).unwrap();
        // fit a + b·t^{-1/2} from endpoints and compare mid values
        let p = |t: f64| t.powf(1.0 - n as f64 / m as f64);
        let b = (0.0 - (-1.0)) / (p(1.0) - p(0.25));
        let a = -1.0 - b * p(0.25);
        for t in [0.3, 0.5, 0.8] {
            assert!(
                (profile.g(t) - (a + b * p(t))).abs() < 1e-7,
                "t={t}: {} vs {}",
                profile.g(t),
                a + b * p(t)
            );
        }
    }

    #[test]
    fn annulus_rejects_decreasing_data() {
        assert!(solve_radial_annulus(|_| 0.0, 1, 2, 0.25, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn negative_density_rejected() {
        assert!(solve_radial(|_t| -1.0, 1, 2, 1.0, 0.0).is_err());
    }
}
