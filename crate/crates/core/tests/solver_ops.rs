//! Solver contracts beyond the unit tests: comparison monotonicity,
//! boundary dominance, the radial oracle on a staircase ball, torus
//! equivariance, the mixed Gårding bound on solution pairs, and field
//! file round-trips of solver output.

use hesslab_core::field::{
    hessian_at, load_field, radius_sq_of, save_field, GridDomain, GridField,
};
use hesslab_core::hermlin::mixed_sigma;
use hesslab_core::solver::{solve_dirichlet, solve_radial, solve_torus, SolveConfig};
use hesslab_core::symmfunc::binomial;

fn cfg(tol: f64) -> SolveConfig {
    SolveConfig {
        tol_residual: tol,
        ..SolveConfig::default()
    }
}

#[test]
fn comparison_monotonicity_in_density() {
    // f_u ≤ f_v with equal boundary data: u ≥ v − C·h²
    let dom = GridDomain::box_on(2, 11, -1.0, 1.0).unwrap();
    let m = 2usize;
    let phi = GridField::from_fn(dom.clone(), |p| 0.8 * radius_sq_of(p));
    let f_u = GridField::constant(dom.clone(), 2.0);
    let f_v = GridField::from_fn(dom.clone(), |p| {
        2.0 + 3.0 * (-4.0 * radius_sq_of(p)).exp()
    });
    let u = solve_dirichlet(&f_u, &phi, m, &cfg(1e-9)).unwrap();
    let v = solve_dirichlet(&f_v, &phi, m, &cfg(1e-9)).unwrap();
    assert!(u.converged && v.converged);
    let h = dom.spacing();
    let mut worst = f64::NEG_INFINITY;
    for &f in dom.interior() {
        worst = worst.max(v.solution.value(f as usize) - u.solution.value(f as usize));
    }
    assert!(worst <= 5.0 * h * h, "monotonicity slack {worst}");
    // and the perturbed solution is strictly lower somewhere
    let mut gap = f64::NEG_INFINITY;
    for &f in dom.interior() {
        gap = gap.max(u.solution.value(f as usize) - v.solution.value(f as usize));
    }
    assert!(gap > 1e-3);
}

#[test]
fn boundary_dominance() {
    // φ₁ ≤ φ₂ with equal density: u₁ ≤ u₂ + C·h²
    let dom = GridDomain::box_on(2, 9, -1.0, 1.0).unwrap();
    let m = 2usize;
    let f = GridField::constant(dom.clone(), 1.0);
    let phi1 = GridField::from_fn(dom.clone(), |p| 0.5 * radius_sq_of(p) - 0.3);
    let phi2 = GridField::from_fn(dom.clone(), |p| 0.5 * radius_sq_of(p));
    let u1 = solve_dirichlet(&f, &phi1, m, &cfg(1e-9)).unwrap();
    let u2 = solve_dirichlet(&f, &phi2, m, &cfg(1e-9)).unwrap();
    let h = dom.spacing();
    for &fl in dom.interior() {
        assert!(
            u1.solution.value(fl as usize) <= u2.solution.value(fl as usize) + 5.0 * h * h
        );
    }
}

#[test]
fn radial_oracle_on_staircase_ball() {
    let (n, m) = (2usize, 2usize);
    let f_radial = |t: f64| 4.0 + 3.0 * t;
    let profile = solve_radial(f_radial, m, n, 1.6, 0.0).unwrap();
    let dom = GridDomain::ball(n, 13, 1.0).unwrap();
    let f = GridField::from_fn(dom.clone(), |p| f_radial(radius_sq_of(p)));
    let phi = GridField::from_fn(dom.clone(), |p| profile.g(radius_sq_of(p)));
    let rep = solve_dirichlet(&f, &phi, m, &cfg(1e-9)).unwrap();
    assert!(rep.converged);
    let exact = GridField::from_fn(dom.clone(), |p| profile.g(radius_sq_of(p)));
    let err = rep.solution.sup_diff_interior(&exact).unwrap();
    let h = dom.spacing();
    assert!(err <= 1.5 * h * h, "error {err} at h={h}");
}

#[test]
fn m_ladder_independent_routes() {
    // the same data solved for every admissible m; m = 1 checked against
    // the direct linear route, m = n against the radial oracle
    let n = 2usize;
    let dom = GridDomain::box_on(n, 9, -0.7, 0.7).unwrap();
    for m in 1..=n {
        let cnm = binomial(n, m);
        let f_radial = move |t: f64| cnm * (1.0 + t);
        let profile = solve_radial(f_radial, m, n, 2.0, 0.0).unwrap();
        let f = GridField::from_fn(dom.clone(), |p| f_radial(radius_sq_of(p)));
        let phi = GridField::from_fn(dom.clone(), |p| profile.g(radius_sq_of(p)));
        let rep = solve_dirichlet(&f, &phi, m, &cfg(1e-10)).unwrap();
        assert!(rep.converged, "m={m}");
        let exact = GridField::from_fn(dom.clone(), |p| profile.g(radius_sq_of(p)));
        let err = rep.solution.sup_diff_interior(&exact).unwrap();
        let h = dom.spacing();
        assert!(err <= 2.0 * h * h, "m={m}: {err}");
    }
}

#[test]
fn weak_garding_on_solution_pair() {
    // mixed σ of two solution Hessians dominates the geometric mean of
    // the densities up to O(h²)
    let dom = GridDomain::box_on(2, 9, -1.0, 1.0).unwrap();
    let m = 2usize;
    let phi = GridField::from_fn(dom.clone(), |p| radius_sq_of(p));
    let f1 = GridField::constant(dom.clone(), 3.0);
    let f2 = GridField::from_fn(dom.clone(), |p| 3.0 + (p[0] * 2.0).sin().powi(2));
    let u1 = solve_dirichlet(&f1, &phi, m, &cfg(1e-9)).unwrap().solution;
    let u2 = solve_dirichlet(&f2, &phi, m, &cfg(1e-9)).unwrap().solution;
    let h = dom.spacing();
    let mut failures = 0usize;
    for &fl in dom.interior() {
        let (Some(h1), Some(h2)) = (hessian_at(&u1, fl as usize), hessian_at(&u2, fl as usize))
        else {
            continue;
        };
        let mixed = mixed_sigma(&[h1, h2]).unwrap();
        let bound = (f1.value(fl as usize) * f2.value(fl as usize)).sqrt();
        if mixed < bound - 5.0 * h * h {
            failures += 1;
        }
    }
    assert_eq!(failures, 0);
}

#[test]
fn maximal_solution_below_quadratic_and_lift_monotone() {
    use hesslab_core::field::hessian_density;
    use hesslab_core::field::Normalization;
    use hesslab_core::solver::maximal_solution;
    // φ = c|z|² on the sphere: the maximal function stays below the
    // quadratic and carries at most ε_last of density
    let dom = GridDomain::ball(2, 11, 1.0).unwrap();
    let m = 2usize;
    let c = 0.8;
    let phi = GridField::from_fn(dom.clone(), |p| c * radius_sq_of(p));
    let lift = vec![0.25, 0.0625, 0.015625, 0.004];
    let scfg = SolveConfig {
        degenerate_lift: lift.clone(),
        tol_residual: 1e-8,
        admissibility_margin: 1e-8,
        ..SolveConfig::default()
    };
    let rep = maximal_solution(&phi, m, &scfg).unwrap();
    let h = dom.spacing();
    let quad = GridField::from_fn(dom.clone(), |p| c * radius_sq_of(p));
    // the quadratic carries density C(n,m)c^m ≥ ε at every lift stage, so
    // by comparison the maximal function dominates it (and stays below
    // the boundary sup by the maximum principle)
    let sup_phi = phi.max_boundary();
    for &f in dom.interior() {
        let v = rep.solution.value(f as usize);
        assert!(v >= quad.value(f as usize) - 5.0 * h * h);
        assert!(v <= sup_phi + 5.0 * h * h);
    }
    let density = hessian_density(&rep.solution, m, Normalization::Raw).unwrap();
    let eps_last = *lift.last().unwrap();
    for &f in dom.interior() {
        assert!(density.value(f as usize) <= eps_last * 1.5 + 5.0 * h * h);
    }

    // two lifts ε > ε′: the deeper lift lies below, up to h² slack
    let shallow = SolveConfig {
        degenerate_lift: vec![0.25],
        ..scfg.clone()
    };
    let deep = SolveConfig {
        degenerate_lift: vec![0.25, 0.0625],
        ..scfg
    };
    let u_eps = maximal_solution(&phi, m, &shallow).unwrap().solution;
    let u_eps2 = maximal_solution(&phi, m, &deep).unwrap().solution;
    for &f in dom.interior() {
        assert!(u_eps.value(f as usize) <= u_eps2.value(f as usize) + 5.0 * h * h);
    }
}

#[test]
fn torus_translation_equivariance() {
    let dom = GridDomain::torus(1, 16).unwrap();
    let cnm = binomial(1, 1);
    let bump = |x: f64, y: f64| {
        cnm * (1.0 + 0.4 * (std::f64::consts::TAU * x).cos() * (std::f64::consts::TAU * y).sin())
    };
    let f = GridField::from_fn(dom.clone(), |p| bump(p[0], p[1]));
    // shift by 3 cells along axis 0
    let shift_cells = 3usize;
    let h = dom.spacing();
    let f_shift = GridField::from_fn(dom.clone(), |p| bump(p[0] - shift_cells as f64 * h, p[1]));
    let c = cfg(1e-10);
    let a = solve_torus(&f, 1, &c).unwrap();
    let b = solve_torus(&f_shift, 1, &c).unwrap();
    assert!(a.converged && b.converged);
    // b should be a shifted by the same lattice vector
    let mut worst: f64 = 0.0;
    for &fl in dom.interior() {
        let shifted = dom.neighbor(fl as usize, 0, shift_cells as isize).unwrap();
        worst = worst.max((b.solution.value(shifted) - a.solution.value(fl as usize)).abs());
    }
    assert!(worst < 1e-8, "equivariance defect {worst}");
}

#[test]
fn solver_output_roundtrips_through_field_file() {
    let dom = GridDomain::ball(1, 11, 1.0).unwrap();
    let f = GridField::constant(dom.clone(), 2.0);
    let phi = GridField::constant(dom.clone(), 0.0);
    let rep = solve_dirichlet(&f, &phi, 1, &cfg(1e-10)).unwrap();
    let dir = std::env::temp_dir().join("hesslab_solver_ops");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("solution.hfd");
    save_field(&rep.solution, &path).unwrap();
    let back = load_field(&path).unwrap();
    assert!(back.domain().same_layout(rep.solution.domain()));
    for flat in 0..dom.points() {
        let a = rep.solution.value(flat);
        let b = back.value(flat);
        assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
    }
    std::fs::remove_dir_all(&dir).ok();
}
