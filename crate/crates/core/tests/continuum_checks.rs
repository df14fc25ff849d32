use goldilocks_core::continuum::*;
use goldilocks_core::spin::{ground_state, AnnealPoint, EnsembleParams};

#[test]
fn hellmann_feynman_matches_finite_differences() {
    for i in 0..=8 {
        let a = -6.0 + i as f64;
        let z2 = solve_quartic(a, 1).unwrap().z2[0];
        for &da in &[1e-3, 1e-5] {
            let up = solve_quartic(a + da, 1).unwrap().eigenvalues[0];
            let dn = solve_quartic(a - da, 1).unwrap().eigenvalues[0];
            let fd = (up - dn) / (2.0 * da);
            let tol = if da > 1e-4 { 1e-5 } else { 1e-4 };
            assert!((fd - z2).abs() < tol, "a={a} da={da}: {fd} vs {z2}");
        }
    }
}

#[test]
fn virial_theorem_holds() {
    for &a in &[-6.0, -3.0, 0.0, 2.0] {
        let s = solve_quartic(a, 3).unwrap();
        for n in 0..3 {
            assert!(s.virial_residual(n) < 1e-6, "a={a} n={n}: {}", s.virial_residual(n));
        }
    }
}

#[test]
fn gap_is_unimodal_on_landmark_bracket() {
    let gaps: Vec<f64> = (0..=32).map(|i| quartic_gap(-8.0 + 0.25 * i as f64).unwrap()).collect();
    let turns = gaps.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0).count();
    assert_eq!(turns, 1, "{gaps:?}");
}

#[test]
fn harmonic_limit_gap_is_four_root_a() {
    // -d²/dz² + a z² has level spacing 2√a, so ε_2 - ε_0 → 4√a.
    let mut previous = f64::INFINITY;
    for &a in &[25.0, 100.0, 400.0] {
        let rel = (quartic_gap(a).unwrap() / (4.0 * f64::sqrt(a)) - 1.0).abs();
        assert!(rel < previous);
        previous = rel;
    }
    assert!(previous < 0.01, "{previous}");
}

#[test]
fn potential_diverges_downward_at_the_edges() {
    // M⁻¹ ~ (δ/2)/√(1-y²) pushes V = -y²/γ - M⁻¹ to -∞ as |y| → 1.
    let v = |y: f64| pseudo_potential(y, 1.0, 0.02);
    assert!(v(1.0 - 1e-6) < v(1.0 - 1e-4) && v(1.0 - 1e-4) < v(1.0 - 1e-3));
    assert!(v(1.0 - 1e-12) < v(0.0) - 10.0);
}

#[test]
fn continuum_ground_state_tracks_spin_ground_state() {
    for &(n, g) in &[(50usize, 0.8), (100, 2.0 / 3.0), (200, 0.8)] {
        let p = EnsembleParams::new(n).unwrap();
        let pt = AnnealPoint::new(g).unwrap();
        let grid = GridSpec::for_ensemble(p, GridSpec::MIN_NODES).unwrap();
        let c = solve_variable_mass(p, pt, grid, 3).unwrap();
        let f = c.fidelity(p, 0, &ground_state(p, pt).unwrap());
        assert!(f > 0.999, "N={n} Γ={g}: {f}");
    }
}

#[test]
fn weak_field_fidelity_recovers_with_ensemble_size() {
    let pt = AnnealPoint::new(0.4).unwrap();
    let mut previous = 0.0;
    for &n in &[50usize, 100, 200, 400] {
        let p = EnsembleParams::new(n).unwrap();
        let c = solve_variable_mass(p, pt, GridSpec::for_ensemble(p, GridSpec::MIN_NODES).unwrap(), 1).unwrap();
        let f = c.fidelity(p, 0, &ground_state(p, pt).unwrap());
        assert!(f > previous, "N={n}: {f}");
        previous = f;
    }
    assert!(previous > 0.999, "{previous}");
}

#[test]
fn landmark_gammas_order_along_the_anneal() {
    let lm = CriticalLandmarks::compute().unwrap();
    for &n in &[50usize, 500, 5000] {
        let g = gamma_landmarks(EnsembleParams::new(n).unwrap(), &lm);
        assert!(g.gamma_0 < g.gamma_f && g.gamma_f < goldilocks_core::spin::GAMMA_CRITICAL);
    }
}
