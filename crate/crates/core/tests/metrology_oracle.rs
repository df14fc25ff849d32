mod common;

use common::*;
use goldilocks_core::entanglement::spin_coherent;
use goldilocks_core::metrology::{dephase, qfi_exact};
use goldilocks_core::spin::{ground_state, AnnealPoint, EnsembleParams};

fn library_qfi(psi: &[f64], kappa0: f64) -> f64 {
    qfi_exact(&dephase(psi, kappa0).unwrap()).unwrap().fisher
}

fn oracle_qfi(psi: &[f64], n: usize, kappa0: f64) -> f64 {
    let full = embed_symmetric(psi, n);
    qfi_oracle(dephase_by_quadrature(&full, n, kappa0), &jz_diag(n))
}

#[test]
fn ground_states_match_full_space_oracle() {
    for n in [3usize, 6, 8] {
        for &g in &[0.3, 0.62, 0.9] {
            let psi = ground_state(EnsembleParams::new(n).unwrap(), AnnealPoint::new(g).unwrap()).unwrap();
            for &k in &[0.01, 0.1, 0.4] {
                let (a, b) = (library_qfi(&psi, k), oracle_qfi(&psi, n, k));
                assert!((a / b - 1.0).abs() < 1e-8, "n={n} Γ={g} κ={k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn asymmetric_probe_matches_full_space_oracle() {
    // No definite parity: exercises the undivided density-matrix path.
    for n in [5usize, 8] {
        let psi = spin_coherent(1.1, 0.0, n).unwrap().real_amplitudes();
        for &k in &[0.02, 0.25] {
            let (a, b) = (library_qfi(&psi, k), oracle_qfi(&psi, n, k));
            assert!((a / b - 1.0).abs() < 1e-8, "n={n} κ={k}: {a} vs {b}");
        }
    }
}

#[test]
fn pure_state_limit_is_four_variances() {
    let n = 7;
    let psi = ground_state(EnsembleParams::new(n).unwrap(), AnnealPoint::new(0.66).unwrap()).unwrap();
    let full = embed_symmetric(&psi, n);
    let rho: Vec<Vec<f64>> = full.iter().map(|a| full.iter().map(|b| a * b).collect()).collect();
    let b = qfi_oracle(rho, &jz_diag(n));
    assert!((library_qfi(&psi, 0.0) / b - 1.0).abs() < 1e-8);
}
