mod common;

use common::*;
use goldilocks_core::spin::{build_hamiltonian, diagonalize, ground_state, AnnealPoint, EnsembleParams};

fn full_hamiltonian(n: usize, gamma: f64) -> Vec<Vec<f64>> {
    let j = 0.5 * n as f64;
    let jx = collective(n, 'x');
    let jz = jz_diag(n);
    (0..jx.len())
        .map(|a| {
            (0..jx.len())
                .map(|b| {
                    let z2 = if a == b { jz[a] * jz[a] } else { 0.0 };
                    -gamma * jx[a][b].re / j - (1.0 - gamma) * z2 / (j * j)
                })
                .collect()
        })
        .collect()
}

fn dicke(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n + 1];
    e[k] = 1.0;
    embed_symmetric(&e, n)
}

#[test]
fn tridiagonal_matrix_matches_pauli_sums() {
    for n in 2..=6 {
        for &g in &[0.0, 0.3, 2.0 / 3.0, 0.85, 1.0] {
            let h = full_hamiltonian(n, g);
            let tri = build_hamiltonian(EnsembleParams::new(n).unwrap(), AnnealPoint::new(g).unwrap());
            for k in 0..=n {
                let dk = dicke(n, k);
                for l in 0..=n {
                    let dl = dicke(n, l);
                    let elem: f64 =
                        (0..h.len()).map(|a| dk[a] * (0..h.len()).map(|b| h[a][b] * dl[b]).sum::<f64>()).sum();
                    let want = if k == l {
                        tri.diag()[k]
                    } else if k + 1 == l {
                        tri.offdiag()[k]
                    } else if l + 1 == k {
                        tri.offdiag()[l]
                    } else {
                        0.0
                    };
                    assert!((elem - want).abs() < 1e-12, "n={n} Γ={g} ({k},{l}): {elem} vs {want}");
                }
            }
        }
    }
}

#[test]
fn ground_energy_matches_full_space() {
    for n in 2..=6 {
        for &g in &[0.1, 0.5, 0.7, 1.0] {
            let (vals, _) = jacobi_eigen(full_hamiltonian(n, g));
            let full_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let p = EnsembleParams::new(n).unwrap();
            let sym = diagonalize(&build_hamiltonian(p, AnnealPoint::new(g).unwrap()), 1).unwrap();
            assert!((full_min - sym.eigenvalues[0]).abs() < 1e-11, "n={n} Γ={g}");
        }
    }
}

#[test]
fn ground_state_is_eigenvector_of_full_hamiltonian() {
    let n = 6;
    for &g in &[0.2, 0.66, 0.95] {
        let p = EnsembleParams::new(n).unwrap();
        let psi = embed_symmetric(&ground_state(p, AnnealPoint::new(g).unwrap()).unwrap(), n);
        let h = full_hamiltonian(n, g);
        let hpsi: Vec<f64> = h.iter().map(|r| r.iter().zip(&psi).map(|(a, b)| a * b).sum()).collect();
        let e: f64 = psi.iter().zip(&hpsi).map(|(a, b)| a * b).sum();
        let res: f64 = hpsi.iter().zip(&psi).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-9, "Γ={g}: residual {res}");
    }
}
