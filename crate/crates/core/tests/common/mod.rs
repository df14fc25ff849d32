//! Brute-force oracles in the full 2^N qubit space, written independently of
//! the library's symmetric-sector kernels.
#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64;

pub type CMatrix = Vec<Vec<Complex64>>;

/// Cyclic Jacobi eigen-decomposition of a real symmetric matrix.
/// Returns eigenvalues and eigenvectors (as columns `vecs[·][k]`).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|k| if i == k { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&k| k != i).map(move |k| (i, k))).map(|(i, k)| a[i][k] * a[i][k]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Number of up spins in basis state `b`; bit set means `m = +1/2`.
pub fn ups(b: usize) -> usize {
    b.count_ones() as usize
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Embeds symmetric-sector amplitudes (index `k = j + m`) into 2^N.
pub fn embed_symmetric(psi: &[f64], n: usize) -> Vec<f64> {
    (0..1usize << n).map(|b| psi[ups(b)] / binomial(n, ups(b)).sqrt()).collect()
}

/// Projects a 2^N complex state onto the Dicke states.
pub fn project_symmetric(psi: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for (b, a) in psi.iter().enumerate() {
        out[ups(b)] += a / binomial(n, ups(b)).sqrt();
    }
    out
}

/// Total `Jz` eigenvalue of each basis state.
pub fn jz_diag(n: usize) -> Vec<f64> {
    (0..1usize << n).map(|b| ups(b) as f64 - 0.5 * n as f64).collect()
}

/// `J_a = Σ σ_a/2` for `a ∈ {x, y, z}` as a dense complex matrix.
pub fn collective(n: usize, axis: char) -> CMatrix {
    let dim = 1usize << n;
    let zero = Complex64::new(0.0, 0.0);
    let mut m = vec![vec![zero; dim]; dim];
    for b in 0..dim {
        for q in 0..n {
            let up = (b >> q) & 1 == 1;
            let flipped = b ^ (1 << q);
            match axis {
                'x' => m[flipped][b] += 0.5,
                // σy|down> = -i|up>, σy|up> = i|down>.
                'y' => m[flipped][b] += Complex64::new(0.0, if up { 0.5 } else { -0.5 }),
                'z' => m[b][b] += if up { 0.5 } else { -0.5 },
                _ => panic!("axis"),
            }
        }
    }
    m
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.len();
    let mut c = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn matvec(a: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(x).map(|(m, v)| m * v).sum()).collect()
}

/// `exp(-i s A)` by scaling and squaring a Taylor series.
pub fn expm_i(a: &CMatrix, s: f64) -> CMatrix {
    let n = a.len();
    let norm: f64 = a.iter().map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max) * s.abs();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0) as u32;
    let scale = Complex64::new(0.0, -s / 2f64.powi(squarings as i32));
    let x: CMatrix = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mut result: CMatrix = (0..n).map(|i| (0..n).map(|k| Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
    let mut term = result.clone();
    for k in 1..30 {
        term = matmul(&term, &x);
        let f = 1.0 / k as f64;
        term.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v *= f));
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Collective dephasing of a real 2^N state by averaging `exp(-iφJz)` over a
/// Gaussian `φ` of variance `κ⁰`, with a trapezoid rule over ±12σ.
pub fn dephase_by_quadrature(psi: &[f64], n: usize, kappa0: f64) -> Vec<Vec<f64>> {
    let m = jz_diag(n);
    let dim = psi.len();
    let sigma = kappa0.sqrt();
    let nodes = 4001;
    let h = 24.0 * sigma / (nodes - 1) as f64;
    let weights: Vec<(f64, f64)> = (0..nodes)
        .map(|i| {
            let phi = -12.0 * sigma + i as f64 * h;
            (phi, h * (-0.5 * phi * phi / kappa0).exp() / (2.0 * std::f64::consts::PI * kappa0).sqrt())
        })
        .collect();
    let max_diff = n;
    let damping: Vec<f64> = (0..=max_diff)
        .map(|d| weights.iter().map(|(phi, w)| w * (phi * d as f64).cos()).sum())
        .collect();
    (0..dim)
        .map(|a| (0..dim).map(|b| psi[a] * psi[b] * damping[(m[a] - m[b]).abs().round() as usize]).collect())
        .collect()
}

/// `F = 2 Σ (λ_k - λ_l)²/(λ_k + λ_l) |<k|Jz|l>|²` with `Jz` diagonal.
pub fn qfi_oracle(rho: Vec<Vec<f64>>, jz: &[f64]) -> f64 {
    let (vals, vecs) = jacobi_eigen(rho);
    let dim = vals.len();
    let mut f = 0.0;
    for k in 0..dim {
        for l in 0..dim {
            let s = vals[k] + vals[l];
            if s <= 1e-13 {
                continue;
            }
            let elem: f64 = (0..dim).map(|a| vecs[a][k] * jz[a] * vecs[a][l]).sum();
            f += 2.0 * (vals[k] - vals[l]).powi(2) / s * elem * elem;
        }
    }
    f
}
