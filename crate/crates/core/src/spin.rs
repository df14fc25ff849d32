//! Uniformly coupled spin ensemble in a transverse field, restricted to the
//! fully symmetric sector of total spin `j = N/2`.
//!
//! The scaled Hamiltonian is `H = -Γ Jx/j - (1-Γ) Jz²/j²`, so `|<H>| <= 1` and
//! `jH` carries physical energy units. In the `|m>` basis, ordered
//! `m = -j, ..., +j`, it is a real symmetric tridiagonal matrix that commutes
//! with the reflection `m -> -m`.

use alloc::vec::Vec;
use num_traits::Float;

use crate::linalg::{fix_sign, SymTridiag};
use crate::{Error, Result};

pub use crate::linalg::Parity;

/// Parity tolerance on `|<R>| - 1` for states expected to be parity eigenstates.
pub const PARITY_TOL: f64 = 1e-8;

/// Ensemble size. `j = N/2` and the expansion parameter `delta = 1/j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnsembleParams {
    n_qubits: usize,
}

impl EnsembleParams {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::invalid("n", "ensemble needs at least 2 qubits"));
        }
        Ok(Self { n_qubits })
    }

    pub fn n(&self) -> usize {
        self.n_qubits
    }

    /// Total spin `j = N/2` (half-integer for odd `N`).
    pub fn j(&self) -> f64 {
        self.n_qubits as f64 / 2.0
    }

    pub fn delta(&self) -> f64 {
        2.0 / self.n_qubits as f64
    }

    /// Hilbert-space dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.n_qubits + 1
    }

    /// Magnetic quantum number of basis index `i`.
    pub fn m(&self, i: usize) -> f64 {
        i as f64 - self.j()
    }

    pub fn m_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(move |i| self.m(i))
    }
}

/// Position on the anneal, `Γ ∈ [0, 1]`, with the ratio `γ = Γ/(1-Γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealPoint {
    gamma: f64,
}

impl AnnealPoint {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", "annealing parameter must lie in [0, 1]"));
        }
        Ok(Self { gamma })
    }

    /// From the annealing ratio; `f64::INFINITY` maps to `Γ = 1`.
    pub fn from_ratio(ratio: f64) -> Result<Self> {
        if ratio.is_nan() || ratio < 0.0 {
            return Err(Error::invalid("gamma_ratio", "ratio must be non-negative"));
        }
        if ratio.is_infinite() {
            return Self::new(1.0);
        }
        Self::new(ratio / (1.0 + ratio))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `γ = Γ/(1-Γ)`; exactly `f64::INFINITY` at `Γ = 1`.
    pub fn ratio(&self) -> f64 {
        if self.gamma == 1.0 {
            f64::INFINITY
        } else {
            self.gamma / (1.0 - self.gamma)
        }
    }
}

/// Critical annealing parameter of the thermodynamic limit.
pub const GAMMA_CRITICAL: f64 = 2.0 / 3.0;

/// The scaled Hamiltonian at one anneal point.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalHamiltonian {
    pub params: EnsembleParams,
    pub point: AnnealPoint,
    matrix: SymTridiag,
}

impl TridiagonalHamiltonian {
    pub fn dimension(&self) -> usize {
        self.matrix.dim()
    }

    pub fn diag(&self) -> &[f64] {
        self.matrix.diag()
    }

    pub fn offdiag(&self) -> &[f64] {
        self.matrix.offdiag()
    }

    pub fn matrix(&self) -> &SymTridiag {
        &self.matrix
    }

    /// The `k` lowest eigenvalues of `H` (not `jH`), without eigenvectors.
    pub fn lowest_energies(&self, k: usize) -> Vec<f64> {
        let norm = self.matrix.norm_bound();
        match self.matrix.reflection_split() {
            Some(split) => split.lowest_eigenvalues(k, norm).into_iter().map(|(v, _)| v).collect(),
            None => self.matrix.lowest_eigenvalues(k),
        }
    }

    /// `E_2 - E_0` of `H`; multiply by `j` for physical units.
    pub fn gap_20(&self) -> f64 {
        let e = self.lowest_energies(3);
        e[2] - e[0]
    }
}

/// Eigenpairs of a Hermitian problem, ascending, with sign-fixed vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// Parity of each eigenvector when the problem was reflection symmetric.
    pub parities: Option<Vec<Parity>>,
}

impl SpectrumResult {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `E_upper - E_lower`.
    pub fn gap(&self, lower: usize, upper: usize) -> f64 {
        self.eigenvalues[upper] - self.eigenvalues[lower]
    }
}

/// `H = -Γ Jx/j - (1-Γ) Jz²/j²` in the `|m>` basis.
pub fn build_hamiltonian(params: EnsembleParams, point: AnnealPoint) -> TridiagonalHamiltonian {
    let j = params.j();
    let gamma = point.gamma();
    let n = params.n();
    let diag: Vec<f64> = params.m_values().map(|m| -(1.0 - gamma) * m * m / (j * j)).collect();
    let mut offdiag = alloc::vec![0.0; n];
    // Fill the lower half and mirror so the reflection symmetry is exact.
    for i in 0..n.div_ceil(2) {
        let m = params.m(i);
        let v = -(gamma / (2.0 * j)) * ((j - m) * (j + m + 1.0)).sqrt();
        offdiag[i] = v;
        offdiag[n - 1 - i] = v;
    }
    let matrix = SymTridiag::new(diag, offdiag).expect("well-formed by construction");
    TridiagonalHamiltonian { params, point, matrix }
}

/// The `k` lowest eigenpairs of `h`.
pub fn diagonalize(h: &TridiagonalHamiltonian, k: usize) -> Result<SpectrumResult> {
    if k == 0 || k > h.dimension() {
        return Err(Error::invalid("k", "eigenpair count must lie in 1..=N+1"));
    }
    let eig = h.matrix.lowest_eigenpairs(k)?;
    Ok(SpectrumResult { eigenvalues: eig.values, eigenvectors: eig.vectors, parities: eig.parities })
}

/// Ground-state amplitudes `psi_m`: the lowest even-parity eigenvector.
///
/// At `Γ = 0` this is the even combination of `|±j>`, the `Γ -> 0+` limit.
pub fn ground_state(params: EnsembleParams, point: AnnealPoint) -> Result<Vec<f64>> {
    let h = build_hamiltonian(params, point);
    let split = h.matrix.reflection_split().expect("spin Hamiltonian is reflection symmetric");
    let eig = split.even.lowest_eigenpairs_plain(1)?;
    let mut psi = split.embed_even(&eig.vectors[0]);
    fix_sign(&mut psi);
    Ok(psi)
}

/// `<Jz>`, `<Jz²>` and `ΔJz` in units of spin quanta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JzMoments {
    pub mean: f64,
    pub second: f64,
    pub std_dev: f64,
}

/// Moments of `Jz` for a normalized real state in the `|m>` basis.
pub fn jz_moments(state: &[f64]) -> JzMoments {
    let j = (state.len() as f64 - 1.0) / 2.0;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (i, a) in state.iter().enumerate() {
        let m = i as f64 - j;
        let p = a * a;
        mean += m * p;
        second += m * m * p;
    }
    JzMoments { mean, second, std_dev: (second - mean * mean).max(0.0).sqrt() }
}

/// `<R>` for the reflection `m -> -m`.
pub fn reflection_expectation(state: &[f64]) -> f64 {
    let n = state.len();
    (0..n).map(|i| state[i] * state[n - 1 - i]).sum()
}

pub fn parity_of(state: &[f64]) -> Parity {
    if reflection_expectation(state) >= 0.0 {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// `Jx` in the `|m>` basis.
pub fn jx_matrix(params: EnsembleParams) -> SymTridiag {
    let j = params.j();
    let n = params.n();
    let mut off = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let m = params.m(i);
        let v = 0.5 * ((j - m) * (j + m + 1.0)).sqrt();
        off[i] = v;
        off[n - 1 - i] = v;
    }
    SymTridiag::new(alloc::vec![0.0; n + 1], off).expect("well-formed by construction")
}

/// Location and size of the minimum `E_2 - E_0` gap over `Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumGap {
    pub gamma: f64,
    /// Gap of `H` (multiply by `j` for physical units).
    pub gap: f64,
}

/// Minimizes `E_2 - E_0` over `Γ ∈ [0.05, 0.999]`.
pub fn minimum_gap(params: EnsembleParams) -> MinimumGap {
    let gap = |g: f64| build_hamiltonian(params, AnnealPoint { gamma: g }).gap_20();
    let r = crate::optimize::scan_then_brent(gap, 0.05, 0.999, 200, 1e-10);
    MinimumGap { gamma: r.x, gap: r.value }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize) -> EnsembleParams {
        EnsembleParams::new(n).unwrap()
    }

    fn point(g: f64) -> AnnealPoint {
        AnnealPoint::new(g).unwrap()
    }

    #[test]
    fn two_qubit_matrices() {
        let h = build_hamiltonian(params(2), point(0.0));
        assert_eq!(h.diag(), &[-1.0, 0.0, -1.0]);
        assert!(h.offdiag().iter().all(|&v| v == 0.0));
        let h = build_hamiltonian(params(2), point(1.0));
        assert!(h.diag().iter().all(|&v| v == 0.0));
        for &v in h.offdiag() {
            assert!((v + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(EnsembleParams::new(1).is_err());
        assert!(AnnealPoint::new(1.2).is_err());
        assert!(AnnealPoint::new(-0.1).is_err());
        assert!(AnnealPoint::new(f64::NAN).is_err());
        let h = build_hamiltonian(params(4), point(0.5));
        assert!(diagonalize(&h, 0).is_err());
        assert!(diagonalize(&h, 6).is_err());
    }

    #[test]
    fn ratio_round_trip_and_infinity() {
        assert_eq!(point(1.0).ratio(), f64::INFINITY);
        assert_eq!(AnnealPoint::from_ratio(f64::INFINITY).unwrap().gamma(), 1.0);
        let p = AnnealPoint::from_ratio(2.0).unwrap();
        assert!((p.gamma() - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.ratio() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hamiltonian_is_reflection_symmetric_with_negative_couplings() {
        for n in [2, 3, 10, 11] {
            let h = build_hamiltonian(params(n), point(0.37));
            assert!(h.matrix().is_reflection_symmetric());
            assert!(h.offdiag().iter().all(|&v| v < 0.0));
        }
    }

    #[test]
    fn pure_field_gap_is_two_over_j() {
        for n in [2, 7, 40, 101] {
            let p = params(n);
            let h = build_hamiltonian(p, point(1.0));
            assert!((p.j() * h.gap_20() - 2.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn pure_coupling_gap_and_degeneracy() {
        for n in [4, 9, 30] {
            let p = params(n);
            let h = build_hamiltonian(p, point(0.0));
            let s = diagonalize(&h, 3).unwrap();
            assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
            assert!((s.eigenvalues[1] + 1.0).abs() < 1e-14);
            let j = p.j();
            assert!((j * s.gap(0, 2) - (2.0 * j - 1.0) / j).abs() < 1e-12);
            assert_eq!(s.parities.as_ref().unwrap()[0], Parity::Even);
        }
    }

    #[test]
    fn coherent_ground_state_at_full_field() {
        let p = params(12);
        let psi = ground_state(p, point(1.0)).unwrap();
        let j = p.j();
        let mut binom = 1.0f64;
        for (i, a) in psi.iter().enumerate() {
            if i > 0 {
                binom *= (p.n() - i + 1) as f64 / i as f64;
            }
            let expect = 2f64.powf(-j) * binom.sqrt();
            assert!((a - expect).abs() < 1e-12, "i={i}");
        }
        let mom = jz_moments(&psi);
        assert!((mom.std_dev - (j / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ghz_ground_state_at_zero_field() {
        let p = params(9);
        let psi = ground_state(p, point(0.0)).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((psi[0] - r).abs() < 1e-15 && (psi[9] - r).abs() < 1e-15);
        assert!(psi[1..9].iter().all(|&a| a.abs() < 1e-14));
        assert!((jz_moments(&psi).std_dev - p.j()).abs() < 1e-12);
    }

    #[test]
    fn eigenpairs_have_small_residuals_and_alternate_parity() {
        let p = params(60);
        let h = build_hamiltonian(p, point(0.7));
        let s = diagonalize(&h, 8).unwrap();
        let mut work = alloc::vec![0.0; p.dim()];
        for (k, v) in s.eigenvectors.iter().enumerate() {
            h.matrix().matvec(v, &mut work);
            let res: f64 = work.iter().zip(v).map(|(w, x)| (w - s.eigenvalues[k] * x).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-12);
            let expect = if k % 2 == 0 { Parity::Even } else { Parity::Odd };
            assert_eq!(parity_of(v), expect);
        }
        assert!(s.eigenvalues.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn region_one_ground_state_keeps_even_parity() {
        // Splitting is far below double precision here.
        let p = params(400);
        let psi = ground_state(p, point(0.2)).unwrap();
        assert!((reflection_expectation(&psi) - 1.0).abs() < PARITY_TOL);
        assert!(jz_moments(&psi).mean.abs() < 1e-10);
    }

    #[test]
    fn minimum_gap_sits_below_critical_point() {
        let m = minimum_gap(params(100));
        assert!(m.gamma < GAMMA_CRITICAL && m.gamma > 0.55, "{m:?}");
    }
}
