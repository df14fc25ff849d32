//! Phase estimation with a `Jz` generator under noise.
//!
//! Collective dephasing is a Gaussian random phase of variance `κ⁰`; it damps
//! coherences as `exp(-κ⁰(m-m')²/2)`. Local dephasing and relaxation enter
//! only through the noise function `μ(y) = N²κ⁰ + Nκ^L/(1-y²)` of the
//! asymptotic action.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::continuum::{omega_thermo, CriticalLandmarks};
use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::optimize::brent_minimize;
use crate::spin::{self, reflection_expectation, AnnealPoint, EnsembleParams, Parity, GAMMA_CRITICAL};
use crate::{Error, Result};

/// Pairs with `λ_i + λ_j` below this are dropped from the QFI sum.
pub const EIGENVALUE_FLOOR: f64 = 1e-14;
/// Most negative density-matrix eigenvalue accepted as round-off.
pub const PSD_TOL: f64 = 1e-12;

/// Noise strengths. `κ^L = e^ζ - 1` with `ζ = ζ_z + ζ_+ + ζ_-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub kappa0: f64,
    pub zeta_z: f64,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
}

impl NoiseModel {
    pub fn new(kappa0: f64, zeta_z: f64, zeta_plus: f64, zeta_minus: f64) -> Result<Self> {
        for (name, v) in [("kappa0", kappa0), ("zeta_z", zeta_z), ("zeta_plus", zeta_plus), ("zeta_minus", zeta_minus)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "noise strengths must be finite and non-negative"));
            }
        }
        // A phase spread comparable to 2π is no longer localized in one window.
        if kappa0 >= 1.0 {
            return Err(Error::WrappedPhase { kappa0 });
        }
        Ok(Self { kappa0, zeta_z, zeta_plus, zeta_minus })
    }

    /// Collective dephasing only.
    pub fn collective(kappa0: f64) -> Result<Self> {
        Self::new(kappa0, 0.0, 0.0, 0.0)
    }

    pub fn kappa_l(&self) -> f64 {
        (self.zeta_z + self.zeta_plus + self.zeta_minus).exp_m1()
    }

    pub fn noise_function(&self, params: EnsembleParams) -> NoiseFunction {
        NoiseFunction { n: params.n() as f64, kappa0: self.kappa0, kappa_l: self.kappa_l() }
    }

    /// Whether `1/N ≪ √κ⁰ ≪ 1` holds, read as `N√κ⁰ ≥ 3` and `√κ⁰ ≤ 0.3`.
    pub fn asymptotics_valid(&self, params: EnsembleParams) -> bool {
        let s = self.kappa0.sqrt();
        params.n() as f64 * s >= 3.0 && s <= 0.3
    }
}

/// `μ(y) = N²κ⁰ + Nκ^L/(1-y²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseFunction {
    pub n: f64,
    pub kappa0: f64,
    pub kappa_l: f64,
}

impl NoiseFunction {
    pub fn eval(&self, y: f64) -> f64 {
        let local = if self.kappa_l == 0.0 { 0.0 } else { self.n * self.kappa_l / (1.0 - y * y) };
        self.n * self.n * self.kappa0 + local
    }
}

/// A collectively dephased pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasedState {
    pub rho: SquareMatrix,
    pub kappa0: f64,
    /// Parity of the input when it was a reflection eigenstate.
    pub parity: Option<Parity>,
    pure_state: Vec<f64>,
}

impl DephasedState {
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// The (real, magnitude-reduced) input amplitudes.
    pub fn pure_state(&self) -> &[f64] {
        &self.pure_state
    }
}

/// `ρ_{mm'} = ψ_m ψ_m' exp(-κ⁰(m-m')²/2)`.
pub fn dephase(state: &[f64], kappa0: f64) -> Result<DephasedState> {
    if state.len() < 2 {
        return Err(Error::invalid("state", "need at least two amplitudes"));
    }
    if !(kappa0 >= 0.0) || !kappa0.is_finite() {
        return Err(Error::invalid("kappa0", "must be finite and non-negative"));
    }
    let norm: f64 = state.iter().map(|a| a * a).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("state", "probe must be normalized"));
    }
    let n = state.len();
    let damping: Vec<f64> = (0..n).map(|d| (-0.5 * kappa0 * (d * d) as f64).exp()).collect();
    let rho = SquareMatrix::from_fn(n, |i, j| state[i] * state[j] * damping[i.abs_diff(j)]);
    let r = reflection_expectation(state);
    let parity = if (r - 1.0).abs() < 1e-12 {
        Some(Parity::Even)
    } else if (r + 1.0).abs() < 1e-12 {
        Some(Parity::Odd)
    } else {
        None
    };
    Ok(DephasedState { rho, kappa0, parity, pure_state: state.to_vec() })
}

/// Dephases a complex probe.
///
/// Diagonal phases commute with `Jz`, so the QFI depends on `|ψ_m|` only and
/// the magnitudes are dephased instead.
pub fn dephase_complex(state: &[Complex64], kappa0: f64) -> Result<DephasedState> {
    let mags: Vec<f64> = state.iter().map(|c| c.norm()).collect();
    dephase(&mags, kappa0)
}

/// Fisher information with the derived error measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiResult {
    pub fisher: f64,
    /// `1/F`.
    pub bound: f64,
    /// `ε` in `1/F = κ⁰ + ε/N`.
    pub quantum_error: f64,
}

impl QfiResult {
    pub fn new(fisher: f64, kappa0: f64, n: usize) -> Self {
        let bound = 1.0 / fisher;
        Self { fisher, bound, quantum_error: n as f64 * (bound - kappa0) }
    }
}

/// Exact QFI of `ρ` for the generator `Jz`, by diagonalizing `ρ`.
///
/// Reflection-symmetric probes are diagonalized block by block; `Jz` only
/// couples the even and odd blocks. An undamped state is pure and uses
/// `F = 4 Var(Jz)` directly.
pub fn qfi_exact(state: &DephasedState) -> Result<QfiResult> {
    let dim = state.dim();
    let n = dim - 1;
    if state.kappa0 == 0.0 {
        let v = spin::jz_moments(&state.pure_state).std_dev;
        return Ok(QfiResult::new(4.0 * v * v, 0.0, n));
    }
    let fisher = match state.parity {
        Some(_) => qfi_parity_blocks(&state.rho)?,
        None => qfi_full(&state.rho)?,
    };
    Ok(QfiResult::new(fisher, state.kappa0, n))
}

fn check_psd(values: &[f64]) -> Result<()> {
    match values.first() {
        Some(&v) if v < -PSD_TOL => Err(Error::NotPositive { min_eigenvalue: v }),
        _ => Ok(()),
    }
}

#[inline]
fn pair_term(la: f64, lb: f64) -> f64 {
    let s = la + lb;
    if s < EIGENVALUE_FLOOR {
        0.0
    } else {
        (la - lb) * (la - lb) / s
    }
}

fn significant(values: &[f64]) -> Vec<bool> {
    values.iter().map(|&v| v >= 0.5 * EIGENVALUE_FLOOR).collect()
}

fn qfi_full(rho: &SquareMatrix) -> Result<f64> {
    let dim = rho.dim();
    let j = (dim as f64 - 1.0) / 2.0;
    let eig = symmetric_eigen(rho)?;
    check_psd(&eig.values)?;
    let sig = significant(&eig.values);
    let mut total = 0.0;
    for a in (0..dim).filter(|&a| sig[a]) {
        let w: Vec<f64> = eig.vectors[a].iter().enumerate().map(|(k, v)| v * (k as f64 - j)).collect();
        for b in 0..dim {
            if b == a || (sig[b] && b < a) {
                continue;
            }
            let t = pair_term(eig.values[a], eig.values[b]);
            if t == 0.0 {
                continue;
            }
            let x: f64 = w.iter().zip(&eig.vectors[b]).map(|(p, q)| p * q).sum();
            total += t * x * x;
        }
    }
    // Each unordered pair counted once above; F = 2 Σ_{ij} = 4 Σ_{i<j}.
    Ok(4.0 * total)
}

/// Parity-adapted basis of the `|m>` space: even vectors, odd vectors, and
/// the `Jz` coupling `(even, odd, m)` between partners.
struct ParityBasis {
    even: Vec<[(usize, f64); 2]>,
    odd: Vec<[(usize, f64); 2]>,
    coupling: Vec<(usize, usize, f64)>,
}

impl ParityBasis {
    fn new(dim: usize) -> Self {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let j = (dim as f64 - 1.0) / 2.0;
        let mut even = Vec::new();
        let mut odd = Vec::new();
        let mut coupling = Vec::new();
        let pairs: Vec<(usize, usize)> = if dim % 2 == 1 {
            let c = dim / 2;
            even.push([(c, 1.0), (c, 0.0)]);
            (1..=c).map(|k| (c + k, c - k)).collect()
        } else {
            let h = dim / 2;
            (0..h).map(|k| (h + k, h - 1 - k)).collect()
        };
        for (up, down) in pairs {
            coupling.push((even.len(), odd.len(), up as f64 - j));
            even.push([(up, r), (down, r)]);
            odd.push([(up, r), (down, -r)]);
        }
        Self { even, odd, coupling }
    }

    fn block(rho: &SquareMatrix, basis: &[[(usize, f64); 2]]) -> SquareMatrix {
        SquareMatrix::from_fn(basis.len(), |a, b| {
            let mut s = 0.0;
            for &(i, ci) in &basis[a] {
                for &(k, ck) in &basis[b] {
                    s += ci * ck * rho.get(i, k);
                }
            }
            s
        })
    }
}

fn qfi_parity_blocks(rho: &SquareMatrix) -> Result<f64> {
    let basis = ParityBasis::new(rho.dim());
    let even = symmetric_eigen(&ParityBasis::block(rho, &basis.even))?;
    if basis.odd.is_empty() {
        return Ok(0.0);
    }
    let odd = symmetric_eigen(&ParityBasis::block(rho, &basis.odd))?;
    check_psd(&even.values)?;
    check_psd(&odd.values)?;
    let sig_e = significant(&even.values);
    let sig_o = significant(&odd.values);
    let no = basis.odd.len();
    let mut total = 0.0;
    for a in 0..even.values.len() {
        // w[oi] = Σ over partners of U_e[a][ei] m.
        let mut w = vec![0.0; no];
        for &(ei, oi, m) in &basis.coupling {
            w[oi] = even.vectors[a][ei] * m;
        }
        for b in 0..no {
            if !(sig_e[a] || sig_o[b]) {
                continue;
            }
            let t = pair_term(even.values[a], odd.values[b]);
            if t == 0.0 {
                continue;
            }
            let x: f64 = w.iter().zip(&odd.vectors[b]).map(|(p, q)| p * q).sum();
            total += t * x * x;
        }
    }
    Ok(4.0 * total)
}

/// A probe sampled on a symmetric `y` grid, `∫ψ² dy = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeProfile {
    pub values: Vec<f64>,
    pub spacing: f64,
}

impl ProbeProfile {
    /// `ψ(m/j) = ψ_m/√δ`.
    pub fn from_spin_state(state: &[f64]) -> Self {
        let delta = 2.0 / (state.len() as f64 - 1.0);
        let s = 1.0 / delta.sqrt();
        Self { values: state.iter().map(|a| a * s).collect(), spacing: delta }
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - (self.values.len() - 1) as f64 / 2.0) * self.spacing
    }
}

/// QFI from the asymptotic action `F/N² = ∫ψ²/μ - 4∫(ψ'/μ)²`.
///
/// `ψ'` is the centred difference with zero amplitude beyond the grid; both
/// integrals use the trapezoid rule.
pub fn qfi_action(probe: &ProbeProfile, noise: &NoiseFunction) -> Result<QfiResult> {
    let v = &probe.values;
    let len = v.len();
    let h = probe.spacing;
    if noise.kappa_l > 0.0 {
        let edge = v[0].abs().max(v[len - 1].abs());
        if edge > 1e-12 && probe.node(len - 1) >= 1.0 - 1e-12 {
            return Err(Error::ProbeAtBoundary { amplitude: edge });
        }
    }
    let at = |i: isize| if i < 0 || i as usize >= len { 0.0 } else { v[i as usize] };
    let mut first = 0.0;
    let mut penalty = 0.0;
    for i in 0..len {
        let y = probe.node(i);
        let mu = noise.eval(y);
        let w = if i == 0 || i == len - 1 { 0.5 } else { 1.0 };
        if !mu.is_finite() {
            continue;
        }
        let d = (at(i as isize + 1) - at(i as isize - 1)) / (2.0 * h);
        first += w * v[i] * v[i] / mu;
        penalty += w * (d / mu) * (d / mu);
    }
    let fisher = noise.n * noise.n * h * (first - 4.0 * penalty);
    Ok(QfiResult::new(fisher, noise.kappa0, noise.n.round() as usize))
}

/// Thermodynamic asymptote `F_∞ = 1/(κ⁰ + κ^L/N + Mω/N)` for given `M` and `ω`.
pub fn f_infinity(noise: &NoiseModel, n: usize, mass: f64, omega: f64) -> f64 {
    let n = n as f64;
    1.0 / (noise.kappa0 + noise.kappa_l() / n + mass * omega / n)
}

/// Mass and oscillator quantum entering the thermodynamic asymptote.
///
/// The quantum is the level spacing of the well oscillator in `jH/Γ`, i.e.
/// `ω/Γ` for `Γ < Γ_c`, where `E_2 - E_0` is one quantum, and `ω/(2Γ)` above
/// `Γ_c`, where it is two. This reproduces both closed-form regional bounds.
pub fn asymptote_mass_and_quantum(gamma: f64) -> (f64, f64) {
    let w = omega_thermo(gamma);
    if gamma < GAMMA_CRITICAL {
        (2.0 * (1.0 - gamma) / gamma, w / gamma)
    } else {
        (1.0, w / (2.0 * gamma))
    }
}

/// Thermodynamic-limit QFI, ignoring the critical region.
pub fn thermodynamic_qfi(params: EnsembleParams, point: AnnealPoint, noise: &NoiseModel) -> f64 {
    let (m, w) = asymptote_mass_and_quantum(point.gamma());
    f_infinity(noise, params.n(), m, w)
}

/// Closed-form lower bounds on `Δ²θ = 1/F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBounds {
    /// Twin-Gaussian ground states, `Γ < Γ_c`.
    pub region_i: Option<f64>,
    /// Critical probe at `Γ_F(N)`.
    pub region_ii: f64,
    /// Gaussian ground states, `Γ > Γ_c`.
    pub region_iii: Option<f64>,
    /// `1/F_∞` at this `Γ`.
    pub thermodynamic: f64,
}

pub fn region_bounds(
    params: EnsembleParams,
    point: AnnealPoint,
    noise: &NoiseModel,
    landmarks: &CriticalLandmarks,
) -> RegionBounds {
    let n = params.n() as f64;
    let g = point.gamma();
    let kl = noise.kappa_l();
    let region_i = (g > 0.0 && g < GAMMA_CRITICAL).then(|| {
        let m = 2.0 * (1.0 - g) / g;
        noise.kappa0 + (kl * (2.0 - 1.0 / (m * m)) + m * (m * m - 1.0).sqrt()) / n
    });
    let region_iii = (g > GAMMA_CRITICAL).then(|| noise.kappa0 + ((3.0 - 2.0 / g).sqrt() + kl) / n);
    RegionBounds {
        region_i,
        region_ii: region_ii_bound(params, noise, landmarks),
        region_iii,
        thermodynamic: 1.0 / thermodynamic_qfi(params, point, noise),
    }
}

/// `κ⁰ + κ^L/N + (2/(3N^{4/3}))(M_2/2)^{1/3} C_F` with `M_2 = 1`.
pub fn region_ii_bound(params: EnsembleParams, noise: &NoiseModel, landmarks: &CriticalLandmarks) -> f64 {
    let n = params.n() as f64;
    noise.kappa0 + noise.kappa_l() / n + region_ii_prefactor() * landmarks.ppf_constant / n.powf(4.0 / 3.0)
}

fn region_ii_prefactor() -> f64 {
    (2.0 / 3.0) * 0.5f64.cbrt()
}

/// Exact QFI of the ground state at `point` under collective dephasing.
pub fn ground_state_qfi(params: EnsembleParams, point: AnnealPoint, kappa0: f64) -> Result<QfiResult> {
    let psi = spin::ground_state(params, point)?;
    qfi_exact(&dephase(&psi, kappa0)?)
}

/// Best QFI over the anneal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiMaximum {
    pub gamma: f64,
    pub qfi: QfiResult,
}

/// Maximizes ground-state QFI over `Γ ∈ [lo, hi]`: a uniform scan of
/// `samples` points, then Brent refinement to `1e-4` in `Γ` inside the
/// bracket around the best sample.
pub fn max_qfi_over_gamma(
    params: EnsembleParams,
    kappa0: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<QfiMaximum> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) || samples < 3 {
        return Err(Error::invalid("gamma_range", "need 0 <= lo < hi <= 1 and at least 3 samples"));
    }
    let eval = |g: f64| -> Result<f64> { Ok(ground_state_qfi(params, AnnealPoint::new(g)?, kappa0)?.fisher) };
    let step = (hi - lo) / (samples - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..samples {
        let g = lo + step * i as f64;
        let f = eval(g)?;
        if f > best.1 {
            best = (g, f);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let mut failure = None;
    let r = brent_minimize(
        |g| match eval(g) {
            Ok(f) => -f,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        a,
        b,
        1e-4,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (gamma, fisher) = if -r.value >= best.1 { (r.x, -r.value) } else { best };
    Ok(QfiMaximum { gamma, qfi: QfiResult::new(fisher, kappa0, params.n()) })
}

/// Measured quantities rescaled into the scale-free constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceFactors {
    /// Minimum `E_2 - E_0` times `2·4^{1/3} j^{4/3}/Γ_0`.
    pub gap_factor: f64,
    /// `(1/F* - κ⁰ - κ^L/N) N^{4/3}` divided by `(2/3)(1/2)^{1/3}`.
    pub ppf_factor: f64,
    pub minimum_gap: spin::MinimumGap,
    pub max_qfi: QfiMaximum,
}

/// Inverts the critical gap compression and the critical error expansion at
/// finite `N`. The QFI search runs over `Γ_F(N) ± 6 j^{-2/3}`.
pub fn convergence_factors(
    params: EnsembleParams,
    noise: &NoiseModel,
    landmarks: &CriticalLandmarks,
) -> Result<ConvergenceFactors> {
    let j = params.j();
    let n = params.n() as f64;
    let minimum_gap = spin::minimum_gap(params);
    let gap_factor = minimum_gap.gap * 2.0 * 4f64.cbrt() * j.powf(4.0 / 3.0) / minimum_gap.gamma;
    let center = crate::continuum::gamma_landmarks(params, landmarks).gamma_f;
    let half = 6.0 * j.powf(-2.0 / 3.0);
    let max_qfi = max_qfi_over_gamma(params, noise.kappa0, (center - half).max(0.05), (center + half).min(1.0), 13)?;
    let excess = max_qfi.qfi.bound - noise.kappa0 - noise.kappa_l() / n;
    Ok(ConvergenceFactors {
        gap_factor,
        ppf_factor: excess * n.powf(4.0 / 3.0) / region_ii_prefactor(),
        minimum_gap,
        max_qfi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ghz(n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n + 1];
        v[0] = core::f64::consts::FRAC_1_SQRT_2;
        v[n] = core::f64::consts::FRAC_1_SQRT_2;
        v
    }

    #[test]
    fn undamped_dephasing_is_identity() {
        let psi = spin::ground_state(EnsembleParams::new(6).unwrap(), AnnealPoint::new(0.7).unwrap()).unwrap();
        let rho = dephase(&psi, 0.0).unwrap();
        for i in 0..7 {
            for k in 0..7 {
                assert_eq!(rho.rho.get(i, k), psi[i] * psi[k]);
            }
        }
    }

    #[test]
    fn ghz_coherence_factor() {
        let n = 10;
        let rho = dephase(&ghz(n), 0.01).unwrap();
        assert!((rho.rho.get(0, n) - 0.5 * (-0.5f64 * 0.01 * 100.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn dephased_ghz_qfi_closed_form() {
        for n in [4usize, 20] {
            let k = 0.003;
            let f = qfi_exact(&dephase(&ghz(n), k).unwrap()).unwrap().fisher;
            let nn = (n * n) as f64;
            let exact = nn * (-k * nn).exp();
            assert!((f / exact - 1.0).abs() < 1e-8, "n={n}: {f} vs {exact}");
        }
    }

    #[test]
    fn block_and_full_paths_agree() {
        for n in [7usize, 8] {
            let psi = spin::ground_state(EnsembleParams::new(n).unwrap(), AnnealPoint::new(0.6).unwrap()).unwrap();
            let st = dephase(&psi, 0.05).unwrap();
            assert!(st.parity.is_some());
            let a = qfi_parity_blocks(&st.rho).unwrap();
            let b = qfi_full(&st.rho).unwrap();
            assert!((a / b - 1.0).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn wrapped_phase_rejected() {
        assert!(matches!(NoiseModel::collective(1.5), Err(Error::WrappedPhase { .. })));
        assert!(NoiseModel::collective(-0.1).is_err());
    }

    #[test]
    fn local_noise_combines_rates() {
        let m = NoiseModel::new(0.0, 0.1, 0.2, 0.3).unwrap();
        assert!((m.kappa_l() - (0.6f64.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn region_three_bound_at_full_field_is_shot_noise() {
        let noise = NoiseModel::collective(0.01).unwrap();
        let p = EnsembleParams::new(100).unwrap();
        let inv = 1.0 / thermodynamic_qfi(p, AnnealPoint::new(1.0).unwrap(), &noise);
        assert!((inv - (0.01 + 1.0 / 100.0)).abs() < 1e-15);
        // The literal form with the gap of jH counts two quanta.
        assert!((f_infinity(&noise, 100, 1.0, 2.0) - 1.0 / (0.01 + 2.0 / 100.0)).abs() < 1e-12);
    }

    #[test]
    fn flat_phase_state_loses_to_critical_probe() {
        let n = 400;
        let p = EnsembleParams::new(n).unwrap();
        let flat = vec![1.0 / ((n + 1) as f64).sqrt(); n + 1];
        let noise = NoiseModel::collective(0.02).unwrap().noise_function(p);
        let f = qfi_action(&ProbeProfile::from_spin_state(&flat), &noise).unwrap();
        let psi = spin::ground_state(p, AnnealPoint::new(0.66).unwrap()).unwrap();
        let g = qfi_action(&ProbeProfile::from_spin_state(&psi), &noise).unwrap();
        assert!(f.quantum_error > 2.0 * g.quantum_error, "{f:?} {g:?}");
    }
}
