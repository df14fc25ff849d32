//! Continuum description of the spin problem.
//!
//! With `y = m/j` the spin eigenproblem becomes a variable-mass particle,
//! `[P M⁻¹ P / 2 - M⁻¹(y) - y²/γ] ψ = (E/Γ) ψ` with `P = -iδ d/dy` and
//! `M⁻¹(y) = √(1-y²) + (δ/2)/√(1-y²)`. Near `Γ_c = 2/3` it reduces to the
//! scale-free quartic oscillator `-φ'' + a z² + z⁴`, whose pure-number
//! landmarks `a_0` (minimum gap) and `a_F` (maximum precision) locate the
//! critical features at every `N`.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::linalg::{fix_sign, SymTridiag};
use crate::optimize::brent_minimize;
use crate::spin::{AnnealPoint, EnsembleParams, SpectrumResult, GAMMA_CRITICAL};
use crate::{Error, Result};

/// Absolute tolerance on `a` for the landmark searches.
pub const LANDMARK_XTOL: f64 = 1e-4;

/// Pseudo-potential parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoPotentialSpec {
    /// `γ = Γ/(1-Γ)`; may be infinite.
    pub gamma_ratio: f64,
    pub delta: f64,
}

impl PseudoPotentialSpec {
    pub fn new(params: EnsembleParams, point: AnnealPoint) -> Self {
        Self { gamma_ratio: point.ratio(), delta: params.delta() }
    }

    pub fn value(&self, y: f64) -> f64 {
        pseudo_potential(y, self.gamma_ratio, self.delta)
    }

    pub fn inverse_mass(&self, y: f64) -> f64 {
        inverse_mass(y, self.delta)
    }
}

/// `M⁻¹(y) = √(1-y²) + (δ/2)/√(1-y²)`.
pub fn inverse_mass(y: f64, delta: f64) -> f64 {
    let s = (1.0 - y * y).sqrt();
    s + 0.5 * delta / s
}

/// `V(y) = -y²/γ - M⁻¹(y)`, defined for `|y| < 1`.
pub fn pseudo_potential(y: f64, gamma_ratio: f64, delta: f64) -> f64 {
    -y * y / gamma_ratio - inverse_mass(y, delta)
}

/// Uniform grid on `[lo, hi]`, Dirichlet at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub count: usize,
    pub spacing: f64,
    pub lo: f64,
    pub hi: f64,
}

impl GridSpec {
    pub const MIN_NODES: usize = 201;

    /// Symmetric grid on `[-half_width, half_width]`; `count` is forced odd so
    /// `0` is a node.
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid("grid", "half width must be positive"));
        }
        if count < Self::MIN_NODES {
            return Err(Error::invalid("grid", "need at least 201 nodes"));
        }
        let count = count | 1;
        let spacing = 2.0 * half_width / (count - 1) as f64;
        Ok(Self { count, spacing, lo: -half_width, hi: half_width })
    }

    /// Grid over `y ∈ [-1, 1]` with `r` nodes per spin step `δ`, so every
    /// `m/j` is a node. `r` is the smallest value reaching `min_nodes`.
    pub fn for_ensemble(params: EnsembleParams, min_nodes: usize) -> Result<Self> {
        let n = params.n();
        let r = min_nodes.max(Self::MIN_NODES).saturating_sub(1).div_ceil(n).max(1);
        Self::refined(params, r)
    }

    /// Grid with exactly `r` nodes per spin step.
    pub fn refined(params: EnsembleParams, r: usize) -> Result<Self> {
        let count = r * params.n() + 1;
        if count < Self::MIN_NODES {
            return Err(Error::invalid("grid", "need at least 201 nodes"));
        }
        Ok(Self { count, spacing: params.delta() / r as f64, lo: -1.0, hi: 1.0 })
    }

    /// Node `i`, computed from the centre so the grid is exactly symmetric.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - (self.count - 1) as f64 / 2.0) * self.spacing
    }

    /// Midpoint between nodes `i` and `i + 1`, symmetric like [`Self::node`].
    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5 - (self.count - 1) as f64 / 2.0) * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }
}

/// Eigenpairs of the continuum operator on a grid.
///
/// Eigenvalues are `E/Γ`. Each eigenvector lists all `count` nodes (boundary
/// zeros included) with unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumSpectrum {
    pub grid: GridSpec,
    pub spectrum: SpectrumResult,
}

impl ContinuumSpectrum {
    /// Eigenvector `k` sampled at `y = m/j`, renormalized. Requires a grid from
    /// [`GridSpec::for_ensemble`] or [`GridSpec::refined`].
    pub fn sample_at_spin_nodes(&self, params: EnsembleParams, k: usize) -> Vec<f64> {
        let r = (self.grid.count - 1) / params.n();
        let v = &self.spectrum.eigenvectors[k];
        let mut out: Vec<f64> = (0..params.dim()).map(|i| v[i * r]).collect();
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.iter_mut().for_each(|x| *x /= norm);
        out
    }

    /// `|<ψ_spin|ψ_k>|` with the continuum state sampled at the spin nodes.
    pub fn fidelity(&self, params: EnsembleParams, k: usize, spin_state: &[f64]) -> f64 {
        let s = self.sample_at_spin_nodes(params, k);
        s.iter().zip(spin_state).map(|(a, b)| a * b).sum::<f64>().abs()
    }
}

/// Interior operator of the variable-mass problem on `grid`.
fn variable_mass_matrix(spec: PseudoPotentialSpec, grid: &GridSpec) -> Result<SymTridiag> {
    if grid.lo != -1.0 || grid.hi != 1.0 {
        return Err(Error::invalid("grid", "variable-mass grid must span [-1, 1]"));
    }
    let h = grid.spacing;
    let c = 0.5 * spec.delta * spec.delta / (h * h);
    let inner = grid.count - 2;
    // Flux coefficients at midpoints y_{i+1/2}, i = 0..count-1.
    let flux: Vec<f64> = (0..grid.count - 1)
        .map(|i| c * spec.inverse_mass(grid.midpoint(i)))
        .collect();
    let diag: Vec<f64> = (1..=inner).map(|i| flux[i - 1] + flux[i] + spec.value(grid.node(i))).collect();
    let off: Vec<f64> = (1..inner).map(|i| -flux[i]).collect();
    SymTridiag::new(diag, off)
}

pub fn solve_on_grid(spec: PseudoPotentialSpec, grid: &GridSpec, k: usize) -> Result<SpectrumResult> {
    let t = variable_mass_matrix(spec, grid)?;
    let eig = t.lowest_eigenpairs(k)?;
    let vectors = eig
        .vectors
        .into_iter()
        .map(|v| {
            let mut full = vec![0.0; grid.count];
            full[1..grid.count - 1].copy_from_slice(&v);
            fix_sign(&mut full);
            full
        })
        .collect();
    Ok(SpectrumResult { eigenvalues: eig.values, eigenvectors: vectors, parities: eig.parities })
}

/// Allowed refinement change in `j·E/Γ`, a small fraction of the O(1) level
/// spacing of `jH/Γ`. Convergence is slow near `|y| = 1`, where `M⁻¹` diverges.
pub const REFINEMENT_TOL: f64 = 0.05;

/// The `k` lowest eigenpairs of the variable-mass problem.
///
/// The answer is checked against a grid with twice the resolution. A change
/// in any returned `j·E/Γ` above [`REFINEMENT_TOL`] is reported as
/// [`Error::GridTooCoarse`].
pub fn solve_variable_mass(
    params: EnsembleParams,
    point: AnnealPoint,
    grid: GridSpec,
    k: usize,
) -> Result<ContinuumSpectrum> {
    if point.gamma() <= 0.0 {
        return Err(Error::invalid("gamma", "continuum mapping needs Γ > 0"));
    }
    if k == 0 || k > grid.count - 2 {
        return Err(Error::invalid("k", "eigenpair count must fit the grid interior"));
    }
    let spec = PseudoPotentialSpec::new(params, point);
    let spectrum = solve_on_grid(spec, &grid, k)?;
    let fine = GridSpec { count: 2 * grid.count - 1, spacing: grid.spacing / 2.0, ..grid };
    let check = variable_mass_matrix(spec, &fine)?.lowest_eigenvalues(k);
    for (index, (a, b)) in spectrum.eigenvalues.iter().zip(&check).enumerate() {
        let change = params.j() * (a - b).abs();
        if change > REFINEMENT_TOL {
            return Err(Error::GridTooCoarse { index, change });
        }
    }
    Ok(ContinuumSpectrum { grid, spectrum })
}

/// Eigenpairs of `-d²/dz² + a z² + z⁴`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticSolution {
    pub a: f64,
    /// `ε_n(a)`, Richardson-extrapolated.
    pub eigenvalues: Vec<f64>,
    /// Grid eigenfunctions on the finest grid, `∫φ² dz = 1`.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub grid: GridSpec,
    /// `<z²>` per state, Richardson-extrapolated.
    pub z2: Vec<f64>,
    /// `<z⁴>` per state, Richardson-extrapolated.
    pub z4: Vec<f64>,
}

impl QuarticSolution {
    /// `<p²> = ε - a<z²> - <z⁴>`.
    pub fn p2(&self, n: usize) -> f64 {
        self.eigenvalues[n] - self.a * self.z2[n] - self.z4[n]
    }

    /// Virial defect `|<p²> - (a<z²> + 2<z⁴>)|`.
    pub fn virial_residual(&self, n: usize) -> f64 {
        (self.p2(n) - (self.a * self.z2[n] + 2.0 * self.z4[n])).abs()
    }
}

/// Default half-width of the `z` domain, widened for deep double wells.
pub fn quartic_half_width(a: f64) -> f64 {
    if a < -5.0 {
        6.0 + (-a / 2.0).sqrt()
    } else {
        6.0
    }
}

const QUARTIC_BASE_SPACING: f64 = 0.02;

/// Solves the quartic problem with the default domain.
pub fn solve_quartic(a: f64, k: usize) -> Result<QuarticSolution> {
    let half = quartic_half_width(a);
    let count = (2.0 * half / QUARTIC_BASE_SPACING).round() as usize + 1;
    solve_quartic_on(a, GridSpec::symmetric(half, count)?, k)
}

/// Solves on `grid`, `grid/2` and `grid/4`, extrapolating out the `h²` and
/// `h⁴` error terms.
pub fn solve_quartic_on(a: f64, grid: GridSpec, k: usize) -> Result<QuarticSolution> {
    if !a.is_finite() {
        return Err(Error::invalid("a", "must be finite"));
    }
    if k == 0 || k > 16 {
        return Err(Error::invalid("k", "quartic solver returns between 1 and 16 states"));
    }
    let levels: Vec<GridSpec> = (0..3)
        .map(|l| {
            let f = 1usize << l;
            GridSpec { count: (grid.count - 1) * f + 1, spacing: grid.spacing / f as f64, ..grid }
        })
        .collect();
    let mut values = Vec::new();
    let mut z2 = Vec::new();
    let mut z4 = Vec::new();
    let mut finest = Vec::new();
    for g in &levels {
        let h = g.spacing;
        let inner = g.count - 2;
        let diag: Vec<f64> = (1..=inner)
            .map(|i| {
                let z = g.node(i);
                2.0 / (h * h) + a * z * z + z * z * z * z
            })
            .collect();
        let off = vec![-1.0 / (h * h); inner - 1];
        let eig = SymTridiag::new(diag, off)?.lowest_eigenpairs(k)?;
        let mom = |v: &[f64], p: i32| -> f64 { (1..=inner).map(|i| v[i - 1] * v[i - 1] * g.node(i).powi(p)).sum() };
        z2.push(eig.vectors.iter().map(|v| mom(v, 2)).collect::<Vec<_>>());
        z4.push(eig.vectors.iter().map(|v| mom(v, 4)).collect::<Vec<_>>());
        values.push(eig.values);
        finest = eig.vectors;
    }
    let last = levels[2];
    let scale = 1.0 / last.spacing.sqrt();
    let eigenfunctions = finest
        .into_iter()
        .map(|v| {
            let mut full = vec![0.0; last.count];
            for (i, x) in v.iter().enumerate() {
                full[i + 1] = x * scale;
            }
            full
        })
        .collect();
    let boundary = |v: &Vec<f64>| v[1].abs().max(v[last.count - 2].abs());
    let worst = (&eigenfunctions as &Vec<Vec<f64>>).iter().map(boundary).fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(Error::ProbeAtBoundary { amplitude: worst });
    }
    Ok(QuarticSolution {
        a,
        eigenvalues: richardson(&values),
        eigenfunctions,
        grid: last,
        z2: richardson(&z2),
        z4: richardson(&z4),
    })
}

/// Two-stage Richardson extrapolation for `h²`-accurate data at `h, h/2, h/4`.
fn richardson(levels: &[Vec<f64>]) -> Vec<f64> {
    (0..levels[0].len())
        .map(|n| {
            let (f0, f1, f2) = (levels[0][n], levels[1][n], levels[2][n]);
            let r1 = (4.0 * f1 - f0) / 3.0;
            let r2 = (4.0 * f2 - f1) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .collect()
}

/// `ε_2(a) - ε_0(a)`.
pub fn quartic_gap(a: f64) -> Result<f64> {
    let s = solve_quartic(a, 3)?;
    Ok(s.eigenvalues[2] - s.eigenvalues[0])
}

/// Precision penalty `(2ε_0 - a ε_0')/3` with `ε_0' = <z²>`.
pub fn ppf(a: f64) -> Result<f64> {
    let s = solve_quartic(a, 1)?;
    Ok(ppf_of(&s))
}

fn ppf_of(s: &QuarticSolution) -> f64 {
    (2.0 * s.eigenvalues[0] - s.a * s.z2[0]) / 3.0
}

const LANDMARK_BRACKET: (f64, f64) = (-8.0, 0.0);

/// Minimizes a fallible scalar function of `a` over the landmark bracket.
fn minimize_over_a(f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut failure = None;
    let r = brent_minimize(
        |a| match f(a) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        LANDMARK_BRACKET.0,
        LANDMARK_BRACKET.1,
        LANDMARK_XTOL,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok((r.x, r.value)),
    }
}

/// `(a_0, ε_2(a_0) - ε_0(a_0))`.
pub fn find_min_gap_a() -> Result<(f64, f64)> {
    minimize_over_a(quartic_gap)
}

/// `(a_F, ppf(a_F))`.
pub fn find_max_precision_a() -> Result<(f64, f64)> {
    minimize_over_a(ppf)
}

/// Scale-free landmark constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalLandmarks {
    pub a_0: f64,
    pub a_f: f64,
    /// `ε_2(a_0) - ε_0(a_0)`.
    pub gap_constant: f64,
    /// `2ε_0(a_F) - a_F ε_0'(a_F)`, i.e. three times the minimum penalty.
    pub ppf_constant: f64,
}

impl CriticalLandmarks {
    pub fn compute() -> Result<Self> {
        let (a_0, gap_constant) = find_min_gap_a()?;
        let (a_f, p) = find_max_precision_a()?;
        Ok(Self { a_0, a_f, gap_constant, ppf_constant: 3.0 * p })
    }
}

/// `g^{1/3}` with `g = M_2/(4δ²) = j²/4`.
pub fn g_cube_root(params: EnsembleParams) -> f64 {
    (params.j() * params.j() / 4.0).cbrt()
}

/// `a = 4 g^{1/3} (3 - 2/Γ)`.
pub fn scale_free_a(params: EnsembleParams, gamma: f64) -> f64 {
    4.0 * g_cube_root(params) * (3.0 - 2.0 / gamma)
}

/// Inverse of [`scale_free_a`]: `Γ = Γ_c / (1 - a/(12 g^{1/3}))`.
pub fn gamma_at_a(params: EnsembleParams, a: f64) -> f64 {
    GAMMA_CRITICAL / (1.0 - a / (12.0 * g_cube_root(params)))
}

/// Annealing parameters of the landmarks at a given `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLandmarks {
    pub gamma_0: f64,
    pub gamma_f: f64,
    /// Two-term expansion of `Γ_0 - Γ_c` in powers of `j^{-2/3}`.
    pub gamma_0_shift_expansion: f64,
}

pub fn gamma_landmarks(params: EnsembleParams, landmarks: &CriticalLandmarks) -> GammaLandmarks {
    let j = params.j();
    let a0 = landmarks.a_0;
    let expansion = (4f64.cbrt() * a0 / 18.0) / j.powf(2.0 / 3.0) + (2f64.cbrt() * a0 * a0 / 108.0) / j.powf(4.0 / 3.0);
    GammaLandmarks {
        gamma_0: gamma_at_a(params, a0),
        gamma_f: gamma_at_a(params, landmarks.a_f),
        gamma_0_shift_expansion: expansion,
    }
}

/// Thermodynamic-limit gap of `jH`.
pub fn omega_thermo(gamma: f64) -> f64 {
    if gamma < GAMMA_CRITICAL {
        ((gamma - 2.0) * (3.0 * gamma - 2.0)).sqrt()
    } else {
        2.0 * gamma * (3.0 - 2.0 / gamma).max(0.0).sqrt()
    }
}

/// Twin-well description of a weak-field ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region1Profile {
    /// Well positions `±y_0`.
    pub y0: f64,
    /// `M_γ = 2/γ`.
    pub mass: f64,
    /// Oscillator frequency `√(M_γ² - 1)`.
    pub omega: f64,
    /// Lobe width in `y`.
    pub sigma: f64,
    /// Lobe width in `m`-units scaled by `√N`: `Σ = σ√N`.
    pub big_sigma: f64,
}

pub fn region1_profile(params: EnsembleParams, point: AnnealPoint) -> Result<Region1Profile> {
    let g = point.ratio();
    if !(g > 0.0 && g < 2.0) {
        return Err(Error::invalid("gamma", "twin-well profile needs 0 < γ < 2"));
    }
    let mass = 2.0 / g;
    let omega = (mass * mass - 1.0).sqrt();
    let sigma = (params.delta() / (mass * omega)).sqrt();
    Ok(Region1Profile {
        y0: (1.0 - 1.0 / (mass * mass)).sqrt(),
        mass,
        omega,
        sigma,
        big_sigma: sigma * (params.n() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin;

    fn params(n: usize) -> EnsembleParams {
        EnsembleParams::new(n).unwrap()
    }

    #[test]
    fn potential_spot_values() {
        assert_eq!(pseudo_potential(0.0, 2.0, 0.0), -1.0);
        let y0 = 3f64.sqrt() / 2.0;
        assert!((pseudo_potential(y0, 1.0, 0.0) + 1.25).abs() < 1e-14);
        // Well bottom for γ < 2.
        let gamma = 0.8;
        let m = 2.0 / gamma;
        let y0 = (1.0 - 1.0 / (m * m)).sqrt();
        let dv = (pseudo_potential(y0 + 1e-6, gamma, 0.0) - pseudo_potential(y0 - 1e-6, gamma, 0.0)) / 2e-6;
        assert!(dv.abs() < 1e-8);
    }

    #[test]
    fn ensemble_grid_hits_spin_nodes() {
        let p = params(50);
        let g = GridSpec::for_ensemble(p, 201).unwrap();
        assert_eq!(g.count, 201);
        assert!((g.spacing * (g.count - 1) as f64 - 2.0).abs() < 1e-14);
        assert!((g.node(4) - p.m(1) / p.j()).abs() < 1e-15);
        assert_eq!(g.node(0), -g.node(g.count - 1));
        assert!(GridSpec::symmetric(6.0, 100).is_err());
    }

    #[test]
    fn strong_field_continuum_matches_spin_core() {
        let p = params(50);
        let pt = AnnealPoint::new(0.8).unwrap();
        let c = solve_variable_mass(p, pt, GridSpec::for_ensemble(p, 401).unwrap(), 3).unwrap();
        let psi = spin::ground_state(p, pt).unwrap();
        assert!(c.fidelity(p, 0, &psi) > 0.999);
    }

    #[test]
    fn rejects_zero_field() {
        let p = params(50);
        let g = GridSpec::for_ensemble(p, 201).unwrap();
        assert!(solve_variable_mass(p, AnnealPoint::new(0.0).unwrap(), g, 1).is_err());
    }

    #[test]
    fn pure_quartic_ground_energy() {
        let s = solve_quartic(0.0, 3).unwrap();
        assert!((s.eigenvalues[0] - 1.060_362_090_484_18).abs() < 1e-7, "{}", s.eigenvalues[0]);
        assert!(s.virial_residual(0) < 1e-8);
        let h = s.grid.spacing;
        let norm: f64 = s.eigenfunctions[0].iter().map(|v| v * v * h).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_limit() {
        let a = 400.0;
        let s = solve_quartic(a, 3).unwrap();
        let gap = s.eigenvalues[2] - s.eigenvalues[0];
        let harmonic = 4.0 * a.sqrt();
        assert!((gap / harmonic - 1.0).abs() < 0.02, "{gap} vs {harmonic}");
    }

    #[test]
    fn thermodynamic_gap_values() {
        assert!((omega_thermo(1.0) - 2.0).abs() < 1e-15);
        assert_eq!(omega_thermo(GAMMA_CRITICAL), 0.0);
        assert!((omega_thermo(0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn landmark_gamma_round_trip() {
        let p = params(300);
        let g = gamma_at_a(p, -3.0);
        assert!((scale_free_a(p, g) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn region1_profile_values() {
        let p = params(100);
        let r = region1_profile(p, AnnealPoint::new(0.5).unwrap()).unwrap();
        assert_eq!(r.mass, 2.0);
        assert!((r.y0 - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(region1_profile(p, AnnealPoint::new(0.8).unwrap()).is_err());
    }
}
