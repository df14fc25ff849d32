//! Global geometric entanglement of symmetric-sector states.
//!
//! The nearest product state to a fully symmetric state is itself symmetric,
//! hence a spin-coherent state `|α, β>`, and `G = -log₂ max |<α,β|ψ>|²`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use num_complex::Complex64;
use num_traits::Float;

use crate::optimize::{brent_minimize, nelder_mead};
use crate::spin::{self, AnnealPoint, GAMMA_CRITICAL};
use crate::{Error, Result};

const ALPHA_XTOL: f64 = 1e-10;

/// Amplitudes of a spin-coherent state in the `|m>` basis, `m = -j, ..., +j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinCoherentState {
    pub alpha: f64,
    pub beta: f64,
    pub amplitudes: Vec<Complex64>,
}

impl SpinCoherentState {
    /// Real parts, exact when `β = 0`.
    pub fn real_amplitudes(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.re).collect()
    }
}

/// `ln C(n, k)` for every `k`, from a running sum of logs.
fn ln_binomials(n: usize) -> Vec<f64> {
    let mut ln_fact = Vec::with_capacity(n + 1);
    ln_fact.push(0.0);
    for k in 1..=n {
        ln_fact.push(ln_fact[k - 1] + (k as f64).ln());
    }
    (0..=n).map(|k| ln_fact[n] - ln_fact[k] - ln_fact[n - k]).collect()
}

/// `count · ln x`, taking `0 · ln 0 = 0`.
fn weighted_ln(count: usize, x: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * x.ln()
    }
}

/// Real coherent amplitudes `sqrt(C(N, k)) cos(α/2)^k sin(α/2)^(N-k)` with
/// `k = j + m`, evaluated in log space.
fn coherent_magnitudes(ln_binom: &[f64], alpha: f64) -> Vec<f64> {
    let n = ln_binom.len() - 1;
    let (c, s) = ((0.5 * alpha).cos().abs(), (0.5 * alpha).sin().abs());
    (0..=n).map(|k| (0.5 * ln_binom[k] + weighted_ln(k, c) + weighted_ln(n - k, s)).exp()).collect()
}

/// `<m|α,β> = sqrt(C(2j, j+m)) cos(α/2)^(j+m) sin(α/2)^(j-m) e^(-imβ)`, so
/// `<Jz> = j cos α` and `α = π/2, β = 0` is the all-positive `Jx` eigenstate.
pub fn spin_coherent(alpha: f64, beta: f64, n_qubits: usize) -> Result<SpinCoherentState> {
    if !(0.0..=PI).contains(&alpha) {
        return Err(Error::invalid("alpha", "polar angle must lie in [0, π]"));
    }
    if !beta.is_finite() {
        return Err(Error::invalid("beta", "azimuth must be finite"));
    }
    if n_qubits == 0 {
        return Err(Error::invalid("n", "need at least one qubit"));
    }
    let j = 0.5 * n_qubits as f64;
    let mags = coherent_magnitudes(&ln_binomials(n_qubits), alpha);
    let amplitudes = mags
        .iter()
        .enumerate()
        .map(|(k, &r)| Complex64::from_polar(r, -(k as f64 - j) * beta))
        .collect();
    Ok(SpinCoherentState { alpha, beta, amplitudes })
}

/// Nearest coherent state and the resulting entanglement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgeResult {
    /// `G` in bits.
    pub value: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Mean of the nearest coherent state in `y = m/j`, i.e. `cos α`.
    pub y_alpha: f64,
}

fn check_state(norm: f64, len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::invalid("state", "need at least two amplitudes"));
    }
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("state", "state must be normalized"));
    }
    Ok(())
}

fn bits(overlap2: f64) -> f64 {
    (-overlap2.max(f64::MIN_POSITIVE).log2()).max(0.0)
}

/// Entanglement of a real state, optimizing `α` at `β = 0`.
///
/// The scan resolves the coherent-state width `~ 1/sqrt(N)` several times
/// over, and the starts `π/2`, `arccos(±y₀)` (with `y₀ = sqrt(<Jz²>)/j`) cover
/// the one-lobe and two-lobe cases. When the state is reflection symmetric the
/// optima at `α` and `π - α` tie and `α ≤ π/2` is reported.
pub fn gge(state: &[f64]) -> Result<GgeResult> {
    check_state(state.iter().map(|a| a * a).sum(), state.len())?;
    let n = state.len() - 1;
    let ln_binom = ln_binomials(n);
    let overlap2 = |alpha: f64| -> f64 {
        let o: f64 = coherent_magnitudes(&ln_binom, alpha).iter().zip(state).map(|(c, a)| c * a).sum();
        o * o
    };

    let samples = (4 * n).max(64);
    let step = PI / samples as f64;
    let mut starts: Vec<f64> = Vec::new();
    let grid: Vec<f64> = (0..=samples).map(|i| overlap2(i as f64 * step)).collect();
    let best = (0..=samples).fold(0, |b, i| if grid[i] > grid[b] { i } else { b });
    starts.push(best as f64 * step);
    let m = spin::jz_moments(state);
    let y0 = (m.second.sqrt() / (0.5 * n as f64)).min(1.0);
    starts.extend([FRAC_PI_2, y0.acos(), (-y0).acos()]);

    let mut alpha = starts[0];
    let mut value = grid[best];
    for s in starts {
        let r = brent_minimize(|a| -overlap2(a), (s - step).max(0.0), (s + step).min(PI), ALPHA_XTOL);
        if -r.value > value {
            value = -r.value;
            alpha = r.x;
        }
    }
    if alpha > FRAC_PI_2 {
        let mirrored = overlap2(PI - alpha);
        if (mirrored - value).abs() <= 1e-12 * value.max(1e-300) {
            alpha = PI - alpha;
        }
    }
    Ok(GgeResult { value: bits(value), alpha, beta: 0.0, y_alpha: alpha.cos() })
}

/// Entanglement of a complex state, optimizing both angles.
pub fn gge_complex(state: &[Complex64]) -> Result<GgeResult> {
    check_state(state.iter().map(|c| c.norm_sqr()).sum(), state.len())?;
    let n = state.len() - 1;
    let j = 0.5 * n as f64;
    let ln_binom = ln_binomials(n);
    let overlap2 = |alpha: f64, beta: f64| -> f64 {
        let mags = coherent_magnitudes(&ln_binom, alpha);
        let o: Complex64 = mags
            .iter()
            .zip(state)
            .enumerate()
            .map(|(k, (&r, a))| Complex64::from_polar(r, (k as f64 - j) * beta) * a)
            .sum();
        o.norm_sqr()
    };

    let na = (4 * n).max(64);
    let nb = (4 * n).max(64);
    let (da, db) = (PI / na as f64, 2.0 * PI / nb as f64);
    let mut best = (0.0, 0.0, -1.0);
    for ia in 0..=na {
        for ib in 0..nb {
            let (a, b) = (ia as f64 * da, ib as f64 * db);
            let v = overlap2(a, b);
            if v > best.2 {
                best = (a, b, v);
            }
        }
    }
    let bounds = [((best.0 - da).max(0.0), (best.0 + da).min(PI)), (best.1 - db, best.1 + db)];
    let (x, fx, _) = nelder_mead(|p| -overlap2(p[0], p[1]), &[best.0, best.1], &bounds, 1e-15, 2000);
    let (alpha, beta, value) = if -fx > best.2 { (x[0], x[1], -fx) } else { best };
    let beta = beta.rem_euclid(2.0 * PI);
    Ok(GgeResult { value: bits(value), alpha, beta, y_alpha: alpha.cos() })
}

/// Entanglement of the annealed ground state at `point`.
pub fn ground_state_gge(params: spin::EnsembleParams, point: AnnealPoint) -> Result<GgeResult> {
    gge(&spin::ground_state(params, point)?)
}

/// Asymptotic closed forms. Only the region containing `Γ` is populated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgeClosedForms {
    /// `log₂[c^{1/4} + c^{-1/4}] - 1`, `c = 3 - 2/Γ`, for `Γ > Γc`.
    pub region_iii: Option<f64>,
    /// `log₂[x^{1/4} + x^{-1/4}]`, `x = 1 - 1/M²`, `M = 2/γ`, for `Γ < Γc`.
    pub region_i: Option<f64>,
    /// Lobe-matching angle `arctan[sqrt(M)/(M²-1)^{3/4}]` for `Γ < Γc`.
    pub alpha_opt: Option<f64>,
    /// Large-N critical value `log₂(N)/6`.
    pub asymptote: f64,
}

pub fn gge_closed_forms(n_qubits: usize, point: AnnealPoint) -> GgeClosedForms {
    let g = point.gamma();
    let asymptote = (n_qubits as f64).log2() / 6.0;
    let quarter = |x: f64| (x.powf(0.25) + x.powf(-0.25)).log2();
    if g > GAMMA_CRITICAL {
        let c = 3.0 - 2.0 / g;
        GgeClosedForms { region_iii: Some(quarter(c) - 1.0), region_i: None, alpha_opt: None, asymptote }
    } else if g < GAMMA_CRITICAL {
        let mass = 2.0 / point.ratio();
        let (region_i, alpha_opt) = if mass.is_infinite() {
            (1.0, 0.0)
        } else {
            (quarter(1.0 - 1.0 / (mass * mass)), (mass.sqrt() / (mass * mass - 1.0).powf(0.75)).atan())
        };
        GgeClosedForms { region_iii: None, region_i: Some(region_i), alpha_opt: Some(alpha_opt), asymptote }
    } else {
        GgeClosedForms { region_iii: None, region_i: None, alpha_opt: None, asymptote }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::EnsembleParams;
    use approx::assert_abs_diff_eq;

    #[test]
    fn coherent_moments_are_binomial() {
        for &alpha in &[0.3, 1.1, FRAC_PI_2, 2.5] {
            let s = spin_coherent(alpha, 0.0, 40).unwrap();
            let psi = s.real_amplitudes();
            let m = spin::jz_moments(&psi);
            assert_abs_diff_eq!(psi.iter().map(|a| a * a).sum::<f64>(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.mean, 20.0 * alpha.cos(), epsilon = 1e-10);
            assert_abs_diff_eq!(m.std_dev.powi(2), 10.0 * alpha.sin().powi(2), epsilon = 1e-9);
        }
    }

    #[test]
    fn pole_is_top_state() {
        let s = spin_coherent(0.0, 0.7, 6).unwrap();
        assert_abs_diff_eq!(s.amplitudes[6].norm(), 1.0, epsilon = 1e-15);
        assert!(s.amplitudes[..6].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn survives_large_ensembles() {
        let s = spin_coherent(FRAC_PI_2, 0.0, 4000).unwrap();
        let norm: f64 = s.amplitudes.iter().map(|c| c.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn full_field_ground_state_is_separable() {
        let params = EnsembleParams::new(30).unwrap();
        let r = ground_state_gge(params, AnnealPoint::new(1.0).unwrap()).unwrap();
        assert!(r.value < 1e-10, "{r:?}");
        assert_abs_diff_eq!(r.alpha, FRAC_PI_2, epsilon = 1e-5);
        let cf = gge_closed_forms(30, AnnealPoint::new(1.0).unwrap());
        assert_abs_diff_eq!(cf.region_iii.unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn ghz_has_one_bit() {
        let params = EnsembleParams::new(40).unwrap();
        let r = ground_state_gge(params, AnnealPoint::new(0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
        assert!(r.alpha < 1e-4);
        assert_eq!(gge_closed_forms(40, AnnealPoint::new(0.0).unwrap()).region_i, Some(1.0));
    }

    #[test]
    fn reflection_leaves_value_and_mirrors_angle() {
        let mut psi = spin_coherent(0.8, 0.0, 20).unwrap().real_amplitudes();
        let other = spin_coherent(1.9, 0.0, 20).unwrap().real_amplitudes();
        for (a, b) in psi.iter_mut().zip(&other) {
            *a = 0.8 * *a + 0.3 * b;
        }
        let norm = psi.iter().map(|a| a * a).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|a| *a /= norm);
        let flipped: Vec<f64> = psi.iter().rev().copied().collect();
        let (g1, g2) = (gge(&psi).unwrap(), gge(&flipped).unwrap());
        assert_abs_diff_eq!(g1.value, g2.value, epsilon = 1e-10);
        assert_abs_diff_eq!(g1.alpha, PI - g2.alpha, epsilon = 1e-5);
    }

    #[test]
    fn complex_path_recovers_rotated_coherent_state() {
        let s = spin_coherent(1.2, 2.1, 12).unwrap();
        let r = gge_complex(&s.amplitudes).unwrap();
        assert!(r.value < 1e-9, "{r:?}");
        assert_abs_diff_eq!(r.alpha, 1.2, epsilon = 1e-4);
        assert_abs_diff_eq!(r.beta, 2.1, epsilon = 1e-4);
    }

    #[test]
    fn real_and_complex_paths_agree_on_ground_states() {
        let params = EnsembleParams::new(16).unwrap();
        for &g in &[0.3, 0.66, 0.9] {
            let psi = spin::ground_state(params, AnnealPoint::new(g).unwrap()).unwrap();
            let c: Vec<Complex64> = psi.iter().map(|&a| Complex64::new(a, 0.0)).collect();
            assert_abs_diff_eq!(gge(&psi).unwrap().value, gge_complex(&c).unwrap().value, epsilon = 1e-8);
        }
    }
}
