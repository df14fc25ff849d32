//! Annealing from the x-coherent state along a linear schedule.
//!
//! The generator is `jH(Γ(t)) = -Γ Jx - (1-Γ) Jz²/j`, so times are in units of
//! inverse `jH` energy and runs at different `N` compare on a `τ/N` axis.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::linalg::{solve_complex_tridiagonal, SymTridiag};
use crate::spin::{self, jx_matrix, AnnealPoint, EnsembleParams, GAMMA_CRITICAL};
use crate::{Error, Result};

/// Norm drift tolerated at any sample.
pub const NORM_TOL: f64 = 1e-8;

/// `Γ(t) = 1 - (1-Γ_τ) t/τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub total_time: f64,
    pub gamma_final: f64,
}

impl Schedule {
    pub fn new(total_time: f64, gamma_final: f64) -> Result<Self> {
        if !(total_time >= 0.0) || !total_time.is_finite() {
            return Err(Error::invalid("tau", "total time must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&gamma_final) {
            return Err(Error::invalid("gamma_final", "terminal Γ must lie in [0, 1)"));
        }
        Ok(Self { total_time, gamma_final })
    }

    pub fn gamma_at(&self, t: f64) -> f64 {
        if self.total_time == 0.0 {
            return self.gamma_final;
        }
        1.0 - (1.0 - self.gamma_final) * (t / self.total_time)
    }

    /// Inverse of [`Self::gamma_at`].
    pub fn time_at(&self, gamma: f64) -> f64 {
        self.total_time * (1.0 - gamma) / (1.0 - self.gamma_final)
    }
}

/// Step-size control: start at `courant/‖jH‖` and halve until the final
/// ground-state probability moves by less than `p0_tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub courant: f64,
    pub p0_tol: f64,
    pub max_halvings: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { courant: 1.0, p0_tol: 1e-4, max_halvings: 12 }
    }
}

/// Samples of an evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Tracked level indices.
    pub levels: Vec<usize>,
    /// `overlaps[s][k] = |<ψ(t_s)|ψ_{levels[k]}(Γ(t_s))>|`.
    pub overlaps: Vec<Vec<f64>>,
    pub final_state: Vec<Complex64>,
    /// `|<ψ_0(Γ_τ)|ψ(τ)>|²`.
    pub p0: f64,
    /// Largest odd-sector probability seen at a sample.
    pub max_odd_probability: f64,
    /// Largest `|‖ψ‖² - 1|` seen at a sample.
    pub max_norm_drift: f64,
    /// Accepted step.
    pub dt: f64,
}

/// Crank–Nicolson propagation of the spin state.
struct Propagator {
    params: EnsembleParams,
    jz2: Vec<f64>,
    jx: Vec<f64>,
}

impl Propagator {
    fn new(params: EnsembleParams) -> Self {
        let j = params.j();
        Self {
            params,
            jz2: params.m_values().map(|m| m * m / j).collect(),
            jx: jx_matrix(params).offdiag().to_vec(),
        }
    }

    /// Upper bound on `‖jH(Γ)‖` over the whole schedule: `jH` is a convex
    /// combination of `-Jx` and `-Jz²/j`, both of norm `j`.
    fn norm_bound(&self) -> f64 {
        self.params.j()
    }

    /// One implicit-midpoint step of length `dt` with the generator at `gamma`.
    fn step(&self, psi: &mut [Complex64], gamma: f64, dt: f64, work: &mut StepWork) -> Result<()> {
        let n = psi.len();
        let half = Complex64::new(0.0, 0.5 * dt);
        let one = Complex64::new(1.0, 0.0);
        for i in 0..n {
            work.diag[i] = -(1.0 - gamma) * self.jz2[i];
        }
        for i in 0..n - 1 {
            work.off[i] = -gamma * self.jx[i];
        }
        // rhs = (I - i dt/2 A) ψ
        for i in 0..n {
            let mut a = work.diag[i] * psi[i];
            if i > 0 {
                a += work.off[i - 1] * psi[i - 1];
            }
            if i + 1 < n {
                a += work.off[i] * psi[i + 1];
            }
            work.rhs[i] = psi[i] - half * a;
        }
        for i in 0..n {
            work.cdiag[i] = one + half * work.diag[i];
        }
        for i in 0..n - 1 {
            work.coff[i] = half * work.off[i];
        }
        solve_complex_tridiagonal(&work.coff, &work.cdiag, &work.coff, &mut work.rhs)?;
        psi.copy_from_slice(&work.rhs);
        Ok(())
    }
}

struct StepWork {
    diag: Vec<f64>,
    off: Vec<f64>,
    cdiag: Vec<Complex64>,
    coff: Vec<Complex64>,
    rhs: Vec<Complex64>,
}

impl StepWork {
    fn new(n: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { diag: vec![0.0; n], off: vec![0.0; n - 1], cdiag: vec![z; n], coff: vec![z; n - 1], rhs: vec![z; n] }
    }
}

fn odd_probability(psi: &[Complex64]) -> f64 {
    let n = psi.len();
    (0..n).map(|i| 0.25 * (psi[i] - psi[n - 1 - i]).norm_sqr()).sum()
}

fn overlap(real: &[f64], psi: &[Complex64]) -> Complex64 {
    real.iter().zip(psi).map(|(a, b)| b * *a).sum()
}

/// Evolution at a fixed step; overlaps with `levels` at the given sample times.
fn run(
    prop: &Propagator,
    schedule: &Schedule,
    dt_target: f64,
    sample_times: &[f64],
    levels: &[usize],
) -> Result<EvolutionTrace> {
    let params = prop.params;
    let psi0 = spin::ground_state(params, AnnealPoint::new(1.0)?)?;
    let mut psi: Vec<Complex64> = psi0.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    let tau = schedule.total_time;
    let steps = if tau == 0.0 { 0 } else { (tau / dt_target).ceil().max(1.0) as usize };
    let dt = if steps == 0 { 0.0 } else { tau / steps as f64 };
    let mut work = StepWork::new(psi.len());
    let n_levels = levels.iter().copied().max().map_or(1, |m| m + 1);

    let mut trace = EvolutionTrace {
        times: Vec::new(),
        gammas: Vec::new(),
        levels: levels.to_vec(),
        overlaps: Vec::new(),
        final_state: Vec::new(),
        p0: 0.0,
        max_odd_probability: 0.0,
        max_norm_drift: 0.0,
        dt,
    };
    let record = |psi: &[Complex64], t: f64, trace: &mut EvolutionTrace| -> Result<()> {
        let gamma = schedule.gamma_at(t).clamp(0.0, 1.0);
        let drift = (psi.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs();
        if drift > NORM_TOL {
            return Err(Error::NormDrift { drift });
        }
        trace.max_norm_drift = trace.max_norm_drift.max(drift);
        trace.max_odd_probability = trace.max_odd_probability.max(odd_probability(psi));
        if !levels.is_empty() {
            let h = spin::build_hamiltonian(params, AnnealPoint::new(gamma)?);
            let s = spin::diagonalize(&h, n_levels.min(params.dim()))?;
            trace.overlaps.push(levels.iter().map(|&k| overlap(&s.eigenvectors[k], psi).norm()).collect());
        }
        trace.times.push(t);
        trace.gammas.push(gamma);
        Ok(())
    };

    let mut next_sample = 0;
    let mut t = 0.0;
    for s in 0..=steps {
        let t_next = (s as f64 + 1.0) * dt;
        while next_sample < sample_times.len() && sample_times[next_sample] <= t + 0.5 * dt {
            record(&psi, t, &mut trace)?;
            next_sample += 1;
        }
        if s == steps {
            break;
        }
        let gamma_mid = schedule.gamma_at(t + 0.5 * dt);
        prop.step(&mut psi, gamma_mid, dt, &mut work)?;
        t = t_next;
    }
    let drift = (psi.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs();
    if drift > NORM_TOL {
        return Err(Error::NormDrift { drift });
    }
    let ground = spin::ground_state(params, AnnealPoint::new(schedule.gamma_final)?)?;
    trace.p0 = overlap(&ground, &psi).norm_sqr();
    trace.max_norm_drift = trace.max_norm_drift.max(drift);
    trace.max_odd_probability = trace.max_odd_probability.max(odd_probability(&psi));
    trace.final_state = psi;
    Ok(trace)
}

/// Integrates `i dψ/dt = jH(Γ(t)) ψ` from the `Γ = 1` ground state.
///
/// `samples` evenly spaced times (including both ends) record overlaps with
/// the instantaneous eigenstates listed in `levels`. The step is halved until
/// `P_0` is stable to `control.p0_tol`; the finer run is returned.
pub fn evolve(
    params: EnsembleParams,
    schedule: &Schedule,
    control: &StepControl,
    samples: usize,
    levels: &[usize],
) -> Result<EvolutionTrace> {
    let times: Vec<f64> = match samples {
        0 => Vec::new(),
        1 => vec![schedule.total_time],
        s => (0..s).map(|i| schedule.total_time * i as f64 / (s - 1) as f64).collect(),
    };
    evolve_sampled(params, schedule, control, &times, levels)
}

fn evolve_sampled(
    params: EnsembleParams,
    schedule: &Schedule,
    control: &StepControl,
    times: &[f64],
    levels: &[usize],
) -> Result<EvolutionTrace> {
    if !(control.courant > 0.0) || !(control.p0_tol > 0.0) {
        return Err(Error::invalid("step_control", "courant number and tolerance must be positive"));
    }
    if levels.iter().any(|&k| k >= params.dim()) {
        return Err(Error::invalid("levels", "level index exceeds the Hilbert space"));
    }
    let prop = Propagator::new(params);
    let mut dt = control.courant / prop.norm_bound();
    // Coarse runs only need P_0.
    let mut previous = run(&prop, schedule, dt, &[], &[])?.p0;
    let mut change = f64::INFINITY;
    for _ in 0..control.max_halvings {
        dt *= 0.5;
        let current = run(&prop, schedule, dt, &[], &[])?.p0;
        change = (current - previous).abs();
        previous = current;
        if change < control.p0_tol {
            return run(&prop, schedule, dt, times, levels);
        }
    }
    Err(Error::StepRefinement { change })
}

/// `‖Jz²/j - Jx‖₂`, the largest singular value.
pub fn derivative_norm(params: EnsembleParams) -> f64 {
    let j = params.j();
    let jx = jx_matrix(params);
    let diag: Vec<f64> = params.m_values().map(|m| m * m / j).collect();
    let off: Vec<f64> = jx.offdiag().iter().map(|v| -v).collect();
    let t = SymTridiag::new(diag, off).expect("well-formed by construction");
    t.largest_eigenvalue().abs().max(t.eigenvalue(0).abs())
}

/// Adiabatic time estimate and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealTimeEstimate {
    pub total: f64,
    /// `‖d(jH)/dΓ‖₂`, independent of `Γ`.
    pub derivative_norm: f64,
}

/// `T = ∫_{Γ_τ}^1 ‖d(jH)/dΓ‖₂ / ω(Γ)² dΓ` with `ω = j(E_2 - E_0)` at this `N`.
///
/// The integral is split at the minimum-gap point and each part is done by
/// adaptive Simpson quadrature.
pub fn annealing_time_estimate(params: EnsembleParams, gamma_final: f64) -> Result<AnnealTimeEstimate> {
    if !(0.0..1.0).contains(&gamma_final) {
        return Err(Error::invalid("gamma_final", "terminal Γ must lie in [0, 1)"));
    }
    let norm = derivative_norm(params);
    let j = params.j();
    let integrand = |g: f64| {
        let w = j * spin::build_hamiltonian(params, AnnealPoint::new(g).expect("Γ within [Γ_τ, 1]")).gap_20();
        1.0 / (w * w)
    };
    let g0 = spin::minimum_gap(params).gamma;
    let mut cuts = vec![gamma_final];
    if g0 > gamma_final && g0 < 1.0 {
        cuts.push(g0);
    }
    cuts.push(1.0);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += adaptive_simpson(&integrand, w[0], w[1], 1e-8, 40);
    }
    Ok(AnnealTimeEstimate { total: norm * total, derivative_norm: norm })
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, depth: usize) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `Γ_c - Γ_0(N)` from the scale-free minimum-gap location `a_0`.
pub fn goldilocks_half_width(params: EnsembleParams, a0: f64) -> f64 {
    GAMMA_CRITICAL - crate::continuum::gamma_at_a(params, a0)
}

/// Spectrogram sample points in `Γ`: 200 uniform over `[Γ_τ, 1]` plus 100
/// within `|Γ - Γ_c| < 3·half_width`, merged in decreasing order.
pub fn spectrogram_gammas(schedule: &Schedule, half_width: f64) -> Vec<f64> {
    let lo = schedule.gamma_final;
    let mut g: Vec<f64> = (0..200).map(|i| 1.0 - (1.0 - lo) * i as f64 / 199.0).collect();
    let a = (GAMMA_CRITICAL - 3.0 * half_width).max(lo);
    let b = (GAMMA_CRITICAL + 3.0 * half_width).min(1.0);
    if b > a {
        g.extend((0..100).map(|i| a + (b - a) * (i as f64 + 0.5) / 100.0));
    }
    g.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    g.dedup();
    g
}

/// Overlaps with the lowest `n_max` instantaneous eigenstates along the anneal.
///
/// Labels follow each eigenstate continuously: at every sample the new
/// eigenvectors are matched greedily to the previous ones by largest overlap.
pub fn overlap_spectrogram(
    params: EnsembleParams,
    schedule: &Schedule,
    control: &StepControl,
    n_max: usize,
    half_width: f64,
) -> Result<EvolutionTrace> {
    if n_max == 0 || n_max > params.dim() {
        return Err(Error::invalid("n_max", "must lie in 1..=N+1"));
    }
    let gammas = spectrogram_gammas(schedule, half_width);
    let times: Vec<f64> = gammas.iter().map(|&g| schedule.time_at(g)).collect();
    let levels: Vec<usize> = (0..n_max).collect();
    let mut trace = evolve_sampled(params, schedule, control, &times, &levels)?;
    trace.overlaps = relabel(params, &trace.gammas, &trace.overlaps, n_max)?;
    Ok(trace)
}

/// Reorders overlap columns so each follows one eigenstate continuously.
fn relabel(params: EnsembleParams, gammas: &[f64], overlaps: &[Vec<f64>], n_max: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(overlaps.len());
    let mut prev: Option<Vec<Vec<f64>>> = None;
    // label_of[k] = tracked label of energy-ordered state k.
    for (s, &g) in gammas.iter().enumerate() {
        let h = spin::build_hamiltonian(params, AnnealPoint::new(g)?);
        let vecs = spin::diagonalize(&h, n_max)?.eigenvectors;
        let mut label_of: Vec<usize> = (0..n_max).collect();
        if let Some(p) = &prev {
            let mut taken = vec![false; n_max];
            let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n_max * n_max);
            for (k, v) in vecs.iter().enumerate() {
                for (l, w) in p.iter().enumerate() {
                    let o: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
                    pairs.push((o.abs(), k, l));
                }
            }
            pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
            let mut assigned = vec![false; n_max];
            for (_, k, l) in pairs {
                if !assigned[k] && !taken[l] {
                    label_of[k] = l;
                    assigned[k] = true;
                    taken[l] = true;
                }
            }
        }
        let mut row = vec![0.0; n_max];
        let mut ordered = vec![Vec::new(); n_max];
        for k in 0..n_max {
            row[label_of[k]] = overlaps[s][k];
            ordered[label_of[k]] = vecs[k].clone();
        }
        out.push(row);
        prev = Some(ordered);
    }
    Ok(out)
}
