//! Sudden-quench probes `exp(-iθJy) exp(-iJz²t/j)|x>` and their QFI over the
//! `(t, θ)` box.
//!
//! `Jy = P Jx P†` with `P = diag(exp(-iπm/2))`, so one real eigendecomposition
//! `Jx = V Λ Vᵀ` per ensemble gives every rotation as `P V e^{-iθΛ} Vᵀ P†`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use num_complex::Complex64;
use num_traits::Float;

use crate::linalg::{symmetric_eigen, SquareMatrix};
use crate::metrology::{self, dephase_complex, qfi_exact, NoiseModel, QfiResult};
use crate::optimize::{differential_evolution, BatchObjective, DeConfig, DeReport};
use crate::spin::EnsembleParams;
use crate::{Error, Result};

/// A point of the quench box, `t ∈ [0, πj]`, `θ ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchParams {
    pub t: f64,
    pub theta: f64,
}

impl QuenchParams {
    pub fn new(params: EnsembleParams, t: f64, theta: f64) -> Result<Self> {
        let (t_max, _) = box_bounds(params);
        if !(0.0..=t_max).contains(&t) {
            return Err(Error::invalid("t", "evolution time must lie in [0, πj]"));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid("theta", "rotation angle must lie in [0, π]"));
        }
        Ok(Self { t, theta })
    }
}

/// Upper corners `(πj, π)` of the quench box.
pub fn box_bounds(params: EnsembleParams) -> (f64, f64) {
    (PI * params.j(), PI)
}

/// Cached `Jx` eigenbasis for one ensemble size.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchPropagator {
    params: EnsembleParams,
    /// `V` stored by columns: `basis[k]` is the `k`-th `Jx` eigenvector.
    basis: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    /// `P = diag(exp(-iπm/2))`.
    phase: Vec<Complex64>,
}

impl QuenchPropagator {
    pub fn new(params: EnsembleParams) -> Result<Self> {
        let jx = crate::spin::jx_matrix(params);
        let dim = params.dim();
        let mut dense = SquareMatrix::zeros(dim);
        for i in 0..dim {
            dense.set(i, i, jx.diag()[i]);
        }
        for (i, &e) in jx.offdiag().iter().enumerate() {
            dense.set(i + 1, i, e);
            dense.set(i, i + 1, e);
        }
        let eig = symmetric_eigen(&dense)?;
        let phase = params.m_values().map(|m| Complex64::from_polar(1.0, -FRAC_PI_2 * m)).collect();
        Ok(Self { params, basis: eig.vectors, eigenvalues: eig.values, phase })
    }

    pub fn params(&self) -> EnsembleParams {
        self.params
    }

    /// `exp(-iθJy) ψ`.
    pub fn rotate_y(&self, psi: &[Complex64], theta: f64) -> Vec<Complex64> {
        let dim = psi.len();
        let shifted: Vec<Complex64> = psi.iter().zip(&self.phase).map(|(a, p)| a * p.conj()).collect();
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); dim];
        for (v, &lambda) in self.basis.iter().zip(&self.eigenvalues) {
            let c: Complex64 = v.iter().zip(&shifted).map(|(vi, s)| s * vi).sum();
            let c = c * Complex64::from_polar(1.0, -theta * lambda);
            for (o, vi) in out.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
        out.iter_mut().zip(&self.phase).for_each(|(o, p)| *o *= p);
        out
    }

    /// The real Wigner matrix `d(θ) = exp(-iθJy)`, row `m'`, column `m`.
    pub fn wigner_d(&self, theta: f64) -> SquareMatrix {
        let dim = self.params.dim();
        let mut d = SquareMatrix::zeros(dim);
        let mut e = alloc::vec![Complex64::new(0.0, 0.0); dim];
        for col in 0..dim {
            e.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            e[col] = Complex64::new(1.0, 0.0);
            for (row, v) in self.rotate_y(&e, theta).iter().enumerate() {
                d.set(row, col, v.re);
            }
        }
        d
    }

    /// The quenched probe.
    pub fn state(&self, qp: QuenchParams) -> Vec<Complex64> {
        let j = self.params.j();
        let x = crate::entanglement::spin_coherent(FRAC_PI_2, 0.0, self.params.n())
            .expect("valid angles")
            .amplitudes;
        let twisted: Vec<Complex64> =
            x.iter().zip(self.params.m_values()).map(|(a, m)| a * Complex64::from_polar(1.0, -m * m * qp.t / j)).collect();
        self.rotate_y(&twisted, qp.theta)
    }

    /// QFI of the quenched probe under collective dephasing.
    pub fn qfi(&self, qp: QuenchParams, noise: &NoiseModel) -> Result<QfiResult> {
        qfi_exact(&dephase_complex(&self.state(qp), noise.kappa0)?)
    }
}

/// `exp(-iθJy) exp(-iJz²t/j)` applied to the `Jx = +j` coherent state.
pub fn quench_state(params: EnsembleParams, qp: QuenchParams) -> Result<Vec<Complex64>> {
    Ok(QuenchPropagator::new(params)?.state(qp))
}

/// Node counts for a landscape; nodes include both box edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LandscapeGrid {
    pub t_count: usize,
    pub theta_count: usize,
}

impl Default for LandscapeGrid {
    fn default() -> Self {
        Self { t_count: 200, theta_count: 200 }
    }
}

impl LandscapeGrid {
    /// Every node, `t`-major.
    pub fn nodes(&self, params: EnsembleParams) -> Result<Vec<QuenchParams>> {
        if self.t_count < 2 || self.theta_count < 2 {
            return Err(Error::invalid("grid", "need at least two nodes per axis"));
        }
        let (t_max, th_max) = box_bounds(params);
        let (dt, dth) = self.spacing(params);
        let mut out = Vec::with_capacity(self.t_count * self.theta_count);
        for i in 0..self.t_count {
            for k in 0..self.theta_count {
                let t = if i + 1 == self.t_count { t_max } else { i as f64 * dt };
                let theta = if k + 1 == self.theta_count { th_max } else { k as f64 * dth };
                out.push(QuenchParams { t, theta });
            }
        }
        Ok(out)
    }

    pub fn spacing(&self, params: EnsembleParams) -> (f64, f64) {
        let (t_max, th_max) = box_bounds(params);
        (t_max / (self.t_count - 1) as f64, th_max / (self.theta_count - 1) as f64)
    }
}

/// QFI over a grid of quench parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeResult {
    pub grid: LandscapeGrid,
    /// Node parameters, `t`-major.
    pub nodes: Vec<QuenchParams>,
    pub values: Vec<QfiResult>,
    /// Best node.
    pub optimum: (QuenchParams, QfiResult),
    /// `ε < 1`, better than the uncorrelated limit.
    pub supra_classical: Vec<bool>,
}

impl LandscapeResult {
    /// Assembles a landscape from values computed elsewhere, in node order.
    pub fn from_values(grid: LandscapeGrid, nodes: Vec<QuenchParams>, values: Vec<QfiResult>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.is_empty() {
            return Err(Error::invalid("values", "need one value per landscape node"));
        }
        let best = (0..values.len()).fold(0, |b, i| if values[i].fisher > values[b].fisher { i } else { b });
        let supra_classical = values.iter().map(|v| v.quantum_error < 1.0).collect();
        Ok(Self { grid, optimum: (nodes[best], values[best]), nodes, values, supra_classical })
    }

    pub fn value_at(&self, i_t: usize, i_theta: usize) -> &QfiResult {
        &self.values[i_t * self.grid.theta_count + i_theta]
    }
}

/// QFI at every node of `grid`.
pub fn qfi_landscape(params: EnsembleParams, noise: &NoiseModel, grid: LandscapeGrid) -> Result<LandscapeResult> {
    let prop = QuenchPropagator::new(params)?;
    let nodes = grid.nodes(params)?;
    let values = nodes.iter().map(|&qp| prop.qfi(qp, noise)).collect::<Result<Vec<_>>>()?;
    LandscapeResult::from_values(grid, nodes, values)
}

/// `-F` over `(t, θ)`; failed evaluations score `+∞`.
#[derive(Debug, Clone)]
pub struct QuenchObjective {
    pub propagator: QuenchPropagator,
    pub noise: NoiseModel,
}

impl QuenchObjective {
    pub fn score(&self, point: &[f64]) -> f64 {
        let qp = QuenchParams { t: point[0], theta: point[1] };
        self.propagator.qfi(qp, &self.noise).map_or(f64::INFINITY, |q| -q.fisher)
    }
}

impl BatchObjective for QuenchObjective {
    fn evaluate(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.iter().map(|p| self.score(p)).collect()
    }

    fn evaluate_one(&self, point: &[f64]) -> f64 {
        self.score(point)
    }
}

/// Result of a seeded global search.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchOptimum {
    pub params: QuenchParams,
    pub qfi: QfiResult,
    pub report: DeReport,
}

/// Differential evolution over the quench box with `objective` (usually a
/// [`QuenchObjective`], or a parallel wrapper of one).
pub fn global_optimize_with<O: BatchObjective + ?Sized>(
    params: EnsembleParams,
    noise: &NoiseModel,
    objective: &O,
    config: &DeConfig,
) -> Result<QuenchOptimum> {
    let (t_max, th_max) = box_bounds(params);
    let report = differential_evolution(objective, &[(0.0, t_max), (0.0, th_max)], config)?;
    if !report.value.is_finite() {
        return Err(Error::invalid("objective", "no finite QFI anywhere in the population"));
    }
    let qp = QuenchParams { t: report.best[0], theta: report.best[1] };
    Ok(QuenchOptimum { params: qp, qfi: QfiResult::new(-report.value, noise.kappa0, params.n()), report })
}

pub fn global_optimize(params: EnsembleParams, noise: &NoiseModel, config: &DeConfig) -> Result<QuenchOptimum> {
    let objective = QuenchObjective { propagator: QuenchPropagator::new(params)?, noise: *noise };
    global_optimize_with(params, noise, &objective, config)
}

/// Annealed versus quenched quantum error at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealedVsQuenched {
    pub annealed: metrology::QfiMaximum,
    pub quenched: QuenchOptimum,
    /// `ε_A / ε_Q`.
    pub ratio: f64,
}

/// The best annealed ground state (over `Γ ∈ [0.05, 1]`) against the best
/// quenched probe.
pub fn compare_annealed_quenched(
    params: EnsembleParams,
    noise: &NoiseModel,
    config: &DeConfig,
) -> Result<AnnealedVsQuenched> {
    let annealed = metrology::max_qfi_over_gamma(params, noise.kappa0, 0.05, 1.0, 96)?;
    let quenched = global_optimize(params, noise, config)?;
    let ratio = annealed.qfi.quantum_error / quenched.qfi.quantum_error;
    Ok(AnnealedVsQuenched { annealed, quenched, ratio })
}

/// `ΔJz` of a probe.
pub fn jz_width(state: &[Complex64]) -> f64 {
    let mags: Vec<f64> = state.iter().map(|c| c.norm()).collect();
    crate::spin::jz_moments(&mags).std_dev
}

/// `y = α x^β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub prefactor: f64,
    pub exponent: f64,
}

/// Least-squares power law through `(x, y)` in log-log space; needs two
/// distinct positive abscissae.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<PowerLaw> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if logs.len() < 2 || sxx == 0.0 {
        return None;
    }
    let exponent = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Some(PowerLaw { prefactor: (my - exponent * mx).exp(), exponent })
}

/// Optimal-probe widths over a ladder of ensembles, fitted by parity of `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchWidths {
    /// `(N, ΔJz, optimum)`.
    pub points: Vec<(usize, f64, QuenchParams)>,
    pub even: Option<PowerLaw>,
    pub odd: Option<PowerLaw>,
}

pub fn optimal_quench_width(n_list: &[usize], noise: &NoiseModel, config: &DeConfig) -> Result<QuenchWidths> {
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let params = EnsembleParams::new(n)?;
        let opt = global_optimize(params, noise, config)?;
        points.push((n, jz_width(&quench_state(params, opt.params)?), opt.params));
    }
    let fit = |parity: usize| {
        let pts: Vec<(f64, f64)> =
            points.iter().filter(|p| p.0 % 2 == parity).map(|p| (p.0 as f64, p.1)).collect();
        fit_power_law(&pts)
    };
    Ok(QuenchWidths { even: fit(0), odd: fit(1), points })
}
