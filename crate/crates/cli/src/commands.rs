//! One job per subcommand: resolve defaults, validate, sweep, emit tables.

use std::f64::consts::PI;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;

use goldilocks_core::anneal::{self, Schedule, StepControl};
use goldilocks_core::continuum::{self, CriticalLandmarks};
use goldilocks_core::entanglement::{gge_closed_forms, ground_state_gge};
use goldilocks_core::metrology::{self, NoiseModel, QfiResult};
use goldilocks_core::optimize::{scan_then_brent, BatchObjective, DeConfig};
use goldilocks_core::quench::{
    self, LandscapeGrid, LandscapeResult, QuenchObjective, QuenchOptimum, QuenchPropagator,
};
use goldilocks_core::spin::{self, GAMMA_CRITICAL};
use goldilocks_core::{AnnealPoint, EnsembleParams};

use crate::config::{invalid, Flags, Range, ValidationError};
use crate::output::{RunWriter, Table};

pub trait Job: Send + Sync {
    fn name(&self) -> &'static str;
    /// Resolved parameters, defaults included; this is what gets hashed.
    fn config(&self) -> serde_json::Value;
    /// Physical flags the job reads.
    fn uses(&self) -> &'static [&'static str];
    fn run(&self, out: &mut RunWriter) -> Result<()>;
}

macro_rules! job_boilerplate {
    ($name:literal, [$($key:literal),*]) => {
        fn name(&self) -> &'static str {
            $name
        }
        fn config(&self) -> serde_json::Value {
            serde_json::to_value(self).expect("plain data")
        }
        fn uses(&self) -> &'static [&'static str] {
            &[$($key),*]
        }
    };
}

fn core_invalid(e: goldilocks_core::Error) -> ValidationError {
    ValidationError(e.to_string())
}

fn ensemble(n: usize, name: &str) -> Result<EnsembleParams, ValidationError> {
    EnsembleParams::new(n).map_err(|_| invalid(name, format!("{n} is below the 2-qubit minimum")))
}

fn n_list(f: &Flags, default: &[usize]) -> Result<Vec<usize>, ValidationError> {
    let list = f.n_list.clone().unwrap_or_else(|| default.to_vec());
    if list.is_empty() {
        return Err(invalid("n-list", "empty"));
    }
    for &n in &list {
        ensemble(n, "n-list")?;
    }
    Ok(list)
}

fn gamma_grid(f: &Flags, default: Range) -> Result<Range, ValidationError> {
    let r = f.gamma_range.unwrap_or(default);
    if r.values().iter().any(|&g| AnnealPoint::new(g).is_err()) {
        return Err(invalid("gamma-range", "every Γ must lie in [0, 1]"));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Noise {
    kappa0: f64,
    zeta_z: f64,
    zeta_plus: f64,
    zeta_minus: f64,
}

impl Noise {
    fn resolve(f: &Flags, default_kappa0: f64) -> Result<Self, ValidationError> {
        let noise = Self {
            kappa0: f.kappa0.unwrap_or(default_kappa0),
            zeta_z: f.zeta_z.unwrap_or(0.0),
            zeta_plus: f.zeta_plus.unwrap_or(0.0),
            zeta_minus: f.zeta_minus.unwrap_or(0.0),
        };
        noise.model().map_err(core_invalid)?;
        Ok(noise)
    }

    fn model(&self) -> goldilocks_core::Result<NoiseModel> {
        NoiseModel::new(self.kappa0, self.zeta_z, self.zeta_plus, self.zeta_minus)
    }
}

/// Runs `f` over `items` on the current pool and emits whatever rows
/// succeeded, in item order, before reporting the first failure.
fn sweep<T: Sync>(
    out: &mut RunWriter,
    mut table: Table,
    items: &[T],
    f: impl Fn(&T) -> Result<Vec<Vec<f64>>> + Sync + Send,
) -> Result<()> {
    let results: Vec<Result<Vec<Vec<f64>>>> = items.par_iter().map(f).collect();
    let mut failure = None;
    for r in results {
        match r {
            Ok(rows) => rows.into_iter().for_each(|row| table.push(row)),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    out.emit(table)?;
    failure.map_or(Ok(()), Err)
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn point(g: f64) -> Result<AnnealPoint> {
    Ok(AnnealPoint::new(g)?)
}

fn landmarks() -> Result<CriticalLandmarks> {
    Ok(CriticalLandmarks::compute()?)
}

// ---------------------------------------------------------------- spectrum

#[derive(Debug, Serialize)]
pub struct Spectrum {
    n: usize,
    gamma_range: Range,
    levels: usize,
}

impl Spectrum {
    pub fn plan(f: &Flags) -> Result<Self, ValidationError> {
        let n = f.n.unwrap_or(100);
        let params = ensemble(n, "n")?;
        let levels = f.levels.unwrap_or(6);
        if levels == 0 || levels > params.dim() {
            return Err(invalid("levels", format!("must lie in 1..={}", params.dim())));
        }
        Ok(Self { n, gamma_range: gamma_grid(f, Range { start: 0.0, end: 1.0, steps: 201 })?, levels })
    }
}

impl Job for Spectrum {
    job_boilerplate!("spectrum", ["n", "gamma-range", "levels"]);

    fn run(&self, out: &mut RunWriter) -> Result<()> {
        let params = EnsembleParams::new(self.n)?;
        let mut table = Table::new("spectrum").col("gamma", "1", "input grid");
        for k in 0..self.levels {
            table = table.col(&format!("E_{k}"), "H", "spin::TridiagonalHamiltonian::lowest_energies");
        }
        let table = table
            .col("omega_20", "jH", "j * spin::TridiagonalHamiltonian::gap_20")
            .col("omega_thermo", "jH", "continuum::omega_thermo");
        sweep(out, table, &self.gamma_range.values(), |&g| {
            let h = spin::build_hamiltonian(params, point(g)?);
            let mut row = vec![g];
            row.extend(h.lowest_energies(self.levels));
            row.push(params.j() * h.gap_20());
            row.push(continuum::omega_thermo(g));
            Ok(vec![row])
        })
    }
}

// --------------------------------------------------------------- landmarks

#[derive(Debug, Serialize)]
pub struct Landmarks {
    n_list: Vec<usize>,
    a_range: Range,
}

impl Landmarks {
    pub fn plan(f: &Flags) -> Result<Self, ValidationError> {
        let a_range = f.a_range.unwrap_or(Range { start: -8.0, end: 4.0, steps: 121 });
        Ok(Self { n_list: n_list(f, &[100, 200, 400, 800, 1600, 3000])?, a_range })
    }
}

/// Least-squares `y = c1 x1 + c2 x2`.
fn two_term_fit(rows: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x1, x2, y) in rows {
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    (rows.len() >= 2 && det.abs() > 1e-300 * s11 * s22).then(|| ((b1 * s22 - b2 * s12) / det, (s11 * b2 - s12 * b1) / det))
}

impl Job for Landmarks {
    job_boilerplate!("landmarks", ["n-list", "a-range"]);

    fn run(&self, out: &mut RunWriter) -> Result<()> {
        let lm = landmarks()?;
        let provenance = "continuum::CriticalLandmarks::compute";
        let mut constants = Table::new("constants")
            .col("a_0", "1", provenance)
            .col("gap_constant", "1", provenance)
            .col("a_F", "1", provenance)
            .col("ppf_constant", "1", provenance);
        constants.push(vec![lm.a_0, lm.gap_constant, lm.a_f, lm.ppf_constant]);
        out.emit(constants)?;

        let quartic = Table::new("quartic")
            .col("a", "1", "input grid")
            .col("eps_0", "1", "continuum::solve_quartic")
            .col("eps_1", "1", "continuum::solve_quartic")
            .col("eps_2", "1", "continuum::solve_quartic")
            .col("z2_0", "1", "continuum::solve_quartic")
            .col("penalty", "1", "continuum::ppf");
        sweep(out, quartic, &self.a_range.values(), |&a| {
            let s = continuum::solve_quartic(a, 3)?;
            let e = &s.eigenvalues;
            Ok(vec![vec![a, e[0], e[1], e[2], s.z2[0], continuum::ppf(a)?]])
        })?;

        let rows: Vec<Vec<f64>> = self
            .n_list
            .par_iter()
            .map(|&n| {
                let p = EnsembleParams::new(n).expect("validated");
                let gap = spin::minimum_gap(p);
                let gl = continuum::gamma_landmarks(p, &lm);
                vec![
                    n as f64,
                    p.j(),
                    gap.gamma,
                    gl.gamma_0,
                    gl.gamma_f,
                    GAMMA_CRITICAL - gap.gamma,
                    -gl.gamma_0_shift_expansion,
                    p.j() * gap.gap,
                ]
            })
            .collect();
        let mut table = Table::new("gamma_landmarks")
            .col("N", "qubits", "input")
            .col("j", "1", "N/2")
            .col("gamma_0", "1", "spin::minimum_gap")
            .col("gamma_0_scale_free", "1", "continuum::gamma_landmarks")
            .col("gamma_F", "1", "continuum::gamma_landmarks")
            .col("shift", "1", "2/3 - gamma_0")
            .col("shift_expansion", "1", "continuum::gamma_landmarks, two-term expansion")
            .col("omega_min", "jH", "j * spin::minimum_gap");
        for row in &rows {
            table.push(row.clone());
        }
        out.emit(table)?;

        let points: Vec<(f64, f64, f64)> =
            rows.iter().map(|r| (r[1].powf(-2.0 / 3.0), r[1].powf(-4.0 / 3.0), r[5])).collect();
        let mut fit = Table::new("shift_fit")
            .col("c_23", "1", "least squares of shift on j^(-2/3), j^(-4/3)")
            .col("c_43", "1", "least squares of shift on j^(-2/3), j^(-4/3)")
            .col("c_23_model", "1", "-4^(1/3) a_0 / 18")
            .col("c_43_model", "1", "-2^(1/3) a_0^2 / 108");
        let (c1, c2) = two_term_fit(&points).unwrap_or((f64::NAN, f64::NAN));
        fit.push(vec![c1, c2, -4f64.cbrt() * lm.a_0 / 18.0, -2f64.cbrt() * lm.a_0 * lm.a_0 / 108.0]);
        out.emit(fit)
    }
}

// --------------------------------------------------------------------- qfi

#[derive(Debug, Serialize)]
pub struct Qfi {
    n_list: Vec<usize>,
    gamma_range: Range,
    noise: Noise,
}

impl Qfi {
    pub fn plan(f: &Flags) -> Result<Self, ValidationError> {
        Ok(Self {
            n_list: n_list(f, &[51, 101, 201])?,
            gamma_range: gamma_grid(f, Range { start: 0.02, end: 1.0, steps: 50 })?,
            noise: Noise::resolve(f, 1.0 / 200.0)?,
        })
    }
}

impl Job for Qfi {
    job_boilerplate!("qfi", ["n-list", "gamma-range", "kappa0", "zeta-z", "zeta-plus", "zeta-minus"]);

    fn run(&self, out: &mut RunWriter) -> Result<()> {
        let noise = self.noise.model()?;
        let lm = landmarks()?;
        let items: Vec<(usize, f64)> =
            self.n_list.iter().flat_map(|&n| self.gamma_range.values().into_iter().map(move |g| (n, g))).collect();
        let table = Table::new("qfi")
            .col("N", "qubits", "input")
            .col("gamma", "1", "input grid")
            .col("F", "rad^-2", "metrology::ground_state_qfi (collective dephasing only)")
            .col("quantum_error", "1", "N (1/F - kappa0)")
            .col("F_inf", "rad^-2", "metrology::thermodynamic_qfi")
            .col("bound_region_i", "rad^2", "metrology::region_bounds")
            .col("bound_region_iii", "rad^2", "metrology::region_bounds")
            .col("asymptotics_valid", "bool", "metrology::NoiseModel::asymptotics_valid");
        sweep(out, table, &items, |&(n, g)| {
            let p = EnsembleParams::new(n)?;
            let pt = point(g)?;
            let q = metrology::ground_state_qfi(p, pt, noise.kappa0)?;
            let b = metrology::region_bounds(p, pt, &noise, &lm);
            Ok(vec![vec![
                n as f64,
                g,
                q.fisher,
                q.quantum_error,
                metrology::thermodynamic_qfi(p, pt, &noise),
                opt(b.region_i),
                opt(b.region_iii),
                flag(noise.asymptotics_valid(p)),
            ]])
        })?;

        let locus = Table::new("locus")
            .col("N", "qubits", "input")
            .col("gamma_star", "1", "metrology::max_qfi_over_gamma")
            .col("F_star", "rad^-2", "metrology::max_qfi_over_gamma")
            .col("gamma_F", "1", "continuum::gamma_landmarks")
            .col("F_region_ii", "rad^-2", "1 / metrology::region_ii_bound");
        sweep(out, locus, &self.n_list, |&n| {
            let p = EnsembleParams::new(n)?;
            let gamma_f = continuum::gamma_landmarks(p, &lm).gamma_f;
            let half = 6.0 * p.j().powf(-2.0 / 3.0);
            let best = metrology::max_qfi_over_gamma(p, noise.kappa0, (gamma_f - half).max(0.05), (gamma_f + half).min(1.0), 13)?;
            Ok(vec![vec![
                n as f64,
                best.gamma,
                best.qfi.fisher,
                gamma_f,
                1.0 / metrology::region_ii_bound(p, &noise, &lm),
            ]])
        })
    }
}

// ------------------------------------------------------------------ anneal

#[derive(Debug, Serialize)]
pub struct Anneal {
    n_list: Vec<usize>,
    tau_ladder: Vec<f64>,
    gamma: f64,
    levels: usize,
}

impl Anneal {
    pub fn plan(f: &Flags) -> Result<Self, ValidationError> {
        let n_list = n_list(f, &[25, 50, 100])?;
        let tau_ladder = f.tau_ladder.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0]);
        if tau_ladder.is_empty() || tau_ladder.iter().any(|&t| t.is_nan() || t < 0.0) {
            return Err(invalid("tau-ladder", "needs at least one non-negative τ/N"));
        }
        let gamma = f.gamma.unwrap_or(GAMMA_CRITICAL);
        Schedule::new(1.0, gamma).map_err(|_| invalid("gamma", "terminal Γ must lie in [0, 1)"))?;
        let levels = f.levels.unwrap_or(6);
        let smallest = n_list.iter().min().copied().unwrap_or(2) + 1;
        if levels == 0 || levels > smallest {
            return Err(invalid("levels", format!("must lie in 1..={smallest}")));
        }
        Ok(Self { n_list, tau_ladder, gamma, levels })
    }
}

impl Job for Anneal {
    job_boilerplate!("anneal", ["n-list", "tau-ladder", "gamma", "levels"]);

    fn run(&self, out: &mut RunWriter) -> Result<()> {
        let control = StepControl::default();
        let items: Vec<(usize, f64)> =
            self.n_list.iter().flat_map(|&n| self.tau_ladder.iter().map(move |&t| (n, t))).collect();
        let p0 = Table::new("p0")
            .col("N", "qubits", "input")
            .col("tau_over_N", "(jH)^-1", "input ladder")
            .col("tau", "(jH)^-1", "tau_over_N * N")
            .col("P0", "1", "anneal::evolve")
            .col("dt", "(jH)^-1", "anneal::evolve, accepted step")
            .col("max_norm_drift", "1", "anneal::evolve");
        sweep(out, p0, &items, |&(n, r)| {
            let tau = r * n as f64;
            let tr = anneal::evolve(EnsembleParams::new(n)?, &Schedule::new(tau, self.gamma)?, &control, 2, &[0])?;
            Ok(vec![vec![n as f64, r, tau, tr.p0, tr.dt, tr.max_norm_drift]])
        })?;

        let estimate = Table::new("time_estimate")
            .col("N", "qubits", "input")
            .col("T", "(jH)^-1", "anneal::annealing_time_estimate")
            .col("derivative_norm", "jH", "anneal::derivative_norm")
            .col("derivative_norm_over_j", "jH", "anneal::derivative_norm / j");
        sweep(out, estimate, &self.n_list, |&n| {
            let p = EnsembleParams::new(n)?;
            let t = anneal::annealing_time_estimate(p, self.gamma)?;
            Ok(vec![vec![n as f64, t.total, t.derivative_norm, t.derivative_norm / p.j()]])
        })?;

        let lm = landmarks()?;
        let tau_ratio = self.tau_ladder.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut spectrogram = Table::new("spectrogram")
            .col("N", "qubits", "input")
            .col("tau", "(jH)^-1", "largest tau_over_N * N")
            .col("t", "(jH)^-1", "anneal::spectrogram_gammas")
            .col("gamma", "1", "anneal::spectrogram_gammas");
        for k in 0..self.levels {
            spectrogram = spectrogram.col(&format!("overlap_{k}"), "1", "anneal::overlap_spectrogram");
        }
        sweep(out, spectrogram, &self.n_list, |&n| {
            let p = EnsembleParams::new(n)?;
            let tau = tau_ratio * n as f64;
            let sch = Schedule::new(tau, self.gamma)?;
            let half = anneal::goldilocks_half_width(p, lm.a_0);
            let tr = anneal::overlap_spectrogram(p, &sch, &control, self.levels, half)?;
            Ok(tr
                .times
                .iter()
                .zip(&tr.gammas)
                .zip(&tr.overlaps)
                .map(|((&t, &g), ov)| {
                    let mut row = vec![n as f64, tau, t, g];
                    row.extend(ov);
                    row
                })
                .collect())
        })
    }
}

// ------------------------------------------------------------ entanglement

#[derive(Debug, Serialize)]
pub struct Entanglement {
    n_list: Vec<usize>,
    gamma_range: Range,
}

impl Entanglement {
    pub fn plan(f: &Flags) -> Result<Self, ValidationError> {
        Ok(Self {
            n_list: n_list(f, &[100, 200, 400, 800])?,
            gamma_range: gamma_grid(f, Range { start: 0.0, end: 1.0, steps: 41 })?,
        })
    }
}

impl Job for Entanglement {
    job_boilerplate!("entanglement", ["n-list", "gamma-range"]);

    fn run(&self, out: &mut RunWriter) -> Result<()> {
        let items: Vec<(usize, f64)> =
            self.n_list.iter().flat_map(|&n| self.gamma_range.values().into_iter().map(move |g| (n, g))).collect();
        let table = Table::new("gge")
            .col("N", "qubits", "input")
            .col("gamma", "1", "input grid")
            .col("a", "1", "continuum::scale_free_a")
            .col("G", "bits", "entanglement::ground_state_gge")
            .col("alpha", "rad", "entanglement::ground_state_gge")
            .col("y_alpha", "1", "entanglement::ground_state_gge")
            .col("G_region_i", "bits", "entanglement::gge_closed_forms")
            .col("G_region_iii", "bits", "entanglement::gge_closed_forms")
            .col("alpha_opt", "rad", "entanglement::gge_closed_forms")
            .col("G_asymptote", "bits", "entanglement::gge_closed_forms");
        sweep(out, table, &items, |&(n, g)| {
            let p = EnsembleParams::new(n)?;
            let pt = point(g)?;
            let r = ground_state_gge(p, pt)?;
            let cf = gge_closed_forms(n, pt);
            Ok(vec![vec![
                n as f64,
                g,
                continuum::scale_free_a(p, g),
                r.value,
                r.alpha,
                r.y_alpha,
                opt(cf.region_i),
                opt(cf.region_iii),
                opt(cf.alpha_opt),
                cf.asymptote,
            ]])
        })?;

        let maxima = Table::new("maxima")
            .col("N", "qubits", "input")
            .col("gamma_max", "1", "optimize::scan_then_brent of entanglement::ground_state_gge")
            .col("a_max", "1", "continuum::scale_free_a")
            .col("G_max", "bits", "optimize::scan_then_brent of entanglement::ground_state_gge");
        sweep(out, maxima, &self.n_list, |&n| {
            let p = EnsembleParams::new(n)?;
            let mut failure = None;
            let r = scan_then_brent(
                |g| match AnnealPoint::new(g).and_then(|pt| ground_state_gge(p, pt)) {
                    Ok(r) => -r.value,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::INFINITY
                    }
                },
                0.4,
                0.9,
                51,
                1e-6,
            );
            if let Some(e) = failure {
                return Err(e.into());
            }
            Ok(vec![vec![n as f64, r.x, continuum::scale_free_a(p, r.x), -r.value]])
        })
    }
}

// ------------------------------------------------------------------ quench

#[derive(Debug, Serialize)]
pub struct Quench {
    n: usize,
    n_list: Vec<usize>,
    kappa0: f64,
    grid: usize,
    seed: u64,
}

impl Quench {
    pub fn plan(f: &Flags) -> Result<Self, ValidationError> {
        let n = f.n.unwrap_or(20);
        ensemble(n, "n")?;
        let kappa0 = f.kappa0.unwrap_or(0.3);
        NoiseModel::collective(kappa0).map_err(core_invalid)?;
        let grid = f.grid.unwrap_or(100);
        if grid < 2 {
            return Err(invalid("grid", "need at least 2 nodes per axis"));
        }
        Ok(Self { n, n_list: n_list(f, &[16, 17, 20, 21, 24, 25])?, kappa0, grid, seed: f.seed.unwrap_or(2024) })
    }

    fn de_config(&self) -> DeConfig {
        DeConfig { seed: self.seed, ..DeConfig::default() }
    }
}

/// Evaluates each DE generation across the worker pool. Results come back
/// in input order, so the search is independent of the thread count.
struct ParallelObjective<'a>(&'a QuenchObjective);

impl BatchObjective for ParallelObjective<'_> {
    fn evaluate(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.par_iter().map(|p| self.0.score(p)).collect()
    }

    fn evaluate_one(&self, point: &[f64]) -> f64 {
        self.0.score(point)
    }
}

fn optimize(params: EnsembleParams, noise: &NoiseModel, config: &DeConfig) -> Result<QuenchOptimum> {
    let objective = QuenchObjective { propagator: QuenchPropagator::new(params)?, noise: *noise };
    Ok(quench::global_optimize_with(params, noise, &ParallelObjective(&objective), config)?)
}

impl Job for Quench {
    job_boilerplate!("quench", ["n", "n-list", "kappa0", "grid", "seed"]);

    fn run(&self, out: &mut RunWriter) -> Result<()> {
        let noise = NoiseModel::collective(self.kappa0)?;
        let p = EnsembleParams::new(self.n)?;
        let prop = QuenchPropagator::new(p)?;
        let grid = LandscapeGrid { t_count: self.grid, theta_count: self.grid };
        let nodes = grid.nodes(p)?;
        let values: Vec<QfiResult> = nodes.par_iter().map(|&q| prop.qfi(q, &noise)).collect::<Result<_, _>>()?;
        let land = LandscapeResult::from_values(grid, nodes, values)?;
        let mut table = Table::new("landscape")
            .col("t", "(jH)^-1", "quench::LandscapeGrid::nodes")
            .col("theta", "rad", "quench::LandscapeGrid::nodes")
            .col("F", "rad^-2", "quench::QuenchPropagator::qfi")
            .col("quantum_error", "1", "N (1/F - kappa0)")
            .col("supra_classical", "bool", "quantum_error < 1");
        for ((q, v), &s) in land.nodes.iter().zip(&land.values).zip(&land.supra_classical) {
            table.push(vec![q.t, q.theta, v.fisher, v.quantum_error, flag(s)]);
        }
        out.emit(table)?;

        let best = optimize(p, &noise, &self.de_config())?;
        let mut optimum = Table::new("optimum")
            .col("source", "0=grid,1=de", "input")
            .col("t", "(jH)^-1", "grid argmax or quench::global_optimize_with")
            .col("theta", "rad", "grid argmax or quench::global_optimize_with")
            .col("t_over_pi_j", "1", "t / (pi j)")
            .col("theta_over_pi", "1", "theta / pi")
            .col("F", "rad^-2", "quench::QuenchPropagator::qfi")
            .col("quantum_error", "1", "N (1/F - kappa0)");
        let (gq, gv) = land.optimum;
        for (src, q, v) in [(0.0, gq, gv), (1.0, best.params, best.qfi)] {
            optimum.push(vec![src, q.t, q.theta, q.t / (PI * p.j()), q.theta / PI, v.fisher, v.quantum_error]);
        }
        out.emit(optimum)?;

        let mut trace = Table::new("trace")
            .col("generation", "1", "optimize::differential_evolution")
            .col("best_F", "rad^-2", "minus the best objective after each generation");
        for (i, v) in best.report.history.iter().enumerate() {
            trace.push(vec![i as f64, -v]);
        }
        out.emit(trace)?;

        let compare = Table::new("compare")
            .col("N", "qubits", "input")
            .col("kappa0", "rad^2", "input")
            .col("gamma_annealed", "1", "metrology::max_qfi_over_gamma on [0.05, 1]")
            .col("eps_annealed", "1", "metrology::max_qfi_over_gamma on [0.05, 1]")
            .col("eps_quenched", "1", "quench::global_optimize_with")
            .col("ratio", "1", "eps_annealed / eps_quenched")
            .col("t_star", "(jH)^-1", "quench::global_optimize_with")
            .col("theta_star", "rad", "quench::global_optimize_with")
            .col("width", "1", "quench::jz_width of the optimal probe");
        let config = self.de_config();
        // The optimizer already fans out over the pool, so ensembles run in turn.
        let mut rows = Vec::new();
        let mut failure = None;
        for &n in &self.n_list {
            let row = (|| -> Result<Vec<f64>> {
                let p = EnsembleParams::new(n)?;
                let annealed = metrology::max_qfi_over_gamma(p, noise.kappa0, 0.05, 1.0, 96)?;
                let q = optimize(p, &noise, &config)?;
                let width = quench::jz_width(&quench::quench_state(p, q.params)?);
                let (ea, eq) = (annealed.qfi.quantum_error, q.qfi.quantum_error);
                Ok(vec![n as f64, noise.kappa0, annealed.gamma, ea, eq, ea / eq, q.params.t, q.params.theta, width])
            })();
            match row {
                Ok(r) => rows.push(r),
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        let mut table = compare;
        for r in &rows {
            table.push(r.clone());
        }
        out.emit(table)?;
        if let Some(e) = failure {
            return Err(e);
        }

        let mut fits = Table::new("width_fit")
            .col("parity", "0=even,1=odd", "N mod 2")
            .col("prefactor", "1", "quench::fit_power_law of width on N")
            .col("exponent", "1", "quench::fit_power_law of width on N");
        for parity in [0usize, 1] {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r[0] as usize % 2 == parity).map(|r| (r[0], r[8])).collect();
            if let Some(fit) = quench::fit_power_law(&pts) {
                fits.push(vec![parity as f64, fit.prefactor, fit.exponent]);
            }
        }
        out.emit(fits)
    }
}

// ------------------------------------------------------------- convergence

#[derive(Debug, Serialize)]
pub struct Convergence {
    n_list: Vec<usize>,
    noise: Noise,
}

impl Convergence {
    pub fn plan(f: &Flags) -> Result<Self, ValidationError> {
        Ok(Self { n_list: n_list(f, &[100, 300, 1000])?, noise: Noise::resolve(f, 0.02)? })
    }
}

impl Job for Convergence {
    job_boilerplate!("convergence", ["n-list", "kappa0", "zeta-z", "zeta-plus", "zeta-minus"]);

    fn run(&self, out: &mut RunWriter) -> Result<()> {
        let noise = self.noise.model()?;
        let lm = landmarks()?;
        let table = Table::new("factors")
            .col("N", "qubits", "input")
            .col("kappa0_N2", "1", "kappa0 N^2")
            .col("gap_factor", "1", "metrology::convergence_factors")
            .col("ppf_factor", "1", "metrology::convergence_factors")
            .col("gamma_0", "1", "spin::minimum_gap")
            .col("gamma_star", "1", "metrology::max_qfi_over_gamma")
            .col("F_star", "rad^-2", "metrology::max_qfi_over_gamma")
            .col("gap_constant", "1", "continuum::CriticalLandmarks::compute")
            .col("ppf_constant", "1", "continuum::CriticalLandmarks::compute");
        sweep(out, table, &self.n_list, |&n| {
            let p = EnsembleParams::new(n)?;
            let c = metrology::convergence_factors(p, &noise, &lm)?;
            Ok(vec![vec![
                n as f64,
                noise.kappa0 * (n * n) as f64,
                c.gap_factor,
                c.ppf_factor,
                c.minimum_gap.gamma,
                c.max_qfi.gamma,
                c.max_qfi.qfi.fisher,
                lm.gap_constant,
                lm.ppf_constant,
            ]])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_part_of_the_config() {
        let implicit = Spectrum::plan(&Flags::default()).unwrap();
        let explicit = Spectrum::plan(&Flags { n: Some(100), levels: Some(6), ..Flags::default() }).unwrap();
        assert_eq!(implicit.config(), explicit.config());
        assert_eq!(implicit.config()["n"], 100);
    }

    #[test]
    fn validation_names_the_parameter() {
        let e = Spectrum::plan(&Flags { n: Some(1), ..Flags::default() }).unwrap_err();
        assert!(e.0.contains("`n`"), "{e}");
        let bad_range = Some(Range { start: 0.0, end: 1.5, steps: 3 });
        let e = Qfi::plan(&Flags { gamma_range: bad_range, ..Flags::default() }).unwrap_err();
        assert!(e.0.contains("gamma-range"), "{e}");
        let e = Qfi::plan(&Flags { kappa0: Some(-0.1), ..Flags::default() }).unwrap_err();
        assert!(e.0.contains("kappa0"), "{e}");
        let e = Anneal::plan(&Flags { gamma: Some(1.0), ..Flags::default() }).unwrap_err();
        assert!(e.0.contains("gamma"), "{e}");
        let e = Quench::plan(&Flags { grid: Some(1), ..Flags::default() }).unwrap_err();
        assert!(e.0.contains("grid"), "{e}");
        let e = Convergence::plan(&Flags { zeta_plus: Some(f64::NAN), ..Flags::default() }).unwrap_err();
        assert!(e.0.contains("zeta_plus"), "{e}");
    }

    #[test]
    fn failed_sweeps_flush_partial_rows_without_the_marker() {
        let tmp = tempfile::tempdir().unwrap();
        let crate::output::Opened::Fresh(mut w) =
            crate::output::open_run(tmp.path(), "demo", serde_json::json!({}), crate::config::Format::Csv, true).unwrap()
        else {
            panic!("fresh directory served from cache");
        };
        let table = Table::new("partial").col("x", "1", "input");
        let err = sweep(&mut w, table, &[1.0, 2.0, 3.0], |&x| {
            if x == 2.0 {
                Err(goldilocks_core::Error::SingularSystem.into())
            } else {
                Ok(vec![vec![x]])
            }
        })
        .unwrap_err();
        assert!(err.downcast_ref::<goldilocks_core::Error>().is_some());
        let dir = w.dir().to_path_buf();
        let csv = std::fs::read_to_string(dir.join("partial.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(!dir.join("COMPLETE").exists());
        let record: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("record.json")).unwrap()).unwrap();
        assert_eq!(record["complete"], false);
    }

    #[test]
    fn two_term_fit_recovers_coefficients() {
        let rows: Vec<(f64, f64, f64)> =
            [50.0f64, 100.0, 400.0].iter().map(|j| (j.powf(-2.0 / 3.0), j.powf(-4.0 / 3.0), 0.349 * j.powf(-2.0 / 3.0) - 0.183 * j.powf(-4.0 / 3.0))).collect();
        let (c1, c2) = two_term_fit(&rows).unwrap();
        assert!((c1 - 0.349).abs() < 1e-10 && (c2 + 0.183).abs() < 1e-9);
    }
}
