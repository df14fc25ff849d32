//! Differential evolution (rand/1/bin) over a bounded box.
//!
//! Trial vectors for a whole generation are drawn before any of them is
//! scored, so the random stream never depends on evaluation order and a
//! caller may score a batch in parallel without losing determinism.

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Scores a batch of candidate points (lower is better).
pub trait BatchObjective {
    fn evaluate(&self, points: &[Vec<f64>]) -> Vec<f64>;

    fn evaluate_one(&self, point: &[f64]) -> f64 {
        self.evaluate(&[point.to_vec()])[0]
    }
}

/// Evaluates a plain closure point by point.
#[derive(Debug, Clone, Copy)]
pub struct Sequential<F>(pub F);

impl<F: Fn(&[f64]) -> f64> BatchObjective for Sequential<F> {
    fn evaluate(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.iter().map(|p| (self.0)(p)).collect()
    }

    fn evaluate_one(&self, point: &[f64]) -> f64 {
        (self.0)(point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    pub population: usize,
    /// Differential weight `F`.
    pub mutation: f64,
    /// Binomial crossover probability `CR`.
    pub crossover: f64,
    pub generations: usize,
    pub seed: u64,
    /// Run a bounded Nelder–Mead from the best member afterwards.
    pub polish: bool,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self { population: 32, mutation: 0.7, crossover: 0.9, generations: 200, seed: 0, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeReport {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best objective after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub config: DeConfig,
}

/// Minimizes `objective` over the box `bounds`.
pub fn differential_evolution<O: BatchObjective + ?Sized>(
    objective: &O,
    bounds: &[(f64, f64)],
    config: &DeConfig,
) -> Result<DeReport> {
    let dim = bounds.len();
    if dim == 0 {
        return Err(Error::invalid("bounds", "need at least one dimension"));
    }
    if bounds.iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(Error::invalid("bounds", "each interval must be finite with lo < hi"));
    }
    if config.population < 4 {
        return Err(Error::invalid("population", "rand/1 mutation needs at least 4 members"));
    }
    if !(0.0..=2.0).contains(&config.mutation) || !(0.0..=1.0).contains(&config.crossover) {
        return Err(Error::invalid("mutation", "F must lie in [0, 2] and CR in [0, 1]"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let np = config.population;
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| lo + rng.gen::<f64>() * (hi - lo)).collect())
        .collect();
    let mut scores = objective.evaluate(&pop);
    let mut evaluations = np;
    let mut history = Vec::with_capacity(config.generations);

    for _ in 0..config.generations {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let (r1, r2, r3) = distinct_three(&mut rng, np, i);
                let jrand = rng.gen_range(0..dim);
                (0..dim)
                    .map(|k| {
                        let (lo, hi) = bounds[k];
                        if k == jrand || rng.gen::<f64>() < config.crossover {
                            let v = pop[r1][k] + config.mutation * (pop[r2][k] - pop[r3][k]);
                            if v < lo {
                                lo + rng.gen::<f64>() * (pop[i][k] - lo)
                            } else if v > hi {
                                hi - rng.gen::<f64>() * (hi - pop[i][k])
                            } else {
                                v
                            }
                        } else {
                            pop[i][k]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_scores = objective.evaluate(&trials);
        evaluations += np;
        for (i, (trial, score)) in trials.into_iter().zip(trial_scores).enumerate() {
            if score <= scores[i] {
                pop[i] = trial;
                scores[i] = score;
            }
        }
        history.push(scores.iter().copied().fold(f64::INFINITY, f64::min));
    }

    let best_idx = (0..np).fold(0, |b, i| if scores[i] < scores[b] { i } else { b });
    let mut best = pop[best_idx].clone();
    let mut value = scores[best_idx];
    if config.polish {
        let (x, fx, n) = nelder_mead(|p| objective.evaluate_one(p), &best, bounds, 1e-10, 400 * dim);
        evaluations += n;
        if fx < value {
            best = x;
            value = fx;
        }
    }
    Ok(DeReport { best, value, history, evaluations, config: *config })
}

fn distinct_three(rng: &mut ChaCha8Rng, np: usize, exclude: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let r = rng.gen_range(0..np);
        if r != exclude && !taken.contains(&r) {
            break r;
        }
    };
    let a = pick(&[]);
    let b = pick(&[a]);
    let c = pick(&[a, b]);
    (a, b, c)
}

/// Nelder–Mead restricted to a box by clamping every probe point.
/// Returns `(x, f(x), evaluations)`.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    bounds: &[(f64, f64)],
    ftol: f64,
    max_evaluations: usize,
) -> (Vec<f64>, f64, usize) {
    let dim = start.len();
    let clamp = |x: &mut Vec<f64>| {
        for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    };
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for k in 0..dim {
        let (lo, hi) = bounds[k];
        let mut p = start.to_vec();
        let step = 0.02 * (hi - lo);
        p[k] = if p[k] + step <= hi { p[k] + step } else { p[k] - step };
        clamp(&mut p);
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let mut evals = dim + 1;

    while evals < max_evaluations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(core::cmp::Ordering::Equal));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let spread = (values[dim] - values[0]).abs();
        if spread <= ftol * (values[0].abs() + ftol) {
            break;
        }
        let centroid: Vec<f64> =
            (0..dim).map(|k| simplex[..dim].iter().map(|p| p[k]).sum::<f64>() / dim as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..dim).map(|k| centroid[k] + t * (simplex[dim][k] - centroid[k])).collect();
            clamp(&mut p);
            p
        };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
        } else if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
        } else {
            let contracted = if fr < values[dim] { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            evals += 1;
            if fc < values[dim].min(fr) {
                simplex[dim] = contracted;
                values[dim] = fc;
            } else {
                for i in 1..=dim {
                    let mut p: Vec<f64> = (0..dim).map(|k| 0.5 * (simplex[0][k] + simplex[i][k])).collect();
                    clamp(&mut p);
                    values[i] = f(&p);
                    simplex[i] = p;
                }
                evals += dim;
            }
        }
    }
    let best = (0..=dim).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    (simplex[best].clone(), values[best], evals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rastrigin(x: &[f64]) -> f64 {
        10.0 * x.len() as f64
            + x.iter().map(|v| v * v - 10.0 * (2.0 * core::f64::consts::PI * v).cos()).sum::<f64>()
    }

    #[test]
    fn finds_rastrigin_global_minimum() {
        let bounds = [(-5.12, 5.12), (-5.12, 5.12)];
        let cfg = DeConfig { seed: 7, ..DeConfig::default() };
        let r = differential_evolution(&Sequential(rastrigin), &bounds, &cfg).unwrap();
        assert!(r.value < 1e-8, "{r:?}");
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let bounds = [(-5.12, 5.12), (-5.12, 5.12)];
        let cfg = DeConfig { seed: 42, generations: 30, ..DeConfig::default() };
        let a = differential_evolution(&Sequential(rastrigin), &bounds, &cfg).unwrap();
        let b = differential_evolution(&Sequential(rastrigin), &bounds, &cfg).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn rejects_tiny_population() {
        let cfg = DeConfig { population: 3, ..DeConfig::default() };
        assert!(differential_evolution(&Sequential(rastrigin), &[(0.0, 1.0)], &cfg).is_err());
    }
}
