use alloc::vec::Vec;
use num_traits::Float;

const GOLDEN: f64 = 0.381_966_011_250_105_1;
const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Brent's method: golden-section steps with parabolic interpolation, on the
/// closed interval `[lo, hi]`, to absolute tolerance `xtol` in `x`.
pub fn brent_minimize(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, xtol: f64) -> ScalarMinimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut x = a + GOLDEN * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut evaluations = 1;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..MAX_ITERATIONS {
        let m = 0.5 * (a + b);
        let tol = sqrt_eps * x.abs() + xtol / 3.0;
        let t2 = 2.0 * tol;
        if (x - m).abs() <= t2 - 0.5 * (b - a) {
            break;
        }
        let mut p = 0.0;
        let mut q = 0.0;
        let mut r = 0.0;
        if e.abs() > tol {
            r = (x - w) * (fx - fv);
            q = (x - v) * (fx - fw);
            p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            r = e;
            e = d;
        }
        if p.abs() < (0.5 * q * r).abs() && p > q * (a - x) && p < q * (b - x) {
            d = p / q;
            let u = x + d;
            if u - a < t2 || b - u < t2 {
                d = if x < m { tol } else { -tol };
            }
        } else {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = x + if d.abs() >= tol { d } else if d > 0.0 { tol } else { -tol };
        let fu = f(u);
        evaluations += 1;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    ScalarMinimum { x, value: fx, evaluations }
}

/// Coarse scan over `samples` uniform points, then Brent inside the cell pair
/// around the best sample. Guards against multi-modal objectives.
pub fn scan_then_brent(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, samples: usize, xtol: f64) -> ScalarMinimum {
    let samples = samples.max(3);
    let step = (hi - lo) / (samples - 1) as f64;
    let values: Vec<f64> = (0..samples).map(|i| f(lo + step * i as f64)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc })
        .0;
    let a = lo + step * best.saturating_sub(1) as f64;
    let b = lo + step * (best + 1).min(samples - 1) as f64;
    let mut refined = brent_minimize(&mut f, a, b, xtol);
    refined.evaluations += samples;
    if values[best] < refined.value {
        refined.x = lo + step * best as f64;
        refined.value = values[best];
    }
    refined
}
