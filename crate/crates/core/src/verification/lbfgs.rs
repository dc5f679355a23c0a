//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use crate::linalg::{axpy, dot};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    pub c1: f64,
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_evals: usize,
    pub grad_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { memory: 10, max_iters: 500, c1: 1e-4, c2: 0.9, max_line_evals: 30, grad_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub line_search_failed: bool,
}

struct Point {
    t: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

/// Minimize `f`, which returns the value and gradient at a point.
pub fn minimize(
    mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    opts: &LbfgsOptions,
) -> LbfgsResult {
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let result = |x: Vec<f64>, value, iterations, failed| LbfgsResult {
        x,
        value,
        iterations,
        line_search_failed: failed,
    };
    if !fx.is_finite() {
        return result(x, fx, 0, false);
    }
    for iter in 0..opts.max_iters {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= opts.grad_tol {
            return result(x, fx, iter, false);
        }
        let mut d = direction(&g, &hist);
        let mut slope0 = dot(&g, &d);
        if !(slope0 < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope0 = -dot(&g, &g);
        }
        let t0 = if hist.is_empty() { 1.0 / gmax.max(1.0) } else { 1.0 };
        let Some(p) = line_search(&mut f, &x, fx, slope0, &d, t0, opts) else {
            return result(x, fx, iter, true);
        };
        let s: Vec<f64> = d.iter().map(|v| v * p.t).collect();
        let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        axpy(1.0, &s, &mut x);
        let improvement = fx - p.f;
        fx = p.f;
        g = p.g;
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        if improvement <= 1e-15 * fx.abs().max(1e-300) {
            return result(x, fx, iter + 1, false);
        }
    }
    result(x, fx, opts.max_iters, false)
}

// two-loop recursion: −H·g
fn direction(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        axpy(-a, y, &mut q);
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        axpy(a - b, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn line_search(
    f: &mut impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x: &[f64],
    f0: f64,
    slope0: f64,
    d: &[f64],
    t_init: f64,
    opts: &LbfgsOptions,
) -> Option<Point> {
    let mut evals = 0;
    let mut eval = |t: f64| {
        let mut xt = x.to_vec();
        axpy(t, d, &mut xt);
        let (ft, gt) = f(&xt);
        let slope = dot(&gt, d);
        Point { t, f: ft, g: gt, slope }
    };
    let armijo = |p: &Point| p.f <= f0 + opts.c1 * p.t * slope0;
    let curvature = |p: &Point| p.slope.abs() <= -opts.c2 * slope0;

    let mut prev = Point { t: 0.0, f: f0, g: Vec::new(), slope: slope0 };
    let mut t = t_init;
    let (mut lo, mut hi) = loop {
        if evals >= opts.max_line_evals {
            return (prev.t > 0.0).then_some(prev);
        }
        evals += 1;
        let p = eval(t);
        if !p.f.is_finite() {
            // step too long; shrink toward the last good point
            t = 0.5 * (prev.t + t);
            continue;
        }
        if !armijo(&p) || (prev.t > 0.0 && p.f >= prev.f) {
            break (prev, p);
        }
        if curvature(&p) {
            return Some(p);
        }
        if p.slope >= 0.0 {
            break (p, prev);
        }
        t = 2.0 * p.t;
        prev = p;
    };
    // zoom: lo satisfies Armijo and has the lowest value seen
    while evals < opts.max_line_evals {
        evals += 1;
        let (a, b) = (lo.t.min(hi.t), lo.t.max(hi.t));
        let width = b - a;
        if width <= 1e-16 * b.max(1e-300) {
            break;
        }
        // safeguarded quadratic interpolation from lo's value and slope
        let dt = hi.t - lo.t;
        let denom = 2.0 * (hi.f - lo.f - lo.slope * dt);
        let mut t = if denom > 0.0 { lo.t - lo.slope * dt * dt / denom } else { 0.5 * (a + b) };
        if !(t > a + 0.1 * width && t < b - 0.1 * width) {
            t = 0.5 * (a + b);
        }
        let p = eval(t);
        if !p.f.is_finite() || !armijo(&p) || p.f >= lo.f {
            hi = p;
        } else {
            if curvature(&p) {
                return Some(p);
            }
            if p.slope * (hi.t - lo.t) >= 0.0 {
                hi = lo;
            }
            lo = p;
        }
    }
    // budget exhausted: accept a sufficient-decrease point if one was found
    (lo.t > 0.0 && lo.f < f0).then_some(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (v, g)
        };
        let r = minimize(f, vec![-1.2, 1.0], &LbfgsOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn quadratic_converges_fast() {
        let diag = [1.0, 10.0, 100.0, 1000.0];
        let f = |x: &[f64]| {
            let v = x.iter().zip(&diag).map(|(a, d)| 0.5 * d * a * a).sum();
            (v, x.iter().zip(&diag).map(|(a, d)| d * a).collect())
        };
        let r = minimize(f, vec![1.0; 4], &LbfgsOptions::default());
        assert!(r.value < 1e-20 && r.iterations < 60, "{r:?}");
    }

    #[test]
    fn flat_function_stops() {
        let r = minimize(|_| (1.0, vec![0.0; 3]), vec![0.5; 3], &LbfgsOptions::default());
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, vec![0.5; 3]);
    }

    #[test]
    fn unbounded_below_terminates() {
        let r = minimize(|x| (-x[0], vec![-1.0]), vec![0.0], &LbfgsOptions { max_iters: 50, ..Default::default() });
        assert!(r.x[0] > 0.0 && r.iterations <= 50);
    }
}
