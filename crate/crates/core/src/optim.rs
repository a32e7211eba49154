//! Descent methods: preconditioned L-BFGS with Armijo backtracking, and
//! one-dimensional golden-section and bisection searches.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::Result;
use crate::tridiag::{dot, solve, SymTridiagonal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Limited-memory quasi-Newton.
    Lbfgs,
    /// Preconditioned steepest descent with a damped initial step.
    Damped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub method: Method,
    pub max_iter: usize,
    /// Stop when the caller's residual measure drops to this value.
    pub tol: f64,
    /// Initial trial step for the damped method, in `(0, 1]`.
    pub damping: f64,
    pub memory: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            method: Method::Lbfgs,
            max_iter: 3000,
            tol: 1e-8,
            damping: 1.0,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Objective after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

/// Minimizes `objective` from `x0`.
///
/// `objective` returns value and gradient; trial points where it fails are
/// treated as rejected steps. `residual` maps a gradient to the stopping
/// measure. `observer` sees every accepted iterate.
pub fn minimize(
    mut objective: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    residual: impl Fn(&[f64]) -> f64,
    precond: &SymTridiagonal,
    x0: Vec<f64>,
    opts: &DescentOptions,
    mut observer: impl FnMut(&[f64], f64),
) -> Result<DescentOutcome> {
    let memory = match opts.method {
        Method::Lbfgs => opts.memory,
        Method::Damped => 0,
    };
    let first_step = match opts.method {
        Method::Lbfgs => 1.0,
        Method::Damped => opts.damping.clamp(f64::MIN_POSITIVE, 1.0),
    };
    let mut x = x0;
    let (mut f, mut g) = objective(&x)?;
    observer(&x, f);
    let mut history = vec![f];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut res = residual(&g);
    let mut iterations = 0;

    while res > opts.tol && iterations < opts.max_iter {
        let mut d = direction(&g, &pairs, precond);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            pairs.clear();
            d = solve(precond, &g).iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let t0 = if pairs.is_empty() { first_step } else { 1.0 };
        let mut t = t0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            if let Ok((ft, gt)) = objective(&trial) {
                // near convergence the Armijo decrease drops below rounding;
                // a full step that does not raise the value and flattens the
                // directional derivative is then still taken
                let flat = t == t0
                    && ft <= f
                    && f - ft <= 1e-13 * f.abs().max(1.0)
                    && dot(&gt, &d).abs() <= 0.9 * slope.abs();
                if (ft < f && ft <= f + ARMIJO * t * slope) || flat {
                    break Some((trial, ft, gt));
                }
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((xn, fnew, gnew)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            // stale curvature pairs; retry along the preconditioned gradient
            pairs.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        if memory > 0 && dot(&s, &y) > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            pairs.push_back((s, y));
            if pairs.len() > memory {
                pairs.pop_front();
            }
        }
        x = xn;
        f = fnew;
        g = gnew;
        observer(&x, f);
        history.push(f);
        res = residual(&g);
        iterations += 1;
    }
    Ok(DescentOutcome {
        converged: res <= opts.tol,
        x,
        value: f,
        gradient: g,
        residual: res,
        iterations,
        history,
    })
}

/// Two-loop recursion with `P⁻¹` as the scaled seed matrix.
fn direction(
    g: &[f64],
    pairs: &VecDeque<(Vec<f64>, Vec<f64>)>,
    precond: &SymTridiagonal,
) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let a = dot(s, &q) / dot(y, s);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let mut z = solve(precond, &q);
    if let Some((s, y)) = pairs.back() {
        let py = solve(precond, y);
        let gamma = dot(s, y) / dot(y, &py);
        z.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = dot(y, &z) / dot(y, s);
        for (zi, si) in z.iter_mut().zip(s) {
            *zi += si * (a - b);
        }
    }
    z.iter().map(|v| -v).collect()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of `f` in `[a, b]` by bisection when the endpoint signs differ.
pub fn bisect_sign(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    while (b - a).abs() > tol {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `f(x) = ½ xᵀ A x − bᵀx` with a tridiagonal SPD `A`.
    fn quadratic(n: usize) -> (SymTridiagonal, Vec<f64>) {
        let a = SymTridiagonal::new(
            (0..n).map(|i| 3.0 + (i as f64).sin()).collect(),
            vec![-1.0; n - 1],
        );
        let b = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        (a, b)
    }

    fn run(method: Method) -> (DescentOutcome, Vec<f64>) {
        let (a, b) = quadratic(50);
        let identity = SymTridiagonal::new(vec![1.0; 50], vec![0.0; 49]);
        let opts = DescentOptions {
            method,
            tol: if method == Method::Lbfgs { 1e-7 } else { 1e-6 },
            damping: 0.2,
            max_iter: 20000,
            ..Default::default()
        };
        let out = minimize(
            |x| {
                let ax = a.matvec(x);
                let f = 0.5 * dot(x, &ax) - dot(&b, x);
                let g = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
                Ok((f, g))
            },
            |g| dot(g, g).sqrt(),
            &identity,
            vec![0.0; 50],
            &opts,
            |_, _| {},
        )
        .unwrap();
        (out, solve(&a, &b))
    }

    #[test]
    fn lbfgs_solves_quadratic() {
        let (out, exact) = run(Method::Lbfgs);
        assert!(out.converged);
        for (x, e) in out.x.iter().zip(&exact) {
            assert!((x - e).abs() < 1e-7);
        }
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn damped_descent_solves_quadratic() {
        let (out, exact) = run(Method::Damped);
        assert!(out.converged, "{} {}", out.residual, out.iterations);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        for (x, e) in out.x.iter().zip(&exact) {
            assert!((x - e).abs() < 1e-5);
        }
    }

    #[test]
    fn golden_and_bisection() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7 && (fx - 1.0).abs() < 1e-14);
        let r = bisect_sign(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect_sign(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_none());
    }
}
