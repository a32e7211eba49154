//! Closed-form bound states for a two-zone scalar mass.
//!
//! With mass `μ_in` on `[0, R)` and `μ_out` outside, the sector equations are
//! solved by spherical Bessel functions inside and decaying modified ones
//! outside:
//!
//! ```text
//!   r < R:  v = A j0(kr),        u = A k/(λ+μ_in) j1(kr),   k = √(λ² − μ_in²)
//!   r > R:  v = B e^{-κr}/r,     u = v (1 + κr) / (r (λ+μ_out)),  κ = √(μ_out² − λ²)
//! ```
//!
//! Continuity of `u/v` at `R` gives the dispersion relation. Letting
//! `μ_out → ∞` leaves the confining condition `u(R) = v(R)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Samples of the pole-free matching function per bracket.
const SAMPLES_PER_BRACKET: usize = 64;
/// Roots closer than this (relative) to a window end are discarded.
const ENDPOINT_GUARD: f64 = 1e-9;

/// Spherical Bessel function `j0`.
pub fn j0(x: f64) -> f64 {
    if x.abs() < 0.5 {
        series(x, |k| 1.0 / factorial(2 * k + 1), 0)
    } else {
        x.sin() / x
    }
}

/// Spherical Bessel function `j1`.
pub fn j1(x: f64) -> f64 {
    if x.abs() < 0.5 {
        series(x, |k| (2 * k + 2) as f64 / factorial(2 * k + 3), 1)
    } else {
        x.sin() / (x * x) - x.cos() / x
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn series(x: f64, coeff: impl Fn(usize) -> f64, power: i32) -> f64 {
    let x2 = x * x;
    let mut acc = 0.0;
    let mut xp = x.powi(power);
    for k in 0..10 {
        let term = coeff(k) * xp;
        acc += if k % 2 == 0 { term } else { -term };
        xp *= x2;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoZoneProblem {
    pub mu_in: f64,
    pub mu_out: f64,
    pub radius: f64,
}

impl TwoZoneProblem {
    pub fn new(mu_in: f64, mu_out: f64, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid(
                "R",
                format!("radius must be positive, got {radius}"),
            ));
        }
        if !(mu_in.is_finite() && mu_out.is_finite() && mu_out > mu_in.abs()) {
            return Err(invalid(
                "mu_out",
                format!("need mu_out > |mu_in|, got mu_in = {mu_in}, mu_out = {mu_out}"),
            ));
        }
        Ok(Self {
            mu_in,
            mu_out,
            radius,
        })
    }

    /// Bound-state window `(|μ_in|, μ_out)`.
    pub fn window(&self) -> (f64, f64) {
        (self.mu_in.abs(), self.mu_out)
    }

    fn check_window(&self, lambda: f64) -> Result<()> {
        let (lo, hi) = self.window();
        if lambda > lo && lambda < hi {
            Ok(())
        } else {
            Err(Error::OutsideWindow {
                value: lambda,
                lo,
                hi,
            })
        }
    }

    fn k(&self, lambda: f64) -> f64 {
        ((lambda - self.mu_in) * (lambda + self.mu_in))
            .max(0.0)
            .sqrt()
    }

    fn kappa(&self, lambda: f64) -> f64 {
        ((self.mu_out - lambda) * (self.mu_out + lambda))
            .max(0.0)
            .sqrt()
    }

    /// `(u/v)` just outside `R`.
    fn rho_out(&self, lambda: f64) -> f64 {
        let kr = self.kappa(lambda) * self.radius;
        (1.0 + kr) / (self.radius * (lambda + self.mu_out))
    }

    /// `(√((λ−μ_in)/(λ+μ_in)) j1(kR), j0(kR))`, written via `k/(λ+μ_in)` so
    /// it stays finite as `λ → −μ_in`.
    fn interior_u_factor(&self, lambda: f64) -> (f64, f64) {
        let k = self.k(lambda);
        let x = k * self.radius;
        (k / (lambda + self.mu_in) * j1(x), j0(x))
    }

    /// `v j0 (ρ_in − ρ_out)`: the matching function times `j0(kR)`; continuous
    /// across the poles of `ρ_in` and with the same zeros.
    fn regular_matching(&self, lambda: f64) -> f64 {
        let (uf, j0x) = self.interior_u_factor(lambda);
        uf - self.rho_out(lambda) * j0x
    }

    /// Energies where `kR` is a positive multiple of `π` (zeros of `j0`).
    fn poles(&self) -> impl Iterator<Item = f64> + '_ {
        (1..).map(move |j| {
            let k = j as f64 * PI / self.radius;
            (k * k + self.mu_in * self.mu_in).sqrt()
        })
    }
}

/// `ρ_in(λ) − ρ_out(λ)`. Returns a signed infinity at poles of `ρ_in`.
pub fn matching_function(p: &TwoZoneProblem, lambda: f64) -> Result<f64> {
    p.check_window(lambda)?;
    let (uf, j0x) = p.interior_u_factor(lambda);
    if j0x == 0.0 {
        return Ok(if uf >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        });
    }
    Ok(uf / j0x - p.rho_out(lambda))
}

/// First roots of the dispersion relation in the bound-state window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Levels {
    pub values: Vec<f64>,
    /// `false` when the window held fewer roots than requested.
    pub complete: bool,
}

/// Ascending roots of `f` on `(lo, hi)` found by scanning each bracket of
/// `breaks` and bisecting sign changes, stopping after `count`.
fn scan_roots(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    breaks: impl Iterator<Item = f64>,
    count: usize,
) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut left = lo;
    let mut breaks = breaks.skip_while(|&b| b <= lo);
    while roots.len() < count && left < hi {
        let right = breaks.next().map_or(hi, |b| b.min(hi));
        let mut a = left;
        let mut fa = f(a);
        for i in 1..=SAMPLES_PER_BRACKET {
            let b = left + (right - left) * i as f64 / SAMPLES_PER_BRACKET as f64;
            let fb = f(b);
            if fa == 0.0 || fa.signum() != fb.signum() {
                let root = if fa == 0.0 { a } else { bisect(&f, a, b, fa) };
                let guard = ENDPOINT_GUARD * root.abs().max(1.0);
                if root - lo > guard && hi - root > guard {
                    roots.push(root);
                    if roots.len() == count {
                        break;
                    }
                }
            }
            a = b;
            fa = fb;
        }
        left = right;
    }
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= 1e-12 * mid.abs().max(f64::MIN_POSITIVE) {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// The first `count` bound-state energies, ascending.
pub fn eigenvalues(p: &TwoZoneProblem, count: usize) -> Result<Levels> {
    if count == 0 {
        return Err(invalid("count", "need at least one level"));
    }
    let (lo, hi) = p.window();
    let values = scan_roots(|l| p.regular_matching(l), lo, hi, p.poles(), count);
    Ok(Levels {
        complete: values.len() == count,
        values,
    })
}

/// `k`-th confined level `λ > m` of `√((λ−m)/(λ+m)) j1(x) = j0(x)`,
/// `x = R √(λ² − m²)`.
pub fn mit_eigenvalue(radius: f64, m: f64, k: usize) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid(
            "R",
            format!("radius must be positive, got {radius}"),
        ));
    }
    if !(m.is_finite() && m >= 0.0) {
        return Err(invalid("m", format!("mass must be nonnegative, got {m}")));
    }
    if k == 0 {
        return Err(invalid("k", "levels are counted from 1"));
    }
    let lambda_of = |x: f64| (m * m + (x / radius).powi(2)).sqrt();
    let f = |x: f64| {
        if x == 0.0 {
            return -1.0;
        }
        let l = lambda_of(x);
        // (λ−m)/(λ+m) = x² / (R²(λ+m)²), avoiding cancellation at small x
        x / (radius * (l + m)) * j1(x) - j0(x)
    };
    // roots interlace with multiples of π; scan one π-bracket at a time
    let breaks = (1..).map(|j| j as f64 * PI);
    let xs = scan_roots(f, 0.0, f64::INFINITY, breaks, k);
    xs.get(k - 1)
        .map(|&x| lambda_of(x))
        .ok_or_else(|| invalid("k", "root search exhausted"))
}

/// Normalized two-zone eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoZoneProfile {
    pub problem: TwoZoneProblem,
    pub lambda: f64,
    k: f64,
    kappa: f64,
    amplitude: f64,
}

/// Builds the normalized profile for a root `λ` of the dispersion relation.
pub fn profile(p: &TwoZoneProblem, lambda: f64) -> Result<TwoZoneProfile> {
    p.check_window(lambda)?;
    let mut prof = TwoZoneProfile {
        problem: *p,
        lambda,
        k: p.k(lambda),
        kappa: p.kappa(lambda),
        amplitude: 1.0,
    };
    let norm = prof.norm_sq();
    prof.amplitude = 1.0 / norm.sqrt();
    Ok(prof)
}

impl TwoZoneProfile {
    fn v_edge(&self) -> f64 {
        self.amplitude * j0(self.k * self.problem.radius)
    }

    /// `(u(r), v(r))`; the exterior branch uses the interior `v(R)`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let p = &self.problem;
        if r < p.radius {
            let x = self.k * r;
            let v = self.amplitude * j0(x);
            let u = self.amplitude * self.k / (self.lambda + p.mu_in) * j1(x);
            (u, v)
        } else {
            let decay = (p.radius / r) * (-self.kappa * (r - p.radius)).exp();
            let v = self.v_edge() * decay;
            let u = v * (1.0 + self.kappa * r) / (r * (self.lambda + p.mu_out));
            (u, v)
        }
    }

    /// Interior-side `(u(R), v(R))`.
    pub fn boundary_values(&self) -> (f64, f64) {
        let x = self.k * self.problem.radius;
        (
            self.amplitude * self.k / (self.lambda + self.problem.mu_in) * j1(x),
            self.amplitude * j0(x),
        )
    }

    /// `4π ∫ (u² + v²) r² dr` over both zones.
    pub fn norm_sq(&self) -> f64 {
        let p = &self.problem;
        let dens = |r: f64| {
            let (u, v) = self.eval(r);
            (u * u + v * v) * r * r
        };
        let inner = gauss_legendre(&dens, 0.0, p.radius, 64);
        let tail = 60.0 / self.kappa.max(1e-12);
        let outer = gauss_legendre(&dens, p.radius, p.radius + tail, 256);
        4.0 * PI * (inner + outer)
    }

    /// `(v² − u²)(R)`, the density at the interface.
    pub fn edge_density(&self) -> f64 {
        let (u, v) = self.boundary_values();
        v * v - u * u
    }

    /// `dλ/dR = −(μ_out − μ_in) · 4πR² (v² − u²)(R)`.
    pub fn radius_derivative(&self) -> f64 {
        let p = &self.problem;
        -(p.mu_out - p.mu_in) * 4.0 * PI * p.radius * p.radius * self.edge_density()
    }
}

const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Composite 5-point Gauss–Legendre on `[a, b]`.
pub(crate) fn gauss_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for i in 0..panels {
        let mid = a + (i as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Root of `(1−x) sin x = x cos x` on `(1.5, 2.5)` by plain bisection.
    fn massless_root() -> f64 {
        let f = |x: f64| (1.0 - x) * x.sin() - x * x.cos();
        let (mut a, mut b) = (1.5, 2.5);
        for _ in 0..100 {
            let c = 0.5 * (a + b);
            if f(a) * f(c) <= 0.0 {
                b = c
            } else {
                a = c
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn bessel_values() {
        assert!((j0(1.0) - 0.841_470_984_807_896_5).abs() < 1e-15);
        assert!((j1(1.0) - 0.301_168_678_939_756_8).abs() < 1e-15);
        // series and closed form agree at the switch point
        let x = 0.5;
        assert!((j1(x) - (x.sin() / (x * x) - x.cos() / x)).abs() < 1e-15);
        assert!((j0(x) - x.sin() / x).abs() < 1e-16);
        let x = 1e-4;
        assert!((j1(x) - (x / 3.0 - x.powi(3) / 30.0)).abs() < 1e-20);
    }

    #[test]
    fn massless_confined_mode() {
        let x = massless_root();
        assert!((x - 2.0428).abs() < 1e-4);
        assert!((mit_eigenvalue(1.0, 0.0, 1).unwrap() - x).abs() < 1e-9);
        assert!((mit_eigenvalue(2.0, 0.0, 1).unwrap() - x / 2.0).abs() < 1e-9);
    }

    #[test]
    fn confined_level_tends_to_mass_for_large_cavities() {
        let l = mit_eigenvalue(1e4, 1.0, 1).unwrap();
        assert!(l > 1.0 && l - 1.0 < 1e-6);
    }

    #[test]
    fn confined_levels_ascend() {
        let ls: Vec<f64> = (1..=4)
            .map(|k| mit_eigenvalue(1.0, 1.0, k).unwrap())
            .collect();
        assert!(ls.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn large_exterior_mass_reaches_confined_limit() {
        let p = TwoZoneProblem::new(0.0, 1e6, 1.0).unwrap();
        let l = eigenvalues(&p, 1).unwrap().values[0];
        // kR = λR at μ_in = 0
        assert!((l - 2.0428).abs() < 1e-3);
    }

    #[test]
    fn vanishing_well_has_no_bound_state() {
        let p = TwoZoneProblem::new(1.0 - 1e-9, 1.0, 1.0).unwrap();
        let lv = eigenvalues(&p, 1).unwrap();
        assert!(lv.values.is_empty() && !lv.complete);
        let p = TwoZoneProblem::new(0.5, 1.0, 1e-3).unwrap();
        assert!(eigenvalues(&p, 1).unwrap().values.is_empty());
    }

    #[test]
    fn levels_ascend_and_fall_with_radius() {
        let p = TwoZoneProblem::new(0.0, 1.0, 8.0).unwrap();
        let lv = eigenvalues(&p, 3).unwrap();
        assert!(lv.complete);
        assert!(lv.values.windows(2).all(|w| w[0] < w[1]));
        let wider = TwoZoneProblem::new(0.0, 1.0, 9.0).unwrap();
        let lw = eigenvalues(&wider, 3).unwrap();
        for (a, b) in lv.values.iter().zip(&lw.values) {
            assert!(b < a);
        }
    }

    #[test]
    fn roots_zero_the_matching_function() {
        let p = TwoZoneProblem::new(-0.3, 1.0, 5.0).unwrap();
        for l in eigenvalues(&p, 3).unwrap().values {
            let f = matching_function(&p, l).unwrap();
            assert!(f.abs() < 1e-9, "{l}: {f}");
        }
        assert!(matching_function(&p, 1.5).is_err());
        assert!(matching_function(&p, 0.2).is_err());
    }

    #[test]
    fn invalid_problems() {
        assert!(TwoZoneProblem::new(0.0, 1.0, 0.0).is_err());
        assert!(TwoZoneProblem::new(1.0, 1.0, 1.0).is_err());
        assert!(TwoZoneProblem::new(-1.5, 1.0, 1.0).is_err());
        assert!(mit_eigenvalue(1.0, 1.0, 0).is_err());
    }

    fn ode_residual(prof: &TwoZoneProfile, r: f64) -> (f64, f64) {
        let p = prof.problem;
        let mu = if r < p.radius { p.mu_in } else { p.mu_out };
        let h = 1e-3;
        let d = |f: &dyn Fn(f64) -> f64| {
            (f(r - 2.0 * h) - 8.0 * f(r - h) + 8.0 * f(r + h) - f(r + 2.0 * h)) / (12.0 * h)
        };
        let (u, v) = prof.eval(r);
        let dv = d(&|s| prof.eval(s).1);
        let du = d(&|s| prof.eval(s).0);
        (
            dv + (prof.lambda + mu) * u,
            du + 2.0 * u / r - (prof.lambda - mu) * v,
        )
    }

    #[test]
    fn profiles_solve_the_radial_system() {
        let p = TwoZoneProblem::new(0.2, 1.0, 4.0).unwrap();
        for l in eigenvalues(&p, 2).unwrap().values {
            let prof = profile(&p, l).unwrap();
            assert!((prof.norm_sq() - 1.0).abs() < 1e-10);
            for &r in &[0.3, 1.0, 2.5, 3.9, 4.1, 6.0, 9.0] {
                let (a, b) = ode_residual(&prof, r);
                assert!(a.abs() < 1e-10 && b.abs() < 1e-10, "r={r}: {a} {b}");
            }
            // continuity across the interface
            let (ui, vi) = prof.eval(4.0 - 1e-12);
            let (uo, vo) = prof.eval(4.0);
            assert!((ui - uo).abs() < 1e-8 && (vi - vo).abs() < 1e-8);
        }
    }

    #[test]
    fn radius_derivative_matches_differences() {
        let lam = |r: f64| {
            eigenvalues(&TwoZoneProblem::new(0.2, 1.0, r).unwrap(), 1)
                .unwrap()
                .values[0]
        };
        let r = 3.0;
        let h = 1e-5;
        let fd = (lam(r + h) - lam(r - h)) / (2.0 * h);
        let p = TwoZoneProblem::new(0.2, 1.0, r).unwrap();
        let an = profile(&p, lam(r)).unwrap().radius_derivative();
        assert!((fd - an).abs() < 1e-7 * an.abs(), "{fd} {an}");
    }
}
