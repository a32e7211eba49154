//! Quartic double-well self-interaction `U(t) = κ t²(1+t)² + b t²`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Well height scale.
    pub kappa: f64,
    /// Mass coefficient.
    pub b: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            b: 1e-2,
        }
    }
}

impl PotentialSpec {
    pub fn new(kappa: f64, b: f64) -> Result<Self> {
        let spec = Self { kappa, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(invalid(
                "kappa",
                format!("must be positive, got {}", self.kappa),
            ));
        }
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(invalid("b", format!("must be nonnegative, got {}", self.b)));
        }
        Ok(())
    }

    pub fn w(&self, t: f64) -> f64 {
        let s = t * (1.0 + t);
        self.kappa * s * s
    }

    pub fn dw(&self, t: f64) -> f64 {
        2.0 * self.kappa * t * (1.0 + t) * (1.0 + 2.0 * t)
    }

    pub fn sqrt_w(&self, t: f64) -> f64 {
        self.kappa.sqrt() * (t * (1.0 + t)).abs()
    }

    pub fn u(&self, t: f64) -> f64 {
        self.w(t) + self.b * t * t
    }

    pub fn du(&self, t: f64) -> f64 {
        self.dw(t) + 2.0 * self.b * t
    }

    /// `𝒲(t) = 2∫₀ᵗ √W`, nondecreasing, with `𝒲(−1) = −a`.
    pub fn interface_primitive(&self, t: f64) -> f64 {
        let q = |s: f64| s * s / 2.0 + s * s * s / 3.0;
        let g = if t >= 0.0 {
            q(t)
        } else if t >= -1.0 {
            -q(t)
        } else {
            q(t) - 2.0 * q(-1.0)
        };
        2.0 * self.kappa.sqrt() * g
    }

    /// `a = 2∫_{−1}^0 √W(s) ds` by adaptive Simpson quadrature.
    pub fn surface_constant(&self) -> f64 {
        let f = |s: f64| self.sqrt_w(s);
        2.0 * adaptive_simpson(&f, -1.0, 0.0, 1e-13)
    }

    /// `sup U` over `[lo, hi]`, from the critical points of the quartic.
    pub fn sup_u(&self, lo: f64, hi: f64) -> f64 {
        // U' = 2t (κ(1+t)(1+2t) + b), roots from κ(2t² + 3t + 1) + b = 0
        let mut cands = vec![lo, hi, 0.0];
        let disc = 9.0 * self.kappa * self.kappa - 8.0 * self.kappa * (self.kappa + self.b);
        if disc >= 0.0 {
            let sq = disc.sqrt();
            cands.push((-3.0 * self.kappa + sq) / (4.0 * self.kappa));
            cands.push((-3.0 * self.kappa - sq) / (4.0 * self.kappa));
        }
        cands
            .into_iter()
            .filter(|t| *t >= lo && *t <= hi)
            .map(|t| self.u(t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest constants in `|U'(t)| ≤ C(|t| + |t|³)` and `U(t) ≥ c t²` on
    /// samples of `[−3, 3]`.
    pub fn check_hypotheses(&self) -> HypothesisReport {
        let samples = (-3000..=3000)
            .filter(|&i| i != 0)
            .map(|i| i as f64 / 1000.0);
        let mut growth: f64 = 0.0;
        let mut lower = f64::INFINITY;
        let mut worst_at = 0.0;
        for t in samples {
            growth = growth.max(self.du(t).abs() / (t.abs() + t.abs().powi(3)));
            let ratio = self.u(t) / (t * t);
            if ratio < lower {
                lower = ratio;
                worst_at = t;
            }
        }
        let violation = (lower <= 1e-12).then_some(worst_at);
        HypothesisReport {
            growth_constant: growth,
            growth_exponent: 3,
            coercivity: lower.max(0.0),
            violation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `C` in the derivative growth bound.
    pub growth_constant: f64,
    /// `p` in the derivative growth bound.
    pub growth_exponent: u32,
    /// Largest `c` with `U ≥ c t²` on the samples.
    pub coercivity: f64,
    /// Sample where the quadratic lower bound fails, if any.
    pub violation: Option<f64>,
}

impl HypothesisReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}
