//! Ball-shaped bags: the sharp-interface approximation, the confined
//! (infinite exterior mass) model, and the sequence joining them.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bessel::{eigenvalues, mit_eigenvalue, profile, TwoZoneProblem};
use crate::error::{invalid, Result};
use crate::optim::{bisect_sign, golden_section};

const SCAN_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagConfig {
    pub quarks: usize,
    pub g: f64,
    pub m: f64,
    /// Surface tension.
    pub a: f64,
    /// Volume pressure.
    pub b: f64,
    /// Occupied ladder index (all quarks share it).
    pub level: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for BagConfig {
    fn default() -> Self {
        Self {
            quarks: 1,
            g: 0.8,
            m: 1.0,
            a: 1e-3,
            b: 1e-3,
            level: 1,
            r_min: 0.01,
            r_max: 20.0,
        }
    }
}

impl BagConfig {
    /// Checks everything except the coupling.
    pub fn validate_geometry(&self) -> Result<()> {
        if self.quarks == 0 {
            return Err(invalid("N", "need at least one quark"));
        }
        if self.level == 0 {
            return Err(invalid("k", "ladder indices start at 1"));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(invalid("m", format!("must be positive, got {}", self.m)));
        }
        if !(self.a >= 0.0 && self.b >= 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(invalid(
                "a",
                "surface and volume coefficients must be nonnegative",
            ));
        }
        if self.a.max(self.b) <= 0.0 {
            return Err(invalid("a", "need max(a, b) > 0"));
        }
        if !(self.r_min > 0.0 && self.r_max > self.r_min && self.r_max.is_finite()) {
            return Err(invalid(
                "r_min",
                format!(
                    "need 0 < r_min < r_max, got ({}, {})",
                    self.r_min, self.r_max
                ),
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_geometry()?;
        if !(self.g > 0.0 && self.g < self.m) {
            return Err(invalid(
                "g",
                format!(
                    "requires 0 < g < m (the interior mass m - g must stay positive), got g = {}, m = {}",
                    self.g, self.m
                ),
            ));
        }
        Ok(())
    }

    fn geometry(&self, r: f64) -> f64 {
        4.0 * PI * self.a * r * r + 4.0 / 3.0 * PI * self.b * r.powi(3)
    }

    fn geometry_derivative(&self, r: f64) -> f64 {
        8.0 * PI * self.a * r + 4.0 * PI * self.b * r * r
    }
}

/// Interior/exterior masses of a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Cavity {
    TwoZone { mu_in: f64, mu_out: f64 },
    Confined { m: f64 },
}

#[derive(Debug, Clone, Copy)]
struct LevelAt {
    lambda: f64,
    bound: bool,
    derivative: f64,
    /// `u(R)/v(R)` from inside.
    ratio: f64,
    edge_density: f64,
}

impl Cavity {
    fn level(&self, k: usize, r: f64, with_derivative: bool) -> Result<LevelAt> {
        match *self {
            Cavity::TwoZone { mu_in, mu_out } => {
                let p = TwoZoneProblem::new(mu_in, mu_out, r)?;
                let lv = eigenvalues(&p, k)?;
                match lv.values.get(k - 1) {
                    None => Ok(LevelAt {
                        lambda: mu_out,
                        bound: false,
                        derivative: 0.0,
                        ratio: f64::NAN,
                        edge_density: 0.0,
                    }),
                    Some(&lambda) => {
                        let (derivative, ratio, edge_density) = if with_derivative {
                            let prof = profile(&p, lambda)?;
                            let (u, v) = prof.boundary_values();
                            (prof.radius_derivative(), u / v, v * v - u * u)
                        } else {
                            (f64::NAN, f64::NAN, f64::NAN)
                        };
                        Ok(LevelAt {
                            lambda,
                            bound: true,
                            derivative,
                            ratio,
                            edge_density,
                        })
                    }
                }
            }
            Cavity::Confined { m } => {
                let lambda = mit_eigenvalue(r, m, k)?;
                let derivative = if with_derivative {
                    let h = 1e-5 * r;
                    (mit_eigenvalue(r + h, m, k)? - mit_eigenvalue(r - h, m, k)?) / (2.0 * h)
                } else {
                    f64::NAN
                };
                let x = r * (lambda * lambda - m * m).sqrt();
                let ratio = x / (r * (lambda + m)) * crate::bessel::j1(x) / crate::bessel::j0(x);
                Ok(LevelAt {
                    lambda,
                    bound: true,
                    derivative,
                    ratio,
                    edge_density: 0.0,
                })
            }
        }
    }

    fn jump(&self) -> f64 {
        match *self {
            Cavity::TwoZone { mu_in, mu_out } => mu_out - mu_in,
            Cavity::Confined { .. } => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagReport {
    pub radius: f64,
    /// Occupied level at the optimum (exterior mass if absent).
    pub lambda: f64,
    pub bound: bool,
    pub energy: f64,
    pub curvature_residual: f64,
    /// Optimum sits at an end of the search interval.
    pub boundary_minimum: bool,
    /// `u(R)/v(R)` from inside the ball.
    pub boundary_ratio: f64,
    /// Exterior mass (`∞` for the confined model).
    pub mu_out: f64,
    /// Lowest energy among the scan samples.
    pub scan_min: f64,
    /// Second divided differences of the scanned objective are nonnegative.
    pub convex_on_samples: bool,
    /// `energy < N μ_out`.
    pub binds: bool,
}

/// `N λ_k + 4πaR² + (4/3)πbR³` for the sharp bag of radius `R`.
pub fn bag_energy(cfg: &BagConfig, radius: f64) -> Result<f64> {
    cfg.validate()?;
    objective(cfg, &bag_cavity(cfg), radius)
}

fn bag_cavity(cfg: &BagConfig) -> Cavity {
    Cavity::TwoZone {
        mu_in: cfg.m - cfg.g,
        mu_out: cfg.m,
    }
}

fn objective(cfg: &BagConfig, cav: &Cavity, r: f64) -> Result<f64> {
    let l = cav.level(cfg.level, r, false)?;
    Ok(cfg.quarks as f64 * l.lambda + cfg.geometry(r))
}

fn objective_derivative(cfg: &BagConfig, cav: &Cavity, r: f64) -> Result<f64> {
    let l = cav.level(cfg.level, r, true)?;
    Ok(cfg.quarks as f64 * l.derivative + cfg.geometry_derivative(r))
}

/// `|2a/R + b − N (μ_out − μ_in)(v² − u²)(R)|`, i.e. `|E'(R)| / (4πR²)`.
pub fn curvature_residual(cfg: &BagConfig, radius: f64) -> Result<f64> {
    cfg.validate()?;
    residual_at(cfg, &bag_cavity(cfg), radius)
}

fn residual_at(cfg: &BagConfig, cav: &Cavity, r: f64) -> Result<f64> {
    let l = cav.level(cfg.level, r, true)?;
    let curvature = 2.0 * cfg.a / r + cfg.b;
    Ok(match cav {
        Cavity::TwoZone { .. } => {
            (curvature - cfg.quarks as f64 * cav.jump() * l.edge_density).abs()
        }
        Cavity::Confined { .. } => {
            (cfg.quarks as f64 * l.derivative / (4.0 * PI * r * r) + curvature).abs()
        }
    })
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut r: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    r[0] = lo;
    r[n - 1] = hi;
    r
}

/// The `200` radii used for the global scan of [`minimize_bag`].
pub fn scan_radii(cfg: &BagConfig) -> Vec<f64> {
    log_grid(cfg.r_min, cfg.r_max, SCAN_POINTS)
}

fn optimize(cfg: &BagConfig, cav: &Cavity) -> Result<BagReport> {
    let radii = scan_radii(cfg);
    let energies = radii
        .iter()
        .map(|&r| objective(cfg, cav, r))
        .collect::<Result<Vec<f64>>>()?;
    let (best, &scan_min) = energies
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("scan is nonempty");
    let convex_on_samples = (1..radii.len() - 1).all(|i| {
        let left = (energies[i] - energies[i - 1]) / (radii[i] - radii[i - 1]);
        let right = (energies[i + 1] - energies[i]) / (radii[i + 1] - radii[i]);
        right - left >= -1e-9 * energies[i].abs().max(1.0)
    });

    let boundary_minimum = best == 0 || best == radii.len() - 1;
    let mut radius = radii[best];
    if !boundary_minimum {
        let (lo, hi) = (radii[best - 1], radii[best + 1]);
        let mut fail = None;
        let (log_r, _) = golden_section(
            |s| {
                objective(cfg, cav, s.exp()).unwrap_or_else(|e| {
                    fail = Some(e);
                    f64::INFINITY
                })
            },
            lo.ln(),
            hi.ln(),
            1e-10,
        );
        if let Some(e) = fail {
            return Err(e);
        }
        radius = log_r.exp();
        // sharpen with the sign of E'(R)
        let d = |r: f64| objective_derivative(cfg, cav, r).unwrap_or(f64::NAN);
        let tight = (radius * (1.0 - 1e-5), radius * (1.0 + 1e-5));
        let root = bisect_sign(d, tight.0, tight.1, 1e-13 * radius)
            .or_else(|| bisect_sign(d, lo, hi, 1e-13 * radius));
        if let Some(r) = root {
            if objective(cfg, cav, r)? <= objective(cfg, cav, radius)? {
                radius = r;
            }
        }
    }
    let mut energy = objective(cfg, cav, radius)?;
    if energy > scan_min {
        radius = radii[best];
        energy = scan_min;
    }
    let level = cav.level(cfg.level, radius, true)?;
    let mu_out = match *cav {
        Cavity::TwoZone { mu_out, .. } => mu_out,
        Cavity::Confined { .. } => f64::INFINITY,
    };
    Ok(BagReport {
        radius,
        lambda: level.lambda,
        bound: level.bound,
        energy,
        curvature_residual: residual_at(cfg, cav, radius)?,
        boundary_minimum,
        boundary_ratio: level.ratio,
        mu_out,
        scan_min,
        convex_on_samples,
        binds: energy < cfg.quarks as f64 * mu_out,
    })
}

/// Optimal ball radius for the sharp bag.
pub fn minimize_bag(cfg: &BagConfig) -> Result<BagReport> {
    cfg.validate()?;
    optimize(cfg, &bag_cavity(cfg))
}

/// Optimal ball for the confined model; `g` is not used.
pub fn mit_ground(cfg: &BagConfig) -> Result<BagReport> {
    cfg.validate_geometry()?;
    optimize(cfg, &Cavity::Confined { m: cfg.m })
}

/// Objective of [`mit_ground`] at one radius.
pub fn mit_energy(cfg: &BagConfig, radius: f64) -> Result<f64> {
    cfg.validate_geometry()?;
    objective(cfg, &Cavity::Confined { m: cfg.m }, radius)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitLimitRow {
    pub mass: f64,
    pub report: BagReport,
    /// `|l_n − l_MIT|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitLimit {
    pub rows: Vec<MitLimitRow>,
    pub limit: BagReport,
}

/// Bags with interior mass `m` and exterior masses `M_n`, compared with the
/// confined optimum.
pub fn mit_limit(cfg: &BagConfig, masses: &[f64]) -> Result<MitLimit> {
    cfg.validate_geometry()?;
    if masses.is_empty() {
        return Err(invalid("masses", "need at least one exterior mass"));
    }
    if masses[0] <= cfg.m {
        return Err(invalid("masses", "exterior masses must exceed m"));
    }
    if masses.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("masses", "exterior masses must increase strictly"));
    }
    let limit = mit_ground(cfg)?;
    let rows = masses
        .iter()
        .map(|&mass| {
            let report = optimize(
                cfg,
                &Cavity::TwoZone {
                    mu_in: cfg.m,
                    mu_out: mass,
                },
            )?;
            Ok(MitLimitRow {
                mass,
                gap: (report.energy - limit.energy).abs(),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MitLimit { rows, limit })
}

/// `N √((kπ)²/R² + (m − g)²) + 4πaR² + (4/3)πbR³`, the energy of the
/// interior Dirichlet mode used as a trial state.
pub fn dirichlet_bound(cfg: &BagConfig, radius: f64) -> f64 {
    let c = (cfg.level as f64 * PI).powi(2);
    cfg.quarks as f64 * (c / (radius * radius) + (cfg.m - cfg.g).powi(2)).sqrt()
        + cfg.geometry(radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BagConfig {
        BagConfig::default()
    }

    #[test]
    fn sphere_area_term() {
        let c = BagConfig {
            a: 1.0,
            b: 0.0,
            ..cfg()
        };
        let e = bag_energy(&c, 2.0).unwrap();
        // level + 16πa
        let lambda = e - 16.0 * PI;
        assert!(lambda > 0.0 && lambda <= 1.0);
    }

    #[test]
    fn small_radius_tends_to_free_mass() {
        let e = bag_energy(&cfg(), 1e-4).unwrap();
        assert!((e - 1.0).abs() < 1e-6);
    }

    #[test]
    fn interior_optimum_binds() {
        let rep = minimize_bag(&cfg()).unwrap();
        assert!(!rep.boundary_minimum && rep.bound && rep.binds);
        assert!(rep.curvature_residual < 1e-6, "{}", rep.curvature_residual);
        for r in scan_radii(&cfg()) {
            assert!(rep.energy <= bag_energy(&cfg(), r).unwrap());
        }
        // stationarity oracle: central differences of the energy
        let h = 1e-5 * rep.radius;
        let d = (bag_energy(&cfg(), rep.radius + h).unwrap()
            - bag_energy(&cfg(), rep.radius - h).unwrap())
            / (2.0 * h);
        assert!(d.abs() < 1e-6);
        let off = curvature_residual(&cfg(), 1.1 * rep.radius).unwrap();
        assert!(off > rep.curvature_residual);
    }

    #[test]
    fn volume_only_optimum_is_stationary() {
        let c = BagConfig {
            a: 0.0,
            b: 1e-3,
            ..cfg()
        };
        let rep = minimize_bag(&c).unwrap();
        assert!(!rep.boundary_minimum);
        assert!(rep.curvature_residual < 1e-6);
    }

    #[test]
    fn heavy_geometry_collapses() {
        let c = BagConfig {
            a: 10.0,
            b: 10.0,
            r_min: 1e-3,
            ..cfg()
        };
        let rep = minimize_bag(&c).unwrap();
        assert!(rep.boundary_minimum && rep.radius == c.r_min);
        assert!((rep.energy - 1.0).abs() < 1e-2);
    }

    #[test]
    fn excited_bag_costs_more() {
        let c2 = BagConfig { level: 2, ..cfg() };
        assert!(minimize_bag(&c2).unwrap().energy >= minimize_bag(&cfg()).unwrap().energy);
    }

    #[test]
    fn massless_confined_optimum() {
        let c = BagConfig {
            m: 1e-8,
            a: 0.0,
            b: 1.0,
            ..cfg()
        };
        let rep = mit_ground(&c).unwrap();
        let x = mit_eigenvalue(1.0, 0.0, 1).unwrap();
        let exact = (x / (4.0 * PI)).powf(0.25);
        assert!(
            (rep.radius - exact).abs() < 1e-6,
            "{} {}",
            rep.radius,
            exact
        );
        assert!(rep.convex_on_samples);
        assert!((rep.boundary_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn more_quarks_bigger_confined_bag() {
        let one = mit_ground(&cfg()).unwrap().radius;
        let two = mit_ground(&BagConfig { quarks: 2, ..cfg() })
            .unwrap()
            .radius;
        assert!(two > one);
    }

    #[test]
    fn validation() {
        assert!(bag_energy(&BagConfig { g: 1.2, ..cfg() }, 1.0).is_err());
        assert!(mit_ground(&BagConfig {
            a: 0.0,
            b: 0.0,
            ..cfg()
        })
        .is_err());
        assert!(mit_limit(&cfg(), &[0.5, 2.0]).is_err());
        assert!(mit_limit(&cfg(), &[4.0, 2.0]).is_err());
    }

    #[test]
    fn dirichlet_trial_bound_holds() {
        for r in scan_radii(&cfg()) {
            assert!(bag_energy(&cfg(), r).unwrap() <= dirichlet_bound(&cfg(), r) + 1e-12);
        }
    }
}
