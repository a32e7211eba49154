//! Dispatch and artifact writing.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use bagforge::bag::{minimize_bag, mit_limit};
use bagforge::report::{
    bag_row, density_profile, field_profile, gamma_rows, mit_limit_rows, soliton_row,
    write_soliton_table, write_table, ProfileRow,
};
use bagforge::{mit_eigenvalue, run_sweep, soliton};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig, Task};
use crate::error::CliError;
use crate::verify;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitRow {
    #[serde(rename = "R")]
    pub radius: f64,
    pub m: f64,
    pub k: usize,
    pub lambda: f64,
}

#[derive(Debug, Default)]
pub struct Outcome {
    /// Human-readable summary for stdout.
    pub lines: Vec<String>,
    /// Reasons for a nonzero "flagged" exit.
    pub flags: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.flags.is_empty() {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Serialize)]
struct GridInfo {
    r_max: f64,
    n: usize,
    h: f64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    command: &'static str,
    config_file: Option<&'a Path>,
    parameters: &'a std::collections::BTreeMap<String, crate::config::Setting>,
    ignored_config_keys: &'a [String],
    seed: u64,
    jobs: usize,
    grid: Option<GridInfo>,
    started_unix_s: u64,
    wall_time_s: f64,
    files: Vec<String>,
    flags: &'a [String],
    exit_code: i32,
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    files: Vec<PathBuf>,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Writer<'_> {
    fn put(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.cfg.out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    /// `stem.csv` or `stem.json` depending on the output format.
    fn rows<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<(), CliError> {
        match self.cfg.format {
            Format::Csv => self.put(&format!("{stem}.csv"), &write_table(rows)?),
            Format::Json => self.put(&format!("{stem}.json"), &to_json(rows)?),
        }
    }
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Solver(e.to_string()))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Solver(e.to_string()))
}

/// Runs the task, writes its tables and the `run.json` manifest.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| io_error(&cfg.out_dir, e))?;
    let mut w = Writer {
        cfg,
        files: Vec::new(),
    };
    let mut out = Outcome::default();
    let pool = pool(cfg.jobs)?;

    match &cfg.task {
        Task::Soliton(cfgs) => {
            let reports = pool.install(|| {
                cfgs.par_iter()
                    .map(soliton::minimize)
                    .collect::<bagforge::Result<Vec<_>>>()
            })?;
            let rows: Vec<_> = cfgs
                .iter()
                .zip(&reports)
                .map(|(c, r)| soliton_row(c, r))
                .collect();
            match cfg.format {
                Format::Csv => w.put("soliton.csv", &write_soliton_table(&rows)?)?,
                Format::Json => w.put("soliton.json", &to_json(&rows)?)?,
            }
            let mut profiles: Vec<ProfileRow> = Vec::new();
            for (c, r) in cfgs.iter().zip(&reports) {
                let g = c.model.g;
                out.lines.push(format!(
                    "g = {g}  energy = {}  lambda = {:?}  el_residual = {:.3e}  iterations = {}  converged = {}",
                    r.energy, r.lambdas, r.el_residual, r.iterations, r.converged
                ));
                if !r.converged {
                    out.flags
                        .push(format!("soliton at g = {g} did not converge"));
                }
                profiles.extend(field_profile(&format!("phi:g={g}"), &r.phi));
                for (i, psi) in r.spinors.iter().enumerate() {
                    if let Some(psi) = psi {
                        profiles.extend(density_profile(&format!("density_{}:g={g}", i + 1), psi));
                    }
                }
            }
            if cfg.profiles {
                w.rows("profiles", &profiles)?;
            }
        }
        Task::Bag(cfgs) => {
            let reports = pool.install(|| {
                cfgs.par_iter()
                    .map(minimize_bag)
                    .collect::<bagforge::Result<Vec<_>>>()
            })?;
            let rows: Vec<_> = cfgs
                .iter()
                .zip(&reports)
                .map(|(c, r)| bag_row(c, r))
                .collect();
            for (c, r) in cfgs.iter().zip(&reports) {
                out.lines.push(format!(
                    "g = {}  R_opt = {}  lambda = {}  energy = {}  curvature_residual = {:.3e}",
                    c.g, r.radius, r.lambda, r.energy, r.curvature_residual
                ));
                if r.boundary_minimum {
                    out.flags.push(format!(
                        "bag at g = {} is minimized at an end of the search interval",
                        c.g
                    ));
                }
            }
            w.rows("bag", &rows)?;
        }
        Task::Mit { radii, m, level } => {
            let rows = radii
                .iter()
                .map(|&radius| {
                    Ok(MitRow {
                        radius,
                        m: *m,
                        k: *level,
                        lambda: mit_eigenvalue(radius, *m, *level)?,
                    })
                })
                .collect::<bagforge::Result<Vec<_>>>()?;
            for r in &rows {
                out.lines.push(format!(
                    "R = {}  m = {}  k = {}  lambda = {}",
                    r.radius, r.m, r.k, r.lambda
                ));
            }
            w.rows("mit", &rows)?;
        }
        Task::MitLimit { bag, masses } => {
            let lim = mit_limit(bag, masses)?;
            let rows = mit_limit_rows(bag, &lim);
            for r in &rows {
                out.lines.push(format!(
                    "M_n = {}  R_n = {}  l_n = {}  gap = {:.3e}  boundary_ratio = {}",
                    r.mass,
                    r.radius,
                    r.l_n,
                    r.gap,
                    r.boundary_ratio.map_or("-".into(), |v| v.to_string())
                ));
            }
            out.lines.push(format!(
                "limit: R = {}  l_MIT = {}",
                lim.limit.radius, lim.limit.energy
            ));
            w.rows("mit_limit", &rows)?;
        }
        Task::GammaSweep(gcfg) => {
            let sweep = run_sweep(gcfg)?;
            let rows = gamma_rows(&sweep);
            out.lines.push(format!(
                "surface constant a = {}  sharp optimum R = {}  l_c = {}",
                sweep.surface_constant, sweep.reference.radius, sweep.reference.energy
            ));
            for r in &sweep.rows {
                out.lines.push(format!(
                    "eps = {}  l_s = {}  gap = {:.3e}  width = {:.4}  l2 = {:.3e}  equipartition = {:.3}",
                    r.eps, r.energy, r.gap, r.width, r.l2_distance, r.equipartition
                ));
                if !r.converged {
                    out.flags.push(format!(
                        "descent at eps = {} did not converge (residual {:.3e} after {} iterations)",
                        r.eps, r.residual, r.iterations
                    ));
                }
            }
            if let Some(reason) = &sweep.truncated {
                out.flags.push(format!("schedule truncated: {reason}"));
            }
            if !sweep.first_feasible {
                out.flags
                    .push("first minimizer does not bind (energy >= N m)".into());
            }
            w.rows("gamma", &rows)?;
            if cfg.profiles {
                let profiles: Vec<ProfileRow> = sweep
                    .rows
                    .iter()
                    .zip(&sweep.fields)
                    .flat_map(|(r, phi)| field_profile(&format!("phi:eps={}", r.eps), phi))
                    .collect();
                w.rows("profiles", &profiles)?;
            }
        }
        Task::Verify { samples } => {
            let rows = pool.install(|| verify::battery(cfg.seed, *samples));
            for r in &rows {
                out.lines.push(format!(
                    "{} {:<20} worst {:.3e}  tolerance {:.1e}  ({} cases)",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.check,
                    r.worst,
                    r.tolerance,
                    r.cases
                ));
                if !r.pass {
                    out.flags.push(format!("check {} failed", r.check));
                }
            }
            w.rows("verify", &rows)?;
        }
    }

    let exit_code = out.exit_code();
    let manifest_path = cfg.out_dir.join("run.json");
    let mut files: Vec<String> = w.files.iter().map(|p| p.display().to_string()).collect();
    files.push(manifest_path.display().to_string());
    let manifest = Manifest {
        program: "bagforge",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.settings.command.name(),
        config_file: cfg.settings.config_file.as_deref(),
        parameters: &cfg.settings.values,
        ignored_config_keys: &cfg.settings.ignored,
        seed: cfg.seed,
        jobs: cfg.jobs,
        grid: cfg.grid().map(|g| GridInfo {
            r_max: g.r_max(),
            n: g.n(),
            h: g.h(),
        }),
        started_unix_s: started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        files,
        flags: &out.flags,
        exit_code,
    };
    w.put("run.json", &to_json(&manifest)?)?;
    out.files = w.files;
    Ok(out)
}
