//! Run configuration: a flat `key = value` file with dotted sections,
//! overridden by command-line flags, resolved against per-command defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use bagforge::bag::BagConfig;
use bagforge::optim::{DescentOptions, Method};
use bagforge::{make_grid, GammaConfig, ModelParams, PotentialSpec, RadialGrid, SolitonConfig};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Soliton,
    Bag,
    Mit,
    MitLimit,
    GammaSweep,
    Verify,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Soliton,
        Command::Bag,
        Command::Mit,
        Command::MitLimit,
        Command::GammaSweep,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Soliton => "soliton",
            Command::Bag => "bag",
            Command::Mit => "mit",
            Command::MitLimit => "mit-limit",
            Command::GammaSweep => "gamma-sweep",
            Command::Verify => "verify",
        }
    }

    /// Keys this command reads, with their defaults.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::Soliton => &[
                ("model.N", "1"),
                ("model.g", "10"),
                ("model.m", "1"),
                ("model.k", "1"),
                ("potential.kappa", "0.1"),
                ("potential.b", "0.01"),
                ("grid.r_max", "20"),
                ("grid.n", "2000"),
                ("solver.method", "lbfgs"),
                ("solver.max_iter", "3000"),
                ("solver.tol", "1e-8"),
                ("solver.damping", "1"),
                ("solver.memory", "10"),
                ("output.profiles", "true"),
            ],
            Command::Bag => &[
                ("model.N", "1"),
                ("model.g", "0.8"),
                ("model.m", "1"),
                ("model.k", "1"),
                ("bag.a", "1e-3"),
                ("potential.b", "1e-3"),
                ("bag.r_min", "0.01"),
                ("bag.r_max", "20"),
            ],
            Command::Mit => &[("model.m", "1"), ("model.k", "1"), ("mit.R", "1")],
            Command::MitLimit => &[
                ("model.N", "1"),
                ("model.m", "1"),
                ("model.k", "1"),
                ("bag.a", "0.01"),
                ("potential.b", "0.01"),
                ("bag.r_min", "0.01"),
                ("bag.r_max", "20"),
                ("mit.n_max", "10"),
            ],
            Command::GammaSweep => &[
                ("model.N", "3"),
                ("model.g", "3.2"),
                ("model.m", "4"),
                ("potential.kappa", "1"),
                ("potential.b", "0.01"),
                ("grid.r_max", "6"),
                ("grid.n", "1200"),
                ("sweep.eps", "0.4,0.2,0.1,0.05"),
                ("sweep.r0", "auto"),
                ("bag.r_min", "0.01"),
                ("bag.r_max", "5"),
                ("solver.method", "lbfgs"),
                ("solver.max_iter", "3000"),
                ("solver.tol", "1e-7"),
                ("solver.damping", "1"),
                ("solver.memory", "10"),
                ("output.profiles", "true"),
            ],
            Command::Verify => &[("verify.samples", "5")],
        }
    }

    fn reads(self, key: &str) -> bool {
        COMMON.iter().any(|(k, _)| *k == key) || self.defaults().iter().any(|(k, _)| *k == key)
    }
}

/// Keys shared by every command.
const COMMON: &[(&str, &str)] = &[
    ("output.dir", "bagforge-out"),
    ("output.format", "csv"),
    ("run.seed", "0"),
    ("run.jobs", "auto"),
];

/// Every recognized key with its command-line flag.
pub const KEYS: &[(&str, &str)] = &[
    ("model.N", "N"),
    ("model.g", "g"),
    ("model.m", "m"),
    ("model.k", "k"),
    ("potential.kappa", "kappa"),
    ("potential.b", "b"),
    ("bag.a", "a"),
    ("bag.r_min", "r-min"),
    ("bag.r_max", "r-max"),
    ("mit.R", "R"),
    ("mit.n_max", "n-max"),
    ("grid.r_max", "grid-r-max"),
    ("grid.n", "n"),
    ("solver.method", "method"),
    ("solver.max_iter", "max-iter"),
    ("solver.tol", "tol"),
    ("solver.damping", "damping"),
    ("solver.memory", "memory"),
    ("sweep.eps", "eps"),
    ("sweep.r0", "r0"),
    ("verify.samples", "samples"),
    ("output.dir", "out"),
    ("output.format", "format"),
    ("output.profiles", "profiles"),
    ("run.seed", "seed"),
    ("run.jobs", "jobs"),
];

fn flag_of(key: &str) -> &'static str {
    KEYS.iter().find(|(k, _)| *k == key).map_or("?", |(_, f)| f)
}

/// Help text listing the keys and defaults of a command.
pub fn defaults_help(cmd: Command) -> String {
    let mut out = String::from("Config keys (flag) [default]:\n");
    for (key, value) in cmd.defaults().iter().chain(COMMON) {
        out.push_str(&format!("  {key:<16} --{:<11} [{value}]\n", flag_of(key)));
    }
    out.push_str("  run.jobs also defaults to $BAGFORGE_JOBS when set.\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    Env,
    File { line: usize },
    Flag,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Default => write!(f, "default"),
            Source::Env => write!(f, "$BAGFORGE_JOBS"),
            Source::File { line } => write!(f, "config line {line}"),
            Source::Flag => write!(f, "command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Setting {
    pub value: String,
    pub source: Source,
}

/// Resolved `key -> value` table for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub command: Command,
    pub config_file: Option<PathBuf>,
    pub values: BTreeMap<String, Setting>,
    /// Known keys in the file that this command does not read.
    pub ignored: Vec<String>,
}

/// Parses a config file into `(key, value, line)` triples.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String, usize)>, CliError> {
    let mut section = String::new();
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "config line {line_no}: expected `key = value`, got `{line}`"
            )));
        };
        let key = key.trim();
        // dotted keys are absolute; bare keys take the current section
        let key = if section.is_empty() || key.contains('.') {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(CliError::usage(format!(
                "config line {line_no}: unknown key `{key}`"
            )));
        }
        if let Some((_, _, first)) = out.iter().find(|(k, _, _)| *k == key) {
            return Err(CliError::usage(format!(
                "config line {line_no}: key `{key}` already set on line {first}"
            )));
        }
        out.push((key, value.trim().to_string(), line_no));
    }
    Ok(out)
}

impl Settings {
    /// Defaults, then environment, then file, then flags.
    pub fn resolve(
        command: Command,
        config_file: Option<&Path>,
        flags: &[(&'static str, String)],
        jobs_env: Option<String>,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (key, value) in command.defaults().iter().chain(COMMON) {
            values.insert(
                key.to_string(),
                Setting {
                    value: value.to_string(),
                    source: Source::Default,
                },
            );
        }
        if let Some(v) = jobs_env.filter(|v| !v.trim().is_empty()) {
            values.insert(
                "run.jobs".into(),
                Setting {
                    value: v,
                    source: Source::Env,
                },
            );
        }
        let mut ignored = Vec::new();
        if let Some(path) = config_file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (key, value, line) in parse_config_text(&text)? {
                if command.reads(&key) {
                    values.insert(
                        key,
                        Setting {
                            value,
                            source: Source::File { line },
                        },
                    );
                } else {
                    ignored.push(key);
                }
            }
        }
        for (key, value) in flags {
            if !command.reads(key) {
                return Err(CliError::usage(format!(
                    "--{} does not apply to `{}`",
                    flag_of(key),
                    command.name()
                )));
            }
            values.insert(
                key.to_string(),
                Setting {
                    value: value.clone(),
                    source: Source::Flag,
                },
            );
        }
        Ok(Self {
            command,
            config_file: config_file.map(Path::to_path_buf),
            values,
            ignored,
        })
    }

    fn raw(&self, key: &str) -> (&str, &Source) {
        let s = &self.values[key];
        (s.value.as_str(), &s.source)
    }

    fn bad(&self, key: &str, what: impl fmt::Display) -> CliError {
        let (value, source) = self.raw(key);
        CliError::usage(format!("{key} = `{value}` ({source}): {what}"))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let (value, _) = self.raw(key);
        match value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.bad(key, "expected a finite number")),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let (value, _) = self.raw(key);
        value
            .parse()
            .map_err(|_| self.bad(key, "expected a nonnegative integer"))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let (value, _) = self.raw(key);
        value
            .split(',')
            .map(|s| match s.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.bad(key, "expected comma-separated numbers")),
            })
            .collect()
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>, CliError> {
        let (value, _) = self.raw(key);
        value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| self.bad(key, "expected comma-separated integers"))
            })
            .collect()
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key).0 {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(self.bad(key, "expected true or false")),
        }
    }

    pub fn str(&self, key: &str) -> &str {
        self.raw(key).0
    }

    /// Wraps a solver validation error with the offending key's origin.
    fn check(&self, key: &str, result: bagforge::Result<()>) -> Result<(), CliError> {
        result.map_err(|e| self.bad(key, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub enum Task {
    Soliton(Vec<SolitonConfig>),
    Bag(Vec<BagConfig>),
    Mit {
        radii: Vec<f64>,
        m: f64,
        level: usize,
    },
    MitLimit {
        bag: BagConfig,
        masses: Vec<f64>,
    },
    GammaSweep(Box<GammaConfig>),
    Verify {
        samples: usize,
    },
}

/// Fully validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub settings: Settings,
    pub task: Task,
    pub out_dir: PathBuf,
    pub format: Format,
    pub profiles: bool,
    pub seed: u64,
    pub jobs: usize,
}

impl RunConfig {
    pub fn grid(&self) -> Option<RadialGrid> {
        match &self.task {
            Task::Soliton(cfgs) => cfgs.first().map(|c| c.grid),
            Task::GammaSweep(cfg) => Some(cfg.grid),
            _ => None,
        }
    }
}

fn grid(s: &Settings) -> Result<RadialGrid, CliError> {
    let r_max = s.f64("grid.r_max")?;
    let n = s.usize("grid.n")?;
    make_grid(r_max, n).map_err(|e| s.bad("grid.n", e))
}

fn controls(s: &Settings) -> Result<DescentOptions, CliError> {
    let method = match s.str("solver.method") {
        "lbfgs" => Method::Lbfgs,
        "damped" => Method::Damped,
        _ => return Err(s.bad("solver.method", "expected lbfgs or damped")),
    };
    let tol = s.f64("solver.tol")?;
    if tol <= 0.0 {
        return Err(s.bad("solver.tol", "tolerance must be positive"));
    }
    let damping = s.f64("solver.damping")?;
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(s.bad("solver.damping", "damping must lie in (0, 1]"));
    }
    Ok(DescentOptions {
        method,
        max_iter: s.usize("solver.max_iter")?,
        tol,
        damping,
        memory: s.usize("solver.memory")?,
    })
}

fn potential(s: &Settings) -> Result<PotentialSpec, CliError> {
    let kappa = s.f64("potential.kappa")?;
    let b = s.f64("potential.b")?;
    PotentialSpec::new(kappa, b).map_err(|e| s.bad("potential.kappa", e))
}

/// Occupied levels: one index for all quarks or one per quark.
fn levels(s: &Settings, quarks: usize) -> Result<Vec<usize>, CliError> {
    let ks = s.usize_list("model.k")?;
    let levels = match ks.len() {
        1 => vec![ks[0]; quarks],
        n if n == quarks => ks,
        _ => return Err(s.bad("model.k", format!("expected 1 or N = {quarks} indices"))),
    };
    Ok(levels)
}

fn single_level(s: &Settings) -> Result<usize, CliError> {
    match s.usize_list("model.k")?.as_slice() {
        [k] if *k >= 1 => Ok(*k),
        _ => Err(s.bad("model.k", "expected one ladder index >= 1")),
    }
}

fn parse_jobs(s: &Settings) -> Result<usize, CliError> {
    match s.str("run.jobs") {
        "auto" => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        _ => match s.usize("run.jobs")? {
            0 => Err(s.bad("run.jobs", "need at least one job")),
            n => Ok(n),
        },
    }
}

pub fn build(settings: Settings) -> Result<RunConfig, CliError> {
    let s = &settings;
    let format = match s.str("output.format") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        _ => return Err(s.bad("output.format", "expected csv or json")),
    };
    let seed = s.usize("run.seed")? as u64;
    let jobs = parse_jobs(s)?;
    let profiles = match s.command {
        Command::Soliton | Command::GammaSweep => s.bool("output.profiles")?,
        _ => false,
    };
    let task = match s.command {
        Command::Soliton => {
            let quarks = s.usize("model.N")?;
            let levels = levels(s, quarks)?;
            let grid = grid(s)?;
            let potential = potential(s)?;
            let controls = controls(s)?;
            let m = s.f64("model.m")?;
            let cfgs = s
                .f64_list("model.g")?
                .into_iter()
                .map(|g| {
                    let model = ModelParams {
                        g,
                        m,
                        levels: levels.clone(),
                    };
                    s.check("model.g", model.validate())?;
                    Ok(SolitonConfig {
                        model,
                        potential,
                        grid,
                        controls,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Task::Soliton(cfgs)
        }
        Command::Bag => {
            let base = BagConfig {
                quarks: s.usize("model.N")?,
                g: 0.0,
                m: s.f64("model.m")?,
                a: s.f64("bag.a")?,
                b: s.f64("potential.b")?,
                level: single_level(s)?,
                r_min: s.f64("bag.r_min")?,
                r_max: s.f64("bag.r_max")?,
            };
            let cfgs = s
                .f64_list("model.g")?
                .into_iter()
                .map(|g| {
                    let cfg = BagConfig { g, ..base.clone() };
                    s.check("model.g", cfg.validate())?;
                    Ok(cfg)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Task::Bag(cfgs)
        }
        Command::Mit => {
            let m = s.f64("model.m")?;
            if m < 0.0 {
                return Err(s.bad("model.m", "mass must be nonnegative"));
            }
            let radii = s.f64_list("mit.R")?;
            if radii.iter().any(|&r| r <= 0.0) {
                return Err(s.bad("mit.R", "radii must be positive"));
            }
            Task::Mit {
                radii,
                m,
                level: single_level(s)?,
            }
        }
        Command::MitLimit => {
            let bag = BagConfig {
                quarks: s.usize("model.N")?,
                g: 0.0,
                m: s.f64("model.m")?,
                a: s.f64("bag.a")?,
                b: s.f64("potential.b")?,
                level: single_level(s)?,
                r_min: s.f64("bag.r_min")?,
                r_max: s.f64("bag.r_max")?,
            };
            s.check("model.m", bag.validate_geometry())?;
            let n_max = s.usize("mit.n_max")?;
            if !(1..=60).contains(&n_max) {
                return Err(s.bad("mit.n_max", "expected 1..=60"));
            }
            let masses = (1..=n_max as i32).map(|n| 2f64.powi(n) * bag.m).collect();
            Task::MitLimit { bag, masses }
        }
        Command::GammaSweep => {
            let quarks = s.usize("model.N")?;
            let model = ModelParams::ground(quarks, s.f64("model.g")?, s.f64("model.m")?);
            let initial_radius = match s.str("sweep.r0") {
                "auto" => None,
                _ => Some(s.f64("sweep.r0")?),
            };
            let cfg = GammaConfig {
                schedule: s.f64_list("sweep.eps")?,
                potential: potential(s)?,
                model,
                grid: grid(s)?,
                controls: controls(s)?,
                initial_radius,
                r_min: s.f64("bag.r_min")?,
                r_max: s.f64("bag.r_max")?,
            };
            let key = match cfg.validate() {
                Err(bagforge::Error::UnderResolved { .. }) => "grid.n",
                Err(bagforge::Error::InvalidParameter { name: "eps", .. }) => "sweep.eps",
                _ => "model.g",
            };
            s.check(key, cfg.validate())?;
            s.check("bag.r_min", cfg.reference_config().validate_geometry())?;
            Task::GammaSweep(Box::new(cfg))
        }
        Command::Verify => {
            let samples = s.usize("verify.samples")?;
            if samples == 0 {
                return Err(s.bad("verify.samples", "need at least one sample"));
            }
            Task::Verify { samples }
        }
    };
    Ok(RunConfig {
        out_dir: PathBuf::from(s.str("output.dir")),
        task,
        format,
        profiles,
        seed,
        jobs,
        settings,
    })
}
