use std::path::Path;
use std::process::{Command, Output};

use bagforge::report::{
    read_soliton_table, read_table, BagRow, GammaCsvRow, MitLimitCsvRow, ProfileRow, SolitonRow,
};
use bagforge_cli::config::{parse_config_text, Source, Task};
use bagforge_cli::run::MitRow;
use bagforge_cli::verify::CheckRow;
use bagforge_cli::{parse, Parsed};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bagforge"))
        .args(args)
        .env_remove("BAGFORGE_JOBS")
        .output()
        .expect("spawn bagforge")
}

fn parsed(args: &[&str]) -> Result<bagforge_cli::config::RunConfig, bagforge_cli::CliError> {
    let full: Vec<&str> = std::iter::once("bagforge")
        .chain(args.iter().copied())
        .collect();
    match parse(full, None)? {
        Parsed::Run(cfg) => Ok(*cfg),
        Parsed::Info(_) => panic!("unexpected info output"),
    }
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn bag_example_is_valid() {
    let cfg = parsed(&[
        "bag", "--m", "1", "--g", "0.8", "--a", "1e-3", "--b", "1e-3", "--N", "1",
    ])
    .unwrap();
    let Task::Bag(cfgs) = cfg.task else { panic!() };
    assert_eq!(cfgs.len(), 1);
    assert_eq!(
        (cfgs[0].g, cfgs[0].m, cfgs[0].a, cfgs[0].b),
        (0.8, 1.0, 1e-3, 1e-3)
    );
}

#[test]
fn coupling_above_mass_is_rejected() {
    let err = parsed(&["bag", "--g", "1.2", "--m", "1"]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("g < m"), "{err}");
    let out = bin(&["bag", "--g", "1.2", "--m", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn under_resolved_sweep_is_rejected() {
    let err = parsed(&["gamma-sweep", "--eps", "0.4,0.2,0.1", "--n", "500"]).unwrap_err();
    assert!(err.to_string().contains("eps/10"), "{err}");
    assert!(err.to_string().contains("grid.n"), "{err}");
}

#[test]
fn config_file_sections_flags_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(
        &path,
        "# bag study\n[model]\ng = 0.5\nm = 2\n\nbag.a = 0.02\nsweep.eps = 0.3\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let cfg = parsed(&["bag", "--config", p, "--g", "0.7"]).unwrap();
    let Task::Bag(cfgs) = &cfg.task else { panic!() };
    assert_eq!((cfgs[0].g, cfgs[0].m, cfgs[0].a), (0.7, 2.0, 0.02));
    assert_eq!(cfg.settings.values["model.g"].source, Source::Flag);
    assert_eq!(
        cfg.settings.values["model.m"].source,
        Source::File { line: 4 }
    );
    assert_eq!(cfg.settings.ignored, vec!["sweep.eps".to_string()]);

    std::fs::write(&path, "model.g = 0.5\nmodel.gg = 1\n").unwrap();
    let err = parsed(&["bag", "--config", p]).unwrap_err();
    assert!(
        err.to_string().contains("line 2") && err.to_string().contains("model.gg"),
        "{err}"
    );

    std::fs::write(&path, "[model]\nm = x\n").unwrap();
    let err = parsed(&["bag", "--config", p]).unwrap_err();
    assert!(err.to_string().contains("config line 2"), "{err}");

    assert!(parse_config_text("a.b.c\n").is_err());
    assert!(parse_config_text("model.g = 1\nmodel.g = 2\n").is_err());
}

#[test]
fn jobs_default_from_environment() {
    let cfg = match parse(["bagforge", "bag"], Some("3".into())).unwrap() {
        Parsed::Run(c) => c,
        Parsed::Info(_) => panic!(),
    };
    assert_eq!(cfg.jobs, 3);
    assert_eq!(cfg.settings.values["run.jobs"].source, Source::Env);
    let cfg = match parse(["bagforge", "bag", "--jobs", "2"], Some("3".into())).unwrap() {
        Parsed::Run(c) => c,
        Parsed::Info(_) => panic!(),
    };
    assert_eq!(cfg.jobs, 2);
    assert!(parse(["bagforge", "bag"], Some("zero".into())).is_err());
}

#[test]
fn help_and_unknown_flags() {
    let help = bin(&["soliton", "--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    assert!(text.contains("potential.kappa") && text.contains("BAGFORGE_JOBS"));
    assert_eq!(bin(&["bag", "--bogus", "1"]).status.code(), Some(1));
    assert_eq!(bin(&[]).status.code(), Some(1));
}

#[test]
fn mit_massless_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "mit",
        "--m",
        "0",
        "--R",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("lambda = 2.0427"), "{stdout}");
    let rows: Vec<MitRow> = read_table(&read(&dir.path().join("mit.csv"))).unwrap();
    assert!((rows[0].lambda - 2.0428).abs() < 1e-3);
}

#[test]
fn bag_tables_are_deterministic_across_job_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, jobs: &str| {
        let out = bin(&[
            "bag",
            "--g",
            "0.7,0.75,0.8",
            "--jobs",
            jobs,
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(a.path(), "1");
    run(b.path(), "3");
    let first = read(&a.path().join("bag.csv"));
    assert_eq!(first, read(&b.path().join("bag.csv")));
    let rows: Vec<BagRow> = read_table(&first).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.g).collect::<Vec<_>>(),
        vec![0.7, 0.75, 0.8]
    );
}

#[test]
fn soliton_outputs_round_trip_and_repeat() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = bin(&[
            "soliton",
            "--n",
            "400",
            "--g",
            "10,12",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["soliton.csv", "profiles.csv"] {
        assert_eq!(
            read(&dirs[0].path().join(name)),
            read(&dirs[1].path().join(name)),
            "{name}"
        );
    }
    let rows = read_soliton_table(&read(&dirs[0].path().join("soliton.csv"))).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.converged && r.energy < 1.0));
    let profiles: Vec<ProfileRow> =
        read_table(&read(&dirs[0].path().join("profiles.csv"))).unwrap();
    assert!(profiles.iter().any(|p| p.series == "density_1:g=12"));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dirs[0].path().join("run.json"))).unwrap();
    assert_eq!(manifest["command"], "soliton");
    assert_eq!(manifest["grid"]["n"], 400);
    assert_eq!(manifest["exit_code"], 0);
}

#[test]
fn json_output_mirrors_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = bin(&[
        "soliton",
        "--n",
        "400",
        "--format",
        "json",
        "--profiles",
        "false",
        "--out",
        d,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<SolitonRow> =
        serde_json::from_str(&read(&dir.path().join("soliton.json"))).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(!dir.path().join("profiles.json").exists());

    let out = bin(&["mit-limit", "--n-max", "4", "--format", "json", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<MitLimitCsvRow> =
        serde_json::from_str(&read(&dir.path().join("mit_limit.json"))).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].boundary_ratio.is_none() || rows[0].bound);
}

#[test]
fn non_convergence_exits_two_with_flagged_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "soliton",
        "--n",
        "400",
        "--max-iter",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let rows = read_soliton_table(&read(&dir.path().join("soliton.csv"))).unwrap();
    assert!(!rows[0].converged);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("run.json"))).unwrap();
    assert_eq!(manifest["exit_code"], 2);
}

#[test]
fn gamma_sweep_small_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "gamma-sweep",
        "--eps",
        "0.4,0.2",
        "--n",
        "600",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows: Vec<GammaCsvRow> = read_table(&read(&dir.path().join("gamma.csv"))).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].gap < rows[0].gap);
    assert!(rows.iter().all(|r| r.min_liminf_margin >= -1e-10));
}

#[test]
fn verify_battery_passes_and_repeats() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = bin(&[
            "verify",
            "--seed",
            "7",
            "--samples",
            "2",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
    let text = read(&a.path().join("verify.csv"));
    assert_eq!(text, read(&b.path().join("verify.csv")));
    let rows: Vec<CheckRow> = read_table(&text).unwrap();
    assert!(rows.iter().all(|r| r.pass));
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("sub");
    let out = bin(&["mit", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
