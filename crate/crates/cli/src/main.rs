//! `hsfluct` command-line driver.
//!
//! Exit status: 0 on success, 2 when a run completes but one of its checks
//! fails, 1 on any error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Arg, ArgAction, ArgMatches, Command};
use hsfluct::dynamics::run_flow;
use hsfluct::ensemble::{sample_replica, EnsembleParams};
use hsfluct::harness::{
    convergence_experiment, diagnostics_scan, emit_report, load_report, ExperimentConfig,
    ReportFormat, KEYS,
};
use hsfluct::linearized::{
    duhamel_series_oracle, semigroup_mc, SemigroupParams, SpectralBasis, DEFAULT_DEGREE,
    DEFAULT_SERIES_TOLERANCE,
};
use hsfluct::pseudo::{
    development_identity_gap, duality_check, sample_small_system, semigroup_property_gap,
};
use hsfluct::rng::stream;
use hsfluct::Particle;

/// Outcome of a command that ran to completion.
enum Verdict {
    Ok,
    ChecksFailed,
}

fn common_args(cmd: Command, seeded: bool) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("key = value configuration file"),
    );
    KEYS.iter().fold(cmd, |cmd, &key| {
        let help = if key == "seed" && seeded {
            "root seed (required here or in the config file)"
        } else {
            "overrides the config file"
        };
        cmd.arg(Arg::new(key).long(key).value_name("VALUE").help(help))
    })
}

fn cli() -> Command {
    Command::new("hsfluct")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Equilibrium fluctuations of hard spheres in the Boltzmann-Grad limit")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            common_args(Command::new("simulate"), true)
                .about("Run the hard-sphere flow on one replica and write its event log")
                .arg(
                    Arg::new("replica")
                        .long("replica")
                        .value_name("INDEX")
                        .default_value("0")
                        .value_parser(clap::value_parser!(u64)),
                ),
        )
        .subcommand(
            common_args(Command::new("covariance"), true)
                .about("Covariance convergence experiment over the ε and t grids"),
        )
        .subcommand(
            common_args(Command::new("semigroup"), true)
                .about("Monte Carlo estimate of <h, exp(tL) g> at every t")
                .arg(
                    Arg::new("oracle")
                        .long("oracle")
                        .action(ArgAction::SetTrue)
                        .help("compare with the spectral series (velocity-only h, g)"),
                ),
        )
        .subcommand(
            common_args(Command::new("pseudotest"), true)
                .about("Development and semigroup identities plus the duality check")
                .arg(
                    Arg::new("systems")
                        .long("systems")
                        .value_name("COUNT")
                        .default_value("20")
                        .value_parser(clap::value_parser!(usize)),
                ),
        )
        .subcommand(
            common_args(Command::new("diagnostics"), true)
                .about("Υ failure and recollision rates along the ε grid"),
        )
        .subcommand(
            common_args(Command::new("report"), false)
                .about("Rewrite report files from a saved manifest")
                .arg(
                    Arg::new("manifest")
                        .long("manifest")
                        .value_name("FILE")
                        .required(true),
                ),
        )
}

fn config_has_seed(text: &str) -> bool {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .filter_map(|l| l.split_once('='))
        .any(|(k, _)| k.trim() == "seed")
}

fn load_config(m: &ArgMatches, seeded: bool) -> Result<ExperimentConfig> {
    let (mut cfg, mut has_seed) = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            (ExperimentConfig::from_text(&text)?, config_has_seed(&text))
        }
        None => (ExperimentConfig::default(), false),
    };
    for &key in KEYS.iter() {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v).with_context(|| format!("--{key}"))?;
            has_seed |= key == "seed";
        }
    }
    if seeded && !has_seed {
        bail!("--seed is required (or set seed in the config file)");
    }
    Ok(cfg)
}

fn max_time(cfg: &ExperimentConfig) -> f64 {
    cfg.times.iter().copied().fold(0.0, f64::max)
}

fn simulate(m: &ArgMatches) -> Result<Verdict> {
    let cfg = load_config(m, true)?;
    let eps = cfg.epsilons[0];
    let t = max_time(&cfg);
    let replica = *m.get_one::<u64>("replica").unwrap();
    let mut params = EnsembleParams::boltzmann_grad(cfg.dim, eps, cfg.seed, replica as usize + 1)?;
    params.sampler = cfg.sampler;
    let start = sample_replica(&params, replica)?;
    let (end, log) = run_flow(&start, t)?;
    std::fs::create_dir_all(&cfg.output)?;
    let path = cfg.output.join("events.csv");
    std::fs::write(&path, log.to_csv(cfg.dim))?;
    println!(
        "eps={eps} N={} t={t}: {} collisions, energy drift {:.1e}; wrote {}",
        start.len(),
        log.len(),
        (end.kinetic_energy() - start.kinetic_energy()).abs(),
        path.display()
    );
    Ok(Verdict::Ok)
}

fn formats() -> [ReportFormat; 2] {
    [ReportFormat::Csv, ReportFormat::Json]
}

fn covariance(m: &ArgMatches) -> Result<Verdict> {
    let cfg = load_config(m, true)?;
    let report = convergence_experiment(&cfg)?;
    for r in &report.rows {
        println!(
            "eps={} t={}: cov {:.4} ± {:.4}  semigroup {:.4} ± {:.4}  gap {:.4}",
            r.epsilon, r.t, r.cov, r.cov_stderr, r.semigroup, r.sg_stderr, r.discrepancy
        );
    }
    for f in &report.failures {
        println!("failed: {f:?}");
    }
    for c in &report.monotone {
        println!("non-increasing {} (t={:?}): {}", c.quantity, c.t, c.holds);
    }
    for p in emit_report(&report, &cfg.output, &formats(), cfg.plots)? {
        println!("wrote {}", p.display());
    }
    if !report.failures.is_empty() {
        bail!(
            "{} grid point(s) exceeded the abort budget",
            report.failures.len()
        );
    }
    Ok(if report.monotone_ok() {
        Verdict::Ok
    } else {
        Verdict::ChecksFailed
    })
}

fn semigroup(m: &ArgMatches) -> Result<Verdict> {
    let cfg = load_config(m, true)?;
    let basis = if m.get_flag("oracle") {
        Some(SpectralBasis::new(cfg.dim, DEFAULT_DEGREE)?)
    } else {
        None
    };
    let mut verdict = Verdict::Ok;
    for (k, &t) in cfg.times.iter().enumerate() {
        let mut p = SemigroupParams::new(cfg.dim, t, cfg.semigroup_samples, cfg.seed + k as u64);
        p.n_max = cfg.n_max;
        p.mode = cfg.branch_mode;
        let est = semigroup_mc(&cfg.h, &cfg.g, &p)?;
        print!("t={t}: {:.5} ± {:.5}", est.value, est.stderr);
        if let Some(basis) = &basis {
            let o =
                duhamel_series_oracle(&cfg.h, &cfg.g, t, None, DEFAULT_SERIES_TOLERANCE, basis)?;
            let se = est.stderr.hypot(o.tail_bound + o.roundoff_bound);
            let ok = (est.value - o.value).abs() <= 3.0 * se;
            print!(
                "  oracle {:.5}  {}",
                o.value,
                if ok { "ok" } else { "MISMATCH" }
            );
            if !ok {
                verdict = Verdict::ChecksFailed;
            }
        }
        println!();
    }
    Ok(verdict)
}

fn pseudotest(m: &ArgMatches) -> Result<Verdict> {
    let cfg = load_config(m, true)?;
    let systems = *m.get_one::<usize>("systems").unwrap();
    let (dim, eps, t) = (cfg.dim, cfg.epsilons[0], max_time(&cfg));
    let h = |s: &[Particle]| cfg.h.eval(dim, &s[0]);
    let mut rng = stream(cfg.seed, 0);
    let (mut dev, mut semi): (f64, f64) = (0.0, 0.0);
    for _ in 0..systems {
        let z = sample_small_system(dim, eps, 3, t, 3, &mut rng)?;
        dev = dev.max(development_identity_gap(dim, eps, &z, t, h, 3)?);
        semi = semi.max(semigroup_property_gap(dim, eps, &z, t, h, 2)?);
    }
    let mut ok = dev <= 1e-9 && semi <= 1e-9;
    println!("development identity: largest gap {dev:.2e} over {systems} systems");
    println!("semigroup property:   largest gap {semi:.2e} over {systems} systems");
    let hf = |q: &Particle| cfg.h.eval(dim, q);
    let gf = |q: &Particle| cfg.g.eval(dim, q);
    for (k, deflect) in [1i8, -1].into_iter().enumerate() {
        let d = duality_check(
            dim,
            eps,
            t,
            deflect,
            hf,
            gf,
            cfg.semigroup_samples,
            cfg.seed + 1 + k as u64,
        )?;
        let z = d.z_score();
        ok &= z.abs() <= 4.0;
        println!(
            "duality (deflect {deflect:+}): forward {:.5} ± {:.5}, backward {:.5} ± {:.5}, z = {z:.2}",
            d.forward.value, d.forward.stderr, d.backward.value, d.backward.stderr
        );
    }
    Ok(if ok {
        Verdict::Ok
    } else {
        Verdict::ChecksFailed
    })
}

fn diagnostics(m: &ArgMatches) -> Result<Verdict> {
    let cfg = load_config(m, true)?;
    let report = diagnostics_scan(&cfg)?;
    for r in &report.rows {
        println!(
            "eps={}: Υ failure {:.4} ± {:.4}, recollision rate {:.4} ± {:.4}, {:.1} collisions/replica, {} failed",
            r.epsilon,
            r.upsilon_fail_rate,
            r.upsilon_stderr,
            r.recollision_rate,
            r.recollision_stderr,
            r.mean_collisions,
            r.failed
        );
    }
    for c in &report.monotone {
        println!("non-increasing {}: {}", c.quantity, c.holds);
    }
    std::fs::create_dir_all(&cfg.output)?;
    let path = cfg.output.join("diagnostics.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    println!("wrote {}", path.display());
    Ok(if report.monotone.iter().all(|c| c.holds) {
        Verdict::Ok
    } else {
        Verdict::ChecksFailed
    })
}

fn report(m: &ArgMatches) -> Result<Verdict> {
    let manifest = PathBuf::from(m.get_one::<String>("manifest").unwrap());
    let report =
        load_report(&manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let dir: &Path = match m.get_one::<String>("output") {
        Some(o) => Path::new(o),
        None => &report.config.output,
    };
    let mut cfg = report.config.clone();
    if let Some(p) = m.get_one::<String>("plots") {
        cfg.set("plots", p).context("--plots")?;
    }
    for p in emit_report(&report, dir, &formats(), cfg.plots)? {
        println!("wrote {}", p.display());
    }
    Ok(Verdict::Ok)
}

fn run() -> Result<Verdict> {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match matches.subcommand() {
        Some(("simulate", m)) => simulate(m),
        Some(("covariance", m)) => covariance(m),
        Some(("semigroup", m)) => semigroup(m),
        Some(("pseudotest", m)) => pseudotest(m),
        Some(("diagnostics", m)) => diagnostics(m),
        Some(("report", m)) => report(m),
        _ => unreachable!("subcommand is required"),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::ChecksFailed) => {
            eprintln!("checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
