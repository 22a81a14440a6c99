use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use mdi_spdc::presets::{self, Figure};
use mdi_spdc::protocol::ProtocolConfig;
use mdi_spdc::sweep::sweep;
use mdi_spdc::verify::{run_all, VerifyOptions};

mod config;
mod output;

use config::RunConfig;
use output::{Manifest, Unavailable};

#[derive(Debug, Parser)]
#[command(
    name = "mdi-spdc",
    version,
    about = "Key rates of phase-encoded MDI-QKD with heralded SPDC sources"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, env = "MDI_SPDC_CONFIG", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in figure parameter set.
    #[arg(long, env = "MDI_SPDC_PRESET", value_parser = parse_figure)]
    preset: Option<Figure>,

    /// Output directory (default: the config's `out_dir`, else `out`).
    #[arg(long, env = "MDI_SPDC_OUT")]
    out: Option<PathBuf>,

    /// Run the invariant suites only and write a verification report.
    #[arg(long, env = "MDI_SPDC_VERIFY")]
    verify: bool,

    /// Photon-number truncation for chain checks and series oracles.
    #[arg(long, env = "MDI_SPDC_N_MAX")]
    n_max: Option<usize>,

    /// Worker threads (default: all cores).
    #[arg(long, env = "MDI_SPDC_THREADS")]
    threads: Option<usize>,

    /// Print the configuration schema and exit.
    #[arg(long)]
    schema: bool,
}

fn parse_figure(s: &str) -> Result<Figure, String> {
    Figure::parse(s)
        .ok_or_else(|| format!("unknown preset {s:?}; expected fig2, fig3, fig4 or fig5"))
}

enum Failure {
    /// Exit 1.
    Config(anyhow::Error),
    /// Exit 2.
    Compute(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Compute(_) => 2,
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match (&cli.config, cli.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(fig)) => RunConfig::from_preset(fig),
        (None, None) => anyhow::bail!("one of --config or --preset is required"),
    };
    if let Some(n) = cli.n_max {
        cfg.options.n_max = n;
    }
    let cfg = cfg.resolve()?;
    cfg.validate()?;
    Ok(cfg)
}

/// Configurations whose sources the invariant suites exercise.
fn suite_configs(cfg: &RunConfig) -> Vec<ProtocolConfig> {
    let mut out: Vec<ProtocolConfig> = cfg.curves.iter().map(|c| c.spec.config).collect();
    out.dedup();
    if out.is_empty() {
        out = vec![
            presets::active3(),
            presets::modified_passive(),
            presets::passive2(),
        ];
    }
    out
}

fn verify_options(cfg: &RunConfig) -> VerifyOptions {
    VerifyOptions {
        n_max: cfg.options.n_max,
        ..VerifyOptions::default()
    }
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run_verify(cli: &Cli, cfg: &RunConfig) -> Result<(), Failure> {
    let report = run_all(
        &suite_configs(cfg),
        &cfg.system,
        &cfg.options,
        &verify_options(cfg),
    )
    .map_err(|e| Failure::Compute(anyhow::Error::new(e).context("verify/run_all")))?;
    let dir = out_dir(cli, cfg);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::Compute)?;
    output::write_json(&dir.join("verify.json"), &report).map_err(Failure::Compute)?;
    for f in &report.families {
        println!(
            "{:<5} {:<22} cases={:<5} worst={:.3e} tol={:.0e}",
            if f.passed { "pass" } else { "FAIL" },
            f.name,
            f.cases,
            f.worst_residual,
            f.tolerance
        );
    }
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .families
            .iter()
            .filter(|f| !f.passed)
            .map(|f| f.name.as_str())
            .collect();
        Err(Failure::Compute(anyhow::anyhow!(
            "invariant families failed: {}",
            failed.join(", ")
        )))
    }
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<(), Failure> {
    let dir = out_dir(cli, cfg);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::Compute)?;

    let mut curves = Vec::new();
    let mut row_errors = Vec::new();
    for c in &cfg.curves {
        let points = sweep(&c.spec, &cfg.system, &cfg.options).map_err(|e| {
            Failure::Compute(
                anyhow::Error::new(e).context(format!("sweep-optimizer/sweep: curve {}", c.name)),
            )
        })?;
        let file = format!("{}.csv", c.name);
        output::write_curve(&dir.join(&file), &points).map_err(Failure::Compute)?;
        let entry = output::curve_entry(&c.name, file, &c.spec, &points);
        for f in &entry.failures {
            row_errors.push(format!("{} at {} km: {}", c.name, f.distance_km, f.error));
        }
        eprintln!(
            "{}: {}/{} feasible rows",
            c.name, entry.feasible_rows, entry.rows
        );
        curves.push(entry);
    }

    let distribution = match cfg.distribution {
        Some(d) => {
            let file = "distribution.csv".to_string();
            output::write_distribution(&dir.join(&file), &presets::distribution_rows(d.n_top))
                .map_err(Failure::Compute)?;
            Some(output::DistributionEntry {
                file,
                n_top: d.n_top,
                source: presets::comparison_source(),
                wcs_mean: presets::WCS_MEAN,
            })
        }
        None => None,
    };

    let report = run_all(
        &suite_configs(cfg),
        &cfg.system,
        &cfg.options,
        &verify_options(cfg),
    )
    .map_err(|e| Failure::Compute(anyhow::Error::new(e).context("verify/run_all")))?;
    if !report.passed() {
        eprintln!("warning: some invariant checks failed; see oracle_checks in manifest.json");
    }

    let unavailable = if cfg.preset == Some(Figure::Fig2) {
        let reason = "weak coherent source curves need formulas outside this model";
        vec![
            Unavailable {
                curve: "wcs_infinite",
                reason,
            },
            Unavailable {
                curve: "wcs_active3",
                reason,
            },
        ]
    } else {
        Vec::new()
    };

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        preset: cfg.preset,
        system: cfg.system,
        options: cfg.options,
        curves,
        distribution,
        unavailable,
        oracle_checks: output::summarize(&report),
    };
    output::write_json(&dir.join("manifest.json"), &manifest).map_err(Failure::Compute)?;

    if row_errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Compute(anyhow::anyhow!(
            "sweep-optimizer/search_at_distance failed:\n  {}",
            row_errors.join("\n  ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if cli.schema {
        print!("{}", config::SCHEMA);
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = load(&cli).map_err(Failure::Config).and_then(|cfg| {
        if cli.verify {
            run_verify(&cli, &cfg)
        } else {
            run(&cli, &cfg)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Config(e) | Failure::Compute(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}
