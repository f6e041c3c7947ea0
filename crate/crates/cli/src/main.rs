//! Command-line driver: study subcommands over TOML configs plus direct
//! `cell`, `solve`, and `audit` invocations.

use clap::{Args, Parser, Subcommand};
use homlab_core::config::{ExperimentConfig, PresetConfig, StudyKind};
use homlab_core::mesh::DomainKind;
use homlab_core::runner::run_to_dir;
use homlab_core::study::{BcKind, DataSelection};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "homlab",
    about = "Periodic homogenization laboratory for 2D linear elasticity",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the emitted artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct PresetArgs {
    /// Preset name: constant_isotropic, oscillatory_isotropic, laminate,
    /// smoothed_checkerboard.
    #[arg(long, default_value = "oscillatory_isotropic")]
    preset: String,
    /// Numeric preset parameters, repeatable: --param mu0=2 --param mu_amp=1
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Subcommand)]
enum Command {
    /// Solve the cell problems and emit ahat.json, correctors.csv, diagnostics.json.
    Cell {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        preset: PresetArgs,
        /// Cell grid resolution (power of two >= 16).
        #[arg(long = "N", default_value_t = 128)]
        n: usize,
    },
    /// One boundary-value solve; emits u.csv and solve.json.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        preset: PresetArgs,
        /// Domain: unit_square, half_domain, interior_ball_proxy.
        #[arg(long, default_value = "unit_square")]
        domain: String,
        #[arg(long, default_value_t = 0.125)]
        eps: f64,
        /// Mesh spacing (defaults to eps/8).
        #[arg(long)]
        h: Option<f64>,
        /// Boundary condition: dirichlet or neumann.
        #[arg(long, default_value = "dirichlet")]
        bc: String,
        #[arg(long = "N", default_value_t = 128)]
        n: usize,
    },
    /// Convergence-rate sweep (three curves).
    Rates(CommonArgs),
    /// Boundary-layer uniformity table.
    Layers(CommonArgs),
    /// Flat-boundary local study on the half domain.
    Local(CommonArgs),
    /// Interior sub-square study with the reverse-Holder check.
    Interior(CommonArgs),
    /// Structure audits of the coefficient field and cell artifacts.
    Audit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long = "N", default_value_t = 128)]
        n: usize,
        /// Also dump the sampled field as CSV to this path.
        #[arg(long)]
        dump_csv: Option<PathBuf>,
    },
}

fn preset_config(p: &PresetArgs) -> PresetConfig {
    PresetConfig {
        name: p.preset.clone(),
        params: p.params.iter().cloned().collect::<BTreeMap<_, _>>(),
    }
}

fn load_or_default(
    common: &CommonArgs,
    study: StudyKind,
    fallback: impl FnOnce() -> ExperimentConfig,
) -> Result<ExperimentConfig, homlab_core::Error> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentConfig::from_toml(&text)?
        }
        None => fallback(),
    };
    cfg.study = study;
    if common.threads != 0 {
        cfg.threads = common.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn default_study_config(study: StudyKind) -> ExperimentConfig {
    ExperimentConfig {
        study,
        preset: PresetConfig {
            name: "oscillatory_isotropic".into(),
            params: BTreeMap::new(),
        },
        eps_list: vec![0.125, 0.0625, 0.03125, 0.015625],
        cell_n: 128,
        h: None,
        bc: BcKind::Dirichlet,
        data: DataSelection::default(),
        domain: DomainKind::UnitSquare,
        threads: 0,
        plot: true,
    }
}

fn parse_domain(s: &str) -> Result<DomainKind, String> {
    match s {
        "unit_square" => Ok(DomainKind::UnitSquare),
        "half_domain" => Ok(DomainKind::HalfDomain),
        "interior_ball_proxy" => Ok(DomainKind::InteriorBallProxy),
        other => Err(format!("unknown domain `{other}`")),
    }
}

fn parse_bc(s: &str) -> Result<BcKind, String> {
    match s {
        "dirichlet" => Ok(BcKind::Dirichlet),
        "neumann" => Ok(BcKind::Neumann),
        other => Err(format!("unknown boundary condition `{other}`")),
    }
}

fn execute() -> Result<bool, String> {
    let cli = Cli::parse();
    let (cfg, common) = match &cli.command {
        Command::Cell { common, preset, n } => {
            let mut cfg = load_or_default(common, StudyKind::Cell, || {
                default_study_config(StudyKind::Cell)
            })
            .map_err(|e| e.to_string())?;
            if common.config.is_none() {
                cfg.preset = preset_config(preset);
                cfg.cell_n = *n;
            }
            cfg.validate().map_err(|e| e.to_string())?;
            (cfg, common)
        }
        Command::Solve {
            common,
            preset,
            domain,
            eps,
            h,
            bc,
            n,
        } => {
            let mut cfg = load_or_default(common, StudyKind::Solve, || {
                default_study_config(StudyKind::Solve)
            })
            .map_err(|e| e.to_string())?;
            if common.config.is_none() {
                cfg.preset = preset_config(preset);
                cfg.cell_n = *n;
                cfg.domain = parse_domain(domain)?;
                cfg.bc = parse_bc(bc)?;
                cfg.eps_list = vec![*eps];
                cfg.h = *h;
            }
            cfg.validate().map_err(|e| e.to_string())?;
            (cfg, common)
        }
        Command::Rates(common) => (
            load_or_default(common, StudyKind::Rates, || {
                default_study_config(StudyKind::Rates)
            })
            .map_err(|e| e.to_string())?,
            common,
        ),
        Command::Layers(common) => (
            load_or_default(common, StudyKind::Layers, || {
                default_study_config(StudyKind::Layers)
            })
            .map_err(|e| e.to_string())?,
            common,
        ),
        Command::Local(common) => (
            load_or_default(common, StudyKind::Local, || {
                default_study_config(StudyKind::Local)
            })
            .map_err(|e| e.to_string())?,
            common,
        ),
        Command::Interior(common) => (
            load_or_default(common, StudyKind::Interior, || {
                default_study_config(StudyKind::Interior)
            })
            .map_err(|e| e.to_string())?,
            common,
        ),
        Command::Audit {
            common,
            preset,
            n,
            dump_csv,
        } => {
            let mut cfg = load_or_default(common, StudyKind::Audit, || {
                default_study_config(StudyKind::Audit)
            })
            .map_err(|e| e.to_string())?;
            if common.config.is_none() {
                cfg.preset = preset_config(preset);
                cfg.cell_n = *n;
            }
            cfg.validate().map_err(|e| e.to_string())?;
            if let Some(path) = dump_csv {
                let field = homlab_core::make_preset(
                    cfg.preset.build().map_err(|e| e.to_string())?,
                    cfg.cell_n,
                )
                .map_err(|e| e.to_string())?;
                let mut buf = Vec::new();
                field.to_csv(&mut buf).map_err(|e| e.to_string())?;
                std::fs::write(path, buf).map_err(|e| e.to_string())?;
            }
            (cfg, common)
        }
    };
    run_to_dir(&cfg, &common.out).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    match execute() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("homlab: run completed with failing verdicts");
            ExitCode::FAILURE
        }
        Err(msg) => {
            eprintln!("homlab: {msg}");
            ExitCode::from(2)
        }
    }
}
