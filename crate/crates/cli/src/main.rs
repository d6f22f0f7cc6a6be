use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plateau_experiments::acceptance::{run_criterion, AcceptanceConfig};
use plateau_experiments::{run, ConfigError, ExperimentConfig, Kind, RunError};

#[derive(Parser)]
#[command(name = "plateau", version, about = "Spherical Plateau experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML); for `acceptance`, the config directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for CSV tables and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long = "quadrature-order")]
    quadrature_order: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    SurfacePoisson(Common),
    Minimize(Common),
    BarycenterVerify(Common),
    Kazhdan(Common),
    AmenableCollapse(Common),
    ThicknessScan(Common),
    MargulisCheck(Common),
    /// Runs the acceptance criteria; exits 1 if any fails.
    Acceptance {
        #[command(flatten)]
        common: Common,
        /// Run only these criteria (1..=9).
        #[arg(long)]
        criterion: Vec<usize>,
    },
}

fn experiment(kind: Kind, c: &Common) -> Result<bool, RunError> {
    let path = c.config.as_ref().ok_or_else(|| ConfigError::Invalid {
        field: "--config".into(),
        msg: "required".into(),
    })?;
    let mut cfg = ExperimentConfig::load(path)?;
    if cfg.kind != kind {
        return Err(ConfigError::Invalid {
            field: "kind".into(),
            msg: format!("config is for {}, not {}", cfg.kind.name(), kind.name()),
        }
        .into());
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.threads {
        cfg.threads = Some(t);
    }
    if let Some(q) = c.quadrature_order {
        cfg.quadrature_order = q;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    let out = run(&cfg)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results").join(kind.name()));
    out.write(&dir)?;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&out.summary()).expect("summary serializes"));
    let _ = writeln!(stdout, "wrote {}", dir.display());
    Ok(true)
}

fn acceptance(c: &Common, only: &[usize]) -> Result<bool, RunError> {
    let dir = c.config.clone().unwrap_or_else(|| PathBuf::from("configs/acceptance"));
    let mut cfg = AcceptanceConfig::load_dir(&dir)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(q) = c.quadrature_order {
        cfg.quadrature_order = q;
    }
    let ids: Vec<usize> = if only.is_empty() { (1..=9).collect() } else { only.to_vec() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.threads.unwrap_or(0))
        .build()
        .map_err(|e| ConfigError::Invalid {
            field: "--threads".into(),
            msg: e.to_string(),
        })?;
    let mut all = true;
    let mut lines = Vec::new();
    for id in ids {
        let r = pool.install(|| run_criterion(id, &cfg))?;
        println!("{r}");
        all &= r.passed;
        lines.push(r.to_string());
    }
    if let Some(o) = &c.out {
        std::fs::create_dir_all(o)?;
        std::fs::write(o.join("acceptance.txt"), lines.join("\n") + "\n")?;
    }
    println!("{}", if all { "acceptance: all criteria pass" } else { "acceptance: FAILED" });
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SurfacePoisson(c) => experiment(Kind::SurfacePoisson, c),
        Command::Minimize(c) => experiment(Kind::Minimize, c),
        Command::BarycenterVerify(c) => experiment(Kind::BarycenterVerify, c),
        Command::Kazhdan(c) => experiment(Kind::Kazhdan, c),
        Command::AmenableCollapse(c) => experiment(Kind::AmenableCollapse, c),
        Command::ThicknessScan(c) => experiment(Kind::ThicknessScan, c),
        Command::MargulisCheck(c) => experiment(Kind::MargulisCheck, c),
        Command::Acceptance { common, criterion } => acceptance(common, criterion),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
