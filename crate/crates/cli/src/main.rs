use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Parser, Subcommand};
use rsmask_core::campaign::{
    run_differential, run_distribution, run_sifa, run_tvla, verify_artifacts, Artifact, CampaignConfig, ConfigError,
};
use rsmask_core::datapath::{catalog_json, Model};
use rsmask_core::verify;

static STOP: AtomicBool = AtomicBool::new(false);

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "rsmask", version, about = "RS-Mask fault and leakage lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Campaign configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample count, overrides the config.
    #[arg(long, global = true)]
    traces: Option<u64>,
    /// Model, overrides the config.
    #[arg(long, global = true)]
    model: Option<Model>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for artifacts.
    #[arg(long, global = true, default_value = "rsmask-out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Run the built-in oracle suites.
    Verify,
    /// Statistical ineffective fault attack with SEI key ranking.
    Sifa,
    /// Welch t-test on simulated Hamming-weight leakage.
    Tvla,
    /// Faulty and ineffective-correct S-box output histograms.
    Distribution,
    /// Differential key ranking on plain and infective RS-Mask.
    Infective,
    /// Dump the fault-node catalog as JSON.
    Nodes,
}

enum Failure {
    Config(String),
    Check(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<CampaignConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            CampaignConfig::from_json(&text)?
        }
        None => CampaignConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.traces {
        cfg.traces = t;
    }
    if let Some(m) = cli.model {
        cfg.model = m;
    }
    Ok(cfg)
}

fn write_artifacts(dir: &Path, arts: &[Artifact]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    for a in arts {
        let p = dir.join(&a.name);
        fs::write(&p, &a.body).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn note_truncated(t: bool) {
    if t {
        eprintln!("interrupted: partial results written and marked truncated");
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let stop = Some(&STOP);
    match cli.command {
        Command::Nodes => {
            let models = cli.model.map_or(Model::ALL.to_vec(), |m| vec![m]);
            println!("{}", catalog_json(&models));
        }
        Command::Verify => {
            let cfg = load_config(cli)?;
            let suites = verify::run_all(cfg.seed, 100);
            for s in &suites {
                let v = if s.passed() { "PASS" } else { "FAIL" };
                println!("{v} {} ({} checks, {} failures)", s.name, s.checks, s.failures);
                for d in &s.details {
                    println!("    {d}");
                }
            }
            write_artifacts(&cli.out, &verify_artifacts(&cfg, &suites))?;
            if let Some(s) = suites.iter().find(|s| !s.passed()) {
                return Err(Failure::Check(format!("suite {} failed", s.name)));
            }
        }
        Command::Sifa => {
            let cfg = load_config(cli)?;
            let r = run_sifa(&cfg, stop)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}: {} ineffective / {} encryptions, key byte {} at position {}: rank {}, sustained rank 1 from {}",
                r.model,
                r.ineffective,
                r.encryptions,
                r.key_byte,
                r.key_position,
                r.rank.map_or("-".into(), |v| v.to_string()),
                r.sustained_rank1_from.map_or("never".into(), |v| v.to_string()),
            );
            note_truncated(r.truncated);
            write_artifacts(&cli.out, &r.artifacts(&cfg))?;
        }
        Command::Distribution => {
            let cfg = load_config(cli)?;
            let r = run_distribution(&cfg, stop)?;
            let p = |v: Option<f64>| v.map_or("-".into(), |p| format!("{p:.3e}"));
            println!(
                "{}: effective faulty n={} p={}, ineffective correct n={} p={}",
                r.model,
                r.faulty_n,
                p(r.faulty_p),
                r.correct_n,
                p(r.correct_p)
            );
            note_truncated(r.truncated);
            write_artifacts(&cli.out, &r.artifacts(&cfg))?;
        }
        Command::Infective => {
            let cfg = load_config(cli)?;
            let r = run_differential(&cfg, stop)?;
            for run in &r.runs {
                println!(
                    "{}: {} pairs, key byte {} rank {} ({})",
                    run.model,
                    run.pairs,
                    run.key_byte,
                    run.rank.map_or("-".into(), |v| v.to_string()),
                    if run.recovered { "recovered" } else { "not recovered" }
                );
            }
            note_truncated(r.truncated);
            write_artifacts(&cli.out, &r.artifacts(&cfg))?;
        }
        Command::Tvla => {
            let cfg = load_config(cli)?;
            let r = run_tvla(&cfg, stop)?;
            println!(
                "{}: max|t| = {:.3} over {} traces ({} / {}), {}",
                r.model,
                r.max_abs_t,
                r.traces,
                r.n_a,
                r.n_b,
                if r.leakage_detected { "leakage detected" } else { "no leakage detected" }
            );
            if !r.degenerate_samples.is_empty() {
                eprintln!("warning: zero variance in both sets at samples {:?}", r.degenerate_samples);
            }
            note_truncated(r.truncated);
            write_artifacts(&cli.out, &r.artifacts(&cfg))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        #[cfg(feature = "parallel")]
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        #[cfg(not(feature = "parallel"))]
        let _ = n;
    }
    let _ = ctrlc::set_handler(|| STOP.store(true, Ordering::Relaxed));
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(EXIT_CHECK)
        }
    }
}
