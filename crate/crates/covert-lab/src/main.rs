//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 acceptance-check failure under `--assert`. The environment variable
//! `COVERT_LAB_THREADS` caps worker parallelism.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use covert_lab::error::Error;
use covert_lab::harness::{
    detect_on_trace, read_trace, render_plots, run_experiment, simulate_streams, write_trace,
    ExperimentConfig,
};
use covert_lab::renewal::{extract_ipds, PacketStream};
use covert_lab::stats::{
    covertness_lower_bound, fisher_constant_analytic, fisher_constant_quadrature,
    fisher_constant_c, kl_poisson_counts, kl_scaled_renewal,
};
use covert_lab::strategies::PoissonInsertionPlan;

#[derive(Parser)]
#[command(
    name = "covert-lab",
    version,
    about = "Covert packet insertion simulator and analysis toolkit"
)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Directory for CSV, SVG, and trace outputs.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Exit 3 when the experiment's acceptance checks fail.
    #[arg(long = "assert", global = true)]
    assert_checks: bool,

    /// Override the config's Monte Carlo trial count.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,

    /// Suppress progress and metadata output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate packet streams from the configured channel and write traces.
    Simulate,
    /// Run the configured detector on a trace file.
    Detect {
        /// Trace CSV to analyze.
        #[arg(long, value_name = "PATH")]
        trace: PathBuf,
    },
    /// Run the configured experiment sweep; writes result CSV (and SVG).
    Sweep,
    /// Print covertness quantities for the configured channel.
    Kl,
    /// Print Fisher constants (closed form and quadrature) per family.
    Fisher,
    /// Validate a trace file, print a summary, optionally rewrite it.
    Trace {
        /// Trace CSV to validate.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Rewrite the canonicalized trace here.
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("COVERT_LAB_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: COVERT_LAB_THREADS must be a positive integer, got `{threads}`");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config PATH is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(Error::Config("--trials must be positive".into()));
        }
        cfg.trials = trials;
    }
    Ok(cfg)
}

fn out_path(cli: &Cli, name: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(&cli.out).map_err(|source| Error::Io {
        path: cli.out.display().to_string(),
        source,
    })?;
    Ok(cli.out.join(name))
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(cli)?;
            let (jack, observed, two_phase) = simulate_streams(&cfg)?;
            let jack_path = out_path(cli, "jack.csv")?;
            write_trace(&jack, &jack_path)?;
            if !cli.quiet {
                println!("wrote {} ({} packets)", jack_path.display(), jack.len());
            }
            if let Some(observed) = observed {
                let path = out_path(cli, "observed.csv")?;
                write_trace(&observed, &path)?;
                if !cli.quiet {
                    println!("wrote {} ({} packets)", path.display(), observed.len());
                }
            }
            if let Some((alice, bob)) = two_phase {
                for (stream, name) in [(&alice, "alice.csv"), (&bob, "bob.csv")] {
                    let path = out_path(cli, name)?;
                    write_trace(stream, &path)?;
                    if !cli.quiet {
                        println!("wrote {} ({} packets)", path.display(), stream.len());
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Detect { trace } => {
            let cfg = load_config(cli)?;
            let stream = read_trace(trace)?;
            println!("{}", detect_on_trace(&cfg, &stream)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep => {
            let cfg = load_config(cli)?;
            let result = run_experiment(&cfg)?;
            let csv_path = out_path(cli, &cfg.output.csv)?;
            result.write_csv(&csv_path)?;
            if !cli.quiet {
                eprintln!(
                    "# kind={} rows={} seed={} config_hash={} wall={:.2}s",
                    result.kind.name(),
                    result.rows.len(),
                    result.seed,
                    result.config_hash,
                    result.wall.as_secs_f64()
                );
                eprintln!("wrote {}", csv_path.display());
            }
            if let Some(svg_name) = &cfg.output.svg {
                let svg_path = out_path(cli, svg_name)?;
                render_plots(&result, &svg_path)?;
                if !cli.quiet {
                    eprintln!("wrote {}", svg_path.display());
                }
            }
            let mut all_pass = true;
            for a in &result.assertions {
                let status = if a.passed { "PASS" } else { "FAIL" };
                all_pass &= a.passed;
                println!("{status} {}{}", a.name, if a.detail.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", a.detail)
                });
            }
            if cli.assert_checks && !all_pass {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Kl => {
            let cfg = load_config(cli)?;
            println!("quantity,family,param,value");
            if let (Ok(lambda), Some(t), Some(eps)) = (
                cfg.poisson_rate(),
                cfg.simulate.horizon,
                cfg.strategy.epsilon,
            ) {
                let plan = PoissonInsertionPlan::new(lambda, t, eps)?;
                let kl = kl_poisson_counts(lambda, plan.delta(), t)?;
                println!("poisson-count-kl,exponential,delta={},{}", plan.delta(), kl.kl.value);
                println!("poisson-count-kl-bound,exponential,delta={},{}", plan.delta(), kl.quadratic_bound);
                println!(
                    "covertness-lower-bound,exponential,delta={},{}",
                    plan.delta(),
                    covertness_lower_bound(kl.kl.value)?
                );
            }
            if let Some(rhos) = cfg.grid.rho.clone() {
                for dist in cfg.families() {
                    let c = fisher_constant_c(&dist)?;
                    for &rho in &rhos {
                        let kl = kl_scaled_renewal(&dist, rho)?;
                        println!("scaled-kl,{},rho={rho},{}", dist.family(), kl.value);
                        println!(
                            "scaled-kl-ratio,{},rho={rho},{}",
                            dist.family(),
                            kl.value / (0.5 * c * rho * rho)
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fisher => {
            let cfg = load_config(cli)?;
            println!("family,analytic,quadrature,abs_diff");
            for dist in cfg.families() {
                let analytic = fisher_constant_analytic(&dist);
                let quadrature = fisher_constant_quadrature(&dist, 1e-9)?;
                println!(
                    "{},{},{},{}",
                    dist.family(),
                    analytic,
                    quadrature.value,
                    (analytic - quadrature.value).abs()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace { input, output } => {
            let stream = read_trace(input)?;
            print_trace_summary(&stream, input);
            if let Some(out) = output {
                write_trace(&stream, out)?;
                let back = read_trace(out)?;
                if back.packets() != stream.packets() {
                    return Err(Error::Config("round-trip mismatch".into()));
                }
                if !cli.quiet {
                    println!("wrote {} (round-trip verified)", out.display());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_trace_summary(stream: &PacketStream, path: &Path) {
    let n = stream.len();
    if n == 0 {
        println!("{}: empty trace", path.display());
        return;
    }
    let duration = stream.last_time().unwrap_or(0.0);
    let mean_ipd = extract_ipds(stream)
        .map(|ipds| ipds.iter().sum::<f64>() / ipds.len() as f64)
        .unwrap_or(f64::NAN);
    let alice = stream
        .packets()
        .iter()
        .filter(|p| p.source == covert_lab::renewal::Source::Alice)
        .count();
    println!(
        "{}: packets={n} (alice={alice}) duration={duration} mean_ipd={mean_ipd}",
        path.display()
    );
}
