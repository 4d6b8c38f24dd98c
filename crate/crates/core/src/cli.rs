//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::allocation::audit;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::{evaluate_row, run_sweep, scheme_config, Scheme};

#[derive(Debug, Parser)]
#[command(name = "wpmec", about = "Resource allocation for IRS-assisted wireless-powered MEC")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` parameter file applied over the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Result CSV.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Iteration trace CSV (single solves only).
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
    /// Start from the full-size network instead of the desk-scale one.
    #[arg(long, global = true)]
    table2: bool,
    /// Record wall-clock seconds in the CSV (breaks byte-for-byte reruns).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance with the proposed design.
    Solve,
    /// Solve one instance with a baseline scheme.
    Baseline {
        #[arg(long, value_enum)]
        kind: Kind,
    },
    /// Run a parameter sweep described by a spec file.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    UpperBound,
    IdealApplied,
    FullOffloading,
    NoIrs,
}

impl From<Kind> for Scheme {
    fn from(k: Kind) -> Scheme {
        match k {
            Kind::UpperBound => Scheme::UpperBound,
            Kind::IdealApplied => Scheme::IdealApplied,
            Kind::FullOffloading => Scheme::FullOffloading,
            Kind::NoIrs => Scheme::NoIrs,
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::Parse { .. } | Error::Io { .. } | Error::Domain(_) | Error::DimensionMismatch { .. } => 2,
        _ => 1,
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn base_config(c: &Common) -> Result<SystemConfig> {
    let base = if c.table2 { SystemConfig::table2() } else { SystemConfig::default() };
    match &c.config {
        Some(path) => io::load_config(path, base),
        None => {
            base.validate()?;
            Ok(base)
        }
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let c = &cli.common;
    let config = base_config(c)?;
    match &cli.command {
        Command::Solve => single(c, &config, Scheme::Proposed),
        Command::Baseline { kind } => single(c, &config, (*kind).into()),
        Command::Sweep { spec } => {
            let spec = io::load_sweep(spec)?;
            let rows = run_sweep(&spec, &config, c.seed)?;
            match &c.out {
                Some(path) => io::write_rows(io::create(path)?, &rows, c.timing)?,
                None => io::write_rows(std::io::stdout().lock(), &rows, c.timing)?,
            }
            if !c.quiet {
                let failed = rows.iter().filter(|r| r.status != "ok").count();
                eprintln!("{} rows, {} not ok", rows.len(), failed);
            }
            Ok(0)
        }
    }
}

fn single(c: &Common, config: &SystemConfig, scheme: Scheme) -> Result<i32> {
    let (row, out) = evaluate_row("none", 0.0, c.seed, scheme, config, None, c.seed);
    if let Some(path) = &c.out {
        io::write_rows(io::create(path)?, std::slice::from_ref(&row), c.timing)?;
    }
    let Some((alloc, report)) = out else {
        if !c.quiet {
            eprintln!("{}: {}", scheme.tag(), row.status);
        }
        return Ok(1);
    };
    if let Some(path) = &c.trace {
        io::write_trace(io::create(path)?, &report)?;
    }
    if !c.quiet {
        let mut o = std::io::stdout().lock();
        let _ = writeln!(o, "scheme          {}", scheme.tag());
        let _ = writeln!(o, "objective_bits  {:.6e}", alloc.objective_bits);
        let _ = writeln!(o, "sum_rate_bps    {:.6e}", row.sum_rate_bps);
        let _ = writeln!(o, "tau1 tau2 t1    {:.6} {:.6} {:.6}", alloc.tau1, alloc.tau2, alloc.t1);
        let _ = writeln!(o, "P_w             {:?}", alloc.p.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>());
        let _ = writeln!(o, "f_hz            {:?}", alloc.f.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>());
        let _ = writeln!(o, "iterations      inner {} outer {}", row.inner_iters, row.outer_iters);
        if config.csi_delta == 0.0 {
            let scen = crate::scenario::build_scenario(config, config.cluster_x, crate::pipeline::row_seed(c.seed, c.seed))?;
            let ch = crate::channel::synth_channels(&scen, config, crate::pipeline::row_seed(c.seed, c.seed))?;
            let ch = if alloc.irs { ch } else { ch.without_irs() };
            let issues = audit(&alloc, &ch, &scheme_config(scheme, config), 1e-6);
            let _ = writeln!(o, "feasibility     {}", if issues.is_empty() { "ok".to_string() } else { issues.join("; ") });
        }
    }
    Ok(0)
}
