use clap::{Parser, Subcommand};
use fluxdec::config::{parse_config, ConfigDocument};
use fluxdec::modes::{assemble_linear_operator, solve_modes, SolveOptions};
use fluxdec::scenarios::{resonance_sweep, run_document};
use fluxdec::{output, validate, Error};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fluxdec", version, about = "Flux-field electrodynamics of superconductors on cubical meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Config document (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// `section.key=value`, applied after scenario expansion. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowest eigenmodes of the linear operator, with face-flux maps.
    Modes(Common),
    /// Time-domain run: probe series, snapshots and a summary.
    Run(Common),
    /// Runs the `[sweep]` family and records the late amplitude of a probe.
    Sweep(Common),
    /// Built-in identity, conservation and oracle checks; also validates `--config` if given.
    Validate(Common),
}

enum Failure {
    Lib(Error),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code_and_kind(&self) -> (u8, &'static str) {
        match self {
            Failure::Validation(_) => (4, "validation"),
            Failure::Lib(e) => match e {
                Error::InvalidGrid(_)
                | Error::InvalidRegion(_)
                | Error::Cfl { .. }
                | Error::EtaStep { .. }
                | Error::Junction(_)
                | Error::Probe(_)
                | Error::Scenario(_)
                | Error::Config(_) => (2, "config"),
                Error::NegativeDensity { .. }
                | Error::Divergence { .. }
                | Error::ChargeDivergence { .. }
                | Error::NoConvergence { .. }
                | Error::Supercritical { .. } => (3, "numerical"),
                Error::Fit(_) | Error::Io(_) => (1, "io"),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Validation(m) => m.clone(),
        }
    }
}

fn load(c: &Common) -> Result<ConfigDocument, Failure> {
    let path = c.config.as_ref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text, &c.overrides)?)
}

fn cmd_modes(c: &Common) -> Result<(), Failure> {
    let doc = load(c)?;
    let spec = doc.modes.clone().ok_or_else(|| Error::Config("`modes` needs a [modes] section".into()))?;
    let mesh = doc.mesh()?;
    let regions = doc.region_map(&mesh)?;
    let op = assemble_linear_operator(&mesh, &regions);
    let first = (std::f64::consts::PI / spec.length).powi(2);
    let opts = SolveOptions {
        shift: spec.shift.unwrap_or(0.5 * first),
        cutoff: 1e-6 * first,
        min_curl_fraction: spec.min_curl_fraction,
        ..SolveOptions::default()
    };
    let modes = solve_modes(&op, spec.count, &opts)?;
    output::write_modes(&c.out, &doc, &mesh, &modes, spec.length)?;
    for (i, m) in modes.iter().enumerate() {
        println!("{i} {:.6}", m.normalized(spec.length));
    }
    Ok(())
}

fn cmd_run(c: &Common) -> Result<(), Failure> {
    let doc = load(c)?;
    let mesh = doc.mesh()?;
    let out = run_document(&doc)?;
    output::write_run(&c.out, &doc, &mesh, &out)?;
    println!("wrote {} rows and {} snapshots to {}", out.rows.len(), out.snapshots.len(), c.out.display());
    Ok(())
}

fn cmd_sweep(c: &Common) -> Result<(), Failure> {
    let doc = load(c)?;
    let spec = doc.sweep.clone().ok_or_else(|| Error::Config("`sweep` needs a [sweep] section".into()))?;
    let sweep = resonance_sweep(&doc, spec.parameter, &spec.values, &spec.probe)?;
    output::write_sweep(&c.out, &doc, &sweep)?;
    let (v, a) = sweep.points[sweep.argmax];
    println!("peak at {v} (amplitude {a:e})");
    Ok(())
}

fn cmd_validate(c: &Common) -> Result<(), Failure> {
    let mesh = match &c.config {
        Some(_) => {
            let doc = load(c)?;
            doc.build()?;
            println!("PASS config builds");
            Some(doc.mesh()?)
        }
        None => None,
    };
    let checks = validate::builtin_checks(mesh.as_ref())?;
    let mut failed = Vec::new();
    for ch in &checks {
        println!("{} {} ({})", if ch.passed { "PASS" } else { "FAIL" }, ch.name, ch.detail);
        if !ch.passed {
            failed.push(ch.name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{} check(s) failed: {}", failed.len(), failed.join("; "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Modes(c) | Command::Run(c) | Command::Sweep(c) | Command::Validate(c) => c.clone(),
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: could not set thread count: {e}");
        }
    }
    let result = match &cli.command {
        Command::Modes(c) => cmd_modes(c),
        Command::Run(c) => cmd_run(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Validate(c) => cmd_validate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind) = f.code_and_kind();
            let msg = f.message();
            eprintln!("error: {msg}");
            eprintln!("fluxdec-error kind={kind} code={code} message={msg:?}");
            ExitCode::from(code)
        }
    }
}
