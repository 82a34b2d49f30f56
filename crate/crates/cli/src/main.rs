use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use owg_cli::{cmd_contour_check, cmd_modes, cmd_pml_sweep, cmd_solve, top_label, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "owg", version, about = "Scattering by a local perturbation of an open periodic waveguide")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Guided mode data: n, z, reduced wavenumbers, eigenvalues
    Modes(Common),
    /// Contour nodes/weights and quadrature self-tests
    ContourCheck(Common),
    /// Fixpoint iteration; per-iterate fields and relative changes
    Solve(Common),
    /// PML against Rayleigh condition for a list of rho
    PmlSweep(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (1 = sequential)
    #[arg(long)]
    threads: Option<usize>,
    /// Per-key overrides, `--key value`, after all other flags
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    overrides: Vec<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Modes(c) | Command::ContourCheck(c) | Command::Solve(c) | Command::PmlSweep(c)) = &cli.command;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let cfg = RunConfig::load(c.config.as_deref(), &c.overrides)?;
    let out = Some(c.out.as_path());
    match &cli.command {
        Command::Modes(_) => {
            let r = cmd_modes(&cfg, out)?;
            for (name, v) in r.rows() {
                println!("{name:<20} {v:.15}");
            }
        }
        Command::ContourCheck(_) => {
            let tests = cmd_contour_check(&cfg, out)?;
            for t in &tests {
                println!("{}", t.line());
            }
            let failed: Vec<&str> = tests.iter().filter(|t| !t.passed()).map(|t| t.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(CliError::SelfTest(failed.join(", ")));
            }
        }
        Command::Solve(_) => {
            println!("top condition: {}", top_label(cfg.top));
            let r = cmd_solve(&cfg, out)?;
            println!("{}", r.table());
            if let Some(a) = &r.amplitudes {
                for (t, m) in a.iter().enumerate() {
                    println!("u^({}) right {:.6} left {:.6}", t + 1, m.right, m.left);
                }
            }
        }
        Command::PmlSweep(_) => {
            let s = cmd_pml_sweep(&cfg, out)?;
            for (r, e) in s.rho_values.iter().zip(&s.rel_errors) {
                println!("rho {r:>6} rel_error {e:.6e}");
            }
            match s.fit {
                Some(f) => println!("slope {:.6} r2 {:.6}", f.slope, f.r2),
                None => println!("fit absent"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("owg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
