use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mhdbl::runner::{self, ScenarioOutcome};
use mhdbl::scenario::{load_scenario_or_preset, preset_names, Scenario};
use mhdbl::verify::{Suite, VerifyOptions};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mhdbl", version, about = "Numerical lab for 2D MHD boundary layers")]
struct Cli {
    /// Print only errors.
    #[arg(long, global = true)]
    quiet: bool,

    /// Root for output directories when --out is not given.
    #[arg(long, global = true, env = "MHDBL_OUT", default_value = "runs")]
    out_root: PathBuf,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file, or the name of a preset.
    #[arg(long)]
    scenario: String,
    /// Output directory (default: <out-root>/<command>-<scenario name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiply the grid resolution in both directions.
    #[arg(long, default_value_t = 1)]
    resolution_scale: usize,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        let mut sc = load_scenario_or_preset(&self.scenario)
            .with_context(|| format!("loading scenario '{}'", self.scenario))?;
        if let Some(seed) = self.seed {
            sc.seed = seed;
        }
        Ok(sc.scaled(self.resolution_scale))
    }

    fn out_dir(&self, root: &Path, command: &str, sc: &Scenario) -> PathBuf {
        runner::output_dir(self.out.as_deref(), Some(root), &format!("{command}-{}", sc.name))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its time series and snapshots.
    Run(ScenarioArgs),
    /// Run the verification suites on seeded corpora.
    Verify {
        /// inequalities | identities | equivalence | all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random fields in the inequality corpus.
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        resolution_scale: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the primal and Crocco formulations.
    CroccoCompare(ScenarioArgs),
    /// Difference experiment between solutions from perturbed data.
    Uniqueness {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Perturbation size (default: the scenario's).
        #[arg(long)]
        d: Option<f64>,
    },
    /// Compare a finished run against the energy majorant.
    Majorant {
        /// Directory of a finished `run`.
        #[arg(long)]
        run: PathBuf,
        /// Majorant constant.
        #[arg(long = "C")]
        c: f64,
    },
    /// Manufactured-solution convergence studies of both solvers.
    Convergence {
        #[arg(long, default_value_t = 1)]
        resolution_scale: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the shipped presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

macro_rules! say {
    ($cli:expr, $($arg:tt)*) => {
        if !$cli.quiet {
            println!($($arg)*);
        }
    };
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Command::Run(a) => {
            let sc = a.load()?;
            let out = a.out_dir(&cli.out_root, "run", &sc);
            match runner::run_scenario(&sc, &out)? {
                ScenarioOutcome::Single(o) => {
                    let s = &o.summary;
                    say!(cli, "{}: {} after {} steps at t = {:.4}", s.name, s.termination, s.steps, s.t_final);
                    say!(cli, "  E: {:.4e} -> {:.4e} (max {:.4e}); min(h + H phi') = {:.4}", s.energy_initial, s.energy_final, s.energy_max, s.hmin_min);
                    if let Some(err) = s.manufactured_error {
                        say!(cli, "  error against the exact solution: {err:.3e}");
                    }
                    if let Some(m) = &o.majorant {
                        say!(cli, "  majorant with C = {:e}: {}", mhdbl::constants::C_MAJORANT,
                            if m.holds { "E^2 <= z throughout".to_string() } else { format!("first violated at t = {:.4}", m.first_failure.unwrap_or(f64::NAN)) });
                    }
                }
                ScenarioOutcome::Family(f) => {
                    for p in &f.pairs {
                        say!(cli, "  |u(eps={:e}) - u(eps={:e})| = {:.4e}", p.eps_a, p.eps_b, p.distance);
                    }
                    say!(cli, "consecutive distances strictly decreasing: {}", f.strictly_decreasing());
                }
            }
            say!(cli, "wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, seed, count, resolution_scale, out } => {
            let which: Suite = suite.parse()?;
            let opts = VerifyOptions { seed: *seed, count: *count, resolution_scale: *resolution_scale };
            let out = runner::output_dir(out.as_deref(), Some(&cli.out_root), &format!("verify-{suite}-seed{seed}"));
            let report = runner::verify_to(which, &opts, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for c in &report.checks {
                say!(cli, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            say!(cli, "wrote {}", out.display());
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::CroccoCompare(a) => {
            let sc = a.load()?;
            let out = a.out_dir(&cli.out_root, "crocco", &sc);
            let cmp = runner::crocco_scenario(&sc, &out)?;
            say!(cli, "eta_max = {:.4}", cmp.eta_max);
            for k in 0..cmp.times.len() {
                say!(cli, "  t = {:.3}: distance {:.3e} (u1 {:.3e}, h1 {:.3e})", cmp.times[k], cmp.distance[k], cmp.distance_u[k], cmp.distance_h[k]);
            }
            say!(cli, "wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Uniqueness { scenario, d } => {
            let sc = scenario.load()?;
            let d = d.unwrap_or(sc.uniqueness.d);
            if !(d > 0.0 && d.is_finite()) {
                bail!("--d must be positive, got {d}");
            }
            let out = scenario.out_dir(&cli.out_root, "uniqueness", &sc);
            let reports = runner::uniqueness_scenario(&sc, d, &out)?;
            for r in &reports {
                let n_max = r.samples.iter().map(|s| s.n).fold(0.0, f64::max);
                match r.c_hat {
                    Some(c) => say!(cli, "  d = {:e}: max N = {n_max:.4e}, fitted growth constant {c:.4}", r.d),
                    None => say!(cli, "  d = {:e}: max N = {n_max:.4e}", r.d),
                }
            }
            say!(cli, "wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Majorant { run, c } => {
            let cmp = runner::majorant_for_run(run, *c)?;
            match (cmp.holds, cmp.first_failure) {
                (true, _) => say!(cli, "comparison with C = {c:e}: E^2 <= z at every sample"),
                (false, Some(t)) => say!(cli, "comparison with C = {c:e}: first violated at t = {t:.4}"),
                (false, None) => say!(cli, "comparison with C = {c:e}: violated"),
            }
            if let Some(h) = cmp.report.horizon {
                say!(cli, "  blow-up horizon at t = {h:.4}");
            }
            say!(cli, "wrote {}", run.join(runner::MAJORANT_FILE).display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Convergence { resolution_scale, out } => {
            let out = runner::output_dir(out.as_deref(), Some(&cli.out_root), "convergence");
            let tables = runner::convergence_suite(*resolution_scale, &out)?;
            for t in &tables {
                say!(cli, "{} {} {:?}: orders {:.3?}, fitted slope {:.3}", t.kind.label(), t.axis.label(), t.scheme, t.orders, t.fitted_slope());
            }
            say!(cli, "wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets => {
            for p in preset_names() {
                println!("{p}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
