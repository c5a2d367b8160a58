//! The `sas-sim` command line.
//!
//! Exit status is 0 on success, 1 when the input does not validate and 2
//! when something fails at run time (for example writing output).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::classify::CountMode;
use crate::engine::{run_named, EngineError};
use crate::fixtures::{self, FixtureOptions, Variant};
use crate::population::snapshot_states;
use crate::report::{self, StateRow, SystemRow};
use crate::scenario::{self, Scenario};

pub const SEED_ENV: &str = "SAS_SIM_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sas-sim",
    version,
    about = "Simulate scarcity, abundance and sufficiency in resource exchange"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Source {
    /// Scenario file, or the name of a built-in fixture
    pub scenario: String,
    /// Protestant fixture only: system-abundance or system-scarcity
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Famine fixture only: add the food_coupons gift rule
    #[arg(long)]
    pub food_coupons: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario and report the first problem
    Validate {
        #[command(flatten)]
        source: Source,
    },
    /// Classify every agent and the system, without running any ticks
    Classify {
        #[command(flatten)]
        source: Source,
        /// raw or coverage
        #[arg(long)]
        mode: Option<CountMode>,
        /// Print JSON rows instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Run the simulation
    Run {
        #[command(flatten)]
        source: Source,
        /// Overrides the scenario's tick count
        #[arg(long)]
        ticks: Option<u32>,
        /// Overrides SAS_SIM_SEED and the scenario's seed
        #[arg(long)]
        seed: Option<u64>,
        /// raw or coverage
        #[arg(long)]
        mode: Option<CountMode>,
        /// Write report.json and states.csv here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List or print the built-in fixtures
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixturesAction {
    List,
    /// Print a fixture as a scenario file
    Emit {
        name: String,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        food_coupons: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn io_err(e: std::io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load(source: &Source) -> Result<Scenario, Failure> {
    let opts = FixtureOptions {
        variant: source.variant,
        food_coupons: source.food_coupons,
    };
    let path = Path::new(&source.scenario);
    if path.is_file() {
        if opts != FixtureOptions::default() {
            return Err(Failure::Invalid(
                "--variant and --food-coupons only apply to built-in fixtures".into(),
            ));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        return scenario::parse_scenario(&text)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())));
    }
    if fixtures::is_fixture(&source.scenario) {
        return fixtures::fixture(&source.scenario, &opts)
            .map_err(|e| Failure::Invalid(e.to_string()));
    }
    Err(Failure::Invalid(format!(
        "`{}` is neither a file nor a built-in fixture ({})",
        source.scenario,
        fixtures::NAMES.join(", ")
    )))
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                Failure::Invalid(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
            })
        }
        Err(_) => Ok(None),
    }
}

fn print_states(
    out: &mut dyn Write,
    rows: &[StateRow],
    system: &[SystemRow],
) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<12} {:<12} {:>8} {:>9}  {:<12} {:<22} E",
        "agent", "class", "required", "available", "state", "cross"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<12} {:<12} {:>8} {:>9}  {:<12} {:<22} {}",
            r.agent.as_str(),
            r.class.as_str(),
            r.required,
            r.available,
            r.state.as_str(),
            r.cross.as_str(),
            r.entitlement
        )?;
    }
    writeln!(out)?;
    writeln!(
        out,
        "{:<12} {:<12} {:>8} {:>9}  state",
        "system", "class", "required", "available"
    )?;
    for s in system {
        writeln!(
            out,
            "{:<12} {:<12} {:>8} {:>9}  {}",
            "",
            s.class.as_str(),
            s.required,
            s.available,
            s.state.as_str()
        )?;
    }
    Ok(())
}

fn validate(source: &Source, out: &mut dyn Write) -> Outcome {
    let s = load(source)?;
    writeln!(
        out,
        "ok: {} ({} agents, {} rules{})",
        if s.name().is_empty() {
            &source.scenario
        } else {
            s.name()
        },
        s.population.agents().len(),
        s.population.rules.len(),
        if s.population.has_reservoir() {
            ", reservoir"
        } else {
            ""
        }
    )
    .map_err(io_err)
}

fn classify(source: &Source, mode: Option<CountMode>, json: bool, out: &mut dyn Write) -> Outcome {
    let s = load(source)?;
    let mode = mode.unwrap_or(s.config.mode);
    let snap = snapshot_states(&s.population, mode);
    let (rows, system) = report::readings(0, &s.population, &snap, mode);
    if json {
        let doc = serde_json::json!({ "mode": mode, "agents": rows, "system": system });
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        )
        .map_err(io_err)
    } else {
        print_states(out, &rows, &system).map_err(io_err)
    }
}

fn run(
    source: &Source,
    ticks: Option<u32>,
    seed: Option<u64>,
    mode: Option<CountMode>,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let s = load(source)?;
    let mut config = s.config.clone();
    if let Some(t) = ticks {
        config.ticks = t;
    }
    if let Some(seed) = seed.or(env_seed()?) {
        config.seed = seed;
    }
    if let Some(m) = mode {
        config.mode = m;
    }
    let name = if s.name().is_empty() {
        source.scenario.clone()
    } else {
        s.name().to_string()
    };
    let mut report = run_named(s.population.clone(), config, &name).map_err(|e| match e {
        EngineError::InvalidConfig(m) => Failure::Invalid(m),
    })?;

    let last: Vec<_> = report.states_at(report.ticks_run).cloned().collect();
    let last_system: Vec<_> = report
        .system
        .iter()
        .filter(|r| r.tick == report.ticks_run)
        .cloned()
        .collect();
    let o = &report.outcomes;
    let summary = (|| -> std::io::Result<()> {
        writeln!(
            out,
            "{name}: {} tick(s), seed {}, mode {}",
            report.ticks_run, report.seed, report.mode
        )?;
        writeln!(
            out,
            "outcomes: {} E+, {} E-, {} committed",
            o.success, o.failure, o.committed
        )?;
        for (reason, n) in &o.by_reason {
            writeln!(out, "  {reason:?}: {n}")?;
        }
        writeln!(
            out,
            "conservation: {}",
            if report.conserved() { "ok" } else { "VIOLATED" }
        )?;
        writeln!(out)?;
        print_states(out, &last, &last_system)
    })();
    summary.map_err(io_err)?;

    if let Some(dir) = dir {
        if !s.report.events {
            report.events.clear();
        }
        std::fs::create_dir_all(dir).map_err(io_err)?;
        std::fs::write(dir.join("report.json"), report.to_json()).map_err(io_err)?;
        if s.report.csv {
            std::fs::write(dir.join("states.csv"), report.states_csv()).map_err(io_err)?;
        }
        writeln!(out, "\nwrote {}", dir.display()).map_err(io_err)?;
    }
    Ok(())
}

fn fixtures_cmd(action: &FixturesAction, out: &mut dyn Write) -> Outcome {
    match action {
        FixturesAction::List => {
            for name in fixtures::NAMES {
                let s = fixtures::fixture(name, &FixtureOptions::default()).expect("built-in");
                writeln!(out, "{name:<12} {}", s.metadata.description).map_err(io_err)?;
            }
            Ok(())
        }
        FixturesAction::Emit {
            name,
            variant,
            food_coupons,
        } => {
            let opts = FixtureOptions {
                variant: *variant,
                food_coupons: *food_coupons,
            };
            let s = fixtures::fixture(name, &opts).map_err(|e| Failure::Invalid(e.to_string()))?;
            out.write_all(scenario::emit(&s).as_bytes()).map_err(io_err)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Validate { source } => validate(source, out),
        Command::Classify { source, mode, json } => classify(source, *mode, *json, out),
        Command::Run {
            source,
            ticks,
            seed,
            mode,
            out: dir,
        } => run(source, *ticks, *seed, *mode, dir.as_deref(), out),
        Command::Fixtures { action } => fixtures_cmd(action, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_RUNTIME
        }
    }
}
