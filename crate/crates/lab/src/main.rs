use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rigidity_core::exec::Execution;
use rigidity_core::lattice::{enumerate_shells, negative_shells, LatticeSpec, ShellTable};
use rigidity_lab::config::CONFIG_SCHEMA;
use rigidity_lab::{rerun, run_to_dir, ExperimentConfig, LabError, LabResult, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(
    name = "rigidity-lab",
    version,
    about = "Experiments on projected perturbed lattices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run directory; defaults to the config's `output`, then
        /// `$RIGIDITY_LAB_OUTPUT_ROOT/<experiment>-<seed>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads; 1 runs sequentially.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the shell table of a lattice as CSV.
    Shells {
        /// Inline JSON or a path to a JSON file.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        max_shell: usize,
    },
    /// Replay a manifest and compare result digests.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the config JSON schema.
    Schema,
}

fn default_out(config: &ExperimentConfig) -> PathBuf {
    if let Some(p) = &config.output {
        return p.clone();
    }
    let root =
        std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(format!("{}-{}", config.experiment.name(), config.seed))
}

fn with_jobs<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce(Execution) -> LabResult<T> + Send,
) -> LabResult<T> {
    match jobs {
        Some(0) => Err(LabError::Config("--jobs must be at least 1".into())),
        Some(1) => f(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::Config(format!("thread pool: {e}")))?
            .install(|| f(Execution::Parallel)),
        _ => f(Execution::Parallel),
    }
}

fn write_table(
    w: &mut csv::Writer<std::io::StdoutLock<'_>>,
    side: &str,
    table: &ShellTable,
) -> LabResult<()> {
    for n in 0..=table.max_shell() {
        w.write_record([
            side.to_string(),
            n.to_string(),
            table.values[n].to_string(),
            table.multiplicities[n].to_string(),
            table.cumulative[n].to_string(),
        ])?;
    }
    Ok(())
}

fn shells(spec: &str, max_shell: usize) -> LabResult<()> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(Path::new(spec))?
    };
    let spec: LatticeSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    let positive = enumerate_shells(&spec, max_shell)?;
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    w.write_record(["side", "shell", "value", "multiplicity", "cumulative"])?;
    write_table(&mut w, "positive", &positive)?;
    if spec.is_two_sided() {
        write_table(&mut w, "negative", &negative_shells(&spec, max_shell)?)?;
    }
    w.flush()?;
    Ok(())
}

fn main_inner(cli: Cli) -> LabResult<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            jobs,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            if let Some(t) = trials {
                config.trials = t;
            }
            config.validate()?;
            let dir = out.unwrap_or_else(|| default_out(&config));
            let manifest = with_jobs(jobs, |exec| run_to_dir(&config, &dir, exec))?;
            println!("{}", dir.display());
            println!("{}", serde_json::to_string(&manifest.summary)?);
        }
        Command::Validate { config } => {
            ExperimentConfig::load(&config)?.validate()?;
            println!("ok");
        }
        Command::Shells { spec, max_shell } => shells(&spec, max_shell)?,
        Command::Rerun {
            manifest,
            out,
            jobs,
        } => {
            let report = with_jobs(jobs, |exec| rerun(&manifest, &out, exec))?;
            if !report.reproduced() {
                return Err(LabError::Mismatch(report.mismatched.join(", ")));
            }
            println!("reproduced: {}", out.display());
        }
        Command::Schema => print!("{CONFIG_SCHEMA}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::to_string(&e.record()).unwrap_or_else(|_| format!("{e}"));
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
