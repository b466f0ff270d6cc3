//! `cip`: generate, run and compile programs, and run the regeneration study.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cip_core::generator::{generate_random_program, generate_working_program, GenerateError, RandomPool};
use cip_core::stats::analyze;
use cip_core::study::{read_results_csv, run_study, StudyConfig, StudyError};
use cip_core::synth::{compile_spec, load_registry, Registry, Spec, SynthError, SynthesisLimits};
use cip_core::vm::{evaluate, parse, ExecBudget, InstructionTable, Value};

#[derive(Parser)]
#[command(name = "cip", version, about = "Composable inductive programming engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random program.
    Generate {
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep generating until a program passes the workability filter.
        #[arg(long)]
        working: bool,
        #[arg(long, default_value_t = 10_000)]
        max_attempts: u64,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Run a program on one input and print the result as JSON.
    Run {
        file: PathBuf,
        /// Input value as JSON.
        #[arg(long, allow_hyphen_values = true)]
        input: String,
        /// Directory of named programs the file may use.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Compile a JSON test-case spec into a program.
    Compile {
        spec: PathBuf,
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Run the regeneration study and write the results CSV.
    Study {
        #[arg(long)]
        max_steps: usize,
        #[arg(long)]
        per_step: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Also write an audit.jsonl file with every record's artifacts.
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Analyze a results CSV and write a JSON report.
    Analyze {
        csv: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

enum Failure {
    /// Bad flags, unreadable inputs, invalid configuration.
    Usage(String),
    /// The operation itself failed.
    Operation(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn operation(e: impl std::fmt::Display) -> Failure {
    Failure::Operation(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn registry(dir: Option<&Path>) -> Result<Registry, Failure> {
    match dir {
        Some(d) => load_registry(d).map_err(usage),
        None => Ok(Registry::default()),
    }
}

fn cmd_generate(budget: usize, seed: u64, working: bool, max_attempts: u64, output: &Path) -> Outcome {
    let table = InstructionTable::standard();
    let pool = RandomPool::default();
    let gen_err = |e: GenerateError| match e {
        GenerateError::AttemptsExhausted(_) => operation(e),
        _ => usage(e),
    };
    let program = if working {
        let w = generate_working_program(budget, seed, &table, &pool, max_attempts).map_err(gen_err)?;
        let profile = w.report.profile.expect("working programs have a profile");
        println!("profile {profile}");
        println!("attempts {}", w.attempts);
        w.program
    } else {
        generate_random_program(budget, seed, &table, &pool).map_err(gen_err)?
    };
    write(output, &format!("{}\n", program.serialize()))
}

fn cmd_run(file: &Path, input: &str, registry_dir: Option<&Path>) -> Outcome {
    let mut table = InstructionTable::standard();
    for r in registry(registry_dir)?.routines() {
        table.add_routine(r.clone());
    }
    let program = parse(read(file)?.trim_end(), &table).map_err(|e| usage(format!("{}: {e}", file.display())))?;
    let json: serde_json::Value = serde_json::from_str(input).map_err(|e| usage(format!("--input: {e}")))?;
    let value = Value::from_json(&json).map_err(|e| usage(format!("--input: {e}")))?;
    let result = evaluate(&program, &value, ExecBudget::default()).map_err(operation)?;
    println!("{}", result.to_json());
    Ok(())
}

fn cmd_compile(spec_path: &Path, registry_dir: Option<&Path>, output: &Path) -> Outcome {
    let spec = Spec::from_json(&read(spec_path)?).map_err(|e| match e {
        SynthError::InvalidSpec(_) => usage(format!("{}: {e}", spec_path.display())),
        other => operation(other),
    })?;
    let registry = registry(registry_dir)?;
    let program = compile_spec(&spec, &registry, &SynthesisLimits::default()).map_err(operation)?;
    write(output, &format!("{}\n", program.serialize()))?;
    println!("steps {}", spec.steps());
    println!("total_cases {}", spec.total_cases());
    println!("halstead_length {}", program.halstead_length());
    println!("size_bytes {}", program.size_bytes());
    Ok(())
}

fn cmd_study(
    max_steps: usize,
    per_step: usize,
    seed: u64,
    output: &Path,
    audit: Option<&Path>,
    workers: Option<usize>,
) -> Outcome {
    let mut config = StudyConfig::new(max_steps, per_step, seed);
    if let Some(w) = workers {
        config.workers = w;
    }
    config.progress = true;
    let summary = run_study(&config, output, audit).map_err(|e| match e {
        StudyError::ConfigInvalid(_) | StudyError::OutputUnwritable { .. } => usage(e),
        other => operation(other),
    })?;
    eprintln!(
        "study: wrote {} records ({} attempts) to {}",
        summary.records,
        summary.attempts,
        output.display()
    );
    Ok(())
}

fn cmd_analyze(csv: &Path, output: &Path) -> Outcome {
    let records = read_results_csv(csv).map_err(usage)?;
    let report = analyze(&records).map_err(operation)?;
    let text = serde_json::to_string_pretty(&report).map_err(operation)?;
    write(output, &format!("{text}\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate {
            budget,
            seed,
            working,
            max_attempts,
            output,
        } => cmd_generate(*budget, *seed, *working, *max_attempts, output),
        Command::Run { file, input, registry } => cmd_run(file, input, registry.as_deref()),
        Command::Compile {
            spec,
            registry,
            output,
        } => cmd_compile(spec, registry.as_deref(), output),
        Command::Study {
            max_steps,
            per_step,
            seed,
            output,
            audit,
            workers,
        } => cmd_study(*max_steps, *per_step, *seed, output, audit.as_deref(), *workers),
        Command::Analyze { csv, output } => cmd_analyze(csv, output),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Operation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
