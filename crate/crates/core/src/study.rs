//! The regeneration study: generate working programs, split each into a
//! requested number of steps, fuzz test cases per step, synthesize the
//! steps back and record the size of the result.
//!
//! Every slot `(k, slot)` runs its own sequence of attempts with seeds
//! derived from the master seed, so the output depends on the config only,
//! never on the number of workers or on scheduling.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposer::{
    make_step_cases, max_chunks, split_into_chunks, Chunk, StepCases, DEFAULT_MAX_DRAWS, MAX_CHUNKS,
};
use crate::generator::{check_workability, generate_random_program, RandomPool, DEFAULT_PROBES};
use crate::seed::{self, Purpose};
use crate::synth::{regenerate, satisfies, SynthesisLimits};
use crate::vm::{evaluate, ExecBudget, InstructionTable, Program};

pub const CSV_HEADER: &str = "program_id,steps,total_cases,size_bytes,budget,seed";

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("OutputUnwritable: {path}: {source}")]
    OutputUnwritable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("slot {slot} for {steps} steps found no program in {attempts} attempts")]
    Stalled { steps: usize, slot: usize, attempts: u64 },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("HeaderMismatch: expected `{CSV_HEADER}`, found `{0}`")]
    HeaderMismatch(String),
    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },
}

/// Budget drawn per attempt: `steps × u` with `u` uniform in
/// `min_factor..=max_factor`, capped at `cap`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetRule {
    pub min_factor: usize,
    pub max_factor: usize,
    pub cap: usize,
}

impl Default for BudgetRule {
    fn default() -> Self {
        BudgetRule {
            min_factor: 2,
            max_factor: 6,
            cap: 96,
        }
    }
}

impl BudgetRule {
    pub fn sample(&self, steps: usize, seed: u64) -> usize {
        let u = seed::rng(seed).gen_range(self.min_factor..=self.max_factor);
        (steps * u).min(self.cap)
    }
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub max_steps: usize,
    pub programs_per_step: usize,
    pub master_seed: u64,
    pub budget_rule: BudgetRule,
    pub limits: SynthesisLimits,
    pub workers: usize,
    /// Attempts per slot before the study gives up.
    pub max_attempts: u64,
    pub table: InstructionTable,
    pub pool: RandomPool,
    /// Print progress to standard error.
    pub progress: bool,
}

impl StudyConfig {
    pub fn new(max_steps: usize, programs_per_step: usize, master_seed: u64) -> StudyConfig {
        StudyConfig {
            max_steps,
            programs_per_step,
            master_seed,
            budget_rule: BudgetRule::default(),
            limits: study_limits(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_attempts: 10_000_000,
            table: InstructionTable::standard(),
            pool: RandomPool::default(),
            progress: false,
        }
    }

    fn check(&self) -> Result<(), StudyError> {
        if !(1..=MAX_CHUNKS).contains(&self.max_steps) {
            return Err(StudyError::ConfigInvalid(format!(
                "max_steps must be in 1..={MAX_CHUNKS}, got {}",
                self.max_steps
            )));
        }
        if self.workers == 0 {
            return Err(StudyError::ConfigInvalid("workers must be at least 1".into()));
        }
        let r = self.budget_rule;
        if r.min_factor == 0 || r.min_factor > r.max_factor || r.cap == 0 {
            return Err(StudyError::ConfigInvalid(format!("bad budget rule {r:?}")));
        }
        Ok(())
    }
}

/// Search limits used by the study. The candidate cap is the binding
/// limit; the time budget is only a backstop, so results stay reproducible.
pub fn study_limits() -> SynthesisLimits {
    SynthesisLimits {
        max_length: 9,
        max_bank_entries: 200_000,
        max_value_weight: 256,
        time_budget_ms: 120_000,
        max_candidates: 300_000,
        exec: ExecBudget::new(10_000, 1_000),
        linear_input: true,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub program_id: u64,
    pub steps: u32,
    pub total_cases: u32,
    pub size_bytes: u64,
    pub budget: u32,
    pub seed: u64,
}

impl StudyRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.program_id, self.steps, self.total_cases, self.size_bytes, self.budget, self.seed
        )
    }
}

/// Everything needed to re-check a record.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordArtifacts {
    pub original: Program,
    pub chunks: Vec<Chunk>,
    pub step_cases: Vec<StepCases>,
    pub steps: Vec<Program>,
    pub regenerated: Program,
}

impl RecordArtifacts {
    fn audit_json(&self, record: &StudyRecord) -> serde_json::Value {
        serde_json::json!({
            "program_id": record.program_id,
            "original": self.original.serialize(),
            "chunks": self.chunks.iter().map(|c| c.code.serialize()).collect::<Vec<_>>(),
            "cases": self.step_cases.iter().map(StepCases::to_json).collect::<Vec<_>>(),
            "steps": self.steps.iter().map(Program::serialize).collect::<Vec<_>>(),
            "regenerated": self.regenerated.serialize(),
        })
    }
}

/// True when the regenerated program satisfies every step case, the step
/// and case counts agree with the artifacts, and `size_bytes` matches the
/// serialization.
pub fn validate_record(record: &StudyRecord, artifacts: &RecordArtifacts, exec: ExecBudget) -> bool {
    let cases = &artifacts.step_cases;
    if cases.is_empty()
        || record.steps as usize != cases.len()
        || artifacts.steps.len() != cases.len()
        || record.total_cases as usize != cases.iter().map(|s| s.cases.len()).sum::<usize>()
        || record.size_bytes != artifacts.regenerated.size_bytes() as u64
    {
        return false;
    }
    // each step on its own cases
    if !cases.iter().zip(&artifacts.steps).all(|(s, p)| satisfies(p, &s.cases, exec)) {
        return false;
    }
    // end to end: the regenerated program behaves as the step chain on the
    // first step's inputs. Cases are fuzzed per step, so a chain may fail
    // part way; the composed program must then fail the same way.
    cases[0].cases.iter().all(|(input, _)| {
        let chained = artifacts
            .steps
            .iter()
            .try_fold(input.clone(), |v, p| evaluate(p, &v, exec));
        evaluate(&artifacts.regenerated, input, exec) == chained
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StudySummary {
    pub records: usize,
    pub attempts: u64,
    pub restarts: u64,
}

struct Produced {
    record: StudyRecord,
    artifacts: RecordArtifacts,
    attempts: u64,
}

fn slot_seed(master: u64, steps: usize, slot: usize) -> u64 {
    seed::derive(seed::derive(master, Purpose::Slot, steps as u64), Purpose::Slot, slot as u64)
}

/// One attempt sequence for the slot; the record is the first attempt that
/// makes it through the whole pipeline.
fn produce(config: &StudyConfig, steps: usize, slot: usize) -> Result<Produced, StudyError> {
    let base = slot_seed(config.master_seed, steps, slot);
    let program_id = ((steps - 1) * config.programs_per_step + slot) as u64;
    for attempt in 0..config.max_attempts {
        let s = seed::derive(base, Purpose::Attempt, attempt);
        let budget = config
            .budget_rule
            .sample(steps, seed::derive(s, Purpose::Budget, 0));
        let Ok(original) = generate_random_program(budget, s, &config.table, &config.pool) else {
            continue;
        };
        if max_chunks(&original) < steps {
            continue;
        }
        let report = check_workability(&original, s, DEFAULT_PROBES, &config.pool);
        if !report.works {
            continue;
        }
        let Ok(chunks) = split_into_chunks(&original, steps, seed::derive(s, Purpose::Split, 0)) else {
            continue;
        };
        let Ok(step_cases) = make_step_cases(
            &chunks,
            &report,
            seed::derive(s, Purpose::Cases, 0),
            DEFAULT_MAX_DRAWS,
            &config.pool,
        ) else {
            continue;
        };
        let Ok(regen) = regenerate(&step_cases, &config.table, &config.limits) else {
            continue;
        };
        let record = StudyRecord {
            program_id,
            steps: steps as u32,
            total_cases: step_cases.iter().map(|c| c.cases.len() as u32).sum(),
            size_bytes: regen.program.size_bytes() as u64,
            budget: budget as u32,
            seed: s,
        };
        let artifacts = RecordArtifacts {
            original,
            chunks,
            step_cases,
            steps: regen.steps,
            regenerated: regen.program,
        };
        if !validate_record(&record, &artifacts, config.limits.exec) {
            continue;
        }
        return Ok(Produced {
            record,
            artifacts,
            attempts: attempt + 1,
        });
    }
    Err(StudyError::Stalled {
        steps,
        slot,
        attempts: config.max_attempts,
    })
}

/// Runs the study and returns its records in `program_id` order.
pub fn collect_records(
    config: &StudyConfig,
) -> Result<(Vec<(StudyRecord, RecordArtifacts)>, StudySummary), StudyError> {
    config.check()?;
    let slots: Vec<(usize, usize)> = (1..=config.max_steps)
        .flat_map(|k| (0..config.programs_per_step).map(move |s| (k, s)))
        .collect();
    let total = slots.len();
    let done = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| StudyError::ConfigInvalid(e.to_string()))?;
    let produced: Vec<Result<Produced, StudyError>> = pool.install(|| {
        slots
            .par_iter()
            .map(|&(k, slot)| {
                let p = produce(config, k, slot);
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if config.progress && (n % 10 == 0 || n == total) {
                    eprintln!("study: {n}/{total} records");
                }
                p
            })
            .collect()
    });
    let mut summary = StudySummary::default();
    let mut rows = Vec::with_capacity(total);
    for p in produced {
        let p = p?;
        summary.records += 1;
        summary.attempts += p.attempts;
        summary.restarts += p.attempts - 1;
        rows.push((p.record, p.artifacts));
    }
    rows.sort_by_key(|(r, _)| r.program_id);
    Ok((rows, summary))
}

fn unwritable(path: &Path) -> impl FnOnce(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::OutputUnwritable {
        path: path.to_owned(),
        source,
    }
}

/// Runs the study, writing the results CSV to `output` and, when `audit`
/// is given, an `audit.jsonl` file into that directory.
pub fn run_study(config: &StudyConfig, output: &Path, audit: Option<&Path>) -> Result<StudySummary, StudyError> {
    config.check()?;
    // fail before the expensive part if the output cannot be created
    let file = File::create(output).map_err(unwritable(output))?;
    let audit_file = match audit {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(unwritable(dir))?;
            let path = dir.join("audit.jsonl");
            Some((File::create(&path).map_err(unwritable(&path))?, path))
        }
        None => None,
    };

    let (rows, summary) = collect_records(config)?;

    let mut out = BufWriter::new(file);
    let mut text = String::with_capacity(32 * (rows.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for (r, _) in &rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(unwritable(output))?;

    if let Some((file, path)) = audit_file {
        let mut w = BufWriter::new(file);
        for (r, a) in &rows {
            writeln!(w, "{}", a.audit_json(r)).map_err(unwritable(&path))?;
        }
        w.flush().map_err(unwritable(&path))?;
    }
    Ok(summary)
}

/// Reads a results CSV written by [`run_study`].
pub fn read_results_csv(path: &Path) -> Result<Vec<StudyRecord>, StudyError> {
    let file = File::open(path).map_err(|source| StudyError::Read {
        path: path.to_owned(),
        source,
    })?;
    let mut lines = BufReader::new(file).lines();
    let read_err = |source| StudyError::Read {
        path: path.to_owned(),
        source,
    };
    let header = match lines.next() {
        Some(line) => line.map_err(read_err)?,
        None => return Err(StudyError::HeaderMismatch(String::new())),
    };
    if header.trim_end_matches('\r') != CSV_HEADER {
        return Err(StudyError::HeaderMismatch(header));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(read_err)?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(StudyError::MalformedRow {
                line: lineno,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let bad = |name: &str, e: std::num::ParseIntError| StudyError::MalformedRow {
            line: lineno,
            message: format!("{name}: {e}"),
        };
        records.push(StudyRecord {
            program_id: fields[0].parse().map_err(|e| bad("program_id", e))?,
            steps: fields[1].parse().map_err(|e| bad("steps", e))?,
            total_cases: fields[2].parse().map_err(|e| bad("total_cases", e))?,
            size_bytes: fields[3].parse().map_err(|e| bad("size_bytes", e))?,
            budget: fields[4].parse().map_err(|e| bad("budget", e))?,
            seed: fields[5].parse().map_err(|e| bad("seed", e))?,
        });
    }
    Ok(records)
}
