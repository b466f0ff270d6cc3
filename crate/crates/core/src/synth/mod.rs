//! Example-driven program synthesis.
//!
//! [`synthesize_step`] finds a shortest program consistent with a set of
//! input/output cases. Specs with intermediate values are compiled one step
//! at a time ([`compile_spec`]), each step's cases running from one value to
//! the next, and the step solutions are chained back together by
//! substitution ([`compose_chain`]). Programs named in a spec's `use` list
//! join the instruction table as arity-1 pseudo-instructions.

mod search;
mod spec;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::decomposer::StepCases;
use crate::vm::{evaluate, ExecBudget, InstructionTable, Program, Routine, Value};

pub use spec::{load_registry, Registry, RegistryError, Spec, SpecCase};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("InconsistentCases: input {input} maps to both {first} and {second}{}", step_suffix(*.step))]
    InconsistentCases {
        step: Option<usize>,
        input: String,
        first: String,
        second: String,
    },
    #[error("SynthesisFailure{}: {reason}", step_suffix(*.step))]
    SynthesisFailure { step: Option<usize>, reason: String },
    #[error("NoCases: at least one case is required")]
    NoCases,
    #[error("EmptyChain: no step programs to compose")]
    EmptyChain,
    #[error("RaggedDerives: case {case} has {found} derived values, expected {expected}")]
    RaggedDerives {
        case: usize,
        expected: usize,
        found: usize,
    },
    #[error("UnknownUse: no program named '{0}' in the registry")]
    UnknownUse(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(s) => format!(" at step {s}"),
        None => String::new(),
    }
}

impl SynthError {
    fn at_step(self, index: usize) -> SynthError {
        match self {
            SynthError::SynthesisFailure { reason, .. } => SynthError::SynthesisFailure {
                step: Some(index),
                reason,
            },
            SynthError::InconsistentCases {
                input, first, second, ..
            } => SynthError::InconsistentCases {
                step: Some(index),
                input,
                first,
                second,
            },
            other => other,
        }
    }
}

/// Search limits.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisLimits {
    pub max_length: usize,
    pub max_bank_entries: usize,
    /// Candidates with any output heavier than this (see [`Value::weight`])
    /// are still checked against the target but never banked.
    pub max_value_weight: usize,
    /// Wall-clock safety net. Runs that must be reproducible should make
    /// `max_candidates` the binding limit.
    pub time_budget_ms: u64,
    /// Deterministic work limit: candidate expressions evaluated.
    pub max_candidates: u64,
    /// Budget for evaluating one candidate on one case.
    pub exec: ExecBudget,
    /// Only accept programs that read their input exactly once, so chaining
    /// by substitution neither drops nor duplicates the steps below.
    pub linear_input: bool,
}

impl Default for SynthesisLimits {
    fn default() -> Self {
        SynthesisLimits {
            max_length: 9,
            max_bank_entries: 200_000,
            max_value_weight: 256,
            time_budget_ms: 5_000,
            max_candidates: 2_000_000,
            exec: ExecBudget::new(10_000, 50),
            linear_input: false,
        }
    }
}

/// Canonical constants appended to every constant pool.
pub fn canonical_constants() -> [Value; 7] {
    [
        Value::Int(0),
        Value::Int(1),
        Value::Int(2),
        Value::Int(-1),
        Value::Bool(true),
        Value::Bool(false),
        Value::Str(String::new()),
    ]
}

/// Constants available to the search: the non-list values in the cases
/// (inputs before outputs, case by case, looking one level into lists),
/// then the canonical constants, without duplicates.
pub fn constant_pool(cases: &[(Value, Value)]) -> Vec<Value> {
    let mut pool: Vec<Value> = Vec::new();
    let mut push = |v: &Value| {
        if !v.is_list() && !pool.contains(v) {
            pool.push(v.clone());
        }
    };
    for (input, output) in cases {
        for v in [input, output] {
            match v {
                Value::List(items) => items.iter().for_each(&mut push),
                other => push(other),
            }
        }
    }
    for c in canonical_constants() {
        push(&c);
    }
    pool
}

/// Removes duplicate cases, rejecting an input paired with two outputs.
pub fn normalize_cases(cases: &[(Value, Value)]) -> Result<Vec<(Value, Value)>, SynthError> {
    let mut out: Vec<(Value, Value)> = Vec::with_capacity(cases.len());
    let mut seen: HashMap<&Value, &Value> = HashMap::new();
    for (i, o) in cases {
        match seen.get(i) {
            Some(prev) if *prev == o => {}
            Some(prev) => {
                return Err(SynthError::InconsistentCases {
                    step: None,
                    input: i.to_literal(),
                    first: prev.to_literal(),
                    second: o.to_literal(),
                })
            }
            None => {
                seen.insert(i, o);
                out.push((i.clone(), o.clone()));
            }
        }
    }
    Ok(out)
}

/// Finds a shortest program mapping every case input to its output.
pub fn synthesize_step(
    cases: &[(Value, Value)],
    table: &InstructionTable,
    limits: &SynthesisLimits,
) -> Result<Program, SynthError> {
    synthesize_step_counted(cases, table, limits).map(|(p, _)| p)
}

/// As [`synthesize_step`], also returning the number of candidates tried.
pub fn synthesize_step_counted(
    cases: &[(Value, Value)],
    table: &InstructionTable,
    limits: &SynthesisLimits,
) -> Result<(Program, u64), SynthError> {
    let (inputs, outputs, constants) = prepare(cases)?;
    let found = search::Search::new(&inputs, &outputs, &constants, table, limits).run()?;
    Ok((found.program, found.candidates))
}

/// Same search with observational-equivalence pruning switched off. Very
/// slow; exists to check that pruning never changes the result length.
pub fn synthesize_step_unpruned(
    cases: &[(Value, Value)],
    table: &InstructionTable,
    limits: &SynthesisLimits,
) -> Result<Program, SynthError> {
    let (inputs, outputs, constants) = prepare(cases)?;
    search::Search::new(&inputs, &outputs, &constants, table, limits)
        .without_pruning()
        .run()
        .map(|f| f.program)
}

type Prepared = (Vec<Value>, Vec<Value>, Vec<Value>);

fn prepare(cases: &[(Value, Value)]) -> Result<Prepared, SynthError> {
    if cases.is_empty() {
        return Err(SynthError::NoCases);
    }
    let cases = normalize_cases(cases)?;
    let constants = constant_pool(&cases);
    let (inputs, outputs) = cases.into_iter().unzip();
    Ok((inputs, outputs, constants))
}

/// Chains step programs: each program reads the previous one's output.
pub fn compose_chain(solutions: &[Program]) -> Result<Program, SynthError> {
    let (first, rest) = solutions.split_first().ok_or(SynthError::EmptyChain)?;
    Ok(rest
        .iter()
        .fold(Program::new(first.root.clone()), |acc, p| p.compose_after(&acc)))
}

/// True when `program` maps every case input to its output.
pub fn satisfies(program: &Program, cases: &[(Value, Value)], budget: ExecBudget) -> bool {
    cases
        .iter()
        .all(|(i, o)| evaluate(program, i, budget).as_ref() == Ok(o))
}

/// Output of [`regenerate`]: the composed program and the per-step pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct Regenerated {
    pub program: Program,
    pub steps: Vec<Program>,
}

/// Synthesizes every step independently and chains the results.
pub fn regenerate(
    step_cases: &[StepCases],
    table: &InstructionTable,
    limits: &SynthesisLimits,
) -> Result<Regenerated, SynthError> {
    if step_cases.is_empty() {
        return Err(SynthError::EmptyChain);
    }
    for (i, s) in step_cases.iter().enumerate() {
        if s.chunk_index != i + 1 {
            return Err(SynthError::InvalidSpec(format!(
                "step {} has chunk index {}; steps must be contiguous from 1",
                i + 1,
                s.chunk_index
            )));
        }
    }
    let mut steps = Vec::with_capacity(step_cases.len());
    for s in step_cases {
        let p = synthesize_step(&s.cases, table, limits).map_err(|e| e.at_step(s.chunk_index))?;
        if !satisfies(&p, &s.cases, limits.exec) {
            return Err(SynthError::SynthesisFailure {
                step: Some(s.chunk_index),
                reason: "step solution failed validation".into(),
            });
        }
        steps.push(p);
    }
    let program = compose_chain(&steps)?;
    Ok(Regenerated { program, steps })
}

/// Per-step case sets of a spec: step `j` maps value `j-1` to value `j`
/// along every case's input, derived values and output.
pub fn spec_step_cases(spec: &Spec) -> Result<Vec<StepCases>, SynthError> {
    let first = spec.cases.first().ok_or(SynthError::NoCases)?;
    let derives = first.derive.len();
    for (i, c) in spec.cases.iter().enumerate() {
        if c.derive.len() != derives {
            return Err(SynthError::RaggedDerives {
                case: i,
                expected: derives,
                found: c.derive.len(),
            });
        }
    }
    let steps = derives + 1;
    let mut out: Vec<StepCases> = (1..=steps)
        .map(|chunk_index| StepCases {
            chunk_index,
            cases: Vec::new(),
        })
        .collect();
    for c in &spec.cases {
        let chain: Vec<&Value> = std::iter::once(&c.input)
            .chain(c.derive.iter())
            .chain(std::iter::once(&c.output))
            .collect();
        for (j, pair) in chain.windows(2).enumerate() {
            out[j].cases.push((pair[0].clone(), pair[1].clone()));
        }
    }
    for (j, s) in out.iter_mut().enumerate() {
        s.cases = normalize_cases(&s.cases).map_err(|e| e.at_step(j + 1))?;
    }
    Ok(out)
}

/// Compiles a spec into a program, resolving `use` names in `registry`.
pub fn compile_spec(
    spec: &Spec,
    registry: &Registry,
    limits: &SynthesisLimits,
) -> Result<Program, SynthError> {
    compile_spec_with(spec, registry, &InstructionTable::standard(), limits)
}

pub fn compile_spec_with(
    spec: &Spec,
    registry: &Registry,
    base: &InstructionTable,
    limits: &SynthesisLimits,
) -> Result<Program, SynthError> {
    let steps = spec_step_cases(spec)?;
    let mut table = base.clone();
    for name in &spec.uses {
        if registry.get(name).is_none() {
            return Err(SynthError::UnknownUse(name.clone()));
        }
    }
    // registry order, not the order of the use list
    for routine in registry.routines() {
        if spec.uses.iter().any(|u| *u == routine.name) {
            table.add_routine(Arc::clone(routine));
        }
    }
    let regenerated = regenerate(&steps, &table, limits)?;
    let mut program = regenerated.program;
    program.name = Some(spec.name.clone());
    Ok(program)
}

/// Registers `program` under `name` so later specs can use it.
pub fn routine(name: impl Into<String>, program: Program) -> Arc<Routine> {
    Arc::new(Routine {
        name: name.into(),
        program,
    })
}
