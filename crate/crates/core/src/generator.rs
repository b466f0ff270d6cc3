//! Budgeted random program generation and the workability filter.
//!
//! A program is generated top-down from a Halstead-length budget: each
//! operator consumes one unit and splits the remainder among its arguments,
//! so the result is never longer than the budget. Generation is typed: the
//! input and result types are drawn first, and each node picks uniformly
//! among the operators with an overload producing the type its parent
//! wants, so programs only fail at run time on values (an empty list, a
//! zero divisor), not on kinds. Named routines in the table are never
//! generated. A generated program then has to pass six checks on a set of random probe inputs before it is used
//! downstream.

use std::collections::HashSet;
use std::fmt;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::{self, Purpose};
use crate::vm::{evaluate, Builtin, ExecBudget, InstructionTable, Node, Op, Program, Value};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("InvalidBudget: budget must be at least 1, got {0}")]
    InvalidBudget(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("AttemptsExhausted: no working program within {0} attempts")]
    AttemptsExhausted(u64),
}

/// Family of input values a program is probed with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputProfile {
    Int,
    String,
    ListInt,
    Float,
    Bool,
}

impl InputProfile {
    /// Trial order used by the workability check.
    pub const ORDER: [InputProfile; 5] = [
        InputProfile::Int,
        InputProfile::String,
        InputProfile::ListInt,
        InputProfile::Float,
        InputProfile::Bool,
    ];

    fn tag(self) -> u64 {
        match self {
            InputProfile::Int => 1,
            InputProfile::String => 2,
            InputProfile::ListInt => 3,
            InputProfile::Float => 4,
            InputProfile::Bool => 5,
        }
    }

    /// The profile whose draws have the same type as `v`, if any.
    pub fn of_value(v: &Value) -> Option<InputProfile> {
        match v {
            Value::Int(_) => Some(InputProfile::Int),
            Value::Str(_) => Some(InputProfile::String),
            Value::List(_) => Some(InputProfile::ListInt),
            Value::Float(_) => Some(InputProfile::Float),
            Value::Bool(_) => Some(InputProfile::Bool),
            Value::Null => None,
        }
    }
}

impl fmt::Display for InputProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputProfile::Int => "int",
            InputProfile::String => "string",
            InputProfile::ListInt => "list-int",
            InputProfile::Float => "float",
            InputProfile::Bool => "bool",
        })
    }
}

/// Source of random data values, used both for constant arguments and for
/// probe and test-case inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomPool {
    pub int_min: i64,
    pub int_max: i64,
    /// Floats are drawn on a grid of `1 / float_scale` within the int range.
    pub float_scale: i64,
    pub max_string_len: usize,
    pub max_list_len: usize,
}

impl Default for RandomPool {
    fn default() -> Self {
        RandomPool {
            int_min: -100,
            int_max: 100,
            float_scale: 100,
            max_string_len: 8,
            max_list_len: 8,
        }
    }
}

const STRING_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

impl RandomPool {
    /// The `index`-th value of `profile` under `seed`; a pure function of
    /// its arguments.
    pub fn value(&self, profile: InputProfile, seed: u64, index: u64) -> Value {
        let key = seed::derive(seed, Purpose::Pool, profile.tag());
        let mut rng = seed::rng(seed::derive(key, Purpose::Pool, index));
        self.draw(profile, &mut rng)
    }

    pub fn draw(&self, profile: InputProfile, rng: &mut ChaCha8Rng) -> Value {
        match profile {
            InputProfile::Int => Value::Int(rng.gen_range(self.int_min..=self.int_max)),
            InputProfile::Float => {
                let lo = self.int_min * self.float_scale;
                let hi = self.int_max * self.float_scale;
                let k = rng.gen_range(lo..=hi);
                Value::float(k as f64 / self.float_scale as f64).expect("finite")
            }
            InputProfile::String => {
                let len = rng.gen_range(0..=self.max_string_len);
                let s: String = (0..len)
                    .map(|_| *STRING_ALPHABET.choose(rng).expect("nonempty alphabet") as char)
                    .collect();
                Value::Str(s)
            }
            InputProfile::ListInt => {
                let len = rng.gen_range(0..=self.max_list_len);
                Value::List(
                    (0..len)
                        .map(|_| Value::Int(rng.gen_range(self.int_min..=self.int_max)))
                        .collect(),
                )
            }
            InputProfile::Bool => Value::Bool(rng.gen_bool(0.5)),
        }
    }

    /// A constant argument: type chosen with equal weights.
    pub fn constant(&self, rng: &mut ChaCha8Rng) -> Value {
        let profile = *InputProfile::ORDER.choose(rng).expect("nonempty");
        self.draw(profile, rng)
    }
}

/// Tuning knobs for the shape of generated programs.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    /// Probability that a leaf is the input rather than a constant.
    pub input_leaf_probability: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            input_leaf_probability: 0.5,
        }
    }
}

/// Generates a random program whose Halstead length never exceeds `budget`.
pub fn generate_random_program(
    budget: usize,
    seed: u64,
    table: &InstructionTable,
    pool: &RandomPool,
) -> Result<Program, GenerateError> {
    generate_with(budget, seed, table, pool, &GeneratorConfig::default())
}

pub fn generate_with(
    budget: usize,
    seed: u64,
    table: &InstructionTable,
    pool: &RandomPool,
    config: &GeneratorConfig,
) -> Result<Program, GenerateError> {
    if budget < 1 {
        return Err(GenerateError::InvalidBudget(budget));
    }
    let mut rng = seed::rng(seed::derive(seed, Purpose::Program, 0));
    let input = *InputProfile::ORDER.choose(&mut rng).expect("nonempty");
    let output = *InputProfile::ORDER.choose(&mut rng).expect("nonempty");
    let mut gen = Builder {
        rng,
        builtins: table.builtins(),
        input,
        pool,
        config,
    };
    Ok(Program::new(gen.node(output, budget)))
}

/// Argument and result types of one overload.
struct Signature {
    args: &'static [InputProfile],
    out: InputProfile,
}

macro_rules! sigs {
    ($([$($arg:ident),*] => $out:ident),* $(,)?) => {
        &[$(Signature { args: &[$(InputProfile::$arg),*], out: InputProfile::$out }),*]
    };
}

/// The well-typed overloads of a builtin over the five value types. Lists
/// are taken to hold ints, matching the pool.
fn signatures(b: Builtin) -> &'static [Signature] {
    use Builtin::*;
    match b {
        Neg | Abs => sigs![[Int] => Int, [Float] => Float],
        Not => sigs![[Bool] => Bool],
        Upper | Lower => sigs![[String] => String],
        Reverse => sigs![[String] => String, [ListInt] => ListInt],
        Length => sigs![[String] => Int, [ListInt] => Int],
        Head | Last | Sum => sigs![[ListInt] => Int],
        Tail | Sort => sigs![[ListInt] => ListInt],
        ToString => sigs![
            [Int] => String, [String] => String, [ListInt] => String, [Float] => String, [Bool] => String,
        ],
        ToInt => sigs![[Int] => Int, [Float] => Int, [Bool] => Int, [String] => Int],
        Range => sigs![[Int] => ListInt],
        Add | Sub | Mul | Div | Mod => sigs![
            [Int, Int] => Int, [Float, Float] => Float, [Int, Float] => Float, [Float, Int] => Float,
        ],
        Min | Max => sigs![
            [Int, Int] => Int, [Float, Float] => Float, [Int, Float] => Float, [Float, Int] => Float,
            [String, String] => String,
        ],
        Eq => sigs![
            [Int, Int] => Bool, [String, String] => Bool, [ListInt, ListInt] => Bool,
            [Float, Float] => Bool, [Bool, Bool] => Bool,
        ],
        Lt | Gt => sigs![
            [Int, Int] => Bool, [Float, Float] => Bool, [Int, Float] => Bool, [Float, Int] => Bool,
            [String, String] => Bool,
        ],
        Concat => sigs![[String, String] => String, [ListInt, ListInt] => ListInt],
        Append => sigs![[ListInt, Int] => ListInt],
        Nth => sigs![[ListInt, Int] => Int],
        If => sigs![
            [Bool, Int, Int] => Int, [Bool, String, String] => String, [Bool, ListInt, ListInt] => ListInt,
            [Bool, Float, Float] => Float, [Bool, Bool, Bool] => Bool,
        ],
    }
}

struct Builder<'a> {
    rng: ChaCha8Rng,
    builtins: &'a [Builtin],
    /// Type the program's input is generated for.
    input: InputProfile,
    pool: &'a RandomPool,
    config: &'a GeneratorConfig,
}

impl Builder<'_> {
    /// A random node producing `ty` within `budget`.
    fn node(&mut self, ty: InputProfile, budget: usize) -> Node {
        let leaf_probability = 1.0 / budget as f64;
        if budget == 1 || self.rng.gen_bool(leaf_probability) {
            return self.leaf(ty);
        }
        let fits = |b: &Builtin| b.arity() < budget && signatures(*b).iter().any(|s| s.out == ty);
        let count = self.builtins.iter().filter(|b| fits(b)).count();
        if count == 0 {
            return self.leaf(ty);
        }
        let pick = self.rng.gen_range(0..count);
        let op = *self.builtins.iter().filter(|b| fits(b)).nth(pick).expect("in range");
        let overloads = signatures(op).iter().filter(|s| s.out == ty);
        let pick = self.rng.gen_range(0..overloads.clone().count());
        let args = overloads.clone().nth(pick).expect("in range").args;
        let parts = self.composition(budget - 1, op.arity());
        let children = args.iter().zip(parts).map(|(&t, b)| self.node(t, b)).collect();
        Node::Apply(Op::Builtin(op), children)
    }

    fn leaf(&mut self, ty: InputProfile) -> Node {
        if ty == self.input && self.rng.gen_bool(self.config.input_leaf_probability) {
            Node::Input
        } else {
            Node::Const(self.pool.draw(ty, &mut self.rng))
        }
    }

    /// Uniform random composition of `total` into `parts` positive integers
    /// (`parts` at most 3).
    fn composition(&mut self, total: usize, parts: usize) -> Vec<usize> {
        debug_assert!((1..=3).contains(&parts) && total >= parts);
        match parts {
            1 => vec![total],
            2 => {
                let cut = self.rng.gen_range(1..total);
                vec![cut, total - cut]
            }
            _ => {
                // two distinct cut points among the total - 1 gaps
                let a = self.rng.gen_range(1..total);
                let mut b = self.rng.gen_range(1..total - 1);
                if b >= a {
                    b += 1;
                }
                let (lo, hi) = (a.min(b), a.max(b));
                vec![lo, hi - lo, total - hi]
            }
        }
    }
}

/// Outcome of the workability check.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkabilityReport {
    pub works: bool,
    pub profile: Option<InputProfile>,
    pub probe_inputs: Vec<Value>,
    pub probe_outputs: Vec<Value>,
    /// 1-based index of the failed criterion when no profile passed. With
    /// several profiles failing, the one that got furthest is reported.
    pub failed_criterion: Option<u8>,
}

pub const DEFAULT_PROBES: usize = 8;

/// Applies the six workability criteria, trying each input profile in turn.
pub fn check_workability(
    program: &Program,
    seed: u64,
    probes_per_profile: usize,
    pool: &RandomPool,
) -> WorkabilityReport {
    check_workability_with(program, seed, probes_per_profile, pool, ExecBudget::default())
}

pub fn check_workability_with(
    program: &Program,
    seed: u64,
    probes_per_profile: usize,
    pool: &RandomPool,
    budget: ExecBudget,
) -> WorkabilityReport {
    let mut worst = 0u8;
    for profile in InputProfile::ORDER {
        let probe_seed = seed::derive(seed, Purpose::Probe, profile.tag());
        let inputs: Vec<Value> = (0..probes_per_profile as u64)
            .map(|i| pool.value(profile, probe_seed, i))
            .collect();
        match judge(program, &inputs, budget) {
            Ok(outputs) => {
                return WorkabilityReport {
                    works: true,
                    profile: Some(profile),
                    probe_inputs: inputs,
                    probe_outputs: outputs,
                    failed_criterion: None,
                }
            }
            Err(criterion) => worst = worst.max(criterion),
        }
    }
    WorkabilityReport {
        works: false,
        profile: None,
        probe_inputs: Vec::new(),
        probe_outputs: Vec::new(),
        failed_criterion: Some(worst),
    }
}

/// Runs `program` on every input and checks the criteria. Returns the
/// outputs, or the number of the first criterion that failed.
pub(crate) fn judge(program: &Program, inputs: &[Value], budget: ExecBudget) -> Result<Vec<Value>, u8> {
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut failed: Option<u8> = None;
    for input in inputs {
        let started = Instant::now();
        let result = evaluate(program, input, budget);
        if started.elapsed().as_millis() > u128::from(budget.wall_clock_ms) {
            return Err(6);
        }
        match result {
            Ok(v) => outputs.push(v),
            Err(e) if e.is_timeout() => return Err(6),
            Err(_) => {
                // keep going: a later probe may still time out, and criterion
                // 6 is the more specific diagnosis
                failed.get_or_insert(2);
            }
        }
    }
    if let Some(c) = failed {
        return Err(c);
    }
    outputs_pass(inputs, &outputs, true)?;
    Ok(outputs)
}

/// Criteria 3 to 5 over completed evaluations. A null result counts as no
/// result. `require_variety` toggles criterion 4.
pub(crate) fn outputs_pass(inputs: &[Value], outputs: &[Value], require_variety: bool) -> Result<(), u8> {
    if outputs.is_empty() || outputs.iter().any(|v| matches!(v, Value::Null)) {
        return Err(3);
    }
    if require_variety {
        let distinct: HashSet<&Value> = outputs.iter().collect();
        if distinct.len() < 2 {
            return Err(4);
        }
    }
    if inputs.iter().zip(outputs).all(|(i, o)| i == o) {
        return Err(5);
    }
    Ok(())
}

/// A program that passed the workability filter.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkingProgram {
    pub program: Program,
    pub report: WorkabilityReport,
    /// Number of programs generated, including the successful one.
    pub attempts: u64,
    /// Seed of the successful attempt.
    pub seed: u64,
}

/// Generates programs with derived seeds until one passes the filter.
pub fn generate_working_program(
    budget: usize,
    seed: u64,
    table: &InstructionTable,
    pool: &RandomPool,
    max_attempts: u64,
) -> Result<WorkingProgram, GenerateError> {
    if max_attempts < 1 {
        return Err(GenerateError::InvalidArgument("max_attempts must be at least 1".into()));
    }
    if budget < 1 {
        return Err(GenerateError::InvalidBudget(budget));
    }
    for attempt in 0..max_attempts {
        let attempt_seed = seed::derive(seed, Purpose::Attempt, attempt);
        let program = generate_random_program(budget, attempt_seed, table, pool)?;
        let report = check_workability(&program, attempt_seed, DEFAULT_PROBES, pool);
        if report.works {
            return Ok(WorkingProgram {
                program,
                report,
                attempts: attempt + 1,
                seed: attempt_seed,
            });
        }
    }
    Err(GenerateError::AttemptsExhausted(max_attempts))
}
