//! Bottom-up enumerative search with observational-equivalence pruning.
//!
//! Candidates are built in order of increasing Halstead length. Each
//! candidate is represented by its output vector on the case inputs; the
//! bank keeps only the first (hence shortest) expression per distinct
//! vector, and larger candidates are assembled from banked entries only.
//! Within one length, operators are tried in table order and argument
//! lengths and bank entries in ascending order, so the returned program is
//! a deterministic function of the cases, table and limits.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use crate::vm::{evaluate_metered, Builtin, InstructionTable, Node, Op, Program, Value, ValueKind};

use super::{SynthError, SynthesisLimits};

type EntryId = u32;

static NULL: Value = Value::Null;

#[derive(Clone, Copy, Debug)]
enum Term {
    Input,
    Const(usize),
    Op(usize),
}

#[derive(Clone, Debug)]
struct Entry {
    term: Term,
    args: [EntryId; 3],
    /// Upper bound of fuel used on any case.
    fuel: u64,
    /// Bit set of the value kinds produced across the cases.
    kinds: u8,
    /// Input references in the expression, saturating at 2.
    uses: u8,
}

fn kind_bit(k: ValueKind) -> u8 {
    1 << (k as u8)
}

const ANY: u8 = 0x3f;
const NUM: u8 = (1 << ValueKind::Int as u8) | (1 << ValueKind::Float as u8);
const INT: u8 = 1 << ValueKind::Int as u8;
const BOOL: u8 = 1 << ValueKind::Bool as u8;
const STR: u8 = 1 << ValueKind::Str as u8;
const LIST: u8 = 1 << ValueKind::List as u8;

/// Kinds each argument position can possibly accept. Anything outside the
/// mask fails with a type error, so those entries are skipped outright.
fn accepts(op: &Op, position: usize) -> u8 {
    use Builtin::*;
    let Op::Builtin(b) = op else { return ANY };
    match (b, position) {
        (Neg | Abs, _) => NUM,
        (Not, _) => BOOL,
        (Upper | Lower, _) => STR,
        (Reverse | Length, _) => STR | LIST,
        (Head | Tail | Last | Sort | Sum, _) => LIST,
        (ToString, _) => ANY,
        (ToInt, _) => NUM | BOOL | STR,
        (Range, _) => INT,
        (Add | Sub | Mul | Div | Mod, _) => NUM,
        (Min | Max | Lt | Gt, _) => NUM | STR,
        (Eq, _) => ANY,
        (Concat, _) => STR | LIST,
        (Append, 0) => LIST,
        (Append, _) => ANY,
        (Nth, 0) => LIST,
        (Nth, _) => INT,
        (If, 0) => BOOL,
        (If, _) => ANY,
    }
}

/// Outcome of a search that did not error.
pub(crate) struct Found {
    pub program: Program,
    pub candidates: u64,
}

pub(crate) struct Search<'a> {
    inputs: &'a [Value],
    target: &'a [Value],
    constants: &'a [Value],
    ops: Vec<Op>,
    limits: &'a SynthesisLimits,
    prune: bool,

    entries: Vec<Entry>,
    /// Output vectors, `inputs.len()` values per entry.
    outputs: Vec<Value>,
    levels: Vec<Vec<EntryId>>,
    index: HashMap<u64, Vec<EntryId>>,

    candidates: u64,
    deadline: Instant,
    scratch: Vec<Value>,
}

enum Step {
    Continue,
    Solved(Program),
    Stop(SynthError),
}

impl<'a> Search<'a> {
    pub fn new(
        inputs: &'a [Value],
        target: &'a [Value],
        constants: &'a [Value],
        table: &InstructionTable,
        limits: &'a SynthesisLimits,
    ) -> Search<'a> {
        Search {
            inputs,
            target,
            constants,
            ops: table.ops(),
            limits,
            prune: true,
            entries: Vec::new(),
            outputs: Vec::new(),
            levels: vec![Vec::new()],
            index: HashMap::new(),
            candidates: 0,
            deadline: Instant::now() + Duration::from_millis(limits.time_budget_ms),
            scratch: Vec::with_capacity(inputs.len()),
        }
    }

    /// Disables observational-equivalence pruning: every non-failing
    /// candidate is banked. Only useful for checking the pruning itself.
    pub fn without_pruning(mut self) -> Self {
        self.prune = false;
        self
    }

    pub fn run(mut self) -> Result<Found, SynthError> {
        for length in 1..=self.limits.max_length {
            self.levels.push(Vec::new());
            let step = if length == 1 {
                self.terminals()
            } else {
                self.level(length)
            };
            match step {
                Step::Continue => {}
                Step::Solved(program) => {
                    return Ok(Found {
                        program,
                        candidates: self.candidates,
                    })
                }
                Step::Stop(e) => return Err(e),
            }
        }
        Err(SynthError::SynthesisFailure {
            step: None,
            reason: format!("no program of length <= {}", self.limits.max_length),
        })
    }

    fn n(&self) -> usize {
        self.inputs.len()
    }

    fn terminals(&mut self) -> Step {
        self.scratch.clear();
        self.scratch.extend(self.inputs.iter().cloned());
        if let Some(s) = self.offer(Term::Input, [0; 3], 1, 1, 1) {
            return s;
        }
        for c in 0..self.constants.len() {
            self.scratch.clear();
            let v = &self.constants[c];
            self.scratch.extend(std::iter::repeat(v).take(self.inputs.len()).cloned());
            if let Some(s) = self.offer(Term::Const(c), [0; 3], 1, 1, 0) {
                return s;
            }
        }
        Step::Continue
    }

    fn filtered(&self, length: usize, mask: u8) -> Vec<EntryId> {
        self.levels[length]
            .iter()
            .copied()
            .filter(|&e| self.entries[e as usize].kinds & !mask == 0)
            .collect()
    }

    fn level(&mut self, length: usize) -> Step {
        for op_index in 0..self.ops.len() {
            let op = self.ops[op_index].clone();
            let arity = op.arity();
            if arity + 1 > length {
                continue;
            }
            let step = match arity {
                1 => {
                    let a_list = self.filtered(length - 1, accepts(&op, 0));
                    self.each(&a_list, |s, a| s.try_apply(op_index, &op, [a, 0, 0], length))
                }
                2 => {
                    let mut step = Step::Continue;
                    for la in 1..=length - 2 {
                        let lb = length - 1 - la;
                        let a_list = self.filtered(la, accepts(&op, 0));
                        let b_list = self.filtered(lb, accepts(&op, 1));
                        step = self.each(&a_list, |s, a| {
                            s.each(&b_list, |s, b| s.try_apply(op_index, &op, [a, b, 0], length))
                        });
                        if !matches!(step, Step::Continue) {
                            break;
                        }
                    }
                    step
                }
                _ => {
                    let mut step = Step::Continue;
                    'splits: for la in 1..=length - 3 {
                        for lb in 1..=length - 2 - la {
                            let lc = length - 1 - la - lb;
                            let a_list = self.filtered(la, accepts(&op, 0));
                            let b_list = self.filtered(lb, accepts(&op, 1));
                            let c_list = self.filtered(lc, accepts(&op, 2));
                            step = self.each(&a_list, |s, a| {
                                s.each(&b_list, |s, b| {
                                    s.each(&c_list, |s, c| s.try_apply(op_index, &op, [a, b, c], length))
                                })
                            });
                            if !matches!(step, Step::Continue) {
                                break 'splits;
                            }
                        }
                    }
                    step
                }
            };
            if !matches!(step, Step::Continue) {
                return step;
            }
        }
        Step::Continue
    }

    fn each(&mut self, ids: &[EntryId], mut f: impl FnMut(&mut Self, EntryId) -> Step) -> Step {
        for &id in ids {
            let step = f(self, id);
            if !matches!(step, Step::Continue) {
                return step;
            }
        }
        Step::Continue
    }

    fn try_apply(&mut self, op_index: usize, op: &Op, args: [EntryId; 3], length: usize) -> Step {
        self.candidates += 1;
        if self.candidates % 4096 == 0 {
            if self.candidates >= self.limits.max_candidates {
                return Step::Stop(SynthError::SynthesisFailure {
                    step: None,
                    reason: format!("candidate limit {} reached", self.limits.max_candidates),
                });
            }
            if Instant::now() >= self.deadline {
                return Step::Stop(SynthError::SynthesisFailure {
                    step: None,
                    reason: format!("time budget of {} ms exhausted", self.limits.time_budget_ms),
                });
            }
        }
        let n = self.n();
        let arity = op.arity();
        let child_fuel: u64 = match op {
            Op::Builtin(Builtin::If) => {
                self.entries[args[0] as usize].fuel
                    + self.entries[args[1] as usize]
                        .fuel
                        .max(self.entries[args[2] as usize].fuel)
            }
            _ => args[..arity].iter().map(|&a| self.entries[a as usize].fuel).sum(),
        };
        let mut max_extra = 0u64;
        self.scratch.clear();
        for case in 0..n {
            let mut refs: [&Value; 3] = [&NULL; 3];
            for (slot, &a) in args[..arity].iter().enumerate() {
                refs[slot] = &self.outputs[a as usize * n + case];
            }
            let refs = &refs[..arity];
            let result = match op {
                Op::Builtin(b) => {
                    max_extra = max_extra.max(b.traversal_cost(refs));
                    // the interpreter charges before allocating; so must we
                    if 1 + child_fuel + max_extra > self.limits.exec.fuel {
                        return Step::Continue;
                    }
                    b.apply(refs)
                }
                Op::Use(routine) => {
                    let budget = self.limits.exec;
                    let e = evaluate_metered(&routine.program, refs[0], budget);
                    max_extra = max_extra.max(e.fuel_used);
                    e.result
                }
            };
            match result {
                Ok(v) => self.scratch.push(v),
                Err(_) => return Step::Continue,
            }
        }
        let fuel = 1 + child_fuel + max_extra;
        if fuel > self.limits.exec.fuel {
            return Step::Continue;
        }
        self.offer(Term::Op(op_index), args, length, fuel, self.uses(args, arity))
            .unwrap_or(Step::Continue)
    }

    fn uses(&self, args: [EntryId; 3], arity: usize) -> u8 {
        args[..arity].iter().map(|&a| self.entries[a as usize].uses).sum::<u8>().min(2)
    }

    /// Considers the vector in `scratch`: returns a final step when it solves
    /// the target, otherwise banks it when new. With `linear_input`, only
    /// expressions reading the input exactly once solve, expressions reading
    /// it more often are dropped, and entries are deduplicated per use count.
    fn offer(&mut self, term: Term, args: [EntryId; 3], length: usize, fuel: u64, uses: u8) -> Option<Step> {
        let linear = self.limits.linear_input;
        if linear && uses > 1 {
            return None;
        }
        if self.scratch.as_slice() == self.target && (uses == 1 || !linear) {
            let node = self.build_with(term, args);
            let program = Program::new(node);
            if self.validates(&program) {
                return Some(Step::Solved(program));
            }
            return None;
        }
        let hash = {
            let mut h = std::collections::hash_map::DefaultHasher::new();
            self.scratch.hash(&mut h);
            h.finish()
        };
        let n = self.n();
        if self.prune {
            if let Some(ids) = self.index.get(&hash) {
                let dup = ids.iter().any(|&id| {
                    let start = id as usize * n;
                    (!linear || self.entries[id as usize].uses == uses)
                        && self.outputs[start..start + n] == self.scratch[..]
                });
                if dup {
                    return None;
                }
            }
        }
        if self.entries.len() >= self.limits.max_bank_entries
            || self.scratch.iter().any(|v| v.weight() > self.limits.max_value_weight)
        {
            return None;
        }
        let kinds = self.scratch.iter().fold(0u8, |acc, v| acc | kind_bit(v.kind()));
        let id = self.entries.len() as EntryId;
        self.entries.push(Entry {
            term,
            args,
            fuel,
            kinds,
            uses,
        });
        self.outputs.append(&mut self.scratch);
        self.levels[length].push(id);
        self.index.entry(hash).or_default().push(id);
        None
    }

    fn validates(&self, program: &Program) -> bool {
        self.inputs.iter().zip(self.target).all(|(i, o)| {
            evaluate_metered(program, i, self.limits.exec).result.as_ref() == Ok(o)
        })
    }

    fn build_with(&self, term: Term, args: [EntryId; 3]) -> Node {
        match term {
            Term::Input => Node::Input,
            Term::Const(c) => Node::Const(self.constants[c].clone()),
            Term::Op(o) => {
                let op = self.ops[o].clone();
                let children = args[..op.arity()].iter().map(|&a| self.build(a)).collect();
                Node::Apply(op, children)
            }
        }
    }

    fn build(&self, id: EntryId) -> Node {
        let e = &self.entries[id as usize];
        self.build_with(e.term, e.args)
    }
}
