use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use super::program::Program;
use super::value::{Value, ValueKind};
use super::EvalError;

/// Built-in instructions. Declaration order is the table order and drives
/// synthesis tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    Neg,
    Abs,
    Not,
    Upper,
    Lower,
    Reverse,
    Length,
    Head,
    Tail,
    Last,
    Sort,
    Sum,
    ToString,
    ToInt,
    Range,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Min,
    Max,
    Eq,
    Lt,
    Gt,
    Concat,
    Append,
    Nth,
    If,
}

impl Builtin {
    pub const ALL: [Builtin; 29] = [
        Builtin::Neg,
        Builtin::Abs,
        Builtin::Not,
        Builtin::Upper,
        Builtin::Lower,
        Builtin::Reverse,
        Builtin::Length,
        Builtin::Head,
        Builtin::Tail,
        Builtin::Last,
        Builtin::Sort,
        Builtin::Sum,
        Builtin::ToString,
        Builtin::ToInt,
        Builtin::Range,
        Builtin::Add,
        Builtin::Sub,
        Builtin::Mul,
        Builtin::Div,
        Builtin::Mod,
        Builtin::Min,
        Builtin::Max,
        Builtin::Eq,
        Builtin::Lt,
        Builtin::Gt,
        Builtin::Concat,
        Builtin::Append,
        Builtin::Nth,
        Builtin::If,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Neg => "neg",
            Builtin::Abs => "abs",
            Builtin::Not => "not",
            Builtin::Upper => "upper",
            Builtin::Lower => "lower",
            Builtin::Reverse => "reverse",
            Builtin::Length => "length",
            Builtin::Head => "head",
            Builtin::Tail => "tail",
            Builtin::Last => "last",
            Builtin::Sort => "sort",
            Builtin::Sum => "sum",
            Builtin::ToString => "to_string",
            Builtin::ToInt => "to_int",
            Builtin::Range => "range",
            Builtin::Add => "add",
            Builtin::Sub => "sub",
            Builtin::Mul => "mul",
            Builtin::Div => "div",
            Builtin::Mod => "mod",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Eq => "eq",
            Builtin::Lt => "lt",
            Builtin::Gt => "gt",
            Builtin::Concat => "concat",
            Builtin::Append => "append",
            Builtin::Nth => "nth",
            Builtin::If => "if",
        }
    }

    pub fn arity(self) -> usize {
        use Builtin::*;
        match self {
            Neg | Abs | Not | Upper | Lower | Reverse | Length | Head | Tail | Last | Sort | Sum
            | ToString | ToInt | Range => 1,
            Add | Sub | Mul | Div | Mod | Min | Max | Eq | Lt | Gt | Concat | Append | Nth => 2,
            If => 3,
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.iter().copied().find(|b| b.name() == name)
    }

    /// Extra fuel charged on top of the node visit. List-traversing
    /// instructions pay for the length they walk, and pay it before any
    /// allocation happens.
    pub fn traversal_cost(self, args: &[&Value]) -> u64 {
        fn len(v: &Value) -> u64 {
            match v {
                Value::List(items) => items.len() as u64,
                Value::Str(s) => s.chars().count() as u64,
                _ => 0,
            }
        }
        match self {
            Builtin::Sort | Builtin::Sum | Builtin::Reverse | Builtin::Length => len(args[0]),
            Builtin::Concat => len(args[0]) + len(args[1]),
            Builtin::Range => match args[0] {
                Value::Int(n) if *n > 0 => *n as u64,
                _ => 0,
            },
            _ => 0,
        }
    }

    /// Applies a strict instruction to already evaluated arguments.
    ///
    /// `If` is handled here too, with both branches already evaluated; the
    /// interpreter short-circuits it instead.
    pub fn apply(self, args: &[&Value]) -> Result<Value, EvalError> {
        use Builtin::*;
        debug_assert_eq!(args.len(), self.arity());
        match self {
            Neg => match args[0] {
                Value::Int(i) => i.checked_neg().map(Value::Int).ok_or(EvalError::NumericOverflow),
                Value::Float(f) => float(-f),
                v => mismatch(self, &[v]),
            },
            Abs => match args[0] {
                Value::Int(i) => i.checked_abs().map(Value::Int).ok_or(EvalError::NumericOverflow),
                Value::Float(f) => float(f.abs()),
                v => mismatch(self, &[v]),
            },
            Not => match args[0] {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                v => mismatch(self, &[v]),
            },
            Upper => match args[0] {
                Value::Str(s) => Ok(Value::Str(s.to_uppercase())),
                v => mismatch(self, &[v]),
            },
            Lower => match args[0] {
                Value::Str(s) => Ok(Value::Str(s.to_lowercase())),
                v => mismatch(self, &[v]),
            },
            Reverse => match args[0] {
                Value::Str(s) => Ok(Value::Str(s.chars().rev().collect())),
                Value::List(items) => Ok(Value::List(items.iter().rev().cloned().collect())),
                v => mismatch(self, &[v]),
            },
            Length => match args[0] {
                Value::Str(s) => Ok(Value::Int(s.chars().count() as i64)),
                Value::List(items) => Ok(Value::Int(items.len() as i64)),
                v => mismatch(self, &[v]),
            },
            Head => match args[0] {
                Value::List(items) => items.first().cloned().ok_or(EvalError::IndexOutOfRange),
                v => mismatch(self, &[v]),
            },
            Tail => match args[0] {
                Value::List(items) if items.is_empty() => Err(EvalError::IndexOutOfRange),
                Value::List(items) => Ok(Value::List(items[1..].to_vec())),
                v => mismatch(self, &[v]),
            },
            Last => match args[0] {
                Value::List(items) => items.last().cloned().ok_or(EvalError::IndexOutOfRange),
                v => mismatch(self, &[v]),
            },
            Sort => match args[0] {
                Value::List(items) => sort(items),
                v => mismatch(self, &[v]),
            },
            Sum => match args[0] {
                Value::List(items) => sum(items),
                v => mismatch(self, &[v]),
            },
            ToString => Ok(match args[0] {
                Value::Str(s) => Value::Str(s.clone()),
                v => Value::Str(v.to_literal()),
            }),
            ToInt => match args[0] {
                Value::Int(i) => Ok(Value::Int(*i)),
                Value::Float(f) => {
                    let t = f.trunc();
                    if t >= -9.223_372_036_854_776e18 && t < 9.223_372_036_854_776e18 {
                        Ok(Value::Int(t as i64))
                    } else {
                        Err(EvalError::NumericOverflow)
                    }
                }
                Value::Bool(b) => Ok(Value::Int(i64::from(*b))),
                Value::Str(s) => s.parse::<i64>().map(Value::Int).map_err(|_| EvalError::TypeMismatch {
                    instruction: self.name(),
                    operand: ValueKind::Str,
                }),
                v => mismatch(self, &[v]),
            },
            Range => match args[0] {
                Value::Int(n) if *n < 0 => Err(EvalError::NegativeRange),
                Value::Int(n) => Ok(Value::List((0..*n).map(Value::Int).collect())),
                v => mismatch(self, &[v]),
            },
            Add => arith(self, args, i64::checked_add, |a, b| a + b),
            Sub => arith(self, args, i64::checked_sub, |a, b| a - b),
            Mul => arith(self, args, i64::checked_mul, |a, b| a * b),
            Div => {
                if is_zero(args[1]) {
                    return Err(EvalError::DivisionByZero);
                }
                arith(self, args, i64::checked_div, |a, b| a / b)
            }
            Mod => {
                if is_zero(args[1]) {
                    return Err(EvalError::DivisionByZero);
                }
                arith(self, args, i64::checked_rem, |a, b| a % b)
            }
            Min | Max => {
                let ord = compare(self, args[0], args[1])?;
                let pick_first = match self {
                    Min => ord != Ordering::Greater,
                    _ => ord != Ordering::Less,
                };
                let (a, b) = (args[0], args[1]);
                match (a, b) {
                    // mixed numeric operands promote to float
                    (Value::Int(_), Value::Float(_)) | (Value::Float(_), Value::Int(_)) => {
                        let chosen = if pick_first { a } else { b };
                        float(chosen.as_f64().expect("numeric"))
                    }
                    _ => Ok(if pick_first { a.clone() } else { b.clone() }),
                }
            }
            Eq => Ok(Value::Bool(args[0] == args[1])),
            Lt => Ok(Value::Bool(compare(self, args[0], args[1])? == Ordering::Less)),
            Gt => Ok(Value::Bool(compare(self, args[0], args[1])? == Ordering::Greater)),
            Concat => match (args[0], args[1]) {
                (Value::Str(a), Value::Str(b)) => {
                    let mut s = String::with_capacity(a.len() + b.len());
                    s.push_str(a);
                    s.push_str(b);
                    Ok(Value::Str(s))
                }
                (Value::List(a), Value::List(b)) => {
                    let mut items = Vec::with_capacity(a.len() + b.len());
                    items.extend_from_slice(a);
                    items.extend_from_slice(b);
                    Ok(Value::List(items))
                }
                (a, b) => mismatch(self, &[a, b]),
            },
            Append => match args[0] {
                Value::List(items) => {
                    let mut items = items.clone();
                    items.push(args[1].clone());
                    Ok(Value::List(items))
                }
                v => mismatch(self, &[v, args[1]]),
            },
            Nth => match (args[0], args[1]) {
                (Value::List(items), Value::Int(i)) => usize::try_from(*i)
                    .ok()
                    .and_then(|i| items.get(i))
                    .cloned()
                    .ok_or(EvalError::IndexOutOfRange),
                (a, b) => mismatch(self, &[a, b]),
            },
            If => match args[0] {
                Value::Bool(true) => Ok(args[1].clone()),
                Value::Bool(false) => Ok(args[2].clone()),
                v => mismatch(self, &[v]),
            },
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn mismatch(op: Builtin, operands: &[&Value]) -> Result<Value, EvalError> {
    Err(EvalError::TypeMismatch {
        instruction: op.name(),
        operand: operands[0].kind(),
    })
}

fn float(f: f64) -> Result<Value, EvalError> {
    Value::float(f).ok_or(EvalError::NumericOverflow)
}

fn is_zero(v: &Value) -> bool {
    match v {
        Value::Int(i) => *i == 0,
        Value::Float(f) => *f == 0.0,
        _ => false,
    }
}

fn arith(
    op: Builtin,
    args: &[&Value],
    int_op: fn(i64, i64) -> Option<i64>,
    float_op: fn(f64, f64) -> f64,
) -> Result<Value, EvalError> {
    match (args[0], args[1]) {
        (Value::Int(a), Value::Int(b)) => int_op(*a, *b).map(Value::Int).ok_or(EvalError::NumericOverflow),
        (a, b) => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => float(float_op(x, y)),
            _ => mismatch(op, &[a, b]),
        },
    }
}

fn compare(op: Builtin, a: &Value, b: &Value) -> Result<Ordering, EvalError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Ok(x.cmp(y)),
        (Value::Str(x), Value::Str(y)) => Ok(x.cmp(y)),
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => Ok(x.partial_cmp(&y).expect("stored floats are finite")),
            _ => mismatch(op, &[a, b]).map(|_| Ordering::Equal),
        },
    }
}

fn sort(items: &[Value]) -> Result<Value, EvalError> {
    if items.iter().all(|v| matches!(v, Value::Str(_))) {
        let mut sorted = items.to_vec();
        sorted.sort_by(|a, b| match (a, b) {
            (Value::Str(x), Value::Str(y)) => x.cmp(y),
            _ => unreachable!(),
        });
        return Ok(Value::List(sorted));
    }
    if items.iter().all(|v| v.as_f64().is_some()) {
        let mut sorted = items.to_vec();
        sorted.sort_by(|a, b| match (a, b) {
            (Value::Int(x), Value::Int(y)) => x.cmp(y),
            _ => a.as_f64().unwrap().partial_cmp(&b.as_f64().unwrap()).unwrap(),
        });
        return Ok(Value::List(sorted));
    }
    Err(EvalError::TypeMismatch {
        instruction: "sort",
        operand: ValueKind::List,
    })
}

fn sum(items: &[Value]) -> Result<Value, EvalError> {
    let mut int_total: i64 = 0;
    let mut float_total: Option<f64> = None;
    for item in items {
        match (item, float_total.as_mut()) {
            (Value::Int(i), None) => {
                int_total = int_total.checked_add(*i).ok_or(EvalError::NumericOverflow)?;
            }
            (Value::Int(i), Some(acc)) => *acc += *i as f64,
            (Value::Float(f), None) => float_total = Some(int_total as f64 + f),
            (Value::Float(f), Some(acc)) => *acc += f,
            _ => {
                return Err(EvalError::TypeMismatch {
                    instruction: "sum",
                    operand: item.kind(),
                })
            }
        }
    }
    match float_total {
        Some(f) => float(f),
        None => Ok(Value::Int(int_total)),
    }
}

/// A previously compiled program exposed to the synthesizer as an arity-1
/// pseudo-instruction (`@name`).
#[derive(Clone, Debug, PartialEq)]
pub struct Routine {
    pub name: String,
    pub program: Program,
}

/// Operator of an `Apply` node.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Builtin(Builtin),
    Use(Arc<Routine>),
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::Builtin(b) => b.arity(),
            Op::Use(_) => 1,
        }
    }

    /// Name as it appears in serialized text.
    pub fn display_name(&self) -> String {
        match self {
            Op::Builtin(b) => b.name().to_owned(),
            Op::Use(r) => format!("@{}", r.name),
        }
    }
}

/// The set of instructions available to parsing, generation and synthesis.
///
/// Built-ins keep their fixed relative order; routines are appended after
/// them in insertion order.
#[derive(Clone, Debug)]
pub struct InstructionTable {
    builtins: Vec<Builtin>,
    routines: Vec<Arc<Routine>>,
}

impl Default for InstructionTable {
    fn default() -> Self {
        InstructionTable::standard()
    }
}

impl InstructionTable {
    /// All 29 built-ins.
    pub fn standard() -> InstructionTable {
        InstructionTable {
            builtins: Builtin::ALL.to_vec(),
            routines: Vec::new(),
        }
    }

    /// A table restricted to the given built-ins (kept in table order).
    pub fn with_builtins(builtins: &[Builtin]) -> InstructionTable {
        let mut builtins = builtins.to_vec();
        builtins.sort();
        builtins.dedup();
        InstructionTable {
            builtins,
            routines: Vec::new(),
        }
    }

    pub fn builtins(&self) -> &[Builtin] {
        &self.builtins
    }

    pub fn routines(&self) -> &[Arc<Routine>] {
        &self.routines
    }

    /// Appends a routine. Returns false when the name is already taken.
    pub fn add_routine(&mut self, routine: Arc<Routine>) -> bool {
        if self.routine(&routine.name).is_some() {
            return false;
        }
        self.routines.push(routine);
        true
    }

    pub fn builtin(&self, name: &str) -> Option<Builtin> {
        Builtin::from_name(name).filter(|b| self.builtins.contains(b))
    }

    pub fn routine(&self, name: &str) -> Option<&Arc<Routine>> {
        self.routines.iter().find(|r| r.name == name)
    }

    /// Every operator in table order: built-ins, then routines.
    pub fn ops(&self) -> Vec<Op> {
        self.builtins
            .iter()
            .map(|b| Op::Builtin(*b))
            .chain(self.routines.iter().cloned().map(Op::Use))
            .collect()
    }
}
