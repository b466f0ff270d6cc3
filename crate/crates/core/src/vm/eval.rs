use std::time::{Duration, Instant};

use super::instr::{Builtin, Op};
use super::program::{Node, Program};
use super::value::Value;
use super::EvalError;

/// Resource limits for one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExecBudget {
    /// Node-evaluation credits.
    pub fuel: u64,
    pub wall_clock_ms: u64,
}

impl Default for ExecBudget {
    fn default() -> Self {
        ExecBudget {
            fuel: 1_000_000,
            wall_clock_ms: 200,
        }
    }
}

impl ExecBudget {
    pub fn new(fuel: u64, wall_clock_ms: u64) -> ExecBudget {
        assert!(fuel > 0 && wall_clock_ms > 0, "execution budget must be positive");
        ExecBudget { fuel, wall_clock_ms }
    }
}

/// Result of a metered evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub result: Result<Value, EvalError>,
    pub fuel_used: u64,
}

/// Evaluates `program` on `input`.
pub fn evaluate(program: &Program, input: &Value, budget: ExecBudget) -> Result<Value, EvalError> {
    evaluate_metered(program, input, budget).result
}

/// Evaluates and reports how much fuel was consumed, including on failure.
pub fn evaluate_metered(program: &Program, input: &Value, budget: ExecBudget) -> Evaluation {
    let mut machine = Machine {
        fuel_left: budget.fuel,
        fuel_limit: budget.fuel,
        deadline: Instant::now() + Duration::from_millis(budget.wall_clock_ms),
        ticks: 0,
    };
    let result = machine.eval(&program.root, input);
    Evaluation {
        result,
        fuel_used: machine.fuel_limit - machine.fuel_left,
    }
}

struct Machine {
    fuel_left: u64,
    fuel_limit: u64,
    deadline: Instant,
    ticks: u32,
}

const CLOCK_CHECK_INTERVAL: u32 = 1024;

impl Machine {
    fn charge(&mut self, amount: u64) -> Result<(), EvalError> {
        if amount > self.fuel_left {
            self.fuel_left = 0;
            return Err(EvalError::FuelExhausted);
        }
        self.fuel_left -= amount;
        Ok(())
    }

    fn visit(&mut self) -> Result<(), EvalError> {
        self.charge(1)?;
        self.ticks += 1;
        if self.ticks >= CLOCK_CHECK_INTERVAL {
            self.ticks = 0;
            if Instant::now() >= self.deadline {
                return Err(EvalError::WallClockExceeded);
            }
        }
        Ok(())
    }

    fn eval(&mut self, node: &Node, input: &Value) -> Result<Value, EvalError> {
        self.visit()?;
        match node {
            Node::Input => Ok(input.clone()),
            Node::Const(v) => Ok(v.clone()),
            Node::Apply(Op::Builtin(Builtin::If), args) => match self.eval(&args[0], input)? {
                Value::Bool(true) => self.eval(&args[1], input),
                Value::Bool(false) => self.eval(&args[2], input),
                other => Err(EvalError::TypeMismatch {
                    instruction: "if",
                    operand: other.kind(),
                }),
            },
            Node::Apply(Op::Builtin(op), args) => {
                let values = args
                    .iter()
                    .map(|a| self.eval(a, input))
                    .collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&Value> = values.iter().collect();
                self.charge(op.traversal_cost(&refs))?;
                op.apply(&refs)
            }
            Node::Apply(Op::Use(routine), args) => {
                let arg = self.eval(&args[0], input)?;
                self.eval(&routine.program.root, &arg)
            }
        }
    }
}
