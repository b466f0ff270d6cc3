//! Chain decomposition of a program into steps, and fuzzing of each step
//! into input/output test cases.
//!
//! Cuts are taken along the spine of the tree: starting at the root, always
//! descend into the largest child (leftmost on ties). Only spine nodes whose
//! subtree holds every input reference can be cut, which keeps each chunk a
//! single-input program: chunk 1 is the deepest cut's subtree, and every
//! later chunk reads the previous chunk's value through its own input.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::generator::{outputs_pass, InputProfile, RandomPool, WorkabilityReport};
use crate::seed::{self, Purpose};
use crate::vm::{evaluate, ExecBudget, Node, Program, Value};

/// Upper bound on the number of chunks a program is split into.
pub const MAX_CHUNKS: usize = 32;
/// Upper bound on the number of test cases per chunk.
pub const MAX_CASES_PER_STEP: usize = 8;
pub const DEFAULT_MAX_DRAWS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DecomposeError {
    #[error("NoInput: program never reads its input")]
    NoInput,
    #[error("NotEnoughCuts: {requested} chunks requested, at most {available} possible")]
    NotEnoughCuts { requested: usize, available: usize },
    #[error("invalid chunk count {0}, expected 1..={MAX_CHUNKS}")]
    InvalidChunkCount(usize),
    #[error("EmptyChain: no chunks to compose")]
    EmptyChain,
    #[error("AbandonProgram: chunk {chunk_index} could not yield {wanted} valid cases")]
    AbandonProgram { chunk_index: usize, wanted: usize },
    #[error("workability report does not describe a working program")]
    NotWorking,
}

/// Path of child indices from the root.
pub type NodePath = Vec<usize>;

/// One step of a decomposed program.
#[derive(Clone, Debug, PartialEq)]
pub struct Chunk {
    /// 1-based position in the chain, input side first.
    pub index: usize,
    pub code: Program,
}

/// Test cases for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepCases {
    pub chunk_index: usize,
    pub cases: Vec<(Value, Value)>,
}

impl StepCases {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "chunk_index": self.chunk_index,
            "cases": self
                .cases
                .iter()
                .map(|(i, o)| serde_json::json!({"input": i.to_json(), "output": o.to_json()}))
                .collect::<Vec<_>>(),
        })
    }
}

/// Cut candidates, deepest first.
pub fn eligible_cuts(program: &Program) -> Result<Vec<NodePath>, DecomposeError> {
    let total_inputs = program.root.input_count();
    if total_inputs == 0 {
        return Err(DecomposeError::NoInput);
    }
    let mut cuts = Vec::new();
    let mut path = Vec::new();
    let mut node = &program.root;
    while let Node::Apply(_, args) = node {
        let mut best = 0;
        let mut best_count = 0;
        for (i, arg) in args.iter().enumerate() {
            let count = arg.node_count();
            if count > best_count {
                best = i;
                best_count = count;
            }
        }
        path.push(best);
        node = &args[best];
        if !matches!(node, Node::Apply(..)) {
            break;
        }
        // once a spine node misses an input, every deeper one does too
        if node.input_count() != total_inputs {
            break;
        }
        cuts.push(path.clone());
    }
    cuts.reverse();
    Ok(cuts)
}

/// The largest chunk count `split_into_chunks` accepts for `program`.
pub fn max_chunks(program: &Program) -> usize {
    match eligible_cuts(program) {
        Ok(cuts) => (cuts.len() + 1).min(MAX_CHUNKS),
        Err(_) => 1,
    }
}

/// Splits `program` into `k` chained chunks at seeded random cuts.
pub fn split_into_chunks(program: &Program, k: usize, seed: u64) -> Result<Vec<Chunk>, DecomposeError> {
    if k == 0 || k > MAX_CHUNKS {
        return Err(DecomposeError::InvalidChunkCount(k));
    }
    if k == 1 {
        return Ok(vec![Chunk {
            index: 1,
            code: Program::new(program.root.clone()),
        }]);
    }
    let cuts = eligible_cuts(program)?;
    if k > cuts.len() + 1 {
        return Err(DecomposeError::NotEnoughCuts {
            requested: k,
            available: (cuts.len() + 1).min(MAX_CHUNKS),
        });
    }
    let mut rng = seed::rng(seed::derive(seed, Purpose::Split, k as u64));
    let mut chosen = rand::seq::index::sample(&mut rng, cuts.len(), k - 1).into_vec();
    // cuts are deepest first, so ascending indices walk input to output
    chosen.sort_unstable();
    let mut boundaries: Vec<&[usize]> = chosen.iter().map(|&i| cuts[i].as_slice()).collect();
    boundaries.push(&[]);

    let mut chunks = Vec::with_capacity(k);
    let mut below: Option<&[usize]> = None;
    for (i, at) in boundaries.into_iter().enumerate() {
        let subtree = program.root.at(at).expect("cut path exists").clone();
        let code = match below {
            None => subtree,
            Some(lower) => subtree
                .replace_at(&lower[at.len()..], Node::Input)
                .expect("lower cut lies inside the upper one"),
        };
        chunks.push(Chunk {
            index: i + 1,
            code: Program::new(code),
        });
        below = Some(at);
    }
    Ok(chunks)
}

/// Substitutes each chunk into the next one's input, left to right.
pub fn recompose(chunks: &[Chunk]) -> Result<Program, DecomposeError> {
    let (first, rest) = chunks.split_first().ok_or(DecomposeError::EmptyChain)?;
    Ok(rest
        .iter()
        .fold(Program::new(first.code.root.clone()), |acc, c| c.code.compose_after(&acc)))
}

/// Runs the chunk chain on `input`, returning the value at every boundary
/// (`input` first, final output last). Stops early on an error.
pub fn chain_values(chunks: &[Chunk], input: &Value, budget: ExecBudget) -> Vec<Value> {
    let mut values = vec![input.clone()];
    for c in chunks {
        match evaluate(&c.code, values.last().expect("nonempty"), budget) {
            Ok(v) => values.push(v),
            Err(_) => break,
        }
    }
    values
}

/// Fuzzes every chunk into between 1 and 8 test cases.
///
/// Candidate inputs for a chunk interleave the values observed at its input
/// boundary while running the workability probes with fresh pool draws of
/// the same type. A chunk's case set must satisfy the workability criteria:
/// every case evaluates without error and within budget, outputs vary when
/// there is more than one case, and at least one output differs from its
/// input.
pub fn make_step_cases(
    chunks: &[Chunk],
    report: &WorkabilityReport,
    seed: u64,
    max_draws: usize,
    pool: &RandomPool,
) -> Result<Vec<StepCases>, DecomposeError> {
    let profile = match (report.works, report.profile) {
        (true, Some(p)) => p,
        _ => return Err(DecomposeError::NotWorking),
    };
    let budget = ExecBudget::default();
    let traces: Vec<Vec<Value>> = report
        .probe_inputs
        .iter()
        .map(|input| chain_values(chunks, input, budget))
        .collect();

    let mut out = Vec::with_capacity(chunks.len());
    for (i, chunk) in chunks.iter().enumerate() {
        let mut observed: Vec<Value> = Vec::new();
        for trace in &traces {
            if let Some(v) = trace.get(i) {
                if !observed.contains(v) {
                    observed.push(v.clone());
                }
            }
        }
        let kind = if i == 0 {
            Some(profile)
        } else {
            observed.first().and_then(InputProfile::of_value)
        };
        let chunk_seed = seed::derive(seed, Purpose::Chunk, i as u64);
        let mut rng = seed::rng(seed::derive(seed, Purpose::Cases, i as u64));
        let wanted = rng.gen_range(1..=MAX_CASES_PER_STEP);
        observed.shuffle(&mut rng);

        let cases = fuzz_chunk(chunk, wanted, &observed, kind, chunk_seed, max_draws, pool, budget)
            .ok_or(DecomposeError::AbandonProgram {
                chunk_index: chunk.index,
                wanted,
            })?;
        out.push(StepCases {
            chunk_index: chunk.index,
            cases,
        });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn fuzz_chunk(
    chunk: &Chunk,
    wanted: usize,
    observed: &[Value],
    kind: Option<InputProfile>,
    seed: u64,
    max_draws: usize,
    pool: &RandomPool,
    budget: ExecBudget,
) -> Option<Vec<(Value, Value)>> {
    let mut seen: HashSet<Value> = HashSet::new();
    let mut valid: Vec<(Value, Value)> = Vec::new();
    let mut observed = observed.iter();
    let mut fresh_index = 0u64;
    for draw in 0..max_draws {
        let candidate = match (draw % 2 == 0).then(|| observed.next()).flatten() {
            Some(v) => v.clone(),
            None => match kind {
                Some(k) => {
                    fresh_index += 1;
                    pool.value(k, seed, fresh_index - 1)
                }
                None => match observed.next() {
                    Some(v) => v.clone(),
                    None => return None,
                },
            },
        };
        if !seen.insert(candidate.clone()) {
            continue;
        }
        let output = match evaluate(&chunk.code, &candidate, budget) {
            Ok(Value::Null) | Err(_) => continue,
            Ok(v) => v,
        };
        valid.push((candidate, output));
        if valid.len() < wanted {
            continue;
        }
        // first wanted-1 valid cases plus the newest one
        let mut pick: Vec<(Value, Value)> = valid[..wanted - 1].to_vec();
        pick.push(valid.last().expect("nonempty").clone());
        if case_set_passes(&pick) {
            return Some(pick);
        }
    }
    None
}

fn case_set_passes(cases: &[(Value, Value)]) -> bool {
    let (inputs, outputs): (Vec<Value>, Vec<Value>) = cases.iter().cloned().unzip();
    outputs_pass(&inputs, &outputs, cases.len() > 1).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{check_workability, DEFAULT_PROBES};
    use crate::vm::{parse, InstructionTable};

    fn p(src: &str) -> Program {
        parse(src, &InstructionTable::standard()).unwrap()
    }

    #[test]
    fn eligible_cut_examples() {
        let cuts = eligible_cuts(&p("add(mul(x,2),1)")).unwrap();
        assert_eq!(cuts, vec![vec![0]]);
        assert!(eligible_cuts(&p("add(x,1)")).unwrap().is_empty());
        assert!(eligible_cuts(&p("x")).unwrap().is_empty());
        assert_eq!(eligible_cuts(&p("add(1,1)")), Err(DecomposeError::NoInput));
    }

    #[test]
    fn cuts_must_dominate_every_input() {
        // spine goes into mul(...) but x also appears on the right
        assert!(eligible_cuts(&p("add(mul(neg(x),2),x)")).unwrap().is_empty());
        let cuts = eligible_cuts(&p("neg(abs(add(x,1)))")).unwrap();
        assert_eq!(cuts, vec![vec![0, 0], vec![0]]);
    }

    #[test]
    fn split_examples() {
        let prog = p("add(mul(x,2),1)");
        let chunks = split_into_chunks(&prog, 2, 9).unwrap();
        let texts: Vec<String> = chunks.iter().map(|c| c.code.serialize()).collect();
        assert_eq!(texts, ["mul(x,2)", "add(x,1)"]);
        assert_eq!(chunks[0].index, 1);
        assert_eq!(chunks[1].index, 2);

        let one = split_into_chunks(&prog, 1, 9).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].code, prog);

        assert_eq!(
            split_into_chunks(&p("add(x,1)"), 2, 9),
            Err(DecomposeError::NotEnoughCuts { requested: 2, available: 1 })
        );
        assert_eq!(split_into_chunks(&prog, 0, 9), Err(DecomposeError::InvalidChunkCount(0)));
        assert_eq!(split_into_chunks(&prog, 33, 9), Err(DecomposeError::InvalidChunkCount(33)));
    }

    #[test]
    fn recompose_examples() {
        let chunks = vec![
            Chunk { index: 1, code: p("mul(x,2)") },
            Chunk { index: 2, code: p("add(x,1)") },
        ];
        assert_eq!(recompose(&chunks).unwrap().serialize(), "add(mul(x,2),1)");
        assert_eq!(recompose(&chunks[..1]).unwrap(), p("mul(x,2)"));
        assert_eq!(recompose(&[]), Err(DecomposeError::EmptyChain));
    }

    #[test]
    fn long_chain_round_trips() {
        let prog = p("neg(abs(add(mul(sub(x,3),2),1)))");
        let available = max_chunks(&prog);
        assert_eq!(available, 5);
        for k in 1..=available {
            for s in 0..5 {
                let chunks = split_into_chunks(&prog, k, s).unwrap();
                assert_eq!(chunks.len(), k);
                assert_eq!(recompose(&chunks).unwrap(), prog);
                for c in &chunks[1..] {
                    assert_eq!(c.code.root.input_count(), 1);
                }
            }
        }
    }

    #[test]
    fn step_cases_replay() {
        let pool = RandomPool::default();
        let prog = p("add(mul(x,2),1)");
        let report = check_workability(&prog, 3, DEFAULT_PROBES, &pool);
        let chunks = split_into_chunks(&prog, 2, 3).unwrap();
        let steps = make_step_cases(&chunks, &report, 11, DEFAULT_MAX_DRAWS, &pool).unwrap();
        assert_eq!(steps.len(), 2);
        for (chunk, step) in chunks.iter().zip(&steps) {
            assert_eq!(step.chunk_index, chunk.index);
            assert!((1..=8).contains(&step.cases.len()));
            let mut inputs = HashSet::new();
            for (i, o) in &step.cases {
                assert!(inputs.insert(i.clone()));
                assert_eq!(&evaluate(&chunk.code, i, ExecBudget::default()).unwrap(), o);
            }
        }
        let again = make_step_cases(&chunks, &report, 11, DEFAULT_MAX_DRAWS, &pool).unwrap();
        assert_eq!(steps, again);
    }

    #[test]
    fn doubling_chunk_cases() {
        // accepted inputs {1,2,5} give (1,2),(2,4),(5,10)
        let chunk = Chunk { index: 1, code: p("mul(x,2)") };
        let observed = [Value::Int(1), Value::Int(2), Value::Int(5)];
        let cases = fuzz_chunk(
            &chunk,
            3,
            &observed,
            None,
            0,
            DEFAULT_MAX_DRAWS,
            &RandomPool::default(),
            ExecBudget::default(),
        )
        .unwrap();
        assert_eq!(
            cases,
            vec![
                (Value::Int(1), Value::Int(2)),
                (Value::Int(2), Value::Int(4)),
                (Value::Int(5), Value::Int(10))
            ]
        );
    }

    #[test]
    fn empty_lists_abandon() {
        let chunk = Chunk { index: 1, code: p("head(x)") };
        let observed = [Value::List(vec![])];
        let r = fuzz_chunk(
            &chunk,
            1,
            &observed,
            None,
            0,
            DEFAULT_MAX_DRAWS,
            &RandomPool::default(),
            ExecBudget::default(),
        );
        assert!(r.is_none());
        let empty_only = RandomPool {
            max_list_len: 0,
            ..RandomPool::default()
        };
        let r = fuzz_chunk(
            &chunk,
            1,
            &observed,
            Some(InputProfile::ListInt),
            0,
            DEFAULT_MAX_DRAWS,
            &empty_only,
            ExecBudget::default(),
        );
        assert!(r.is_none());
    }
}
