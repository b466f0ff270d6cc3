//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use cip_core::vm::{evaluate, Builtin, ExecBudget, Node, Op, Program, Value};

/// Every program tree of exactly `length` nodes over `ops` with leaves
/// drawn from `x` and `constants`.
pub fn all_programs(length: usize, ops: &[Builtin], constants: &[Value]) -> Vec<Node> {
    let mut by_len: Vec<Vec<Node>> = vec![Vec::new()];
    for len in 1..=length {
        let mut level = Vec::new();
        if len == 1 {
            level.push(Node::Input);
            level.extend(constants.iter().cloned().map(Node::Const));
        }
        for &op in ops {
            let arity = op.arity();
            if arity + 1 > len {
                continue;
            }
            for split in splits(len - 1, arity) {
                let mut combos: Vec<Vec<Node>> = vec![Vec::new()];
                for &l in &split {
                    let mut next = Vec::new();
                    for prefix in &combos {
                        for child in &by_len[l] {
                            let mut c = prefix.clone();
                            c.push(child.clone());
                            next.push(c);
                        }
                    }
                    combos = next;
                }
                level.extend(combos.into_iter().map(|args| Node::Apply(Op::Builtin(op), args)));
            }
        }
        by_len.push(level);
    }
    by_len.swap_remove(length)
}

/// Ordered ways to write `total` as `parts` positive integers.
fn splits(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (1..total)
        .flat_map(|first| {
            splits(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .filter(|s| s.len() == parts)
        .collect()
}

/// The classic constant pool: non-list atoms of the cases, one level into
/// lists, in case order (input then output), then 0 1 2 -1 true false "".
pub fn pool_of(cases: &[(Value, Value)]) -> Vec<Value> {
    let mut pool: Vec<Value> = Vec::new();
    let mut add = |v: &Value| {
        if !matches!(v, Value::List(_)) && !pool.contains(v) {
            pool.push(v.clone());
        }
    };
    for (i, o) in cases {
        for v in [i, o] {
            if let Value::List(items) = v {
                items.iter().for_each(&mut add);
            } else {
                add(v);
            }
        }
    }
    for v in [
        Value::Int(0),
        Value::Int(1),
        Value::Int(2),
        Value::Int(-1),
        Value::Bool(true),
        Value::Bool(false),
        Value::Str(String::new()),
    ] {
        add(&v);
    }
    pool
}

/// Smallest length of any program satisfying all cases, searching every
/// tree without pruning. None when nothing up to `max_length` works.
pub fn brute_force_min_length(
    cases: &[(Value, Value)],
    ops: &[Builtin],
    max_length: usize,
    budget: ExecBudget,
) -> Option<usize> {
    brute_force(cases, ops, max_length, budget, |_| true)
}

/// As [`brute_force_min_length`], counting only trees with exactly one
/// input reference.
pub fn brute_force_min_linear_length(
    cases: &[(Value, Value)],
    ops: &[Builtin],
    max_length: usize,
    budget: ExecBudget,
) -> Option<usize> {
    brute_force(cases, ops, max_length, budget, |n| input_refs(n) == 1)
}

pub fn input_refs(node: &Node) -> usize {
    match node {
        Node::Input => 1,
        Node::Const(_) => 0,
        Node::Apply(_, children) => children.iter().map(input_refs).sum(),
    }
}

fn brute_force(
    cases: &[(Value, Value)],
    ops: &[Builtin],
    max_length: usize,
    budget: ExecBudget,
    keep: impl Fn(&Node) -> bool,
) -> Option<usize> {
    let constants = pool_of(cases);
    (1..=max_length).find(|&len| {
        all_programs(len, ops, &constants).into_iter().filter(|n| keep(n)).any(|root| {
            let p = Program::new(root);
            cases.iter().all(|(i, o)| evaluate(&p, i, budget).as_ref() == Ok(o))
        })
    })
}
