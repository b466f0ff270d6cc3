//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Study outputs are kept under the cargo target
//! temp dir (`acceptance/`) for inspection and plotting.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cip_core::decomposer::{max_chunks, recompose, split_into_chunks};
use cip_core::generator::{
    check_workability, generate_working_program, RandomPool, DEFAULT_PROBES,
};
use cip_core::stats::{pearson, select_transforms, summarize, transform, TransformKind};
use cip_core::synth::{compose_chain, synthesize_step, SynthError, SynthesisLimits};
use cip_core::vm::{evaluate, parse, Builtin, EvalError, ExecBudget, InstructionTable, Program, Value};

const VALIDITY_LIMIT: Duration = Duration::from_secs(600);
const MIN_SQRT_PEARSON: f64 = 0.80;
const SQRT_SCORE_SLACK: f64 = 0.10;
const MIN_MONOTONE_RHO: f64 = 0.9;
const STATS_TOLERANCE: f64 = 1e-4;

struct Row {
    steps: u32,
    total_cases: u32,
    size_bytes: u64,
}

fn out_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn study(max_steps: u32, per_step: u32, seed: u64, workers: u32, out: &Path, audit: Option<&Path>) -> Result<Duration, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cip"));
    cmd.args(["study", "--max-steps", &max_steps.to_string(), "--per-step", &per_step.to_string()])
        .args(["--seed", &seed.to_string(), "--workers", &workers.to_string()])
        .arg("-o")
        .arg(out);
    if let Some(a) = audit {
        cmd.arg("--audit").arg(a);
    }
    let start = Instant::now();
    let o = cmd.output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    Ok(start.elapsed())
}

fn read_rows(path: &Path) -> Vec<Row> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("program_id,steps,total_cases,size_bytes,budget,seed"));
    lines
        .map(|l| {
            let f: Vec<u64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            Row {
                steps: f[1] as u32,
                total_cases: f[2] as u32,
                size_bytes: f[3],
            }
        })
        .collect()
}

fn textbook_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Ranks with ties averaged, for a hand-rolled Spearman.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let below = v.iter().filter(|b| *b < a).count() as f64;
            let equal = v.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

type Outcome = Result<String, String>;

/// Re-checks every audited record from its serialized artifacts.
fn check_audit(audit: &Path, rows: &[Row]) -> Result<usize, String> {
    let table = InstructionTable::standard();
    let exec = cip_core::study::study_limits().exec;
    let text = fs::read_to_string(audit.join("audit.jsonl")).map_err(|e| e.to_string())?;
    let mut n = 0;
    for (line, row) in text.lines().zip(rows) {
        let rec: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let id = &rec["program_id"];
        let steps: Vec<Program> = rec["steps"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| parse(s.as_str().unwrap(), &table).unwrap())
            .collect();
        let regenerated = rec["regenerated"].as_str().unwrap();
        if regenerated.len() as u64 != row.size_bytes {
            return Err(format!("record {id}: size_bytes mismatch"));
        }
        let regenerated = parse(regenerated, &table).map_err(|e| e.to_string())?;
        if compose_chain(&steps).map_err(|e| e.to_string())? != regenerated {
            return Err(format!("record {id}: regenerated is not the step chain"));
        }
        let cases = rec["cases"].as_array().unwrap();
        if cases.len() != row.steps as usize || steps.len() != cases.len() {
            return Err(format!("record {id}: step count mismatch"));
        }
        let mut total = 0;
        for (step, program) in cases.iter().zip(&steps) {
            for case in step["cases"].as_array().unwrap() {
                let input = Value::from_json(&case["input"])?;
                let output = Value::from_json(&case["output"])?;
                if evaluate(program, &input, exec) != Ok(output) {
                    return Err(format!("record {id}: step {} fails a case", step["chunk_index"]));
                }
                total += 1;
            }
        }
        if total != row.total_cases {
            return Err(format!("record {id}: total_cases mismatch"));
        }
        n += 1;
    }
    if n != rows.len() {
        return Err(format!("audited {n} of {} records", rows.len()));
    }
    Ok(n)
}

fn pipeline_validity(dir: &Path) -> Outcome {
    let csv = dir.join("study-8x25.csv");
    let audit = dir.join("audit-8x25");
    let elapsed = study(8, 25, 1, 1, &csv, Some(&audit))?;
    let rows = read_rows(&csv);
    if rows.len() != 200 {
        return Err(format!("{} rows, expected 200", rows.len()));
    }
    let checked = check_audit(&audit, &rows)?;
    let msg = format!("{checked}/200 records valid, {:.1} s (limit {} s)", elapsed.as_secs_f64(), VALIDITY_LIMIT.as_secs());
    if elapsed > VALIDITY_LIMIT {
        return Err(msg);
    }
    Ok(msg)
}

fn determinism(dir: &Path) -> Outcome {
    let first = dir.join("study-8x25.csv");
    let second = dir.join("study-8x25-workers4.csv");
    study(8, 25, 1, 4, &second, None)?;
    if fs::read(&first).map_err(|e| e.to_string())? == fs::read(&second).map_err(|e| e.to_string())? {
        Ok("8x25 seed 1: 1 worker and 4 workers byte-identical".into())
    } else {
        Err("CSV differs between worker counts".into())
    }
}

fn sqrt_pairs(rows: &[Row]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let size = rows.iter().map(|r| r.size_bytes as f64).collect();
    let cases = rows.iter().map(|r| f64::from(r.total_cases)).collect();
    let steps = rows.iter().map(|r| f64::from(r.steps)).collect();
    (size, cases, steps)
}

fn scaling(rows: &[Row]) -> Outcome {
    let (size, cases, steps) = sqrt_pairs(rows);
    let sq = |v: &[f64]| v.iter().map(|x| x.sqrt()).collect::<Vec<_>>();
    let r_cases = textbook_pearson(&sq(&cases), &sq(&size));
    let r_steps = textbook_pearson(&sq(&steps), &sq(&size));
    let msg = format!("sqrt/sqrt pearson: size~cases {r_cases:.3}, size~steps {r_steps:.3} (min {MIN_SQRT_PEARSON})");
    if r_cases >= MIN_SQRT_PEARSON && r_steps >= MIN_SQRT_PEARSON {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn transform_choice(rows: &[Row]) -> Outcome {
    let (size, cases, steps) = sqrt_pairs(rows);
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, xs) in [("cases", &cases), ("steps", &steps)] {
        let sel = select_transforms(xs, &size).map_err(|e| e.to_string())?;
        let best = [sel.scores.log, sel.scores.sqrt, sel.scores.reciprocal]
            .into_iter()
            .flatten()
            .fold(f64::INFINITY, f64::min);
        let sqrt = sel.scores.sqrt.ok_or("sqrt undefined")?;
        let pass = sel.y_kind == TransformKind::Sqrt || sqrt <= best * (1.0 + SQRT_SCORE_SLACK);
        ok &= pass;
        parts.push(format!(
            "{name}: chose {} (log {:.3?}, sqrt {:.3}, reciprocal {:.3?})",
            sel.y_kind, sel.scores.log, sqrt, sel.scores.reciprocal
        ));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn monotonicity(rows: &[Row]) -> Outcome {
    let levels: Vec<u32> = (1..=16).collect();
    let medians: Vec<f64> = levels
        .iter()
        .map(|&k| median(rows.iter().filter(|r| r.steps == k).map(|r| r.size_bytes as f64).collect()))
        .collect();
    let ks: Vec<f64> = levels.iter().map(|&k| f64::from(k)).collect();
    let rho = textbook_pearson(&average_ranks(&ks), &average_ranks(&medians));
    let msg = format!("spearman rho {rho:.3} (min {MIN_MONOTONE_RHO}); medians {medians:?}");
    if rho >= MIN_MONOTONE_RHO {
        Ok(msg)
    } else {
        Err(msg)
    }
}

const REDUCED: [Builtin; 12] = [
    Builtin::Neg,
    Builtin::Abs,
    Builtin::Not,
    Builtin::Upper,
    Builtin::Reverse,
    Builtin::Length,
    Builtin::Add,
    Builtin::Sub,
    Builtin::Mul,
    Builtin::Max,
    Builtin::Concat,
    Builtin::Eq,
];

fn minimality() -> Outcome {
    let table = InstructionTable::with_builtins(&REDUCED);
    let pool = RandomPool::default();
    let limits = SynthesisLimits {
        max_length: 4,
        time_budget_ms: 600_000,
        max_candidates: u64::MAX,
        ..SynthesisLimits::default()
    };
    let (mut solvable, mut agree) = (0, 0);
    for seed in 0..100u64 {
        let budget = 2 + (seed % 3) as usize;
        let known = generate_working_program(budget, 31_000 + seed, &table, &pool, 1_000_000)
            .map_err(|e| e.to_string())?;
        let cases: Vec<(Value, Value)> = known
            .report
            .probe_inputs
            .iter()
            .cloned()
            .zip(known.report.probe_outputs.iter().cloned())
            .take(1 + (seed % 5) as usize)
            .collect();
        let oracle = common::brute_force_min_length(&cases, &REDUCED, 4, limits.exec);
        match (synthesize_step(&cases, &table, &limits), oracle) {
            (Ok(p), Some(min)) => {
                solvable += 1;
                if p.halstead_length() == min {
                    agree += 1;
                } else {
                    return Err(format!("{}: search {} vs minimum {min}", known.program, p.halstead_length()));
                }
            }
            (Err(SynthError::SynthesisFailure { .. }), None) => {}
            (got, want) => return Err(format!("{}: search {got:?}, brute force {want:?}", known.program)),
        }
    }
    Ok(format!("{agree}/{solvable} solvable specs at the brute-force minimum (100 specs)"))
}

fn recomposition() -> Outcome {
    let table = InstructionTable::standard();
    let pool = RandomPool::default();
    let mut splits = 0;
    for i in 0..1000u64 {
        let w = generate_working_program(4 + (i % 45) as usize, 50_000 + i, &table, &pool, 1_000_000)
            .map_err(|e| e.to_string())?;
        for k in 1..=max_chunks(&w.program) {
            let chunks = split_into_chunks(&w.program, k, w.seed.wrapping_add(k as u64)).map_err(|e| e.to_string())?;
            if recompose(&chunks).map_err(|e| e.to_string())? != w.program {
                return Err(format!("{} at k={k}", w.program));
            }
            splits += 1;
        }
    }
    Ok(format!("1000 programs, {splits} splits, all identity"))
}

fn interpreter_bounds() -> Outcome {
    let table = InstructionTable::standard();
    let hungry = parse("sum(range(2000000000))", &table).map_err(|e| e.to_string())?;
    let budget = ExecBudget::default();
    let a = evaluate(&hungry, &Value::Int(0), budget);
    let b = evaluate(&hungry, &Value::Int(0), budget);
    if a != Err(EvalError::FuelExhausted) || a != b {
        return Err(format!("got {a:?} then {b:?}"));
    }
    let candidate = parse("sum(range(add(x,2000000000)))", &table).map_err(|e| e.to_string())?;
    let report = check_workability(&candidate, 1, DEFAULT_PROBES, &RandomPool::default());
    if report.works || report.failed_criterion != Some(6) {
        return Err(format!("workability report {report:?}"));
    }
    Ok("FuelExhausted twice; rejected by criterion 6".into())
}

fn statistics() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= STATS_TOLERANCE;
    let s = summarize(&[1.0, 2.0, 3.0]).map_err(|e| e.to_string())?;
    let checks = [
        ("summarize [1,2,3]", s.count == 3 && close(s.max, 3.0) && close(s.median, 2.0) && close(s.stddev, 1.0)),
        (
            "stddev [2,4,4,4,5,5,7,9]",
            close(summarize(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap().stddev, (32.0f64 / 7.0).sqrt()),
        ),
        ("pearson +1", close(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0)),
        ("pearson -1", close(pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap(), -1.0)),
        (
            "pearson squares",
            close(pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 9.0, 16.0]).unwrap(), 25.0 / 645.0f64.sqrt()),
        ),
        ("sqrt", transform(&[4.0, 9.0, 16.0], TransformKind::Sqrt).unwrap() == [2.0, 3.0, 4.0]),
        ("log", transform(&[1.0], TransformKind::Log).unwrap() == [0.0]),
        ("reciprocal domain", transform(&[0.0, 1.0], TransformKind::Reciprocal).is_err()),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        Ok(format!("{} examples within {STATS_TOLERANCE}", checks.len()))
    } else {
        Err(format!("failed: {failed:?}"))
    }
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let dir = out_dir();
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    results.push(("interpreter bounds", interpreter_bounds()));
    results.push(("statistics unit values", statistics()));
    results.push(("minimality oracle", minimality()));
    results.push(("recomposition", recomposition()));
    results.push(("pipeline validity", pipeline_validity(&dir)));
    results.push(("determinism", determinism(&dir)));

    let big = dir.join("study-16x50.csv");
    match study(16, 50, 1, 1, &big, None) {
        Ok(_) => {
            let rows = read_rows(&big);
            results.push(("scaling correlations", scaling(&rows)));
            results.push(("transform selection", transform_choice(&rows)));
            results.push(("monotonicity", monotonicity(&rows)));
        }
        Err(e) => {
            for name in ["scaling correlations", "transform selection", "monotonicity"] {
                results.push((name, Err(format!("study failed: {e}"))));
            }
        }
    }

    let mut failures = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", results.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
