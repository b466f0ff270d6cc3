//! Spec documents and the program registry.
//!
//! A spec is JSON:
//!
//! ```json
//! {"name": "f", "cases": [{"input": 5, "derive": [10], "output": 11}], "use": ["g"]}
//! ```
//!
//! `derive` and `use` are optional. The registry is a directory of `.zil`
//! files, one program per file, named after the program.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::vm::{parse, InstructionTable, ParseError, Routine, Value};

use super::SynthError;

/// One full test case.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecCase {
    pub input: Value,
    pub derive: Vec<Value>,
    pub output: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spec {
    pub name: String,
    pub cases: Vec<SpecCase>,
    pub uses: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    cases: Vec<RawCase>,
    #[serde(default, rename = "use")]
    uses: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    input: serde_json::Value,
    #[serde(default)]
    derive: Vec<serde_json::Value>,
    output: serde_json::Value,
}

impl Spec {
    pub fn from_json(text: &str) -> Result<Spec, SynthError> {
        let raw: RawSpec =
            serde_json::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        let value = |v: &serde_json::Value| Value::from_json(v).map_err(SynthError::InvalidSpec);
        let cases = raw
            .cases
            .iter()
            .map(|c| {
                Ok(SpecCase {
                    input: value(&c.input)?,
                    derive: c.derive.iter().map(value).collect::<Result<_, _>>()?,
                    output: value(&c.output)?,
                })
            })
            .collect::<Result<Vec<_>, SynthError>>()?;
        if cases.is_empty() {
            return Err(SynthError::NoCases);
        }
        Ok(Spec {
            name: raw.name,
            cases,
            uses: raw.uses,
        })
    }

    pub fn steps(&self) -> usize {
        self.cases.first().map_or(0, |c| c.derive.len() + 1)
    }

    /// Number of per-step cases, counted before deduplication.
    pub fn total_cases(&self) -> usize {
        self.cases.len() * self.steps()
    }
}

/// Named programs available to `use`, in a fixed order.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    routines: Vec<Arc<Routine>>,
}

impl Registry {
    pub fn insert(&mut self, routine: Arc<Routine>) {
        match self.routines.iter_mut().find(|r| r.name == routine.name) {
            Some(slot) => *slot = routine,
            None => self.routines.push(routine),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Routine>> {
        self.routines.iter().find(|r| r.name == name)
    }

    pub fn routines(&self) -> &[Arc<Routine>] {
        &self.routines
    }

    pub fn is_empty(&self) -> bool {
        self.routines.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("cannot read registry: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file}: {source}")]
    Parse { file: String, source: ParseError },
    #[error("{0}: programs use each other in a cycle")]
    Cycle(String),
}

/// Loads every `<name>.zil` in `dir`, sorted by name. Programs may refer to
/// each other with `@name`.
pub fn load_registry(dir: &Path) -> Result<Registry, RegistryError> {
    let mut sources: Vec<(String, String)> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("zil") {
            continue;
        }
        let Some(name) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        sources.push((name.to_owned(), fs::read_to_string(&path)?.trim_end().to_owned()));
    }
    sources.sort();
    let texts: HashMap<&str, &str> = sources.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();

    let mut loaded: HashMap<String, Arc<Routine>> = HashMap::new();
    for (name, _) in &sources {
        resolve(name, &texts, &mut loaded, &mut Vec::new())?;
    }
    let mut registry = Registry::default();
    for (name, _) in &sources {
        registry.insert(Arc::clone(&loaded[name]));
    }
    Ok(registry)
}

fn resolve(
    name: &str,
    texts: &HashMap<&str, &str>,
    loaded: &mut HashMap<String, Arc<Routine>>,
    stack: &mut Vec<String>,
) -> Result<Arc<Routine>, RegistryError> {
    if let Some(r) = loaded.get(name) {
        return Ok(Arc::clone(r));
    }
    if stack.iter().any(|s| s == name) {
        return Err(RegistryError::Cycle(name.to_owned()));
    }
    let text = texts[name];
    stack.push(name.to_owned());
    let mut table = InstructionTable::standard();
    for used in referenced_routines(text) {
        if texts.contains_key(used.as_str()) {
            table.add_routine(resolve(&used, texts, loaded, stack)?);
        }
    }
    stack.pop();
    let mut program = parse(text, &table).map_err(|source| RegistryError::Parse {
        file: format!("{name}.zil"),
        source,
    })?;
    program.name = Some(name.to_owned());
    let routine = Arc::new(Routine {
        name: name.to_owned(),
        program,
    });
    loaded.insert(name.to_owned(), Arc::clone(&routine));
    Ok(routine)
}

/// Names following '@' outside string literals.
fn referenced_routines(text: &str) -> Vec<String> {
    let bytes = text.as_bytes();
    let mut names = Vec::new();
    let mut i = 0;
    let mut in_string = false;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' if in_string => i += 1,
            b'"' => in_string = !in_string,
            b'@' if !in_string => {
                let start = i + 1;
                let mut end = start;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                let name = text[start..end].to_owned();
                if !names.contains(&name) {
                    names.push(name);
                }
                i = end;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_spec_json() {
        let spec = Spec::from_json(
            r#"{"name":"f","cases":[{"input":5,"derive":[10],"output":11},{"input":1.5,"output":"a"}]}"#,
        )
        .unwrap();
        assert_eq!(spec.cases[0].input, Value::Int(5));
        assert_eq!(spec.cases[1].input, Value::Float(1.5));
        assert!(spec.cases[1].derive.is_empty());
        assert!(spec.uses.is_empty());
        assert!(matches!(Spec::from_json(r#"{"name":"f","cases":[]}"#), Err(SynthError::NoCases)));
        assert!(matches!(Spec::from_json("{"), Err(SynthError::InvalidSpec(_))));
    }

    #[test]
    fn registry_resolves_nested_uses() {
        let dir = std::env::temp_dir().join(format!("cip-registry-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("dbl.zil"), "mul(x,2)").unwrap();
        fs::write(dir.join("quad.zil"), "@dbl(@dbl(x))\n").unwrap();
        fs::write(dir.join("notes.txt"), "ignored").unwrap();
        let reg = load_registry(&dir).unwrap();
        let names: Vec<&str> = reg.routines().iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["dbl", "quad"]);
        let quad = &reg.get("quad").unwrap().program;
        assert_eq!(
            crate::vm::evaluate(quad, &Value::Int(3), crate::vm::ExecBudget::default()),
            Ok(Value::Int(12))
        );

        fs::write(dir.join("a.zil"), "@b(x)").unwrap();
        fs::write(dir.join("b.zil"), "@a(x)").unwrap();
        assert!(matches!(load_registry(&dir), Err(RegistryError::Cycle(_))));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn finds_referenced_names() {
        assert_eq!(referenced_routines(r#"concat(@f(x),"@g")"#), vec!["f".to_string()]);
    }
}
