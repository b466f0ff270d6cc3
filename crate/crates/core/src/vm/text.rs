//! Parser for the canonical program text.
//!
//! ```text
//! expr    := "x" | literal | name "(" expr ("," expr)* ")" | "@" name "(" expr ")"
//! literal := integer | float | json-string | "true" | "false" | "null"
//!          | "[" literal ("," literal)* "]" | "[]"
//! ```
//!
//! Whitespace is not accepted anywhere.

use super::instr::{InstructionTable, Op};
use super::program::{Node, Program};
use super::value::Value;
use super::ParseError;

pub fn parse(text: &str, table: &InstructionTable) -> Result<Program, ParseError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        text,
        pos: 0,
        table,
    };
    let root = parser.expr()?;
    if parser.pos != parser.src.len() {
        return Err(parser.syntax("trailing input"));
    }
    Ok(Program::new(root))
}

/// Parses a single literal value in canonical form.
pub fn parse_literal(text: &str) -> Result<Value, ParseError> {
    let table = InstructionTable::with_builtins(&[]);
    let mut parser = Parser {
        src: text.as_bytes(),
        text,
        pos: 0,
        table: &table,
    };
    let v = parser.literal()?;
    if parser.pos != parser.src.len() {
        return Err(parser.syntax("trailing input"));
    }
    Ok(v)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    table: &'a InstructionTable,
}

impl Parser<'_> {
    fn syntax(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: msg.to_owned(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected '{}'", b as char)))
        }
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        &self.text[start..self.pos]
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'@') => {
                self.pos += 1;
                let name = self.ident().to_owned();
                if name.is_empty() {
                    return Err(self.syntax("expected routine name after '@'"));
                }
                let routine = self
                    .table
                    .routine(&name)
                    .cloned()
                    .ok_or_else(|| ParseError::UnknownInstruction(format!("@{name}")))?;
                let args = self.args()?;
                if args.len() != 1 {
                    return Err(ParseError::ArityMismatch {
                        instruction: format!("@{name}"),
                        expected: 1,
                        found: args.len(),
                    });
                }
                Ok(Node::Apply(Op::Use(routine), args))
            }
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let save = self.pos;
                let name = self.ident().to_owned();
                if self.peek() == Some(b'(') {
                    let op = self
                        .table
                        .builtin(&name)
                        .ok_or_else(|| ParseError::UnknownInstruction(name.clone()))?;
                    let args = self.args()?;
                    if args.len() != op.arity() {
                        return Err(ParseError::ArityMismatch {
                            instruction: name,
                            expected: op.arity(),
                            found: args.len(),
                        });
                    }
                    return Ok(Node::Apply(Op::Builtin(op), args));
                }
                match name.as_str() {
                    "x" => Ok(Node::Input),
                    "true" | "false" | "null" => {
                        self.pos = save;
                        Ok(Node::Const(self.literal()?))
                    }
                    _ => {
                        self.pos = save;
                        Err(self.syntax(&format!("unknown identifier '{name}'")))
                    }
                }
            }
            Some(_) => Ok(Node::Const(self.literal()?)),
        }
    }

    fn args(&mut self) -> Result<Vec<Node>, ParseError> {
        self.expect(b'(')?;
        let mut args = vec![self.expr()?];
        loop {
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                Some(b')') => {
                    self.pos += 1;
                    return Ok(args);
                }
                _ => return Err(self.syntax("expected ',' or ')'")),
            }
        }
    }

    fn literal(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(b'"') => self.string(),
            Some(b'[') => {
                self.pos += 1;
                let mut items = Vec::new();
                if self.peek() == Some(b']') {
                    self.pos += 1;
                    return Ok(Value::List(items));
                }
                loop {
                    items.push(self.literal()?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b']') => {
                            self.pos += 1;
                            return Ok(Value::List(items));
                        }
                        _ => return Err(self.syntax("expected ',' or ']'")),
                    }
                }
            }
            Some(b) if b == b'-' || b.is_ascii_digit() => self.number(),
            Some(b) if b.is_ascii_alphabetic() => {
                let save = self.pos;
                match self.ident() {
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    "null" => Ok(Value::Null),
                    _ => {
                        self.pos = save;
                        Err(self.syntax("expected literal"))
                    }
                }
            }
            _ => Err(self.syntax("expected literal")),
        }
    }

    fn number(&mut self) -> Result<Value, ParseError> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        let mut is_float = false;
        while let Some(b) = self.peek() {
            match b {
                b'0'..=b'9' => {}
                b'.' | b'e' | b'E' => is_float = true,
                b'+' | b'-' if matches!(self.src[self.pos - 1], b'e' | b'E') => {}
                _ => break,
            }
            self.pos += 1;
        }
        let text = &self.text[start..self.pos];
        let at = start;
        let bad = |message: String| ParseError::Syntax { offset: at, message };
        if !text.bytes().any(|b| b.is_ascii_digit()) {
            return Err(bad(format!("malformed number '{text}'")));
        }
        if is_float {
            let f: f64 = text.parse().map_err(|_| bad(format!("malformed float '{text}'")))?;
            Value::float(f).ok_or_else(|| bad(format!("non-finite float '{text}'")))
        } else {
            text.parse::<i64>()
                .map(Value::Int)
                .map_err(|_| bad(format!("malformed integer '{text}'")))
        }
    }

    fn string(&mut self) -> Result<Value, ParseError> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek() {
                None => return Err(self.syntax("unterminated string")),
                Some(b'\\') => self.pos += 2,
                Some(b'"') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        if self.pos > self.src.len() {
            return Err(self.syntax("unterminated string"));
        }
        let raw = &self.text[start..self.pos];
        serde_json::from_str::<String>(raw)
            .map(Value::Str)
            .map_err(|e| ParseError::Syntax {
                offset: start,
                message: format!("bad string literal: {e}"),
            })
    }
}
