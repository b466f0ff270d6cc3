use std::fmt;

use super::instr::{Builtin, Op};
use super::value::Value;

/// Expression node. `Input` refers to the program's single input variable.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Input,
    Const(Value),
    Apply(Op, Vec<Node>),
}

impl Node {
    pub fn apply(op: Builtin, args: Vec<Node>) -> Node {
        debug_assert_eq!(op.arity(), args.len());
        Node::Apply(Op::Builtin(op), args)
    }

    pub fn constant(v: impl Into<Value>) -> Node {
        Node::Const(v.into())
    }

    /// Total number of nodes: operators plus operands.
    pub fn node_count(&self) -> usize {
        match self {
            Node::Input | Node::Const(_) => 1,
            Node::Apply(_, args) => 1 + args.iter().map(Node::node_count).sum::<usize>(),
        }
    }

    pub fn apply_count(&self) -> usize {
        match self {
            Node::Input | Node::Const(_) => 0,
            Node::Apply(_, args) => 1 + args.iter().map(Node::apply_count).sum::<usize>(),
        }
    }

    pub fn input_count(&self) -> usize {
        match self {
            Node::Input => 1,
            Node::Const(_) => 0,
            Node::Apply(_, args) => args.iter().map(Node::input_count).sum(),
        }
    }

    /// Replaces every `Input` with a copy of `replacement`.
    pub fn substitute_input(&self, replacement: &Node) -> Node {
        match self {
            Node::Input => replacement.clone(),
            Node::Const(v) => Node::Const(v.clone()),
            Node::Apply(op, args) => Node::Apply(
                op.clone(),
                args.iter().map(|a| a.substitute_input(replacement)).collect(),
            ),
        }
    }

    /// Follows a path of child indices from this node.
    pub fn at(&self, path: &[usize]) -> Option<&Node> {
        let mut node = self;
        for &i in path {
            match node {
                Node::Apply(_, args) => node = args.get(i)?,
                _ => return None,
            }
        }
        Some(node)
    }

    /// Copy of this tree with the node at `path` replaced.
    pub fn replace_at(&self, path: &[usize], replacement: Node) -> Option<Node> {
        match path.split_first() {
            None => Some(replacement),
            Some((&i, rest)) => match self {
                Node::Apply(op, args) if i < args.len() => {
                    let mut args = args.clone();
                    args[i] = args[i].replace_at(rest, replacement)?;
                    Some(Node::Apply(op.clone(), args))
                }
                _ => None,
            },
        }
    }

    pub(crate) fn write_text(&self, out: &mut String) {
        match self {
            Node::Input => out.push('x'),
            Node::Const(v) => v.write_literal(out),
            Node::Apply(op, args) => {
                match op {
                    Op::Builtin(b) => out.push_str(b.name()),
                    Op::Use(r) => {
                        out.push('@');
                        out.push_str(&r.name);
                    }
                }
                out.push('(');
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    arg.write_text(out);
                }
                out.push(')');
            }
        }
    }
}

/// A single-input program.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub root: Node,
    pub name: Option<String>,
}

impl Program {
    pub fn new(root: Node) -> Program {
        Program { root, name: None }
    }

    pub fn named(name: impl Into<String>, root: Node) -> Program {
        Program {
            root,
            name: Some(name.into()),
        }
    }

    pub fn identity() -> Program {
        Program::new(Node::Input)
    }

    /// Operators plus operands, which for an expression tree is the node count.
    pub fn halstead_length(&self) -> usize {
        self.root.node_count()
    }

    /// Canonical compact text; contains no whitespace.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.root.write_text(&mut out);
        out
    }

    pub fn size_bytes(&self) -> usize {
        self.serialize().len()
    }

    /// `self` applied to the output of `inner`: every input reference of
    /// `self` is replaced by `inner`'s root.
    pub fn compose_after(&self, inner: &Program) -> Program {
        Program::new(self.root.substitute_input(&inner.root))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn add_x_1() -> Program {
        Program::new(Node::apply(Builtin::Add, vec![Node::Input, Node::constant(1)]))
    }

    #[test]
    fn halstead_examples() {
        assert_eq!(Program::identity().halstead_length(), 1);
        assert_eq!(add_x_1().halstead_length(), 3);
        let p = Program::new(Node::apply(
            Builtin::Add,
            vec![
                Node::apply(Builtin::Mul, vec![Node::Input, Node::constant(2)]),
                Node::constant(1),
            ],
        ));
        assert_eq!(p.halstead_length(), 5);
    }

    #[test]
    fn serialize_examples() {
        assert_eq!(Program::identity().serialize(), "x");
        assert_eq!(add_x_1().serialize(), "add(x,1)");
        assert_eq!(add_x_1().size_bytes(), 8);
        let p = Program::new(Node::apply(
            Builtin::Concat,
            vec![Node::apply(Builtin::Upper, vec![Node::Input]), Node::constant("!")],
        ));
        assert_eq!(p.serialize(), "concat(upper(x),\"!\")");
        assert_eq!(p.size_bytes(), 20);
        let q = Program::new(Node::apply(
            Builtin::Add,
            vec![
                Node::apply(Builtin::Mul, vec![Node::Input, Node::constant(2)]),
                Node::constant(1),
            ],
        ));
        assert_eq!(q.size_bytes(), 15);
    }

    #[test]
    fn composition_length() {
        let inner = Program::new(Node::apply(Builtin::Mul, vec![Node::Input, Node::constant(2)]));
        let outer = add_x_1();
        let composed = outer.compose_after(&inner);
        assert_eq!(composed.serialize(), "add(mul(x,2),1)");
        assert_eq!(
            composed.halstead_length(),
            outer.halstead_length() + inner.halstead_length() - 1
        );
    }

    #[test]
    fn paths() {
        let p = Program::new(Node::apply(
            Builtin::Add,
            vec![
                Node::apply(Builtin::Mul, vec![Node::Input, Node::constant(2)]),
                Node::constant(1),
            ],
        ));
        assert_eq!(p.root.at(&[0, 1]), Some(&Node::constant(2)));
        assert_eq!(p.root.at(&[1, 0]), None);
        let r = p.root.replace_at(&[0], Node::Input).unwrap();
        assert_eq!(Program::new(r).serialize(), "add(x,1)");
    }
}
