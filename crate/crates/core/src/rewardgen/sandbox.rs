//! A small evaluator for the Python subset that generated reward functions use.
//!
//! Supported: `def`, `return`, `if`/`elif`/`else`, `for`, assignment with
//! tuple unpacking, `pass`, boolean and comparison operators (including
//! chained comparisons, `in`, `not in`, `is`), integer arithmetic, tuples,
//! lists, dicts, subscripts, attribute access, calls, conditional
//! expressions, and generator or list comprehensions. `import` lines are
//! ignored. The only outside world a program sees is the `agent` object
//! built from a [`RecordState`]; there is no I/O and every evaluation runs
//! under a step budget.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::laws::{Attribute, Creature, ItemKind, Occupant};
use crate::records::RecordState;
use crate::world::CellView;

const STEP_BUDGET: u64 = 100_000;
const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SandboxError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{kind}: {message}")]
    Runtime { kind: &'static str, message: String },
    #[error("no function named `{0}`")]
    MissingFunction(String),
    #[error("step budget exhausted")]
    Budget,
}

fn runtime<T>(kind: &'static str, message: impl Into<String>) -> Result<T, SandboxError> {
    Err(SandboxError::Runtime { kind, message: message.into() })
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Int(i64),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

const OPS: [&str; 23] = [
    "==", "!=", "<=", ">=", "//", "**", "+=", "-=", "<", ">", "=", "(", ")", "[", "]", "{", "}", ",", ":", ".", "+", "-", "*",
];

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SandboxError> {
    let mut out = Vec::new();
    let mut indents = vec![0usize];
    let mut depth = 0i32;
    for (i, raw) in src.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = raw.trim_start();
        if depth == 0 {
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if trimmed.starts_with("import ") || (trimmed.starts_with("from ") && trimmed.contains(" import ")) {
                continue;
            }
            let width = raw.len() - trimmed.len();
            if width > *indents.last().unwrap() {
                indents.push(width);
                out.push((Tok::Indent, line_no));
            } else {
                while width < *indents.last().unwrap() {
                    indents.pop();
                    out.push((Tok::Dedent, line_no));
                }
                if width != *indents.last().unwrap() {
                    return Err(SandboxError::Parse { line: line_no, message: "inconsistent indentation".into() });
                }
            }
        }
        let bytes: Vec<char> = trimmed.chars().collect();
        let mut j = 0;
        while j < bytes.len() {
            let c = bytes[j];
            if c == '#' {
                break;
            }
            if c.is_whitespace() || c == '\\' {
                j += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = j;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = bytes[start..j].iter().collect();
                let n = s.parse().map_err(|_| SandboxError::Parse { line: line_no, message: format!("bad number `{s}`") })?;
                out.push((Tok::Int(n), line_no));
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = j;
                while j < bytes.len() && (bytes[j].is_alphanumeric() || bytes[j] == '_') {
                    j += 1;
                }
                out.push((Tok::Name(bytes[start..j].iter().collect()), line_no));
                continue;
            }
            if c == '\'' || c == '"' {
                let triple = j + 2 < bytes.len() && bytes[j + 1] == c && bytes[j + 2] == c;
                if triple {
                    return Err(SandboxError::Parse { line: line_no, message: "multi-line strings are not supported".into() });
                }
                let mut s = String::new();
                j += 1;
                loop {
                    match bytes.get(j) {
                        None => return Err(SandboxError::Parse { line: line_no, message: "unterminated string".into() }),
                        Some(&q) if q == c => break,
                        Some('\\') => {
                            if let Some(&n) = bytes.get(j + 1) {
                                s.push(match n {
                                    'n' => '\n',
                                    't' => '\t',
                                    other => other,
                                });
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                j += 1;
                out.push((Tok::Str(s), line_no));
                continue;
            }
            let rest: String = bytes[j..bytes.len().min(j + 2)].iter().collect();
            let op = OPS.iter().find(|op| rest.starts_with(**op));
            match op {
                Some(op) => {
                    match *op {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => depth -= 1,
                        _ => {}
                    }
                    out.push((Tok::Op(op), line_no));
                    j += op.len();
                }
                None => return Err(SandboxError::Parse { line: line_no, message: format!("unexpected character `{c}`") }),
            }
        }
        if depth == 0 {
            out.push((Tok::Newline, line_no));
        }
    }
    let last = src.lines().count().max(1);
    while indents.len() > 1 {
        indents.pop();
        out.push((Tok::Dedent, last));
    }
    out.push((Tok::Eof, last));
    Ok(out)
}

// ---------------------------------------------------------------- syntax

#[derive(Debug, Clone)]
enum Target {
    Name(String),
    Tuple(Vec<Target>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
    Is,
    IsNot,
}

#[derive(Debug, Clone)]
enum Expr {
    Const(Value),
    Name(String),
    Attr(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Arith(Box<Expr>, &'static str, Box<Expr>),
    Compare(Box<Expr>, Vec<(CmpOp, Expr)>),
    IfElse(Box<Expr>, Box<Expr>, Box<Expr>),
    Tuple(Vec<Expr>),
    List(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    Comprehension { element: Box<Expr>, target: Target, iter: Box<Expr>, filters: Vec<Expr> },
}

#[derive(Debug, Clone)]
enum Stmt {
    Return(Option<Expr>),
    If(Vec<(Expr, Vec<Stmt>)>, Vec<Stmt>),
    For(Target, Expr, Vec<Stmt>),
    Assign(Target, Expr),
    AugAssign(String, &'static str, Expr),
    Expr(Expr),
    Pass,
    Def(Arc<FuncDef>),
}

#[derive(Debug)]
struct FuncDef {
    name: String,
    params: Vec<String>,
    body: Vec<Stmt>,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

type PResult<T> = Result<T, SandboxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn line(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(SandboxError::Parse { line: self.line(), message: message.into() })
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.err(format!("expected `{op}`, found {:?}", self.peek()))
        }
    }

    fn name(&mut self) -> PResult<String> {
        match self.next() {
            Tok::Name(n) => Ok(n),
            other => self.err(format!("expected a name, found {other:?}")),
        }
    }

    fn module(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while *self.peek() != Tok::Eof {
            if matches!(self.peek(), Tok::Newline) {
                self.next();
                continue;
            }
            out.push(self.statement()?);
        }
        Ok(out)
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if *self.peek() != Tok::Newline {
            let s = self.simple()?;
            self.end_line()?;
            return Ok(vec![s]);
        }
        self.next();
        if *self.peek() != Tok::Indent {
            return self.err("expected an indented block");
        }
        self.next();
        let mut out = Vec::new();
        while !matches!(self.peek(), Tok::Dedent | Tok::Eof) {
            out.push(self.statement()?);
        }
        self.next();
        Ok(out)
    }

    fn end_line(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.next();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            other => self.err(format!("unexpected {other:?}")),
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        if self.eat_kw("def") {
            let name = self.name()?;
            self.expect_op("(")?;
            let mut params = Vec::new();
            while !self.eat_op(")") {
                params.push(self.name()?);
                if self.eat_op("=") {
                    return self.err("default arguments are not supported");
                }
                if !self.eat_op(",") {
                    self.expect_op(")")?;
                    break;
                }
            }
            let body = self.block()?;
            return Ok(Stmt::Def(Arc::new(FuncDef { name, params, body })));
        }
        if self.eat_kw("if") {
            let mut arms = vec![(self.expr()?, self.block()?)];
            let mut orelse = Vec::new();
            loop {
                if self.eat_kw("elif") {
                    arms.push((self.expr()?, self.block()?));
                } else if self.eat_kw("else") {
                    orelse = self.block()?;
                    break;
                } else {
                    break;
                }
            }
            return Ok(Stmt::If(arms, orelse));
        }
        if self.eat_kw("for") {
            let target = self.target_list()?;
            if !self.eat_kw("in") {
                return self.err("expected `in`");
            }
            let iter = self.expr_list()?;
            let body = self.block()?;
            return Ok(Stmt::For(target, iter, body));
        }
        for kw in ["while", "with", "try", "class", "lambda", "global", "del", "raise", "yield", "async", "await"] {
            if self.is_kw(kw) {
                return self.err(format!("`{kw}` is not supported"));
            }
        }
        let s = self.simple()?;
        self.end_line()?;
        Ok(s)
    }

    fn simple(&mut self) -> PResult<Stmt> {
        if self.eat_kw("pass") {
            return Ok(Stmt::Pass);
        }
        if self.eat_kw("return") {
            if matches!(self.peek(), Tok::Newline | Tok::Eof | Tok::Dedent) {
                return Ok(Stmt::Return(None));
            }
            return Ok(Stmt::Return(Some(self.expr_list()?)));
        }
        let start = self.pos;
        let lhs = self.expr_list()?;
        if self.eat_op("=") {
            let target = to_target(&lhs).ok_or(SandboxError::Parse { line: self.toks[start].1, message: "cannot assign to expression".into() })?;
            let value = self.expr_list()?;
            return Ok(Stmt::Assign(target, value));
        }
        for op in ["+=", "-="] {
            if self.eat_op(op) {
                let Expr::Name(name) = lhs else {
                    return self.err("augmented assignment needs a name");
                };
                let value = self.expr()?;
                return Ok(Stmt::AugAssign(name, if op == "+=" { "+" } else { "-" }, value));
            }
        }
        Ok(Stmt::Expr(lhs))
    }

    fn target_list(&mut self) -> PResult<Target> {
        let mut items = vec![self.target_atom()?];
        let mut tuple = false;
        while self.eat_op(",") {
            tuple = true;
            if self.is_kw("in") {
                break;
            }
            items.push(self.target_atom()?);
        }
        Ok(if tuple { Target::Tuple(items) } else { items.pop().unwrap() })
    }

    fn target_atom(&mut self) -> PResult<Target> {
        if self.eat_op("(") {
            let t = self.target_list()?;
            self.expect_op(")")?;
            return Ok(t);
        }
        Ok(Target::Name(self.name()?))
    }

    /// An expression or a bare comma-separated tuple.
    fn expr_list(&mut self) -> PResult<Expr> {
        let first = self.expr()?;
        if !self.is_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if matches!(self.peek(), Tok::Newline | Tok::Eof) || self.is_op("=") {
                break;
            }
            items.push(self.expr()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let body = self.or_expr()?;
        if self.eat_kw("if") {
            let cond = self.or_expr()?;
            if !self.eat_kw("else") {
                return self.err("expected `else`");
            }
            let other = self.expr()?;
            return Ok(Expr::IfElse(Box::new(cond), Box::new(body), Box::new(other)));
        }
        Ok(body)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            lhs = Expr::And(Box::new(lhs), Box::new(self.not_expr()?));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "is" => {
                self.next();
                return Some(if self.eat_kw("not") { CmpOp::IsNot } else { CmpOp::Is });
            }
            Tok::Name(n) if n == "not" => {
                if matches!(&self.toks[self.pos + 1].0, Tok::Name(m) if m == "in") {
                    self.next();
                    self.next();
                    return Some(CmpOp::NotIn);
                }
                return None;
            }
            _ => return None,
        };
        self.next();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            rest.push((op, self.additive()?));
        }
        Ok(if rest.is_empty() { lhs } else { Expr::Compare(Box::new(lhs), rest) })
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op("+") {
                "+"
            } else if self.eat_op("-") {
                "-"
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Arith(Box::new(lhs), op, Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op("*") {
                "*"
            } else if self.eat_op("//") {
                "//"
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Arith(Box::new(lhs), op, Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_op("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                e = Expr::Attr(Box::new(e), self.name()?);
            } else if self.eat_op("(") {
                let args = self.call_args()?;
                e = Expr::Call(Box::new(e), args);
            } else if self.eat_op("[") {
                let idx = self.expr_list()?;
                self.expect_op("]")?;
                e = Expr::Index(Box::new(e), Box::new(idx));
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat_op(")") {
            return Ok(args);
        }
        let first = self.expr()?;
        if self.is_kw("for") {
            let comp = self.comprehension(first)?;
            self.expect_op(")")?;
            return Ok(vec![comp]);
        }
        args.push(first);
        while self.eat_op(",") {
            if self.is_op(")") {
                break;
            }
            if matches!(&self.toks[self.pos + 1].0, Tok::Op("=")) {
                return self.err("keyword arguments are not supported");
            }
            args.push(self.expr()?);
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn comprehension(&mut self, element: Expr) -> PResult<Expr> {
        self.next();
        let target = self.target_list()?;
        if !self.eat_kw("in") {
            return self.err("expected `in`");
        }
        let iter = self.or_expr()?;
        let mut filters = Vec::new();
        while self.eat_kw("if") {
            filters.push(self.or_expr()?);
        }
        if self.is_kw("for") {
            return self.err("nested comprehensions are not supported");
        }
        Ok(Expr::Comprehension { element: Box::new(element), target, iter: Box::new(iter), filters })
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.next() {
            Tok::Int(n) => Ok(Expr::Const(Value::Int(n))),
            Tok::Str(mut s) => {
                while let Tok::Str(more) = self.peek().clone() {
                    self.next();
                    s.push_str(&more);
                }
                Ok(Expr::Const(Value::Str(s.into())))
            }
            Tok::Name(n) => Ok(match n.as_str() {
                "True" => Expr::Const(Value::Bool(true)),
                "False" => Expr::Const(Value::Bool(false)),
                "None" => Expr::Const(Value::None),
                _ => Expr::Name(n),
            }),
            Tok::Op("(") => {
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let first = self.expr()?;
                if self.is_kw("for") {
                    let comp = self.comprehension(first)?;
                    self.expect_op(")")?;
                    return Ok(comp);
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.is_op(")") {
                        break;
                    }
                    items.push(self.expr()?);
                }
                self.expect_op(")")?;
                Ok(Expr::Tuple(items))
            }
            Tok::Op("[") => {
                if self.eat_op("]") {
                    return Ok(Expr::List(Vec::new()));
                }
                let first = self.expr()?;
                if self.is_kw("for") {
                    let comp = self.comprehension(first)?;
                    self.expect_op("]")?;
                    return Ok(comp);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.is_op("]") {
                        break;
                    }
                    items.push(self.expr()?);
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            Tok::Op("{") => {
                let mut pairs = Vec::new();
                let mut set_items = Vec::new();
                while !self.eat_op("}") {
                    let k = self.expr()?;
                    if self.eat_op(":") {
                        pairs.push((k, self.expr()?));
                    } else {
                        set_items.push(k);
                    }
                    if !self.eat_op(",") {
                        self.expect_op("}")?;
                        break;
                    }
                }
                if !set_items.is_empty() {
                    if !pairs.is_empty() {
                        return self.err("mixed set and dict display");
                    }
                    return Ok(Expr::List(set_items));
                }
                Ok(Expr::Dict(pairs))
            }
            other => self.err(format!("unexpected {other:?}")),
        }
    }
}

fn to_target(e: &Expr) -> Option<Target> {
    match e {
        Expr::Name(n) => Some(Target::Name(n.clone())),
        Expr::Tuple(items) | Expr::List(items) => items.iter().map(to_target).collect::<Option<Vec<_>>>().map(Target::Tuple),
        _ => None,
    }
}

// ---------------------------------------------------------------- values

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Creature(Creature),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    Any,
    All,
    IsInstance,
    Len,
    Sum,
    Min,
    Max,
    Bool,
    Int,
}

#[derive(Debug, Clone)]
enum Value {
    None,
    Bool(bool),
    Int(i64),
    Str(Arc<str>),
    Tuple(Arc<Vec<Value>>),
    List(Arc<Vec<Value>>),
    Dict(Arc<Vec<(Value, Value)>>),
    Object(Occupant),
    Class(Class),
    Builtin(Builtin),
    Function(Arc<FuncDef>),
    Agent,
    World,
    Position,
    Target,
    Module,
    NearbyMethod,
    DictGet(Arc<Vec<(Value, Value)>>),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Str(_) => "str",
            Value::Tuple(_) => "tuple",
            Value::List(_) => "list",
            Value::Dict(_) => "dict",
            Value::Object(_) => "object",
            Value::Class(_) => "type",
            Value::Builtin(_) | Value::Function(_) | Value::NearbyMethod | Value::DictGet(_) => "function",
            Value::Agent => "Player",
            Value::World => "World",
            Value::Position | Value::Target => "ndarray",
            Value::Module => "module",
        }
    }

    fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(n) => *n != 0,
            Value::Str(s) => !s.is_empty(),
            Value::Tuple(v) | Value::List(v) => !v.is_empty(),
            Value::Dict(v) => !v.is_empty(),
            _ => true,
        }
    }

    fn as_int(&self) -> Option<i64> {
        match self {
            Value::Bool(b) => Some(*b as i64),
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Tuple(x), Value::Tuple(y)) | (Value::List(x), Value::List(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| values_equal(p, q))
        }
        (Value::Object(x), Value::Object(y)) => x == y,
        (Value::Class(x), Value::Class(y)) => x == y,
        (Value::Agent, Value::Agent) | (Value::World, Value::World) => true,
        _ => match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
    }
}

fn is_identical(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        _ => false,
    }
}

// ---------------------------------------------------------------- evaluation

struct Env<'a> {
    state: &'a RecordState,
    globals: HashMap<String, Value>,
    steps: u64,
    depth: usize,
}

enum Flow {
    Next,
    Return(Value),
}

const INVENTORY_KEYS: [&str; 16] = [
    "health", "food", "drink", "energy", "sapling", "wood", "stone", "coal", "iron", "diamond", "wood_pickaxe", "stone_pickaxe",
    "iron_pickaxe", "wood_sword", "stone_sword", "iron_sword",
];

impl Env<'_> {
    fn tick(&mut self) -> Result<(), SandboxError> {
        self.steps += 1;
        if self.steps > STEP_BUDGET {
            Err(SandboxError::Budget)
        } else {
            Ok(())
        }
    }

    fn inventory(&self) -> Value {
        let entries = INVENTORY_KEYS
            .iter()
            .map(|k| {
                let n = match Attribute::from_name(k) {
                    Some(a) => self.state.attributes.get(a) as i64,
                    None => self.state.count_of(ItemKind::from_name(k).expect("known item")) as i64,
                };
                (Value::Str((*k).into()), Value::Int(n))
            })
            .collect();
        Value::Dict(Arc::new(entries))
    }

    fn cell(&self, cell: CellView) -> Value {
        let texture = Value::Str(cell.texture.name().into());
        let obj = cell.occupant.map(Value::Object).unwrap_or(Value::None);
        Value::Tuple(Arc::new(vec![texture, obj]))
    }

    fn nearby(&self) -> Value {
        let mut textures: Vec<Value> = Vec::new();
        let mut objects = Vec::new();
        for c in self.state.nearby.iter().flatten() {
            let name = c.texture.name();
            if !textures.iter().any(|t| matches!(t, Value::Str(s) if &**s == name)) {
                textures.push(Value::Str(name.into()));
            }
            if let Some(o) = c.occupant {
                objects.push(Value::Object(o));
            }
        }
        Value::Tuple(Arc::new(vec![Value::Tuple(Arc::new(textures)), Value::List(Arc::new(objects))]))
    }

    fn lookup(&self, locals: &HashMap<String, Value>, name: &str) -> Result<Value, SandboxError> {
        if let Some(v) = locals.get(name).or_else(|| self.globals.get(name)) {
            return Ok(v.clone());
        }
        let v = match name {
            "any" => Value::Builtin(Builtin::Any),
            "all" => Value::Builtin(Builtin::All),
            "isinstance" => Value::Builtin(Builtin::IsInstance),
            "len" => Value::Builtin(Builtin::Len),
            "sum" => Value::Builtin(Builtin::Sum),
            "min" => Value::Builtin(Builtin::Min),
            "max" => Value::Builtin(Builtin::Max),
            "bool" => Value::Builtin(Builtin::Bool),
            "int" => Value::Builtin(Builtin::Int),
            "objects" | "crafter" | "engine" => Value::Module,
            other => match class_named(other) {
                Some(c) => Value::Class(c),
                None => return runtime("NameError", format!("name '{name}' is not defined")),
            },
        };
        Ok(v)
    }

    fn attr(&self, base: Value, name: &str) -> Result<Value, SandboxError> {
        let missing = |b: &Value| runtime("AttributeError", format!("'{}' object has no attribute '{name}'", b.type_name()));
        match (&base, name) {
            (Value::Agent, "inventory") => Ok(self.inventory()),
            (Value::Agent, "world") => Ok(Value::World),
            (Value::Agent, "pos") => Ok(Value::Position),
            (Value::Agent, "health") => Ok(Value::Int(self.state.attributes.health as i64)),
            (Value::Agent, "sleeping") => Ok(Value::Bool(self.state.is_asleep())),
            (Value::World, "nearby") => Ok(Value::NearbyMethod),
            (Value::Dict(d), "get") => Ok(Value::DictGet(d.clone())),
            (Value::Object(Occupant::Plant { ripe }), "ripe") => Ok(Value::Bool(*ripe)),
            (Value::Object(Occupant::Player { asleep }), "sleeping") => Ok(Value::Bool(*asleep)),
            (Value::Module, n) => match class_named(n) {
                Some(c) => Ok(Value::Class(c)),
                None if matches!(n, "objects" | "engine") => Ok(Value::Module),
                None => missing(&base),
            },
            _ => missing(&base),
        }
    }

    fn index(&self, base: Value, idx: Value) -> Result<Value, SandboxError> {
        match (&base, &idx) {
            (Value::World, Value::Target) => Ok(self.cell(self.state.face)),
            (Value::World, Value::Position) => Ok(self.cell(self.state.nearby[1][1])),
            (Value::World, other) => runtime("TypeError", format!("cannot index world with {}", other.type_name())),
            (Value::Tuple(v) | Value::List(v), _) => {
                let Some(i) = idx.as_int() else {
                    return runtime("TypeError", "indices must be integers");
                };
                let n = v.len() as i64;
                let j = if i < 0 { i + n } else { i };
                if j < 0 || j >= n {
                    return runtime("IndexError", "index out of range");
                }
                Ok(v[j as usize].clone())
            }
            (Value::Dict(d), _) => match d.iter().find(|(k, _)| values_equal(k, &idx)) {
                Some((_, v)) => Ok(v.clone()),
                None => runtime("KeyError", format!("{idx:?}")),
            },
            _ => runtime("TypeError", format!("'{}' object is not subscriptable", base.type_name())),
        }
    }

    fn iterate(&self, v: &Value) -> Result<Vec<Value>, SandboxError> {
        match v {
            Value::Tuple(items) | Value::List(items) => Ok(items.as_ref().clone()),
            Value::Dict(d) => Ok(d.iter().map(|(k, _)| k.clone()).collect()),
            Value::Str(s) => Ok(s.chars().map(|c| Value::Str(c.to_string().into())).collect()),
            Value::Position | Value::Target => Ok(vec![Value::Int(0), Value::Int(0)]),
            other => runtime("TypeError", format!("'{}' object is not iterable", other.type_name())),
        }
    }

    fn contains(&self, container: &Value, item: &Value) -> Result<bool, SandboxError> {
        match container {
            Value::Str(s) => match item {
                Value::Str(needle) => Ok(s.contains(&**needle)),
                other => runtime("TypeError", format!("'in <string>' requires string as left operand, not {}", other.type_name())),
            },
            Value::Dict(d) => Ok(d.iter().any(|(k, _)| values_equal(k, item))),
            Value::Tuple(v) | Value::List(v) => Ok(v.iter().any(|x| values_equal(x, item))),
            other => runtime("TypeError", format!("argument of type '{}' is not iterable", other.type_name())),
        }
    }

    fn bind(&self, locals: &mut HashMap<String, Value>, target: &Target, value: Value) -> Result<(), SandboxError> {
        match target {
            Target::Name(n) => {
                locals.insert(n.clone(), value);
                Ok(())
            }
            Target::Tuple(names) => {
                let items = self.iterate(&value)?;
                if items.len() != names.len() {
                    return runtime(
                        "ValueError",
                        format!("cannot unpack {} values into {} names", items.len(), names.len()),
                    );
                }
                for (t, v) in names.iter().zip(items) {
                    self.bind(locals, t, v)?;
                }
                Ok(())
            }
        }
    }

    fn compare(&self, op: CmpOp, a: &Value, b: &Value) -> Result<bool, SandboxError> {
        let ordered = |a: &Value, b: &Value| -> Result<std::cmp::Ordering, SandboxError> {
            match (a.as_int(), b.as_int(), a, b) {
                (Some(x), Some(y), _, _) => Ok(x.cmp(&y)),
                (_, _, Value::Str(x), Value::Str(y)) => Ok(x.cmp(y)),
                _ => runtime("TypeError", format!("cannot order {} and {}", a.type_name(), b.type_name())),
            }
        };
        Ok(match op {
            CmpOp::Eq => values_equal(a, b),
            CmpOp::Ne => !values_equal(a, b),
            CmpOp::Lt => ordered(a, b)?.is_lt(),
            CmpOp::Le => ordered(a, b)?.is_le(),
            CmpOp::Gt => ordered(a, b)?.is_gt(),
            CmpOp::Ge => ordered(a, b)?.is_ge(),
            CmpOp::In => self.contains(b, a)?,
            CmpOp::NotIn => !self.contains(b, a)?,
            CmpOp::Is => is_identical(a, b),
            CmpOp::IsNot => !is_identical(a, b),
        })
    }

    fn eval(&mut self, locals: &mut HashMap<String, Value>, e: &Expr) -> Result<Value, SandboxError> {
        self.tick()?;
        match e {
            Expr::Const(v) => Ok(v.clone()),
            Expr::Name(n) => self.lookup(locals, n),
            Expr::Attr(base, name) => {
                let b = self.eval(locals, base)?;
                self.attr(b, name)
            }
            Expr::Index(base, idx) => {
                let b = self.eval(locals, base)?;
                let i = self.eval(locals, idx)?;
                self.index(b, i)
            }
            Expr::Call(f, args) => {
                let f = self.eval(locals, f)?;
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(locals, a)?);
                }
                self.call(f, vals)
            }
            Expr::Not(x) => Ok(Value::Bool(!self.eval(locals, x)?.truthy())),
            Expr::Neg(x) => match self.eval(locals, x)?.as_int() {
                Some(n) => Ok(Value::Int(-n)),
                None => runtime("TypeError", "bad operand for unary -"),
            },
            Expr::And(a, b) => {
                let l = self.eval(locals, a)?;
                if !l.truthy() {
                    return Ok(l);
                }
                self.eval(locals, b)
            }
            Expr::Or(a, b) => {
                let l = self.eval(locals, a)?;
                if l.truthy() {
                    return Ok(l);
                }
                self.eval(locals, b)
            }
            Expr::Arith(a, op, b) => {
                let l = self.eval(locals, a)?;
                let r = self.eval(locals, b)?;
                arith(&l, op, &r)
            }
            Expr::Compare(first, rest) => {
                let mut left = self.eval(locals, first)?;
                for (op, rhs) in rest {
                    let right = self.eval(locals, rhs)?;
                    if !self.compare(*op, &left, &right)? {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Ok(Value::Bool(true))
            }
            Expr::IfElse(c, a, b) => {
                if self.eval(locals, c)?.truthy() {
                    self.eval(locals, a)
                } else {
                    self.eval(locals, b)
                }
            }
            Expr::Tuple(items) => Ok(Value::Tuple(Arc::new(self.eval_all(locals, items)?))),
            Expr::List(items) => Ok(Value::List(Arc::new(self.eval_all(locals, items)?))),
            Expr::Dict(pairs) => {
                let mut out = Vec::new();
                for (k, v) in pairs {
                    out.push((self.eval(locals, k)?, self.eval(locals, v)?));
                }
                Ok(Value::Dict(Arc::new(out)))
            }
            Expr::Comprehension { element, target, iter, filters, .. } => {
                let source = self.eval(locals, iter)?;
                let mut scope = locals.clone();
                let mut out = Vec::new();
                'items: for item in self.iterate(&source)? {
                    self.bind(&mut scope, target, item)?;
                    for f in filters {
                        if !self.eval(&mut scope, f)?.truthy() {
                            continue 'items;
                        }
                    }
                    out.push(self.eval(&mut scope, element)?);
                }
                Ok(Value::List(Arc::new(out)))
            }
        }
    }

    fn eval_all(&mut self, locals: &mut HashMap<String, Value>, items: &[Expr]) -> Result<Vec<Value>, SandboxError> {
        items.iter().map(|e| self.eval(locals, e)).collect()
    }

    fn call(&mut self, f: Value, args: Vec<Value>) -> Result<Value, SandboxError> {
        let arity = |n: usize| -> Result<(), SandboxError> {
            if args.len() == n {
                Ok(())
            } else {
                runtime("TypeError", format!("expected {n} arguments, got {}", args.len()))
            }
        };
        match f {
            Value::Builtin(b) => match b {
                Builtin::Any | Builtin::All => {
                    arity(1)?;
                    let items = self.iterate(&args[0])?;
                    Ok(Value::Bool(if b == Builtin::Any { items.iter().any(Value::truthy) } else { items.iter().all(Value::truthy) }))
                }
                Builtin::IsInstance => {
                    arity(2)?;
                    let classes = match &args[1] {
                        Value::Tuple(v) => v.as_ref().clone(),
                        other => vec![other.clone()],
                    };
                    let mut hit = false;
                    for c in &classes {
                        match c {
                            Value::Class(Class::Creature(k)) => hit |= matches!(&args[0], Value::Object(o) if o.kind() == *k),
                            other => return runtime("TypeError", format!("isinstance() arg 2 must be a type, not {}", other.type_name())),
                        }
                    }
                    Ok(Value::Bool(hit))
                }
                Builtin::Len => {
                    arity(1)?;
                    match &args[0] {
                        Value::Dict(d) => Ok(Value::Int(d.len() as i64)),
                        other => Ok(Value::Int(self.iterate(other)?.len() as i64)),
                    }
                }
                Builtin::Sum => {
                    arity(1)?;
                    let mut total = 0;
                    for v in self.iterate(&args[0])? {
                        total += v.as_int().map_or_else(|| runtime("TypeError", "sum of non-numbers"), Ok)?;
                    }
                    Ok(Value::Int(total))
                }
                Builtin::Min | Builtin::Max => {
                    let items = if args.len() == 1 { self.iterate(&args[0])? } else { args.clone() };
                    let nums: Option<Vec<i64>> = items.iter().map(Value::as_int).collect();
                    let nums = nums.filter(|n| !n.is_empty()).map_or_else(|| runtime("ValueError", "min/max of empty or non-numeric"), Ok)?;
                    Ok(Value::Int(if b == Builtin::Min { *nums.iter().min().unwrap() } else { *nums.iter().max().unwrap() }))
                }
                Builtin::Bool => {
                    arity(1)?;
                    Ok(Value::Bool(args[0].truthy()))
                }
                Builtin::Int => {
                    arity(1)?;
                    args[0].as_int().map(Value::Int).map_or_else(|| runtime("TypeError", "int() of non-number"), Ok)
                }
            },
            Value::NearbyMethod => {
                arity(2)?;
                Ok(self.nearby())
            }
            Value::DictGet(d) => {
                if args.is_empty() || args.len() > 2 {
                    return runtime("TypeError", "get expected 1 or 2 arguments");
                }
                Ok(d.iter().find(|(k, _)| values_equal(k, &args[0])).map(|(_, v)| v.clone()).unwrap_or_else(|| args.get(1).cloned().unwrap_or(Value::None)))
            }
            Value::Function(def) => {
                arity(def.params.len())?;
                if self.depth >= MAX_DEPTH {
                    return runtime("RecursionError", "maximum recursion depth exceeded");
                }
                let mut locals: HashMap<String, Value> = def.params.iter().cloned().zip(args).collect();
                self.depth += 1;
                let flow = self.exec_block(&mut locals, &def.body);
                self.depth -= 1;
                match flow? {
                    Flow::Return(v) => Ok(v),
                    Flow::Next => Ok(Value::None),
                }
            }
            other => runtime("TypeError", format!("'{}' object is not callable", other.type_name())),
        }
    }

    fn exec_block(&mut self, locals: &mut HashMap<String, Value>, body: &[Stmt]) -> Result<Flow, SandboxError> {
        for s in body {
            if let Flow::Return(v) = self.exec(locals, s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn exec(&mut self, locals: &mut HashMap<String, Value>, s: &Stmt) -> Result<Flow, SandboxError> {
        self.tick()?;
        match s {
            Stmt::Return(e) => Ok(Flow::Return(match e {
                Some(e) => self.eval(locals, e)?,
                None => Value::None,
            })),
            Stmt::If(arms, orelse) => {
                for (cond, body) in arms {
                    if self.eval(locals, cond)?.truthy() {
                        return self.exec_block(locals, body);
                    }
                }
                self.exec_block(locals, orelse)
            }
            Stmt::For(target, iter, body) => {
                let source = self.eval(locals, iter)?;
                for item in self.iterate(&source)? {
                    self.bind(locals, target, item)?;
                    if let Flow::Return(v) = self.exec_block(locals, body)? {
                        return Ok(Flow::Return(v));
                    }
                }
                Ok(Flow::Next)
            }
            Stmt::Assign(target, e) => {
                let v = self.eval(locals, e)?;
                self.bind(locals, target, v)?;
                Ok(Flow::Next)
            }
            Stmt::AugAssign(name, op, e) => {
                let cur = self.lookup(locals, name)?;
                let rhs = self.eval(locals, e)?;
                locals.insert(name.clone(), arith(&cur, op, &rhs)?);
                Ok(Flow::Next)
            }
            Stmt::Expr(e) => {
                self.eval(locals, e)?;
                Ok(Flow::Next)
            }
            Stmt::Pass => Ok(Flow::Next),
            Stmt::Def(def) => {
                locals.insert(def.name.clone(), Value::Function(def.clone()));
                Ok(Flow::Next)
            }
        }
    }
}

fn class_named(name: &str) -> Option<Class> {
    Some(match name {
        "Zombie" => Class::Creature(Creature::Zombie),
        "Skeleton" => Class::Creature(Creature::Skeleton),
        "Plant" => Class::Creature(Creature::Plant),
        "Cow" => Class::Creature(Creature::Cow),
        "Player" => Class::Creature(Creature::Player),
        _ => return None,
    })
}

fn arith(l: &Value, op: &str, r: &Value) -> Result<Value, SandboxError> {
    match (l.as_int(), r.as_int()) {
        (Some(a), Some(b)) => Ok(Value::Int(match op {
            "+" => a.saturating_add(b),
            "-" => a.saturating_sub(b),
            "*" => a.saturating_mul(b),
            _ => {
                if b == 0 {
                    return runtime("ZeroDivisionError", "integer division by zero");
                }
                a.div_euclid(b)
            }
        })),
        _ => match (l, op, r) {
            (Value::Str(a), "+", Value::Str(b)) => Ok(Value::Str(format!("{a}{b}").into())),
            _ => runtime("TypeError", format!("unsupported operand types for {op}: {} and {}", l.type_name(), r.type_name())),
        },
    }
}

/// A parsed program: the top-level function definitions of the source.
#[derive(Debug, Clone)]
pub struct Program {
    functions: HashMap<String, Arc<FuncDef>>,
}

impl Program {
    pub fn parse(source: &str) -> Result<Program, SandboxError> {
        let toks = lex(source)?;
        let stmts = Parser { toks, pos: 0 }.module()?;
        let mut functions = HashMap::new();
        for s in stmts {
            match s {
                Stmt::Def(def) => {
                    functions.insert(def.name.clone(), def);
                }
                Stmt::Expr(Expr::Const(_)) | Stmt::Pass => {}
                _ => return Err(SandboxError::Parse { line: 0, message: "only function definitions are allowed at top level".into() }),
            }
        }
        Ok(Program { functions })
    }

    pub fn has_function(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    /// Calls `name(agent, target)` against `state` and returns the truth of its result.
    pub fn call_predicate(&self, name: &str, state: &RecordState) -> Result<bool, SandboxError> {
        let def = self.functions.get(name).ok_or_else(|| SandboxError::MissingFunction(name.to_string()))?;
        let globals = self.functions.iter().map(|(k, v)| (k.clone(), Value::Function(v.clone()))).collect();
        let mut env = Env { state, globals, steps: 0, depth: 0 };
        let args = match def.params.len() {
            2 => vec![Value::Agent, Value::Target],
            1 => vec![Value::Agent],
            n => return runtime("TypeError", format!("`{name}` takes {n} parameters, expected (agent, target)")),
        };
        Ok(env.call(Value::Function(def.clone()), args)?.truthy())
    }
}
