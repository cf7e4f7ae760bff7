//! Right-hand-side expressions in t and y.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ('+' | '-') factor | base ('^' factor)?
//! base   := number | 't' | 'y' index? | func '(' expr ')' | '(' expr ')'
//! func   := ln | exp | sin | cos | tanh | abs
//! ```

use thiserror::Error;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown function '{name}' at line {line}, column {column}")]
    Arity { name: String, line: usize, column: usize },
    #[error("'{name}' at line {line}, column {column} is not a component of a {dim}-dimensional state")]
    Index { name: String, dim: usize, line: usize, column: usize },
    #[error("expression is not finite at t = {t}")]
    Eval { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Ln,
    Exp,
    Sin,
    Cos,
    Tanh,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "ln" => Self::Ln,
            "exp" => Self::Exp,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "tanh" => Self::Tanh,
            "abs" => Self::Abs,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Ln => x.ln(),
            Self::Exp => x.exp(),
            Self::Sin => x.sin(),
            Self::Cos => x.cos(),
            Self::Tanh => x.tanh(),
            Self::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Position of a node in the source, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    T,
    /// Zero-based state component.
    Y(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>, Pos),
}

impl Node {
    fn eval(&self, t: f64, y: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::T => t,
            Node::Y(i) => y[*i],
            Node::Neg(a) => -a.eval(t, y),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(t, y), b.eval(t, y));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Node::Call(f, a, _) => f.apply(a.eval(t, y)),
        }
    }

    fn uses_state(&self) -> bool {
        match self {
            Node::Num(_) | Node::T => false,
            Node::Y(_) => true,
            Node::Neg(a) | Node::Call(_, a, _) => a.uses_state(),
            Node::Bin(_, a, b) => a.uses_state() || b.uses_state(),
        }
    }
}

/// A parsed scalar expression f(t, y).
#[derive(Debug, Clone, PartialEq)]
pub struct RhsExpression {
    pub source: String,
    pub root: Node,
    pub dim: usize,
}

impl RhsExpression {
    /// Value at (t, y); NaN or infinities become [`ExprError::Eval`].
    pub fn eval(&self, t: f64, y: &[f64]) -> Result<f64, ExprError> {
        let v = self.eval_raw(t, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Eval { t })
        }
    }

    /// Value without the finiteness check. `y` must have `dim` entries.
    pub fn eval_raw(&self, t: f64, y: &[f64]) -> f64 {
        self.root.eval(t, y)
    }

    pub fn uses_state(&self) -> bool {
        self.root.uses_state()
    }

    pub fn is_zero(&self) -> bool {
        self.root == Node::Num(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn syntax(&self, pos: Pos, message: impl Into<String>) -> ExprError {
        ExprError::Syntax { line: pos.line, column: pos.column, message: message.into() }
    }

    fn next_token(&mut self) -> Result<(Tok, Pos), ExprError> {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
        let pos = Pos { line: self.line, column: self.column };
        let Some(&c) = self.chars.peek() else {
            return Ok((Tok::End, pos));
        };
        if c.is_ascii_digit() || c == '.' {
            let mut text = String::new();
            while self.chars.peek().is_some_and(|c| c.is_ascii_digit() || *c == '.') {
                text.push(self.bump().unwrap_or_default());
            }
            if self.chars.peek().is_some_and(|c| *c == 'e' || *c == 'E') {
                text.push(self.bump().unwrap_or_default());
                if self.chars.peek().is_some_and(|c| *c == '+' || *c == '-') {
                    text.push(self.bump().unwrap_or_default());
                }
                while self.chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                    text.push(self.bump().unwrap_or_default());
                }
            }
            return match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok((Tok::Num(v), pos)),
                _ => Err(self.syntax(pos, format!("malformed number '{text}'"))),
            };
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while self.chars.peek().is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
                text.push(self.bump().unwrap_or_default());
            }
            return Ok((Tok::Ident(text), pos));
        }
        if "+-*/^()".contains(c) {
            self.bump();
            return Ok((Tok::Op(c), pos));
        }
        Err(self.syntax(pos, format!("unexpected character '{}'", c.escape_default())))
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    dim: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn advance(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        let p = self.pos();
        ExprError::Syntax { line: p.line, column: p.column, message: message.into() }
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("expression is nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.advance();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.advance();
            let rhs = self.factor()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        self.enter()?;
        let node = match *self.peek() {
            Tok::Op('-') => {
                self.advance();
                Node::Neg(Box::new(self.factor()?))
            }
            Tok::Op('+') => {
                self.advance();
                self.factor()?
            }
            _ => {
                let base = self.base()?;
                if *self.peek() == Tok::Op('^') {
                    self.advance();
                    Node::Bin(BinOp::Pow, Box::new(base), Box::new(self.factor()?))
                } else {
                    base
                }
            }
        };
        self.depth -= 1;
        Ok(node)
    }

    fn base(&mut self) -> Result<Node, ExprError> {
        let (tok, pos) = self.advance();
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(name, pos),
            Tok::End => {
                Err(ExprError::Syntax { line: pos.line, column: pos.column, message: "unexpected end of input".into() })
            }
            Tok::Op(c) => {
                Err(ExprError::Syntax { line: pos.line, column: pos.column, message: format!("unexpected '{c}'") })
            }
        }
    }

    fn expect_close(&mut self) -> Result<(), ExprError> {
        if *self.peek() != Tok::Op(')') {
            return Err(self.error("expected ')'"));
        }
        self.advance();
        Ok(())
    }

    fn ident(&mut self, name: String, pos: Pos) -> Result<Node, ExprError> {
        if name == "t" {
            return Ok(Node::T);
        }
        if let Some(digits) = name.strip_prefix('y') {
            let index_error =
                || ExprError::Index { name: name.clone(), dim: self.dim, line: pos.line, column: pos.column };
            if digits.is_empty() {
                return if self.dim == 1 { Ok(Node::Y(0)) } else { Err(index_error()) };
            }
            if digits.bytes().all(|b| b.is_ascii_digit()) {
                return match digits.parse::<usize>() {
                    Ok(k) if k >= 1 && k <= self.dim => Ok(Node::Y(k - 1)),
                    _ => Err(index_error()),
                };
            }
        }
        if *self.peek() != Tok::Op('(') {
            return Err(ExprError::Syntax {
                line: pos.line,
                column: pos.column,
                message: format!("unknown identifier '{name}'"),
            });
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(ExprError::Arity { name, line: pos.line, column: pos.column });
        };
        self.advance();
        let arg = self.expr()?;
        self.expect_close()?;
        Ok(Node::Call(func, Box::new(arg), pos))
    }
}

/// Parses `source` as a function of t and the `dim` state components.
pub fn parse_rhs(source: &str, dim: usize) -> Result<RhsExpression, ExprError> {
    let mut lexer = Lexer { chars: source.chars().peekable(), line: 1, column: 1 };
    let mut toks = Vec::new();
    loop {
        let (tok, pos) = lexer.next_token()?;
        let end = tok == Tok::End;
        toks.push((tok, pos));
        if end {
            break;
        }
    }
    let mut parser = Parser { toks, at: 0, dim, depth: 0 };
    if *parser.peek() == Tok::End {
        return Err(parser.error("empty expression"));
    }
    let root = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(RhsExpression { source: source.to_string(), root, dim })
}
