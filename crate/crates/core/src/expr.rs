//! A small whitelisted expression language for functions supplied in
//! configuration files, e.g. `"sech(x) - 2*sech(x)^3"` or `"exp(-10*(x-0.5)^2)"`.
//!
//! Expressions evaluate in complex arithmetic. Recognised constants are `pi`,
//! `e` and the imaginary unit `i`; every other identifier must be one of the
//! variables declared when the expression is parsed.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const FUNCTIONS: &[&str] = &[
    "sin", "cos", "tan", "exp", "log", "sqrt", "sech", "tanh", "cosh", "sinh", "atan", "abs",
    "conj", "re", "im",
];

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(Complex64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(usize, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression with its source text and variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    vars: Vec<String>,
    root: Node,
}

impl Expr {
    /// Parses `source` in the variables `vars` (in evaluation order).
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            vars,
            source,
        };
        let root = p.expr()?;
        if p.pos != tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self {
            source: source.trim().to_string(),
            vars: vars.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    /// Polynomial `c0 + c1·v + c2·v² + …` in the single variable `var`.
    pub fn polynomial(coeffs: &[f64], var: &str) -> Self {
        let mut terms = Vec::new();
        for (k, c) in coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            terms.push(match k {
                0 => format!("({c})"),
                1 => format!("({c})*{var}"),
                _ => format!("({c})*{var}^{k}"),
            });
        }
        let src = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
        Self::parse(&src, &[var]).expect("generated polynomial is well formed")
    }

    pub fn constant(c: f64) -> Self {
        Self::parse(&format!("({c})"), &[]).expect("constant is well formed")
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Evaluates with `args` bound to the declared variables in order.
    pub fn eval(&self, args: &[Complex64]) -> Complex64 {
        assert_eq!(args.len(), self.vars.len(), "expression argument count");
        eval(&self.root, args)
    }

    pub fn eval_real(&self, args: &[f64]) -> f64 {
        let z: Vec<Complex64> = args.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.eval(&z).re
    }

    /// Rebinds the expression to a new variable list; every variable used
    /// must appear in `vars`.
    pub fn with_vars(&self, vars: &[&str]) -> Result<Self> {
        Self::parse(&self.source, vars)
    }

    /// Symbolic derivative with respect to variable `k`.
    pub fn derivative(&self, k: usize) -> Self {
        let root = simplify(diff(&self.root, k));
        Self {
            source: format!("d/d{}({})", self.vars[k], self.source),
            vars: self.vars.clone(),
            root,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            expr: &'a str,
            vars: &'a [String],
        }
        Repr {
            expr: &self.source,
            vars: &self.vars,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            expr: String,
            vars: Vec<String>,
        }
        let r = Repr::deserialize(d)?;
        let vars: Vec<&str> = r.vars.iter().map(|s| s.as_str()).collect();
        Expr::parse(&r.expr, &vars).map_err(serde::de::Error::custom)
    }
}

fn eval(n: &Node, args: &[Complex64]) -> Complex64 {
    match n {
        Node::Num(c) => *c,
        Node::Var(k) => args[*k],
        Node::Neg(a) => -eval(a, args),
        Node::Bin(op, a, b) => {
            let x = eval(a, args);
            match op {
                Op::Add => x + eval(b, args),
                Op::Sub => x - eval(b, args),
                Op::Mul => x * eval(b, args),
                Op::Div => x / eval(b, args),
                Op::Pow => pow(x, eval(b, args)),
            }
        }
        Node::Call(f, a) => call(*f, eval(a, args)),
    }
}

fn pow(x: Complex64, y: Complex64) -> Complex64 {
    if y.im == 0.0 && y.re.fract() == 0.0 && y.re.abs() <= 64.0 {
        x.powi(y.re as i32)
    } else if x.im == 0.0 && y.im == 0.0 && x.re >= 0.0 {
        Complex64::new(x.re.powf(y.re), 0.0)
    } else {
        x.powc(y)
    }
}

fn call(f: usize, z: Complex64) -> Complex64 {
    let real = z.im == 0.0;
    match FUNCTIONS[f] {
        "sin" if real => z.re.sin().into(),
        "sin" => z.sin(),
        "cos" if real => z.re.cos().into(),
        "cos" => z.cos(),
        "tan" if real => z.re.tan().into(),
        "tan" => z.tan(),
        "exp" if real => z.re.exp().into(),
        "exp" => z.exp(),
        "log" => z.ln(),
        "sqrt" if real && z.re >= 0.0 => z.re.sqrt().into(),
        "sqrt" => z.sqrt(),
        "sech" if real => (1.0 / z.re.cosh()).into(),
        "sech" => 1.0 / z.cosh(),
        "tanh" if real => z.re.tanh().into(),
        "tanh" => z.tanh(),
        "cosh" if real => z.re.cosh().into(),
        "cosh" => z.cosh(),
        "sinh" if real => z.re.sinh().into(),
        "sinh" => z.sinh(),
        "atan" if real => z.re.atan().into(),
        "atan" => z.atan(),
        "abs" => z.norm().into(),
        "conj" => z.conj(),
        "re" => z.re.into(),
        "im" => z.im.into(),
        _ => unreachable!("function table and dispatch disagree"),
    }
}

fn num(x: f64) -> Box<Node> {
    Box::new(Node::Num(Complex64::new(x, 0.0)))
}

fn func(name: &str, a: Node) -> Node {
    let k = FUNCTIONS.iter().position(|f| *f == name).expect("known function");
    Node::Call(k, Box::new(a))
}

fn mul(a: Node, b: Node) -> Node {
    Node::Bin(Op::Mul, Box::new(a), Box::new(b))
}

fn diff(n: &Node, k: usize) -> Node {
    use Node::*;
    match n {
        Num(_) => *num(0.0),
        Var(j) => *num(if *j == k { 1.0 } else { 0.0 }),
        Neg(a) => Neg(Box::new(diff(a, k))),
        Bin(op, a, b) => {
            let (da, db) = (diff(a, k), diff(b, k));
            match op {
                Op::Add => Bin(Op::Add, Box::new(da), Box::new(db)),
                Op::Sub => Bin(Op::Sub, Box::new(da), Box::new(db)),
                Op::Mul => Bin(
                    Op::Add,
                    Box::new(mul(da, (**b).clone())),
                    Box::new(mul((**a).clone(), db)),
                ),
                Op::Div => Bin(
                    Op::Div,
                    Box::new(Bin(
                        Op::Sub,
                        Box::new(mul(da, (**b).clone())),
                        Box::new(mul((**a).clone(), db)),
                    )),
                    Box::new(Bin(Op::Pow, b.clone(), num(2.0))),
                ),
                Op::Pow => {
                    if let Num(p) = **b {
                        // d(a^p) = p a^(p-1) a'
                        mul(
                            mul(Num(p), Bin(Op::Pow, a.clone(), Box::new(Num(p - 1.0)))),
                            da,
                        )
                    } else {
                        // d(a^b) = a^b (b' ln a + b a'/a)
                        mul(
                            n.clone(),
                            Bin(
                                Op::Add,
                                Box::new(mul(db, func("log", (**a).clone()))),
                                Box::new(Bin(
                                    Op::Div,
                                    Box::new(mul((**b).clone(), da)),
                                    a.clone(),
                                )),
                            ),
                        )
                    }
                }
            }
        }
        Call(f, a) => {
            let a0 = (**a).clone();
            let da = diff(a, k);
            let outer = match FUNCTIONS[*f] {
                "sin" => func("cos", a0),
                "cos" => Neg(Box::new(func("sin", a0))),
                "tan" => Bin(Op::Pow, Box::new(func("cos", a0)), num(-2.0)),
                "exp" => func("exp", a0),
                "log" => Bin(Op::Div, num(1.0), Box::new(a0)),
                "sqrt" => Bin(Op::Div, num(0.5), Box::new(func("sqrt", a0))),
                "sech" => Neg(Box::new(mul(func("sech", a0.clone()), func("tanh", a0)))),
                "tanh" => Bin(Op::Pow, Box::new(func("sech", a0)), num(2.0)),
                "cosh" => func("sinh", a0),
                "sinh" => func("cosh", a0),
                "atan" => Bin(
                    Op::Div,
                    num(1.0),
                    Box::new(Bin(Op::Add, num(1.0), Box::new(Bin(Op::Pow, Box::new(a0), num(2.0))))),
                ),
                // not holomorphic; treated as real-variable derivatives
                "abs" => Bin(Op::Div, Box::new(a0.clone()), Box::new(func("abs", a0))),
                "conj" | "re" => *num(1.0),
                "im" => *num(0.0),
                _ => unreachable!(),
            };
            mul(outer, da)
        }
    }
}

fn is_num(n: &Node, v: f64) -> bool {
    matches!(n, Node::Num(c) if c.im == 0.0 && c.re == v)
}

fn simplify(n: Node) -> Node {
    use Node::*;
    match n {
        Neg(a) => {
            let a = simplify(*a);
            if is_num(&a, 0.0) {
                a
            } else {
                Neg(Box::new(a))
            }
        }
        Bin(op, a, b) => {
            let (a, b) = (simplify(*a), simplify(*b));
            match op {
                Op::Mul if is_num(&a, 0.0) || is_num(&b, 0.0) => *num(0.0),
                Op::Mul if is_num(&a, 1.0) => b,
                Op::Mul if is_num(&b, 1.0) => a,
                Op::Add if is_num(&a, 0.0) => b,
                Op::Add | Op::Sub if is_num(&b, 0.0) => a,
                Op::Pow if is_num(&b, 1.0) => a,
                Op::Pow if is_num(&b, 0.0) => *num(1.0),
                _ => Bin(op, Box::new(a), Box::new(b)),
            }
        }
        Call(f, a) => Call(f, Box::new(simplify(*a))),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::Expression {
                expr: s.to_string(),
                reason: format!("bad number `{text}`"),
            })?;
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Expression {
                expr: s.to_string(),
                reason: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Tok],
    pos: usize,
    vars: &'a [&'a str],
    source: &'a str,
}

impl Parser<'_> {
    fn error(&self, reason: &str) -> Error {
        Error::Expression {
            expr: self.source.to_string(),
            reason: format!("{reason} at token {}", self.pos),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(Complex64::new(v, 0.0)))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("missing `)`"));
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(k) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(k));
                }
                if let Some(k) = FUNCTIONS.iter().position(|f| *f == name) {
                    if !self.eat('(') {
                        return Err(self.error(&format!("`{name}` must be called")));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.error("missing `)`"));
                    }
                    return Ok(Node::Call(k, Box::new(arg)));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Num(Complex64::new(std::f64::consts::PI, 0.0))),
                    "e" => Ok(Node::Num(Complex64::new(std::f64::consts::E, 0.0))),
                    "i" => Ok(Node::Num(Complex64::new(0.0, 1.0))),
                    _ => Err(self.error(&format!("unknown identifier `{name}`"))),
                }
            }
            _ => Err(self.error("expected a value")),
        }
    }
}
