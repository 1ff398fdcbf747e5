//! A small expression language for the coefficient conditions stored in `tables/`.
//!
//! Arithmetic is exact over Q; `v(x)` may return `inf`. A condition is an expression of
//! boolean value: comparisons, `in {..}`, `!`, `,` (and), `or`, `true`, or `imT(x)`.

use std::cell::OnceCell;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::padic::{
    artin_schreier_in_image, ceil, count_cubic_roots_mod_p, legendre, mod_inverse, valuation,
    Prime, Rational, Valuation,
};
use crate::weierstrass::{Slot, WeierstrassModel};
use crate::KodairaType;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    A1,
    A2,
    A3,
    A4,
    A6,
    D,
    N,
    P,
    Disc,
    C,
    Delta,
    F,
}

impl Var {
    const ALL: [(Var, &'static str); 12] = [
        (Var::A1, "a1"),
        (Var::A2, "a2"),
        (Var::A3, "a3"),
        (Var::A4, "a4"),
        (Var::A6, "a6"),
        (Var::D, "d"),
        (Var::N, "n"),
        (Var::P, "p"),
        (Var::Disc, "disc"),
        (Var::C, "c"),
        (Var::Delta, "delta"),
        (Var::F, "f"),
    ];

    fn name(self) -> &'static str {
        Var::ALL.iter().find(|(v, _)| *v == self).unwrap().1
    }

    fn from_name(s: &str) -> Option<Var> {
        Var::ALL.iter().find(|(_, n)| *n == s).map(|(v, _)| *v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    /// p-adic valuation.
    V,
    /// Legendre symbol of a unit.
    Leg,
    /// Membership of the residue in the image of α ↦ α² + α.
    ImT,
    /// Number of roots in F_p of X³ + c2X² + c1X + c0.
    Roots,
    /// Residue of an integral element modulo m.
    Res,
}

impl Func {
    const ALL: [(Func, &'static str, usize); 5] = [
        (Func::V, "v", 1),
        (Func::Leg, "leg", 1),
        (Func::ImT, "imT", 1),
        (Func::Roots, "roots", 3),
        (Func::Res, "res", 2),
    ];

    fn name(self) -> &'static str {
        Func::ALL.iter().find(|(f, _, _)| *f == self).unwrap().1
    }

    fn arity(self) -> usize {
        Func::ALL.iter().find(|(f, _, _)| *f == self).unwrap().2
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL
            .iter()
            .find(|(_, n, _)| *n == s)
            .map(|(f, _, _)| *f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Ge,
    Le,
    Gt,
    Lt,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigInt),
    Inf,
    True,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    /// The auxiliary polynomial with the given index for the current row family.
    Poly(u32),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    In(Box<Expr>, Vec<Expr>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

/// Result of evaluating an expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(Rational),
    Inf,
    Bool(bool),
}

impl Value {
    fn num(self) -> Result<Rational> {
        match self {
            Value::Num(x) => Ok(x),
            other => Err(Error::Table(format!("expected a number, got {other:?}"))),
        }
    }

    fn boolean(self) -> Result<bool> {
        match self {
            Value::Bool(b) => Ok(b),
            other => Err(Error::Table(format!("expected a condition, got {other:?}"))),
        }
    }

    /// Ordering key for comparisons: numbers below `inf`.
    fn ext(&self) -> Result<(bool, Rational)> {
        match self {
            Value::Num(x) => Ok((false, x.clone())),
            Value::Inf => Ok((true, Rational::zero())),
            Value::Bool(_) => Err(Error::Table("cannot compare a condition".into())),
        }
    }
}

/// Evaluator for the auxiliary polynomial `P[j]`.
pub type PolyFn = dyn Fn(u32, &Env) -> Result<Rational>;

/// Bindings for evaluation. Coefficients refer to `model`; `polys` resolves `P[j]`.
#[derive(Clone)]
pub struct Env<'a> {
    pub p: &'a Prime,
    pub model: &'a WeierstrassModel,
    pub d: Option<Rational>,
    pub n: Option<i64>,
    pub c: Option<i64>,
    pub delta: Option<i64>,
    pub f: Option<i64>,
    pub polys: Option<&'a PolyFn>,
    disc: OnceCell<Rational>,
    vals: OnceCell<[Valuation; 5]>,
}

impl<'a> Env<'a> {
    pub fn new(p: &'a Prime, model: &'a WeierstrassModel) -> Self {
        Env {
            p,
            model,
            d: None,
            n: None,
            c: None,
            delta: None,
            f: None,
            polys: None,
            disc: OnceCell::new(),
            vals: OnceCell::new(),
        }
    }

    pub fn with_n(mut self, n: Option<i64>) -> Self {
        self.n = n;
        self
    }

    pub fn with_d(mut self, d: Rational) -> Self {
        self.d = Some(d);
        self
    }

    /// Same bindings over another model.
    pub fn rebind<'b>(&'b self, model: &'b WeierstrassModel) -> Env<'b> {
        Env {
            p: self.p,
            model,
            d: self.d.clone(),
            n: self.n,
            c: self.c,
            delta: self.delta,
            f: self.f,
            polys: self.polys,
            disc: OnceCell::new(),
            vals: OnceCell::new(),
        }
    }

    pub fn discriminant(&self) -> &Rational {
        self.disc.get_or_init(|| self.model.discriminant())
    }

    /// Valuations of a1, a2, a3, a4, a6, computed once.
    pub fn coeff_valuations(&self) -> &[Valuation; 5] {
        self.vals
            .get_or_init(|| self.model.coeffs().map(|a| valuation(a, self.p)))
    }

    fn var(&self, v: Var) -> Result<Rational> {
        let int = |x: Option<i64>, name: &str| {
            x.map(|k| Rational::from_integer(k.into()))
                .ok_or_else(|| Error::Table(format!("variable {name} is unbound here")))
        };
        let m = self.model;
        Ok(match v {
            Var::A1 => m.a1.clone(),
            Var::A2 => m.a2.clone(),
            Var::A3 => m.a3.clone(),
            Var::A4 => m.a4.clone(),
            Var::A6 => m.a6.clone(),
            Var::D => self
                .d
                .clone()
                .ok_or_else(|| Error::Table("variable d is unbound here".into()))?,
            Var::P => Rational::from_integer(self.p.value().clone()),
            Var::Disc => self.disc.get_or_init(|| m.discriminant()).clone(),
            Var::N => int(self.n, "n")?,
            Var::C => int(self.c, "c")?,
            Var::Delta => int(self.delta, "delta")?,
            Var::F => int(self.f, "f")?,
        })
    }
}

impl Expr {
    pub fn eval(&self, env: &Env) -> Result<Value> {
        Ok(match self {
            Expr::Num(k) => Value::Num(Rational::from_integer(k.clone())),
            Expr::Inf => Value::Inf,
            Expr::True => Value::Bool(true),
            Expr::Var(v) => Value::Num(env.var(*v)?),
            Expr::Neg(e) => match e.eval(env)? {
                Value::Num(x) => Value::Num(-x),
                other => return Err(Error::Table(format!("cannot negate {other:?}"))),
            },
            Expr::Bin(op, l, r) => bin(*op, l.eval(env)?, r.eval(env)?)?,
            Expr::Call(f, args) => call(*f, args, env)?,
            Expr::Poly(j) => {
                let polys = env
                    .polys
                    .ok_or_else(|| Error::Table(format!("P[{j}] is unavailable here")))?;
                Value::Num(polys(*j, env)?)
            }
            Expr::Cmp(op, l, r) => {
                let (a, b) = (l.eval(env)?.ext()?, r.eval(env)?.ext()?);
                let ord = a.cmp(&b);
                Value::Bool(match op {
                    CmpOp::Eq => ord.is_eq(),
                    CmpOp::Ne => ord.is_ne(),
                    CmpOp::Ge => ord.is_ge(),
                    CmpOp::Le => ord.is_le(),
                    CmpOp::Gt => ord.is_gt(),
                    CmpOp::Lt => ord.is_lt(),
                })
            }
            Expr::In(e, set) => {
                let x = e.eval(env)?.ext()?;
                let mut hit = false;
                for s in set {
                    if s.eval(env)?.ext()? == x {
                        hit = true;
                        break;
                    }
                }
                Value::Bool(hit)
            }
            Expr::Not(e) => Value::Bool(!e.eval(env)?.boolean()?),
            Expr::And(parts) => {
                for part in parts {
                    if !part.eval(env)?.boolean()? {
                        return Ok(Value::Bool(false));
                    }
                }
                Value::Bool(true)
            }
            Expr::Or(parts) => {
                for part in parts {
                    if part.eval(env)?.boolean()? {
                        return Ok(Value::Bool(true));
                    }
                }
                Value::Bool(false)
            }
        })
    }

    pub fn eval_num(&self, env: &Env) -> Result<Rational> {
        self.eval(env)?.num()
    }

    pub fn eval_int(&self, env: &Env) -> Result<i64> {
        let x = self.eval_num(env)?;
        if !x.is_integer() {
            return Err(Error::Table(format!("{self} is not an integer ({x})")));
        }
        x.to_integer()
            .to_i64()
            .ok_or_else(|| Error::Table(format!("{self} is out of range")))
    }

    pub fn holds(&self, env: &Env) -> Result<bool> {
        self.eval(env)?.boolean()
    }

    /// (b, m) with the expression equal to b + m·n, when built from integers and n by + − × ÷.
    pub fn affine_in_n(&self) -> Option<(Rational64, Rational64)> {
        match self {
            Expr::Num(k) => Some((Rational64::from_integer(k.to_i64()?), Rational64::zero())),
            Expr::Var(Var::N) => Some((Rational64::zero(), Rational64::one())),
            Expr::Neg(e) => e.affine_in_n().map(|(b, m)| (-b, -m)),
            Expr::Bin(op, l, r) => {
                let ((lb, lm), (rb, rm)) = (l.affine_in_n()?, r.affine_in_n()?);
                match op {
                    BinOp::Add => Some((lb + rb, lm + rm)),
                    BinOp::Sub => Some((lb - rb, lm - rm)),
                    BinOp::Mul if lm.is_zero() || rm.is_zero() => {
                        Some((lb * rb, lb * rm + lm * rb))
                    }
                    BinOp::Div if rm.is_zero() && !rb.is_zero() => Some((lb / rb, lm / rb)),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Whether the expression mentions `n`.
    pub fn uses_n(&self) -> bool {
        match self {
            Expr::Var(Var::N) => true,
            Expr::Num(_) | Expr::Inf | Expr::True | Expr::Var(_) | Expr::Poly(_) => false,
            Expr::Neg(e) | Expr::Not(e) => e.uses_n(),
            Expr::Bin(_, l, r) | Expr::Cmp(_, l, r) => l.uses_n() || r.uses_n(),
            Expr::Call(_, xs) | Expr::And(xs) | Expr::Or(xs) => xs.iter().any(Expr::uses_n),
            Expr::In(e, xs) => e.uses_n() || xs.iter().any(Expr::uses_n),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Or(_) => 1,
            Expr::And(_) => 2,
            Expr::Not(_) => 3,
            Expr::Cmp(..) | Expr::In(..) => 4,
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 5,
            Expr::Bin(BinOp::Mul | BinOp::Div | BinOp::Mod, ..) => 6,
            Expr::Neg(_) => 7,
            Expr::Bin(BinOp::Pow, ..) => 8,
            _ => 9,
        }
    }
}

fn bin(op: BinOp, l: Value, r: Value) -> Result<Value> {
    if let (Value::Inf, Value::Num(_)) | (Value::Num(_), Value::Inf) = (&l, &r) {
        if matches!(op, BinOp::Add | BinOp::Sub) && !matches!((op, &r), (BinOp::Sub, Value::Inf)) {
            return Ok(Value::Inf);
        }
    }
    let (a, b) = (l.num()?, r.num()?);
    Ok(Value::Num(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b.is_zero() {
                return Err(Error::Table("division by zero".into()));
            }
            a / b
        }
        BinOp::Mod => {
            if !a.is_integer() || !b.is_integer() || b.is_zero() {
                return Err(Error::Table(format!("{a} % {b} is undefined")));
            }
            Rational::from_integer(a.to_integer().mod_floor(&b.to_integer()))
        }
        BinOp::Pow => {
            let e = b
                .to_integer()
                .to_i32()
                .filter(|_| b.is_integer())
                .ok_or_else(|| Error::Table(format!("bad exponent {b}")))?;
            if e < 0 && a.is_zero() {
                return Err(Error::Table("division by zero".into()));
            }
            num_traits::pow::Pow::pow(&a, e)
        }
    }))
}

fn call(f: Func, args: &[Expr], env: &Env) -> Result<Value> {
    if let (Func::V, [Expr::Var(v)]) = (f, args) {
        if let Some(i) = [Var::A1, Var::A2, Var::A3, Var::A4, Var::A6]
            .iter()
            .position(|a| a == v)
        {
            return Ok(match env.coeff_valuations()[i] {
                Valuation::Finite(k) => Value::Num(Rational::from_integer(k.into())),
                Valuation::Infinite => Value::Inf,
            });
        }
    }
    let mut xs = Vec::with_capacity(args.len());
    for a in args {
        xs.push(a.eval_num(env)?);
    }
    Ok(match f {
        Func::V => match valuation(&xs[0], env.p) {
            Valuation::Finite(k) => Value::Num(Rational::from_integer(k.into())),
            Valuation::Infinite => Value::Inf,
        },
        Func::Leg => Value::Num(Rational::from_integer(legendre(&xs[0], env.p)?.into())),
        Func::ImT => Value::Bool(artin_schreier_in_image(&xs[0], env.p)?),
        Func::Roots => Value::Num(Rational::from_integer(
            count_cubic_roots_mod_p(&xs[0], &xs[1], &xs[2], env.p)?.into(),
        )),
        Func::Res => {
            let m = &xs[1];
            if !m.is_integer() || !m.is_positive() {
                return Err(Error::Table(format!("bad modulus {m}")));
            }
            let m = m.to_integer();
            let x = &xs[0];
            let inv = mod_inverse(x.denom(), &m).ok_or(Error::NotIntegral)?;
            Value::Num(Rational::from_integer((x.numer() * inv).mod_floor(&m)))
        }
    })
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        let list = |f: &mut fmt::Formatter<'_>, xs: &[Expr], sep: &str, min: u8| {
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                sub(f, x, min)?;
            }
            Ok(())
        };
        match self {
            Expr::Num(k) => write!(f, "{k}"),
            Expr::Inf => f.write_str("inf"),
            Expr::True => f.write_str("true"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => {
                f.write_str("-")?;
                sub(f, e, 8)
            }
            Expr::Bin(op, l, r) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", 5),
                    BinOp::Sub => ("-", 5),
                    BinOp::Mul => ("*", 6),
                    BinOp::Div => ("/", 6),
                    BinOp::Mod => ("%", 6),
                    BinOp::Pow => ("^", 8),
                };
                if *op == BinOp::Pow {
                    sub(f, l, p + 1)?;
                    f.write_str(sym)?;
                    sub(f, r, p)
                } else {
                    sub(f, l, p)?;
                    f.write_str(sym)?;
                    sub(f, r, p + 1)
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                list(f, args, ", ", 5)?;
                f.write_str(")")
            }
            Expr::Poly(j) => write!(f, "P[{j}]"),
            Expr::Cmp(op, l, r) => {
                sub(f, l, 5)?;
                write!(f, " {} ", op.symbol())?;
                sub(f, r, 5)
            }
            Expr::In(e, set) => {
                sub(f, e, 5)?;
                f.write_str(" in {")?;
                list(f, set, ", ", 5)?;
                f.write_str("}")
            }
            Expr::Not(e) => {
                f.write_str("!")?;
                sub(f, e, 3)
            }
            Expr::And(xs) => list(f, xs, ", ", 3),
            Expr::Or(xs) => list(f, xs, " or ", 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(&'static str),
}

const SYMBOLS: [&str; 20] = [
    ">=", "<=", "!=", "->", "=", ">", "<", "+", "-", "*", "/", "%", "^", "(", ")", ",", "!", "{",
    "}", "[",
];

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Tok::Num(s[start..i].parse().expect("digits")));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(s[start..i].to_string()));
        } else if c == ']' {
            out.push(Tok::Sym("]"));
            i += 1;
        } else if let Some(sym) = SYMBOLS.iter().find(|sym| s[i..].starts_with(**sym)) {
            out.push(Tok::Sym(sym));
            i += sym.len();
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} in {s:?}")));
        }
    }
    Ok(out)
}

/// Recursive-descent parser over a token list.
pub(crate) struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    src: String,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            src: src.to_string(),
        })
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at token {} in {:?}", self.pos, self.src))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.peek_sym(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<()> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.err(&format!("expected {sym:?}")))
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("trailing input"))
        }
    }

    /// Consumes an identifier if it is one of `words`.
    pub(crate) fn eat_word(&mut self, words: &[&str]) -> Option<String> {
        match self.peek() {
            Some(Tok::Ident(s)) if words.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Some(s)
            }
            _ => None,
        }
    }

    pub(crate) fn eat_arrow(&mut self) -> bool {
        self.eat_sym("->")
    }

    pub(crate) fn eat_comma(&mut self) -> bool {
        self.eat_sym(",")
    }

    pub(crate) fn condition(&mut self) -> Result<Expr> {
        let mut parts = vec![self.conjunction()?];
        while self.eat_word(&["or"]).is_some() {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<Expr> {
        let mut parts = vec![self.negation()?];
        while self.eat_sym(",") {
            parts.push(self.negation()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Expr::And(parts)
        })
    }

    fn negation(&mut self) -> Result<Expr> {
        if self.eat_sym("!") {
            return Ok(Expr::Not(Box::new(self.negation()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr> {
        let lhs = self.sum()?;
        for (sym, op) in [
            ("=", CmpOp::Eq),
            ("!=", CmpOp::Ne),
            (">=", CmpOp::Ge),
            ("<=", CmpOp::Le),
            (">", CmpOp::Gt),
            ("<", CmpOp::Lt),
        ] {
            if self.eat_sym(sym) {
                return Ok(Expr::Cmp(op, Box::new(lhs), Box::new(self.sum()?)));
            }
        }
        if self.eat_word(&["in"]).is_some() {
            self.expect_sym("{")?;
            let mut set = vec![self.sum()?];
            while self.eat_sym(",") {
                set.push(self.sum()?);
            }
            self.expect_sym("}")?;
            return Ok(Expr::In(Box::new(lhs), set));
        }
        Ok(lhs)
    }

    /// An arithmetic expression (no comparisons or connectives at top level).
    pub(crate) fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else if self.eat_sym("%") {
                BinOp::Mod
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_sym("^") {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(k)) => {
                self.pos += 1;
                Ok(Expr::Num(k))
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let e = self.condition()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "inf" => Ok(Expr::Inf),
                    "true" => Ok(Expr::True),
                    "P" => {
                        self.expect_sym("[")?;
                        let j = match self.peek().cloned() {
                            Some(Tok::Num(j)) => j.to_u32().ok_or_else(|| self.err("bad index"))?,
                            _ => return Err(self.err("expected an index")),
                        };
                        self.pos += 1;
                        self.expect_sym("]")?;
                        Ok(Expr::Poly(j))
                    }
                    _ => {
                        if let Some(func) = Func::from_name(&name) {
                            self.expect_sym("(")?;
                            let mut args = vec![self.sum()?];
                            while self.eat_sym(",") {
                                args.push(self.sum()?);
                            }
                            self.expect_sym(")")?;
                            if args.len() != func.arity() {
                                return Err(
                                    self.err(&format!("{name} takes {} arguments", func.arity()))
                                );
                            }
                            Ok(Expr::Call(func, args))
                        } else if let Some(v) = Var::from_name(&name) {
                            Ok(Expr::Var(v))
                        } else {
                            Err(self.err(&format!("unknown name {name:?}")))
                        }
                    }
                }
            }
            _ => Err(self.err("expected an expression")),
        }
    }

    /// Whether the next tokens are a parenthesized list with a top-level comma.
    pub(crate) fn at_tuple(&self) -> bool {
        if !self.peek_sym("(") {
            return false;
        }
        let mut depth = 0;
        for t in &self.toks[self.pos..] {
            match t {
                Tok::Sym("(") | Tok::Sym("{") | Tok::Sym("[") => depth += 1,
                Tok::Sym(")") | Tok::Sym("}") | Tok::Sym("]") => {
                    depth -= 1;
                    if depth == 0 {
                        return false;
                    }
                }
                Tok::Sym(",") if depth == 1 => return true,
                _ => {}
            }
        }
        false
    }
}

/// Parses a full condition.
pub fn parse_condition(s: &str) -> Result<Expr> {
    let mut p = Parser::new(s)?;
    let e = p.condition()?;
    p.finish()?;
    Ok(e)
}

/// Parses an arithmetic expression.
pub fn parse_expr(s: &str) -> Result<Expr> {
    let mut p = Parser::new(s)?;
    let e = p.sum()?;
    p.finish()?;
    Ok(e)
}

/// Value of an affine expression in n, when n is bound or unused.
fn affine_at(e: &Expr, n: Option<i64>) -> Option<Rational64> {
    let (b, m) = e.affine_in_n()?;
    if m.is_zero() {
        return Some(b);
    }
    Some(b + m * n?)
}

/// One entry of a valuation pattern: `inf`, `=EXPR` or `EXPR` (a lower bound, rounded up).
#[derive(Clone, Debug, PartialEq)]
pub enum SlotExpr {
    Inf,
    AtLeast(Expr),
    Exact(Expr),
}

impl SlotExpr {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "inf" {
            return Ok(SlotExpr::Inf);
        }
        match s.strip_prefix('=') {
            Some(rest) => Ok(SlotExpr::Exact(parse_expr(rest)?)),
            None => Ok(SlotExpr::AtLeast(parse_expr(s)?)),
        }
    }

    pub fn eval(&self, env: &Env) -> Result<Slot> {
        if let SlotExpr::AtLeast(e) | SlotExpr::Exact(e) = self {
            if let Some(x) = affine_at(e, env.n) {
                return Ok(match self {
                    SlotExpr::Exact(_) if !x.is_integer() => {
                        return Err(Error::Table(format!("{e} is not an integer ({x})")));
                    }
                    SlotExpr::Exact(_) => Slot::Exact(x.to_integer()),
                    _ => Slot::AtLeast(Valuation::Finite(x.ceil().to_integer())),
                });
            }
        }
        Ok(match self {
            SlotExpr::Inf => Slot::AtLeast(Valuation::Infinite),
            SlotExpr::AtLeast(e) => {
                let x = e.eval_num(env)?;
                Slot::AtLeast(Valuation::Finite(ceil(&x).to_i64().expect("small")))
            }
            SlotExpr::Exact(e) => Slot::Exact(e.eval_int(env)?),
        })
    }
}

impl fmt::Display for SlotExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotExpr::Inf => f.write_str("inf"),
            SlotExpr::AtLeast(e) => write!(f, "{e}"),
            SlotExpr::Exact(e) => write!(f, "={e}"),
        }
    }
}

/// A row pattern for (a1, a2, a3, a4, a6).
#[derive(Clone, Debug, PartialEq)]
pub struct Pattern(pub [SlotExpr; 5]);

impl Pattern {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("a pattern has five entries: {s:?}")));
        }
        let slots: Vec<SlotExpr> = parts
            .iter()
            .map(|p| SlotExpr::parse(p))
            .collect::<Result<_>>()?;
        Ok(Pattern(slots.try_into().expect("five")))
    }

    /// Whether the model's valuations satisfy the pattern under `env`.
    pub fn admits(&self, env: &Env) -> Result<bool> {
        for (slot, v) in self.0.iter().zip(env.coeff_valuations()) {
            if !slot.eval(env)?.admits(*v) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Candidate values of `n` read from the first exact slot that depends on `n`.
    pub fn solve_n(&self, env: &Env) -> Result<Option<i64>> {
        for (slot, v) in self.0.iter().zip(env.coeff_valuations()) {
            let SlotExpr::Exact(e) = slot else { continue };
            if !e.uses_n() {
                continue;
            }
            let Valuation::Finite(target) = *v else {
                return Ok(None);
            };
            if let Some((b, m)) = e.affine_in_n() {
                if m.is_zero() {
                    return Err(Error::Table(format!("slot {e} is not linear in n")));
                }
                let n = (Rational64::from_integer(target) - b) / m;
                return Ok(n.is_integer().then(|| n.to_integer()));
            }
            let at = |k: i64| -> Result<Rational> {
                let probe = env.clone().with_n(Some(k));
                e.eval_num(&probe)
            };
            let (b, slope) = (at(0)?, at(1)? - at(0)?);
            if slope.is_zero() {
                return Err(Error::Table(format!("slot {e} is not linear in n")));
            }
            let n = (Rational::from_integer(target.into()) - b) / slope;
            return Ok(if n.is_integer() {
                n.to_integer().to_i64()
            } else {
                None
            });
        }
        Err(Error::Table(format!(
            "pattern {self} has no exact slot in n"
        )))
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join(", "))
    }
}

/// A Kodaira symbol, possibly with a subscript expression in `n`: `I0`, `I{n+4}*`, `IV*`.
#[derive(Clone, Debug, PartialEq)]
pub enum TypeTemplate {
    Fixed(KodairaType),
    I(Expr),
    IStar(Expr),
}

impl TypeTemplate {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("I{") {
            let (inner, tail) = rest
                .split_once('}')
                .ok_or_else(|| Error::Parse(format!("bad type {s:?}")))?;
            let e = parse_expr(inner)?;
            return match tail {
                "" => Ok(TypeTemplate::I(e)),
                "*" => Ok(TypeTemplate::IStar(e)),
                _ => Err(Error::Parse(format!("bad type {s:?}"))),
            };
        }
        Ok(TypeTemplate::Fixed(s.parse()?))
    }

    pub fn eval(&self, env: &Env) -> Result<KodairaType> {
        let sub = |e: &Expr| -> Result<u32> {
            let k = e.eval_int(env)?;
            u32::try_from(k).map_err(|_| Error::Table(format!("negative subscript {k}")))
        };
        Ok(match self {
            TypeTemplate::Fixed(t) => *t,
            TypeTemplate::I(e) => KodairaType::I(sub(e)?),
            TypeTemplate::IStar(e) => KodairaType::IStar(sub(e)?),
        })
    }

    /// Whether `n` must be recovered from the model to instantiate the template.
    pub fn has_n(&self) -> bool {
        !matches!(self, TypeTemplate::Fixed(_))
    }

    /// For a family template (`I{n}` or `I{n}*` meaning n > 0), the bound `n` if `t` belongs to it.
    pub fn bind(&self, t: KodairaType) -> Option<Option<i64>> {
        match (self, t) {
            (TypeTemplate::Fixed(x), t) if *x == t => Some(None),
            (TypeTemplate::I(_), KodairaType::I(k)) if k > 0 => Some(Some(k as i64)),
            (TypeTemplate::IStar(_), KodairaType::IStar(k)) if k > 0 => Some(Some(k as i64)),
            _ => None,
        }
    }
}

impl fmt::Display for TypeTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTemplate::Fixed(t) => write!(f, "{t}"),
            TypeTemplate::I(e) => write!(f, "I{{{e}}}"),
            TypeTemplate::IStar(e) => write!(f, "I{{{e}}}*"),
        }
    }
}

/// Multiplicative reduction tag attached to a branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Splitting {
    Split,
    Nonsplit,
}

/// `COND -> VALUES [split|nonsplit]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub cond: Expr,
    pub values: Vec<Expr>,
    pub tag: Option<Splitting>,
}

impl Branch {
    fn parse(p: &mut Parser) -> Result<Self> {
        let cond = p.condition()?;
        if !p.eat_arrow() {
            return Err(p.err("expected ->"));
        }
        let mut values = Vec::new();
        if p.at_tuple() {
            p.expect_sym("(")?;
            values.push(p.sum()?);
            while p.eat_comma() {
                values.push(p.sum()?);
            }
            p.expect_sym(")")?;
        } else {
            values.push(p.sum()?);
        }
        let tag = match p.eat_word(&["split", "nonsplit"]).as_deref() {
            Some("split") => Some(Splitting::Split),
            Some(_) => Some(Splitting::Nonsplit),
            None => None,
        };
        Ok(Branch { cond, values, tag })
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> ", self.cond)?;
        if self.values.len() == 1 {
            write!(f, "{}", self.values[0])?;
        } else {
            let vs: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", vs.join(", "))?;
        }
        match self.tag {
            Some(Splitting::Split) => f.write_str(" split"),
            Some(Splitting::Nonsplit) => f.write_str(" nonsplit"),
            None => Ok(()),
        }
    }
}

/// A `;`-separated list of branches; exactly one must hold.
#[derive(Clone, Debug, PartialEq)]
pub struct Branches(pub Vec<Branch>);

impl Branches {
    pub fn parse(s: &str, arity: usize) -> Result<Self> {
        let mut out = Vec::new();
        for part in s.split(';') {
            let mut p = Parser::new(part)?;
            let b = Branch::parse(&mut p)?;
            p.finish()?;
            if b.values.len() != arity {
                return Err(Error::Parse(format!("expected {arity} values in {part:?}")));
            }
            out.push(b);
        }
        Ok(Branches(out))
    }

    /// The unique branch whose condition holds.
    pub fn select(&self, env: &Env) -> Result<&Branch> {
        let mut hit = None;
        for b in &self.0 {
            if b.cond.holds(env)? {
                if hit.is_some() {
                    return Err(Error::AmbiguousMatch(format!("branches {self} overlap")));
                }
                hit = Some(b);
            }
        }
        hit.ok_or(Error::NoMatch)
    }
}

impl fmt::Display for Branches {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// `-` stands for an absent optional condition.
pub fn parse_optional_condition(s: &str) -> Result<Option<Expr>> {
    let s = s.trim();
    if s == "-" {
        Ok(None)
    } else {
        parse_condition(s).map(Some)
    }
}

pub(crate) fn render_optional(e: &Option<Expr>) -> String {
    e.as_ref()
        .map_or_else(|| "-".to_string(), |e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::rat;

    fn env_with<'a>(p: &'a Prime, m: &'a WeierstrassModel) -> Env<'a> {
        Env::new(p, m).with_n(Some(5)).with_d(rat(3))
    }

    #[test]
    fn arithmetic_and_conditions() {
        let p = Prime::two();
        let m = WeierstrassModel::from_ints([1, 2, 4, 8, 48]);
        let env = env_with(&p, &m);
        let eval = |s: &str| parse_condition(s).unwrap().eval(&env).unwrap();
        assert_eq!(eval("(n+1)/2"), Value::Num(rat(3)));
        assert_eq!(eval("2^(n-1)*(d-1)+a6*d"), Value::Num(rat(176)));
        assert_eq!(eval("v(a6)"), Value::Num(rat(4)));
        assert_eq!(eval("v(0)"), Value::Inf);
        assert_eq!(eval("v(0) + 3 >= 100"), Value::Bool(true));
        assert_eq!(eval("res(d,4) = 3, v(a1) = 0"), Value::Bool(true));
        assert_eq!(eval("v(a1) >= 1 or res(d, 4) = 1"), Value::Bool(false));
        assert_eq!(eval("v(a3) in {1, 2}"), Value::Bool(true));
        assert_eq!(eval("!imT(a2/a1^2)"), Value::Bool(false));
        assert_eq!(eval("-a6/(a2*p^3)"), Value::Num(rat(-3)));
        assert_eq!(eval("n%2 = 1"), Value::Bool(true));
    }

    #[test]
    fn render_round_trip() {
        for s in [
            "v(d-1+4*a2) >= 3",
            "res(d, 4) = 3, v(a1) = 0 or v(a4) >= 1, !imT(p*a6/a4^2)",
            "leg(-a6/(a2*p^(n+2))) = -1",
            "2^(n+2)*(d-1+a2*d)+a3*a4+2*a6+2^(n+1)*a3",
            "(v(a1) >= 2 or res(d, 4) = 1), delta in {12, 14, 15}",
            "a1-(a2-a3)",
            "-(a1+a2)^2",
        ] {
            let e = parse_condition(s).unwrap();
            assert_eq!(
                parse_condition(&e.to_string()).unwrap(),
                e,
                "{s} rendered as {e}"
            );
        }
    }

    #[test]
    fn patterns_and_templates() {
        let p = Prime::two();
        let m = WeierstrassModel::from_ints([1, 1, 4, 4, 8]);
        let env = Env::new(&p, &m);
        let pat = Pattern::parse("=0, 0, =(n+1)/2, (n+1)/2, =n").unwrap();
        assert_eq!(pat.solve_n(&env).unwrap(), Some(3));
        assert!(pat.admits(&env.rebind(&m).with_n(Some(3))).unwrap());
        let t = TypeTemplate::parse("I{n+4}*").unwrap();
        assert_eq!(
            t.eval(&Env::new(&p, &m).with_n(Some(2))).unwrap(),
            KodairaType::IStar(6)
        );
        assert_eq!(
            TypeTemplate::parse("I{n}").unwrap().bind(KodairaType::I(7)),
            Some(Some(7))
        );
        assert_eq!(
            TypeTemplate::parse("I{n}").unwrap().bind(KodairaType::I(0)),
            None
        );
        let b =
            Branches::parse("leg(a2) = 1 -> n split; leg(a2) = -1 -> 2-n%2 nonsplit", 1).unwrap();
        assert_eq!(Branches::parse(&b.to_string(), 1).unwrap(), b);
        let t = Branches::parse("true -> (c, 1+roots(a2*d/p, a4*d^2/p^2, a6*d^3/p^3))", 2).unwrap();
        assert_eq!(t.0[0].values.len(), 2);
    }
}
