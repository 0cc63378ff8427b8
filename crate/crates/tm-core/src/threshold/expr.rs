//! Nonlinearity expressions over the variable `s`, evaluated in
//! (sign, log-magnitude) pairs so that `e^s` terms at `s ~ 1e4` never
//! overflow while classification grids run far past the cutoff.
//!
//! Grammar (infix, `^` right-associative):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := ('-' | '+') factor | power
//! power   := atom ('^' factor)?
//! atom    := number | 's' | name '(' args ')' | name | '(' expr ')'
//! names   : exp, log, pow(a,b), cutoff(L, f); constants e, pi, cE, cD, cDp
//! ```
//!
//! `cutoff(L, f)` is the gate `s > L^2 ? f : 0`, so the cutoff exponential
//! is written `cutoff(L, exp(s))`.
#![allow(clippy::should_implement_trait)]

use crate::error::{CoreError, Result};
use crate::special::ConstantTable;

/// A value carried as sign and natural log of magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVal {
    pub sign: i8,
    pub ln_abs: f64,
}

impl LogVal {
    pub const ZERO: LogVal = LogVal {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn from_f64(x: f64) -> LogVal {
        if x == 0.0 {
            LogVal::ZERO
        } else {
            LogVal {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_abs: x.abs().ln(),
            }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.ln_abs.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn neg(self) -> LogVal {
        LogVal {
            sign: -self.sign,
            ln_abs: self.ln_abs,
        }
    }

    pub fn mul(self, rhs: LogVal) -> LogVal {
        if self.is_zero() || rhs.is_zero() {
            return LogVal::ZERO;
        }
        LogVal {
            sign: self.sign * rhs.sign,
            ln_abs: self.ln_abs + rhs.ln_abs,
        }
    }

    pub fn div(self, rhs: LogVal) -> Result<LogVal> {
        if rhs.is_zero() {
            return Err(CoreError::Domain("division by zero in expression".into()));
        }
        if self.is_zero() {
            return Ok(LogVal::ZERO);
        }
        Ok(LogVal {
            sign: self.sign * rhs.sign,
            ln_abs: self.ln_abs - rhs.ln_abs,
        })
    }

    pub fn add(self, rhs: LogVal) -> LogVal {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.ln_abs >= rhs.ln_abs {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = small.ln_abs - big.ln_abs; // <= 0
        if big.sign == small.sign {
            LogVal {
                sign: big.sign,
                ln_abs: big.ln_abs + f64::ln_1p(d.exp()),
            }
        } else {
            let m = -f64::exp_m1(d); // 1 - e^d in (0, 1]
            if m == 0.0 {
                LogVal::ZERO
            } else {
                LogVal {
                    sign: big.sign,
                    ln_abs: big.ln_abs + m.ln(),
                }
            }
        }
    }

    pub fn sub(self, rhs: LogVal) -> LogVal {
        self.add(rhs.neg())
    }

    /// Raise to a real power (the exponent must be an f64-sized number).
    pub fn pow(self, p: f64) -> Result<LogVal> {
        if self.is_zero() {
            if p > 0.0 {
                return Ok(LogVal::ZERO);
            }
            if p == 0.0 {
                return Ok(LogVal::from_f64(1.0));
            }
            return Err(CoreError::Domain("zero to a negative power".into()));
        }
        if self.sign < 0 {
            // only integer exponents keep a real value
            if p.fract() != 0.0 {
                return Err(CoreError::Domain(
                    "negative base with non-integer exponent".into(),
                ));
            }
            let sign = if (p as i64) % 2 == 0 { 1 } else { -1 };
            return Ok(LogVal {
                sign,
                ln_abs: p * self.ln_abs,
            });
        }
        Ok(LogVal {
            sign: 1,
            ln_abs: p * self.ln_abs,
        })
    }

    /// `exp(x)`: the argument is materialized as an f64 (its log-magnitude
    /// fits easily whenever the result is representable in log space).
    pub fn exp(self) -> LogVal {
        LogVal {
            sign: 1,
            ln_abs: self.to_f64(),
        }
    }

    /// Natural log; the operand's `ln_abs` is exactly the answer.
    pub fn ln(self) -> Result<LogVal> {
        if self.sign <= 0 {
            return Err(CoreError::Domain("log of a non-positive value".into()));
        }
        Ok(LogVal::from_f64(self.ln_abs))
    }
}

/// Expression tree over the variable `s`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    /// `cutoff(L, f)`: `f` for `s > L^2`, zero otherwise.
    Cutoff(f64, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(CoreError::Parse {
                pos: p.pos,
                msg: "unexpected trailing input".into(),
            });
        }
        Ok(e)
    }

    /// Evaluate at `s` in log-magnitude arithmetic.
    pub fn eval_log(&self, s: f64) -> Result<LogVal> {
        let fail = |msg: &str| CoreError::Eval {
            s,
            msg: msg.to_string(),
        };
        Ok(match self {
            Expr::Const(c) => LogVal::from_f64(*c),
            Expr::Var => LogVal::from_f64(s),
            Expr::Add(a, b) => a.eval_log(s)?.add(b.eval_log(s)?),
            Expr::Sub(a, b) => a.eval_log(s)?.sub(b.eval_log(s)?),
            Expr::Mul(a, b) => a.eval_log(s)?.mul(b.eval_log(s)?),
            Expr::Div(a, b) => a
                .eval_log(s)?
                .div(b.eval_log(s)?)
                .map_err(|e| fail(&e.to_string()))?,
            Expr::Pow(a, b) => {
                let base = a.eval_log(s)?;
                let p = b.eval_log(s)?.to_f64();
                if !p.is_finite() {
                    return Err(fail("exponent is not finite"));
                }
                base.pow(p).map_err(|e| fail(&e.to_string()))?
            }
            Expr::Neg(a) => a.eval_log(s)?.neg(),
            Expr::Exp(a) => {
                let v = a.eval_log(s)?.to_f64();
                if !v.is_finite() {
                    return Err(fail("exp argument overflows"));
                }
                LogVal { sign: 1, ln_abs: v }
            }
            Expr::Log(a) => a.eval_log(s)?.ln().map_err(|e| fail(&e.to_string()))?,
            Expr::Cutoff(l, a) => {
                if s > l * l {
                    a.eval_log(s)?
                } else {
                    LogVal::ZERO
                }
            }
        })
    }

    /// Plain f64 evaluation (may overflow where `eval_log` would not).
    pub fn eval(&self, s: f64) -> Result<f64> {
        Ok(self.eval_log(s)?.to_f64())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(CoreError::Parse {
                pos: self.pos,
                msg: format!("expected '{}'", c as char),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.eat(b'+') {
            return self.factor();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident();
                self.skip_ws();
                match name.as_str() {
                    "s" => Ok(Expr::Var),
                    "exp" | "log" | "pow" | "cutoff" => {
                        self.expect(b'(')?;
                        let first = self.expr()?;
                        let e = match name.as_str() {
                            "exp" => Expr::Exp(Box::new(first)),
                            "log" => Expr::Log(Box::new(first)),
                            "pow" => {
                                self.expect(b',')?;
                                let second = self.expr()?;
                                Expr::Pow(Box::new(first), Box::new(second))
                            }
                            "cutoff" => {
                                // the cutoff level must be a constant
                                let l = match fold_const(&first) {
                                    Some(l) if l > 0.0 => l,
                                    _ => {
                                        return Err(CoreError::Parse {
                                            pos: start,
                                            msg: "cutoff level must be a positive constant".into(),
                                        })
                                    }
                                };
                                self.expect(b',')?;
                                let body = self.expr()?;
                                Expr::Cutoff(l, Box::new(body))
                            }
                            _ => unreachable!(),
                        };
                        self.expect(b')')?;
                        Ok(e)
                    }
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "cE" => Ok(Expr::Const(ConstantTable::get().c_e)),
                    "cD" => Ok(Expr::Const(ConstantTable::get().c_d)),
                    "cDp" => Ok(Expr::Const(ConstantTable::get().c_d_prime)),
                    other => Err(CoreError::Parse {
                        pos: start,
                        msg: format!("unknown name '{other}'"),
                    }),
                }
            }
            _ => Err(CoreError::Parse {
                pos: self.pos,
                msg: "expected a number, name or parenthesized expression".into(),
            }),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit()
                || self.src[self.pos] == b'.'
                || self.src[self.pos] == b'e'
                || self.src[self.pos] == b'E'
                || ((self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                    && self.pos > start
                    && (self.src[self.pos - 1] == b'e' || self.src[self.pos - 1] == b'E')))
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text.parse().map_err(|_| CoreError::Parse {
            pos: start,
            msg: format!("invalid number '{text}'"),
        })?;
        self.skip_ws();
        Ok(Expr::Const(value))
    }
}

/// Evaluate constant subtrees (used for the cutoff level).
fn fold_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        Expr::Neg(a) => fold_const(a).map(|x| -x),
        Expr::Add(a, b) => Some(fold_const(a)? + fold_const(b)?),
        Expr::Sub(a, b) => Some(fold_const(a)? - fold_const(b)?),
        Expr::Mul(a, b) => Some(fold_const(a)? * fold_const(b)?),
        Expr::Div(a, b) => Some(fold_const(a)? / fold_const(b)?),
        Expr::Pow(a, b) => Some(fold_const(a)?.powf(fold_const(b)?)),
        _ => None,
    }
}

/// A nonlinearity: the expression plus declared asymptotic metadata (the
/// classifier cannot verify limits numerically; callers may record the
/// intended tail class here).
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub expr: Expr,
    /// Declared limit of `s e^{-s} g(s)` (plane) or `e^{-s} g(s)` (disk).
    pub tail_limit: Option<f64>,
    /// Declared vanishing of `g(s)/s` (plane) or `g(s)` (disk) at the origin.
    pub origin_vanishes: Option<bool>,
}

impl Nonlinearity {
    pub fn new(expr: Expr) -> Self {
        Nonlinearity {
            expr,
            tail_limit: None,
            origin_vanishes: None,
        }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Nonlinearity::new(Expr::parse(src)?))
    }

    pub fn eval_log(&self, s: f64) -> Result<LogVal> {
        self.expr.eval_log(s)
    }
}
