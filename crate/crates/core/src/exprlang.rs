//! Closed-form scalar expressions in `x`, `y` and `t`.
//!
//! Boundary data, forcing terms, initial conditions, exact solutions and
//! implicit domain functions are all written in this small language:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-'? atom
//! atom   := number | 'pi' | 'x' | 'y' | 't' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp' | 'sqrt' | 'abs'
//! ```
//!
//! `^` is right-associative and binds tighter than `*` and `/`. Note that the
//! unary minus sits *below* `^`, so `-x^2` reads as `(-x)^2`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A free variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Abstract syntax tree of a parsed expression. Immutable after parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("non-finite result in `{0}`")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // optional exponent: e[+-]digits
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    return Err(ParseError::Syntax {
                        pos: i,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((i, tok));
            i += c.len_utf8();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('+')) => BinOp::Add,
                Some(Tok::Op('-')) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('*')) => BinOp::Mul,
                Some(Tok::Op('/')) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        self.syntax("expected `)`")
                    }
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::Var(Var::X)),
                "y" => Ok(Expr::Var(Var::Y)),
                "t" => Ok(Expr::Var(Var::T)),
                "pi" => Ok(Expr::Pi),
                _ => match Func::from_name(&name) {
                    Some(f) => {
                        if self.peek() != Some(&Tok::LParen) {
                            return self.syntax(format!("expected `(` after `{name}`"));
                        }
                        self.bump();
                        let arg = self.expr()?;
                        if self.bump() != Some(Tok::RParen) {
                            self.pos -= 1;
                            return self.syntax("expected `)`");
                        }
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                    None => Err(ParseError::UnknownIdentifier { pos: start, name }),
                },
            },
            Some(_) => {
                self.pos -= 1;
                self.syntax("expected a number, variable, function or `(`")
            }
            None => self.syntax("unexpected end of expression"),
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = tokenize(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: source.len(),
    };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// Evaluates at `(x, y, t)`. Any non-finite intermediate is reported as an
    /// error rather than returned.
    pub fn eval(&self, x: f64, y: f64, t: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Var(Var::T) => t,
            Expr::Neg(a) => -a.eval(x, y, t)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(x, y, t)?;
                let b = b.eval(x, y, t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(x, y, t)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::NegativeSqrt(a));
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(self.to_string()))
        }
    }

    /// Shorthand for time-independent data.
    pub fn eval_xy(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.eval(x, y, 0.0)
    }

    /// True when the tree contains no variables.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => true,
            Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

// Small integer exponents go through repeated multiplication so that `x^2`
// agrees bit-for-bit with `x*x`.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized form; re-parsing it yields an equivalent tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y) => write!(f, "y"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-({a}))"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                    BinOp::Pow => '^',
                };
                write!(f, "(({a}){sym}({b}))")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(src: &str, x: f64, y: f64) -> f64 {
        parse_expr(src).unwrap().eval(x, y, 0.0).unwrap()
    }

    #[test]
    fn square_of_sum_at_table_node() {
        assert!((ev("(x+y)^2", 0.4, 0.1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identity_and_trig() {
        assert_eq!(ev("x", 0.0, 0.0), 0.0);
        assert!(ev("cos(4*pi*x)+cos(4*pi*y)", 0.25, 0.5).abs() < 1e-14);
        assert!((ev("sin(pi*x)*sin(2*pi*y)", 0.5, 0.25) - 1.0).abs() < 1e-15);
        assert_eq!(ev("x^2", 3.0, 0.0), 9.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2+3*4", 0.0, 0.0), 14.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("8-3-2", 0.0, 0.0), 3.0);
        assert_eq!(ev("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(ev("(2+3)*4", 0.0, 0.0), 20.0);
        // unary minus sits below ^
        assert_eq!(ev("-x^2", 3.0, 0.0), 9.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("-16*pi^2", 0.0, 0.0), -16.0 * PI * PI);
    }

    #[test]
    fn numbers_with_exponents() {
        assert_eq!(ev("1e-3", 0.0, 0.0), 1e-3);
        assert_eq!(ev("2.5E+2", 0.0, 0.0), 250.0);
        assert_eq!(ev(".5", 0.0, 0.0), 0.5);
    }

    #[test]
    fn time_variable() {
        let e = parse_expr("sin(t)*(sin(pi*x)+sin(pi*y))").unwrap();
        let v = e.eval(0.5, 0.0, PI / 2.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_identifier() {
        match parse_expr("2*a-1") {
            Err(ParseError::UnknownIdentifier { pos, name }) => {
                assert_eq!(pos, 2);
                assert_eq!(name, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_expr("tan(x)"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        assert_eq!(parse_expr("   "), Err(ParseError::Empty));
        assert!(matches!(
            parse_expr("(x+1"),
            Err(ParseError::Syntax { pos: 4, .. })
        ));
        assert!(matches!(
            parse_expr("x+*2"),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(
            parse_expr("x y"),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(
            parse_expr("x # 2"),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(
            parse_expr("sin x"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn domain_errors() {
        let e = parse_expr("1/x").unwrap();
        assert_eq!(e.eval(0.0, 0.0, 0.0), Err(EvalError::DivisionByZero));
        let e = parse_expr("sqrt(x)").unwrap();
        assert!(matches!(
            e.eval(-1.0, 0.0, 0.0),
            Err(EvalError::NegativeSqrt(_))
        ));
        let e = parse_expr("x^0.5").unwrap();
        assert!(matches!(
            e.eval(-1.0, 0.0, 0.0),
            Err(EvalError::NonFinite(_))
        ));
        let e = parse_expr("exp(x)").unwrap();
        assert!(matches!(
            e.eval(1000.0, 0.0, 0.0),
            Err(EvalError::NonFinite(_))
        ));
    }

    #[test]
    fn constant_detection() {
        assert!(parse_expr("2*pi+1").unwrap().is_constant());
        assert!(!parse_expr("2*pi+x").unwrap().is_constant());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = Expr> {
            let leaf = prop_oneof![
                (-5.0f64..5.0).prop_map(Expr::Num),
                Just(Expr::Pi),
                Just(Expr::Var(Var::X)),
                Just(Expr::Var(Var::Y)),
                Just(Expr::Var(Var::T)),
            ];
            leaf.prop_recursive(4, 24, 2, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                        BinOp::Add,
                        Box::new(a),
                        Box::new(b)
                    )),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                        BinOp::Sub,
                        Box::new(a),
                        Box::new(b)
                    )),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                        BinOp::Mul,
                        Box::new(a),
                        Box::new(b)
                    )),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Bin(
                        BinOp::Div,
                        Box::new(a),
                        Box::new(b)
                    )),
                    (inner.clone(), 0u8..4).prop_map(|(a, n)| Expr::Bin(
                        BinOp::Pow,
                        Box::new(a),
                        Box::new(Expr::Num(n as f64))
                    )),
                    inner
                        .clone()
                        .prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
                    inner
                        .clone()
                        .prop_map(|a| Expr::Call(Func::Cos, Box::new(a))),
                    inner
                        .clone()
                        .prop_map(|a| Expr::Call(Func::Abs, Box::new(a))),
                    inner.prop_map(|a| Expr::Call(Func::Exp, Box::new(a))),
                ]
            })
        }

        proptest! {
            #[test]
            fn print_then_reparse_evaluates_identically(
                e in arb_expr(),
                x in -2.0f64..2.0,
                y in -2.0f64..2.0,
                t in 0.0f64..1.0,
            ) {
                let printed = e.to_string();
                let back = parse_expr(&printed).unwrap();
                let a = e.eval(x, y, t);
                let b = back.eval(x, y, t);
                match (a, b) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false, "{:?} vs {:?} for {}", a, b, printed),
                }
            }

            #[test]
            fn square_of_sum_matches_product(x in -2.0f64..2.0, y in -2.0f64..2.0) {
                let e = parse_expr("(x+y)^2").unwrap();
                let v = e.eval(x, y, 0.0).unwrap();
                let s = x + y;
                prop_assert!((v - s * s).abs() <= 1e-15);
            }
        }
    }
}
