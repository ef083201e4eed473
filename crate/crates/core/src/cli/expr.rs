//! Arithmetic expressions over `theta` and `phi` for right-hand sides.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" unary)?
//! atom   := number | "theta" | "phi" | "pi"
//!         | func "(" expr ")" | "(" expr ")"
//! func   := "sin" | "cos" | "sinh" | "cosh" | "exp"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-2^2 = -4`. The Greek letters `θ`, `φ` and `π` are accepted as aliases.

use std::fmt;

use crate::error::{Error, Result};

/// Bracket/operator nesting accepted by the parser.
const MAX_NESTING: usize = 256;
/// Depth of the resulting tree; half the nesting cap so printed trees re-parse.
pub const MAX_DEPTH: usize = 100;
pub const MAX_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Theta,
    Phi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, theta: f64, phi: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Theta => theta,
            Expr::Phi => phi,
            Expr::Neg(a) => -a.eval(theta, phi),
            Expr::Add(a, b) => a.eval(theta, phi) + b.eval(theta, phi),
            Expr::Sub(a, b) => a.eval(theta, phi) - b.eval(theta, phi),
            Expr::Mul(a, b) => a.eval(theta, phi) * b.eval(theta, phi),
            Expr::Div(a, b) => a.eval(theta, phi) / b.eval(theta, phi),
            Expr::Pow(a, b) => a.eval(theta, phi).powf(b.eval(theta, phi)),
            Expr::Call(f, a) => f.apply(a.eval(theta, phi)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Theta | Expr::Phi => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    pub fn depends_on_phi(&self) -> bool {
        match self {
            Expr::Phi => true,
            Expr::Num(_) | Expr::Theta => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_phi(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on_phi() || b.depends_on_phi()
            }
        }
    }
}

/// Fully parenthesised form; re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Theta => f.write_str("theta"),
            Expr::Phi => f.write_str("phi"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    Open,
    Close,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '0'..='9' | '.' => {
                let mut end = pos;
                let mut prev = ' ';
                while let Some(&(p, d)) = it.peek() {
                    let exponent_sign = (d == '+' || d == '-') && (prev == 'e' || prev == 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exponent_sign {
                        end = p + d.len_utf8();
                        prev = d;
                        it.next();
                    } else {
                        break;
                    }
                }
                let text = &src[pos..end];
                let v: f64 = text
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| syntax(pos, format!("bad number '{text}'")))?;
                out.push((pos, Tok::Num(v)));
            }
            c if c.is_alphabetic() => {
                let mut end = pos;
                while let Some(&(p, d)) = it.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        end = p + d.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((pos, Tok::Ident(src[pos..end].to_string())));
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push((pos, Tok::Op(c)));
                it.next();
            }
            '(' => {
                out.push((pos, Tok::Open));
                it.next();
            }
            ')' => {
                out.push((pos, Tok::Close));
                it.next();
            }
            other => return Err(syntax(pos, format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

fn syntax(pos: usize, msg: impl fmt::Display) -> Error {
    Error::Config(format!("expression: {msg} at byte {pos}"))
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Tok::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.at += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn descend(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(syntax(self.pos(), "nesting too deep"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        self.descend()?;
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op(&['-']).is_some() {
            self.descend()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            self.descend()?;
            let exp = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn close(&mut self) -> Result<()> {
        if self.peek() == Some(&Tok::Close) {
            self.at += 1;
            Ok(())
        } else {
            Err(syntax(self.pos(), "expected ')'"))
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        let Some(tok) = self.peek().cloned() else {
            return Err(syntax(pos, "unexpected end of input"));
        };
        self.at += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Open => {
                let e = self.expr()?;
                self.close()?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "theta" | "θ" => Ok(Expr::Theta),
                "phi" | "φ" => Ok(Expr::Phi),
                "pi" | "π" => Ok(Expr::Num(std::f64::consts::PI)),
                _ => {
                    let func = Func::from_name(&name).ok_or_else(|| syntax(pos, format!("unknown name '{name}'")))?;
                    if self.peek() != Some(&Tok::Open) {
                        return Err(syntax(self.pos(), format!("expected '(' after {name}")));
                    }
                    self.at += 1;
                    let arg = self.expr()?;
                    self.close()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
            },
            Tok::Op(c) => Err(syntax(pos, format!("unexpected '{c}'"))),
            Tok::Close => Err(syntax(pos, "unexpected ')'")),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    if src.len() > MAX_LEN {
        return Err(syntax(MAX_LEN, format!("expression longer than {MAX_LEN} bytes")));
    }
    let mut p = Parser {
        toks: tokenize(src)?,
        at: 0,
        end: src.len(),
        depth: 0,
    };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(syntax(p.pos(), "trailing input"));
    }
    if e.depth() > MAX_DEPTH {
        return Err(syntax(0, format!("expression deeper than {MAX_DEPTH} levels")));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ev(s: &str, t: f64, p: f64) -> f64 {
        parse_expr(s).unwrap().eval(t, p)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0, 0.0), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(ev("2 ^ -1", 0.0, 0.0), 0.5);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("--3", 0.0, 0.0), 3.0);
        assert_eq!(ev("1.5e1 + 2E-1", 0.0, 0.0), 15.2);
    }

    #[test]
    fn variables_and_functions() {
        let v = ev("2 + 0.1*cos(theta) * sin(phi)", 0.3, 1.1);
        assert!((v - (2.0 + 0.1 * 0.3f64.cos() * 1.1f64.sin())).abs() < 1e-15);
        assert!((ev("sinh(2)", 0.0, 0.0) - 2.0f64.sinh()).abs() < 1e-15);
        assert!((ev("cosh(1)^2 - sinh(1)^2", 0.0, 0.0) - 1.0).abs() < 1e-14);
        assert_eq!(ev("exp(0)", 0.0, 0.0), 1.0);
        assert_eq!(ev("pi", 0.0, 0.0), PI);
        assert_eq!(ev("θ + φ", 1.0, 2.0), 3.0);
        assert!(!parse_expr("cos(theta)").unwrap().depends_on_phi());
        assert!(parse_expr("1 + phi").unwrap().depends_on_phi());
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "", "1 +", "(1", "1)", "foo", "sin 1", "1 2", "2 ** 3", "1.2.3", "#", "sin()", "tan(1)", "1e999",
        ] {
            assert!(matches!(parse_expr(bad), Err(Error::Config(_))), "{bad:?}");
        }
        let deep = "(".repeat(500) + "1" + &")".repeat(500);
        assert!(parse_expr(&deep).is_err());
        let minus = "-".repeat(500) + "1";
        assert!(parse_expr(&minus).is_err());
        let chain = vec!["1"; 1000].join("+");
        assert!(parse_expr(&chain).is_err());
        assert!(parse_expr(&vec!["1"; 50].join("+")).is_ok());
    }

    #[test]
    fn display_round_trips() {
        for s in ["1 + 2*theta^2", "-sin(phi)/3", "2^-1^2", "cosh(theta - pi) * exp(-phi)"] {
            let e = parse_expr(s).unwrap();
            assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
        }
    }
}
