//! Infix expressions for exact polynomials.
//!
//! Grammar: `+ - * /`, `^` with a non-negative integer exponent, parentheses,
//! integer literals, and the variables `x1..xM`, `p1..pM` (ambient), `z1..z2M`
//! (chart), `I1..IM` (actions) and `i` (imaginary unit). `p/q` rationals are
//! ordinary division of literals; division is only allowed by constants.
//! Decimal literals are rejected so that exact inputs stay exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::action::ActionPoly;
use crate::error::{Error, Result};
use crate::poly::{Basis, PhasePoly};
use crate::scalar::{format_rational, imag_unit, real, GaussianRational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    X,
    P,
    Z,
    Action,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Int(BigInt),
    Imag,
    /// One-based index as written.
    Var(VarKind, usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

/// Syntax tree node with the byte offset where it starts (including an
/// opening parenthesis).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub node: Node,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
    End,
}

fn perr<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        offset,
        message: message.into(),
    })
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'.' || bytes[i] == b'e' || bytes[i] == b'E') {
                return perr(
                    start,
                    "decimal literal on an exact path; write it as a rational such as 1/10",
                );
            }
            out.push((Tok::Int(src[start..i].parse().expect("digits")), start));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^()".contains(&c) {
            out.push((Tok::Op(c as char), i));
            i += 1;
        } else if c == b'.' {
            return perr(i, "decimal literal on an exact path; write it as a rational such as 1/10");
        } else {
            let ch = src[i..].chars().next().expect("in bounds");
            return perr(i, format!("unexpected character {ch:?}"));
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_op(&self, c: char) -> bool {
        self.peek().0 == Tok::Op(c)
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while self.is_op('+') || self.is_op('-') {
            let (t, _) = self.bump();
            let off = lhs.offset;
            let rhs = self.term()?;
            let node = if t == Tok::Op('+') {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
            lhs = Expr { node, offset: off };
        }
        Ok(lhs)
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.is_op('*') || self.is_op('/') {
            let (t, _) = self.bump();
            let off = lhs.offset;
            let rhs = self.unary()?;
            let node = if t == Tok::Op('*') {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
            lhs = Expr { node, offset: off };
        }
        Ok(lhs)
    }

    // unary := ('-' | '+') unary | power
    fn unary(&mut self) -> Result<Expr> {
        if self.is_op('-') {
            let (_, off) = self.bump();
            let inner = self.unary()?;
            return Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                offset: off,
            });
        }
        if self.is_op('+') {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    // power := atom ('^' unary)?   (right associative)
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.is_op('^') {
            self.bump();
            let exp = self.unary()?;
            let off = base.offset;
            return Ok(Expr {
                node: Node::Pow(Box::new(base), Box::new(exp)),
                offset: off,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let (t, off) = self.bump();
        match t {
            Tok::Int(v) => Ok(Expr {
                node: Node::Int(v),
                offset: off,
            }),
            Tok::Ident(name) => Ok(Expr {
                node: ident(&name, off)?,
                offset: off,
            }),
            Tok::Op('(') => {
                let mut e = self.expr()?;
                e.offset = off;
                match self.bump() {
                    (Tok::Op(')'), _) => Ok(e),
                    (_, o) => perr(o, "expected ')'"),
                }
            }
            Tok::End => perr(off, "unexpected end of input"),
            Tok::Op(c) => perr(off, format!("unexpected '{c}'")),
        }
    }
}

fn ident(name: &str, off: usize) -> Result<Node> {
    if name == "i" {
        return Ok(Node::Imag);
    }
    let (head, tail) = name.split_at(1);
    let kind = match head {
        "x" => VarKind::X,
        "p" => VarKind::P,
        "z" => VarKind::Z,
        "I" => VarKind::Action,
        _ => return perr(off, format!("unknown variable {name:?}")),
    };
    match tail.parse::<usize>() {
        Ok(k) if k >= 1 && !tail.starts_with('0') => Ok(Node::Var(kind, k)),
        _ => perr(off, format!("unknown variable {name:?}")),
    }
}

/// Parses text into a syntax tree.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        (Tok::End, _) => Ok(e),
        (_, off) => perr(*off, "unexpected trailing input"),
    }
}

impl Expr {
    /// Largest one-based index per variable kind, for inferring `M`.
    pub fn max_index(&self, kind: VarKind) -> usize {
        match &self.node {
            Node::Var(k, i) if *k == kind => *i,
            Node::Int(_) | Node::Imag | Node::Var(..) => 0,
            Node::Neg(a) => a.max_index(kind),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.max_index(kind).max(b.max_index(kind))
            }
        }
    }
}

/// Evaluation target: a phase-space polynomial in a basis, or an action
/// polynomial.
trait Ring: Sized + Clone {
    fn constant(&self, c: GaussianRational) -> Self;
    fn var(&self, kind: VarKind, k: usize, off: usize) -> Result<Self>;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, c: &GaussianRational) -> Self;
    fn as_constant(&self) -> Option<GaussianRational>;
    fn pow(&self, e: u32) -> Self;
}

impl Ring for PhasePoly {
    fn constant(&self, c: GaussianRational) -> Self {
        PhasePoly::constant(self.dim(), self.basis(), c)
    }

    fn var(&self, kind: VarKind, k: usize, off: usize) -> Result<Self> {
        let (m, b) = (self.dim(), self.basis());
        let bad = |what: &str| perr(off, format!("variable {what}{k} is not available in the {b} basis with M = {m}"));
        match (kind, b) {
            (VarKind::X, Basis::Ambient) if k <= m => Ok(PhasePoly::var(m, b, k - 1)),
            (VarKind::P, Basis::Ambient) if k <= m => Ok(PhasePoly::var(m, b, m + k - 1)),
            (VarKind::Z, Basis::Chart) if k <= 2 * m => Ok(PhasePoly::var(m, b, k - 1)),
            (VarKind::Action, Basis::Ambient | Basis::Chart) if k <= m => {
                let q = PhasePoly::var(m, b, k - 1);
                let p = PhasePoly::var(m, b, m + k - 1);
                Ok((&q.pow(2) + &p.pow(2)).scale(&crate::scalar::gr(1, 2)))
            }
            (VarKind::X, _) => bad("x"),
            (VarKind::P, _) => bad("p"),
            (VarKind::Z, _) => bad("z"),
            (VarKind::Action, _) => bad("I"),
        }
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, c: &GaussianRational) -> Self {
        PhasePoly::scale(self, c)
    }
    fn as_constant(&self) -> Option<GaussianRational> {
        self.is_constant().then(|| self.constant_term())
    }
    fn pow(&self, e: u32) -> Self {
        PhasePoly::pow(self, e)
    }
}

impl Ring for ActionPoly {
    fn constant(&self, c: GaussianRational) -> Self {
        ActionPoly::constant(self.dim(), c)
    }

    fn var(&self, kind: VarKind, k: usize, off: usize) -> Result<Self> {
        match kind {
            VarKind::Action if k <= self.dim() => Ok(ActionPoly::var(self.dim(), k - 1)),
            _ => perr(off, format!("only I1..I{} may appear in an action polynomial", self.dim())),
        }
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, c: &GaussianRational) -> Self {
        ActionPoly::scale(self, c)
    }
    fn as_constant(&self) -> Option<GaussianRational> {
        if self.is_constant() {
            Some(self.terms().next().map(|(_, c)| c.clone()).unwrap_or_else(GaussianRational::zero))
        } else {
            None
        }
    }
    fn pow(&self, e: u32) -> Self {
        ActionPoly::pow(self, e)
    }
}

fn eval<R: Ring>(e: &Expr, proto: &R) -> Result<R> {
    Ok(match &e.node {
        Node::Int(v) => proto.constant(real(BigRational::from_integer(v.clone()))),
        Node::Imag => proto.constant(imag_unit()),
        Node::Var(k, i) => proto.var(*k, *i, e.offset)?,
        Node::Neg(a) => eval(a, proto)?.scale(&real(-BigRational::one())),
        Node::Add(a, b) => eval(a, proto)?.add(&eval(b, proto)?),
        Node::Sub(a, b) => eval(a, proto)?.sub(&eval(b, proto)?),
        Node::Mul(a, b) => eval(a, proto)?.mul(&eval(b, proto)?),
        Node::Div(a, b) => {
            let d = eval(b, proto)?;
            let Some(c) = d.as_constant() else {
                return perr(b.offset, "division is only allowed by a constant");
            };
            if c.is_zero() {
                return perr(b.offset, "division by zero");
            }
            eval(a, proto)?.scale(&(GaussianRational::one() / c))
        }
        Node::Pow(a, b) => {
            let Some(c) = eval(b, proto)?.as_constant() else {
                return perr(b.offset, "exponent must be a constant non-negative integer");
            };
            if !c.im.is_zero() {
                return perr(b.offset, "complex power");
            }
            if !c.re.is_integer() {
                return perr(b.offset, "fractional power");
            }
            if c.re.is_negative() {
                return perr(b.offset, "negative power");
            }
            let Some(k) = c.re.to_integer().to_u32() else {
                return perr(b.offset, "exponent too large");
            };
            eval(a, proto)?.pow(k)
        }
    })
}

/// Smallest `M` that fits every variable in the expression (at least 1).
pub fn infer_dim(e: &Expr) -> usize {
    let z = e.max_index(VarKind::Z);
    [
        e.max_index(VarKind::X),
        e.max_index(VarKind::P),
        e.max_index(VarKind::Action),
        z.div_ceil(2),
        1,
    ]
    .into_iter()
    .max()
    .expect("nonempty")
}

/// Parses a phase-space polynomial with `M` variables in `basis`
/// (ambient or chart). `I_k` expands to `(x_k² + p_k²)/2` or
/// `(z_k² + z_{k+M}²)/2`.
pub fn parse_poly(src: &str, dim: usize, basis: Basis) -> Result<PhasePoly> {
    if basis == Basis::Ladder {
        return Err(Error::Unsupported("ladder-basis expressions".into()));
    }
    eval(&parse_expr(src)?, &PhasePoly::zero(dim, basis))
}

pub fn parse_action(src: &str, dim: usize) -> Result<ActionPoly> {
    eval(&parse_expr(src)?, &ActionPoly::zero(dim))
}

fn coefficient_text(c: &GaussianRational) -> (bool, String) {
    // returns (negative, magnitude text) so terms can be joined with " - "
    if c.im.is_zero() {
        return (c.re.is_negative(), format_rational(&c.re.abs()));
    }
    if c.re.is_zero() {
        let mag = if c.im.abs().is_one() {
            "i".to_string()
        } else {
            format!("{}*i", format_rational(&c.im.abs()))
        };
        return (c.im.is_negative(), mag);
    }
    let sign = if c.im.is_negative() { "-" } else { "+" };
    (
        false,
        format!("({} {sign} {}*i)", format_rational(&c.re), format_rational(&c.im.abs())),
    )
}

/// Text that [`parse_poly`] maps back to the same polynomial.
pub fn print_poly(f: &PhasePoly) -> Result<String> {
    if f.basis() == Basis::Ladder {
        return Err(Error::Unsupported("ladder-basis expressions".into()));
    }
    let names: Vec<String> = (0..f.nvars()).map(|k| f.basis().var_name(f.dim(), k)).collect();
    Ok(join_terms(f.terms().map(|(m, c)| (m.exponents().to_vec(), c.clone())).collect(), &names))
}

pub fn print_action(f: &ActionPoly) -> String {
    let names: Vec<String> = (0..f.dim()).map(|k| format!("I{}", k + 1)).collect();
    join_terms(f.terms().map(|(m, c)| (m.exponents().to_vec(), c.clone())).collect(), &names)
}

fn join_terms(terms: Vec<(Vec<u32>, GaussianRational)>, names: &[String]) -> String {
    let mut out = String::new();
    for (exps, c) in terms.into_iter().rev() {
        let vars: Vec<String> = exps
            .iter()
            .zip(names)
            .filter(|(e, _)| **e > 0)
            .map(|(e, n)| if *e == 1 { n.clone() } else { format!("{n}^{e}") })
            .collect();
        let (neg, mag) = coefficient_text(&c);
        let body = match (vars.is_empty(), mag == "1") {
            (true, _) => mag,
            (false, true) => vars.join("*"),
            (false, false) => format!("{mag}*{}", vars.join("*")),
        };
        match (out.is_empty(), neg) {
            (true, false) => out.push_str(&body),
            (true, true) => {
                out.push('-');
                out.push_str(&body);
            }
            (false, false) => {
                out.push_str(" + ");
                out.push_str(&body);
            }
            (false, true) => {
                out.push_str(" - ");
                out.push_str(&body);
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::DarbouxChart;
    use crate::scalar::gr;

    #[test]
    fn action_from_text() {
        let f = parse_poly("(x1^2+p1^2)/2", 1, Basis::Ambient).unwrap();
        assert_eq!(f, DarbouxChart::identity(1).actions()[0]);
        assert_eq!(parse_poly("I1", 1, Basis::Ambient).unwrap(), f);
    }

    #[test]
    fn rational_coefficient() {
        let f = parse_poly("x1*p1 + 1/3", 1, Basis::Ambient).unwrap();
        assert_eq!(f.coeff(&[0, 0]), gr(1, 3));
        assert_eq!(f.coeff(&[1, 1]), gr(1, 1));
    }

    #[test]
    fn errors_carry_offsets() {
        let fractional = parse_poly("x1^(1/2)", 1, Basis::Ambient).unwrap_err();
        assert!(matches!(fractional, Error::Parse { offset: 3, ref message } if message.contains("fractional")));
        assert!(matches!(
            parse_poly("x1 + 0.5", 1, Basis::Ambient).unwrap_err(),
            Error::Parse { offset: 5, .. }
        ));
        assert!(matches!(
            parse_poly("x1 + y2", 1, Basis::Ambient).unwrap_err(),
            Error::Parse { offset: 5, .. }
        ));
        assert!(parse_poly("x1 / p1", 1, Basis::Ambient).is_err());
        assert!(parse_poly("x2", 1, Basis::Ambient).is_err());
        assert!(parse_poly("(x1", 1, Basis::Ambient).is_err());
    }

    #[test]
    fn print_round_trip() {
        let f = parse_poly("-3/2*x1^2*p2 + (1/2 - i)*p1 - i*x2 + 7", 2, Basis::Ambient).unwrap();
        let text = print_poly(&f).unwrap();
        assert_eq!(parse_poly(&text, 2, Basis::Ambient).unwrap(), f);
        let a = parse_action("I1 + I1^2/10 - 2*I1*I2", 2).unwrap();
        assert_eq!(parse_action(&print_action(&a), 2).unwrap(), a);
    }

    #[test]
    fn chart_variables() {
        let f = parse_poly("z1 - z2^3", 1, Basis::Chart).unwrap();
        assert_eq!(f, DarbouxChart::double_shear().inverse()[0]);
        assert_eq!(infer_dim(&parse_expr("z3 + x1").unwrap()), 2);
    }
}
