//! Symbolic expressions over jet coordinates.
//!
//! An [`Expr`] is an immutable, reference-counted tree whose leaves are
//! rational numbers, jet variables `x^i` / `y^(a)i`, and named parameters.
//! Trees built with the arithmetic operators are left unsimplified; call
//! [`simplify`] to bring them into canonical sum-of-monomials form.

pub(crate) mod diff;
mod display;
mod eval;
mod parse;
mod poly;
mod random;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

pub use diff::differentiate;
pub use eval::{evaluate, JetPoint};
pub use parse::parse_expression;
pub use poly::simplify;
pub use random::{
    compare_randomized, equal_randomized, random_polynomial, IdentityReport, RandomizedCheck,
    SampleBox,
};

/// Rational exponent of a power node.
pub type Exponent = Ratio<i64>;

/// A coordinate on the order-k tangent bundle.
///
/// `Base(i)` is `x^i`; `Jet { level, index }` is `y^(level) index`. Indices
/// are 1-based. The derived ordering puts every base coordinate before every
/// jet coordinate and orders jet coordinates by `(level, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    Base(u32),
    Jet { level: u32, index: u32 },
}

impl VarId {
    pub fn x(index: u32) -> Self {
        VarId::Base(index)
    }

    pub fn y(level: u32, index: u32) -> Self {
        VarId::Jet { level, index }
    }

    /// Jet level, with `x` at level 0.
    pub fn level(&self) -> u32 {
        match *self {
            VarId::Base(_) => 0,
            VarId::Jet { level, .. } => level,
        }
    }

    pub fn index(&self) -> u32 {
        match *self {
            VarId::Base(i) => i,
            VarId::Jet { index, .. } => index,
        }
    }

    /// Coordinate with the given level (0 meaning `x`).
    pub fn at_level(level: u32, index: u32) -> Self {
        if level == 0 {
            VarId::Base(index)
        } else {
            VarId::Jet { level, index }
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Base(i) => write!(f, "x{i}"),
            VarId::Jet { level, index } => write!(f, "y{level}_{index}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Exact rational constant with a cached double approximation.
#[derive(Debug, Clone)]
pub struct Num {
    exact: BigRational,
    approx: f64,
}

impl Num {
    pub fn new(exact: BigRational) -> Self {
        let approx = exact.to_f64().unwrap_or(f64::NAN);
        Num { exact, approx }
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl Eq for Num {}

impl PartialOrd for Num {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Num {
    fn cmp(&self, other: &Self) -> Ordering {
        self.exact.cmp(&other.exact)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Number(Num),
    Var(VarId),
    Param(Arc<str>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, Exponent),
    Call(Func, Expr),
    Neg(Expr),
}

impl Node {
    fn rank(&self) -> u8 {
        match self {
            Node::Number(_) => 0,
            Node::Param(_) => 1,
            Node::Var(_) => 2,
            Node::Call(..) => 3,
            Node::Power(..) => 4,
            Node::Product(_) => 5,
            Node::Sum(_) => 6,
            Node::Neg(_) => 7,
        }
    }
}

/// Immutable symbolic expression.
#[derive(Clone, PartialEq, Eq)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn rational(value: BigRational) -> Self {
        Expr::from_node(Node::Number(Num::new(value)))
    }

    pub fn int(value: i64) -> Self {
        Expr::rational(BigRational::from_integer(BigInt::from(value)))
    }

    /// The exact fraction `num/den`. Panics if `den == 0`.
    pub fn frac(num: i64, den: i64) -> Self {
        Expr::rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Self {
        Expr::int(0)
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn var(v: VarId) -> Self {
        Expr::from_node(Node::Var(v))
    }

    pub fn x(index: u32) -> Self {
        Expr::var(VarId::Base(index))
    }

    pub fn y(level: u32, index: u32) -> Self {
        Expr::var(VarId::Jet { level, index })
    }

    pub fn param(name: &str) -> Self {
        Expr::from_node(Node::Param(Arc::from(name)))
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::from_node(Node::Sum(terms)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        match factors.len() {
            0 => Expr::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::from_node(Node::Product(factors)),
        }
    }

    pub fn pow(base: Expr, exponent: Exponent) -> Self {
        Expr::from_node(Node::Power(base, exponent))
    }

    pub fn powi(base: Expr, exponent: i64) -> Self {
        Expr::pow(base, Exponent::from_integer(exponent))
    }

    pub fn call(func: Func, arg: Expr) -> Self {
        Expr::from_node(Node::Call(func, arg))
    }

    pub fn neg(arg: Expr) -> Self {
        Expr::from_node(Node::Neg(arg))
    }

    pub fn as_number(&self) -> Option<&BigRational> {
        match self.node() {
            Node::Number(n) => Some(n.exact()),
            _ => None,
        }
    }

    /// True for the literal number zero (no simplification is attempted).
    pub fn is_zero(&self) -> bool {
        self.as_number().is_some_and(|n| n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_number().is_some_and(|n| n.is_one())
    }

    /// Multiply by an exact rational.
    pub fn scale(&self, factor: BigRational) -> Expr {
        Expr::product(vec![Expr::rational(factor), self.clone()])
    }

    /// All jet variables appearing in the expression.
    pub fn variables(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let Node::Var(v) = node {
                out.insert(*v);
            }
        });
        out
    }

    /// All parameter names appearing in the expression.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |node| {
            if let Node::Param(p) = node {
                out.insert(p.to_string());
            }
        });
        out
    }

    /// Highest jet level referenced (0 if only `x` or no variables).
    pub fn max_level(&self) -> u32 {
        self.variables().iter().map(VarId::level).max().unwrap_or(0)
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        let mut found = false;
        self.visit(&mut |node| {
            if let Node::Var(w) = node {
                found |= *w == v;
            }
        });
        found
    }

    fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self.node());
        match self.node() {
            Node::Number(_) | Node::Var(_) | Node::Param(_) => {}
            Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|x| x.visit(f)),
            Node::Power(b, _) => b.visit(f),
            Node::Call(_, a) | Node::Neg(a) => a.visit(f),
        }
    }

    /// Replace every occurrence of a variable by an expression.
    pub fn substitute(&self, v: VarId, with: &Expr) -> Expr {
        match self.node() {
            Node::Var(w) if *w == v => with.clone(),
            Node::Number(_) | Node::Var(_) | Node::Param(_) => self.clone(),
            Node::Sum(xs) => Expr::sum(xs.iter().map(|x| x.substitute(v, with)).collect()),
            Node::Product(xs) => {
                Expr::product(xs.iter().map(|x| x.substitute(v, with)).collect())
            }
            Node::Power(b, e) => Expr::pow(b.substitute(v, with), *e),
            Node::Call(func, a) => Expr::call(*func, a.substitute(v, with)),
            Node::Neg(a) => Expr::neg(a.substitute(v, with)),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical total order: numbers, parameters, variables, calls, powers,
/// products, sums; ties broken structurally.
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let (a, b) = (self.node(), other.node());
        match a.rank().cmp(&b.rank()) {
            Ordering::Equal => {}
            o => return o,
        }
        match (a, b) {
            (Node::Number(x), Node::Number(y)) => x.cmp(y),
            (Node::Var(x), Node::Var(y)) => x.cmp(y),
            (Node::Param(x), Node::Param(y)) => x.cmp(y),
            (Node::Call(f, x), Node::Call(g, y)) => f.cmp(g).then_with(|| x.cmp(y)),
            (Node::Power(x, e), Node::Power(y, d)) => x.cmp(y).then_with(|| e.cmp(d)),
            (Node::Product(xs), Node::Product(ys)) | (Node::Sum(xs), Node::Sum(ys)) => {
                xs.iter().cmp(ys.iter())
            }
            (Node::Neg(x), Node::Neg(y)) => x.cmp(y),
            _ => unreachable!("rank mismatch"),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, Expr::neg(rhs)])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::product(vec![self, rhs])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        self.clone() + rhs.clone()
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self.clone() - rhs.clone()
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        self.clone() * rhs.clone()
    }
}

/// Errors raised by parsing and evaluating expressions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable {var} at byte {offset} is out of range: {reason}")]
    VariableRange {
        var: String,
        offset: usize,
        reason: String,
    },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unbound variable {0}")]
    UnboundVariable(VarId),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("randomized check failed: {0}")]
    Sampling(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn var_order_puts_base_first() {
        assert!(VarId::x(5) < VarId::y(1, 1));
        assert!(VarId::y(1, 2) < VarId::y(2, 1));
        assert!(VarId::y(2, 1) < VarId::y(2, 2));
        assert_eq!(VarId::at_level(0, 3), VarId::x(3));
    }

    #[test]
    fn collects_variables_and_parameters() {
        let e = Expr::param("omega") * Expr::y(2, 1) + Expr::x(1);
        assert_eq!(
            e.variables().into_iter().collect::<Vec<_>>(),
            vec![VarId::x(1), VarId::y(2, 1)]
        );
        assert!(e.parameters().contains("omega"));
        assert_eq!(e.max_level(), 2);
    }
}
