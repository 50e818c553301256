//! The value domain `[0, ⊤]`.
//!
//! Distances are exact rationals whenever the inputs are. Two other cases
//! exist: [`Value::Infinity`], which is a proper element of the domain when
//! `⊤ = ∞`, and [`Value::Approx`], a finite float used for float-mode
//! iteration and for p-th roots that have no rational value. Approximate
//! values are contagious: any operation touching one yields one.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("cannot parse `{0}` as a value")]
    Parse(String),
    #[error("value {value} lies outside [0, {top}]")]
    OutOfRange { value: String, top: String },
    #[error("top bound must be strictly positive, got {0}")]
    NonPositiveTop(String),
    #[error("empty sequence")]
    Empty,
    #[error("float tolerance must be positive, got {0}")]
    BadTolerance(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
}

/// Shorthand for building small rationals in code and tests.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// The maximal distance `⊤ ∈ (0, ∞]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Top {
    Finite(Rational),
    Infinite,
}

impl Top {
    pub fn finite(q: Rational) -> Result<Self, NumericsError> {
        if q.is_positive() {
            Ok(Top::Finite(q))
        } else {
            Err(NumericsError::NonPositiveTop(format_rational(&q)))
        }
    }

    pub fn one() -> Self {
        Top::Finite(Rational::one())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Top::Infinite)
    }

    /// `⊤` itself as a value.
    pub fn value(&self) -> Value {
        match self {
            Top::Finite(q) => Value::Exact(q.clone()),
            Top::Infinite => Value::Infinity,
        }
    }

    /// The finite upper bound for LP variables, `None` when unbounded.
    pub fn as_bound(&self) -> Option<Rational> {
        match self {
            Top::Finite(q) => Some(q.clone()),
            Top::Infinite => None,
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        if v.is_negative() {
            return false;
        }
        match self {
            Top::Infinite => true,
            Top::Finite(q) => *v <= Value::Exact(q.clone()),
        }
    }

    pub fn check(&self, v: &Value) -> Result<(), NumericsError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(NumericsError::OutOfRange {
                value: v.to_string(),
                top: self.to_string(),
            })
        }
    }

    pub fn parse(s: &str) -> Result<Self, NumericsError> {
        match Value::parse(s)? {
            Value::Infinity => Ok(Top::Infinite),
            Value::Exact(q) => Top::finite(q),
            Value::Approx(f) => {
                Top::finite(Rational::from_float(f).ok_or_else(|| NumericsError::Parse(s.into()))?)
            }
        }
    }
}

impl fmt::Display for Top {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Top::Finite(q) => f.write_str(&format_rational(q)),
            Top::Infinite => f.write_str("inf"),
        }
    }
}

/// An element of `[0, ⊤]`.
#[derive(Debug, Clone)]
pub enum Value {
    Exact(Rational),
    /// Finite, non-negative float. Produced by float-mode rounding and by
    /// irrational roots.
    Approx(f64),
    Infinity,
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(Rational::zero())
    }

    pub fn exact(q: Rational) -> Self {
        Value::Exact(q)
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Value::Exact(ratio(num, den))
    }

    pub fn approx(f: f64) -> Self {
        if f.is_infinite() {
            Value::Infinity
        } else {
            // normalizes -0.0
            Value::Approx(f.max(0.0))
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(q) => q.is_zero(),
            Value::Approx(f) => *f == 0.0,
            Value::Infinity => false,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Value::Infinity)
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Value::Approx(_))
    }

    fn is_negative(&self) -> bool {
        match self {
            Value::Exact(q) => q.is_negative(),
            Value::Approx(f) => *f < 0.0 || f.is_nan(),
            Value::Infinity => false,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64().unwrap_or(f64::MAX),
            Value::Approx(f) => *f,
            Value::Infinity => f64::INFINITY,
        }
    }

    /// The exact rational behind a finite value. Floats convert exactly.
    pub fn to_rational(&self) -> Option<Rational> {
        match self {
            Value::Exact(q) => Some(q.clone()),
            Value::Approx(f) => Rational::from_float(*f),
            Value::Infinity => None,
        }
    }

    /// Rebuild a value from an exact computation whose inputs may have
    /// included approximate values.
    pub fn from_computed(q: Rational, exact: bool) -> Self {
        if exact {
            Value::Exact(q)
        } else {
            Value::approx(q.to_f64().unwrap_or(f64::MAX))
        }
    }

    /// `c · v` for a non-negative rational factor.
    pub fn scale(&self, c: &Rational) -> Value {
        match self {
            Value::Exact(q) => Value::Exact(q * c),
            Value::Approx(f) => Value::approx(f * c.to_f64().unwrap_or(0.0)),
            Value::Infinity if c.is_zero() => Value::zero(),
            Value::Infinity => Value::Infinity,
        }
    }

    /// Truncated subtraction `max(self - other, 0)` on finite values;
    /// `∞ - x = ∞` for finite `x`, and `∞ - ∞ = 0`.
    pub fn saturating_sub(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Infinity, Value::Infinity) => Value::zero(),
            (Value::Infinity, _) => Value::Infinity,
            (_, Value::Infinity) => Value::zero(),
            (Value::Exact(a), Value::Exact(b)) => {
                if a > b {
                    Value::Exact(a - b)
                } else {
                    Value::zero()
                }
            }
            (a, b) => Value::approx((a.to_f64() - b.to_f64()).max(0.0)),
        }
    }

    pub fn max_of(self, other: Value) -> Value {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min_of(self, other: Value) -> Value {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Equality up to `tol` whenever an approximate value is involved.
    pub fn approx_eq(&self, other: &Value, tol: f64) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            (Value::Infinity, Value::Infinity) => true,
            (Value::Infinity, _) | (_, Value::Infinity) => false,
            (a, b) => (a.to_f64() - b.to_f64()).abs() <= tol,
        }
    }

    /// `self ≤ other`, with slack `tol` when an approximate value is involved.
    pub fn le_tol(&self, other: &Value, tol: f64) -> bool {
        match (self, other) {
            (Value::Exact(_), Value::Exact(_)) | (Value::Infinity, _) | (_, Value::Infinity) => {
                self <= other
            }
            (a, b) => a.to_f64() <= b.to_f64() + tol,
        }
    }

    /// Parse `"p/q"`, a decimal such as `"0.25"` or `"1e-3"`, or `"inf"`.
    /// Decimals are read exactly.
    pub fn parse(s: &str) -> Result<Self, NumericsError> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞" | "+inf") {
            return Ok(Value::Infinity);
        }
        let q = parse_rational(t)?;
        if q.is_negative() {
            return Err(NumericsError::OutOfRange {
                value: t.to_string(),
                top: "inf".into(),
            });
        }
        Ok(Value::Exact(q))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    /// Total order. Floats are compared through their exact rational value.
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Infinity, Value::Infinity) => Ordering::Equal,
            (Value::Infinity, _) => Ordering::Greater,
            (_, Value::Infinity) => Ordering::Less,
            (Value::Exact(a), Value::Exact(b)) => a.cmp(b),
            (Value::Approx(a), Value::Approx(b)) => a.total_cmp(b),
            (a, b) => a.to_rational().cmp(&b.to_rational()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => f.write_str(&format_rational(q)),
            Value::Approx(x) => write!(f, "{x}"),
            Value::Infinity => f.write_str("inf"),
        }
    }
}

impl From<Rational> for Value {
    fn from(q: Rational) -> Self {
        Value::Exact(q)
    }
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parse a rational literal: `"p/q"`, an integer, or an exact decimal with
/// optional exponent.
pub fn parse_rational(s: &str) -> Result<Rational, NumericsError> {
    let t = s.trim();
    let err = || NumericsError::Parse(s.to_string());
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(NumericsError::DivisionByZero(s.to_string()));
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all: String = format!("{int_part}{frac_part}");
    let num = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| err())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut q = Rational::from_integer(num);
    if scale >= 0 {
        q *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -q } else { q })
}

/// Evaluate a small arithmetic expression over rationals, e.g. `"1/2 - eps"`
/// or `"c * 9/10"`. Identifiers are looked up in `params`.
pub fn eval_rational_expr(
    s: &str,
    params: &BTreeMap<String, Rational>,
) -> Result<Rational, NumericsError> {
    let mut p = ExprParser { src: s, pos: 0, params };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != s.len() {
        return Err(NumericsError::Parse(s.to_string()));
    }
    Ok(v)
}

struct ExprParser<'a> {
    src: &'a str,
    pos: usize,
    params: &'a BTreeMap<String, Rational>,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn err(&self) -> NumericsError {
        NumericsError::Parse(self.src.to_string())
    }

    fn expr(&mut self) -> Result<Rational, NumericsError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc += self.term()?;
                }
                Some('-') => {
                    self.pos += 1;
                    acc -= self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Rational, NumericsError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc *= self.factor()?;
                }
                Some('/') => {
                    self.pos += 1;
                    let d = self.factor()?;
                    if d.is_zero() {
                        return Err(NumericsError::DivisionByZero(self.src.to_string()));
                    }
                    acc /= d;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Rational, NumericsError> {
        self.skip_ws();
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.err());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_digit() || c == '.')
                {
                    self.pos += 1;
                }
                // exponent suffix, e.g. 1e-3
                if matches!(self.peek(), Some('e' | 'E')) {
                    let save = self.pos;
                    self.pos += 1;
                    if matches!(self.peek(), Some('-' | '+')) {
                        self.pos += 1;
                    }
                    if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                            self.pos += 1;
                        }
                    } else {
                        self.pos = save;
                    }
                }
                parse_rational(&self.src[start..self.pos])
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self
                    .peek()
                    .is_some_and(|c| c.is_alphanumeric() || c == '_')
                {
                    self.pos += self.peek().map_or(1, char::len_utf8);
                }
                let name = &self.src[start..self.pos];
                self.params
                    .get(name)
                    .cloned()
                    .ok_or_else(|| NumericsError::UnknownParam(name.to_string()))
            }
            _ => Err(self.err()),
        }
    }
}

/// How distances are represented during a computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericMode {
    Exact,
    Float { tol: f64 },
}

impl Default for NumericMode {
    fn default() -> Self {
        NumericMode::Float { tol: 1e-9 }
    }
}

impl NumericMode {
    pub fn float(tol: f64) -> Result<Self, NumericsError> {
        if tol > 0.0 && tol.is_finite() {
            Ok(NumericMode::Float { tol })
        } else {
            Err(NumericsError::BadTolerance(tol.to_string()))
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, NumericMode::Exact)
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            NumericMode::Exact => 0.0,
            NumericMode::Float { tol } => *tol,
        }
    }

    /// Round a computed value into this mode's representation.
    pub fn normalize(&self, v: Value) -> Value {
        match (self, v) {
            (NumericMode::Float { .. }, Value::Exact(q)) => {
                Value::approx(q.to_f64().unwrap_or(f64::MAX))
            }
            (_, v) => v,
        }
    }

    /// Equality as understood by this mode.
    pub fn same(&self, a: &Value, b: &Value) -> bool {
        match self {
            NumericMode::Exact => a == b,
            NumericMode::Float { tol } => a.approx_eq(b, *tol),
        }
    }
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericMode::Exact => f.write_str("exact"),
            NumericMode::Float { tol } => write!(f, "float({tol:e})"),
        }
    }
}

/// The Euclidean distance on `[0, ⊤]` with `d(x, ∞) = ∞` for finite `x`
/// and `d(∞, ∞) = 0`.
pub fn dist_e(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Infinity, Value::Infinity) => Value::zero(),
        (Value::Infinity, _) | (_, Value::Infinity) => Value::Infinity,
        (Value::Exact(x), Value::Exact(y)) => Value::Exact((x - y).abs()),
        (x, y) => Value::approx((x.to_f64() - y.to_f64()).abs()),
    }
}

/// Extended addition, `x + ∞ = ∞`. With `clamp` the result is cut at `⊤`.
pub fn add_ext(a: &Value, b: &Value, clamp: Option<&Top>) -> Value {
    let sum = match (a, b) {
        (Value::Infinity, _) | (_, Value::Infinity) => Value::Infinity,
        (Value::Exact(x), Value::Exact(y)) => Value::Exact(x + y),
        (x, y) => Value::approx(x.to_f64() + y.to_f64()),
    };
    match clamp {
        Some(top) => sum.min_of(top.value()),
        None => sum,
    }
}

pub fn sup_fin<'a, I>(vs: I) -> Result<Value, NumericsError>
where
    I: IntoIterator<Item = &'a Value>,
{
    vs.into_iter().max().cloned().ok_or(NumericsError::Empty)
}

pub fn inf_fin<'a, I>(vs: I) -> Result<Value, NumericsError>
where
    I: IntoIterator<Item = &'a Value>,
{
    vs.into_iter().min().cloned().ok_or(NumericsError::Empty)
}

/// Exact `p`-th root of a non-negative rational, if one exists.
pub fn exact_root(q: &Rational, p: u32) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    if p == 1 {
        return Some(q.clone());
    }
    let n = q.numer().nth_root(p);
    let d = q.denom().nth_root(p);
    if num_traits::pow(n.clone(), p as usize) == *q.numer()
        && num_traits::pow(d.clone(), p as usize) == *q.denom()
    {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// The weighted p-product `(c1·a^p + c2·b^p)^(1/p)`. Exact when the radicand
/// is a perfect p-th power, approximate otherwise.
pub fn pnorm(p: u32, c1: &Rational, c2: &Rational, a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Infinity, _) | (_, Value::Infinity) => Value::Infinity,
        (Value::Exact(x), Value::Exact(y)) => {
            let radicand = c1 * num_traits::pow(x.clone(), p as usize)
                + c2 * num_traits::pow(y.clone(), p as usize);
            match exact_root(&radicand, p) {
                Some(r) => Value::Exact(r),
                None => Value::approx(radicand.to_f64().unwrap_or(f64::MAX).powf(1.0 / p as f64)),
            }
        }
        (x, y) => {
            let c1 = c1.to_f64().unwrap_or(0.0);
            let c2 = c2.to_f64().unwrap_or(0.0);
            let pf = p as i32;
            Value::approx((c1 * x.to_f64().powi(pf) + c2 * y.to_f64().powi(pf)).powf(1.0 / p as f64))
        }
    }
}
