//! Exponent vectors, supports, sparse polynomials and moment vectors.
//!
//! Polynomials are stored as a canonical (lexicographically ordered) map from
//! exponent vectors to `f64` coefficients. The text form is
//!
//! ```text
//! poly := term (('+'|'-') term)*
//! term := coef? ('*'? var)*
//! var  := 'x' index ('^' exponent)?
//! ```
//!
//! with whitespace ignored, and the JSON form is
//! `{"n": 2, "terms": [{"exp": [2, 2], "coef": -3.0}]}`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest exponent accepted by the parser and the JSON reader.
pub const MAX_EXPONENT: u32 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("invalid exponent at position {pos}: {msg}")]
    Exponent { pos: usize, msg: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coefficient is not finite")]
    NonFinite,
    #[error("support must be nonempty")]
    EmptySupport,
    #[error("duplicate exponent vector {0}")]
    Duplicate(ExponentVector),
    #[error("exponent vector {0} is not in the support")]
    NotInSupport(ExponentVector),
    #[error("malformed JSON: {0}")]
    Json(String),
}

/// A lattice point in N₀ⁿ.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(entries: Vec<u32>) -> Self {
        ExponentVector(entries)
    }

    pub fn zeros(n: usize) -> Self {
        ExponentVector(vec![0; n])
    }

    /// `e` times the `i`-th unit vector.
    pub fn unit(n: usize, i: usize, e: u32) -> Self {
        let mut v = vec![0; n];
        v[i] = e;
        ExponentVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&e| e as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Every entry is even, i.e. the point lies in (2N₀)ⁿ.
    pub fn is_even(&self) -> bool {
        self.0.iter().all(|&e| e % 2 == 0)
    }

    /// Monomial value `Π x_i^{e_i}` with `0⁰ = 1`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl From<Vec<u32>> for ExponentVector {
    fn from(v: Vec<u32>) -> Self {
        ExponentVector(v)
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A nonempty finite set of exponent vectors of common dimension, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    n: usize,
    points: Vec<ExponentVector>,
}

impl SupportSet {
    /// Builds a support; points are sorted into canonical order.
    pub fn new(n: usize, mut points: Vec<ExponentVector>) -> Result<Self, PolyError> {
        if points.is_empty() {
            return Err(PolyError::EmptySupport);
        }
        for p in &points {
            if p.dim() != n {
                return Err(PolyError::DimensionMismatch {
                    expected: n,
                    found: p.dim(),
                });
            }
        }
        points.sort();
        for w in points.windows(2) {
            if w[0] == w[1] {
                return Err(PolyError::Duplicate(w[0].clone()));
            }
        }
        Ok(SupportSet { n, points })
    }

    /// Univariate support `{0, 1, …, d}`.
    pub fn univariate_dense(d: u32) -> Self {
        let points = (0..=d).map(|e| ExponentVector(vec![e])).collect();
        SupportSet { n: 1, points }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[ExponentVector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, e: &ExponentVector) -> Option<usize> {
        self.points.binary_search(e).ok()
    }

    pub fn contains(&self, e: &ExponentVector) -> bool {
        self.index_of(e).is_some()
    }

    pub fn even_points(&self) -> impl Iterator<Item = &ExponentVector> {
        self.points.iter().filter(|p| p.is_even())
    }

    /// The support extended by the given point (no-op if present).
    pub fn with_point(&self, e: ExponentVector) -> Result<SupportSet, PolyError> {
        if e.dim() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                found: e.dim(),
            });
        }
        let mut points = self.points.clone();
        if let Err(pos) = points.binary_search(&e) {
            points.insert(pos, e);
        }
        Ok(SupportSet { n: self.n, points })
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.n == other.n && self.points.iter().all(|p| other.contains(p))
    }
}

#[derive(Serialize, Deserialize)]
struct SupportJson {
    n: usize,
    points: Vec<Vec<u32>>,
}

impl SupportSet {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(SupportJson {
            n: self.n,
            points: self.points.iter().map(|p| p.0.clone()).collect(),
        })
        .expect("support serializes")
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self, PolyError> {
        let raw: SupportJson =
            serde_json::from_value(value.clone()).map_err(|e| PolyError::Json(e.to_string()))?;
        let points = raw
            .points
            .into_iter()
            .map(|p| check_exponents(&p).map(|_| ExponentVector(p)))
            .collect::<Result<Vec<_>, _>>()?;
        SupportSet::new(raw.n, points)
    }
}

fn check_exponents(p: &[u32]) -> Result<(), PolyError> {
    match p.iter().find(|&&e| e > MAX_EXPONENT) {
        Some(e) => Err(PolyError::Exponent {
            pos: 0,
            msg: format!("exponent {e} exceeds {MAX_EXPONENT}"),
        }),
        None => Ok(()),
    }
}

/// A real polynomial `Σ c_α x^α` with finitely many nonzero terms.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsePolynomial {
    n: usize,
    terms: BTreeMap<ExponentVector, f64>,
}

impl SparsePolynomial {
    pub fn zero(n: usize) -> Self {
        SparsePolynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// Builds a polynomial, merging like terms and dropping zero coefficients.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (ExponentVector, f64)>,
    {
        let mut p = SparsePolynomial::zero(n);
        for (e, c) in terms {
            p.add_term(e, c)?;
        }
        Ok(p)
    }

    fn add_term(&mut self, e: ExponentVector, c: f64) -> Result<(), PolyError> {
        if e.dim() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                found: e.dim(),
            });
        }
        if !c.is_finite() {
            return Err(PolyError::NonFinite);
        }
        let entry = self.terms.entry(e.clone()).or_insert(0.0);
        *entry += c;
        if !entry.is_finite() {
            return Err(PolyError::NonFinite);
        }
        if *entry == 0.0 {
            self.terms.remove(&e);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &ExponentVector) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    /// Terms in canonical (lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    /// The exponents carrying a nonzero coefficient; the zero polynomial is
    /// reported on the constant point so the support stays nonempty.
    pub fn support(&self) -> SupportSet {
        if self.terms.is_empty() {
            return SupportSet {
                n: self.n,
                points: vec![ExponentVector::zeros(self.n)],
            };
        }
        SupportSet {
            n: self.n,
            points: self.terms.keys().cloned().collect(),
        }
    }

    /// `max |c_α|` (0 for the zero polynomial).
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn degree(&self) -> u64 {
        self.terms.keys().map(|e| e.degree()).max().unwrap_or(0)
    }

    /// `p - gamma`.
    pub fn shift_constant(&self, gamma: f64) -> SparsePolynomial {
        let mut out = self.clone();
        // gamma is finite by construction at every call site
        out.add_term(ExponentVector::zeros(self.n), -gamma)
            .expect("finite shift");
        out
    }

    /// Polynomial with the absolute values of the coefficients.
    pub fn abs(&self) -> SparsePolynomial {
        SparsePolynomial {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.abs())).collect(),
        }
    }
}

/// Evaluates `p` at `x` with the convention `0⁰ = 1`.
pub fn evaluate(p: &SparsePolynomial, x: &[f64]) -> Result<f64, PolyError> {
    if x.len() != p.n {
        return Err(PolyError::DimensionMismatch {
            expected: p.n,
            found: x.len(),
        });
    }
    Ok(p.terms.iter().map(|(e, c)| c * e.monomial(x)).sum())
}

/// A vector `v ∈ R^A`, stored aligned with the canonical order of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector {
    support: SupportSet,
    values: Vec<f64>,
}

impl DualVector {
    pub fn new(support: SupportSet, values: Vec<f64>) -> Result<Self, PolyError> {
        if values.len() != support.len() {
            return Err(PolyError::DimensionMismatch {
                expected: support.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PolyError::NonFinite);
        }
        Ok(DualVector { support, values })
    }

    /// Builds from `(exponent, value)` pairs; the keys must be exactly the support.
    pub fn from_pairs(n: usize, pairs: Vec<(ExponentVector, f64)>) -> Result<Self, PolyError> {
        let mut pairs = pairs;
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (points, values): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        DualVector::new(SupportSet::new(n, points)?, values)
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: &ExponentVector) -> Option<f64> {
        self.support.index_of(e).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ExponentVector, f64)> {
        self.support.points.iter().zip(self.values.iter().copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, t: f64) -> DualVector {
        DualVector {
            support: self.support.clone(),
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    /// The pairing `v(f) = Σ c_α v_α`.
    pub fn pairing(&self, p: &SparsePolynomial) -> Result<f64, PolyError> {
        let mut acc = 0.0;
        for (e, c) in p.terms() {
            let v = self.get(e).ok_or_else(|| PolyError::NotInSupport(e.clone()))?;
            acc += c * v;
        }
        Ok(acc)
    }
}

#[derive(Serialize, Deserialize)]
struct DualJson {
    n: usize,
    points: Vec<Vec<u32>>,
    values: Vec<f64>,
}

impl DualVector {
    /// `{"n": 1, "points": [[0], [1]], "values": [1.0, 2.0]}`.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(DualJson {
            n: self.support.n,
            points: self.support.points.iter().map(|p| p.0.clone()).collect(),
            values: self.values.clone(),
        })
        .expect("dual vector serializes")
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self, PolyError> {
        let raw: DualJson =
            serde_json::from_value(value.clone()).map_err(|e| PolyError::Json(e.to_string()))?;
        if raw.points.len() != raw.values.len() {
            return Err(PolyError::DimensionMismatch {
                expected: raw.points.len(),
                found: raw.values.len(),
            });
        }
        for p in &raw.points {
            check_exponents(p)?;
        }
        let pairs = raw
            .points
            .into_iter()
            .map(ExponentVector)
            .zip(raw.values)
            .collect();
        DualVector::from_pairs(raw.n, pairs)
    }
}

/// The moment vector `(x^α)_{α ∈ A}`.
pub fn moment_vector(x: &[f64], support: &SupportSet) -> Result<DualVector, PolyError> {
    if x.len() != support.n {
        return Err(PolyError::DimensionMismatch {
            expected: support.n,
            found: x.len(),
        });
    }
    let values = support.points.iter().map(|a| a.monomial(x)).collect();
    DualVector::new(support.clone(), values)
}

// ---------------------------------------------------------------------------
// Text form

/// Parses a polynomial, inferring `n` from the largest variable index.
pub fn parse_polynomial(text: &str) -> Result<SparsePolynomial, PolyError> {
    let raw = Parser::new(text).parse()?;
    let n = raw.iter().map(|t| t.max_index).max().unwrap_or(0);
    build_polynomial(raw, n)
}

/// Parses a polynomial in exactly `n` variables.
pub fn parse_polynomial_in(text: &str, n: usize) -> Result<SparsePolynomial, PolyError> {
    let raw = Parser::new(text).parse()?;
    if let Some(found) = raw.iter().map(|t| t.max_index).max() {
        if found > n {
            return Err(PolyError::DimensionMismatch { expected: n, found });
        }
    }
    build_polynomial(raw, n)
}

fn build_polynomial(raw: Vec<RawTerm>, n: usize) -> Result<SparsePolynomial, PolyError> {
    let mut p = SparsePolynomial::zero(n);
    for term in raw {
        let mut e = vec![0u32; n];
        for (idx, pow) in term.powers {
            let slot = &mut e[idx - 1];
            *slot = slot.checked_add(pow).filter(|&s| s <= MAX_EXPONENT).ok_or(
                PolyError::Exponent {
                    pos: term.pos,
                    msg: format!("exponent exceeds {MAX_EXPONENT}"),
                },
            )?;
        }
        p.add_term(ExponentVector(e), term.coef)?;
    }
    Ok(p)
}

struct RawTerm {
    pos: usize,
    coef: f64,
    powers: Vec<(usize, u32)>,
    max_index: usize,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err(&self, msg: impl Into<String>) -> PolyError {
        PolyError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn parse(mut self) -> Result<Vec<RawTerm>, PolyError> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some(b'-') => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(b'+') => self.pos += 1,
            None => return Err(self.err("empty input")),
            _ => {}
        }
        loop {
            let mut term = self.term()?;
            term.coef *= sign;
            terms.push(term);
            match self.peek() {
                None => break,
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                Some(c) => return Err(self.err(format!("unexpected character '{}'", c as char))),
            }
            self.pos += 1;
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<RawTerm, PolyError> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let mut coef = 1.0;
        let mut has_coef = false;
        if matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            coef = self.number()?;
            has_coef = true;
        }
        let mut powers = Vec::new();
        let mut max_index = 0;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    if self.peek() != Some(b'x') {
                        return Err(self.err("expected variable after '*'"));
                    }
                }
                Some(b'x') => {}
                _ => break,
            }
            let (idx, pow) = self.var()?;
            max_index = max_index.max(idx);
            powers.push((idx, pow));
        }
        if !has_coef && powers.is_empty() {
            return Err(self.err("expected a term"));
        }
        Ok(RawTerm {
            pos: start,
            coef,
            powers,
            max_index,
        })
    }

    fn number(&mut self) -> Result<f64, PolyError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(self.err("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(self.err("malformed number exponent"));
            }
        }
        let lit = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let value: f64 = lit.parse().map_err(|_| PolyError::Syntax {
            pos: start,
            msg: format!("malformed number '{lit}'"),
        })?;
        if !value.is_finite() {
            return Err(PolyError::NonFinite);
        }
        Ok(value)
    }

    fn unsigned(&mut self) -> Option<u64> {
        let s = self.pos;
        let mut acc: u64 = 0;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            acc = acc
                .saturating_mul(10)
                .saturating_add((self.src[self.pos] - b'0') as u64);
            self.pos += 1;
        }
        (self.pos > s).then_some(acc)
    }

    fn var(&mut self) -> Result<(usize, u32), PolyError> {
        // at 'x'
        self.pos += 1;
        let idx = match self.unsigned() {
            Some(0) => return Err(self.err("variables are numbered from x1")),
            Some(i) if i <= u32::MAX as u64 => i as usize,
            Some(_) => return Err(self.err("variable index too large")),
            None => return Err(self.err("expected variable index after 'x'")),
        };
        let mut pow = 1u32;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let at = {
                self.skip_ws();
                self.pos
            };
            if self.src.get(at) == Some(&b'-') {
                return Err(PolyError::Exponent {
                    pos: at,
                    msg: "negative exponent".into(),
                });
            }
            let e = self.unsigned().ok_or(PolyError::Exponent {
                pos: at,
                msg: "expected integer exponent".into(),
            })?;
            if matches!(self.src.get(self.pos), Some(b'.') | Some(b'e') | Some(b'E')) {
                return Err(PolyError::Exponent {
                    pos: at,
                    msg: "non-integer exponent".into(),
                });
            }
            if e > MAX_EXPONENT as u64 {
                return Err(PolyError::Exponent {
                    pos: at,
                    msg: format!("exponent {e} exceeds {MAX_EXPONENT}"),
                });
            }
            pow = e as u32;
        }
        Ok((idx, pow))
    }
}

/// Canonical text form: terms in lexicographic exponent order, coefficients
/// printed with the shortest representation that round-trips.
pub fn serialize_polynomial(p: &SparsePolynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (e, c)) in p.terms().enumerate() {
        let mag = c.abs();
        if i == 0 {
            if c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0.0 { " - " } else { " + " });
        }
        let vars: Vec<String> = e
            .entries()
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(j, &k)| {
                if k == 1 {
                    format!("x{}", j + 1)
                } else {
                    format!("x{}^{}", j + 1, k)
                }
            })
            .collect();
        if vars.is_empty() {
            out.push_str(&format!("{mag}"));
        } else if mag == 1.0 {
            out.push_str(&vars.join("*"));
        } else {
            out.push_str(&format!("{mag}*{}", vars.join("*")));
        }
    }
    out
}

impl fmt::Display for SparsePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_polynomial(self))
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    n: usize,
    terms: Vec<TermJson>,
}

impl SparsePolynomial {
    pub fn to_json_value(&self) -> serde_json::Value {
        let doc = PolyJson {
            n: self.n,
            terms: self
                .terms()
                .map(|(e, c)| TermJson {
                    exp: e.0.clone(),
                    coef: c,
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("polynomial serializes")
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self, PolyError> {
        let doc: PolyJson =
            serde_json::from_value(value.clone()).map_err(|e| PolyError::Json(e.to_string()))?;
        let mut p = SparsePolynomial::zero(doc.n);
        for t in doc.terms {
            check_exponents(&t.exp)?;
            p.add_term(ExponentVector(t.exp), t.coef)?;
        }
        Ok(p)
    }

    pub fn from_json(text: &str) -> Result<Self, PolyError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PolyError::Json(e.to_string()))?;
        Self::from_json_value(&value)
    }
}
