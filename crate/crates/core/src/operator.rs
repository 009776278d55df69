//! Periodic strictly lower-triangular difference operators
//!
//! `L = T^{-k-1} + sum_{j=1..k} a_i^{(j)} T^{-j}` acting on sequences by
//! `(L psi)_i = psi_{i-k-1} + sum_j a_i^{(j)} psi_{i-j}`, with coefficients
//! periodic in `i` of period `n`.
//!
//! Sites are addressed by any integer `i`; storage row `p` holds site `p + 1`,
//! so site `n` and site `0` share a row.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible `|a_i^{(1)}|`.
pub const EPS_MIN: f64 = 1e-12;

#[inline]
pub(crate) fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Which reduced Lax flow to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowTag {
    /// `L_1^- = v + T^{-1}`.
    Xi,
    /// `L_1^+ = c T` with `c_i = 1 / a_{i+1}^{(1)}`.
    Eta,
}

impl FlowTag {
    pub fn name(self) -> &'static str {
        match self {
            FlowTag::Xi => "xi",
            FlowTag::Eta => "eta",
        }
    }
}

impl std::str::FromStr for FlowTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(FlowTag::Xi),
            "eta" => Ok(FlowTag::Eta),
            other => Err(Error::InvalidArgument(format!("unknown flow '{other}'"))),
        }
    }
}

/// How `phi_i` with `a_i^{(1)} = exp(phi_i - phi_{i-1})` is allowed to be formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogMode {
    /// `a^{(1)} > 0`, `phi` real.
    #[default]
    Real,
    /// Principal logarithm; `phi` may carry an imaginary part.
    Complex,
}

/// Sampling interval for [`TriangularOperator::random`].
///
/// `a^{(1)}` is drawn from `[lo, hi]`; the bands `j >= 2` from the symmetric
/// interval `[-(hi - lo), hi - lo]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SampleRange {
    fn default() -> Self {
        SampleRange { lo: 0.5, hi: 1.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorJson", into = "OperatorJson")]
pub struct TriangularOperator {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    n: usize,
    k: usize,
    a: Vec<Vec<f64>>,
}

impl TryFrom<OperatorJson> for TriangularOperator {
    type Error = Error;

    fn try_from(value: OperatorJson) -> Result<Self> {
        TriangularOperator::from_rows(value.n, value.k, &value.a)
    }
}

impl From<TriangularOperator> for OperatorJson {
    fn from(op: TriangularOperator) -> Self {
        OperatorJson {
            n: op.n,
            k: op.k,
            a: op.rows(),
        }
    }
}

impl TriangularOperator {
    /// Builds an operator from a flat table, row-major by site (`1..=n`).
    ///
    /// Only the shape is checked; use [`validate`](Self::validate) for the
    /// operator invariants.
    pub fn from_coeffs(n: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Malformed(format!("n = {n} and k = {k} must be positive")));
        }
        if coeffs.len() != n * k {
            return Err(Error::Malformed(format!(
                "expected {} coefficients, got {}",
                n * k,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Malformed("non-finite coefficient".into()));
        }
        Ok(TriangularOperator { n, k, coeffs })
    }

    /// Builds an operator from rows `[a_i^{(1)}, ..., a_i^{(k)}]`, `i = 1..=n`.
    pub fn from_rows(n: usize, k: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::Malformed(format!("expected {n} rows, got {}", rows.len())));
        }
        let mut coeffs = Vec::with_capacity(n * k);
        for (p, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Malformed(format!(
                    "row {} has {} entries, expected {k}",
                    p + 1,
                    row.len()
                )));
            }
            coeffs.extend_from_slice(row);
        }
        Self::from_coeffs(n, k, coeffs)
    }

    /// Operator with `k = 1` and `a_i^{(1)} = values[i - 1]`.
    pub fn first_order(values: &[f64]) -> Result<Self> {
        Self::from_coeffs(values.len(), 1, values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Flat coefficient table, row-major by site `1..=n`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.coeffs.chunks(self.k).map(|r| r.to_vec()).collect()
    }

    /// `a_i^{(j)}` for any site `i`; `j = k + 1` gives the implicit 1 and
    /// `j = 0` gives 0.
    #[inline]
    pub fn a(&self, i: isize, j: usize) -> f64 {
        if j == 0 || j > self.k + 1 {
            0.0
        } else if j == self.k + 1 {
            1.0
        } else {
            self.coeffs[wrap(i - 1, self.n) * self.k + j - 1]
        }
    }

    /// `prod_i a_i^{(1)}`.
    pub fn leading_product(&self) -> f64 {
        (1..=self.n as isize).map(|i| self.a(i, 1)).product()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()))
    }

    pub fn validate(&self) -> Result<()> {
        let order = self.k + 1;
        if order > self.n {
            return Err(Error::OrderExceedsPeriod { n: self.n, order });
        }
        if gcd(self.n, order) != 1 {
            return Err(Error::NotCoprime { n: self.n, order });
        }
        for i in 1..=self.n {
            if self.a(i as isize, 1).abs() < EPS_MIN {
                return Err(Error::LeadingCoefficientZero { site: i });
            }
        }
        Ok(())
    }

    /// Checks `a^{(1)} > 0`, the requirement for a real `phi`.
    pub fn check_real_mode(&self) -> Result<()> {
        for i in 1..=self.n {
            if self.a(i as isize, 1) <= 0.0 {
                return Err(Error::NonPositiveLeading { site: i });
            }
        }
        Ok(())
    }

    /// Coefficients `b_i^{(j)} = a_{i+j}^{(j)}` of the formal adjoint
    /// `L* = T^{k+1} + sum_j b_i^{(j)} T^j`.
    pub fn adjoint_coefficients(&self) -> UpperTriangularTable {
        let mut coeffs = Vec::with_capacity(self.n * self.k);
        for i in 1..=self.n as isize {
            for j in 1..=self.k {
                coeffs.push(self.a(i + j as isize, j));
            }
        }
        UpperTriangularTable {
            n: self.n,
            k: self.k,
            coeffs,
        }
    }

    /// The same operator with every coefficient replaced.
    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::from_coeffs(self.n, self.k, coeffs)
    }

    /// Embeds `L` into a banded operator with the unit band `k + 1` explicit.
    pub fn to_banded(&self) -> BandedOperator {
        let depth = self.k + 1;
        let mut coeffs = Vec::with_capacity(self.n * depth);
        for i in 1..=self.n as isize {
            for j in 1..=depth {
                coeffs.push(self.a(i, j));
            }
        }
        BandedOperator {
            n: self.n,
            depth,
            coeffs,
        }
    }

    /// Deterministic sample: a function of `(n, k, seed, range)` only.
    pub fn random(n: usize, k: usize, seed: u64, range: SampleRange) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(n, k, &mut rng, range)
    }

    /// Samples using a caller-supplied generator.
    pub fn random_with<R: Rng>(n: usize, k: usize, rng: &mut R, range: SampleRange) -> Result<Self> {
        if !(range.lo > 0.0 && range.hi > range.lo && range.hi.is_finite()) {
            return Err(Error::InvalidRange {
                lo: range.lo,
                hi: range.hi,
            });
        }
        if n == 0 || k == 0 {
            return Err(Error::Malformed(format!("n = {n} and k = {k} must be positive")));
        }
        if k + 1 > n {
            return Err(Error::OrderExceedsPeriod { n, order: k + 1 });
        }
        if gcd(n, k + 1) != 1 {
            return Err(Error::NotCoprime { n, order: k + 1 });
        }
        let width = range.hi - range.lo;
        let mut coeffs = Vec::with_capacity(n * k);
        for _ in 0..n {
            coeffs.push(rng.random_range(range.lo..=range.hi));
            for _ in 1..k {
                coeffs.push(rng.random_range(-width..=width));
            }
        }
        Self::from_coeffs(n, k, coeffs)
    }
}

/// Coefficient table of an upper-triangular operator
/// `T^{k+1} + sum_j b_i^{(j)} T^j`, row-major by site `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperTriangularTable {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl UpperTriangularTable {
    pub fn b(&self, i: isize, j: usize) -> f64 {
        self.coeffs[wrap(i - 1, self.n) * self.k + j - 1]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.coeffs.chunks(self.k).map(|r| r.to_vec()).collect()
    }

    /// Formal adjoint back to lower-triangular form: `a_i^{(j)} = b_{i-j}^{(j)}`.
    pub fn adjoint(&self) -> TriangularOperator {
        let mut coeffs = Vec::with_capacity(self.n * self.k);
        for i in 1..=self.n as isize {
            for j in 1..=self.k {
                coeffs.push(self.b(i - j as isize, j));
            }
        }
        TriangularOperator {
            n: self.n,
            k: self.k,
            coeffs,
        }
    }
}

/// A periodic lower-banded operator `sum_{j=1..depth} c_i^{(j)} T^{-j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedOperator {
    n: usize,
    depth: usize,
    coeffs: Vec<f64>,
}

impl BandedOperator {
    pub fn new(n: usize, depth: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != n * depth {
            return Err(Error::Malformed(format!(
                "expected {} band coefficients, got {}",
                n * depth,
                coeffs.len()
            )));
        }
        Ok(BandedOperator { n, depth, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Coefficient of `T^{-j}` at site `i`.
    #[inline]
    pub fn c(&self, i: isize, j: usize) -> f64 {
        if j == 0 || j > self.depth {
            0.0
        } else {
            self.coeffs[wrap(i - 1, self.n) * self.depth + j - 1]
        }
    }

    /// Band `j` as a vector over sites `1..=n`.
    pub fn band(&self, j: usize) -> Vec<f64> {
        (1..=self.n as isize).map(|i| self.c(i, j)).collect()
    }
}
