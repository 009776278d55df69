//! Truncated real power series `c_0 + c_1 x + ... + c_N x^N`.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Series with the given coefficients, truncated (or zero padded) to `order`.
    pub fn new(mut coeffs: Vec<f64>, order: usize) -> Self {
        coeffs.resize(order + 1, 0.0);
        TruncatedSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::new(Vec::new(), order)
    }

    pub fn one(order: usize) -> Self {
        Self::new(vec![1.0], order)
    }

    /// `c x^p`; vanishes when `p` exceeds the order.
    pub fn monomial(c: f64, p: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if p <= order {
            s.coeffs[p] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, p: usize) -> f64 {
        self.coeffs.get(p).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn scale(&self, c: f64) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Multiplies by `x^p`, dropping what falls past the order.
    pub fn shift(&self, p: usize) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for (q, c) in self.coeffs.iter().enumerate() {
            if q + p <= n {
                out.coeffs[q + p] = *c;
            }
        }
        out
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut acc = Self::one(self.order());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Logarithm of a series with `c_0 = 1`.
    ///
    /// Uses `m g_m = m f_m - sum_{j<m} j g_j f_{m-j}` for `g = ln f`.
    pub fn ln_unit(&self) -> Option<Self> {
        if (self.coeffs[0] - 1.0).abs() > 1e-12 {
            return None;
        }
        let n = self.order();
        let f = &self.coeffs;
        let mut g = vec![0.0; n + 1];
        for m in 1..=n {
            let mut acc = m as f64 * f[m];
            for j in 1..m {
                acc -= j as f64 * g[j] * f[m - j];
            }
            g[m] = acc / m as f64;
        }
        Some(TruncatedSeries { coeffs: g })
    }

    /// Coefficient-wise modulus.
    pub fn abs(&self) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|c| c.abs()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let n = self.order().min(rhs.order());
        TruncatedSeries {
            coeffs: (0..=n).map(|p| self.coeffs[p] + rhs.coeffs[p]).collect(),
        }
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let n = self.order().min(rhs.order());
        TruncatedSeries {
            coeffs: (0..=n).map(|p| self.coeffs[p] - rhs.coeffs[p]).collect(),
        }
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        let n = self.order().min(rhs.order());
        let mut coeffs = vec![0.0; n + 1];
        for (p, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if *a == 0.0 {
                continue;
            }
            for (q, b) in rhs.coeffs.iter().enumerate().take(n + 1 - p) {
                coeffs[p + q] += a * b;
            }
        }
        TruncatedSeries { coeffs }
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}
