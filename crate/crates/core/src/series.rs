//! Formal Bloch solutions at the two marked points of the spectral curve.
//!
//! Near `p_-` the solution is `psi_i = z^i (1 + sum_s xi_s^-(i) z^s)` with
//! `E = z^{-k-1} (1 + sum_s e_s z^s)` and `w = z^{-n}`. Near `p_+` it is
//! `psi_i = e^{phi_i} E^{-i} (1 + sum_s xi_s^+(i) E^s)` with
//! `w = r_{1,0}^{-1} E^n (1 + sum_s w_s E^s)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::calibration;
use crate::error::{Error, Result};
use crate::operator::{wrap, LogMode, TriangularOperator};
use crate::power::TruncatedSeries;
use crate::spectral::SpectralCurve;

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MinusSeries {
    pub n: usize,
    pub k: usize,
    /// `e_1, ..., e_S`.
    pub e: Vec<f64>,
    /// `xi[s - 1][p]` is `xi_s^-` at site `p + 1`; site `n` carries the anchor 0.
    pub xi_minus: Vec<Vec<f64>>,
    /// Largest mismatch when closing the `(k + 1)`-step cycle.
    pub closure_residual: f64,
}

impl MinusSeries {
    pub fn order(&self) -> usize {
        self.e.len()
    }

    /// `e_s`, with `e_0 = 1`.
    pub fn e(&self, s: usize) -> f64 {
        if s == 0 {
            1.0
        } else {
            self.e[s - 1]
        }
    }

    /// `xi_s^-(i)` for any site, with `xi_0 = 1`.
    pub fn xi(&self, s: usize, i: isize) -> f64 {
        if s == 0 {
            1.0
        } else {
            self.xi_minus[s - 1][wrap(i - 1, self.n)]
        }
    }

    /// `1 + sum_s e_s z^s`.
    pub fn energy_series(&self) -> TruncatedSeries {
        TruncatedSeries::new((0..=self.order()).map(|s| self.e(s)).collect(), self.order())
    }
}

/// Solves `L psi = E psi` order by order at `p_-`.
///
/// At order `s`, `e_s + xi_s(i) - xi_s(i-k-1) = Q_s(i)` with `Q_s` built
/// from lower orders; `e_s` is the period average of `Q_s` and `xi_s` follows
/// by walking the residues `0, k+1, 2(k+1), ...` from `xi_s(0) = 0`.
pub fn minus_series(l: &TriangularOperator, order: usize) -> Result<MinusSeries> {
    l.validate()?;
    if order == 0 {
        return Err(Error::InvalidArgument("series order must be at least 1".into()));
    }
    let n = l.n();
    let k = l.k();
    let mut series = MinusSeries {
        n,
        k,
        e: Vec::with_capacity(order),
        xi_minus: Vec::with_capacity(order),
        closure_residual: 0.0,
    };
    for s in 1..=order {
        let q: Vec<f64> = (1..=n as isize)
            .map(|i| {
                let mut acc = 0.0;
                for j in 1..=k {
                    if s + j > k {
                        acc += l.a(i, j) * series.xi(s + j - k - 1, i - j as isize);
                    }
                }
                for p in 1..s {
                    acc -= series.e(p) * series.xi(s - p, i);
                }
                acc
            })
            .collect();
        let e_s = q.iter().sum::<f64>() / n as f64;
        let mut xi = vec![0.0; n];
        // Storage slot of site i is wrap(i - 1); the anchor is site 0 == n.
        let slot = |i: isize| wrap(i - 1, n);
        let step = (k + 1) as isize;
        let mut site = 0isize;
        for _ in 1..n {
            let next = site + step;
            xi[slot(next)] = xi[slot(site)] + q[slot(next)] - e_s;
            site = next;
        }
        let closure = xi[slot(site)] + q[slot(0)] - e_s - xi[slot(0)];
        let scale = 1.0 + q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        series.closure_residual = series.closure_residual.max(closure.abs() / scale);
        series.e.push(e_s);
        series.xi_minus.push(xi);
    }
    Ok(series)
}

/// Largest coefficient of `z^{k+1-i} ((L psi)_i - (E psi)_i)` through the
/// truncation order, over one period; computed by direct series products.
pub fn minus_residual(l: &TriangularOperator, series: &MinusSeries) -> f64 {
    let order = series.order();
    let k = l.k();
    let energy = series.energy_series();
    let mut worst = 0.0f64;
    for i in 1..=l.n() as isize {
        let psi = |site: isize| TruncatedSeries::new((0..=order).map(|s| series.xi(s, site)).collect(), order);
        let mut lhs = TruncatedSeries::zero(order);
        for j in 1..=k + 1 {
            let term = psi(i - j as isize).shift(k + 1 - j).scale(l.a(i, j));
            lhs = &lhs + &term;
        }
        let rhs = &energy * &psi(i);
        worst = worst.max((&lhs - &rhs).max_abs());
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PlusSeries {
    pub n: usize,
    pub k: usize,
    /// Real part of `phi_i` for `i = -n..=n`.
    pub phi: Vec<f64>,
    /// Imaginary part of `phi_i`, present in complex mode only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_imag: Option<Vec<f64>>,
    /// `xi_plus[s - 1][i + n]` is `xi_s^+(i)` for `i = -n..=n`.
    pub xi_plus: Vec<Vec<f64>>,
    /// `w_1, ..., w_S`.
    #[serde(rename = "w")]
    pub w_series: Vec<f64>,
}

impl PlusSeries {
    pub fn order(&self) -> usize {
        self.w_series.len()
    }

    pub fn phi(&self, i: isize) -> Complex64 {
        let idx = (i + self.n as isize) as usize;
        let im = self.phi_imag.as_ref().map_or(0.0, |v| v[idx]);
        Complex64::new(self.phi[idx], im)
    }

    /// `xi_s^+(i)` for `|i| <= n`, with `xi_0 = 1`.
    pub fn xi(&self, s: usize, i: isize) -> f64 {
        if s == 0 {
            1.0
        } else {
            self.xi_plus[s - 1][(i + self.n as isize) as usize]
        }
    }

    /// `w_s`, with `w_0 = 1`.
    pub fn w(&self, s: usize) -> f64 {
        if s == 0 {
            1.0
        } else {
            self.w_series[s - 1]
        }
    }

    /// `1 + sum_s w_s E^s`.
    pub fn multiplier_series(&self) -> TruncatedSeries {
        TruncatedSeries::new((0..=self.order()).map(|s| self.w(s)).collect(), self.order())
    }
}

/// `e^{phi_{i-j} - phi_i} = 1 / prod_{m<j} a_{i-m}^{(1)}`.
fn gauge_ratio(l: &TriangularOperator, i: isize, j: usize) -> f64 {
    (0..j as isize).map(|m| 1.0 / l.a(i - m, 1)).product()
}

/// Solves `L psi = E psi` order by order at `p_+`.
///
/// Each order obeys `xi_s(i) - xi_s(i-1) = sum_{j=2..k+1} a_i^{(j)}
/// e^{phi_{i-j} - phi_i} xi_{s-j+1}(i-j)`, run both ways from `xi_s(0) = 0`.
pub fn plus_series(l: &TriangularOperator, order: usize, mode: LogMode) -> Result<PlusSeries> {
    l.validate()?;
    if order == 0 {
        return Err(Error::InvalidArgument("series order must be at least 1".into()));
    }
    if mode == LogMode::Real {
        l.check_real_mode()?;
    }
    let n = l.n() as isize;
    let k = l.k();
    // Order s on [-n, n] needs order s - 1 down to k + 1 sites further left.
    let lo = -n - (order * (k + 1)) as isize;
    let width = (n - lo + 1) as usize;
    let at = |i: isize| (i - lo) as usize;
    let mut xi: Vec<Vec<f64>> = vec![vec![1.0; width]];
    for s in 1..=order {
        let prev = &xi;
        let rhs = |i: isize| -> f64 {
            let mut acc = 0.0;
            for j in 2..=k + 1 {
                if j - 1 <= s {
                    let src = i - j as isize;
                    if src >= lo {
                        acc += l.a(i, j) * gauge_ratio(l, i, j) * prev[s + 1 - j][at(src)];
                    }
                }
            }
            acc
        };
        let mut cur = vec![0.0; width];
        for i in 1..=n {
            cur[at(i)] = cur[at(i - 1)] + rhs(i);
        }
        let floor = lo + (s * (k + 1)) as isize;
        let mut i = 0;
        while i > floor {
            cur[at(i - 1)] = cur[at(i)] - rhs(i);
            i -= 1;
        }
        xi.push(cur);
    }
    let mut phi = vec![Complex64::new(0.0, 0.0); (2 * n + 1) as usize];
    let log = |x: f64| -> Complex64 {
        match mode {
            LogMode::Real => Complex64::new(x.ln(), 0.0),
            LogMode::Complex => Complex64::new(x, 0.0).ln(),
        }
    };
    for i in 1..=n {
        phi[(i + n) as usize] = phi[(i - 1 + n) as usize] + log(l.a(i, 1));
    }
    for i in (-n + 1..=0).rev() {
        phi[(i - 1 + n) as usize] = phi[(i + n) as usize] - log(l.a(i, 1));
    }
    let trim = |v: &Vec<f64>| -> Vec<f64> { (-n..=n).map(|i| v[at(i)]).collect() };
    let w_series = (1..=order).map(|s| xi[s][at(-n)]).collect();
    let complex = mode == LogMode::Complex;
    Ok(PlusSeries {
        n: l.n(),
        k,
        phi: phi.iter().map(|z| z.re).collect(),
        phi_imag: complex.then(|| phi.iter().map(|z| z.im).collect()),
        xi_plus: xi[1..].iter().map(trim).collect(),
        w_series,
    })
}

/// Largest coefficient of `e^{-phi_i} E^{i-1} ((L psi)_i - (E psi)_i)`
/// through the truncation order, over one period; uses the stored `phi`.
pub fn plus_residual(l: &TriangularOperator, series: &PlusSeries) -> f64 {
    let order = series.order();
    let k = l.k();
    let mut worst = 0.0f64;
    for i in 1..=l.n() as isize {
        let psi = |site: isize| TruncatedSeries::new((0..=order).map(|s| series.xi(s, site)).collect(), order);
        let mut lhs = TruncatedSeries::zero(order);
        for j in 1..=k + 1 {
            let ratio = (series.phi(i - j as isize) - series.phi(i)).exp().re;
            let term = psi(i - j as isize).shift(j - 1).scale(l.a(i, j) * ratio);
            lhs = &lhs + &term;
        }
        worst = worst.max((&lhs - &psi(i)).max_abs());
    }
    worst
}

/// Result of substituting a Bloch expansion into `R(w, E)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Substitution {
    /// Coefficients of the substituted curve; all vanish in exact arithmetic.
    pub residual: TruncatedSeries,
    /// Same sum with every coefficient replaced by its modulus.
    pub majorant: TruncatedSeries,
}

impl Substitution {
    /// `max_p |residual_p| / (1 + majorant_p)`.
    pub fn relative_max(&self) -> f64 {
        (0..=self.residual.order())
            .map(|p| self.residual.coeff(p).abs() / (1.0 + self.majorant.coeff(p)))
            .fold(0.0, f64::max)
    }
}

fn accumulate(total: &mut Substitution, term: TruncatedSeries, majorant: TruncatedSeries) {
    total.residual = &total.residual + &term;
    total.majorant = &total.majorant + &majorant;
}

/// `z^{n(k+1)} R(z^{-n}, z^{-k-1}(1 + sum e_s z^s))` through the truncation order.
pub fn minus_substitution(curve: &SpectralCurve, series: &MinusSeries) -> Substitution {
    let order = series.order();
    let (n, k1) = (curve.n(), curve.k() + 1);
    let energy = series.energy_series();
    let energy_abs = energy.abs();
    let mut total = Substitution {
        residual: TruncatedSeries::zero(order),
        majorant: TruncatedSeries::zero(order),
    };
    for (&(i, j), &r) in curve.terms() {
        let shift = n * k1 - n * i - k1 * j;
        let term = energy.powi(j as u32).shift(shift).scale(r);
        let maj = energy_abs.powi(j as u32).shift(shift).scale(r.abs());
        accumulate(&mut total, term, maj);
    }
    total
}

/// `E^{-n} R(r_{1,0}^{-1} E^n (1 + sum w_s E^s), E)` through the truncation order.
pub fn plus_substitution(curve: &SpectralCurve, series: &PlusSeries) -> Substitution {
    let order = series.order();
    let n = curve.n();
    let r10 = curve.r(1, 0);
    let mult = series.multiplier_series();
    let mult_abs = mult.abs();
    let mut total = Substitution {
        residual: TruncatedSeries::zero(order),
        majorant: TruncatedSeries::zero(order),
    };
    for (&(i, j), &r) in curve.terms() {
        // E-degree n i + j - n, nonnegative on the curve's support.
        let degree = n * i + j;
        if degree < n {
            // Only (0, n) reaches here with degree == n; anything lower is off-support.
            continue;
        }
        let c = r / r10.powi(i as i32);
        let term = mult.powi(i as u32).shift(degree - n).scale(c);
        let maj = mult_abs.powi(i as u32).shift(degree - n).scale(c.abs());
        accumulate(&mut total, term, maj);
    }
    total
}

/// Which marked point a log Hamiltonian is expanded at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeFamily {
    Minus,
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogHamiltonian {
    /// Calibrated Hamiltonian value.
    pub value: f64,
    /// The bare series coefficient.
    pub raw: f64,
}

/// `e_{m+k+1}`, the Hamiltonian of the `t_m^-` flow.
pub fn hamiltonian_e(l: &TriangularOperator, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let s = m + l.k() + 1;
    Ok(minus_series(l, s)?.e(s))
}

/// Log-type Hamiltonians.
///
/// `Minus`: coefficient of `z^m` in `ln(z^{k+1} E(z))`; `i` is not used.
/// `Plus`: `kappa / n` times the coefficient of `E^{m+i-1}` in
/// `ln(r_{1,0} E^{-n} w(E))`. The case `m + i - 1 = 0` carries a
/// `res E^{-1} ln E` term and is reported as unavailable.
pub fn hamiltonian_log(
    l: &TriangularOperator,
    family: TimeFamily,
    m: usize,
    i: usize,
    order: usize,
) -> Result<LogHamiltonian> {
    if m == 0 || i > 1 {
        return Err(Error::InvalidArgument(format!(
            "need m >= 1 and i in {{0, 1}}, got m = {m}, i = {i}"
        )));
    }
    match family {
        TimeFamily::Minus => {
            if m > order {
                return Err(Error::OrderUnavailable {
                    requested: m,
                    available: order,
                });
            }
            let series = minus_series(l, order)?;
            let raw = series.energy_series().ln_unit().expect("unit constant term").coeff(m);
            Ok(LogHamiltonian { value: raw, raw })
        }
        TimeFamily::Plus => {
            let p = m + i - 1;
            if p == 0 || p > order {
                return Err(Error::OrderUnavailable {
                    requested: p,
                    available: order,
                });
            }
            let series = plus_series(l, order, LogMode::Complex)?;
            let raw = series
                .multiplier_series()
                .ln_unit()
                .expect("unit constant term")
                .coeff(p);
            let kappa = calibration::frozen().kappa;
            Ok(LogHamiltonian {
                value: kappa * raw / l.n() as f64,
                raw,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::SampleRange;
    use crate::spectral::characteristic_curve;

    fn trivial() -> TriangularOperator {
        TriangularOperator::first_order(&[1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn trivial_minus_series() {
        let s = minus_series(&trivial(), 3).unwrap();
        assert_eq!(s.e, vec![1.0, 0.0, 0.0]);
        assert!(s.xi_minus[0].iter().all(|&x| x == 0.0));
        assert_eq!(hamiltonian_e(&trivial(), 1).unwrap(), 0.0);
    }

    #[test]
    fn trivial_plus_series() {
        let s = plus_series(&trivial(), 1, LogMode::Real).unwrap();
        assert!(s.phi.iter().all(|&p| p == 0.0));
        for i in -3..=3isize {
            assert_eq!(s.xi(1, i), i as f64);
        }
        assert_eq!(s.w_series, vec![-3.0]);
    }

    #[test]
    fn log_hamiltonians_of_trivial_operator() {
        let l = trivial();
        let h1 = hamiltonian_log(&l, TimeFamily::Minus, 1, 0, 6).unwrap();
        assert_eq!(h1.value, 1.0);
        let h2 = hamiltonian_log(&l, TimeFamily::Minus, 2, 0, 6).unwrap();
        assert!((h2.value + 0.5).abs() < 1e-15);
        let hp = hamiltonian_log(&l, TimeFamily::Plus, 1, 1, 6).unwrap();
        assert_eq!(hp.raw, -3.0);
        assert!(matches!(
            hamiltonian_log(&l, TimeFamily::Plus, 1, 0, 6),
            Err(Error::OrderUnavailable { .. })
        ));
        assert!(matches!(
            hamiltonian_log(&l, TimeFamily::Minus, 7, 0, 6),
            Err(Error::OrderUnavailable { .. })
        ));
    }

    #[test]
    fn first_invariant_is_mean_of_top_band() {
        let l = TriangularOperator::random(7, 2, 9, SampleRange::default()).unwrap();
        let s = minus_series(&l, 2).unwrap();
        let mean = (1..=7).map(|i| l.a(i, 2)).sum::<f64>() / 7.0;
        assert!((s.e(1) - mean).abs() < 1e-14);
    }

    #[test]
    fn negative_leading_coefficient_needs_complex_mode() {
        let l = TriangularOperator::first_order(&[1.0, -2.0, 0.5]).unwrap();
        assert!(matches!(
            plus_series(&l, 3, LogMode::Real),
            Err(Error::NonPositiveLeading { site: 2 })
        ));
        let s = plus_series(&l, 3, LogMode::Complex).unwrap();
        assert!(plus_residual(&l, &s) < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const SHAPES: [(usize, usize); 6] = [(3, 1), (5, 1), (7, 1), (5, 2), (7, 2), (9, 1)];

        fn sample(seed: u64, pick: usize) -> TriangularOperator {
            let (n, k) = SHAPES[pick];
            TriangularOperator::random(n, k, seed, SampleRange::default()).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn expansion_residuals_vanish(seed in any::<u64>(), pick in 0usize..6) {
                let l = sample(seed, pick);
                let minus = minus_series(&l, 6).unwrap();
                prop_assert!(minus.closure_residual <= 1e-10);
                prop_assert!(minus_residual(&l, &minus) <= 1e-9);
                prop_assert!(minus.e(l.k() + 1).abs() <= 1e-10);
                prop_assert!(minus.xi_minus.iter().all(|row| row[l.n() - 1] == 0.0));
                let plus = plus_series(&l, 6, LogMode::Real).unwrap();
                prop_assert!(plus_residual(&l, &plus) <= 1e-9);
            }

            #[test]
            fn series_agree_with_curve(seed in any::<u64>(), pick in 0usize..6) {
                let l = sample(seed, pick);
                let curve = characteristic_curve(&l).unwrap();
                let minus = minus_substitution(&curve, &minus_series(&l, 6).unwrap());
                prop_assert!(minus.relative_max() <= 1e-8, "{:?}", minus);
                let plus = plus_substitution(&curve, &plus_series(&l, 6, LogMode::Real).unwrap());
                prop_assert!(plus.relative_max() <= 1e-8, "{:?}", plus);
            }

            #[test]
            fn phi_is_quasi_periodic(seed in any::<u64>(), pick in 0usize..6) {
                let l = sample(seed, pick);
                let s = plus_series(&l, 2, LogMode::Real).unwrap();
                let c = l.leading_product().ln();
                let n = l.n() as isize;
                for i in 0..=n {
                    prop_assert!((s.phi(i - n).re - (s.phi(i).re - c)).abs() <= 1e-12);
                }
            }
        }
    }
}
