//! Quasi-periodic restriction `L(w)`, the spectral curve and Bloch vectors.
//!
//! On the space of sequences with `psi_{i-n} = w psi_i` the operator `L`
//! becomes the `n x n` matrix `L(w)`. Its characteristic polynomial, with
//! the sign fixed so that the `E^n` coefficient is `-1`, is stored as
//! `R(w, E) = -det(E - L(w))`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::AugmentedEigen;
use crate::operator::{wrap, BandedOperator, TriangularOperator};

/// Relative size below which a curve coefficient is treated as zero when
/// checking the Newton polygon.
pub const SHAPE_EPS: f64 = 1e-9;

/// `L(w)` for any periodic lower-banded operator.
///
/// Row `i - 1` holds `(L psi)_i`, and `psi_{i - j}` with `i - j = i' - q n`,
/// `i'` in `1..=n`, contributes `c_i^{(j)} w^q` at column `i' - 1`.
pub fn banded_quasi_periodic_matrix(op: &BandedOperator, w: Complex64) -> DMatrix<Complex64> {
    let n = op.n();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..=n as isize {
        for j in 1..=op.depth() {
            let c = op.c(i, j);
            if c == 0.0 {
                continue;
            }
            let target = i - j as isize;
            let col = wrap(target - 1, n) as isize + 1;
            let q = ((col - target) / n as isize) as i32;
            m[((i - 1) as usize, (col - 1) as usize)] += w.powi(q) * c;
        }
    }
    m
}

pub fn quasi_periodic_matrix(l: &TriangularOperator, w: Complex64) -> DMatrix<Complex64> {
    banded_quasi_periodic_matrix(&l.to_banded(), w)
}

/// The first descendent `L^{(1)} = sum_{j=1..k+1} j a_i^{(j)} T^{-j}`.
pub fn descendent(l: &TriangularOperator) -> BandedOperator {
    descend(&l.to_banded())
}

/// Multiplies band `j` by `j`.
pub fn descend(op: &BandedOperator) -> BandedOperator {
    let depth = op.depth();
    let mut coeffs = Vec::with_capacity(op.n() * depth);
    for i in 1..=op.n() as isize {
        for j in 1..=depth {
            coeffs.push(j as f64 * op.c(i, j));
        }
    }
    BandedOperator::new(op.n(), depth, coeffs).expect("same shape")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveJson", into = "CurveJson")]
pub struct SpectralCurve {
    n: usize,
    k: usize,
    terms: BTreeMap<(usize, usize), f64>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    i: usize,
    j: usize,
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    n: usize,
    k: usize,
    terms: Vec<TermJson>,
}

impl From<SpectralCurve> for CurveJson {
    fn from(c: SpectralCurve) -> Self {
        CurveJson {
            n: c.n,
            k: c.k,
            terms: c.terms.iter().map(|(&(i, j), &r)| TermJson { i, j, r }).collect(),
        }
    }
}

impl TryFrom<CurveJson> for SpectralCurve {
    type Error = Error;

    fn try_from(c: CurveJson) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for t in c.terms {
            if terms.insert((t.i, t.j), t.r).is_some() {
                return Err(Error::Malformed(format!("duplicate curve term ({}, {})", t.i, t.j)));
            }
        }
        Ok(SpectralCurve { n: c.n, k: c.k, terms })
    }
}

impl SpectralCurve {
    /// A curve with no terms, useful for support queries.
    pub fn empty(n: usize, k: usize) -> Self {
        SpectralCurve {
            n,
            k,
            terms: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.terms
    }

    /// `r_{ij}`, zero when absent.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.terms.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// `sum |r_{ij}| |w|^i |E|^j`, the natural size of `R(w, E)`.
    pub fn scale_at(&self, w: Complex64, e: Complex64) -> f64 {
        self.terms
            .iter()
            .map(|(&(i, j), r)| r.abs() * w.norm().powi(i as i32) * e.norm().powi(j as i32))
            .sum()
    }

    pub fn eval(&self, w: Complex64, e: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(i, j), &r)| w.powu(i as u32) * e.powu(j as u32) * r)
            .sum()
    }

    pub fn d_dw(&self, w: Complex64, e: Complex64) -> Complex64 {
        self.terms
            .iter()
            .filter(|(&(i, _), _)| i > 0)
            .map(|(&(i, j), &r)| w.powu(i as u32 - 1) * e.powu(j as u32) * (r * i as f64))
            .sum()
    }

    pub fn d_de(&self, w: Complex64, e: Complex64) -> Complex64 {
        self.terms
            .iter()
            .filter(|(&(_, j), _)| j > 0)
            .map(|(&(i, j), &r)| w.powu(i as u32) * e.powu(j as u32 - 1) * (r * j as f64))
            .sum()
    }

    /// Whether `(i, j)` lies in the allowed support: the two corner terms or
    /// `i > 0` with `n i + (k + 1) j < n (k + 1)`.
    pub fn in_support(&self, i: usize, j: usize) -> bool {
        let (n, k1) = (self.n, self.k + 1);
        (i, j) == (k1, 0) || (i, j) == (0, n) || (i > 0 && n * i + k1 * j < n * k1)
    }
}

/// Samples `f` on `count` points of the circle of radius `radius`.
fn circle(count: usize, radius: f64) -> Vec<Complex64> {
    (0..count)
        .map(|a| Complex64::from_polar(radius, 2.0 * PI * a as f64 / count as f64))
        .collect()
}

/// Coefficients of `-det(E - L(w))` from samples on the torus `|w| = rw`,
/// `|E| = re`, with the largest sample modulus.
fn torus_coefficients(banded: &BandedOperator, k: usize, rw: f64, re: f64) -> (Vec<Vec<f64>>, f64) {
    let n = banded.n();
    let (nw, ne) = (k + 2, n + 1);
    let ws = circle(nw, rw);
    let es = circle(ne, re);
    let mut samples = vec![Complex64::new(0.0, 0.0); nw * ne];
    for (a, &w) in ws.iter().enumerate() {
        let m = banded_quasi_periodic_matrix(banded, w);
        for (b, &e) in es.iter().enumerate() {
            let shifted = DMatrix::<Complex64>::identity(n, n) * e - &m;
            samples[a * ne + b] = -shifted.determinant();
        }
    }
    let peak = samples.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let coeffs = (0..nw)
        .map(|i| {
            (0..ne)
                .map(|j| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..nw {
                        for b in 0..ne {
                            let phase = -2.0 * PI * ((a * i) as f64 / nw as f64 + (b * j) as f64 / ne as f64);
                            acc += samples[a * ne + b] * Complex64::from_polar(1.0, phase);
                        }
                    }
                    (acc / (nw * ne) as f64 / (rw.powi(i as i32) * re.powi(j as i32))).re
                })
                .collect()
        })
        .collect();
    (coeffs, peak)
}

/// `R(w, E)` by exact interpolation on products of circles.
///
/// `-det(E - L(w))` has degree `<= k + 1` in `w` and `n` in `E`, so the
/// discrete Fourier transform over `k + 2` and `n + 1` roots of unity recovers
/// every coefficient. Each coefficient is read from the torus where its
/// round-off bound `peak / (rw^i re^j)` is smallest.
pub fn characteristic_curve(l: &TriangularOperator) -> Result<SpectralCurve> {
    l.validate()?;
    let n = l.n();
    let k = l.k();
    let banded = l.to_banded();
    let scale = l.max_abs_coeff().max(1.0);
    let radii = [0.5, 1.0, 2.0, scale].map(|t: f64| (t.powf(n as f64 / (k + 1) as f64).min(1e6), t));
    let tori: Vec<(Vec<Vec<f64>>, f64, f64, f64)> = radii
        .iter()
        .map(|&(rw, re)| {
            let (c, peak) = torus_coefficients(&banded, k, rw, re);
            (c, peak, rw, re)
        })
        .collect();
    let mut raw = BTreeMap::new();
    for i in 0..k + 2 {
        for j in 0..n + 1 {
            let bound = |t: &(Vec<Vec<f64>>, f64, f64, f64)| t.1 / (t.2.powi(i as i32) * t.3.powi(j as i32));
            let best = tori
                .iter()
                .min_by(|a, b| bound(a).total_cmp(&bound(b)))
                .expect("at least one torus");
            raw.insert((i, j), best.0[i][j]);
        }
    }
    let max = raw.values().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut curve = SpectralCurve {
        n,
        k,
        terms: BTreeMap::new(),
    };
    for ((i, j), r) in raw {
        if curve.in_support(i, j) {
            if r.abs() > 1e-14 * max {
                curve.terms.insert((i, j), r);
            }
        } else if r.abs() > SHAPE_EPS * max {
            return Err(Error::ShapeViolation { i, j, value: r });
        }
    }
    let top = curve.r(k + 1, 0);
    curve.terms.insert((k + 1, 0), top.signum());
    curve.terms.insert((0, n), -1.0);
    Ok(curve)
}

/// `det L(w) = R(w, 0)` as coefficients of `w^0, ..., w^{k+1}`.
pub fn floquet_polynomial(l: &TriangularOperator) -> Result<Vec<f64>> {
    let curve = characteristic_curve(l)?;
    Ok(floquet_polynomial_of(&curve))
}

pub fn floquet_polynomial_of(curve: &SpectralCurve) -> Vec<f64> {
    (0..=curve.k + 1).map(|i| curve.r(i, 0)).collect()
}

/// The `k` nonzero roots of `det L(w)`, sorted by real then imaginary part.
pub fn floquet_roots(l: &TriangularOperator) -> Result<Vec<Complex64>> {
    let curve = characteristic_curve(l)?;
    floquet_roots_of(&curve)
}

pub fn floquet_roots_of(curve: &SpectralCurve) -> Result<Vec<Complex64>> {
    let k = curve.k;
    let poly = floquet_polynomial_of(curve);
    // p(w) = det L(w) / w, monic of degree k.
    let p: Vec<f64> = poly[1..].iter().map(|c| c / poly[k + 1]).collect();
    let mut roots = polynomial_roots(&p);
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let max = roots.iter().fold(0.0f64, |m, r| m.max(r.norm()));
    for a in 0..roots.len() {
        for b in a + 1..roots.len() {
            if (roots[a] - roots[b]).norm() < 1e-8 * max {
                return Err(Error::DegenerateRoots(a, b));
            }
        }
    }
    Ok(roots)
}

/// Roots of the monic real polynomial `sum_i p[i] x^i` (`p[deg] = 1`).
///
/// Companion-matrix eigenvalues, Newton-polished, with conjugate pairs made
/// exactly conjugate.
pub fn polynomial_roots(p: &[f64]) -> Vec<Complex64> {
    let deg = p.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for r in 1..deg {
        comp[(r, r - 1)] = 1.0;
    }
    for r in 0..deg {
        comp[(r, deg - 1)] = -p[r] / p[deg];
    }
    let eval = |x: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &c in p.iter().rev() {
            d = d * x + v;
            v = v * x + c;
        }
        (v, d)
    };
    let mut roots: Vec<Complex64> = comp.complex_eigenvalues().iter().copied().collect();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (v, d) = eval(*r);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    let scale = roots.iter().fold(1.0f64, |m, r| m.max(r.norm()));
    for r in roots.iter_mut() {
        if r.im.abs() < 1e-12 * scale {
            r.im = 0.0;
        }
    }
    // Pair each root in the upper half plane with its nearest lower partner.
    let mut used = vec![false; roots.len()];
    for a in 0..roots.len() {
        if used[a] || roots[a].im <= 0.0 {
            continue;
        }
        let partner = (0..roots.len())
            .filter(|&b| !used[b] && b != a && roots[b].im < 0.0)
            .min_by(|&x, &y| {
                (roots[x] - roots[a].conj())
                    .norm()
                    .total_cmp(&(roots[y] - roots[a].conj()).norm())
            });
        if let Some(b) = partner {
            let avg = (roots[a] + roots[b].conj()) * 0.5;
            roots[a] = avg;
            roots[b] = avg.conj();
            used[a] = true;
            used[b] = true;
        }
    }
    roots
}

/// A point of the spectral curve with its right and left null vectors.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub w: Complex64,
    pub e: Complex64,
    /// `(L(w) - E) psi = 0`, unit norm.
    pub psi: DVector<Complex64>,
    /// `psi_dual^T (L(w) - E) = 0`, unit norm; paired bilinearly with `psi`.
    pub psi_dual: DVector<Complex64>,
}

/// Makes the first component of (near) largest modulus real and positive.
pub(crate) fn phase_normalize(v: &mut DVector<Complex64>) {
    let max = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("some entry attains the maximum");
    let phase = v[pivot] / v[pivot].norm();
    let inv = phase.conj();
    for z in v.iter_mut() {
        *z *= inv;
    }
    v[pivot] = Complex64::new(v[pivot].re, 0.0);
}

/// Smallest singular triple of a square complex matrix: `(sigma_min,
/// sigma_second, right null vector, left null vector)`.
pub(crate) fn smallest_singular_pair(m: &DMatrix<Complex64>) -> (f64, f64, DVector<Complex64>, DVector<Complex64>) {
    let (min, second, right, u) = AugmentedEigen::new(m).smallest_pair();
    (min, second, right, u.map(|z| z.conj()))
}

/// Right and left null vectors of `L(w) - E` at a simple curve point.
pub fn point_eigenvectors(
    l: &TriangularOperator,
    curve: &SpectralCurve,
    w: Complex64,
    e: Complex64,
) -> Result<CurvePoint> {
    let residual = curve.eval(w, e).norm();
    if residual > 1e-8 * curve.scale_at(w, e).max(1.0) {
        return Err(Error::NotOnCurve { residual });
    }
    let n = l.n();
    let m = quasi_periodic_matrix(l, w) - DMatrix::<Complex64>::identity(n, n) * e;
    let (_, second, mut psi, mut psi_dual) = smallest_singular_pair(&m);
    if second <= 1e-8 * m.norm().max(1.0) {
        return Err(Error::NonSimpleEigenvalue { sigma: second });
    }
    phase_normalize(&mut psi);
    phase_normalize(&mut psi_dual);
    Ok(CurvePoint { w, e, psi, psi_dual })
}

/// Ratio of the two sides of the descendent identity
/// `dOmega = -(R_w / R_E) dw` evaluated through the bilinear averages
/// `<psi^+ psi>` and `<psi^+ L^{(1)} psi> / (n w)`.
pub fn domega_identity_ratio(l: &TriangularOperator, curve: &SpectralCurve, pt: &CurvePoint) -> Result<Complex64> {
    let residual = curve.eval(pt.w, pt.e).norm();
    if residual > 1e-8 * curve.scale_at(pt.w, pt.e).max(1.0) {
        return Err(Error::NotOnCurve { residual });
    }
    let re = curve.d_de(pt.w, pt.e);
    if re.norm() <= 1e-12 * curve.scale_at(pt.w, pt.e).max(1.0) {
        return Err(Error::DerivativeVanishes);
    }
    let rw = curve.d_dw(pt.w, pt.e);
    let n = l.n() as f64;
    let m1 = banded_quasi_periodic_matrix(&descendent(l), pt.w);
    let pair = pt.psi_dual.transpose() * &pt.psi;
    let pair1 = pt.psi_dual.transpose() * (m1 * &pt.psi);
    let lhs = -(rw / re) * (pair[(0, 0)] / n);
    let rhs = pair1[(0, 0)] / n / (pt.w * n);
    Ok(lhs / rhs)
}

/// Roots of `sum_i p[i] x^i` with complex coefficients, Newton-polished.
pub fn complex_polynomial_roots(p: &[Complex64]) -> Vec<Complex64> {
    let deg = p.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
    for r in 1..deg {
        comp[(r, r - 1)] = Complex64::new(1.0, 0.0);
    }
    for r in 0..deg {
        comp[(r, deg - 1)] = -p[r] / p[deg];
    }
    let mut roots: Vec<Complex64> = comp
        .eigenvalues()
        .expect("complex Schur form")
        .iter()
        .copied()
        .collect();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (mut v, mut d) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for &c in p.iter().rev() {
                d = d * *r + v;
                v = v * *r + c;
            }
            let step = v / d;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots
}

/// The points `(w, E)` of the curve over a fixed `E`, with their
/// eigenvectors; points that are not simple are skipped.
pub fn points_over_e(l: &TriangularOperator, curve: &SpectralCurve, e: Complex64) -> Vec<CurvePoint> {
    let coeffs: Vec<Complex64> = (0..=curve.k + 1)
        .map(|i| {
            curve
                .terms
                .iter()
                .filter(|((ti, _), _)| *ti == i)
                .map(|((_, j), r)| e.powu(*j as u32) * *r)
                .sum()
        })
        .collect();
    complex_polynomial_roots(&coeffs)
        .into_iter()
        .filter(|w| w.norm() > 0.0)
        .filter_map(|w| point_eigenvectors(l, curve, w, e).ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::SampleRange;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn trivial() -> TriangularOperator {
        TriangularOperator::first_order(&[1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn trivial_quasi_periodic_matrix() {
        let w = Complex64::new(0.3, -0.7);
        let m = quasi_periodic_matrix(&trivial(), w);
        let z = c(0.0);
        let o = c(1.0);
        let expected = DMatrix::from_row_slice(3, 3, &[z, w, w, o, z, w, o, o, z]);
        assert_eq!(m, expected);
    }

    #[test]
    fn matrix_at_zero_is_strictly_lower() {
        let l = TriangularOperator::random(7, 2, 3, SampleRange::default()).unwrap();
        let m = quasi_periodic_matrix(&l, c(0.0));
        for r in 0..7 {
            for s in r..7 {
                assert_eq!(m[(r, s)], c(0.0));
            }
        }
    }

    #[test]
    fn matrix_agrees_with_windowed_application() {
        let l = TriangularOperator::random(5, 2, 11, SampleRange::default()).unwrap();
        let w = Complex64::new(-0.4, 1.3);
        let base = [c(0.2), c(-1.0), Complex64::new(0.5, 0.5), c(2.0), c(0.7)];
        // psi_{r + 1 + q n} = w^{-q} psi_{r + 1}
        let psi = |i: isize| -> Complex64 {
            let q = (i - 1).div_euclid(5);
            base[wrap(i - 1, 5)] * w.powi(-(q as i32))
        };
        let m = quasi_periodic_matrix(&l, w);
        let v = DVector::from_column_slice(&base);
        let mv = m * v;
        for i in 1..=5isize {
            let mut direct = psi(i - 3);
            for j in 1..=2 {
                direct += psi(i - j as isize) * l.a(i, j);
            }
            assert!((mv[(i - 1) as usize] - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn trivial_curve() {
        let curve = characteristic_curve(&trivial()).unwrap();
        let terms: Vec<_> = curve.terms().iter().map(|(&k, &v)| (k, v)).collect();
        assert_eq!(terms.len(), 4);
        for ((i, j), expected) in [((0, 3), -1.0), ((1, 0), 1.0), ((1, 1), 3.0), ((2, 0), 1.0)] {
            assert!((curve.r(i, j) - expected).abs() < 1e-12, "({i},{j})");
        }
        assert_eq!(floquet_polynomial(&trivial()).unwrap().len(), 3);
        let roots = floquet_roots(&trivial()).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - c(-1.0)).norm() < 1e-12);
    }

    #[test]
    fn curve_json_is_sorted() {
        let curve = characteristic_curve(&trivial()).unwrap();
        let text = serde_json::to_string(&curve).unwrap();
        assert!(text.starts_with(r#"{"n":3,"k":1,"terms":[{"i":0,"j":3,"r":-1.0},{"i":1,"j":0,"#));
        let back: SpectralCurve = serde_json::from_str(&text).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn trivial_kernel_vector() {
        let l = trivial();
        let curve = characteristic_curve(&l).unwrap();
        let pt = point_eigenvectors(&l, &curve, c(-1.0), c(0.0)).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for (z, e) in pt.psi.iter().zip([s, -s, s]) {
            assert!((z - c(e)).norm() < 1e-12);
        }
        assert!(matches!(
            point_eigenvectors(&l, &curve, c(-1.0), c(0.5)),
            Err(Error::NotOnCurve { .. })
        ));
    }

    #[test]
    fn descendent_weights() {
        let l = TriangularOperator::random(5, 2, 1, SampleRange::default()).unwrap();
        let d = descendent(&l);
        let dd = descend(&d);
        for i in 1..=5isize {
            for j in 1..=3 {
                assert_eq!(d.c(i, j), j as f64 * l.a(i, j));
                assert!((dd.c(i, j) - (j * j) as f64 * l.a(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn domega_ratio_on_trivial_operator() {
        let l = trivial();
        let curve = characteristic_curve(&l).unwrap();
        let pt = point_eigenvectors(&l, &curve, c(-1.0), c(0.0)).unwrap();
        let rho = domega_identity_ratio(&l, &curve, &pt).unwrap();
        assert!((rho - c(1.0)).norm() < 1e-10, "{rho}");
    }

    #[test]
    fn polynomial_roots_of_known_cubic() {
        // (x - 1)(x^2 + 1) = x^3 - x^2 + x - 1
        let mut r = polynomial_roots(&[-1.0, 1.0, -1.0, 1.0]);
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((r[1] - c(1.0)).norm() < 1e-12);
        assert_eq!(r[2], r[0].conj());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const SHAPES: [(usize, usize); 6] = [(3, 1), (5, 1), (7, 1), (5, 2), (7, 2), (4, 2)];

        fn sample(seed: u64, pick: usize) -> TriangularOperator {
            let (n, k) = SHAPES[pick];
            TriangularOperator::random(n, k, seed, SampleRange::default()).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn curve_shape_and_leading_product(seed in any::<u64>(), pick in 0usize..6) {
                let l = sample(seed, pick);
                let curve = characteristic_curve(&l).unwrap();
                for &(i, j) in curve.terms().keys() {
                    prop_assert!(curve.in_support(i, j));
                }
                let prod = l.leading_product();
                prop_assert!((curve.r(1, 0) - prod).abs() <= 1e-9 * (1.0 + prod.abs()));
                prop_assert_eq!(curve.r(l.k() + 1, 0), 1.0);
                prop_assert_eq!(curve.r(0, l.n()), -1.0);
                prop_assert_eq!(curve.r(0, 0), 0.0);
            }

            #[test]
            fn eigenvalues_lie_on_the_curve(seed in any::<u64>(), pick in 0usize..6, re in -2.0f64..2.0, im in -2.0f64..2.0) {
                let l = sample(seed, pick);
                let curve = characteristic_curve(&l).unwrap();
                let w = Complex64::new(re, im);
                let m = quasi_periodic_matrix(&l, w);
                for e in m.eigenvalues().expect("complex Schur form").iter().copied() {
                    let scale = curve.scale_at(w, e).max(1.0);
                    prop_assert!(curve.eval(w, e).norm() <= 1e-8 * scale);
                }
            }

            #[test]
            fn vieta_for_floquet_roots(seed in any::<u64>(), pick in 0usize..6) {
                let l = sample(seed, pick);
                let curve = characteristic_curve(&l).unwrap();
                if let Ok(roots) = floquet_roots_of(&curve) {
                    let prod: Complex64 = roots.iter().product();
                    let sign = if l.k().is_multiple_of(2) { 1.0 } else { -1.0 };
                    prop_assert!((prod - c(sign * curve.r(1, 0))).norm() <= 1e-9 * (1.0 + curve.r(1, 0).abs()));
                }
            }

            #[test]
            fn domega_ratio_is_universal(seed in any::<u64>(), pick in 0usize..6, re in -1.5f64..1.5, im in -1.5f64..1.5) {
                let l = sample(seed, pick);
                let curve = characteristic_curve(&l).unwrap();
                let points = points_over_e(&l, &curve, Complex64::new(re, im));
                for pt in &points {
                    prop_assert!(curve.eval(pt.w, pt.e).norm() <= 1e-8 * curve.scale_at(pt.w, pt.e).max(1.0));
                    if let Ok(rho) = domega_identity_ratio(&l, &curve, pt) {
                        prop_assert!((rho - c(1.0)).norm() <= 1e-7, "{}", rho);
                    }
                }
            }
        }
    }
}
