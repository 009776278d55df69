//! Frame data `(Phi, W)` and the operators they determine.
//!
//! `Phi` is a `k x n` matrix whose row `l` holds `phi^l_i`, `i = 1..=n`, and
//! `W` lists the multipliers `w_l`. Rows extend to all sites by
//! `phi^l_{i-n} = w_l phi^l_i`. The operator with `L phi^l = 0` is recovered
//! by Cramer's rule:
//!
//! `e^{-phi_i} = (-1)^{ik} D_i`, `D_i = |phi_{i-1}, ..., phi_{i-k}|`,
//! `a_i^{(j)} = -N_{ij} / D_i`, where `N_{ij}` replaces column `j` of `D_i`
//! by `phi_{i-k-1}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{wrap, TriangularOperator};
use crate::spectral::{
    characteristic_curve, floquet_roots_of, phase_normalize, quasi_periodic_matrix, smallest_singular_pair,
};

/// Relative size below which a Cramer denominator counts as singular.
pub const MINOR_EPS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct FramePair {
    /// `k x n`, row `l` is `phi^l` at sites `1..=n`.
    pub phi: DMatrix<Complex64>,
    pub w: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct CJson {
    re: f64,
    im: f64,
}

impl From<Complex64> for CJson {
    fn from(z: Complex64) -> Self {
        CJson { re: z.re, im: z.im }
    }
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    #[serde(rename = "W")]
    w: Vec<CJson>,
    #[serde(rename = "Phi")]
    phi: Vec<Vec<CJson>>,
}

impl Serialize for FramePair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameJson {
            w: self.w.iter().map(|&z| z.into()).collect(),
            phi: (0..self.k())
                .map(|l| self.phi.row(l).iter().map(|&z| z.into()).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FramePair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = FrameJson::deserialize(d)?;
        let k = raw.phi.len();
        let n = raw.phi.first().map_or(0, |r| r.len());
        if k == 0 || n == 0 || raw.phi.iter().any(|r| r.len() != n) || raw.w.len() != k {
            return Err(serde::de::Error::custom("Phi must be k x n with k = len(W) >= 1"));
        }
        let phi = DMatrix::from_fn(k, n, |l, p| Complex64::new(raw.phi[l][p].re, raw.phi[l][p].im));
        let w = raw.w.iter().map(|z| Complex64::new(z.re, z.im)).collect();
        Ok(FramePair { phi, w })
    }
}

impl FramePair {
    pub fn new(phi: DMatrix<Complex64>, w: Vec<Complex64>) -> Result<Self> {
        if phi.nrows() != w.len() || phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(Error::Malformed(format!(
                "Phi is {}x{} but {} multipliers were given",
                phi.nrows(),
                phi.ncols(),
                w.len()
            )));
        }
        Ok(FramePair { phi, w })
    }

    pub fn k(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    /// Checks rank `k` and distinct nonzero multipliers.
    pub fn validate(&self) -> Result<()> {
        let max = self.w.iter().fold(0.0f64, |m, w| m.max(w.norm()));
        for (a, wa) in self.w.iter().enumerate() {
            if wa.norm() == 0.0 {
                return Err(Error::InvalidArgument(format!("multiplier {a} vanishes")));
            }
            for (b, wb) in self.w.iter().enumerate().skip(a + 1) {
                if (wa - wb).norm() < 1e-8 * max {
                    return Err(Error::DegenerateRoots(a, b));
                }
            }
        }
        let sv = self.phi.clone().singular_values();
        if sv.min() <= 1e-12 * sv.max() {
            return Err(Error::InvalidArgument("Phi does not have rank k".into()));
        }
        Ok(())
    }

    /// Multiplies each `phi^l` by `lambda[l]`.
    pub fn scale_rows(&self, lambda: &[Complex64]) -> Self {
        let mut phi = self.phi.clone();
        for (l, &c) in lambda.iter().enumerate() {
            phi.row_mut(l).iter_mut().for_each(|z| *z *= c);
        }
        FramePair { phi, w: self.w.clone() }
    }

    /// Reorders `(phi^l, w_l)` pairs: new row `r` is old row `perm[r]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let phi = DMatrix::from_fn(self.k(), self.n(), |r, p| self.phi[(perm[r], p)]);
        FramePair {
            phi,
            w: perm.iter().map(|&p| self.w[p]).collect(),
        }
    }
}

/// Column `phi_i` of a `k x n` table extended by the multipliers.
fn extend_table(table: &DMatrix<Complex64>, w: &[Complex64], i: isize) -> DVector<Complex64> {
    let n = table.ncols() as isize;
    let q = (i - 1).div_euclid(n) as i32;
    let r = wrap(i - 1, n as usize);
    DVector::from_fn(table.nrows(), |l, _| table[(l, r)] * w[l].powi(-q))
}

/// `phi_i` at any site: `phi^l_{i-n} = w_l phi^l_i`.
pub fn extend_frame(f: &FramePair, i: isize) -> DVector<Complex64> {
    extend_table(&f.phi, &f.w, i)
}

fn det(cols: &[DVector<Complex64>]) -> Complex64 {
    if cols.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    DMatrix::from_columns(cols).determinant()
}

/// Product of column norms, the Hadamard bound for `|det|`.
fn hadamard(cols: &[DVector<Complex64>]) -> f64 {
    cols.iter().map(|c| c.norm()).product()
}

/// `[phi_{i-1}, ..., phi_{i-k}]`.
fn window(f: &FramePair, i: isize) -> Vec<DVector<Complex64>> {
    (1..=f.k() as isize).map(|m| extend_frame(f, i - m)).collect()
}

/// Complex coefficients reconstructed from a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    pub n: usize,
    pub k: usize,
    /// Flat `(site, band)` table.
    pub a: Vec<Complex64>,
    /// `e^{-phi_i}` for sites `1..=n`.
    pub exp_minus_phi: Vec<Complex64>,
}

impl ComplexOperator {
    pub fn a(&self, i: isize, j: usize) -> Complex64 {
        if j == self.k + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            self.a[wrap(i - 1, self.n) * self.k + j - 1]
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, z| m.max(z.im.abs()))
    }

    /// Drops imaginary parts no larger than `tol * (1 + max |a|)`.
    pub fn to_real(&self, tol: f64) -> Result<TriangularOperator> {
        let scale = 1.0 + self.a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let imag = self.max_imag();
        if imag > tol * scale {
            return Err(Error::NotReal { imag });
        }
        TriangularOperator::from_coeffs(self.n, self.k, self.a.iter().map(|z| z.re).collect())
    }
}

fn checked_minor(cols: &[DVector<Complex64>], site: isize) -> Result<Complex64> {
    let d = det(cols);
    if d.norm() <= MINOR_EPS * hadamard(cols) || d.norm() == 0.0 {
        return Err(Error::SingularMinor { site });
    }
    Ok(d)
}

pub fn frame_to_operator(f: &FramePair) -> Result<ComplexOperator> {
    let (n, k) = (f.n(), f.k());
    let mut a = Vec::with_capacity(n * k);
    let mut exp_minus_phi = Vec::with_capacity(n);
    for i in 1..=n as isize {
        let cols = window(f, i);
        let d = checked_minor(&cols, i)?;
        let sign = if (i as usize * k).is_multiple_of(2) { 1.0 } else { -1.0 };
        exp_minus_phi.push(d * sign);
        let last = extend_frame(f, i - k as isize - 1);
        for j in 0..k {
            let mut replaced = cols.clone();
            replaced[j] = last.clone();
            a.push(-det(&replaced) / d);
        }
    }
    Ok(ComplexOperator { n, k, a, exp_minus_phi })
}

/// Looks for signs of the real rows making every `e^{-phi_i}` real and
/// positive; rows belonging to conjugate pairs are left alone.
pub fn positive_scaling(f: &FramePair) -> Option<FramePair> {
    let k = f.k();
    let real_rows: Vec<usize> = (0..k).filter(|&l| f.w[l].im == 0.0).collect();
    for mask in 0u32..(1 << real_rows.len()) {
        let lambda: Vec<Complex64> = (0..k)
            .map(|l| {
                let flip = real_rows
                    .iter()
                    .position(|&r| r == l)
                    .is_some_and(|bit| mask & (1 << bit) != 0);
                Complex64::new(if flip { -1.0 } else { 1.0 }, 0.0)
            })
            .collect();
        let candidate = f.scale_rows(&lambda);
        if let Ok(op) = frame_to_operator(&candidate) {
            let ok = op
                .exp_minus_phi
                .iter()
                .all(|z| z.re > 0.0 && z.im.abs() <= 1e-10 * z.norm());
            if ok {
                return Some(candidate);
            }
        }
    }
    None
}

/// Floquet multipliers at `E = 0` with their kernel vectors as rows.
///
/// Each kernel vector is phase normalized; when sign flips of the real rows
/// make every `e^{-phi_i}` positive the flipped frame is returned.
pub fn operator_to_frame(l: &TriangularOperator) -> Result<FramePair> {
    let curve = characteristic_curve(l)?;
    let w = floquet_roots_of(&curve)?;
    let (n, k) = (l.n(), l.k());
    let mut phi = DMatrix::<Complex64>::zeros(k, n);
    for (idx, &wl) in w.iter().enumerate() {
        let m = quasi_periodic_matrix(l, wl);
        let (_, second, mut psi, _) = smallest_singular_pair(&m);
        if second <= 1e-8 * m.norm().max(1.0) {
            return Err(Error::NonSimpleKernel { index: idx });
        }
        phase_normalize(&mut psi);
        phi.row_mut(idx).copy_from(&psi.transpose());
    }
    let frame = FramePair { phi, w };
    Ok(positive_scaling(&frame).unwrap_or(frame))
}

/// `r_l psi_i^+(p_l)` for every `l`, the solution of
/// `sum_l X_l phi^l_{i-j} = 0` (`j = 2..k`) and `sum_l X_l phi^l_{i-k-1} = 1`:
/// `X_l = (-1)^{l+k} det(B without row l and last column) / det B`,
/// `B = [phi_{i-2}, ..., phi_{i-k-1}]`, `l` counted from 1.
pub fn dual_minors(f: &FramePair, i: isize) -> Result<DVector<Complex64>> {
    let k = f.k();
    let b: Vec<DVector<Complex64>> = (2..=k as isize + 1).map(|m| extend_frame(f, i - m)).collect();
    let db = checked_minor(&b, i)?;
    let head = &b[..k - 1];
    Ok(DVector::from_fn(k, |l, _| {
        let minor: Vec<DVector<Complex64>> = head.iter().map(|c| c.clone().remove_row(l)).collect();
        let sign = if (l + 1 + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        det(&minor) * sign / db
    }))
}

/// Tangent data at a site: `D_i`, `dD_i`, `N_ij`, `dN_ij`.
struct SiteVariation {
    d: Complex64,
    dd: Complex64,
    n: Vec<Complex64>,
    dn: Vec<Complex64>,
}

/// First-order variation of `det(cols)` in direction `dcols`.
fn det_variation(cols: &[DVector<Complex64>], dcols: &[DVector<Complex64>]) -> Complex64 {
    (0..cols.len())
        .map(|c| {
            let mut m = cols.to_vec();
            m[c] = dcols[c].clone();
            det(&m)
        })
        .sum()
}

fn site_variation(f: &FramePair, delta: &DMatrix<Complex64>, i: isize) -> Result<SiteVariation> {
    let k = f.k();
    let cols = window(f, i);
    let dcols: Vec<DVector<Complex64>> = (1..=k as isize).map(|m| extend_table(delta, &f.w, i - m)).collect();
    let d = checked_minor(&cols, i)?;
    let dd = det_variation(&cols, &dcols);
    let last = extend_frame(f, i - k as isize - 1);
    let dlast = extend_table(delta, &f.w, i - k as isize - 1);
    let mut n = Vec::with_capacity(k);
    let mut dn = Vec::with_capacity(k);
    for j in 0..k {
        let mut c = cols.clone();
        let mut dc = dcols.clone();
        c[j] = last.clone();
        dc[j] = dlast.clone();
        n.push(det(&c));
        dn.push(det_variation(&c, &dc));
    }
    Ok(SiteVariation { d, dd, n, dn })
}

impl SiteVariation {
    /// Variation of `phi_i = -ln((-1)^{ik} D_i)`.
    fn dphi(&self) -> Complex64 {
        -self.dd / self.d
    }

    /// Variation of `a_i^{(j)} = -N_ij / D_i`.
    fn da(&self, j: usize) -> Complex64 {
        -(self.dn[j] * self.d - self.n[j] * self.dd) / (self.d * self.d)
    }
}

/// `omega^(1)(delta_1, delta_2)` on the leaf of fixed multipliers:
///
/// `1/2 < dphi_{i-1} ^ dphi_i - D_{i-1}^{-1} sum_j da_i^{(j)} ^ |phi_{i-2}, ..., phi_{i-k}, dphi_{i-j}| >`,
///
/// with `<.>` the average over a period and every variation induced from
/// the tangents `delta_1`, `delta_2` of `Phi`.
pub fn omega1_evaluate(f: &FramePair, delta1: &DMatrix<Complex64>, delta2: &DMatrix<Complex64>) -> Result<Complex64> {
    let (n, k) = (f.n(), f.k());
    if delta1.shape() != f.phi.shape() || delta2.shape() != f.phi.shape() {
        return Err(Error::InvalidArgument("tangents must have the shape of Phi".into()));
    }
    let var1: Vec<SiteVariation> = (0..=n as isize)
        .map(|i| site_variation(f, delta1, i))
        .collect::<Result<_>>()?;
    let var2: Vec<SiteVariation> = (0..=n as isize)
        .map(|i| site_variation(f, delta2, i))
        .collect::<Result<_>>()?;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 1..=n as isize {
        let (p, q) = ((i - 1) as usize, i as usize);
        let mut term = var1[p].dphi() * var2[q].dphi() - var2[p].dphi() * var1[q].dphi();
        let base: Vec<DVector<Complex64>> = (2..=k as isize).map(|m| extend_frame(f, i - m)).collect();
        let d_prev = var1[p].d;
        let mut inner = Complex64::new(0.0, 0.0);
        for j in 1..=k {
            let col = |delta: &DMatrix<Complex64>| {
                let mut c = base.clone();
                c.push(extend_table(delta, &f.w, i - j as isize));
                det(&c)
            };
            inner += var1[q].da(j - 1) * col(delta2) - var2[q].da(j - 1) * col(delta1);
        }
        term -= inner / d_prev;
        total += term * 0.5;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::SampleRange;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn trivial_frame() -> FramePair {
        FramePair::new(
            DMatrix::from_row_slice(1, 3, &[c(-1.0), c(1.0), c(-1.0)]),
            vec![c(-1.0)],
        )
        .unwrap()
    }

    fn random_frame(rng: &mut ChaCha8Rng, n: usize, k: usize) -> FramePair {
        let phi = DMatrix::from_fn(k, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let w = (0..k)
            .map(|_| Complex64::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..6.2)))
            .collect();
        FramePair::new(phi, w).unwrap()
    }

    fn random_tangent(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(k, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn extension_by_hand() {
        let f = trivial_frame();
        assert_eq!(extend_frame(&f, 0)[0], c(1.0));
        assert_eq!(extend_frame(&f, 2)[0], c(1.0));
        assert_eq!(extend_frame(&f, 5)[0], c(-1.0));
    }

    #[test]
    fn trivial_frame_gives_trivial_operator() {
        let op = frame_to_operator(&trivial_frame()).unwrap();
        assert_eq!(op.to_real(1e-12).unwrap().coeffs(), &[1.0, 1.0, 1.0]);
        let l = TriangularOperator::first_order(&[1.0, 1.0, 1.0]).unwrap();
        let f = operator_to_frame(&l).unwrap();
        assert!((f.w[0] - c(-1.0)).norm() < 1e-12);
        let s = 1.0 / 3f64.sqrt();
        for (z, e) in f.phi.iter().zip([s, -s, s]) {
            assert!((z - c(e)).norm() < 1e-12);
        }
    }

    #[test]
    fn k1_dual_minor_is_reciprocal() {
        let f = trivial_frame();
        for i in 1..=3 {
            let x = dual_minors(&f, i).unwrap();
            assert!((x[0] - extend_frame(&f, i - 2)[0].inv()).norm() < 1e-15);
        }
    }

    #[test]
    fn singular_minor_is_reported() {
        let f = FramePair::new(DMatrix::from_row_slice(1, 3, &[c(1.0), c(0.0), c(1.0)]), vec![c(2.0)]).unwrap();
        assert!(matches!(frame_to_operator(&f), Err(Error::SingularMinor { site: 3 })));
    }

    #[test]
    fn frame_json_layout() {
        let text = serde_json::to_string(&trivial_frame()).unwrap();
        assert_eq!(
            text,
            r#"{"W":[{"re":-1.0,"im":0.0}],"Phi":[[{"re":-1.0,"im":0.0},{"re":1.0,"im":0.0},{"re":-1.0,"im":0.0}]]}"#
        );
        let back: FramePair = serde_json::from_str(&text).unwrap();
        assert_eq!(back, trivial_frame());
        assert!(serde_json::from_str::<FramePair>(r#"{"W":[],"Phi":[]}"#).is_err());
    }

    #[test]
    fn omega_k1_matches_the_reduced_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_frame(&mut rng, 5, 1);
        let d1 = random_tangent(&mut rng, 5, 1);
        let d2 = random_tangent(&mut rng, 5, 1);
        let v1: Vec<_> = (0..=5).map(|i| site_variation(&f, &d1, i).unwrap().dphi()).collect();
        let v2: Vec<_> = (0..=5).map(|i| site_variation(&f, &d2, i).unwrap().dphi()).collect();
        let reduced: Complex64 = (1..=5)
            .map(|i| v1[i - 1] * v2[i] - v2[i - 1] * v1[i])
            .sum::<Complex64>()
            / 5.0;
        let full = omega1_evaluate(&f, &d1, &d2).unwrap();
        assert!((full - reduced).norm() < 1e-12, "{full} vs {reduced}");
    }

    #[test]
    fn analytic_variation_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_frame(&mut rng, 5, 2);
        let d = random_tangent(&mut rng, 5, 2);
        let h = 1e-6;
        let plus = FramePair::new(&f.phi + &d * c(h), f.w.clone()).unwrap();
        let minus = FramePair::new(&f.phi - &d * c(h), f.w.clone()).unwrap();
        let (op_p, op_m) = (frame_to_operator(&plus).unwrap(), frame_to_operator(&minus).unwrap());
        for i in 1..=5isize {
            let var = site_variation(&f, &d, i).unwrap();
            let p = (i - 1) as usize;
            let fd_phi = -(op_p.exp_minus_phi[p].ln() - op_m.exp_minus_phi[p].ln()) / (2.0 * h);
            assert!((var.dphi() - fd_phi).norm() < 1e-7);
            for j in 0..2 {
                let fd = (op_p.a[p * 2 + j] - op_m.a[p * 2 + j]) / (2.0 * h);
                assert!((var.da(j) - fd).norm() < 1e-7);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const SHAPES: [(usize, usize); 5] = [(3, 1), (5, 1), (7, 1), (5, 2), (7, 2)];

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn frame_roundtrip(seed in any::<u64>(), pick in 0usize..5) {
                let (n, k) = SHAPES[pick];
                let l = TriangularOperator::random(n, k, seed, SampleRange::default()).unwrap();
                let f = operator_to_frame(&l).unwrap();
                let back = frame_to_operator(&f).unwrap();
                for (z, a) in back.a.iter().zip(l.coeffs()) {
                    prop_assert!((z - c(*a)).norm() <= 1e-8);
                }
                let zero = (1..=3 * n as isize).map(|i| {
                    let mut s = extend_frame(&f, i - k as isize - 1);
                    for j in 1..=k {
                        s += extend_frame(&f, i - j as isize) * c(l.a(i, j));
                    }
                    s.norm()
                }).fold(0.0, f64::max);
                prop_assert!(zero <= 1e-10);
            }

            #[test]
            fn duality_relations(seed in any::<u64>(), n in 3usize..8, k in 1usize..4) {
                prop_assume!(k < n);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_frame(&mut rng, n, k);
                for i in 1..=n as isize {
                    let Ok(x) = dual_minors(&f, i) else { continue };
                    for j in 2..=k as isize {
                        let s = (x.transpose() * extend_frame(&f, i - j))[(0, 0)];
                        prop_assert!(s.norm() <= 1e-9 * (1.0 + x.norm()));
                    }
                    let s = (x.transpose() * extend_frame(&f, i - k as isize - 1))[(0, 0)];
                    prop_assert!((s - c(1.0)).norm() <= 1e-9 * (1.0 + x.norm()));
                }
            }

            #[test]
            fn scaling_and_permutation_invariance(seed in any::<u64>(), n in 3usize..8, k in 1usize..3, re in 0.3f64..2.0, im in -1.0f64..1.0) {
                prop_assume!(k < n);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_frame(&mut rng, n, k);
                let Ok(base) = frame_to_operator(&f) else { return Ok(()) };
                let lambda: Vec<Complex64> = (0..k).map(|l| Complex64::new(re + l as f64, im)).collect();
                let scaled = frame_to_operator(&f.scale_rows(&lambda)).unwrap();
                let perm: Vec<usize> = (0..k).rev().collect();
                let permuted = frame_to_operator(&f.permute(&perm)).unwrap();
                let scale = 1.0 + base.a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
                for p in 0..base.a.len() {
                    prop_assert!((scaled.a[p] - base.a[p]).norm() <= 1e-10 * scale);
                    prop_assert!((permuted.a[p] - base.a[p]).norm() <= 1e-10 * scale);
                }
            }

            #[test]
            fn omega_is_antisymmetric_bilinear_and_blind_to_scaling(seed in any::<u64>(), n in 3usize..8, k in 1usize..3, s in -2.0f64..2.0) {
                prop_assume!(k < n);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let f = random_frame(&mut rng, n, k);
                let d1 = random_tangent(&mut rng, n, k);
                let d2 = random_tangent(&mut rng, n, k);
                let d3 = random_tangent(&mut rng, n, k);
                let Ok(w12) = omega1_evaluate(&f, &d1, &d2) else { return Ok(()) };
                let w21 = omega1_evaluate(&f, &d2, &d1).unwrap();
                let w11 = omega1_evaluate(&f, &d1, &d1).unwrap();
                let size = 1.0 + w12.norm();
                prop_assert!((w12 + w21).norm() <= 1e-12 * size);
                prop_assert!(w11.norm() <= 1e-12 * size);
                let w32 = omega1_evaluate(&f, &d3, &d2).unwrap();
                let combo = omega1_evaluate(&f, &(&d1 + &d3 * c(s)), &d2).unwrap();
                prop_assert!((combo - (w12 + w32 * s)).norm() <= 1e-10 * (size + w32.norm() * s.abs()));
                for l in 0..k {
                    let mut tangent = DMatrix::<Complex64>::zeros(k, n);
                    tangent.row_mut(l).copy_from(&f.phi.row(l));
                    let pairing = omega1_evaluate(&f, &tangent, &d2).unwrap();
                    prop_assert!(pairing.norm() <= 1e-9 * size, "{}", pairing);
                }
            }
        }
    }
}
