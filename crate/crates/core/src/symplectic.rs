//! Symplectic matrices, Hamiltonians and Hamiltonian vector fields in the
//! explicit charts, and their comparison with the Lax flows.
//!
//! Matrices use the sum normalization with unit entries: the form
//! `sum_{a<b} Omega[a][b] dz_a ^ dz_b`. A vector field `v` is generated by
//! `H` when `Omega v = sigma * scale * grad H` for the calibrated `(sigma, scale)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calibration;
use crate::chart::{chart_from_operator, Chart, ChartPoint};
use crate::error::{Error, Result};
use crate::flows::flow_rhs;
use crate::linalg::AugmentedEigen;
use crate::operator::{wrap, FlowTag, TriangularOperator};

pub use crate::frame::omega1_evaluate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hamiltonian {
    /// `sum e^{phi_i - phi_{i-1}}` on `PhiK1`.
    Hminus,
    /// `sum e^{phi_{i-2} - phi_i}` on `PhiK1`.
    Hplus,
    /// `<x_i^2 (x_{i-1} - x_{i+1})>` on `XK1`.
    E3,
    /// The five-term average for `e_4` on `XYK2`.
    E4,
    /// `sum x_i^2 (x_{i-1} - x_{i+1})` on `XK1`.
    Xcubic,
    /// `<x_i^2 (x_{i-1} - x_{i+1})> - e_1 <x_i (x_i - x_{i+1})>` on `XK1`.
    E3Exact,
}

impl Hamiltonian {
    pub const ALL: [Hamiltonian; 6] = [
        Hamiltonian::Hminus,
        Hamiltonian::Hplus,
        Hamiltonian::E3,
        Hamiltonian::E4,
        Hamiltonian::Xcubic,
        Hamiltonian::E3Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Hamiltonian::Hminus => "hminus",
            Hamiltonian::Hplus => "hplus",
            Hamiltonian::E3 => "e3",
            Hamiltonian::E4 => "e4",
            Hamiltonian::Xcubic => "xcubic",
            Hamiltonian::E3Exact => "e3-exact",
        }
    }

    /// The chart the formula is written in.
    pub fn chart(self) -> Chart {
        match self {
            Hamiltonian::Hminus | Hamiltonian::Hplus => Chart::PhiK1,
            Hamiltonian::E3 | Hamiltonian::Xcubic | Hamiltonian::E3Exact => Chart::XK1,
            Hamiltonian::E4 => Chart::XYK2,
        }
    }
}

impl std::str::FromStr for Hamiltonian {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Hamiltonian::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown hamiltonian '{s}'")))
    }
}

/// Scale factor applied to the gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleKind {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "1/n")]
    InvN,
}

impl ScaleKind {
    pub const ALL: [ScaleKind; 3] = [ScaleKind::One, ScaleKind::N, ScaleKind::InvN];

    pub fn factor(self, n: usize) -> f64 {
        match self {
            ScaleKind::One => 1.0,
            ScaleKind::N => n as f64,
            ScaleKind::InvN => 1.0 / n as f64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SymplecticMatrix {
    pub omega: DMatrix<f64>,
    /// Orthonormal basis of `ker Omega`.
    pub kernel_basis: Vec<DVector<f64>>,
}

fn skew_add(m: &mut DMatrix<f64>, a: usize, b: usize, c: f64) {
    m[(a, b)] += c;
    m[(b, a)] -= c;
}

/// The constant (`PhiK1`, `XK1`) or point-dependent (`XYK2`) skew matrix.
pub fn symplectic_matrix(pt: &ChartPoint) -> SymplecticMatrix {
    let n = pt.n;
    let dim = pt.chart.dim(n);
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let sx = |i: isize| wrap(i - 1, n);
    match pt.chart {
        Chart::PhiK1 => {
            for i in 1..=n as isize {
                skew_add(&mut m, sx(i), sx(i + 1), 1.0);
            }
        }
        Chart::XK1 => {
            for i in 1..=n as isize {
                skew_add(&mut m, sx(i), sx(i - 1), 1.0);
            }
        }
        Chart::XYK2 => {
            let sy = |i: isize| n + wrap(i - 1, n);
            for i in 1..=n as isize {
                skew_add(&mut m, sy(i), sx(i - 1), 1.0);
                skew_add(&mut m, sy(i), sx(i + 2), -1.0);
                skew_add(&mut m, sx(i - 1), sx(i), pt.x(i - 2));
                skew_add(&mut m, sx(i - 2), sx(i), pt.x(i - 1));
                skew_add(&mut m, sx(i), sx(i - 1), pt.e1());
            }
        }
    }
    let eig = AugmentedEigen::new(&m);
    let kernel_basis = eig.kernel(1e-10 * eig.sigma_max().max(1.0));
    SymplecticMatrix { omega: m, kernel_basis }
}

fn check_chart(pt: &ChartPoint, which: Hamiltonian) -> Result<()> {
    if pt.chart != which.chart() {
        return Err(Error::ChartMismatch(format!(
            "{} is written in {}, got a {} point",
            which.name(),
            which.chart().name(),
            pt.chart.name()
        )));
    }
    Ok(())
}

fn xcubic(pt: &ChartPoint) -> f64 {
    let x = |i| pt.x(i);
    (1..=pt.n as isize).map(|i| x(i) * x(i) * (x(i - 1) - x(i + 1))).sum()
}

/// `sum x_i (x_i - x_{i+1})`.
fn xquad(pt: &ChartPoint) -> f64 {
    let x = |i| pt.x(i);
    (1..=pt.n as isize).map(|i| x(i) * (x(i) - x(i + 1))).sum()
}

fn e4_sum(pt: &ChartPoint) -> f64 {
    let x = |i| pt.x(i);
    let y = |i| pt.y(i);
    let (e1, e2) = (pt.e1(), pt.e2());
    (1..=pt.n as isize)
        .map(|i| {
            y(i - 1) * (y(i) - y(i - 3))
                + x(i) * x(i - 1) * x(i - 2) * (x(i - 1) - x(i))
                + e1 * x(i) * x(i) * (x(i - 1) - x(i + 1))
                + e2 * x(i - 1) * (x(i) - x(i - 1))
                + y(i) * (x(i + 2) * x(i + 2) - x(i - 1) * x(i - 1) - x(i + 2) * x(i + 1) + x(i - 2) * x(i - 1))
        })
        .sum()
}

pub fn hamiltonian_value(pt: &ChartPoint, which: Hamiltonian) -> Result<f64> {
    check_chart(pt, which)?;
    let n = pt.n as f64;
    let phi = |i| pt.x(i);
    Ok(match which {
        Hamiltonian::Hminus => (1..=pt.n as isize).map(|i| (phi(i) - phi(i - 1)).exp()).sum(),
        Hamiltonian::Hplus => (1..=pt.n as isize).map(|i| (phi(i - 2) - phi(i)).exp()).sum(),
        Hamiltonian::Xcubic => xcubic(pt),
        Hamiltonian::E3 => xcubic(pt) / n,
        Hamiltonian::E3Exact => (xcubic(pt) - pt.e1() * xquad(pt)) / n,
        Hamiltonian::E4 => e4_sum(pt) / n,
    })
}

/// Closed-form gradient with respect to the chart coordinates; leaf
/// parameters are held fixed.
pub fn gradient(pt: &ChartPoint, which: Hamiltonian) -> Result<Vec<f64>> {
    check_chart(pt, which)?;
    let n = pt.n;
    let nf = n as f64;
    let x = |i: isize| pt.x(i);
    let cubic = |m: isize| 2.0 * x(m) * (x(m - 1) - x(m + 1)) + x(m + 1) * x(m + 1) - x(m - 1) * x(m - 1);
    let sites = 1..=n as isize;
    Ok(match which {
        Hamiltonian::Hminus => sites
            .map(|m| (x(m) - x(m - 1)).exp() - (x(m + 1) - x(m)).exp())
            .collect(),
        Hamiltonian::Hplus => sites
            .map(|m| (x(m) - x(m + 2)).exp() - (x(m - 2) - x(m)).exp())
            .collect(),
        Hamiltonian::Xcubic => sites.map(cubic).collect(),
        Hamiltonian::E3 => sites.map(|m| cubic(m) / nf).collect(),
        Hamiltonian::E3Exact => sites
            .map(|m| (cubic(m) - pt.e1() * (2.0 * x(m) - x(m + 1) - x(m - 1))) / nf)
            .collect(),
        Hamiltonian::E4 => {
            let y = |i: isize| pt.y(i);
            let (e1, e2) = (pt.e1(), pt.e2());
            let mut g = vec![0.0; 2 * n];
            for m in 1..=n as isize {
                let p = wrap(m - 1, n);
                // sum x_i x_{i-1}^2 x_{i-2} - sum x_i^2 x_{i-1} x_{i-2}
                let da =
                    x(m - 1) * x(m - 1) * x(m - 2) + 2.0 * x(m + 1) * x(m) * x(m - 1) + x(m + 2) * x(m + 1) * x(m + 1);
                let db =
                    2.0 * x(m) * x(m - 1) * x(m - 2) + x(m + 1) * x(m + 1) * x(m - 1) + x(m + 2) * x(m + 2) * x(m + 1);
                let d4 = x(m + 1) + x(m - 1) - 2.0 * x(m);
                let d5 = 2.0 * y(m - 2) * x(m) - 2.0 * y(m + 1) * x(m) - y(m - 2) * x(m - 1) - y(m - 1) * x(m + 1)
                    + y(m + 2) * x(m + 1)
                    + y(m + 1) * x(m - 1);
                g[p] = (da - db + e1 * cubic(m) + e2 * d4 + d5) / nf;
                let dy1 = y(m + 1) + y(m - 1) - y(m + 2) - y(m - 2);
                let dy5 = x(m + 2) * x(m + 2) - x(m - 1) * x(m - 1) - x(m + 2) * x(m + 1) + x(m - 2) * x(m - 1);
                g[n + p] = (dy1 + dy5) / nf;
            }
            g
        }
    })
}

/// Least-norm solution of `Omega v = rhs` with its residual.
pub fn pseudo_solve(omega: &DMatrix<f64>, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let b = DVector::from_column_slice(rhs);
    let eig = AugmentedEigen::new(omega);
    let v = eig.solve(&b, 1e-10 * eig.sigma_max().max(1.0));
    let residual = (omega * &v - &b).norm();
    if residual > 1e-9 * (1.0 + b.norm()) {
        return Err(Error::InconsistentSystem { residual });
    }
    Ok((v.iter().copied().collect(), residual))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub v: Vec<f64>,
    pub residual: f64,
}

/// Central differences of [`hamiltonian_value`] with step `h`.
pub fn central_difference_gradient(pt: &ChartPoint, which: Hamiltonian, h: f64) -> Result<Vec<f64>> {
    (0..pt.coords.len())
        .map(|p| {
            let mut up = pt.coords.clone();
            let mut dn = pt.coords.clone();
            up[p] += h;
            dn[p] -= h;
            let fu = hamiltonian_value(&pt.with_coords(up), which)?;
            let fd = hamiltonian_value(&pt.with_coords(dn), which)?;
            Ok((fu - fd) / (2.0 * h))
        })
        .collect()
}

/// Least-norm `v` with `Omega v = sigma * scale * grad H`.
pub fn hamiltonian_vector_field(
    pt: &ChartPoint,
    which: Hamiltonian,
    sigma: f64,
    scale: ScaleKind,
) -> Result<VectorField> {
    let grad = gradient(pt, which)?;
    let factor = sigma * scale.factor(pt.n);
    let rhs: Vec<f64> = grad.iter().map(|g| g * factor).collect();
    let omega = symplectic_matrix(pt).omega;
    let (v, residual) = pseudo_solve(&omega, &rhs)?;
    Ok(VectorField { v, residual })
}

/// Velocity of the coefficient table induced by a chart velocity `v`,
/// in the operator's flat `(site, band)` layout.
pub fn pushforward(pt: &ChartPoint, v: &[f64]) -> Vec<f64> {
    let n = pt.n;
    let d = |i: isize| v[wrap(i - 1, n)];
    let x = |i: isize| pt.x(i);
    let mut out = Vec::with_capacity(n * pt.chart.k());
    for i in 1..=n as isize {
        match pt.chart {
            Chart::PhiK1 => {
                let a = (x(i) - x(i - 1)).exp();
                out.push(a * (d(i) - d(i - 1)));
            }
            Chart::XK1 => out.push(d(i) - d(i - 2)),
            Chart::XYK2 => {
                let dy = |i: isize| v[n + wrap(i - 1, n)];
                let dx3 = x(i) - x(i - 3);
                let a1 =
                    dy(i) - dy(i - 3) - (d(i) - d(i - 3)) * x(i - 2) - dx3 * d(i - 2) + pt.e1() * (d(i) - d(i - 2));
                out.push(a1);
                out.push(d(i) - d(i - 3));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LaxMatch {
    pub chart: Chart,
    pub hamiltonian: Hamiltonian,
    pub flow: FlowTag,
    pub sigma: f64,
    pub scale: ScaleKind,
    pub max_deviation: f64,
    pub residual: f64,
}

/// Compares the pushed-forward Hamiltonian field with the Lax velocity for
/// an explicit `(sigma, scale)`.
pub fn match_lax_with(
    chart: Chart,
    l: &TriangularOperator,
    which: Hamiltonian,
    flow: FlowTag,
    sigma: f64,
    scale: ScaleKind,
) -> Result<LaxMatch> {
    let pt = chart_from_operator(chart, l)?;
    let field = hamiltonian_vector_field(&pt, which, sigma, scale)?;
    let pushed = pushforward(&pt, &field.v);
    let lax = flow_rhs(l, flow);
    let max_deviation = pushed.iter().zip(&lax).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(LaxMatch {
        chart,
        hamiltonian: which,
        flow,
        sigma,
        scale,
        max_deviation,
        residual: field.residual,
    })
}

/// [`match_lax_with`] using the frozen calibration for the triple.
pub fn match_lax(chart: Chart, l: &TriangularOperator, which: Hamiltonian, flow: FlowTag) -> Result<LaxMatch> {
    let pairing = calibration::frozen().pairing(chart, which, flow).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no calibration for ({}, {}, {})",
            chart.name(),
            which.name(),
            flow.name()
        ))
    })?;
    match_lax_with(chart, l, which, flow, pairing.sigma, pairing.scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::x_chart_from_operator;
    use crate::operator::SampleRange;
    use crate::series::minus_series;

    fn point(chart: Chart, n: usize, coords: Vec<f64>, leaf: Vec<f64>) -> ChartPoint {
        ChartPoint::new(chart, n, coords, leaf).unwrap()
    }

    #[test]
    fn phi_matrix_kernel() {
        for n in [3, 5, 7] {
            let s = symplectic_matrix(&point(Chart::PhiK1, n, vec![0.0; n], vec![0.0]));
            assert_eq!(s.omega.transpose(), -&s.omega);
            assert_eq!(s.kernel_basis.len(), 1);
            let k = &s.kernel_basis[0];
            let c = k[0];
            assert!(k.iter().all(|v| (v - c).abs() < 1e-12));
            assert!((&s.omega * k).norm() <= 1e-12);
        }
        let s = symplectic_matrix(&point(Chart::PhiK1, 4, vec![0.0; 4], vec![0.0]));
        assert_eq!(s.kernel_basis.len(), 2);
    }

    #[test]
    fn xy_matrix_is_skew_with_kernel() {
        let l = TriangularOperator::random(5, 2, 8, SampleRange::default()).unwrap();
        let pt = x_chart_from_operator(&l).unwrap();
        let s = symplectic_matrix(&pt);
        assert_eq!(s.omega.transpose(), -&s.omega);
        assert_eq!(s.kernel_basis.len(), 2);
        for k in &s.kernel_basis {
            assert!((&s.omega * k).norm() <= 1e-12);
        }
    }

    #[test]
    fn values_at_constant_points() {
        let pt = point(Chart::PhiK1, 5, vec![0.3; 5], vec![0.0]);
        assert!((hamiltonian_value(&pt, Hamiltonian::Hminus).unwrap() - 5.0).abs() < 1e-15);
        assert!((hamiltonian_value(&pt, Hamiltonian::Hplus).unwrap() - 5.0).abs() < 1e-15);
        assert!(gradient(&pt, Hamiltonian::Hminus).unwrap().iter().all(|g| *g == 0.0));
        let field = hamiltonian_vector_field(&pt, Hamiltonian::Hminus, -1.0, ScaleKind::One).unwrap();
        assert!(field.v.iter().all(|v| v.abs() < 1e-15));
        let x = point(Chart::XK1, 5, vec![0.7; 5], vec![1.0]);
        assert_eq!(hamiltonian_value(&x, Hamiltonian::Xcubic).unwrap(), 0.0);
        assert_eq!(hamiltonian_value(&x, Hamiltonian::E3).unwrap(), 0.0);
        assert!(matches!(
            hamiltonian_value(&x, Hamiltonian::Hminus),
            Err(Error::ChartMismatch(_))
        ));
    }

    #[test]
    fn corrected_cubic_is_e3() {
        let l = TriangularOperator::random(7, 1, 21, SampleRange::default()).unwrap();
        let pt = x_chart_from_operator(&l).unwrap();
        let e3 = minus_series(&l, 3).unwrap().e(3);
        assert!((hamiltonian_value(&pt, Hamiltonian::E3Exact).unwrap() - e3).abs() < 1e-12);
    }

    #[test]
    fn e4_formula_is_e4() {
        let l = TriangularOperator::random(7, 2, 21, SampleRange::default()).unwrap();
        let pt = x_chart_from_operator(&l).unwrap();
        let e4 = minus_series(&l, 4).unwrap().e(4);
        assert!((hamiltonian_value(&pt, Hamiltonian::E4).unwrap() - e4).abs() < 1e-12);
    }

    #[test]
    fn phi_fields_generate_the_lax_flows() {
        let l = TriangularOperator::random(7, 1, 3, SampleRange::default()).unwrap();
        let m = match_lax_with(Chart::PhiK1, &l, Hamiltonian::Hminus, FlowTag::Xi, -1.0, ScaleKind::One).unwrap();
        assert!(m.max_deviation < 1e-10, "{m:?}");
        let m = match_lax_with(Chart::PhiK1, &l, Hamiltonian::Hplus, FlowTag::Eta, 1.0, ScaleKind::One).unwrap();
        assert!(m.max_deviation < 1e-10, "{m:?}");
    }

    #[test]
    fn inconsistent_system_is_reported() {
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            pseudo_solve(&omega, &[1.0, 0.0]),
            Err(Error::InconsistentSystem { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn fd_gradient(pt: &ChartPoint, which: Hamiltonian) -> Vec<f64> {
            let h = 1e-6;
            (0..pt.coords.len())
                .map(|p| {
                    let mut up = pt.coords.clone();
                    let mut dn = pt.coords.clone();
                    up[p] += h;
                    dn[p] -= h;
                    let fu = hamiltonian_value(&pt.with_coords(up), which).unwrap();
                    let fd = hamiltonian_value(&pt.with_coords(dn), which).unwrap();
                    (fu - fd) / (2.0 * h)
                })
                .collect()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn gradients_match_finite_differences(
                which in prop::sample::select(Hamiltonian::ALL.to_vec()),
                n in prop::sample::select(vec![3usize, 4, 5, 7]),
                raw in proptest::collection::vec(-1.0f64..1.0, 14),
                leaf in proptest::collection::vec(-1.0f64..1.0, 2),
            ) {
                let chart = which.chart();
                let coords = raw[..chart.dim(n)].to_vec();
                let pt = point(chart, n, coords, leaf[..chart.leaf_len()].to_vec());
                let exact = gradient(&pt, which).unwrap();
                let approx = fd_gradient(&pt, which);
                let scale = exact.iter().fold(1.0f64, |m, g| m.max(g.abs()));
                for (a, b) in exact.iter().zip(&approx) {
                    prop_assert!((a - b).abs() <= 1e-7 * scale, "{:?}: {} vs {}", which, a, b);
                }
            }

            #[test]
            fn e4_field_generates_xi_flow(seed in any::<u64>(), n in prop::sample::select(vec![4usize, 5, 7])) {
                let l = TriangularOperator::random(n, 2, seed, SampleRange::default()).unwrap();
                let m = match_lax_with(Chart::XYK2, &l, Hamiltonian::E4, FlowTag::Xi, -1.0, ScaleKind::N).unwrap();
                prop_assert!(m.max_deviation <= 1e-8, "{:?}", m);
            }
        }
    }
}
