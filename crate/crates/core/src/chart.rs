//! Explicit coordinate charts on operators with `k <= 2`.
//!
//! * `PhiK1`: `a_i = e^{phi_i - phi_{i-1}}` for `k = 1`. `phi` is stored at
//!   sites `1..=n` and extended by `phi_{i+n} = phi_i + c`, `c = ln r_{1,0}`.
//! * `XK1`: `x_i = xi_1^-(i)` for `k = 1`, leaf parameter `e_1`.
//! * `XYK2`: `x_i = xi_1^-(i)`, `y_i = xi_2^-(i)` for `k = 2`, leaf `(e_1, e_2)`.
//!
//! All coordinate vectors are indexed by site `1..=n`; site `n` is site `0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{wrap, TriangularOperator, EPS_MIN};
use crate::series::minus_series;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Chart {
    #[serde(rename = "phi-k1")]
    PhiK1,
    #[serde(rename = "x-k1")]
    XK1,
    #[serde(rename = "xy-k2")]
    XYK2,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::PhiK1 => "phi-k1",
            Chart::XK1 => "x-k1",
            Chart::XYK2 => "xy-k2",
        }
    }

    pub fn k(self) -> usize {
        match self {
            Chart::PhiK1 | Chart::XK1 => 1,
            Chart::XYK2 => 2,
        }
    }

    /// Number of coordinates for period `n`.
    pub fn dim(self, n: usize) -> usize {
        match self {
            Chart::PhiK1 | Chart::XK1 => n,
            Chart::XYK2 => 2 * n,
        }
    }

    /// Number of leaf parameters.
    pub fn leaf_len(self) -> usize {
        match self {
            Chart::PhiK1 | Chart::XK1 => 1,
            Chart::XYK2 => 2,
        }
    }
}

impl std::str::FromStr for Chart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi-k1" => Ok(Chart::PhiK1),
            "x-k1" => Ok(Chart::XK1),
            "xy-k2" => Ok(Chart::XYK2),
            other => Err(Error::InvalidArgument(format!("unknown chart '{other}'"))),
        }
    }
}

/// A point in one of the charts.
///
/// `leaf` is `[ln r_{1,0}]` for `PhiK1`, `[e_1]` for `XK1` and `[e_1, e_2]`
/// for `XYK2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: Chart,
    pub n: usize,
    pub coords: Vec<f64>,
    pub leaf: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart: Chart, n: usize, coords: Vec<f64>, leaf: Vec<f64>) -> Result<Self> {
        if coords.len() != chart.dim(n) || leaf.len() != chart.leaf_len() {
            return Err(Error::ChartMismatch(format!(
                "{} with n = {n} needs {} coordinates and {} leaf parameters, got {} and {}",
                chart.name(),
                chart.dim(n),
                chart.leaf_len(),
                coords.len(),
                leaf.len()
            )));
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!("charts need n >= 3, got {n}")));
        }
        Ok(ChartPoint { chart, n, coords, leaf })
    }

    /// `x_i` (first block) at any site; for `PhiK1` this is `phi_i` with the
    /// quasi-periodic extension.
    pub fn x(&self, i: isize) -> f64 {
        let v = self.coords[wrap(i - 1, self.n)];
        if self.chart == Chart::PhiK1 {
            v + self.leaf[0] * (i - 1).div_euclid(self.n as isize) as f64
        } else {
            v
        }
    }

    /// `y_i` at any site (`XYK2` only).
    pub fn y(&self, i: isize) -> f64 {
        self.coords[self.n + wrap(i - 1, self.n)]
    }

    pub fn e1(&self) -> f64 {
        self.leaf[0]
    }

    pub fn e2(&self) -> f64 {
        self.leaf[1]
    }

    /// The same chart and leaf with new coordinates.
    pub fn with_coords(&self, coords: Vec<f64>) -> Self {
        ChartPoint { coords, ..self.clone() }
    }

    pub fn expect_chart(&self, chart: Chart) -> Result<()> {
        if self.chart == chart {
            Ok(())
        } else {
            Err(Error::ChartMismatch(format!(
                "expected a {} point, got {}",
                chart.name(),
                self.chart.name()
            )))
        }
    }
}

/// `(x, e_1)` for `k = 1` or `(x, y, e_1, e_2)` for `k = 2`, anchored at site 0.
pub fn x_chart_from_operator(l: &TriangularOperator) -> Result<ChartPoint> {
    let k = l.k();
    if k > 2 {
        return Err(Error::UnsupportedK { k });
    }
    let series = minus_series(l, k)?;
    let n = l.n();
    let mut coords: Vec<f64> = series.xi_minus[0].clone();
    if k == 2 {
        coords.extend_from_slice(&series.xi_minus[1]);
    }
    let chart = if k == 1 { Chart::XK1 } else { Chart::XYK2 };
    ChartPoint::new(chart, n, coords, series.e[..k].to_vec())
}

/// Inverse of [`x_chart_from_operator`].
///
/// `k = 1`: `a_i = x_i - x_{i-2} + e_1`.
/// `k = 2`: `a_i^{(2)} = x_i - x_{i-3} + e_1` and
/// `a_i^{(1)} = y_i - y_{i-3} - (x_i - x_{i-3}) x_{i-2} + e_1 (x_i - x_{i-2}) + e_2`.
pub fn operator_from_x_chart(pt: &ChartPoint) -> Result<TriangularOperator> {
    let n = pt.n;
    let mut coeffs = Vec::with_capacity(n * pt.chart.k());
    match pt.chart {
        Chart::XK1 => {
            for i in 1..=n as isize {
                coeffs.push(pt.x(i) - pt.x(i - 2) + pt.e1());
            }
        }
        Chart::XYK2 => {
            for i in 1..=n as isize {
                let dx3 = pt.x(i) - pt.x(i - 3);
                let a2 = dx3 + pt.e1();
                let a1 = pt.y(i) - pt.y(i - 3) - dx3 * pt.x(i - 2) + pt.e1() * (pt.x(i) - pt.x(i - 2)) + pt.e2();
                coeffs.push(a1);
                coeffs.push(a2);
            }
        }
        Chart::PhiK1 => {
            return Err(Error::ChartMismatch("expected an x chart, got phi-k1".into()));
        }
    }
    let l = TriangularOperator::from_coeffs(n, pt.chart.k(), coeffs)?;
    check_leading(&l)?;
    Ok(l)
}

fn check_leading(l: &TriangularOperator) -> Result<()> {
    for i in 1..=l.n() {
        if l.a(i as isize, 1).abs() < EPS_MIN {
            return Err(Error::LeadingCoefficientZero { site: i });
        }
    }
    Ok(())
}

/// Re-normalizes the Bloch series by `1 + c z + c' z^2`:
/// `x -> x + c`, `y -> y + c x + c'`. The operator is unchanged.
pub fn gauge(pt: &ChartPoint, c: f64, c2: f64) -> Result<ChartPoint> {
    let n = pt.n;
    match pt.chart {
        Chart::XK1 => Ok(pt.with_coords(pt.coords.iter().map(|x| x + c).collect())),
        Chart::XYK2 => {
            let mut coords = pt.coords.clone();
            for p in 0..n {
                coords[p] = pt.coords[p] + c;
                coords[n + p] = pt.coords[n + p] + c * pt.coords[p] + c2;
            }
            Ok(pt.with_coords(coords))
        }
        Chart::PhiK1 => Err(Error::ChartMismatch("gauge acts on x charts".into())),
    }
}

/// Moves an x-chart point to the representative with `x_0 = y_0 = 0`.
pub fn reanchor(pt: &ChartPoint) -> Result<ChartPoint> {
    let x0 = pt.x(0);
    match pt.chart {
        Chart::XK1 => gauge(pt, -x0, 0.0),
        Chart::XYK2 => gauge(pt, -x0, x0 * x0 - pt.y(0)),
        Chart::PhiK1 => Err(Error::ChartMismatch("reanchoring acts on x charts".into())),
    }
}

/// `phi_i = sum_{m=1..i} ln a_m^{(1)}` for `k = 1` with positive leading
/// coefficients; leaf parameter `ln r_{1,0}`.
pub fn phi_chart_from_operator(l: &TriangularOperator) -> Result<ChartPoint> {
    l.validate()?;
    if l.k() != 1 {
        return Err(Error::ChartMismatch(format!("phi-k1 needs k = 1, got k = {}", l.k())));
    }
    l.check_real_mode()?;
    let mut coords = Vec::with_capacity(l.n());
    let mut acc = 0.0;
    for i in 1..=l.n() as isize {
        acc += l.a(i, 1).ln();
        coords.push(acc);
    }
    ChartPoint::new(Chart::PhiK1, l.n(), coords, vec![acc])
}

/// `a_i = e^{phi_i - phi_{i-1}}`.
pub fn operator_from_phi_chart(pt: &ChartPoint) -> Result<TriangularOperator> {
    pt.expect_chart(Chart::PhiK1)?;
    let coeffs = (1..=pt.n as isize).map(|i| (pt.x(i) - pt.x(i - 1)).exp()).collect();
    TriangularOperator::from_coeffs(pt.n, 1, coeffs)
}

/// The natural chart of `L` for the given chart kind.
pub fn chart_from_operator(chart: Chart, l: &TriangularOperator) -> Result<ChartPoint> {
    if l.k() != chart.k() {
        return Err(Error::ChartMismatch(format!(
            "{} needs k = {}, got k = {}",
            chart.name(),
            chart.k(),
            l.k()
        )));
    }
    match chart {
        Chart::PhiK1 => phi_chart_from_operator(l),
        Chart::XK1 | Chart::XYK2 => x_chart_from_operator(l),
    }
}

pub fn operator_from_chart(pt: &ChartPoint) -> Result<TriangularOperator> {
    match pt.chart {
        Chart::PhiK1 => operator_from_phi_chart(pt),
        Chart::XK1 | Chart::XYK2 => operator_from_x_chart(pt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::SampleRange;

    #[test]
    fn trivial_x_chart() {
        let l = TriangularOperator::first_order(&[1.0, 1.0, 1.0]).unwrap();
        let pt = x_chart_from_operator(&l).unwrap();
        assert_eq!(pt.coords, vec![0.0, 0.0, 0.0]);
        assert_eq!(pt.leaf, vec![1.0]);
        assert_eq!(operator_from_x_chart(&pt).unwrap(), l);
    }

    #[test]
    fn k1_reconstruction_by_hand() {
        let pt = ChartPoint::new(Chart::XK1, 5, vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![2.0]).unwrap();
        let l = operator_from_x_chart(&pt).unwrap();
        assert_eq!(l.coeffs(), &[3.0, 2.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn unsupported_order() {
        let l = TriangularOperator::random(5, 3, 0, SampleRange::default()).unwrap();
        assert!(matches!(x_chart_from_operator(&l), Err(Error::UnsupportedK { k: 3 })));
    }

    #[test]
    fn vanishing_leading_coefficient_is_rejected() {
        let pt = ChartPoint::new(Chart::XK1, 3, vec![0.0, 0.0, 0.0], vec![0.0]).unwrap();
        assert!(matches!(
            operator_from_x_chart(&pt),
            Err(Error::LeadingCoefficientZero { site: 1 })
        ));
    }

    #[test]
    fn phi_chart_is_quasi_periodic() {
        let l = TriangularOperator::first_order(&[2.0, 0.5, 3.0]).unwrap();
        let pt = phi_chart_from_operator(&l).unwrap();
        assert!((pt.x(0)).abs() < 1e-15);
        assert!((pt.x(-3) - (pt.x(0) - 3f64.ln())).abs() < 1e-15);
        let back = operator_from_phi_chart(&pt).unwrap();
        for (a, b) in back.coeffs().iter().zip(l.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const SHAPES: [(usize, usize); 6] = [(3, 1), (5, 1), (7, 1), (5, 2), (7, 2), (4, 2)];

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn x_chart_roundtrip_from_operator(seed in any::<u64>(), pick in 0usize..6) {
                let (n, k) = SHAPES[pick];
                let l = TriangularOperator::random(n, k, seed, SampleRange::default()).unwrap();
                let back = operator_from_x_chart(&x_chart_from_operator(&l).unwrap()).unwrap();
                for (a, b) in back.coeffs().iter().zip(l.coeffs()) {
                    prop_assert!((a - b).abs() <= 1e-10);
                }
            }

            #[test]
            fn x_chart_roundtrip_from_chart(
                n in prop::sample::select(vec![3usize, 5, 7, 9]),
                raw in proptest::collection::vec(-0.1f64..0.1, 9),
                e1 in 1.0f64..2.0,
            ) {
                let mut coords = raw[..n].to_vec();
                coords[n - 1] = 0.0;
                let pt = ChartPoint::new(Chart::XK1, n, coords, vec![e1]).unwrap();
                let back = x_chart_from_operator(&operator_from_x_chart(&pt).unwrap()).unwrap();
                for (a, b) in back.coords.iter().zip(&pt.coords) {
                    prop_assert!((a - b).abs() <= 1e-10);
                }
                prop_assert!((back.e1() - e1).abs() <= 1e-10);
            }

            #[test]
            fn gauge_leaves_operator_fixed(seed in any::<u64>(), pick in 0usize..6, c in -1.0f64..1.0, c2 in -1.0f64..1.0) {
                let (n, k) = SHAPES[pick];
                let l = TriangularOperator::random(n, k, seed, SampleRange::default()).unwrap();
                let pt = x_chart_from_operator(&l).unwrap();
                let moved = gauge(&pt, c, c2).unwrap();
                let a = operator_from_x_chart(&moved).unwrap();
                for (x, y) in a.coeffs().iter().zip(l.coeffs()) {
                    prop_assert!((x - y).abs() <= 1e-10);
                }
                let back = reanchor(&moved).unwrap();
                for (x, y) in back.coords.iter().zip(&pt.coords) {
                    prop_assert!((x - y).abs() <= 1e-10);
                }
            }
        }
    }
}
