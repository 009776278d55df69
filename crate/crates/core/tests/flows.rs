use toda_tri::chart::{chart_from_operator, Chart};
use toda_tri::flows::{integrate, invariant_drift, Scheme, Trajectory};
use toda_tri::symplectic::{hamiltonian_value, Hamiltonian};
use toda_tri::{FlowTag, SampleRange, TriangularOperator};

fn terminal(l: &TriangularOperator, flow: FlowTag, dt: f64, scheme: Scheme) -> Vec<f64> {
    integrate(l, flow, 1.0, dt, scheme)
        .unwrap()
        .states
        .last()
        .unwrap()
        .coeffs()
        .to_vec()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn gentle() -> TriangularOperator {
    TriangularOperator::from_rows(
        5,
        2,
        &[
            vec![1.1, 0.2],
            vec![0.9, -0.1],
            vec![1.2, 0.15],
            vec![0.8, 0.0],
            vec![1.0, -0.2],
        ],
    )
    .unwrap()
}

/// First seeded draw whose trajectory stays in the domain up to `T = 1`.
fn surviving(n: usize, k: usize, seed: u64, flow: FlowTag) -> Trajectory {
    (seed..seed + 50)
        .find_map(|s| {
            let l = TriangularOperator::random(n, k, s, SampleRange::default()).unwrap();
            integrate(&l, flow, 1.0, 1e-3, Scheme::Rk4).ok()
        })
        .expect("some draw stays in the domain")
}

#[test]
fn rk4_converges_at_fourth_order() {
    let l = gentle();
    for flow in [FlowTag::Xi, FlowTag::Eta] {
        let dt = 0.02;
        let reference = terminal(&l, flow, dt / 20.0, Scheme::Rk4);
        let coarse = distance(&terminal(&l, flow, dt, Scheme::Rk4), &reference);
        let fine = distance(&terminal(&l, flow, dt / 2.0, Scheme::Rk4), &reference);
        let ratio = coarse / fine;
        assert!((12.0..20.0).contains(&ratio), "{flow:?}: ratio {ratio}");
    }
}

#[test]
fn euler_converges_at_first_order() {
    let l = gentle();
    let reference = terminal(&l, FlowTag::Xi, 1e-4, Scheme::Rk4);
    let coarse = distance(&terminal(&l, FlowTag::Xi, 2e-3, Scheme::Euler), &reference);
    let fine = distance(&terminal(&l, FlowTag::Xi, 1e-3, Scheme::Euler), &reference);
    let ratio = coarse / fine;
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn invariants_are_conserved_on_seeded_instances() {
    for (n, k) in [(3, 1), (5, 1), (7, 1), (5, 2), (7, 2)] {
        for flow in [FlowTag::Xi, FlowTag::Eta] {
            let traj = surviving(n, k, 1000 + n as u64 * 10 + k as u64, flow);
            let d = invariant_drift(&traj).max_drift;
            assert!(d <= 1e-8, "n={n} k={k} {flow:?}: drift {d}");
        }
    }
}

#[test]
fn hamiltonians_are_constant_along_their_flows() {
    let cases = [
        (Chart::PhiK1, Hamiltonian::Hminus, FlowTag::Xi, 1),
        (Chart::PhiK1, Hamiltonian::Hplus, FlowTag::Eta, 1),
        (Chart::XYK2, Hamiltonian::E4, FlowTag::Xi, 2),
    ];
    for (chart, which, flow, k) in cases {
        let traj = surviving(7, k, 77, flow);
        let values: Vec<f64> = traj
            .states
            .iter()
            .map(|s| hamiltonian_value(&chart_from_operator(chart, s).unwrap(), which).unwrap())
            .collect();
        let h0 = values[0];
        let drift = values.iter().map(|h| (h - h0).abs()).fold(0.0, f64::max) / (1.0 + h0.abs());
        assert!(drift <= 1e-8, "{}: drift {drift}", which.name());
    }
}
