//! The first two reduced Lax flows and a fixed-step integrator.
//!
//! * `xi`: `dL = [v + T^{-1}, L]`, where `v` solves
//!   `v_i - v_{i-k-1} = a_i^{(k)} - a_{i-1}^{(k)}` with zero mean.
//! * `eta`: `dL = [c T, L]` with `c_i = 1 / a_{i+1}^{(1)}`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{wrap, FlowTag, TriangularOperator, EPS_MIN};
use crate::series::minus_series;
use crate::spectral::{characteristic_curve, SpectralCurve};

/// Number of `e_s` tracked by the integrator.
pub const MONITORED_E: usize = 6;

/// Zero-mean periodic solution of `v_i - v_{i-k-1} = a_i^{(k)} - a_{i-1}^{(k)}`.
pub fn solve_v(l: &TriangularOperator) -> Vec<f64> {
    let n = l.n();
    let k = l.k();
    let rhs = |i: isize| l.a(i, k) - l.a(i - 1, k);
    let mut v = vec![0.0; n];
    let step = (k + 1) as isize;
    let mut site = 0isize;
    for _ in 1..n {
        let next = site + step;
        v[wrap(next - 1, n)] = v[wrap(site - 1, n)] + rhs(next);
        site = next;
    }
    let closure = v[wrap(site - 1, n)] + rhs(0) - v[wrap(-1, n)];
    debug_assert!(closure.abs() <= 1e-12 * (1.0 + l.max_abs_coeff()));
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

/// `da_i^{(j)} = a_{i-1}^{(j-1)} - a_i^{(j-1)} + a_i^{(j)} (v_i - v_{i-j})`
/// with a caller-supplied `v` indexed by site `1..=n`.
pub fn xi_flow_rhs_with(l: &TriangularOperator, v: &[f64]) -> Vec<f64> {
    let n = l.n();
    let k = l.k();
    let vv = |i: isize| v[wrap(i - 1, n)];
    let mut out = Vec::with_capacity(n * k);
    for i in 1..=n as isize {
        for j in 1..=k {
            let lower = l.a(i - 1, j - 1) - l.a(i, j - 1);
            out.push(lower + l.a(i, j) * (vv(i) - vv(i - j as isize)));
        }
    }
    out
}

pub fn xi_flow_rhs(l: &TriangularOperator) -> Vec<f64> {
    xi_flow_rhs_with(l, &solve_v(l))
}

/// `da_i^{(j)} = c_i a_{i+1}^{(j+1)} - c_{i-j-1} a_i^{(j+1)}`.
pub fn eta_flow_rhs(l: &TriangularOperator) -> Vec<f64> {
    let n = l.n();
    let k = l.k();
    let c = |i: isize| 1.0 / l.a(i + 1, 1);
    let mut out = Vec::with_capacity(n * k);
    for i in 1..=n as isize {
        for j in 1..=k {
            out.push(c(i) * l.a(i + 1, j + 1) - c(i - j as isize - 1) * l.a(i, j + 1));
        }
    }
    out
}

pub fn flow_rhs(l: &TriangularOperator, flow: FlowTag) -> Vec<f64> {
    match flow {
        FlowTag::Xi => xi_flow_rhs(l),
        FlowTag::Eta => eta_flow_rhs(l),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Rk4,
    Euler,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Scheme::Rk4),
            "euler" => Ok(Scheme::Euler),
            other => Err(Error::InvalidArgument(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TriangularOperator>,
    /// Names of the monitored quantities: `r_i_j` for every curve slot in the
    /// allowed support, then `e_1 .. e_6`.
    pub monitor_names: Vec<String>,
    /// `monitors[t][q]` is quantity `q` at `times[t]`.
    pub monitors: Vec<Vec<f64>>,
}

fn monitor_slots(n: usize, k: usize) -> Vec<(usize, usize)> {
    let probe = SpectralCurve::empty(n, k);
    let mut slots = Vec::new();
    for i in 0..=k + 1 {
        for j in 0..=n {
            if probe.in_support(i, j) {
                slots.push((i, j));
            }
        }
    }
    slots
}

fn monitor(l: &TriangularOperator, slots: &[(usize, usize)]) -> Result<Vec<f64>> {
    let curve = characteristic_curve(l)?;
    let series = minus_series(l, MONITORED_E)?;
    let mut out: Vec<f64> = slots.iter().map(|&(i, j)| curve.r(i, j)).collect();
    out.extend_from_slice(&series.e);
    Ok(out)
}

fn axpy(base: &[f64], h: f64, dir: &[f64]) -> Vec<f64> {
    base.iter().zip(dir).map(|(b, d)| b + h * d).collect()
}

fn step(l: &TriangularOperator, flow: FlowTag, h: f64, scheme: Scheme) -> Result<TriangularOperator> {
    let y = l.coeffs();
    let f = |c: Vec<f64>| -> Result<Vec<f64>> { Ok(flow_rhs(&l.with_coeffs(c)?, flow)) };
    let next = match scheme {
        Scheme::Euler => axpy(y, h, &flow_rhs(l, flow)),
        Scheme::Rk4 => {
            let k1 = flow_rhs(l, flow);
            let k2 = f(axpy(y, h / 2.0, &k1))?;
            let k3 = f(axpy(y, h / 2.0, &k2))?;
            let k4 = f(axpy(y, h, &k3))?;
            y.iter()
                .enumerate()
                .map(|(p, v)| v + h / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]))
                .collect()
        }
    };
    l.with_coeffs(next)
}

/// `a^{(1)}` cannot change sign without passing through the singular set, so
/// a sign flip between steps counts as leaving the domain.
fn check_state(prev: &TriangularOperator, l: &TriangularOperator, time: f64) -> Result<()> {
    for i in 1..=l.n() {
        let a = l.a(i as isize, 1);
        if a.is_nan() || a.abs() < EPS_MIN || a.signum() != prev.a(i as isize, 1).signum() {
            return Err(Error::StateInvalid { time, site: i });
        }
    }
    Ok(())
}

/// Fixed-step integration of the chosen flow over `[0, t_end]`.
///
/// The last step is shortened when `t_end` is not a multiple of `dt`.
/// A state with `|a^{(1)}| < EPS_MIN`, a sign flip of some `a^{(1)}`, or
/// non-finite entries aborts with
/// [`Error::StateInvalid`] carrying the last good time.
pub fn integrate(l0: &TriangularOperator, flow: FlowTag, t_end: f64, dt: f64, scheme: Scheme) -> Result<Trajectory> {
    if !(dt > 0.0 && t_end >= dt && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t_end}"
        )));
    }
    l0.validate()?;
    let slots = monitor_slots(l0.n(), l0.k());
    let mut names: Vec<String> = slots.iter().map(|(i, j)| format!("r_{i}_{j}")).collect();
    names.extend((1..=MONITORED_E).map(|s| format!("e_{s}")));
    let steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![l0.clone()],
        monitor_names: names,
        monitors: vec![monitor(l0, &slots)?],
    };
    let mut state = l0.clone();
    let mut t = 0.0;
    for m in 1..=steps {
        let t_next = if m == steps { t_end } else { m as f64 * dt };
        let next = step(&state, flow, t_next - t, scheme).map_err(|_| Error::StateInvalid { time: t, site: 0 })?;
        check_state(&state, &next, t)?;
        let values = monitor(&next, &slots).map_err(|e| match e {
            Error::LeadingCoefficientZero { site } => Error::StateInvalid { time: t, site },
            other => other,
        })?;
        state = next;
        t = t_next;
        traj.times.push(t);
        traj.states.push(state.clone());
        traj.monitors.push(values);
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftEntry {
    pub quantity: String,
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DriftReport {
    pub entries: Vec<DriftEntry>,
    pub max_drift: f64,
}

/// `max_t |q(t) - q(0)| / (1 + |q(0)|)` for every monitored quantity.
pub fn invariant_drift(traj: &Trajectory) -> DriftReport {
    let first = &traj.monitors[0];
    let entries: Vec<DriftEntry> = traj
        .monitor_names
        .iter()
        .enumerate()
        .map(|(q, name)| {
            let q0 = first[q];
            let drift = traj
                .monitors
                .iter()
                .map(|row| (row[q] - q0).abs() / (1.0 + q0.abs()))
                .fold(0.0, f64::max);
            DriftEntry {
                quantity: name.clone(),
                drift,
            }
        })
        .collect();
    let max_drift = entries.iter().map(|e| e.drift).fold(0.0, f64::max);
    DriftReport { entries, max_drift }
}

/// `t,a_1_1,...,a_n_k`, one row per sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let l0 = &traj.states[0];
    let mut out = String::from("t");
    for i in 1..=l0.n() {
        for j in 1..=l0.k() {
            let _ = write!(out, ",a_{i}_{j}");
        }
    }
    out.push('\n');
    for (t, l) in traj.times.iter().zip(&traj.states) {
        let _ = write!(out, "{t}");
        for c in l.coeffs() {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

/// `t,quantity,value`, one row per sample and quantity.
pub fn monitor_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,quantity,value\n");
    for (t, row) in traj.times.iter().zip(&traj.monitors) {
        for (name, v) in traj.monitor_names.iter().zip(row) {
            let _ = writeln!(out, "{t},{name},{v}");
        }
    }
    out
}
