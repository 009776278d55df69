//! `toda-tri`: command-line front end.
//!
//! Exit codes: 0 success, 1 suite or check failure, 2 usage or parse error,
//! 3 curve shape violation, 4 domain error, 5 integration failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use toda_tri::calibration;
use toda_tri::chart::{chart_from_operator, Chart};
use toda_tri::flows::{integrate, invariant_drift, monitor_csv, trajectory_csv, Scheme};
use toda_tri::frame::{frame_to_operator, operator_to_frame, FramePair};
use toda_tri::series::{hamiltonian_e, minus_residual, minus_series, plus_residual, plus_series};
use toda_tri::spectral::{characteristic_curve, floquet_roots_of};
use toda_tri::symplectic::{central_difference_gradient, gradient, hamiltonian_value, match_lax, Hamiltonian};
use toda_tri::verify::{self, VerifyConfig};
use toda_tri::{Error, FlowTag, LogMode, TriangularOperator};

/// Imaginary parts below this are dropped when a frame yields an operator.
const REAL_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "toda-tri",
    version,
    about = "Periodic lower-triangular difference operators and their Lax flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral curve, shape report and Floquet multipliers at E = 0.
    Spectral { operator: PathBuf },
    /// Bloch expansions at both marked points.
    Series {
        operator: PathBuf,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
        order: u64,
    },
    /// Integrates a Lax flow and writes trajectory, monitor and drift files.
    Flow {
        operator: PathBuf,
        #[arg(long, value_enum)]
        flow: FlowArg,
        #[arg(long = "t", default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = SchemeArg::Rk4)]
        scheme: SchemeArg,
        /// Directory receiving trajectory.csv, monitor.csv and drift.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Converts between operators and frames.
    Frame {
        #[arg(value_enum)]
        direction: FrameDirection,
        file: PathBuf,
    },
    /// Checks one Hamiltonian against the flows.
    Check {
        #[command(subcommand)]
        what: CheckCommand,
    },
    /// Runs the seeded verification suite.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: Option<u64>,
        /// Recomputes the calibration constants instead of running the suite.
        #[arg(long)]
        calibrate: bool,
        /// Where `--calibrate` writes the constants.
        #[arg(long, default_value = "calibration.json")]
        calibration_out: PathBuf,
        /// Also writes the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    Hamiltonian {
        operator: PathBuf,
        #[arg(long, value_enum)]
        chart: ChartArg,
        #[arg(long, value_enum)]
        which: WhichArg,
        #[arg(long, value_enum)]
        flow: FlowArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    Xi,
    Eta,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Rk4,
    Euler,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameDirection {
    ToOp,
    FromOp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChartArg {
    PhiK1,
    #[value(name = "x-k1")]
    XK1,
    XyK2,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Hminus,
    Hplus,
    E3,
    E4,
    Xcubic,
    E3Exact,
}

impl From<FlowArg> for FlowTag {
    fn from(f: FlowArg) -> Self {
        match f {
            FlowArg::Xi => FlowTag::Xi,
            FlowArg::Eta => FlowTag::Eta,
        }
    }
}

impl From<ChartArg> for Chart {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::PhiK1 => Chart::PhiK1,
            ChartArg::XK1 => Chart::XK1,
            ChartArg::XyK2 => Chart::XYK2,
        }
    }
}

impl From<WhichArg> for Hamiltonian {
    fn from(w: WhichArg) -> Self {
        match w {
            WhichArg::Hminus => Hamiltonian::Hminus,
            WhichArg::Hplus => Hamiltonian::Hplus,
            WhichArg::E3 => Hamiltonian::E3,
            WhichArg::E4 => Hamiltonian::E4,
            WhichArg::Xcubic => Hamiltonian::Xcubic,
            WhichArg::E3Exact => Hamiltonian::E3Exact,
        }
    }
}

/// A command failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Json(_)
            | Error::Io(_)
            | Error::Malformed(_)
            | Error::InvalidArgument(_)
            | Error::InvalidRange { .. } => 2,
            Error::ShapeViolation { .. } => 3,
            Error::StateInvalid { .. } => 5,
            _ => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn read_operator(path: &Path) -> Result<TriangularOperator, Failure> {
    let l: TriangularOperator = read_json(path)?;
    l.validate()?;
    Ok(l)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn complex(z: toda_tri::Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn cmd_spectral(path: &Path) -> CmdResult {
    let l = read_operator(path)?;
    let curve = characteristic_curve(&l)?;
    let (n, k) = (l.n(), l.k());
    let support_ok = curve
        .terms()
        .keys()
        .all(|&(i, j)| curve.in_support(i, j) || (i, j) == (k + 1, 0) || (i, j) == (0, n));
    let product = l.leading_product();
    let r10 = curve.r(1, 0);
    let roots: Vec<Value> = floquet_roots_of(&curve)?.into_iter().map(complex).collect();
    let report = json!({
        "curve": curve,
        "shape": {
            "supportOk": support_ok,
            "r10": r10,
            "leadingProduct": product,
            "r10RelativeError": (r10 - product).abs() / product.abs(),
        },
        "floquetRoots": roots,
    });
    println!("{}", pretty(&report));
    Ok(0)
}

fn cmd_series(path: &Path, order: usize) -> CmdResult {
    let l = read_operator(path)?;
    let minus = minus_series(&l, order)?;
    let plus = plus_series(&l, order, LogMode::Real)?;
    let k = l.k();
    let e_k1 = (k < order).then(|| minus.e(k + 1));
    let report = json!({
        "minus": minus,
        "plus": plus,
        "minusResidual": minus_residual(&l, &minus),
        "plusResidual": plus_residual(&l, &plus),
        "eKPlus1": e_k1,
    });
    println!("{}", pretty(&report));
    Ok(0)
}

fn cmd_flow(path: &Path, flow: FlowTag, t_end: f64, dt: f64, scheme: Scheme, out: &Path) -> CmdResult {
    let l = read_operator(path)?;
    let traj = integrate(&l, flow, t_end, dt, scheme).map_err(|e| match e {
        Error::StateInvalid { time, site } => Failure {
            code: 5,
            message: format!("state left the domain at site {site}; last good time {time}"),
        },
        other => other.into(),
    })?;
    fs::create_dir_all(out).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", out.display()),
    })?;
    let drift = invariant_drift(&traj);
    let summary = pretty(&json!({
        "flow": flow,
        "scheme": scheme,
        "t": t_end,
        "dt": dt,
        "steps": traj.times.len() - 1,
        "drift": drift,
    }));
    write_file(&out.join("trajectory.csv"), &trajectory_csv(&traj))?;
    write_file(&out.join("monitor.csv"), &monitor_csv(&traj))?;
    write_file(&out.join("drift.json"), &summary)?;
    println!("{summary}");
    Ok(0)
}

fn cmd_frame(direction: FrameDirection, path: &Path) -> CmdResult {
    match direction {
        FrameDirection::FromOp => {
            let l = read_operator(path)?;
            println!("{}", pretty(&operator_to_frame(&l)?));
        }
        FrameDirection::ToOp => {
            let f: FramePair = read_json(path)?;
            f.validate()?;
            let l = frame_to_operator(&f)?.to_real(REAL_TOL)?;
            println!("{}", pretty(&l));
        }
    }
    Ok(0)
}

fn cmd_check(path: &Path, chart: Chart, which: Hamiltonian, flow: FlowTag) -> CmdResult {
    let l = read_operator(path)?;
    if which.chart() != chart {
        return Err(
            Error::ChartMismatch(format!("{} lives on the {} chart", which.name(), which.chart().name())).into(),
        );
    }
    let scale = VerifyConfig::from_env(verify::DEFAULT_SEED, None)?.tol_scale;
    let pt = chart_from_operator(chart, &l)?;
    let value = hamiltonian_value(&pt, which)?;
    let exact = gradient(&pt, which)?;
    let approx = central_difference_gradient(&pt, which, 1e-6)?;
    let gmax = exact.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    let grad_dev = exact
        .iter()
        .zip(&approx)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / gmax;
    let grad_ok = grad_dev <= 1e-7 * scale;
    let (comparison, ok) = if which == Hamiltonian::E3 {
        let e3 = hamiltonian_e(&l, 1)?;
        let dev = (value - e3).abs();
        (
            json!({ "e3": e3, "deviation": dev, "tolerance": 1e-10 * scale }),
            dev <= 1e-10 * scale,
        )
    } else {
        let m = match_lax(chart, &l, which, flow)?;
        let tol = if which == Hamiltonian::E4 { 1e-8 } else { 1e-9 } * scale;
        let ok = m.max_deviation <= tol;
        let mut v = serde_json::to_value(&m).expect("match serializes");
        v["tolerance"] = json!(tol);
        (v, ok)
    };
    let passed = ok && grad_ok;
    let report = json!({
        "chart": chart,
        "hamiltonian": which,
        "flow": flow,
        "value": value,
        "gradientDeviation": grad_dev,
        "lax": comparison,
        "passed": passed,
    });
    println!("{}", pretty(&report));
    Ok(if passed { 0 } else { 1 })
}

fn cmd_verify(
    seed: Option<u64>,
    trials: Option<usize>,
    calibrate: bool,
    cal_out: &Path,
    report: Option<&Path>,
) -> CmdResult {
    if calibrate {
        let c = calibration::calibrate(seed.unwrap_or(calibration::DEFAULT_SEED))?;
        let text = pretty(&c) + "\n";
        write_file(cal_out, &text)?;
        print!("{text}");
        if !c.agrees_with(calibration::frozen()) {
            eprintln!("note: constants differ from the built-in calibration");
        }
        return Ok(0);
    }
    let cfg = VerifyConfig::from_env(seed.unwrap_or(verify::DEFAULT_SEED), trials)?;
    let rep = verify::run(&cfg);
    for c in &rep.criteria {
        eprintln!("{}", c.line());
    }
    let text = rep.to_json();
    if let Some(p) = report {
        write_file(p, &text)?;
    }
    println!("{text}");
    Ok(if rep.passed { 0 } else { 1 })
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Spectral { operator } => cmd_spectral(&operator),
        Command::Series { operator, order } => cmd_series(&operator, order as usize),
        Command::Flow {
            operator,
            flow,
            t_end,
            dt,
            scheme,
            out,
        } => {
            let scheme = match scheme {
                SchemeArg::Rk4 => Scheme::Rk4,
                SchemeArg::Euler => Scheme::Euler,
            };
            cmd_flow(&operator, flow.into(), t_end, dt, scheme, &out)
        }
        Command::Frame { direction, file } => cmd_frame(direction, &file),
        Command::Check {
            what:
                CheckCommand::Hamiltonian {
                    operator,
                    chart,
                    which,
                    flow,
                },
        } => cmd_check(&operator, chart.into(), which.into(), flow.into()),
        Command::Verify {
            seed,
            trials,
            calibrate,
            calibration_out,
            report,
        } => cmd_verify(
            seed,
            trials.map(|t| t as usize),
            calibrate,
            &calibration_out,
            report.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(code(Error::Malformed("x".into())), 2);
        assert_eq!(code(Error::ShapeViolation { i: 0, j: 0, value: 1.0 }), 3);
        assert_eq!(code(Error::NonPositiveLeading { site: 1 }), 4);
        assert_eq!(code(Error::NotCoprime { n: 4, order: 2 }), 4);
        assert_eq!(code(Error::StateInvalid { time: 0.5, site: 2 }), 5);
    }
}
