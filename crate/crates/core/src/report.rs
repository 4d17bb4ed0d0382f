//! CSV output for the experiment tables.
//!
//! Every file starts with `# schema=1`. Floats are rounded to 12
//! significant digits and then printed in shortest round-trip form.

use crate::experiments::{SweepRow, TrajectoryRow};
use crate::mimo::SerPoint;

pub const SCHEMA_LINE: &str = "# schema=1";

pub const SWEEP_COLUMNS: &[&str] = &[
    "gamma",
    "alpha",
    "sigma",
    "trials",
    "lambda_mean",
    "lambda_min",
    "lambda_max",
    "lambda_se",
];
pub const TRAJECTORY_COLUMNS: &[&str] = &["iteration", "err_min", "err_mean", "err_max"];
pub const SER_COLUMNS: &[&str] = &["snr_db", "algorithm", "alpha", "trials", "symbol_errors", "ser"];

pub fn fmt_float(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let r: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let a = r.abs();
    if r != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn table(comments: &[String], columns: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut out = String::new();
    out.push_str(SCHEMA_LINE);
    out.push('\n');
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow], n: usize, seed: u64) -> String {
    table(
        &[format!("n={n} seed={seed}")],
        SWEEP_COLUMNS,
        rows.iter()
            .map(|r| {
                vec![
                    fmt_float(r.gamma),
                    fmt_float(r.alpha),
                    fmt_float(r.sigma),
                    r.trials.to_string(),
                    fmt_float(r.lambda_mean),
                    fmt_float(r.lambda_min),
                    fmt_float(r.lambda_max),
                    fmt_float(r.lambda_se),
                ]
            })
            .collect(),
    )
}

pub fn trajectory_csv(rows: &[TrajectoryRow], header: &str) -> String {
    table(
        &[header.to_string()],
        TRAJECTORY_COLUMNS,
        rows.iter()
            .map(|r| {
                vec![
                    r.iteration.to_string(),
                    fmt_float(r.err_min),
                    fmt_float(r.err_mean),
                    fmt_float(r.err_max),
                ]
            })
            .collect(),
    )
}

pub fn ser_csv(points: &[SerPoint], header: &str) -> String {
    table(
        &[
            header.to_string(),
            "snr_db = 10 log10(N / sigma_w^2), H entries iid N(0,1)".to_string(),
        ],
        SER_COLUMNS,
        points
            .iter()
            .map(|p| {
                vec![
                    fmt_float(p.snr_db),
                    p.algorithm.clone(),
                    p.alpha.map(fmt_float).unwrap_or_default(),
                    p.trials.to_string(),
                    p.symbol_errors.to_string(),
                    fmt_float(p.ser),
                ]
            })
            .collect(),
    )
}
