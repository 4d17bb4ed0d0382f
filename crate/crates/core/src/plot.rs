//! Minimal static line charts from the experiment CSV files.

use crate::error::{Error, Result};
use crate::report::{fmt_float, SER_COLUMNS, SWEEP_COLUMNS, TRAJECTORY_COLUMNS};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Generic,
    Sweep,
    Trajectory,
    Ser,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub schema: Schema,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn expected_columns() -> String {
    [
        "x,y[,series]".to_string(),
        SWEEP_COLUMNS.join(","),
        TRAJECTORY_COLUMNS.join(","),
        SER_COLUMNS.join(","),
    ]
    .join(" | ")
}

fn detect(header: &[String]) -> Result<Schema> {
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    if h == SWEEP_COLUMNS {
        return Ok(Schema::Sweep);
    }
    if h == TRAJECTORY_COLUMNS {
        return Ok(Schema::Trajectory);
    }
    if h == SER_COLUMNS {
        return Ok(Schema::Ser);
    }
    let generic = h.contains(&"x")
        && h.contains(&"y")
        && h.iter().all(|c| matches!(*c, "x" | "y" | "series"))
        && h.len() == h.iter().collect::<std::collections::BTreeSet<_>>().len();
    if generic {
        return Ok(Schema::Generic);
    }
    Err(Error::Parameter(format!(
        "unrecognized columns '{}'; expected one of: {}",
        h.join(","),
        expected_columns()
    )))
}

fn push(series: &mut Vec<Series>, name: String, point: (f64, f64)) {
    match series.iter_mut().find(|s| s.name == name) {
        Some(s) => s.points.push(point),
        None => series.push(Series {
            name,
            points: vec![point],
        }),
    }
}

/// Parses a CSV with a recognized schema into named series, in order of
/// first appearance. Lines starting with `#` are ignored.
pub fn parse_chart(text: &str) -> Result<Chart> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parameter(format!("cannot read CSV header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let schema = detect(&header)?;
    let col = |name: &str| header.iter().position(|c| c == name).unwrap();
    let mut series = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parameter(format!("bad CSV record: {e}")))?;
        let num = |name: &str| -> Result<f64> {
            let raw = &record[col(name)];
            raw.parse::<f64>().map_err(|_| {
                Error::Parameter(format!("row {}: column '{name}' is not a number: '{raw}'", line + 1))
            })
        };
        match schema {
            Schema::Generic => {
                let name = match header.iter().position(|c| c == "series") {
                    Some(i) => record[i].to_string(),
                    None => "y".to_string(),
                };
                push(&mut series, name, (num("x")?, num("y")?));
            }
            Schema::Sweep => {
                let name = format!("gamma={} alpha={}", &record[col("gamma")], &record[col("alpha")]);
                push(&mut series, name, (num("sigma")?, num("lambda_mean")?));
            }
            Schema::Trajectory => {
                let x = num("iteration")?;
                for c in ["err_min", "err_mean", "err_max"] {
                    push(&mut series, c.to_string(), (x, num(c)?));
                }
            }
            Schema::Ser => {
                let name = record[col("algorithm")].to_string();
                push(&mut series, name, (num("snr_db")?, num("ser")?));
            }
        }
    }
    let (x_label, y_label) = match schema {
        Schema::Generic => ("x", "y"),
        Schema::Sweep => ("sigma", "mean lambda*"),
        Schema::Trajectory => ("iteration", "normalized error"),
        Schema::Ser => ("SNR (dB)", "symbol error rate"),
    };
    Ok(Chart {
        schema,
        x_label: x_label.into(),
        y_label: y_label.into(),
        series,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Renders a chart as SVG. With `log_y`, the y axis is `log10` and
/// non-positive values are dropped.
pub fn render_svg(chart: &Chart, log_y: bool) -> String {
    let series: Vec<(String, Vec<(f64, f64)>)> = chart
        .series
        .iter()
        .map(|s| {
            let pts = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, if log_y { y.log10() } else { y }))
                .collect();
            (s.name.clone(), pts)
        })
        .collect();
    let (x0, x1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<path d=\"M {l:.2} {t:.2} L {l:.2} {b:.2} L {r:.2} {b:.2}\" stroke=\"black\" fill=\"none\"/>\n",
        l = LEFT,
        t = TOP,
        b = TOP + ph,
        r = LEFT + pw
    ));
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let ylab = if log_y { format!("1e{}", fmt_float(yv)) } else { fmt_float(yv) };
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            px(xv),
            TOP + ph + 16.0,
            fmt_float(xv)
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            LEFT - 6.0,
            py(yv) + 4.0,
            ylab
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&chart.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{}</text>\n",
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    ));
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            coords.join(" ")
        ));
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx,
            lx + 20.0
        ));
        out.push_str(&format!(
            "<text class=\"legend\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>\n",
            lx + 26.0,
            ly + 4.0,
            escape(name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

pub fn plot_csv(text: &str, log_y: bool) -> Result<String> {
    Ok(render_svg(&parse_chart(text)?, log_y))
}
