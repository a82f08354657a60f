//! CSV time series, metrics reports and SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use cohsim_core::engine::{damping_metrics, DampingMetrics, RunResult, TimeSeries};

/// Formats a sample with nine decimals. Values that round to zero are written
/// as `0` so that sign noise does not leak into golden files.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.9}");
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        "0".into()
    } else {
        s
    }
}

/// Writes the series as CSV: a header row starting with `t_s`, one
/// `#`-prefixed units line, then one row per sample.
pub fn write_csv<W: Write>(series: &TimeSeries, mut w: W) -> io::Result<()> {
    let mut line = String::from("t_s");
    for c in series.channels() {
        line.push(',');
        line.push_str(&c.name);
    }
    writeln!(w, "{line}")?;
    line.clear();
    line.push_str("# s");
    for c in series.channels() {
        line.push(',');
        line.push_str(&c.unit);
    }
    writeln!(w, "{line}")?;
    for (i, t) in series.time().iter().enumerate() {
        line.clear();
        line.push_str(&format!("{t:.6}"));
        for v in series.row(i) {
            line.push(',');
            line.push_str(&format_value(v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn csv_string(series: &TimeSeries) -> String {
    let mut buf = Vec::new();
    write_csv(series, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Parsed CSV: channel names, units and rows (time first).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub names: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv(text: &str) -> Result<CsvTable, String> {
    let mut lines = text.lines();
    let names: Vec<String> = lines.next().ok_or("empty file")?.split(',').map(str::to_string).collect();
    let units_line = lines.next().ok_or("missing units line")?;
    let units: Vec<String> = units_line
        .strip_prefix("# ")
        .ok_or("units line must start with '# '")?
        .split(',')
        .map(str::to_string)
        .collect();
    if units.len() != names.len() {
        return Err("units line width differs from header".into());
    }
    let mut rows = Vec::new();
    for (n, l) in lines.enumerate() {
        let row: Vec<f64> = l
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|e| format!("row {}: {e}", n + 1)))
            .collect::<Result<_, _>>()?;
        if row.len() != names.len() {
            return Err(format!("row {} has {} fields", n + 1, row.len()));
        }
        rows.push(row);
    }
    Ok(CsvTable { names, units, rows })
}

/// Metrics of `channels` measured from `t_event`.
pub fn channel_metrics(r: &RunResult, channels: &[String], t_event: f64) -> Vec<(String, DampingMetrics)> {
    let t = r.series.time();
    channels
        .iter()
        .filter_map(|c| r.series.column(c).map(|y| (c.clone(), damping_metrics(t, y, t_event))))
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.6}"))
}

/// Text report of one run. Header lines start with `#`, followed by one
/// metrics row per channel.
pub fn metrics_text(name: &str, r: &RunResult, metrics: &[(String, DampingMetrics)], header: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# scenario: {name}");
    let _ = writeln!(s, "# status: {}", r.status.label());
    match &r.status {
        cohsim_core::engine::RunStatus::Stable => {}
        cohsim_core::engine::RunStatus::Unstable { time, reason } => {
            let _ = writeln!(s, "# unstable at t = {time:.4} s: {reason}");
        }
        cohsim_core::engine::RunStatus::Failed { time, error } => {
            let _ = writeln!(s, "# failed at t = {time:.4} s: {error}");
        }
    }
    let _ = writeln!(s, "# solver.h: {}", r.h);
    let _ = writeln!(s, "# solver.t_end: {}", r.config.t_end);
    let _ = writeln!(s, "# solver.output_step: {}", r.config.output_step);
    let _ = writeln!(s, "# steps: {}, newton iterations: {}", r.stats.steps, r.stats.iterations);
    for h in header {
        let _ = writeln!(s, "# {h}");
    }
    for w in &r.warnings {
        let _ = writeln!(s, "# warning: {w}");
    }
    let _ = writeln!(s, "channel,peak_to_peak,peak_ratio,settling_time_s,modal_frequency_hz");
    for (c, m) in metrics {
        let _ = writeln!(
            s,
            "{c},{:.6e},{},{:.4},{}",
            m.peak_to_peak,
            opt(m.peak_ratio),
            m.settling_time,
            opt(m.modal_frequency)
        );
    }
    s
}

/// Paths written by [`write_run`].
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub csv: PathBuf,
    pub metrics: PathBuf,
    pub svg: Option<PathBuf>,
}

/// Writes `<dir>/<name>.csv`, `<dir>/<name>.metrics.txt` and, if any plot
/// channels are given, `<dir>/<name>.svg`.
pub fn write_run(
    dir: &Path,
    name: &str,
    r: &RunResult,
    metrics: &[(String, DampingMetrics)],
    header: &[String],
    plot: &[String],
) -> io::Result<RunFiles> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{name}.csv"));
    write_csv(&r.series, io::BufWriter::new(fs::File::create(&csv)?))?;
    let metrics_path = dir.join(format!("{name}.metrics.txt"));
    fs::write(&metrics_path, metrics_text(name, r, metrics, header))?;
    let svg = if plot.is_empty() {
        None
    } else {
        let p = dir.join(format!("{name}.svg"));
        fs::write(&p, svg_plot(&r.series, plot, name))?;
        Some(p)
    };
    Ok(RunFiles { csv, metrics: metrics_path, svg })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line chart of the given channels against time.
pub fn svg_plot(series: &TimeSeries, channels: &[String], title: &str) -> String {
    let (w, h, m) = (800.0, 420.0, 60.0);
    let t = series.time();
    let cols: Vec<(&String, &[f64])> = channels.iter().filter_map(|c| series.column(c).map(|y| (c, y))).collect();
    let finite = cols.iter().flat_map(|(_, y)| y.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5e-3;
        hi += 0.5e-3;
    }
    let (t0, t1) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(1.0).max(1e-9));
    let sx = |x: f64| m + (x - t0) / (t1 - t0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - lo) / (hi - lo) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{m}" y="24" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(s, r#"<text x="{m}" y="{}">{t0:.1} s</text>"#, h - m + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{t1:.1} s</text>"#, w - m, h - m + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, m - 4.0, m + 4.0, format_value(hi));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, m - 4.0, h - m, format_value(lo));
    for (k, (name, y)) in cols.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        for (ti, yi) in t.iter().zip(y.iter()) {
            if yi.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(*ti), sy(*yi));
            }
        }
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#, pts.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            w - m - 150.0,
            m + 16.0 + 14.0 * k as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use cohsim_core::engine::Channel;

    fn series() -> TimeSeries {
        let mut s = TimeSeries::new(vec![
            Channel { name: "a".into(), unit: "pu".into() },
            Channel { name: "b".into(), unit: "rad".into() },
        ])
        .unwrap();
        s.push(0.0, &[1.0, -2.5e-11]);
        s.push(0.01, &[1.000000001, 0.25]);
        s
    }

    #[test]
    fn csv_layout() {
        let text = csv_string(&series());
        assert_eq!(text, "t_s,a,b\n# s,pu,rad\n0.000000,1.000000000,0\n0.010000,1.000000001,0.250000000\n");
        let back = read_csv(&text).unwrap();
        assert_eq!(back.names, ["t_s", "a", "b"]);
        assert_eq!(back.units, ["s", "pu", "rad"]);
        assert_eq!(back.rows[1], vec![0.01, 1.000000001, 0.25]);
    }

    #[test]
    fn values() {
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(-4e-10), "0");
        assert_eq!(format_value(-6e-10), "-0.000000001");
        assert_eq!(format_value(f64::NAN), "NaN");
    }

    #[test]
    fn svg_has_one_line_per_channel() {
        let svg = svg_plot(&series(), &["a".into(), "b".into(), "missing".into()], "x < y");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("x &lt; y"));
    }
}
