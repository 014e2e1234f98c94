//! Report emission: P&L curves, histograms, summary tables, traces, and
//! lightweight SVG renders. Data files come first; images are derived from
//! the same data so tests assert on the numbers.

use std::io::Write;
use std::path::Path;

use crate::policies::PnlSeries;
use crate::rl::{TraceRow, TrainingCurve};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("histogram needs at least one finite value")]
    EmptyHistogram,
}

use thiserror::Error;

/// Binned counts with explicit edges (`edges.len() == counts.len() + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width histogram over `[lo, hi]` (range defaults to the data's
/// min/max, widened slightly when degenerate). Values outside the range
/// clamp into the edge bins.
pub fn histogram(values: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<Histogram, ReportError> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || bins == 0 {
        return Err(ReportError::EmptyHistogram);
    }
    let (mut lo, mut hi) = range.unwrap_or_else(|| {
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    });
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for v in finite {
        let mut idx = ((v - lo) / width) as isize;
        idx = idx.clamp(0, bins as isize - 1);
        counts[idx as usize] += 1;
    }
    Ok(Histogram { edges, counts })
}

fn file_writer(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, ReportError> {
    let f = std::fs::File::create(path)
        .map_err(|e| ReportError::Io { path: path.display().to_string(), source: e })?;
    Ok(std::io::BufWriter::new(f))
}

/// `pnl_<strategy>.csv`: timestamp, hourly P&L, cumulative P&L. The first
/// line carries the manifest fingerprint as a comment.
pub fn write_pnl_csv(path: &Path, series: &PnlSeries, fingerprint: &str) -> Result<(), ReportError> {
    let mut w = file_writer(path)?;
    writeln!(w, "# fingerprint={fingerprint}")
        .map_err(|e| ReportError::Io { path: path.display().to_string(), source: e })?;
    writeln!(w, "timestamp,hourly_pnl,cumulative_pnl")
        .map_err(|e| ReportError::Io { path: path.display().to_string(), source: e })?;
    for (i, (t, v)) in series.hourly.iter().enumerate() {
        writeln!(
            w,
            "{},{},{}",
            t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            v,
            series.cumulative[i]
        )
        .map_err(|e| ReportError::Io { path: path.display().to_string(), source: e })?;
    }
    Ok(())
}

/// `hist_<name>.csv`: bin_low, bin_high, count.
pub fn write_histogram_csv(path: &Path, hist: &Histogram, fingerprint: &str) -> Result<(), ReportError> {
    let mut w = file_writer(path)?;
    let io_err = |e: std::io::Error| ReportError::Io { path: path.display().to_string(), source: e };
    writeln!(w, "# fingerprint={fingerprint}").map_err(io_err)?;
    writeln!(w, "bin_low,bin_high,count").map_err(io_err)?;
    for (i, count) in hist.counts.iter().enumerate() {
        writeln!(w, "{},{},{}", hist.edges[i], hist.edges[i + 1], count).map_err(io_err)?;
    }
    Ok(())
}

/// Episode trace rows for audit: one row per balancing step.
pub fn write_trace_csv(path: &Path, traces: &[TraceRow], fingerprint: &str) -> Result<(), ReportError> {
    let mut w = file_writer(path)?;
    let io_err = |e: std::io::Error| ReportError::Io { path: path.display().to_string(), source: e };
    writeln!(w, "# fingerprint={fingerprint}").map_err(io_err)?;
    writeln!(
        w,
        "timestamp,hour_index,quarter,s_da,p_bid,p_ask,s_bm,fills,hydrogen_revenue,da_cost,bm_cashflow,shaping_term,reward,cumulative_pnl"
    )
    .map_err(io_err)?;
    for row in traces {
        let fills = row
            .fills
            .iter()
            .map(|f| format!("{}@{}", f.volume, f.price))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            row.hour_index,
            row.quarter,
            row.s_da,
            row.p_bid.map(|v| v.to_string()).unwrap_or_default(),
            row.p_ask.map(|v| v.to_string()).unwrap_or_default(),
            row.s_bm,
            fills,
            row.breakdown.hydrogen_revenue,
            row.breakdown.da_cost,
            row.breakdown.bm_cashflow,
            row.breakdown.shaping_term,
            row.breakdown.total,
            row.cumulative_pnl
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Training curve export: episode, raw reward, shaped reward, moving
/// average.
pub fn write_curve_csv(path: &Path, curve: &TrainingCurve, fingerprint: &str) -> Result<(), ReportError> {
    let mut w = file_writer(path)?;
    let io_err = |e: std::io::Error| ReportError::Io { path: path.display().to_string(), source: e };
    writeln!(w, "# fingerprint={fingerprint}").map_err(io_err)?;
    writeln!(w, "episode,raw_reward,shaped_reward,moving_average").map_err(io_err)?;
    for (ep, raw, shaped, avg) in &curve.rows {
        writeln!(w, "{ep},{raw},{shaped},{avg}").map_err(io_err)?;
    }
    Ok(())
}

/// One strategy line of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: String,
    pub total_pnl: f64,
    /// Percent versus the best benchmark total; `None` for benchmark rows
    /// or when no benchmark exists.
    pub vs_best_benchmark_pct: Option<f64>,
}

/// Comparison table: total P&L per strategy plus percent against the best
/// benchmark. Benchmarks are rows whose name starts with `P`.
pub fn summary_table(agent: &[(String, f64)], benchmarks: &[(String, f64)]) -> Vec<SummaryRow> {
    let best = benchmarks.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let mut rows: Vec<SummaryRow> = agent
        .iter()
        .map(|(name, total)| SummaryRow {
            strategy: name.clone(),
            total_pnl: *total,
            vs_best_benchmark_pct: (best.is_finite() && best != 0.0)
                .then(|| (total / best - 1.0) * 100.0),
        })
        .collect();
    rows.extend(benchmarks.iter().map(|(name, total)| SummaryRow {
        strategy: name.clone(),
        total_pnl: *total,
        vs_best_benchmark_pct: None,
    }));
    rows
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow], fingerprint: &str) -> Result<(), ReportError> {
    let mut w = file_writer(path)?;
    let io_err = |e: std::io::Error| ReportError::Io { path: path.display().to_string(), source: e };
    writeln!(w, "# fingerprint={fingerprint}").map_err(io_err)?;
    writeln!(w, "strategy,total_pnl,vs_best_benchmark_pct").map_err(io_err)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            r.strategy,
            r.total_pnl,
            r.vs_best_benchmark_pct.map(|v| format!("{v:+.1}%")).unwrap_or_default()
        )
        .map_err(io_err)?;
    }
    Ok(())
}

const SVG_COLORS: [&str; 8] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

/// Minimal multi-series line chart (cumulative P&L curves) as SVG.
pub fn render_line_chart_svg(
    path: &Path,
    title: &str,
    series: &[(String, Vec<f64>)],
) -> Result<(), ReportError> {
    let (w_px, h_px, margin) = (900.0, 440.0, 60.0);
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, v) in series {
        for y in v {
            lo = lo.min(*y);
            hi = hi.max(*y);
        }
    }
    if !lo.is_finite() || n < 2 {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let x_of = |i: usize| margin + (w_px - 2.0 * margin) * i as f64 / (n.max(2) - 1) as f64;
    let y_of = |v: f64| h_px - margin - (h_px - 2.0 * margin) * (v - lo) / (hi - lo);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w_px} {h_px}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        w_px / 2.0
    ));
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#333\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"#333\"/>\n",
        m = margin,
        b = h_px - margin,
        r = w_px - margin,
        t = margin
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{hi:.0}</text>\n<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{lo:.0}</text>\n",
        margin - 6.0,
        margin + 4.0,
        margin - 6.0,
        h_px - margin + 4.0
    ));
    for (si, (name, values)) in series.iter().enumerate() {
        if values.len() < 2 {
            continue;
        }
        let color = SVG_COLORS[si % SVG_COLORS.len()];
        let points: Vec<String> =
            values.iter().enumerate().map(|(i, v)| format!("{:.2},{:.2}", x_of(i), y_of(*v))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{name}</text>\n",
            w_px - margin + 8.0,
            margin + 16.0 * si as f64
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)
        .map_err(|e| ReportError::Io { path: path.display().to_string(), source: e })
}

/// Histogram bar chart as SVG.
pub fn render_histogram_svg(path: &Path, title: &str, hist: &Histogram) -> Result<(), ReportError> {
    let (w_px, h_px, margin) = (900.0, 440.0, 60.0);
    let max_count = hist.counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let bins = hist.counts.len();
    let bar_w = (w_px - 2.0 * margin) / bins as f64;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w_px} {h_px}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        w_px / 2.0
    ));
    for (i, count) in hist.counts.iter().enumerate() {
        let h = (h_px - 2.0 * margin) * *count as f64 / max_count;
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#1f77b4\"/>\n",
            margin + bar_w * i as f64,
            h_px - margin - h,
            (bar_w - 1.0).max(0.5),
            h
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\">{:.1}</text>\n<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1}</text>\n",
        margin,
        h_px - margin + 16.0,
        hist.edges[0],
        w_px - margin,
        h_px - margin + 16.0,
        hist.edges[bins]
    ));
    svg.push_str("</svg>\n");
    std::fs::write(path, svg)
        .map_err(|e| ReportError::Io { path: path.display().to_string(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_and_edges() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.5, 2.0], 4, Some((0.0, 2.0))).unwrap();
        assert_eq!(h.edges.len(), 5);
        assert_eq!(h.counts.iter().sum::<usize>(), 5);
        // Top edge value clamps into the last bin.
        assert_eq!(h.counts[3], 2);
    }

    #[test]
    fn histogram_clamps_out_of_range() {
        let h = histogram(&[-10.0, 0.25, 10.0], 2, Some((0.0, 1.0))).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
    }

    #[test]
    fn summary_percentage_matches_ratio() {
        let rows = summary_table(
            &[("agent".into(), 148.0)],
            &[("P4".into(), 97.0), ("P5".into(), 100.0)],
        );
        let agent = &rows[0];
        assert_eq!(agent.strategy, "agent");
        let pct = agent.vs_best_benchmark_pct.unwrap();
        assert!((pct - 48.0).abs() < 1e-9, "{pct}");
        assert!(rows.iter().any(|r| r.strategy == "P5" && r.vs_best_benchmark_pct.is_none()));
    }

    #[test]
    fn csv_files_embed_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let mut series = PnlSeries::default();
        series.push(chrono::Utc::now(), 10.0);
        series.push(chrono::Utc::now(), -3.0);
        let path = dir.path().join("pnl_agent.csv");
        write_pnl_csv(&path, &series, "abc123").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# fingerprint=abc123\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn svg_renders_to_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.svg");
        render_line_chart_svg(
            &path,
            "test",
            &[("a".into(), vec![0.0, 1.0, 3.0]), ("b".into(), vec![1.0, 0.5, 2.0])],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("<polyline"));
        let h = histogram(&[1.0, 2.0, 2.5], 4, None).unwrap();
        let hpath = dir.path().join("hist.svg");
        render_histogram_svg(&hpath, "hist", &h).unwrap();
        assert!(std::fs::read_to_string(&hpath).unwrap().contains("<rect"));
    }
}
