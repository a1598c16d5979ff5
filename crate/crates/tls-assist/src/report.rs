//! Plain-text table rendering for benchmark reports: per-track score means
//! and infraction means with percent deltas against the first row.

use crate::harness::{format_percent, percent_change, BenchmarkReport};
use crate::sim::TrackClass;

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

fn pad_right(s: &str, width: usize) -> String {
    format!("{s:>width$}")
}

fn render_grid(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                out.push_str(&pad(cell, widths[i]));
            } else {
                out.push_str(&pad_right(cell, widths[i]));
            }
        }
        out.push('\n');
    };
    line(&header, &mut out);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in &rows {
        line(row, &mut out);
    }
    out
}

fn track_name(t: TrackClass) -> &'static str {
    t.name()
}

/// DS/RC/IS means per track plus the overall means, one row per method.
pub fn render_results_table(report: &BenchmarkReport) -> String {
    let mut header = vec!["Method".to_string()];
    for t in &report.manifest.tracks {
        for m in ["DS", "RC", "IS"] {
            header.push(format!("{} {m}", track_name(*t)));
        }
    }
    for m in ["DS", "RC", "IS"] {
        header.push(format!("Overall {m}"));
    }

    let mut rows = Vec::new();
    for row in &report.rows {
        let mut cells = vec![row.label.clone()];
        for track in &row.tracks {
            cells.push(format!("{:.2}", track.metrics.ds));
            cells.push(format!("{:.2}", track.metrics.rc));
            cells.push(format!("{:.3}", track.metrics.is));
        }
        cells.push(format!("{:.2}", row.overall.ds));
        cells.push(format!("{:.2}", row.overall.rc));
        cells.push(format!("{:.3}", row.overall.is));
        rows.push(cells);
    }
    render_grid(header, rows)
}

/// Mean infraction counts per route, with percent change against the first
/// row appended for every later row, e.g. "5.11 (-13%)".
pub fn render_infractions_table(report: &BenchmarkReport) -> String {
    let header = vec![
        "Method".to_string(),
        "Red light".to_string(),
        "Stop sign".to_string(),
        "Speeding".to_string(),
        "Route dev.".to_string(),
        "Timeout".to_string(),
    ];
    let base = report.rows.first().map(|r| r.overall_infractions);
    let mut rows = Vec::new();
    for (i, row) in report.rows.iter().enumerate() {
        let inf = row.overall_infractions;
        let cell = |value: f64, baseline: f64| {
            if i == 0 {
                format!("{value:.2}")
            } else {
                format!("{value:.2} ({})", format_percent(percent_change(baseline, value)))
            }
        };
        let base = base.expect("rows is non-empty here");
        rows.push(vec![
            row.label.clone(),
            cell(inf.red_light, base.red_light),
            cell(inf.stop_sign, base.stop_sign),
            cell(inf.speeding, base.speeding),
            cell(inf.route_deviation, base.route_deviation),
            cell(inf.timeout, base.timeout),
        ]);
    }
    render_grid(header, rows)
}

/// Both tables, with headings.
pub fn render(report: &BenchmarkReport) -> String {
    format!(
        "Driving scores (mean over {} route(s) x {} repetition(s), seed {})\n\n{}\n\
         Infractions per route (mean)\n\n{}",
        report.manifest.routes_per_track,
        report.manifest.repetitions,
        report.manifest.master_seed,
        render_results_table(report),
        render_infractions_table(report),
    )
}
