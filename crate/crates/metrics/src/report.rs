//! Result tables: deterministic row ordering, aligned text rendering and a
//! machine-readable JSON document.

use crate::rates::{format_p_collision_millis, mlr, p_collision};
use serde::{Deserialize, Serialize};

/// One coordination result row (aggregated over seeds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordRow {
    pub case_label: String,
    /// "static" for the bernoulli model, otherwise the channel profile name.
    pub method: String,
    pub plr: f64,
    pub delay_ms: f64,
    pub cs_total: u64,
    pub collisions: u64,
}

impl CoordRow {
    pub fn p_collision(&self) -> f64 {
        p_collision(self.collisions, self.cs_total).unwrap_or(0.0)
    }
}

/// One teleoperation result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleopRow {
    pub case_label: String,
    pub method: String,
    pub n_s: u64,
    pub n_a: u64,
    pub dropout_episodes: u64,
}

impl TeleopRow {
    pub fn mlr(&self) -> f64 {
        mlr(self.n_s, self.n_a).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportRow {
    Coord(CoordRow),
    Teleop(TeleopRow),
}

// Profiles render in experiment order, ahead of anything user-defined.
fn method_rank(method: &str) -> (usize, String) {
    let order = ["static", "ideal", "ethernet-lab", "wifi6-short", "wifi6-long"];
    match order.iter().position(|m| *m == method) {
        Some(i) => (i, String::new()),
        None => (order.len(), method.to_string()),
    }
}

fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        let key = |r: &ReportRow| match r {
            ReportRow::Coord(c) => {
                (0u8, c.case_label.clone(), method_rank(&c.method), (c.plr, c.delay_ms))
            }
            ReportRow::Teleop(t) => {
                (1u8, t.case_label.clone(), method_rank(&t.method), (0.0, 0.0))
            }
        };
        key(a).partial_cmp(&key(b)).unwrap()
    });
}

fn render_table(header: &[&str], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in body {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: &[String], widths: &[usize]| -> String {
        let parts: Vec<String> =
            cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("{}\n", parts.join("  ").trim_end())
    };
    let head: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    out.push_str(&render_row(&head, &widths));
    out.push_str(&format!("{}\n", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))));
    for row in body {
        out.push_str(&render_row(row, &widths));
    }
    out
}

/// Render rows as an aligned text table (one section per case kind) plus the
/// JSON document of the sorted rows. Deterministic: same rows, same bytes.
pub fn render_report(rows: &[ReportRow]) -> (String, String) {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);

    let coord: Vec<&CoordRow> = rows
        .iter()
        .filter_map(|r| match r {
            ReportRow::Coord(c) => Some(c),
            _ => None,
        })
        .collect();
    let teleop: Vec<&TeleopRow> = rows
        .iter()
        .filter_map(|r| match r {
            ReportRow::Teleop(t) => Some(t),
            _ => None,
        })
        .collect();

    let mut text = String::new();
    if !coord.is_empty() || teleop.is_empty() {
        let body: Vec<Vec<String>> = coord
            .iter()
            .map(|c| {
                vec![
                    c.case_label.clone(),
                    c.method.clone(),
                    format!("{}", c.plr),
                    format!("{}", c.delay_ms),
                    format!("{}", c.cs_total),
                    format!("{}", c.collisions),
                    format_p_collision_millis(c.p_collision()),
                ]
            })
            .collect();
        text.push_str("Multi-robot coordination\n");
        text.push_str(&render_table(
            &["case", "method", "PLR", "delay_ms", "cs_total", "collisions", "P_collision(x1e-3)"],
            &body,
        ));
    }
    if !teleop.is_empty() {
        if !text.is_empty() {
            text.push('\n');
        }
        let body: Vec<Vec<String>> = teleop
            .iter()
            .map(|t| {
                vec![
                    t.case_label.clone(),
                    t.method.clone(),
                    format!("{}", t.n_s),
                    format!("{}", t.n_a),
                    format!("{:.6}", t.mlr()),
                    format!("{}", t.dropout_episodes),
                ]
            })
            .collect();
        text.push_str("Teleoperation\n");
        text.push_str(&render_table(&["case", "method", "N_s", "N_a", "MLR", "dropouts"], &body));
    }

    let json = serde_json::to_string_pretty(&rows).expect("report rows serialize");
    (text, json)
}
