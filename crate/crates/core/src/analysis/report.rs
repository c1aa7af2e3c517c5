//! Text renderings of the reports: line-delimited JSON for machines and
//! aligned tables for people.

use serde_json::json;

use super::{format_pool, DistanceReport, OverlapReport};
use crate::metrics::format_fixed;

fn lines(values: impl IntoIterator<Item = serde_json::Value>) -> String {
    values.into_iter().map(|v| v.to_string() + "\n").collect()
}

fn spec_json(spec: &super::SampleSpec, pool: &super::Pool, k: usize) -> serde_json::Value {
    json!({
        "seed": spec.seed,
        "n": spec.n,
        "pair": spec.pair.to_string(),
        "agency": spec.agency.as_str(),
        "pool": format_pool(pool),
        "k": k,
    })
}

fn render_table(header: &[&str], rows: &[Vec<String>], footer: &str) -> String {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let width = |cell: &String| cell.chars().count();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| width(&r[c]))
                .chain([width(&header[c])])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let render_row = |cells: &[String]| {
        let mut line = String::new();
        for (c, cell) in cells.iter().enumerate() {
            let pad = " ".repeat(widths[c] - width(cell));
            if c == 0 {
                line.push_str(cell);
                line.push_str(&pad);
            } else {
                line.push_str("  ");
                line.push_str(&pad);
                line.push_str(cell);
            }
        }
        line.trim_end().to_string() + "\n"
    };
    let rule = "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)) + "\n";

    let mut text = render_row(&header);
    text.push_str(&rule);
    for r in rows {
        text.push_str(&render_row(r));
    }
    text.push_str(&rule);
    text.push_str(footer);
    text.push('\n');
    text
}

impl DistanceReport {
    /// One `config` line, three `row` lines, then one `sample` line per project.
    pub fn to_jsonl(&self) -> String {
        let config = json!({"kind": "config", "config": spec_json(&self.spec, &self.pool, self.k)});
        let rows = self.rows.iter().map(|r| {
            json!({
                "kind": "row",
                "label": r.label,
                "mean": r.stats.mean,
                "sd": r.stats.sd,
                "var": r.stats.var,
                "n": r.stats.n,
            })
        });
        let samples = self.samples.iter().map(|m| {
            json!({
                "kind": "sample",
                "id": m.id,
                "pair_distance": m.pair_distance,
                "left_baseline": m.left_baseline,
                "right_baseline": m.right_baseline,
            })
        });
        lines(std::iter::once(config).chain(rows).chain(samples))
    }

    /// Table with mean, SD and variance to two decimals.
    pub fn to_table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.label.clone(),
                    format_fixed(r.stats.mean, 2),
                    format_fixed(r.stats.sd, 2),
                    format_fixed(r.stats.var, 2),
                ]
            })
            .collect();
        let footer = format!(
            "(n={}, random sampling, seed {}; baselines average the {} nearest native-English projects from {})",
            self.samples.len(),
            self.spec.seed,
            self.k,
            format_pool(&self.pool)
        );
        render_table(
            &["Item", "Distance (Avg.)", "SD (s)", "Var (s^2)"],
            &rows,
            &footer,
        )
    }
}

impl OverlapReport {
    /// One `config` line, one `average` line, then one `sample` line per project.
    pub fn to_jsonl(&self) -> String {
        let config = json!({"kind": "config", "config": spec_json(&self.spec, &self.pool, self.k)});
        let average = json!({"kind": "average", "k": self.k, "average": self.average, "n": self.per_id.len()});
        let samples = self
            .per_id
            .iter()
            .map(|(id, overlap)| json!({"kind": "sample", "id": id, "overlap": overlap}));
        lines([config, average].into_iter().chain(samples))
    }

    /// Table with the average overlap to one decimal.
    pub fn to_table(&self) -> String {
        let label = format!(
            "Between {} and {}",
            self.spec.pair.left.label(),
            self.spec.pair.right.label()
        );
        let header = format!("Average overlap (k={})", self.k);
        let footer = format!(
            "(n={}, random sampling, seed {}; neighbors from {})",
            self.per_id.len(),
            self.spec.seed,
            format_pool(&self.pool)
        );
        render_table(
            &["Item", &header],
            &[vec![label, format_fixed(self.average, 1)]],
            &footer,
        )
    }
}
