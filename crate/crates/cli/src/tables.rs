//! Parameter and operation tables in text, JSON and TSV form.

use std::fmt::Write;

use serde_json::json;
use wavenet_core::model::{count_ops, count_parameters, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Tsv,
}

/// `1234567` -> `1,234,567`.
pub fn thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::with_capacity(s.len() + s.len() / 3);
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn text_table(header: [&str; 4], rows: &[[String; 4]]) -> String {
    let mut widths = header.map(str::len);
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: [&str; 4]| {
        let _ = writeln!(
            out,
            "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}",
            cells[0],
            cells[1],
            cells[2],
            cells[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3]
        );
    };
    line(&mut out, header);
    let rule: String = "-".repeat(widths.iter().sum::<usize>() + 6);
    let _ = writeln!(out, "{rule}");
    for (i, r) in rows.iter().enumerate() {
        if i + 1 == rows.len() {
            let _ = writeln!(out, "{rule}");
        }
        line(&mut out, [&r[0], &r[1], &r[2], &r[3]]);
    }
    out
}

fn tsv(header: [&str; 4], rows: &[[String; 4]]) -> String {
    let mut out = header.join("\t") + "\n";
    for r in rows {
        out += &r.join("\t");
        out.push('\n');
    }
    out
}

pub fn render_params(config: &ModelConfig, format: OutputFormat) -> String {
    let counts = count_parameters(config);
    match format {
        OutputFormat::Json => {
            let rows: Vec<_> = counts
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "layer": r.kind.label(),
                        "type": r.kind.op_type(),
                        "instances": r.instances,
                        "params_per_layer": r.params_per_layer,
                        "params_total": r.params_total,
                    })
                })
                .collect();
            let v = json!({ "rows": rows, "total_params": counts.total_params });
            serde_json::to_string_pretty(&v).expect("plain values") + "\n"
        }
        OutputFormat::Table | OutputFormat::Tsv => {
            let table = format == OutputFormat::Table;
            let num = |n: usize| if table { thousands(n) } else { n.to_string() };
            let mut rows: Vec<[String; 4]> = counts
                .rows
                .iter()
                .map(|r| {
                    [
                        r.kind.label().to_string(),
                        r.kind.op_type().to_string(),
                        num(r.params_per_layer),
                        num(r.params_total),
                    ]
                })
                .collect();
            rows.push(["Total".into(), String::new(), String::new(), num(counts.total_params)]);
            let header = ["Layer", "Type", "Params/Layer", "Params Total"];
            if table {
                text_table(header, &rows)
            } else {
                tsv(header, &rows)
            }
        }
    }
}

pub fn render_ops(config: &ModelConfig, format: OutputFormat) -> String {
    let counts = count_ops(config);
    match format {
        OutputFormat::Json => {
            let rows: Vec<_> = counts
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "layer": r.kind.label(),
                        "type": r.kind.op_type(),
                        "instances": r.instances,
                        "gops_per_layer": r.gops_per_layer,
                        "gops_total": r.gops_total,
                    })
                })
                .collect();
            let v = json!({ "rows": rows, "total_gops": counts.total_gops });
            serde_json::to_string_pretty(&v).expect("plain values") + "\n"
        }
        OutputFormat::Table | OutputFormat::Tsv => {
            let table = format == OutputFormat::Table;
            let num = |g: Option<f64>| match (g, table) {
                (None, _) => "-".to_string(),
                (Some(g), true) => format!("{g:.2}"),
                (Some(g), false) => g.to_string(),
            };
            let mut rows: Vec<[String; 4]> = counts
                .rows
                .iter()
                .map(|r| {
                    [
                        r.kind.label().to_string(),
                        r.kind.op_type().to_string(),
                        num(r.gops_per_layer),
                        num(r.gops_total),
                    ]
                })
                .collect();
            rows.push(["Total".into(), String::new(), String::new(), num(Some(counts.total_gops))]);
            let header = ["Layer", "Type", "GOP/s/Layer", "GOP/s Total"];
            if table {
                text_table(header, &rows)
            } else {
                tsv(header, &rows)
            }
        }
    }
}
