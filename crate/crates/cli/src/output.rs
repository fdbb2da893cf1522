//! CSV traces, JSON summaries and the comparison table.

use std::io::Write;
use std::path::{Path, PathBuf};

use accel::{Tolerance, Trace};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Resolved;
use crate::methods::{Bound, Quantity};

pub const TRACE_HEADER: [&str; 9] =
    ["k", "f_gap", "grad_norm", "dist_opt", "potential", "grad_calls", "prox_calls", "inner_iters", "wall_ns"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(trace: &Trace, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        out.write_record([
            r.k.to_string(),
            opt(r.f_gap),
            r.grad_norm.to_string(),
            opt(r.dist_opt),
            opt(r.potential),
            r.grad_calls.to_string(),
            r.prox_calls.to_string(),
            r.inner_iters.to_string(),
            r.wall_ns.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `trace.csv` → `trace.json`; other names get `.json` appended.
pub fn sidecar_path(out: &Path) -> PathBuf {
    match out.extension() {
        Some(e) if e == "csv" => out.with_extension("json"),
        _ => {
            let mut s = out.as_os_str().to_owned();
            s.push(".json");
            PathBuf::from(s)
        }
    }
}

#[derive(Serialize)]
struct BoundSummary {
    value: f64,
    quantity: Quantity,
    observed: Option<f64>,
}

/// Final value of the bounded quantity, if the trace reports it.
pub fn observed(trace: &Trace, b: &Bound) -> Option<f64> {
    let r = trace.records.last()?;
    match b.quantity {
        Quantity::Gap => r.f_gap,
        Quantity::Dist => r.dist_opt,
    }
}

pub fn bound_satisfied(trace: &Trace, bound: Option<&Bound>, tol: Tolerance) -> Option<bool> {
    let b = bound?;
    let obs = observed(trace, b)?;
    Some(tol.holds(b.value - obs, b.value.abs() + obs.abs()))
}

pub fn summary(
    cfg: &Resolved,
    trace: &Trace,
    bound: Option<&Bound>,
    extra: &[(String, f64)],
    tol: Tolerance,
    status: &str,
) -> Value {
    let last = trace.records.last();
    let meta: Map<String, Value> = trace.meta.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let extra: Map<String, Value> = extra.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "config": cfg,
        "status": status,
        "method": trace.method.name(),
        "rows": trace.records.len(),
        "final_gap": last.and_then(|r| r.f_gap),
        "final_grad_norm": last.map(|r| r.grad_norm),
        "final_dist_opt": last.and_then(|r| r.dist_opt),
        "grad_calls": last.map_or(0, |r| r.grad_calls),
        "prox_calls": last.map_or(0, |r| r.prox_calls),
        "inner_iters": last.map_or(0, |r| r.inner_iters),
        "bound": bound.map(|b| BoundSummary { value: b.value, quantity: b.quantity, observed: observed(trace, b) }),
        "bound_satisfied": bound_satisfied(trace, bound, tol),
        "tolerance": { "atol": tol.atol, "rtol": tol.rtol },
        "counters": extra,
        "meta": meta,
    })
}

pub fn write_run(path: &Path, trace: &Trace, summary: &Value) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path)?;
    write_trace_csv(trace, std::io::BufWriter::new(file)).map_err(std::io::Error::other)?;
    let text = serde_json::to_string_pretty(summary).map_err(std::io::Error::other)?;
    std::fs::write(sidecar_path(path), text + "\n")
}

/// Gap-versus-gradient-calls table: one row per distinct call count seen in
/// any trace, each column holding the best gap reached by that budget.
pub struct CompareTable {
    pub names: Vec<String>,
    pub calls: Vec<u64>,
    pub cols: Vec<Vec<Option<f64>>>,
}

/// Column labels with `#2`, `#3`… appended to repeated names.
pub fn unique_names(names: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(names.len());
    for n in names {
        let seen = names.iter().take(out.len()).filter(|m| *m == n).count();
        out.push(if seen == 0 { n.clone() } else { format!("{n}#{}", seen + 1) });
    }
    out
}

impl CompareTable {
    pub fn build(names: Vec<String>, traces: &[&Trace]) -> Self {
        let mut calls: Vec<u64> = traces.iter().flat_map(|t| t.records.iter().map(|r| r.grad_calls)).collect();
        calls.sort_unstable();
        calls.dedup();
        let cols = traces
            .iter()
            .map(|t| {
                calls
                    .iter()
                    .map(|&c| {
                        t.records.iter().filter(|r| r.grad_calls <= c).filter_map(|r| r.f_gap).reduce(f64::min)
                    })
                    .collect()
            })
            .collect();
        CompareTable { names: unique_names(&names), calls, cols }
    }

    /// Best gap of column `j` within `calls` gradient evaluations.
    pub fn at(&self, j: usize, calls: u64) -> Option<f64> {
        let i = self.calls.partition_point(|&c| c <= calls);
        if i == 0 {
            None
        } else {
            self.cols[j][i - 1]
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["grad_calls".to_string()];
        header.extend(self.names.iter().cloned());
        out.write_record(&header)?;
        for (i, c) in self.calls.iter().enumerate() {
            let mut row = vec![c.to_string()];
            row.extend(self.cols.iter().map(|col| opt(col[i])));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Fixed-width rendering, thinned to at most `max_rows` rows (the last row
    /// is always kept).
    pub fn render(&self, max_rows: usize) -> String {
        let width = self.names.iter().map(|n| n.len()).max().unwrap_or(0).max(12);
        let mut s = format!("{:>10}", "grad_calls");
        for n in &self.names {
            s += &format!("  {n:>width$}");
        }
        s.push('\n');
        let stride = self.calls.len().div_ceil(max_rows.max(1)).max(1);
        for i in 0..self.calls.len() {
            if i % stride != 0 && i + 1 != self.calls.len() {
                continue;
            }
            s += &format!("{:>10}", self.calls[i]);
            for col in &self.cols {
                let cell = col[i].map(|g| format!("{g:.6e}")).unwrap_or_else(|| "-".into());
                s += &format!("  {cell:>width$}");
            }
            s.push('\n');
        }
        s
    }
}
