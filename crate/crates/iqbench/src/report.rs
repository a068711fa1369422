//! Report serialization: machine CSV, aligned text tables, plot data, and
//! the per-fold scores needed to compare runs after the fact.

use std::io::Write;

use crate::experiments::{EvalReport, EvalRow};

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn significance_marker(p: Option<f64>) -> &'static str {
    match p {
        Some(p) if p < 0.01 => "**",
        Some(p) if p < 0.05 => "*",
        _ => "",
    }
}

/// Machine-readable report: one row per configuration.
pub fn write_report_csv<W: Write>(report: &EvalReport, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "config,variant,levels,n,uar,kappa,rho,rel_uar_vs_baseline,p_value,affected_pct"
    )?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            row.name,
            row.variant.as_str(),
            row.levels,
            row.n,
            row.uar,
            row.kappa,
            row.rho,
            fmt_opt(row.rel_uar),
            fmt_opt(row.p_value),
            fmt_opt(row.affected_pct),
        )?;
    }
    Ok(())
}

/// Plot data for window sweeps: one row per window size.
pub fn write_plot_csv<W: Write>(report: &EvalReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "n,uar,kappa,rho,affected_pct")?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.n,
            row.uar,
            row.kappa,
            row.rho,
            fmt_opt(row.affected_pct)
        )?;
    }
    Ok(())
}

/// Per-fold UAR scores plus the fold fingerprint, for later run comparison.
pub fn write_per_fold_csv<W: Write>(report: &EvalReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "config,fold,uar,fold_fingerprint")?;
    for row in &report.rows {
        for (fold, u) in row.per_fold_uar.iter().enumerate() {
            writeln!(w, "{},{},{},{}", row.name, fold, u, row.fold_fingerprint)?;
        }
    }
    Ok(())
}

/// Aligned text table for an ablation report: one line per level
/// combination, orig and ext side by side per metric.
pub fn write_ablation_text<W: Write>(report: &EvalReport, mut w: W) -> std::io::Result<()> {
    let row = |name: &str| report.rows.iter().find(|r| r.name == name);
    writeln!(
        w,
        "{:<16} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "", "UAR/orig", "UAR/ext", "kappa/orig", "kappa/ext", "rho/orig", "rho/ext"
    )?;
    let combos: Vec<&str> = report
        .rows
        .iter()
        .filter_map(|r| r.name.strip_suffix("/orig"))
        .collect();
    for combo in combos {
        let o = row(&format!("{combo}/orig"));
        let e = row(&format!("{combo}/ext"));
        if let (Some(o), Some(e)) = (o, e) {
            writeln!(
                w,
                "{:<16} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
                combo, o.uar, e.uar, o.kappa, e.kappa, o.rho, e.rho
            )?;
        }
    }
    if !report.comparisons.is_empty() {
        writeln!(w)?;
        writeln!(w, "pairwise comparisons (Wilcoxon over per-fold UAR):")?;
        for c in &report.comparisons {
            writeln!(
                w,
                "  {:<28} W={:<6} p={:.5}{}",
                c.label,
                c.result.statistic,
                c.result.p_value,
                significance_marker(Some(c.result.p_value))
            )?;
        }
    }
    Ok(())
}

/// Aligned text table for a window sweep: one line per window size with
/// relative improvement and significance markers against the baseline.
pub fn write_sweep_text<W: Write>(report: &EvalReport, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "{:>6} {:>8} {:>12} {:>8} {:>8} {:>8}",
        "window", "UAR", "rel.UAR", "kappa", "rho", "#dial."
    )?;
    for row in &report.rows {
        let rel = match row.rel_uar {
            Some(r) => format!(
                "{}{:.2}%{}",
                if r >= 0.0 { "+" } else { "" },
                r * 100.0,
                significance_marker(row.p_value)
            ),
            None => "--".to_string(),
        };
        writeln!(
            w,
            "{:>6} {:>8.3} {:>12} {:>8.3} {:>8.3} {:>7.0}%",
            row.n,
            row.uar,
            rel,
            row.kappa,
            row.rho,
            row.affected_pct.unwrap_or(f64::NAN)
        )?;
    }
    Ok(())
}

/// Generic single-row summary, used by plain train-eval runs.
pub fn write_eval_text<W: Write>(row: &EvalRow, mut w: W) -> std::io::Result<()> {
    writeln!(w, "config:   {}", row.name)?;
    writeln!(w, "variant:  {}", row.variant.as_str())?;
    writeln!(w, "levels:   {}", row.levels)?;
    writeln!(w, "window:   {}", row.n)?;
    writeln!(w, "UAR:      {:.4}", row.uar)?;
    writeln!(w, "kappa_w:  {:.4}", row.kappa)?;
    writeln!(w, "rho:      {:.4}", row.rho)?;
    writeln!(
        w,
        "per-fold UAR: [{}]",
        row.per_fold_uar
            .iter()
            .map(|u| format!("{u:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    )?;
    writeln!(w, "confusion matrix (rows = reference 1..5):")?;
    for r in 1u8..=5 {
        let line: Vec<String> = (1u8..=5)
            .map(|h| format!("{:>6}", row.confusion.get(r, h)))
            .collect();
        writeln!(w, "  {}", line.join(" "))?;
    }
    Ok(())
}
