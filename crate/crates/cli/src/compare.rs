use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Value};

use longi_readout::ReadoutError;

use crate::artifacts::{ArtifactDir, FileEntry};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::scenario::{self, full_window_exponent, Series, Stage};

/// Relative tolerance for two time grids to count as shared.
const GRID_TOL: f64 = 1e-12;

/// Column labels, made unique by suffixing `#k` on repeats.
fn unique_labels(configs: &[ExperimentConfig]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    configs
        .iter()
        .map(|c| {
            let base = c.label();
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 { base } else { format!("{base}#{n}") }
        })
        .collect()
}

fn aligned(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= GRID_TOL * x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
}

fn check_alignment(labels: &[String], series: &[Series]) -> Result<(), CliError> {
    let reference = &series[0];
    for (label, s) in labels.iter().zip(series).skip(1) {
        if !aligned(&reference.times, &s.times) {
            return Err(ReadoutError::Alignment(format!(
                "time grid of `{label}` ({} points to {:e}) differs from `{}` ({} points to {:e})",
                s.times.len(),
                s.times.last().copied().unwrap_or(0.0),
                labels[0],
                reference.times.len(),
                reference.times.last().copied().unwrap_or(0.0),
            ))
            .into());
        }
    }
    Ok(())
}

fn wide_csv<W: Write>(mut w: W, key: &str, keys: &[f64], labels: &[String], cols: &[Vec<f64>], ratios: bool) -> std::io::Result<()> {
    write!(w, "{key}")?;
    for l in labels {
        write!(w, ",{l}")?;
    }
    if ratios {
        for l in &labels[1..] {
            write!(w, ",{l}/{}", labels[0])?;
        }
    }
    writeln!(w)?;
    for (i, k) in keys.iter().enumerate() {
        write!(w, "{k:e}")?;
        for c in cols {
            write!(w, ",{:e}", c[i])?;
        }
        if ratios {
            for c in &cols[1..] {
                write!(w, ",{:e}", c[i] / cols[0][i])?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Runs every config in its own subdirectory of `root`, then writes the
/// wide tables and summary. Returns every file written.
pub fn compare(configs: &[ExperimentConfig], root: &std::path::Path) -> Result<Vec<FileEntry>, CliError> {
    if configs.len() < 2 {
        return Err(CliError::Usage("compare needs at least two configs".into()));
    }
    let labels = unique_labels(configs);
    let runs: Vec<_> = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| -> Result<_, CliError> {
            let mut dir = ArtifactDir::create(root, &format!("{i:02}-{}", cfg.scenario.slug()))?;
            let out = scenario::run(cfg, &mut dir, Stage::Full)?;
            Ok((out, dir.into_entries()))
        })
        .collect::<Result<_, _>>()?;

    let mut entries = Vec::new();
    let mut series = Vec::new();
    for ((out, files), label) in runs.into_iter().zip(&labels) {
        entries.extend(files);
        series.push(out.series.ok_or_else(|| {
            CliError::Usage(format!("scenario of `{label}` produces no time series to compare"))
        })?);
    }
    check_alignment(&labels, &series)?;

    let mut top = ArtifactDir::create(root, "")?;
    let seps: Vec<Vec<f64>> = series.iter().map(|s| s.separation.clone()).collect();
    top.write_csv("separation.csv", |w| wide_csv(w, "t", &series[0].times, &labels, &seps, false))?;

    let curves: Option<Vec<_>> = series.iter().map(|s| s.snr.as_ref()).collect();
    if let Some(curves) = &curves {
        let cols: Vec<Vec<f64>> = curves.iter().map(|c| c.snr.clone()).collect();
        top.write_csv("snr.csv", |w| wide_csv(w, "tau", &curves[0].taus, &labels, &cols, true))?;
    }

    let last = |v: &[f64]| v[v.len() - 1];
    let d_ref = last(&series[0].separation);
    let snr_ref = curves.as_ref().map(|c| last(&c[0].snr));
    let columns: Vec<Value> = labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let d = last(&series[i].separation);
            let mut col = json!({
                "label": label,
                "scenario": configs[i].scenario,
                "separation_at_t_f": d,
                "separation_ratio_at_t_f": d / d_ref,
            });
            if let (Some(c), Some(r)) = (&curves, snr_ref) {
                let s = last(&c[i].snr);
                col["snr_at_t_f"] = json!(s);
                col["snr_ratio_at_t_f"] = json!(s / r);
                col["fitted_exponent"] = json!(full_window_exponent(c[i]));
            }
            col
        })
        .collect();
    top.write_json(
        "comparison_summary.json",
        &json!({ "reference": labels[0], "grid_points": series[0].times.len(), "columns": columns }),
    )?;
    entries.extend(top.into_entries());
    Ok(entries)
}
