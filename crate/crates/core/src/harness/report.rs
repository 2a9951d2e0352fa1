//! CSV reports and their metadata sidecars.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learners::UpdateRule;

use super::config::RunConfig;
use super::run::RegretReport;
use super::sweep::SweepCell;

/// `git describe`-style version of the build.
pub const VERSION: &str = env!("MTOMD_VERSION");

pub const REPORT_HEADER: [&str; 4] = ["t", "cumulative_loss", "regret", "bound"];

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'a str,
    seed: u64,
    config: &'a RunConfig,
    horizon: usize,
    final_regret: f64,
    stated_bound: Option<f64>,
    reference_regret: Option<f64>,
    eta: f64,
    b: f64,
    lipschitz: f64,
    sum_sq_grad: f64,
    max_dual_grad: f64,
    rule: UpdateRule,
    clamped_rounds: usize,
    task_losses: &'a [f64],
    comparator_values: &'a [f64],
    wall_clock_secs: f64,
}

/// Floats with 17 significant digits, so they parse back exactly.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// `path` with its extension replaced by `meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Writes the per-round CSV and the metadata sidecar; returns the sidecar path.
pub fn emit_report(report: &RegretReport, path: &Path) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(REPORT_HEADER).map_err(csv_io)?;
    for t in 0..report.horizon() {
        let bound = report.bound.as_ref().map(|b| fmt(b[t])).unwrap_or_default();
        w.write_record([
            (t + 1).to_string(),
            fmt(report.cumulative_loss[t]),
            fmt(report.regret[t]),
            bound,
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;

    let meta = Metadata {
        version: VERSION,
        seed: report.config.seed,
        config: &report.config,
        horizon: report.horizon(),
        final_regret: report.final_regret,
        stated_bound: report.stated_bound,
        reference_regret: report.reference_regret,
        eta: report.eta,
        b: report.b,
        lipschitz: report.lipschitz,
        sum_sq_grad: report.sum_sq_grad,
        max_dual_grad: report.max_dual_grad,
        rule: report.rule,
        clamped_rounds: report.clamped_rounds,
        task_losses: &report.task_losses,
        comparator_values: &report.comparator_values,
        wall_clock_secs: report.wall_clock_secs,
    };
    let side = sidecar_path(path);
    let mut f = BufWriter::new(File::create(&side)?);
    serde_json::to_writer_pretty(&mut f, &meta).map_err(|e| Error::Io(e.into()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(side)
}

/// One row per sweep cell; unset grid axes are left empty.
pub fn emit_sweep(cells: &[SweepCell], path: &Path) -> Result<()> {
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record([
        "n_tasks",
        "sigma",
        "b",
        "eta",
        "repetitions",
        "mean_regret",
        "std_regret",
    ])
    .map_err(csv_io)?;
    for c in cells {
        w.write_record([
            opt(c.n_tasks),
            opt(c.sigma),
            opt(c.b),
            opt(c.eta),
            c.finals.len().to_string(),
            fmt(c.mean_regret),
            fmt(c.std_regret),
        ])
        .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// `(t, cumulative_loss, regret, bound)`
pub type ReportRow = (usize, f64, f64, Option<f64>);

/// Parses a report CSV back into rows.
pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_io)?;
    let bad = |line: usize, message: String| Error::Data {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_io)?;
        let line = k + 2;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| bad(line, format!("bad number `{}`", &rec[i])))
        };
        let t = rec[0]
            .parse()
            .map_err(|_| bad(line, format!("bad round `{}`", &rec[0])))?;
        let bound = if rec[3].is_empty() {
            None
        } else {
            Some(num(3)?)
        };
        rows.push((t, num(1)?, num(2)?, bound));
    }
    Ok(rows)
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}
