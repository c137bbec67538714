//! Artifact writers: CSV tables, JSON reports and plot scripts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const VERSION: &str = env!("PRANDTL_LAB_VERSION");

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Header row plus rows of numbers, each written with 17 significant
/// digits.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Read a numeric CSV with a header row; returns the header and the rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header = r.headers().map_err(|e| CliError::csv(path, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Common envelope of every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: Option<u64>,
    pub config: &'a BTreeMap<String, String>,
    pub passed: bool,
    pub runtime_seconds: f64,
    pub result: T,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// log-log peak against `T − t`, with a slope −1 guide.
    Rates,
    /// Rescaled snapshots over `cos²(Z/2)`.
    Profile,
    /// `k(y)` on a semilog axis.
    Kernel,
}

impl PlotKind {
    fn stem(self) -> &'static str {
        match self {
            PlotKind::Rates => "rates",
            PlotKind::Profile => "profile",
            PlotKind::Kernel => "kernel",
        }
    }
}

const SCRIPT_HEAD: &str = "\
import csv
import math
import os

import matplotlib
matplotlib.use(\"Agg\")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def columns(name):
    with open(os.path.join(HERE, name)) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


";

const RATES_BODY: &str = "\
pairs = [(T - t, p) for t, p in zip(c[\"t\"], c[\"peak_value\"]) if T - t > 0]
tau = [a for a, _ in pairs]
peak = [b for _, b in pairs]
plt.loglog(tau, peak, label=\"peak value\")
plt.loglog(tau, [peak[-1] * tau[-1] / x for x in tau], \"--\", label=\"slope -1\")
plt.xlabel(\"T - t\")
plt.ylabel(\"max xi\")
plt.legend()
plt.savefig(os.path.join(HERE, \"rates.png\"), dpi=150)
";

const PROFILE_BODY: &str = "\
for idx in sorted(set(c[\"index\"])):
    z = [a for a, i in zip(c[\"Z\"], c[\"index\"]) if i == idx]
    f = [a for a, i in zip(c[\"F\"], c[\"index\"]) if i == idx]
    plt.plot(z, f, lw=0.8, alpha=0.6)
zz = [-math.pi + 2 * math.pi * j / 400 for j in range(401)]
plt.plot(zz, [math.cos(x / 2) ** 2 for x in zz], \"k--\", label=\"cos^2(Z/2)\")
plt.xlabel(\"Z\")
plt.ylabel(\"F\")
plt.legend()
plt.savefig(os.path.join(HERE, \"profile.png\"), dpi=150)
";

const KERNEL_BODY: &str = "\
plt.semilogy(c[\"y\"], c[\"k\"], label=\"k(y)\")
plt.semilogy(c[\"y\"], c[\"k_prim1\"], label=\"first primitive\")
plt.xlabel(\"y\")
plt.legend()
plt.savefig(os.path.join(HERE, \"kernel.png\"), dpi=150)
";

/// Write `plot_<kind>.py` next to the first CSV. The script reads only the
/// given CSVs (by file name, relative to its own directory) and is never
/// run here. `t_blow` is needed by [`PlotKind::Rates`].
pub fn emit_plot_script(csvs: &[&Path], kind: PlotKind, t_blow: Option<f64>) -> Result<PathBuf, CliError> {
    let first = csvs.first().ok_or_else(|| CliError::Invalid("no CSV given to the plot script".into()))?;
    for p in csvs {
        if !p.is_file() {
            return Err(CliError::Invalid(format!("missing CSV {}", p.display())));
        }
    }
    let dir = first.parent().unwrap_or(Path::new("."));
    let name = first.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let load = format!("c = columns({name:?})\n");
    let body = match kind {
        PlotKind::Rates => {
            let t = t_blow.ok_or_else(|| CliError::Invalid("rates plot needs the blow-up time".into()))?;
            format!("T = {t:.16e}\n{load}{RATES_BODY}")
        }
        PlotKind::Profile => format!("{load}{PROFILE_BODY}"),
        PlotKind::Kernel => format!("{load}{KERNEL_BODY}"),
    };
    let path = dir.join(format!("plot_{}.py", kind.stem()));
    fs::write(&path, format!("{SCRIPT_HEAD}{body}")).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
