//! Log-log plots of error against circuit size.
//!
//! Output is a whitespace-separated data file plus a gnuplot script that reads
//! it, so plots render wherever gnuplot is installed and the numbers stay
//! inspectable without it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::experiment::ExperimentRecord;
use crate::{Error, Result};

/// Mean error and bound at one size for one `(mode, model)` series.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotPoint {
    pub n: usize,
    pub mean_l2: f64,
    pub theory_bound: f64,
    pub count: usize,
}

/// Groups records by `mode/model`, averaging over seeds at each `n`.
pub fn series(records: &[ExperimentRecord]) -> BTreeMap<String, Vec<PlotPoint>> {
    let mut acc: BTreeMap<String, BTreeMap<usize, (f64, f64, usize)>> = BTreeMap::new();
    for r in records {
        let e = acc
            .entry(format!("{}/{}", r.mode, r.model))
            .or_default()
            .entry(r.n)
            .or_insert((0.0, 0.0, 0));
        e.0 += r.l2_error;
        e.1 += r.theory_bound;
        e.2 += 1;
    }
    acc.into_iter()
        .map(|(k, by_n)| {
            let pts = by_n
                .into_iter()
                .map(|(n, (l2, b, c))| PlotPoint {
                    n,
                    mean_l2: l2 / c as f64,
                    theory_bound: b / c as f64,
                    count: c,
                })
                .collect();
            (k, pts)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotFiles {
    pub data: PathBuf,
    pub script: PathBuf,
}

/// Writes `<stem>.dat` and `<stem>.gp` into `out_dir`.
pub fn write_plot(records: &[ExperimentRecord], out_dir: &Path, stem: &str) -> Result<PlotFiles> {
    if records.is_empty() {
        return Err(Error::Argument("no records to plot".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let all = series(records);
    let mut dat = String::new();
    for (name, pts) in &all {
        writeln!(dat, "# {name}").unwrap();
        writeln!(dat, "# n mean_l2 theory_bound count").unwrap();
        for p in pts {
            writeln!(dat, "{} {} {} {}", p.n, p.mean_l2, p.theory_bound, p.count).unwrap();
        }
        dat.push_str("\n\n");
    }
    let data = out_dir.join(format!("{stem}.dat"));
    let script = out_dir.join(format!("{stem}.gp"));
    std::fs::write(&data, dat).map_err(|e| Error::io(&data, e))?;

    let dat_name = format!("{stem}.dat");
    let mut gp = String::new();
    writeln!(gp, "set terminal pngcairo size 900,600").unwrap();
    writeln!(gp, "set output '{stem}.png'").unwrap();
    writeln!(gp, "set logscale xy").unwrap();
    writeln!(gp, "set xlabel 'n'").unwrap();
    writeln!(gp, "set ylabel 'L2 error'").unwrap();
    writeln!(gp, "set key outside right").unwrap();
    let mut parts = Vec::new();
    for (i, name) in all.keys().enumerate() {
        parts.push(format!("'{dat_name}' index {i} using 1:2 with linespoints lw 2 title '{name}'"));
        parts.push(format!("'{dat_name}' index {i} using 1:3 with lines dt 2 title '{name} bound'"));
    }
    writeln!(gp, "plot {}", parts.join(", \\\n     ")).unwrap();
    std::fs::write(&script, gp).map_err(|e| Error::io(&script, e))?;
    Ok(PlotFiles { data, script })
}
