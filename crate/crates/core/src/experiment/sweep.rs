use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::ExperimentConfig;
use super::runner::{run_seed, write_record, RunRecord};
use crate::error::{Error, Result};
use crate::par;

/// Trapezoid area under `(x, y)`.
pub fn trapezoid_auc(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub queries: u64,
    pub jb: (f64, f64),
    pub jf: (f64, f64),
    pub jm: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
}

impl SweepCell {
    fn ok_records(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| r.error.is_none())
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    /// Per-point mean and standard error over successful seeds.
    pub fn curve(&self) -> Vec<CurvePoint> {
        let ok: Vec<&RunRecord> = self.ok_records().collect();
        let Some(first) = ok.first() else {
            return Vec::new();
        };
        (0..first.points.len())
            .map(|i| {
                let col = |f: fn(&super::runner::EvalPoint) -> f64| -> (f64, f64) {
                    mean_se(&ok.iter().filter_map(|r| r.points.get(i)).map(f).collect::<Vec<_>>())
                };
                CurvePoint {
                    queries: first.points[i].queries,
                    jb: col(|p| p.jb),
                    jf: col(|p| p.jf),
                    jm: col(|p| p.jm),
                }
            })
            .collect()
    }

    /// Mean and standard error of the per-seed J^M area under the curve.
    pub fn auc_jm(&self) -> (f64, f64) {
        let aucs: Vec<f64> = self
            .ok_records()
            .map(|r| {
                let x: Vec<f64> = r.points.iter().map(|p| p.queries as f64).collect();
                let y: Vec<f64> = r.points.iter().map(|p| p.jm).collect();
                trapezoid_auc(&x, &y)
            })
            .collect();
        mean_se(&aucs)
    }
}

/// Run every config for all of its seeds.
pub fn sweep(configs: &[ExperimentConfig]) -> Result<Vec<SweepCell>> {
    if configs.is_empty() {
        return Err(Error::invalid("sweep has no configs"));
    }
    for c in configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let mode = configs[0].execution;
    let mut records = par::map_indexed(mode, jobs.len(), |j| run_seed(&configs[jobs[j].0], jobs[j].1)).into_iter();
    Ok(configs
        .iter()
        .map(|c| SweepCell {
            config: c.clone(),
            records: records.by_ref().take(c.seeds.len()).collect(),
        })
        .collect())
}

pub fn cell_dir_name(index: usize, cfg: &ExperimentConfig) -> String {
    let name: String = cfg
        .display_name()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{index:02}_{name}")
}

pub fn summary_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("name,config_hash,seeds,failures,auc_jm_mean,auc_jm_se,final_jb_mean,final_jf_mean,final_jm_mean\n");
    for (i, c) in cells.iter().enumerate() {
        let (auc, auc_se) = c.auc_jm();
        let last = c.curve().last().cloned();
        let f = |v: Option<(f64, f64)>| v.map_or(f64::NAN, |x| x.0);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            cell_dir_name(i, &c.config),
            c.config.hash(),
            c.records.len(),
            c.failures(),
            auc,
            auc_se,
            f(last.as_ref().map(|p| p.jb)),
            f(last.as_ref().map(|p| p.jf)),
            f(last.as_ref().map(|p| p.jm)),
        );
    }
    out
}

pub fn curve_csv(cell: &SweepCell) -> String {
    let mut out = String::from("queries,jb_mean,jb_se,jf_mean,jf_se,jm_mean,jm_se\n");
    for p in cell.curve() {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", p.queries, p.jb.0, p.jb.1, p.jf.0, p.jf.1, p.jm.0, p.jm.1);
    }
    out
}

/// Write per-run files, one curve per config and `summary.csv`.
pub fn write_sweep(dir: &Path, cells: &[SweepCell]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, c) in cells.iter().enumerate() {
        let sub = dir.join(cell_dir_name(i, &c.config));
        for r in &c.records {
            write_record(&sub, &c.config, r)?;
        }
        fs::write(sub.join("curve.csv"), curve_csv(c))?;
    }
    fs::write(dir.join("summary.csv"), summary_csv(cells))?;
    Ok(())
}
