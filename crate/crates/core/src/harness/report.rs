//! Summary tables built from one or more evaluated runs.

use std::io;

use super::evaluate::MetricsTable;
use super::fmt_float;
use crate::mitigation::KernelClass;

/// What the report needs from one run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub train_aem: KernelClass,
    /// Smallest mitigated MMD loss seen during training.
    pub min_mmd: Option<f64>,
    pub metrics: MetricsTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub run: String,
    pub train_aem: KernelClass,
    pub post_aem: KernelClass,
    pub shots: u64,
    pub min_mean_kl: f64,
    /// `None` when the series is empty.
    pub argmin_step: Option<usize>,
    pub stddev_at_min: f64,
    /// Steps whose estimate saw at least one divergent sub-sample.
    pub divergent_steps: usize,
    pub min_mmd: Option<f64>,
}

/// Minimum ⟨KL⟩ pivoted to rows = train AEM (per shot size), columns =
/// post-processing AEM. Several runs with the same training AEM collapse to
/// their best value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub train_aem: KernelClass,
    pub shots: u64,
    pub min_mean_kl: Vec<Option<f64>>,
    pub min_mmd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub post_kinds: Vec<KernelClass>,
    pub grid: Vec<GridRow>,
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn push_unique<T: PartialEq + Copy>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

pub fn summarize(runs: &[RunSummary]) -> Report {
    let mut rows = Vec::new();
    let mut post_kinds = Vec::new();
    let mut shot_sizes = Vec::new();
    for run in runs {
        for r in &run.metrics.rows {
            push_unique(&mut post_kinds, r.post_aem);
            push_unique(&mut shot_sizes, r.shots);
        }
    }
    post_kinds.sort();

    for run in runs {
        for &post in &post_kinds {
            for &shots in &shot_sizes {
                let series: Vec<_> = run.metrics.series(post, shots).collect();
                if series.is_empty() {
                    continue;
                }
                let best = run.metrics.min_mean_kl(post, shots);
                rows.push(ReportRow {
                    run: run.label.clone(),
                    train_aem: run.train_aem,
                    post_aem: post,
                    shots,
                    min_mean_kl: best.map_or(f64::INFINITY, |b| b.mean_kl),
                    argmin_step: best.map(|b| b.step),
                    stddev_at_min: best.map_or(0.0, |b| b.stddev),
                    divergent_steps: series.iter().filter(|r| r.is_divergent()).count(),
                    min_mmd: run.min_mmd,
                });
            }
        }
    }

    let mut train_kinds: Vec<KernelClass> = runs.iter().map(|r| r.train_aem).collect();
    train_kinds.sort();
    train_kinds.dedup();
    let mut grid = Vec::new();
    for &train in &train_kinds {
        let min_mmd = runs
            .iter()
            .filter(|r| r.train_aem == train)
            .fold(None, |acc, r| min_opt(acc, r.min_mmd));
        for &shots in &shot_sizes {
            let cells = post_kinds
                .iter()
                .map(|&post| {
                    rows.iter()
                        .filter(|r| r.train_aem == train && r.post_aem == post && r.shots == shots)
                        .fold(None, |acc, r| min_opt(acc, Some(r.min_mean_kl)))
                })
                .collect();
            grid.push(GridRow {
                train_aem: train,
                shots,
                min_mean_kl: cells,
                min_mmd,
            });
        }
    }
    Report { rows, post_kinds, grid }
}

impl Report {
    pub fn write_rows_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "run",
            "train_aem",
            "post_aem",
            "shots",
            "min_mean_kl",
            "argmin_step",
            "stddev_at_min",
            "divergent_steps",
            "min_mmd",
        ])?;
        for r in &self.rows {
            out.write_record([
                r.run.clone(),
                r.train_aem.to_string(),
                r.post_aem.to_string(),
                r.shots.to_string(),
                fmt_float(r.min_mean_kl),
                r.argmin_step.map(|s| s.to_string()).unwrap_or_default(),
                fmt_float(r.stddev_at_min),
                r.divergent_steps.to_string(),
                opt_float(r.min_mmd),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_grid_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["train_aem".to_string(), "shots".to_string()];
        header.extend(self.post_kinds.iter().map(|k| k.to_string()));
        header.push("min_mmd".into());
        out.write_record(&header)?;
        for g in &self.grid {
            let mut rec = vec![g.train_aem.to_string(), g.shots.to_string()];
            rec.extend(g.min_mean_kl.iter().map(|&x| opt_float(x)));
            rec.push(opt_float(g.min_mmd));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn rows_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_rows_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn grid_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_grid_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Grid cell for (train AEM, post AEM, shots).
    pub fn cell(&self, train: KernelClass, post: KernelClass, shots: u64) -> Option<f64> {
        let col = self.post_kinds.iter().position(|&k| k == post)?;
        self.grid
            .iter()
            .find(|g| g.train_aem == train && g.shots == shots)
            .and_then(|g| g.min_mean_kl[col])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::evaluate::MetricRow;

    fn row(step: usize, post: KernelClass, shots: u64, kl: f64, divergent: usize) -> MetricRow {
        MetricRow {
            step,
            post_aem: post,
            shots,
            mean_kl: kl,
            stddev: 0.01,
            divergent,
            repeats: 10,
            composite_shots: 10240.0,
            mitigated_shots: 10000.0,
        }
    }

    #[test]
    fn minima_and_grid() {
        use KernelClass::*;
        let a = RunSummary {
            label: "a".into(),
            train_aem: Identity,
            min_mmd: Some(0.02),
            metrics: MetricsTable {
                rows: vec![
                    row(0, Identity, 2048, 0.5, 0),
                    row(0, Circ, 2048, f64::INFINITY, 3),
                    row(1, Identity, 2048, 0.3, 0),
                    row(1, Circ, 2048, 0.1, 0),
                ],
            },
        };
        let b = RunSummary {
            label: "b".into(),
            train_aem: Hw,
            min_mmd: Some(0.01),
            metrics: MetricsTable {
                rows: vec![row(0, Identity, 2048, 0.4, 0), row(0, Circ, 2048, 0.2, 0)],
            },
        };
        let rep = summarize(&[a, b]);
        assert_eq!(rep.post_kinds, vec![Identity, Circ]);
        assert_eq!(rep.rows.len(), 4);
        let circ_a = &rep.rows[1];
        assert_eq!(
            (circ_a.min_mean_kl, circ_a.argmin_step, circ_a.divergent_steps),
            (0.1, Some(1), 1)
        );
        assert_eq!(rep.cell(Identity, Circ, 2048), Some(0.1));
        assert_eq!(rep.cell(Hw, Identity, 2048), Some(0.4));
        assert_eq!(rep.cell(Hw, Hw, 2048), None);
        let grid = rep.grid_csv();
        assert_eq!(grid.lines().next().unwrap(), "train_aem,shots,identity,circ,min_mmd");
        assert_eq!(grid.lines().count(), 3);
        assert_eq!(rep.rows_csv(), rep.rows_csv());
    }

    #[test]
    fn all_divergent_series_reports_inf() {
        let run = RunSummary {
            label: "x".into(),
            train_aem: KernelClass::Identity,
            min_mmd: None,
            metrics: MetricsTable {
                rows: vec![row(0, KernelClass::Hw, 512, f64::INFINITY, 10)],
            },
        };
        let rep = summarize(&[run]);
        assert!(rep.rows[0].min_mean_kl.is_infinite());
        assert!(rep.rows_csv().contains(",inf,"));
    }
}
