//! Parameter sweeps that mirror the experiment tables, written as CSV.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use anyhow::{bail, Result};
use nusfft::interpolation::{shape_frequencies, shape_probability, ShapeId};
use nusfft::pursuit::{NormMode, PursuitConfig};
use nusfft::rng::substream;
use rand::Rng;

use crate::workload::{run_one, snr_db, RunOutcome, Workload};

/// Which benchmark table a sweep produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    /// Time against signal length.
    Scaling,
    /// Time against number of modes.
    Modes,
    /// Success against availability, with and without interpolation.
    Availability,
    /// Success and error against noise level.
    Noise,
    /// 2D neighbourhood shape frequencies.
    Shapes,
}

impl TableId {
    pub const ALL: [TableId; 5] = [
        TableId::Scaling,
        TableId::Modes,
        TableId::Availability,
        TableId::Noise,
        TableId::Shapes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableId::Scaling => "T1-scaling",
            TableId::Modes => "T3-modes",
            TableId::Availability => "T4-availability",
            TableId::Noise => "T5-noise",
            TableId::Shapes => "T6-shapes",
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match TableId::ALL.into_iter().find(|t| t.name().eq_ignore_ascii_case(s)) {
            Some(t) => Ok(t),
            None => bail!(
                "unknown table `{s}` (expected one of {})",
                TableId::ALL.map(TableId::name).join(", ")
            ),
        }
    }
}

/// A sweep: the cross product of the parameter lists, `runs` seeds each.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub table: TableId,
    pub ns: Vec<u64>,
    pub bs: Vec<usize>,
    pub ps: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub modes: Vec<NormMode>,
    pub runs: usize,
    pub seed: u64,
    pub iteration_cap: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Frequencies restricted to `|ω| ≤ band`.
    pub band: Option<u64>,
    /// Stopping threshold relative to the initial energy; `None` keeps
    /// the pursuit default.
    pub stop_relative: Option<f64>,
    /// Scale the stopping threshold by `1/B`.
    pub stop_per_mode: bool,
    /// Leave out wall-clock columns so the output is reproducible byte for byte.
    pub timing: bool,
    /// Worker threads for independent cells.
    pub jobs: usize,
}

impl ExperimentSpec {
    /// Desk-scale default grid for `table`.
    pub fn preset(table: TableId) -> Self {
        let base = ExperimentSpec {
            table,
            ns: vec![1 << 16],
            bs: vec![2],
            ps: vec![0.7],
            sigmas: vec![0.0],
            modes: vec![NormMode::Greedy],
            runs: 10,
            seed: 0,
            iteration_cap: 200,
            epsilon: 0.1,
            delta: 0.01,
            band: None,
            stop_relative: None,
            stop_per_mode: false,
            timing: true,
            jobs: 1,
        };
        match table {
            TableId::Scaling => ExperimentSpec {
                ns: (10..=18).step_by(2).map(|k| 1 << k).collect(),
                bs: vec![8],
                sigmas: vec![0.5],
                runs: 20,
                ..base
            },
            TableId::Modes => ExperimentSpec {
                bs: vec![2, 4, 8, 16],
                ps: vec![0.6],
                sigmas: vec![0.05],
                stop_per_mode: true,
                ..base
            },
            TableId::Availability => ExperimentSpec {
                ps: vec![0.8, 0.4, 0.3, 0.2, 0.1, 0.01],
                modes: vec![NormMode::Interpolated, NormMode::Greedy],
                band: Some(16),
                ..base
            },
            TableId::Noise => ExperimentSpec {
                ns: vec![1 << 14],
                bs: vec![6],
                ps: vec![0.6],
                sigmas: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5],
                ..base
            },
            TableId::Shapes => ExperimentSpec {
                ps: vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5],
                runs: 100_000,
                ..base
            },
        }
    }

    pub fn pursuit_config(&self, b: usize, mode: NormMode) -> PursuitConfig {
        let mut cfg = PursuitConfig::new(b, self.epsilon, self.delta, mode);
        cfg.iteration_cap = Some(self.iteration_cap);
        let rel = self.stop_relative.unwrap_or(self.epsilon);
        cfg.stop_relative = if self.stop_per_mode { rel / b as f64 } else { rel };
        cfg
    }

    fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &mode in &self.modes {
            for &n in &self.ns {
                for &b in &self.bs {
                    for &p in &self.ps {
                        for &sigma in &self.sigmas {
                            out.push(Cell { n, b, p, sigma, mode });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: u64,
    pub b: usize,
    pub p: f64,
    pub sigma: f64,
    pub mode: NormMode,
}

/// Averages over the runs of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub runs: usize,
    pub successes: usize,
    /// Mean relative error in percent.
    pub relative_error_pct: f64,
    pub time_total_s: f64,
    pub time_wo_sampling_s: f64,
    /// Median of the per-run compute times, less sensitive to stray
    /// scheduling delays than the mean.
    pub median_wo_sampling_s: f64,
    pub samples_touched: f64,
    pub iterations: f64,
}

impl CellSummary {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }

    pub fn snr_db(&self) -> Option<f64> {
        snr_db(self.cell.b as f64, self.cell.sigma)
    }
}

fn cell_seed(master: u64, index: usize) -> u64 {
    substream(master, index as u64).random()
}

/// Run every seed of `cell`. A run that errors counts as unsuccessful.
pub fn run_cell(spec: &ExperimentSpec, cell: Cell, seed: u64) -> CellSummary {
    let workload = Workload {
        n: cell.n,
        b: cell.b,
        p: cell.p,
        sigma: cell.sigma,
        band: spec.band,
    };
    let cfg = spec.pursuit_config(cell.b, cell.mode);
    let outcomes: Vec<Option<RunOutcome>> = (0..spec.runs as u64)
        .map(|i| run_one(&workload, &cfg, seed, i).ok())
        .collect();
    summarize(cell, &outcomes)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

pub fn summarize(cell: Cell, outcomes: &[Option<RunOutcome>]) -> CellSummary {
    let done: Vec<&RunOutcome> = outcomes.iter().flatten().collect();
    let mut wo: Vec<f64> = done.iter().map(|o| o.time_wo_sampling.as_secs_f64()).collect();
    wo.sort_by(f64::total_cmp);
    CellSummary {
        cell,
        runs: outcomes.len(),
        successes: done.iter().filter(|o| o.success).count(),
        relative_error_pct: 100.0 * mean(done.iter().map(|o| o.relative_error)),
        time_total_s: mean(done.iter().map(|o| o.time_total.as_secs_f64())),
        time_wo_sampling_s: mean(wo.iter().copied()),
        median_wo_sampling_s: wo.get(wo.len() / 2).copied().unwrap_or(f64::NAN),
        samples_touched: mean(done.iter().map(|o| o.samples_touched as f64)),
        iterations: mean(done.iter().map(|o| o.iterations as f64)),
    }
}

/// Run all cells, `spec.jobs` at a time; results come back in cell order.
pub fn run_sweep(spec: &ExperimentSpec) -> Vec<CellSummary> {
    let cells = spec.cells();
    let jobs = spec.jobs.max(1);
    let mut out: Vec<Option<CellSummary>> = vec![None; cells.len()];
    for (chunk_idx, chunk) in cells.chunks(jobs).enumerate() {
        let base = chunk_idx * jobs;
        let results: Vec<CellSummary> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .enumerate()
                .map(|(k, &cell)| s.spawn(move || run_cell(spec, cell, cell_seed(spec.seed, base + k))))
                .collect();
            handles.into_iter().map(|h| h.join().expect("cell worker panicked")).collect()
        });
        for (k, r) in results.into_iter().enumerate() {
            out[base + k] = Some(r);
        }
    }
    out.into_iter().flatten().collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

/// CSV for a pursuit table, one row per cell.
pub fn sweep_csv(spec: &ExperimentSpec, rows: &[CellSummary]) -> String {
    let (key, extra): (&str, &[&str]) = match spec.table {
        TableId::Scaling => ("N", &[]),
        TableId::Modes => ("B", &["SNR_dB"]),
        TableId::Availability => ("p", &["mode"]),
        TableId::Noise => ("sigma", &["SNR_dB"]),
        TableId::Shapes => unreachable!("shape tables have their own writer"),
    };
    let mut header: Vec<&str> = vec![key];
    header.extend_from_slice(extra);
    if spec.timing {
        header.extend_from_slice(&["time_plus_sampling_s", "time_wo_sampling_s"]);
    }
    header.extend_from_slice(&["samples_touched", "iterations", "relative_error_pct", "success_probability"]);
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let c = r.cell;
        let mut fields = vec![match spec.table {
            TableId::Scaling => c.n.to_string(),
            TableId::Modes => c.b.to_string(),
            TableId::Availability => c.p.to_string(),
            _ => c.sigma.to_string(),
        }];
        match spec.table {
            TableId::Modes | TableId::Noise => fields.push(fmt_opt(r.snr_db())),
            TableId::Availability => fields.push(c.mode.to_string()),
            _ => {}
        }
        if spec.timing {
            fields.push(format!("{:.6}", r.time_total_s));
            fields.push(format!("{:.6}", r.time_wo_sampling_s));
        }
        fields.push(format!("{:.0}", r.samples_touched));
        fields.push(format!("{:.1}", r.iterations));
        fields.push(format!("{:.3}", r.relative_error_pct));
        fields.push(format!("{:.2}", r.success_rate()));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Shape probabilities by formula next to Monte-Carlo frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRow {
    pub p: f64,
    pub cross: f64,
    pub diagonal: f64,
    pub cross_mc: f64,
    pub diagonal_mc: f64,
}

pub fn shape_rows(spec: &ExperimentSpec) -> Result<Vec<ShapeRow>> {
    spec.ps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut rng = substream(spec.seed, i as u64);
            let (cross_mc, diagonal_mc) = shape_frequencies(p, spec.runs, &mut rng)?;
            Ok(ShapeRow {
                p,
                cross: shape_probability(p, ShapeId::Cross)?,
                diagonal: shape_probability(p, ShapeId::Diagonal)?,
                cross_mc,
                diagonal_mc,
            })
        })
        .collect()
}

pub fn shapes_csv(rows: &[ShapeRow]) -> String {
    let mut out = String::from("p,cross_pct,diagonal_pct,sum_pct,cross_mc_pct,diagonal_mc_pct\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.2},{:.2},{:.2},{:.2},{:.2}",
            r.p,
            100.0 * r.cross,
            100.0 * r.diagonal,
            100.0 * (r.cross + r.diagonal),
            100.0 * r.cross_mc,
            100.0 * r.diagonal_mc
        );
    }
    out
}

/// Run the sweep for `spec` and render it.
pub fn run_table(spec: &ExperimentSpec) -> Result<String> {
    Ok(match spec.table {
        TableId::Shapes => shapes_csv(&shape_rows(spec)?),
        _ => sweep_csv(spec, &run_sweep(spec)),
    })
}

/// Pearson correlation coefficient.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs.iter().copied());
    let my = mean(ys.iter().copied());
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_names_round_trip() {
        for t in TableId::ALL {
            assert_eq!(t.name().parse::<TableId>().unwrap(), t);
        }
        assert!("T2-nothing".parse::<TableId>().is_err());
    }

    #[test]
    fn presets_follow_the_table_grids() {
        let t4 = ExperimentSpec::preset(TableId::Availability);
        assert_eq!(t4.iteration_cap, 200);
        assert_eq!(t4.runs, 10);
        assert_eq!(t4.cells().len(), 12);
        let t3 = ExperimentSpec::preset(TableId::Modes);
        let cfg = t3.pursuit_config(16, NormMode::Greedy);
        assert!((cfg.stop_relative - 0.1 / 16.0).abs() < 1e-15);
        assert_eq!(cfg.iteration_cap, Some(200));
    }

    #[test]
    fn correlation_of_lines() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((correlation(&xs, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-12);
        assert!((correlation(&xs, &[8.0, 6.0, 4.0, 2.0]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_csv_has_formula_columns() {
        let mut spec = ExperimentSpec::preset(TableId::Shapes);
        spec.runs = 2000;
        spec.ps = vec![0.9];
        let csv = run_table(&spec).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "p,cross_pct,diagonal_pct,sum_pct,cross_mc_pct,diagonal_mc_pct");
        assert!(lines.next().unwrap().starts_with("0.9,65.61,28.87,94.48,"));
    }

    #[test]
    fn untimed_csv_is_reproducible() {
        let mut spec = ExperimentSpec::preset(TableId::Noise);
        spec.ns = vec![1 << 10];
        spec.sigmas = vec![0.5];
        spec.bs = vec![2];
        spec.runs = 2;
        spec.timing = false;
        spec.jobs = 2;
        let a = run_table(&spec).unwrap();
        let b = run_table(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("sigma,SNR_dB,samples_touched,"));
    }
}
