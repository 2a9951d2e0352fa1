//! Cartesian grids over `N`, `σ`, `b` and `η` with repeated seeds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

use super::config::{RunConfig, TuningKind};
use super::run::run_experiment;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub n_tasks: Option<usize>,
    pub sigma: Option<f64>,
    pub b: Option<f64>,
    pub eta: Option<f64>,
    /// Final regret of each repetition, in seed order.
    pub finals: Vec<f64>,
    pub mean_regret: f64,
    /// Sample standard deviation; 0 for a single repetition.
    pub std_regret: f64,
}

/// The configurations of every cell; repetition `k` uses seed `seed + k`.
pub fn expand(config: &RunConfig) -> Vec<(SweepCell, Vec<RunConfig>)> {
    fn axis<T: Copy>(grid: &[T]) -> Vec<Option<T>> {
        if grid.is_empty() {
            vec![None]
        } else {
            grid.iter().copied().map(Some).collect()
        }
    }
    let mut cells = Vec::new();
    for n in axis(&config.sweep_n_tasks) {
        for sigma in axis(&config.sweep_sigma) {
            for b in axis(&config.sweep_b) {
                for eta in axis(&config.sweep_eta) {
                    let mut cell = config.clone();
                    cell.sweep_n_tasks.clear();
                    cell.sweep_sigma.clear();
                    cell.sweep_b.clear();
                    cell.sweep_eta.clear();
                    if n.is_some() {
                        cell.n_tasks = n;
                    }
                    if let Some(s) = sigma {
                        cell.sigma = s;
                    }
                    if b.is_some() {
                        cell.b = b;
                    }
                    if eta.is_some() {
                        cell.tuning = TuningKind::Fixed;
                        cell.eta = eta;
                    }
                    let runs = (0..config.repetitions as u64)
                        .map(|k| {
                            let mut r = cell.clone();
                            r.seed = config.seed.wrapping_add(k);
                            r.repetitions = 1;
                            r
                        })
                        .collect();
                    let summary = SweepCell {
                        n_tasks: n,
                        sigma,
                        b,
                        eta,
                        finals: Vec::new(),
                        mean_regret: 0.0,
                        std_regret: 0.0,
                    };
                    cells.push((summary, runs));
                }
            }
        }
    }
    cells
}

/// Runs every cell and repetition in parallel and summarizes final regrets.
pub fn sweep(config: &RunConfig) -> Result<Vec<SweepCell>> {
    config.check()?;
    let cells = expand(config);
    let jobs: Vec<(usize, &RunConfig)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, (_, runs))| runs.iter().map(move |r| (c, r)))
        .collect();
    let finals: Vec<(usize, f64)> = jobs
        .par_iter()
        .map(|&(c, r)| run_experiment(r).map(|rep| (c, rep.final_regret)))
        .collect::<Result<_>>()?;
    let mut out: Vec<SweepCell> = cells.into_iter().map(|(s, _)| s).collect();
    for (c, v) in finals {
        out[c].finals.push(v);
    }
    for cell in &mut out {
        let (mean, std) = mean_std(&cell.finals);
        cell.mean_regret = mean;
        cell.std_regret = std;
    }
    Ok(out)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{EnvironmentKind, LearnerKind};

    fn base() -> RunConfig {
        let mut c = RunConfig::new(LearnerKind::MtOgd, EnvironmentKind::Synthetic);
        c.n_tasks = Some(3);
        c.dim = Some(2);
        c.horizon = Some(150);
        c.sigma = 0.3;
        c
    }

    #[test]
    fn single_cell_equals_run() {
        let cells = sweep(&base()).unwrap();
        assert_eq!(cells.len(), 1);
        let direct = run_experiment(&base()).unwrap();
        assert_eq!(cells[0].finals, vec![direct.final_regret]);
        assert_eq!(cells[0].std_regret, 0.0);
    }

    #[test]
    fn repetitions_report_sample_std() {
        let mut c = base();
        c.repetitions = 3;
        c.seed = 10;
        let cells = sweep(&c).unwrap();
        let finals: Vec<f64> = (10..13)
            .map(|s| {
                let mut r = base();
                r.seed = s;
                run_experiment(&r).unwrap().final_regret
            })
            .collect();
        assert_eq!(cells[0].finals, finals);
        let mean = finals.iter().sum::<f64>() / 3.0;
        let var = finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0;
        assert!((cells[0].std_regret - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn grid_is_cartesian() {
        let mut c = base();
        c.sweep_b = vec![0.0, 3.0];
        c.sweep_sigma = vec![0.1, 0.2, 0.5];
        c.tuning = TuningKind::Fixed;
        c.sweep_eta = vec![0.05, 0.2];
        let cells = sweep(&c).unwrap();
        assert_eq!(cells.len(), 12);
        assert!(cells.iter().all(|c| c.finals.len() == 1));
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
    }
}
