//! The clustering grid: layouts × generator tempers × noise levels ×
//! clustering tempers × seeded runs.

use rayon::prelude::*;

use super::{fmt_f, Experiment, ExperimentConfig, RunSummary};
use crate::cluster::{
    compute_metrics, generate_clusters, inject_noise, lloyd_cluster, GeneratorConfig, Layout,
    LloydOptions,
};
use crate::error::Result;
use crate::report::write_csv;

// Noise and Forgy draws get their own streams, derived from the run seed.
const NOISE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const INIT_SALT: u64 = 0xd1b5_4a32_d192_ed03;

pub const METRICS: [&str; 3] = ["p_err", "p_split", "mean_bf"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub p_err: f64,
    pub p_split: f64,
    /// NaN when no center was learned.
    pub mean_bf: f64,
    pub learned_k: usize,
    pub iterations: usize,
    pub converged: bool,
    pub fallbacks: usize,
    pub loss_monotone: bool,
}

impl RunMetrics {
    pub fn metric(&self, name: &str) -> f64 {
        match name {
            "p_err" => self.p_err,
            "p_split" => self.p_split,
            "mean_bf" => self.mean_bf,
            _ => f64::NAN,
        }
    }
}

/// One clustering run. Runs with the same seed share their dataset
/// across clustering tempers.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub layout: Layout,
    pub generator_t: f64,
    pub p_noise: f64,
    pub seed: u64,
    pub t: f64,
    pub outcome: std::result::Result<RunMetrics, String>,
}

/// Mean and population std of one metric in one cell, over its good runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub layout: Layout,
    pub generator_t: f64,
    pub p_noise: f64,
    pub metric: &'static str,
    pub t: f64,
    pub mean: f64,
    pub std: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Two-sample z statistic against t = 1 in the same cell, if present.
    pub z_vs_classical: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResults {
    pub runs: Vec<RunRecord>,
    pub cells: Vec<CellStats>,
}

impl ClusteringResults {
    pub fn cell(
        &self,
        layout: Layout,
        generator_t: f64,
        p_noise: f64,
        metric: &str,
        t: f64,
    ) -> Option<&CellStats> {
        self.cells.iter().find(|c| {
            c.layout == layout
                && c.generator_t == generator_t
                && c.p_noise == p_noise
                && c.metric == metric
                && c.t == t
        })
    }

    pub fn failures(&self) -> usize {
        self.runs.iter().filter(|r| r.outcome.is_err()).count()
    }
}

fn one_dataset(
    cfg: &ExperimentConfig,
    layout: Layout,
    gen_t: f64,
    p_noise: f64,
    seed: u64,
) -> Vec<RunRecord> {
    let p = &cfg.clustering;
    let record = |t: f64, outcome| RunRecord {
        layout,
        generator_t: gen_t,
        p_noise,
        seed,
        t,
        outcome,
    };
    let gcfg = GeneratorConfig {
        layout,
        points_per_cluster: p.points_per_cluster,
        imbalance_factor: p.imbalance,
        ball_radius_px: p.radius_px,
        viewport: cfg.viewport,
    };
    let ds = cfg
        .family
        .with_t(gen_t)
        .build()
        .and_then(|g| generate_clusters(&g, p.k, &gcfg, seed))
        .and_then(|ds| inject_noise(&ds, p_noise, &cfg.viewport, seed ^ NOISE_SALT));
    let ds = match ds {
        Ok(ds) => ds,
        Err(e) => {
            let msg = format!("generation: {e}");
            return cfg
                .t_list()
                .iter()
                .map(|&t| record(t, Err(msg.clone())))
                .collect();
        }
    };
    let opts = LloydOptions {
        max_iters: p.max_iters,
        factor: p.factor,
    };
    cfg.t_list()
        .iter()
        .map(|&t| {
            let out = (|| -> Result<RunMetrics> {
                let fam = cfg.family.with_t(t).build()?;
                let m = lloyd_cluster(&fam, &ds.points, p.k, p.side, seed ^ INIT_SALT, &opts)?;
                let r = compute_metrics(&fam, &m, &ds, p.factor)?;
                Ok(RunMetrics {
                    p_err: r.p_err,
                    p_split: r.p_split,
                    mean_bf: r.mean_bf.unwrap_or(f64::NAN),
                    learned_k: m.centers.len(),
                    iterations: m.iterations,
                    converged: m.converged,
                    fallbacks: m.fallbacks,
                    loss_monotone: m.loss_is_monotone(1e-12),
                })
            })();
            record(t, out.map_err(|e| e.to_string()))
        })
        .collect()
}

/// Mean and population standard deviation (divisor n).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

fn z_stat(a: (f64, f64, usize), b: (f64, f64, usize)) -> Option<f64> {
    if a.2 == 0 || b.2 == 0 {
        return None;
    }
    let se = (a.1 * a.1 / a.2 as f64 + b.1 * b.1 / b.2 as f64).sqrt();
    if se > 0.0 {
        Some((a.0 - b.0) / se)
    } else if a.0 == b.0 {
        Some(0.0)
    } else {
        None
    }
}

pub fn clustering_grid(cfg: &ExperimentConfig) -> Result<ClusteringResults> {
    let p = &cfg.clustering;
    let mut jobs = Vec::new();
    for &layout in &p.layouts {
        for &g in &p.generator_t {
            for &noise in &p.p_noise {
                for &s in cfg.seeds() {
                    jobs.push((layout, g, noise, s));
                }
            }
        }
    }
    let runs: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(l, g, n, s)| one_dataset(cfg, l, g, n, s))
        .collect::<Vec<_>>()
        .concat();

    let mut cells = Vec::new();
    for &layout in &p.layouts {
        for &g in &p.generator_t {
            for &noise in &p.p_noise {
                let in_cell = |t: f64| {
                    runs.iter().filter(move |r| {
                        r.layout == layout && r.generator_t == g && r.p_noise == noise && r.t == t
                    })
                };
                for metric in METRICS {
                    let stats = |t: f64| {
                        let vals: Vec<f64> = in_cell(t)
                            .filter_map(|r| r.outcome.as_ref().ok())
                            .map(|m| m.metric(metric))
                            .filter(|v| v.is_finite())
                            .collect();
                        let (m, s) = mean_std(&vals);
                        (m, s, vals.len())
                    };
                    let classical = cfg.t_list().contains(&1.0).then(|| stats(1.0));
                    for &t in cfg.t_list() {
                        let st = stats(t);
                        let total = in_cell(t).count();
                        cells.push(CellStats {
                            layout,
                            generator_t: g,
                            p_noise: noise,
                            metric,
                            t,
                            mean: st.0,
                            std: st.1,
                            n_ok: st.2,
                            n_failed: total - st.2,
                            z_vs_classical: classical.and_then(|c| z_stat(st, c)),
                        });
                    }
                }
            }
        }
    }
    Ok(ClusteringResults { runs, cells })
}

pub(super) fn run_clustering(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let res = clustering_grid(cfg)?;
    let dir = cfg.output_dir.join("clustering");
    let head = cfg.csv_header(
        Experiment::Clustering,
        &format!(
            "side={} std=population seeds=shared_across_t noise_center=none",
            cfg.clustering.side.name()
        ),
    );
    let cols = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let table = dir.join("table2.csv");
    write_csv(
        &table,
        Some(&head),
        &cols(&[
            "layout",
            "generator_t",
            "p_noise",
            "metric",
            "t",
            "mean",
            "std",
            "n_ok",
            "n_failed",
            "z_vs_t1",
            "significant_05",
        ]),
        res.cells.iter().map(|c| {
            vec![
                c.layout.name().to_string(),
                fmt_f(c.generator_t),
                fmt_f(c.p_noise),
                c.metric.to_string(),
                fmt_f(c.t),
                fmt_f(c.mean),
                fmt_f(c.std),
                c.n_ok.to_string(),
                c.n_failed.to_string(),
                c.z_vs_classical.map(fmt_f).unwrap_or_default(),
                c.z_vs_classical
                    .map(|z| (z.abs() > 1.959_963_984_540_054).to_string())
                    .unwrap_or_default(),
            ]
        }),
    )?;
    let runs = dir.join("runs.csv");
    write_csv(
        &runs,
        Some(&head),
        &cols(&[
            "layout",
            "generator_t",
            "p_noise",
            "seed",
            "t",
            "p_err",
            "p_split",
            "mean_bf",
            "learned_k",
            "iterations",
            "converged",
            "fallbacks",
            "loss_monotone",
            "error",
        ]),
        res.runs.iter().map(|r| {
            let mut v = vec![
                r.layout.name().to_string(),
                fmt_f(r.generator_t),
                fmt_f(r.p_noise),
                r.seed.to_string(),
                fmt_f(r.t),
            ];
            match &r.outcome {
                Ok(m) => v.extend([
                    fmt_f(m.p_err),
                    fmt_f(m.p_split),
                    fmt_f(m.mean_bf),
                    m.learned_k.to_string(),
                    m.iterations.to_string(),
                    m.converged.to_string(),
                    m.fallbacks.to_string(),
                    m.loss_monotone.to_string(),
                    String::new(),
                ]),
                Err(e) => {
                    v.extend(std::iter::repeat_n(String::new(), 8));
                    v.push(e.clone());
                }
            }
            v
        }),
    )?;
    let failures = res.failures();
    let mut lines = vec![format!("{} runs, {} failed", res.runs.len(), failures)];
    for r in res.runs.iter().filter(|r| r.outcome.is_err()).take(20) {
        lines.push(format!(
            "run failed: layout={} generator_t={} p_noise={} seed={} t={}: {}",
            r.layout.name(),
            r.generator_t,
            r.p_noise,
            r.seed,
            r.t,
            r.outcome.as_ref().err().map(String::as_str).unwrap_or("")
        ));
    }
    Ok(RunSummary {
        experiment: Experiment::Clustering,
        files: vec![table, runs],
        failures,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_std() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn z_statistic() {
        assert_eq!(z_stat((1.0, 0.0, 5), (1.0, 0.0, 5)), Some(0.0));
        assert_eq!(z_stat((1.0, 0.0, 5), (2.0, 0.0, 5)), None);
        let z = z_stat((0.28, 0.11, 50), (0.32, 0.13, 50)).unwrap();
        assert!((z - (-0.04 / ((0.0121 + 0.0169) / 50.0f64).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn small_grid_schema() {
        let mut cfg = ExperimentConfig::default();
        cfg.seeds = Some(vec![0, 1]);
        cfg.clustering.points_per_cluster = 15;
        cfg.clustering.imbalance = 2;
        let cfg = cfg.resolve(Experiment::Clustering).unwrap();
        let res = clustering_grid(&cfg).unwrap();
        // 2 layouts × 2 generators × 2 noise × 2 seeds × 3 t
        assert_eq!(res.runs.len(), 48);
        // 2 layouts × 2 generators × 3 t × 3 metrics × 2 noise
        assert_eq!(res.cells.len(), 72);
        assert_eq!(res.failures(), 0);
        for r in &res.runs {
            let m = r.outcome.as_ref().unwrap();
            assert!((0.0..=1.0).contains(&m.p_err) && (0.0..=1.0).contains(&m.p_split));
            assert!(m.loss_monotone);
        }
    }
}
