//! Outlier drag on the left center, and the right-minimizer contamination
//! sweep.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fmt_f, t_tag, Experiment, ExperimentConfig, RunSummary};
use crate::cluster::sample_ball;
use crate::diagram::calibrate_radius;
use crate::divergence::{side_divergence, AxisFactor, Side};
use crate::error::Result;
use crate::family::NaturalParam;
use crate::minimizer::{influence_probe, left_minimizer, WeightedPopulation};
use crate::report::write_csv;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessTrace {
    pub t: f64,
    pub seed: u64,
    /// Outlier position at each step; step 0 is its starting point.
    pub outlier: Vec<[f64; 2]>,
    pub centers: Vec<[f64; 2]>,
    /// `‖center_k - center_0‖`.
    pub displacement: Vec<f64>,
    /// Angle between the first and last center, seen from the origin.
    pub cone_angle: f64,
}

impl RobustnessTrace {
    pub fn final_displacement(&self) -> f64 {
        *self.displacement.last().unwrap_or(&0.0)
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    // atan2 stays accurate near 0, unlike acos of the cosine
    let cross = a[0] * b[1] - a[1] * b[0];
    cross.abs().atan2(a[0] * b[0] + a[1] * b[1])
}

/// The cluster depends only on the seed, so every t sees the same points
/// and the same ray.
fn cluster_and_ray(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(Vec<NaturalParam>, usize, [f64; 2])> {
    let p = &cfg.robustness;
    let gen = cfg.family.with_t(p.generator_t).build()?;
    let r = calibrate_radius(&gen, p.center, p.radius_px, Side::Left, &cfg.viewport)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = sample_ball(
        &gen,
        p.center,
        r,
        Side::Left,
        &cfg.viewport,
        p.cluster_size,
        &mut rng,
    )?;
    // the cluster point nearest the center becomes the outlier
    let mut near = (0, f64::INFINITY);
    for (i, x) in pts.iter().enumerate() {
        let d = side_divergence(&gen, &p.center, &x.0, Side::Left, AxisFactor::PerAxis)?;
        if d < near.1 {
            near = (i, d);
        }
    }
    // rays point into the negative quadrant so the outlier stays in the domain
    let a = rng.gen_range(PI..1.5 * PI);
    Ok((pts, near.0, [a.cos(), a.sin()]))
}

pub fn robustness_trace(cfg: &ExperimentConfig, t: f64, seed: u64) -> Result<RobustnessTrace> {
    let p = &cfg.robustness;
    let fam = cfg.family.with_t(t).build()?;
    let (mut pts, idx, dir) = cluster_and_ray(cfg, seed)?;
    let mut weights = vec![1.0; pts.len()];
    weights[idx] = p.outlier_weight;
    let start = [pts[idx].0[0], pts[idx].0[1]];
    let mut tr = RobustnessTrace {
        t,
        seed,
        outlier: Vec::new(),
        centers: Vec::new(),
        displacement: Vec::new(),
        cone_angle: 0.0,
    };
    for k in 0..=p.step_count {
        let s = k as f64 * p.step_size;
        let o = [start[0] + s * dir[0], start[1] + s * dir[1]];
        pts[idx] = NaturalParam(o.to_vec());
        let pop = WeightedPopulation::new(pts.clone(), weights.clone())?;
        let c = left_minimizer(&fam, &pop)?.theta_l;
        let c = [c.0[0], c.0[1]];
        let c0 = tr.centers.first().copied().unwrap_or(c);
        tr.outlier.push(o);
        tr.centers.push(c);
        tr.displacement.push(norm([c[0] - c0[0], c[1] - c0[1]]));
    }
    tr.cone_angle = angle(tr.centers[0], *tr.centers.last().expect("step 0 exists"));
    Ok(tr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RightSweepRow {
    pub t: f64,
    pub seed: u64,
    pub magnitude: f64,
    /// `‖Δ right center‖` when an outlier at `(-m, -m)` takes weight ε.
    pub displacement: f64,
}

pub fn right_sweep(cfg: &ExperimentConfig, t: f64, seed: u64) -> Result<Vec<RightSweepRow>> {
    let p = &cfg.robustness;
    let fam = cfg.family.with_t(t).build()?;
    let (pts, _, _) = cluster_and_ray(cfg, seed)?;
    let pop = WeightedPopulation::uniform(pts)?;
    p.magnitudes
        .iter()
        .map(|&m| {
            let d = influence_probe(
                &fam,
                &pop,
                &NaturalParam(vec![-m, -m]),
                p.contamination,
                Side::Right,
            )?;
            Ok(RightSweepRow {
                t,
                seed,
                magnitude: m,
                displacement: d[0].hypot(d[1]),
            })
        })
        .collect()
}

pub(super) fn run_robustness(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let dir = cfg.output_dir.join("robustness");
    let jobs: Vec<(f64, u64)> = cfg
        .t_list()
        .iter()
        .flat_map(|&t| cfg.seeds().iter().map(move |&s| (t, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(t, s)| Ok((robustness_trace(cfg, t, s)?, right_sweep(cfg, t, s)?)))
        .collect::<Result<Vec<_>>>()?;

    let head = cfg.csv_header(
        Experiment::Robustness,
        &format!(
            "side=left outlier_weight={} step_size={}",
            fmt_f(cfg.robustness.outlier_weight),
            fmt_f(cfg.robustness.step_size)
        ),
    );
    let mut files = Vec::new();
    let cols = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    for (tr, _) in &results {
        let path = dir.join(format!("trace_{}_seed{}.csv", t_tag(tr.t), tr.seed));
        let rows = (0..tr.centers.len()).map(|k| {
            vec![
                k.to_string(),
                fmt_f(tr.outlier[k][0]),
                fmt_f(tr.outlier[k][1]),
                fmt_f(tr.centers[k][0]),
                fmt_f(tr.centers[k][1]),
                fmt_f(tr.displacement[k]),
            ]
        });
        write_csv(
            &path,
            Some(&head),
            &cols(&[
                "step",
                "outlier_x0",
                "outlier_x1",
                "center_x0",
                "center_x1",
                "displacement",
            ]),
            rows,
        )?;
        files.push(path);
    }
    let summary = dir.join("summary.csv");
    write_csv(
        &summary,
        Some(&head),
        &cols(&["t", "seed", "final_displacement", "cone_angle"]),
        results.iter().map(|(tr, _)| {
            vec![
                fmt_f(tr.t),
                tr.seed.to_string(),
                fmt_f(tr.final_displacement()),
                fmt_f(tr.cone_angle),
            ]
        }),
    )?;
    files.push(summary);
    let sweep = dir.join("right_sweep.csv");
    write_csv(
        &sweep,
        Some(&cfg.csv_header(
            Experiment::Robustness,
            &format!(
                "side=right contamination={}",
                fmt_f(cfg.robustness.contamination)
            ),
        )),
        &cols(&["t", "seed", "magnitude", "displacement"]),
        results.iter().flat_map(|(_, rs)| {
            rs.iter().map(|r| {
                vec![
                    fmt_f(r.t),
                    r.seed.to_string(),
                    fmt_f(r.magnitude),
                    fmt_f(r.displacement),
                ]
            })
        }),
    )?;
    files.push(sweep);
    let lines = results
        .iter()
        .map(|(tr, _)| {
            format!(
                "t={} seed={} final displacement {:.6} cone angle {:.6}",
                tr.t,
                tr.seed,
                tr.final_displacement(),
                tr.cone_angle
            )
        })
        .collect();
    Ok(RunSummary {
        experiment: Experiment::Robustness,
        files,
        failures: 0,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.robustness.cluster_size = 30;
        cfg.robustness.step_count = 3;
        cfg.resolve(Experiment::Robustness).unwrap()
    }

    #[test]
    fn first_step_has_zero_displacement() {
        let cfg = small();
        for t in [0.0, 1.0] {
            let tr = robustness_trace(&cfg, t, 1).unwrap();
            assert_eq!(tr.displacement[0], 0.0);
            assert_eq!(tr.centers.len(), 4);
            let step = norm([
                tr.outlier[1][0] - tr.outlier[0][0],
                tr.outlier[1][1] - tr.outlier[0][1],
            ]);
            assert!((step - cfg.robustness.step_size).abs() < 1e-12);
        }
    }

    #[test]
    fn traces_share_cluster_and_ray_across_t() {
        let cfg = small();
        let a = robustness_trace(&cfg, 0.0, 3).unwrap();
        let b = robustness_trace(&cfg, 1.0, 3).unwrap();
        assert_eq!(a.outlier, b.outlier);
        assert_ne!(a.centers, b.centers);
    }

    #[test]
    fn angle_helper() {
        assert!((angle([-1.0, 0.0], [0.0, -1.0]) - PI / 2.0).abs() < 1e-15);
        assert_eq!(angle([-1.0, -1.0], [-2.0, -2.0]), 0.0);
    }
}
