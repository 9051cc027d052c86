//! Ball and Voronoi rasters.

use std::f64::consts::PI;
use std::path::PathBuf;

use super::{t_tag, Experiment, ExperimentConfig, RunSummary};
use crate::diagram::{render_ball, render_voronoi, write_raster, RasterMeta, PALETTE};
use crate::divergence::Side;
use crate::error::Result;

const SIDES: [Side; 2] = [Side::Left, Side::Right];

/// Vertices of a regular pentagon, the first at angle `rotation` (radians).
pub fn pentagon(center: [f64; 2], radius: f64, rotation: f64) -> Vec<[f64; 2]> {
    (0..5)
        .map(|k| {
            let a = rotation + 2.0 * PI * k as f64 / 5.0;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect()
}

/// `(t, side, center index, file stem)` for every ball raster.
pub fn ball_jobs(cfg: &ExperimentConfig) -> Vec<(f64, Side, usize, String)> {
    let mut jobs = Vec::new();
    for &t in cfg.t_list() {
        for side in SIDES {
            for c in 0..cfg.balls.centers.len() {
                jobs.push((
                    t,
                    side,
                    c,
                    format!("ball_{}_{}_c{c}", t_tag(t), side.name()),
                ));
            }
        }
    }
    jobs
}

/// `(t, side, rotation step, file stem)` for every Voronoi raster.
pub fn voronoi_jobs(cfg: &ExperimentConfig) -> Vec<(f64, Side, usize, String)> {
    let mut jobs = Vec::new();
    for step in 0..cfg.voronoi.rotation_steps {
        for &t in cfg.t_list() {
            for side in SIDES {
                jobs.push((
                    t,
                    side,
                    step,
                    format!("voronoi_r{step}_{}_{}", t_tag(t), side.name()),
                ));
            }
        }
    }
    jobs
}

fn palette() -> Vec<[u8; 3]> {
    PALETTE.to_vec()
}

pub(super) fn run_balls(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let dir = cfg.output_dir.join("balls");
    let mut files = Vec::new();
    for (t, side, c, stem) in ball_jobs(cfg) {
        let desc = cfg.family.with_t(t);
        let fam = desc.build()?;
        let center = cfg.balls.centers[c];
        let (grid, r) = render_ball(&fam, center, cfg.balls.radius_px, side, &cfg.viewport)?;
        let meta = RasterMeta {
            kind: "ball".into(),
            family: desc,
            side,
            viewport: cfg.viewport,
            sites: vec![center],
            radius_px: Some(cfg.balls.radius_px),
            radius: Some(r),
            palette: palette(),
        };
        let path = dir.join(format!("{stem}.ppm"));
        let sidecar = write_raster(&grid, &meta, &path)?;
        files.push(path);
        files.push(sidecar);
    }
    Ok(RunSummary {
        experiment: Experiment::Balls,
        lines: vec![format!("{} rasters in {}", files.len() / 2, dir.display())],
        files,
        failures: 0,
    })
}

pub(super) fn run_voronoi(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let dir = cfg.output_dir.join("voronoi");
    let p = &cfg.voronoi;
    let mut files: Vec<PathBuf> = Vec::new();
    for (t, side, step, stem) in voronoi_jobs(cfg) {
        let desc = cfg.family.with_t(t);
        let fam = desc.build()?;
        let rotation = 2.0 * PI / 5.0 * step as f64 / p.rotation_steps as f64;
        let sites = pentagon(p.center, p.radius, rotation);
        let grid = render_voronoi(&fam, &sites, side, &cfg.viewport)?;
        let meta = RasterMeta {
            kind: "voronoi".into(),
            family: desc,
            side,
            viewport: cfg.viewport,
            sites,
            radius_px: None,
            radius: None,
            palette: palette(),
        };
        let path = dir.join(format!("{stem}.ppm"));
        let sidecar = write_raster(&grid, &meta, &path)?;
        files.push(path);
        files.push(sidecar);
    }
    Ok(RunSummary {
        experiment: Experiment::Voronoi,
        lines: vec![format!("{} rasters in {}", files.len() / 2, dir.display())],
        files,
        failures: 0,
    })
}
