//! Synthetic clusters in divergence balls, Lloyd-style clustering with
//! conformal-divergence centers, and the evaluation metrics.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deformed::Temper;
use crate::diagram::{calibrate_radius, Viewport};
use crate::divergence::{conformal_vec, prepared_side, AxisFactor, Prepared, Side};
use crate::error::{Result, TemError};
use crate::family::{NaturalParam, TemFamily};
use crate::minimizer::{f_mean, minimizer, WeightedPopulation};

/// Label carried by noise points.
pub const NOISE_LABEL: usize = usize::MAX;

const MAX_CONSECUTIVE_REJECTIONS: usize = 1_000_000;
const EXTENT_BISECTIONS: usize = 100;

/// Fraction of a true cluster that one learned cluster must hold for the
/// true cluster not to count as split.
pub const SPLIT_THRESHOLD: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[serde(rename = "close3x3")]
    Close3x3,
    #[serde(rename = "far3x3")]
    Far3x3,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::Close3x3 => "close3x3",
            Layout::Far3x3 => "far3x3",
        }
    }

    /// The nine true centers, row by row.
    pub fn centers(self) -> Vec<[f64; 2]> {
        let grid: [f64; 3] = match self {
            Layout::Close3x3 => [-2.3, -1.8, -1.35],
            Layout::Far3x3 => [-3.2, -1.9, -0.7],
        };
        grid.iter()
            .flat_map(|&y| grid.iter().map(move |&x| [x, y]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub layout: Layout,
    pub points_per_cluster: usize,
    /// Cluster 0 gets `imbalance_factor * points_per_cluster` points.
    pub imbalance_factor: usize,
    pub ball_radius_px: f64,
    pub viewport: Viewport,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            layout: Layout::Far3x3,
            points_per_cluster: 200,
            imbalance_factor: 20,
            ball_radius_px: 12.0,
            viewport: Viewport::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub points: Vec<NaturalParam>,
    /// Index into `true_centers`, or [`NOISE_LABEL`].
    pub labels: Vec<usize>,
    pub true_centers: Vec<NaturalParam>,
    pub noise: Vec<bool>,
    /// Divergence threshold of each generating ball.
    pub radii: Vec<f64>,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.true_centers.len()];
        for &l in &self.labels {
            if l != NOISE_LABEL {
                sizes[l] += 1;
            }
        }
        sizes
    }
}

// {x : b(x) <= r} along one axis, clipped to [lo, hi], with b increasing
// away from c on both sides
fn axis_extent<F: Fn(f64) -> Result<f64>>(
    b: F,
    c: f64,
    r: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64)> {
    let reach = |edge: f64| -> Result<f64> {
        if b(edge)? <= r {
            return Ok(edge);
        }
        let (mut inside, mut outside) = (c, edge);
        for _ in 0..EXTENT_BISECTIONS {
            let mid = 0.5 * (inside + outside);
            if b(mid)? <= r {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(outside)
    };
    Ok((reach(lo)?, reach(hi)?))
}

/// Bounding box of a 2D ball, clipped to the viewport. Each axis term of the
/// divergence is non-negative, so the ball lies inside the product of the
/// per-axis sublevel sets.
pub fn ball_bounding_box(
    fam: &TemFamily,
    center: [f64; 2],
    r: f64,
    side: Side,
    vp: &Viewport,
) -> Result<[(f64, f64); 2]> {
    let lims = [(vp.x_min, vp.x_max), (vp.y_min, vp.y_max)];
    let mut out = [(0.0, 0.0); 2];
    for j in 0..2 {
        let c = center[j];
        let b = |x: f64| -> Result<f64> {
            match side {
                Side::Left => conformal_vec(fam, &[c], &[x], AxisFactor::PerAxis),
                Side::Right => conformal_vec(fam, &[x], &[c], AxisFactor::PerAxis),
            }
        };
        out[j] = axis_extent(b, c, r, lims[j].0, lims[j].1)?;
    }
    Ok(out)
}

/// Rejection-samples `n` points uniformly inside the ball `{x : B ≤ r}`.
pub fn sample_ball(
    fam: &TemFamily,
    center: [f64; 2],
    r: f64,
    side: Side,
    vp: &Viewport,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<NaturalParam>> {
    if !(r > 0.0) {
        return Err(TemError::domain("ball radius", r));
    }
    let bx = ball_bounding_box(fam, center, r, side, vp)?;
    let cp = Prepared::new(fam, &center)?;
    let gap = fam.temper().gap();
    let accept = |p: &[f64; 2]| -> Result<bool> {
        let pp = Prepared::new(fam, p)?;
        Ok(prepared_side(gap, &cp, &pp, side, AxisFactor::PerAxis) <= r)
    };
    rejection_sample(n, rng, bx, accept)
}

fn rejection_sample<A>(
    n: usize,
    rng: &mut ChaCha8Rng,
    bx: [(f64, f64); 2],
    accept: A,
) -> Result<Vec<NaturalParam>>
where
    A: Fn(&[f64; 2]) -> Result<bool>,
{
    let mut out = Vec::with_capacity(n);
    let mut rejections = 0usize;
    while out.len() < n {
        let p = [
            rng.gen_range(bx[0].0..=bx[0].1),
            rng.gen_range(bx[1].0..=bx[1].1),
        ];
        if accept(&p)? {
            out.push(NaturalParam(p.to_vec()));
            rejections = 0;
        } else {
            rejections += 1;
            if rejections >= MAX_CONSECUTIVE_REJECTIONS {
                return Err(TemError::RejectionStall { rejections });
            }
        }
    }
    Ok(out)
}

/// Samples each cluster in the left-center ball of its true center.
pub fn generate_clusters(
    fam: &TemFamily,
    k: usize,
    cfg: &GeneratorConfig,
    seed: u64,
) -> Result<SyntheticDataset> {
    let centers = cfg.layout.centers();
    if k != centers.len() {
        return Err(TemError::Config(format!(
            "layout {} has {} clusters, k = {k}",
            cfg.layout.name(),
            centers.len()
        )));
    }
    if cfg.points_per_cluster == 0 || cfg.imbalance_factor == 0 {
        return Err(TemError::Config("cluster sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = SyntheticDataset {
        points: Vec::new(),
        labels: Vec::new(),
        true_centers: centers.iter().map(|c| NaturalParam(c.to_vec())).collect(),
        noise: Vec::new(),
        radii: Vec::new(),
    };
    for (idx, &c) in centers.iter().enumerate() {
        let n = if idx == 0 {
            cfg.points_per_cluster * cfg.imbalance_factor
        } else {
            cfg.points_per_cluster
        };
        let r = calibrate_radius(fam, c, cfg.ball_radius_px, Side::Left, &cfg.viewport)?;
        let pts = sample_ball(fam, c, r, Side::Left, &cfg.viewport, n, &mut rng)?;
        ds.radii.push(r);
        ds.labels.extend(std::iter::repeat_n(idx, pts.len()));
        ds.noise.extend(std::iter::repeat_n(false, pts.len()));
        ds.points.extend(pts);
    }
    Ok(ds)
}

/// Appends `ceil(p_noise * n)` uniform points over the viewport rectangle.
pub fn inject_noise(
    ds: &SyntheticDataset,
    p_noise: f64,
    bounds: &Viewport,
    seed: u64,
) -> Result<SyntheticDataset> {
    if !(0.0..1.0).contains(&p_noise) {
        return Err(TemError::domain("noise proportion", p_noise));
    }
    bounds.validate()?;
    let mut out = ds.clone();
    let count = (p_noise * ds.len() as f64).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let p = vec![
            rng.gen_range(bounds.x_min..=bounds.x_max),
            rng.gen_range(bounds.y_min..=bounds.y_max),
        ];
        out.points.push(NaturalParam(p));
        out.labels.push(NOISE_LABEL);
        out.noise.push(true);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LloydOptions {
    pub max_iters: usize,
    pub factor: AxisFactor,
}

impl Default for LloydOptions {
    fn default() -> Self {
        LloydOptions {
            max_iters: 100,
            factor: AxisFactor::PerAxis,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub centers: Vec<NaturalParam>,
    /// Index into `centers` for every point.
    pub assignment: Vec<usize>,
    /// Mean divergence to the assigned center after every assignment step.
    pub loss_trace: Vec<f64>,
    pub t_used: Temper,
    pub side: Side,
    pub iterations: usize,
    pub converged: bool,
    /// Center solves that failed and fell back to the classical f-mean.
    pub fallbacks: usize,
}

impl ClusterModel {
    /// Whether the loss never rises by more than `slack` (relative).
    pub fn loss_is_monotone(&self, slack: f64) -> bool {
        self.loss_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + slack * w[0].abs().max(1.0))
    }
}

fn assign(
    gap: f64,
    centers: &[Prepared],
    points: &[Prepared],
    side: Side,
    factor: AxisFactor,
) -> (Vec<usize>, f64) {
    let best: Vec<(usize, f64)> = points
        .par_iter()
        .map(|p| {
            let mut best = (0usize, f64::INFINITY);
            for (j, c) in centers.iter().enumerate() {
                let d = prepared_side(gap, c, p, side, factor);
                // strict: ties go to the lowest index
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect();
    let loss = best.iter().map(|b| b.1).sum::<f64>() / points.len() as f64;
    (best.into_iter().map(|b| b.0).collect(), loss)
}

/// Lloyd iterations with Forgy initialization. Empty clusters are dropped.
pub fn lloyd_cluster(
    fam: &TemFamily,
    points: &[NaturalParam],
    k: usize,
    side: Side,
    init_seed: u64,
    opts: &LloydOptions,
) -> Result<ClusterModel> {
    if points.is_empty() {
        return Err(TemError::Empty("points"));
    }
    if k == 0 || k > points.len() {
        return Err(TemError::Config(format!(
            "k = {k} with {} points",
            points.len()
        )));
    }
    let gap = fam.temper().gap();
    let prepared = points
        .par_iter()
        .map(|p| Prepared::new(fam, &p.0))
        .collect::<Result<Vec<_>>>()?;
    let classical = TemFamily::new(fam.kind(), Temper::classical());

    let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
    let mut init: Vec<usize> = sample(&mut rng, points.len(), k).into_vec();
    init.sort_unstable();
    let mut centers: Vec<NaturalParam> = init.iter().map(|&i| points[i].clone()).collect();
    let mut center_prep: Vec<Prepared> = init.iter().map(|&i| prepared[i].clone()).collect();

    let (mut assignment, loss) = assign(gap, &center_prep, &prepared, side, opts.factor);
    let mut loss_trace = vec![loss];
    let mut fallbacks = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        // group members; BTreeMap keeps the surviving centers in order
        let mut members: BTreeMap<usize, Vec<NaturalParam>> = BTreeMap::new();
        for (i, &a) in assignment.iter().enumerate() {
            members.entry(a).or_default().push(points[i].clone());
        }
        let solved: Vec<(NaturalParam, bool)> = members
            .into_par_iter()
            .map(|(_, pts)| {
                let pop = WeightedPopulation::uniform(pts)?;
                match minimizer(fam, &pop, side) {
                    Ok(c) => Ok((c, false)),
                    Err(_) => Ok((f_mean(&classical, &pop)?, true)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        fallbacks += solved.iter().filter(|s| s.1).count();
        centers = solved.into_iter().map(|s| s.0).collect();
        center_prep = centers
            .iter()
            .map(|c| Prepared::new(fam, &c.0))
            .collect::<Result<Vec<_>>>()?;

        let (next, loss) = assign(gap, &center_prep, &prepared, side, opts.factor);
        loss_trace.push(loss);
        // compare partitions, since dropping empty clusters renumbers centers
        let unchanged = same_partition(&assignment, &next);
        assignment = next;
        if unchanged {
            converged = true;
            break;
        }
    }
    // drop centers that ended up empty after the last assignment
    let mut used: Vec<usize> = assignment.clone();
    used.sort_unstable();
    used.dedup();
    if used.len() < centers.len() {
        let remap: BTreeMap<usize, usize> = used
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        centers = used.iter().map(|&o| centers[o].clone()).collect();
        for a in assignment.iter_mut() {
            *a = remap[a];
        }
    }
    Ok(ClusterModel {
        centers,
        assignment,
        loss_trace,
        t_used: fam.temper(),
        side,
        iterations,
        converged,
        fallbacks,
    })
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = BTreeMap::new();
    let mut bwd = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if *fwd.entry(x).or_insert(y) != y || *bwd.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBreakdown {
    pub size: usize,
    pub best_learned: Option<usize>,
    pub best_fraction: f64,
    pub split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub p_err: f64,
    pub p_split: f64,
    /// `None` when no learned center exists.
    pub mean_bf: Option<f64>,
    /// `(true center, learned center, symmetrized divergence)`.
    pub matching: Vec<(usize, usize, f64)>,
    pub per_cluster: Vec<ClusterBreakdown>,
}

/// `(B(a‖b) + B(b‖a)) / 2`.
pub fn symmetrized(
    fam: &TemFamily,
    a: &NaturalParam,
    b: &NaturalParam,
    factor: AxisFactor,
) -> Result<f64> {
    Ok(0.5 * (conformal_vec(fam, &a.0, &b.0, factor)? + conformal_vec(fam, &b.0, &a.0, factor)?))
}

/// Greedy matching: repeatedly take the closest (true, learned) pair, drop
/// the true center, and drop the learned center unless it is the last one.
pub fn greedy_matching(
    fam: &TemFamily,
    truth: &[NaturalParam],
    learned: &[NaturalParam],
    factor: AxisFactor,
) -> Result<Vec<(usize, usize, f64)>> {
    let mut cost = vec![vec![0.0; learned.len()]; truth.len()];
    for (i, a) in truth.iter().enumerate() {
        for (j, b) in learned.iter().enumerate() {
            cost[i][j] = symmetrized(fam, a, b, factor)?;
        }
    }
    let mut open_true: Vec<usize> = (0..truth.len()).collect();
    let mut open_learned: Vec<usize> = (0..learned.len()).collect();
    let mut out = Vec::with_capacity(truth.len());
    while !open_true.is_empty() && !open_learned.is_empty() {
        let mut best = (0, 0, f64::INFINITY);
        for &i in &open_true {
            for &j in &open_learned {
                if cost[i][j] < best.2 {
                    best = (i, j, cost[i][j]);
                }
            }
        }
        out.push(best);
        open_true.retain(|&i| i != best.0);
        if open_learned.len() > 1 {
            open_learned.retain(|&j| j != best.1);
        }
    }
    Ok(out)
}

/// p_err, p_split and the matched-center distortion, ignoring noise points.
pub fn compute_metrics(
    fam: &TemFamily,
    model: &ClusterModel,
    ds: &SyntheticDataset,
    factor: AxisFactor,
) -> Result<MetricsReport> {
    if model.assignment.len() != ds.len() {
        return Err(TemError::Config("model and dataset sizes differ".into()));
    }
    let k_true = ds.true_centers.len();
    let k_learned = model.centers.len();
    let mut confusion = vec![vec![0usize; k_learned]; k_true];
    for ((&l, &a), &is_noise) in ds.labels.iter().zip(&model.assignment).zip(&ds.noise) {
        if !is_noise && l != NOISE_LABEL {
            confusion[l][a] += 1;
        }
    }
    let mut per_cluster = Vec::with_capacity(k_true);
    for row in &confusion {
        let size: usize = row.iter().sum();
        let best = row
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, usize)>, (j, &c)| match acc {
                Some((_, bc)) if bc >= c => acc,
                _ => Some((j, c)),
            });
        let frac = match (best, size) {
            (Some((_, c)), s) if s > 0 => c as f64 / s as f64,
            _ => 0.0,
        };
        per_cluster.push(ClusterBreakdown {
            size,
            best_learned: best.map(|b| b.0),
            best_fraction: frac,
            split: frac < SPLIT_THRESHOLD,
        });
    }
    let counted: Vec<&ClusterBreakdown> = per_cluster.iter().filter(|c| c.size > 0).collect();
    let (p_err, p_split) = if k_learned == 0 || counted.is_empty() {
        (1.0, 1.0)
    } else {
        let n = counted.len() as f64;
        (
            counted.iter().map(|c| 1.0 - c.best_fraction).sum::<f64>() / n,
            counted.iter().filter(|c| c.split).count() as f64 / n,
        )
    };
    let matching = greedy_matching(fam, &ds.true_centers, &model.centers, factor)?;
    let mean_bf = (!matching.is_empty())
        .then(|| matching.iter().map(|m| m.2).sum::<f64>() / matching.len() as f64);
    Ok(MetricsReport {
        p_err,
        p_split,
        mean_bf,
        matching,
        per_cluster,
    })
}

/// Writes `x0,x1,...,label,noise` rows (`label = -1` for noise), after an
/// optional `#` comment line.
pub fn write_dataset_csv(ds: &SyntheticDataset, path: &Path, comment: Option<&str>) -> Result<()> {
    let dim = ds.points.first().map_or(0, |p| p.dim());
    let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    header.push("noise".into());
    let rows = ds
        .points
        .iter()
        .zip(&ds.labels)
        .zip(&ds.noise)
        .map(|((p, &l), &n)| {
            let mut r: Vec<String> = p.0.iter().map(|v| format!("{v:?}")).collect();
            r.push(if l == NOISE_LABEL {
                "-1".into()
            } else {
                l.to_string()
            });
            r.push(u8::from(n).to_string());
            r
        });
    crate::report::write_csv(path, comment, &header, rows)
}

/// Reads a dataset written by [`write_dataset_csv`]. True centers are not
/// stored in the file and are passed in.
pub fn read_dataset_csv(path: &Path, true_centers: Vec<NaturalParam>) -> Result<SyntheticDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut ds = SyntheticDataset {
        points: Vec::new(),
        labels: Vec::new(),
        true_centers,
        noise: Vec::new(),
        radii: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let n = rec.len();
        if n < 3 {
            return Err(TemError::Serialize {
                path: path.into(),
                message: "row too short".into(),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| TemError::Serialize {
                path: path.into(),
                message: e.to_string(),
            })
        };
        let p = (0..n - 2)
            .map(|j| parse(&rec[j]))
            .collect::<Result<Vec<_>>>()?;
        let label = parse(&rec[n - 2])?;
        ds.points.push(NaturalParam(p));
        ds.labels.push(if label < 0.0 {
            NOISE_LABEL
        } else {
            label as usize
        });
        ds.noise.push(&rec[n - 1] == "1");
    }
    Ok(ds)
}

fn csv_err(path: &Path, e: csv::Error) -> TemError {
    TemError::Serialize {
        path: path.into(),
        message: e.to_string(),
    }
}

/// Writes one row per center: coordinates, side and t.
pub fn write_centers_csv(model: &ClusterModel, path: &Path, comment: Option<&str>) -> Result<()> {
    let dim = model.centers.first().map_or(0, |c| c.dim());
    let mut header: Vec<String> = (0..dim).map(|j| format!("x{j}")).collect();
    header.push("side".into());
    header.push("t".into());
    let rows = model.centers.iter().map(|c| {
        let mut r: Vec<String> = c.0.iter().map(|v| format!("{v:?}")).collect();
        r.push(model.side.name().into());
        r.push(format!("{:?}", model.t_used.t()));
        r
    });
    crate::report::write_csv(path, comment, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texp(t: f64) -> TemFamily {
        TemFamily::t_exponential(Temper::new(t).unwrap())
    }

    fn small_cfg(layout: Layout) -> GeneratorConfig {
        GeneratorConfig {
            layout,
            points_per_cluster: 20,
            imbalance_factor: 3,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn generation_is_deterministic_and_in_balls() {
        for t in [0.0, 1.0] {
            let f = texp(t);
            let a = generate_clusters(&f, 9, &small_cfg(Layout::Far3x3), 7).unwrap();
            let b = generate_clusters(&f, 9, &small_cfg(Layout::Far3x3), 7).unwrap();
            assert_eq!(a, b);
            let c = generate_clusters(&f, 9, &small_cfg(Layout::Far3x3), 8).unwrap();
            assert_ne!(a.points, c.points);
            for (p, &l) in a.points.iter().zip(&a.labels) {
                let d = conformal_vec(&f, &a.true_centers[l].0, &p.0, AxisFactor::PerAxis).unwrap();
                assert!(d <= a.radii[l] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn cluster_cardinalities() {
        let cfg = GeneratorConfig {
            points_per_cluster: 200,
            imbalance_factor: 20,
            ..GeneratorConfig::default()
        };
        let ds = generate_clusters(&texp(0.0), 9, &cfg, 1).unwrap();
        let mut sizes = ds.cluster_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![200, 200, 200, 200, 200, 200, 200, 200, 4000]);
        assert!(generate_clusters(&texp(0.0), 4, &cfg, 1).is_err());
    }

    #[test]
    fn noise_injection() {
        let f = texp(0.0);
        let ds = generate_clusters(&f, 9, &small_cfg(Layout::Close3x3), 3).unwrap();
        let vp = Viewport::default();
        assert_eq!(inject_noise(&ds, 0.0, &vp, 1).unwrap(), ds);
        let noisy = inject_noise(&ds, 0.1, &vp, 1).unwrap();
        let n = ds.len();
        assert_eq!(noisy.len(), n + (0.1 * n as f64).ceil() as usize);
        assert!(noisy.noise[n..].iter().all(|&b| b));
        assert!(noisy.labels[n..].iter().all(|&l| l == NOISE_LABEL));
        assert!(inject_noise(&ds, 1.0, &vp, 1).is_err());
    }

    #[test]
    fn stall_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = rejection_sample(1, &mut rng, [(-2.0, -1.0); 2], |_| Ok(false));
        assert!(matches!(
            r,
            Err(TemError::RejectionStall {
                rejections: MAX_CONSECUTIVE_REJECTIONS
            })
        ));
        let f = texp(0.5);
        let bad = sample_ball(
            &f,
            [-1.0, -1.0],
            0.0,
            Side::Left,
            &Viewport::default(),
            1,
            &mut rng,
        );
        assert!(matches!(bad, Err(TemError::Domain { .. })));
    }

    #[test]
    fn single_cluster_is_population_minimizer() {
        let f = texp(0.0);
        let ds = generate_clusters(&f, 9, &small_cfg(Layout::Far3x3), 11).unwrap();
        for side in [Side::Left, Side::Right] {
            let m = lloyd_cluster(&f, &ds.points, 1, side, 0, &LloydOptions::default()).unwrap();
            let pop = WeightedPopulation::uniform(ds.points.clone()).unwrap();
            let c = minimizer(&f, &pop, side).unwrap();
            assert_eq!(m.centers, vec![c]);
            assert!(m.converged);
        }
    }

    #[test]
    fn lloyd_loss_is_monotone() {
        for t in [0.0, 0.5, 1.0] {
            let f = texp(t);
            let ds = generate_clusters(&f, 9, &small_cfg(Layout::Close3x3), 5).unwrap();
            for seed in 0..5 {
                for side in [Side::Left, Side::Right] {
                    let m = lloyd_cluster(&f, &ds.points, 9, side, seed, &LloydOptions::default())
                        .unwrap();
                    assert!(
                        m.loss_is_monotone(1e-12),
                        "t={t} seed={seed} {:?}",
                        m.loss_trace
                    );
                    assert_eq!(m.fallbacks, 0);
                    let mut used = m.assignment.clone();
                    used.sort_unstable();
                    used.dedup();
                    assert_eq!(used.len(), m.centers.len());
                }
            }
        }
    }

    #[test]
    fn partition_comparison_ignores_renumbering() {
        assert!(same_partition(&[0, 0, 2, 1], &[1, 1, 0, 2]));
        assert!(!same_partition(&[0, 0, 1], &[0, 1, 1]));
    }

    fn model_with(assignment: Vec<usize>, centers: Vec<NaturalParam>) -> ClusterModel {
        ClusterModel {
            centers,
            assignment,
            loss_trace: vec![],
            t_used: Temper::classical(),
            side: Side::Left,
            iterations: 0,
            converged: true,
            fallbacks: 0,
        }
    }

    fn toy(labels: Vec<usize>, k: usize) -> SyntheticDataset {
        let n = labels.len();
        SyntheticDataset {
            points: (0..n)
                .map(|i| NaturalParam(vec![-1.0 - i as f64 * 0.01]))
                .collect(),
            noise: labels.iter().map(|&l| l == NOISE_LABEL).collect(),
            labels,
            true_centers: (0..k)
                .map(|i| NaturalParam(vec![-1.0 - i as f64]))
                .collect(),
            radii: vec![],
        }
    }

    #[test]
    fn perfect_clustering_metrics() {
        let f = texp(0.0);
        let ds = toy(vec![0, 0, 1, 1, NOISE_LABEL], 2);
        let m = model_with(vec![0, 0, 1, 1, 0], ds.true_centers.clone());
        let r = compute_metrics(&f, &m, &ds, AxisFactor::PerAxis).unwrap();
        assert_eq!((r.p_err, r.p_split, r.mean_bf), (0.0, 0.0, Some(0.0)));
        // relabeling noise does not change anything
        let m2 = model_with(vec![0, 0, 1, 1, 1], ds.true_centers.clone());
        assert_eq!(
            compute_metrics(&f, &m2, &ds, AxisFactor::PerAxis).unwrap(),
            r
        );
    }

    #[test]
    fn half_split_cluster() {
        let f = texp(0.0);
        let ds = toy(vec![0, 0, 1, 1], 2);
        let m = model_with(vec![0, 1, 1, 1], ds.true_centers.clone());
        let r = compute_metrics(&f, &m, &ds, AxisFactor::PerAxis).unwrap();
        assert_eq!(r.p_split, 0.5);
        assert_eq!(r.p_err, 0.25);
        assert!(r.per_cluster[0].split);
    }

    #[test]
    fn no_learned_centers() {
        let f = texp(0.0);
        let ds = toy(vec![], 2);
        let m = model_with(vec![], vec![]);
        let r = compute_metrics(&f, &m, &ds, AxisFactor::PerAxis).unwrap();
        assert_eq!((r.p_err, r.p_split, r.mean_bf), (1.0, 1.0, None));
    }

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[i][j] + go(cost, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost[0].len()])
    }

    #[test]
    fn greedy_against_exhaustive_on_toy() {
        let f = texp(0.0);
        let truth: Vec<NaturalParam> = [[-1.0, -1.0], [-2.0, -0.5], [-3.0, -2.0]]
            .iter()
            .map(|c| NaturalParam(c.to_vec()))
            .collect();
        let learned: Vec<NaturalParam> = [[-2.9, -2.1], [-1.1, -0.9], [-2.2, -0.6]]
            .iter()
            .map(|c| NaturalParam(c.to_vec()))
            .collect();
        let m = greedy_matching(&f, &truth, &learned, AxisFactor::PerAxis).unwrap();
        let greedy: f64 = m.iter().map(|x| x.2).sum();
        let cost: Vec<Vec<f64>> = truth
            .iter()
            .map(|a| {
                learned
                    .iter()
                    .map(|b| symmetrized(&f, a, b, AxisFactor::PerAxis).unwrap())
                    .collect()
            })
            .collect();
        assert!((greedy - brute_force(&cost)).abs() < 1e-12);
        let mut pairs: Vec<(usize, usize)> = m.iter().map(|x| (x.0, x.1)).collect();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn greedy_keeps_last_learned_center() {
        let f = texp(0.0);
        let truth: Vec<NaturalParam> = [[-1.0], [-2.0], [-3.0]]
            .iter()
            .map(|c| NaturalParam(c.to_vec()))
            .collect();
        let learned = vec![NaturalParam(vec![-2.1])];
        let m = greedy_matching(&f, &truth, &learned, AxisFactor::PerAxis).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|x| x.1 == 0));
    }

    #[test]
    fn dataset_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = texp(0.0);
        let ds = generate_clusters(&f, 9, &small_cfg(Layout::Far3x3), 2).unwrap();
        let ds = inject_noise(&ds, 0.1, &Viewport::default(), 3).unwrap();
        let path = dir.path().join("d.csv");
        write_dataset_csv(&ds, &path, Some("# test")).unwrap();
        let back = read_dataset_csv(&path, ds.true_centers.clone()).unwrap();
        assert_eq!(back.points, ds.points);
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.noise, ds.noise);
    }
}
