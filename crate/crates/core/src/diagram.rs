//! Rasterized divergence balls and left/right Voronoi diagrams over a
//! rectangle of the negative quadrant.
//!
//! Pixel `(i, j)` samples the point `(x0 + i dx, y1 - j dy)` with
//! `dx = (x1 - x0) / (width - 1)`, so both corners are sampled and doubling
//! the resolution (`2w - 1` columns) keeps every old sample point.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{side_divergence, AxisFactor, Side};
use crate::error::{Result, TemError};
use crate::family::{FamilyDescriptor, TemFamily};

/// Fixed palette; index 0 is the background.
pub const PALETTE: [[u8; 3]; 12] = [
    [255, 255, 255],
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
    [188, 189, 34],
    [23, 190, 207],
    [0, 0, 0],
];

const MONOTONE_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width_px: usize,
    pub height_px: usize,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport::square(-4.0, -0.1, 256)
    }
}

impl Viewport {
    pub fn square(lo: f64, hi: f64, px: usize) -> Self {
        Viewport {
            x_min: lo,
            x_max: hi,
            y_min: lo,
            y_max: hi,
            width_px: px,
            height_px: px,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.x_min < self.x_max
            && self.y_min < self.y_max
            && self.x_max < 0.0
            && self.y_max < 0.0
            && self.x_min.is_finite()
            && self.y_min.is_finite()
            && self.width_px >= 2
            && self.height_px >= 2;
        if ok {
            Ok(())
        } else {
            Err(TemError::Config(format!("invalid viewport {self:?}")))
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.width_px - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.height_px - 1) as f64
    }

    /// Sample point of pixel column `i`, row `j` (row 0 at the top).
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.x_min + i as f64 * self.dx(),
            self.y_max - j as f64 * self.dy(),
        ]
    }

    /// Continuous pixel coordinates of a point.
    pub fn to_pixel(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.x_min) / self.dx(),
            (self.y_max - p[1]) / self.dy(),
        ]
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    /// Nearest pixel to a point inside the viewport.
    pub fn nearest_pixel(&self, p: [f64; 2]) -> Result<(usize, usize)> {
        if !self.contains(p) {
            return Err(TemError::OutsideViewport { x: p[0], y: p[1] });
        }
        let q = self.to_pixel(p);
        let i = (q[0].round() as usize).min(self.width_px - 1);
        let j = (q[1].round() as usize).min(self.height_px - 1);
        Ok((i, j))
    }

    /// Same rectangle at `2w - 1` by `2h - 1` pixels.
    pub fn refined(&self) -> Self {
        Viewport {
            width_px: 2 * self.width_px - 1,
            height_px: 2 * self.height_px - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterGrid {
    pub width: usize,
    pub height: usize,
    /// Row-major labels; 0 is background.
    pub cells: Vec<u8>,
}

impl RasterGrid {
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[j * self.width + i]
    }

    pub fn count(&self, label: u8) -> usize {
        self.cells.iter().filter(|&&c| c == label).count()
    }

    /// Pixels whose right or lower neighbour carries another label, as
    /// midpoints between the two samples in pixel coordinates.
    pub fn boundary_midpoints(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for j in 0..self.height {
            for i in 0..self.width {
                let l = self.get(i, j);
                if i + 1 < self.width && self.get(i + 1, j) != l {
                    out.push([i as f64 + 0.5, j as f64]);
                }
                if j + 1 < self.height && self.get(i, j + 1) != l {
                    out.push([i as f64, j as f64 + 0.5]);
                }
            }
        }
        out
    }
}

/// Largest orthogonal distance of `pts` to their total-least-squares line.
pub fn line_fit_residual(pts: &[[f64; 2]]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // normal of the best line is the eigenvector of the smaller eigenvalue
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (nx, ny) = (-angle.sin(), angle.cos());
    pts.iter()
        .map(|p| ((p[0] - mx) * nx + (p[1] - my) * ny).abs())
        .fold(0.0, f64::max)
}

/// Whether all points lie within `tol` of one straight line.
pub fn is_collinear(pts: &[[f64; 2]], tol: f64) -> bool {
    line_fit_residual(pts) <= tol
}

fn div2(fam: &TemFamily, center: [f64; 2], x: [f64; 2], side: Side) -> Result<f64> {
    side_divergence(fam, &center, &x, side, AxisFactor::PerAxis)
}

/// Divergence threshold whose ball reaches `radius_px` pixels along +x from
/// the center. Also checks that the divergence grows along that ray.
pub fn calibrate_radius(
    fam: &TemFamily,
    center: [f64; 2],
    radius_px: f64,
    side: Side,
    vp: &Viewport,
) -> Result<f64> {
    vp.validate()?;
    if !vp.contains(center) {
        return Err(TemError::OutsideViewport {
            x: center[0],
            y: center[1],
        });
    }
    if !(radius_px >= 0.0 && radius_px.is_finite()) {
        return Err(TemError::Calibration(format!("radius {radius_px} px")));
    }
    if radius_px == 0.0 {
        return Ok(0.0);
    }
    let reach = center[0] + radius_px * vp.dx();
    if reach >= -crate::family::DOMAIN_MARGIN {
        return Err(TemError::Calibration(format!(
            "ball edge x = {reach} leaves the natural domain"
        )));
    }
    let mut last = 0.0;
    for k in 1..=MONOTONE_SAMPLES {
        let x = center[0] + (reach - center[0]) * k as f64 / MONOTONE_SAMPLES as f64;
        let d = div2(fam, center, [x, center[1]], side)?;
        if d < last {
            return Err(TemError::Calibration(format!(
                "divergence decreases along +x at x = {x}"
            )));
        }
        last = d;
    }
    Ok(last)
}

/// Ball membership: label 1 inside, 0 outside. The pixel nearest the center
/// is always marked.
pub fn render_ball(
    fam: &TemFamily,
    center: [f64; 2],
    radius_px: f64,
    side: Side,
    vp: &Viewport,
) -> Result<(RasterGrid, f64)> {
    let r = calibrate_radius(fam, center, radius_px, side, vp)?;
    let (ci, cj) = vp.nearest_pixel(center)?;
    let cells = render(vp, |p| Ok(u8::from(div2(fam, center, p, side)? <= r)))?;
    let mut grid = RasterGrid {
        width: vp.width_px,
        height: vp.height_px,
        cells,
    };
    grid.cells[cj * vp.width_px + ci] = 1;
    Ok((grid, r))
}

/// Voronoi labels `1..=n`, ties to the lowest site index.
pub fn render_voronoi(
    fam: &TemFamily,
    sites: &[[f64; 2]],
    side: Side,
    vp: &Viewport,
) -> Result<RasterGrid> {
    vp.validate()?;
    if sites.is_empty() {
        return Err(TemError::Empty("voronoi sites"));
    }
    if sites.len() > 255 {
        return Err(TemError::Config("at most 255 voronoi sites".into()));
    }
    let cells = render(vp, |p| {
        let mut best = (f64::INFINITY, 0u8);
        for (k, s) in sites.iter().enumerate() {
            let d = div2(fam, *s, p, side)?;
            if d < best.0 {
                best = (d, k as u8 + 1);
            }
        }
        Ok(best.1)
    })?;
    Ok(RasterGrid {
        width: vp.width_px,
        height: vp.height_px,
        cells,
    })
}

fn render<F>(vp: &Viewport, label: F) -> Result<Vec<u8>>
where
    F: Fn([f64; 2]) -> Result<u8> + Sync,
{
    vp.validate()?;
    let rows: Vec<Vec<u8>> = (0..vp.height_px)
        .into_par_iter()
        .map(|j| {
            (0..vp.width_px)
                .map(|i| label(vp.point(i, j)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.concat())
}

/// Sidecar metadata written next to each raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    pub kind: String,
    pub family: FamilyDescriptor,
    pub side: Side,
    pub viewport: Viewport,
    pub sites: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub palette: Vec<[u8; 3]>,
}

fn color(label: u8) -> [u8; 3] {
    if label == 0 {
        PALETTE[0]
    } else {
        PALETTE[1 + (label as usize - 1) % (PALETTE.len() - 1)]
    }
}

/// Encodes the grid as binary PPM (P6).
pub fn encode_ppm(grid: &RasterGrid) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    out.reserve(grid.cells.len() * 3);
    for &c in &grid.cells {
        out.extend_from_slice(&color(c));
    }
    out
}

/// Writes `path` (PPM) and the sidecar `path.json`. Returns the sidecar path.
pub fn write_raster(grid: &RasterGrid, meta: &RasterMeta, path: &Path) -> Result<PathBuf> {
    write_bytes(path, &encode_ppm(grid))?;
    let side_path = path.with_extension("json");
    let json = serde_json::to_string_pretty(meta).map_err(|e| TemError::Serialize {
        path: side_path.clone(),
        message: e.to_string(),
    })?;
    write_bytes(&side_path, format!("{json}\n").as_bytes())?;
    Ok(side_path)
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| TemError::io(dir, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| TemError::io(path, e))?;
    f.write_all(bytes).map_err(|e| TemError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformed::Temper;

    fn texp(t: f64) -> TemFamily {
        TemFamily::t_exponential(Temper::new(t).unwrap())
    }

    fn small() -> Viewport {
        Viewport::square(-4.0, -0.1, 40)
    }

    #[test]
    fn pixel_mapping_hits_corners() {
        let vp = small();
        assert_eq!(vp.point(0, 0), [-4.0, -0.1]);
        let p = vp.point(39, 39);
        assert!((p[0] + 0.1).abs() < 1e-12 && (p[1] + 4.0).abs() < 1e-12);
        let q = vp.to_pixel(vp.point(7, 11));
        assert!((q[0] - 7.0).abs() < 1e-9 && (q[1] - 11.0).abs() < 1e-9);
        assert!(vp.nearest_pixel([0.5, -1.0]).is_err());
    }

    #[test]
    fn zero_radius_marks_only_the_center() {
        let vp = small();
        let c = vp.point(20, 20);
        let (g, r) = render_ball(&texp(0.0), c, 0.0, Side::Left, &vp).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(g.count(1), 1);
        assert_eq!(g.get(20, 20), 1);
    }

    #[test]
    fn ball_reaches_calibrated_pixel() {
        let vp = small();
        let c = vp.point(15, 20);
        for side in [Side::Left, Side::Right] {
            let (g, _) = render_ball(&texp(0.5), c, 5.0, side, &vp).unwrap();
            assert_eq!(g.get(20, 20), 1);
            assert_eq!(g.get(21, 20), 0);
        }
    }

    #[test]
    fn balls_nest() {
        let vp = small();
        let c = vp.point(18, 18);
        for t in [0.0, 1.0] {
            let (a, _) = render_ball(&texp(t), c, 3.0, Side::Left, &vp).unwrap();
            let (b, _) = render_ball(&texp(t), c, 7.0, Side::Left, &vp).unwrap();
            assert!(a.cells.iter().zip(&b.cells).all(|(x, y)| *x <= *y));
            assert!(b.count(1) > a.count(1));
        }
    }

    #[test]
    fn classical_ball_matches_direct_itakura_saito() {
        let vp = small();
        let c = vp.point(18, 22);
        let (g, r) = render_ball(&texp(1.0), c, 6.0, Side::Left, &vp).unwrap();
        let is = |a: f64, b: f64| a / b - (a / b).ln() - 1.0;
        for j in 0..vp.height_px {
            for i in 0..vp.width_px {
                let p = vp.point(i, j);
                let d = is(c[0], p[0]) + is(c[1], p[1]);
                // skip the center and pixels sitting on the boundary to rounding
                if (i, j) != (18, 22) && (d - r).abs() > 1e-12 {
                    assert_eq!(g.get(i, j), u8::from(d <= r), "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn tempered_ball_shape_differs() {
        let vp = small();
        let c = vp.point(18, 18);
        let (a, _) = render_ball(&texp(0.0), c, 8.0, Side::Left, &vp).unwrap();
        let (b, _) = render_ball(&texp(1.0), c, 8.0, Side::Left, &vp).unwrap();
        assert!(a.cells.iter().zip(&b.cells).any(|(x, y)| x != y));
    }

    #[test]
    fn calibration_rejects_leaving_domain() {
        let vp = small();
        let c = vp.point(38, 10);
        assert!(matches!(
            calibrate_radius(&texp(0.0), c, 10.0, Side::Left, &vp),
            Err(TemError::Calibration(_))
        ));
        assert!(render_ball(&texp(0.0), [1.0, -1.0], 2.0, Side::Left, &vp).is_err());
    }

    #[test]
    fn single_site_is_uniform() {
        let vp = small();
        let g = render_voronoi(&texp(0.5), &[[-2.0, -2.0]], Side::Right, &vp).unwrap();
        assert_eq!(g.count(1), g.cells.len());
        assert!(render_voronoi(&texp(0.5), &[], Side::Right, &vp).is_err());
    }

    #[test]
    fn refinement_keeps_labels() {
        let vp = Viewport::square(-4.0, -0.1, 17);
        let sites = [[-3.0, -1.0], [-1.0, -2.5], [-0.5, -0.5]];
        let f = texp(0.0);
        let a = render_voronoi(&f, &sites, Side::Left, &vp).unwrap();
        let fine = vp.refined();
        let b = render_voronoi(&f, &sites, Side::Left, &fine).unwrap();
        for j in 0..vp.height_px {
            for i in 0..vp.width_px {
                assert_eq!(a.get(i, j), b.get(2 * i, 2 * j));
            }
        }
    }

    #[test]
    fn left_and_right_differ() {
        let vp = small();
        let sites = [[-3.0, -1.0], [-1.0, -2.5], [-0.5, -0.5]];
        let f = texp(0.0);
        let l = render_voronoi(&f, &sites, Side::Left, &vp).unwrap();
        let r = render_voronoi(&f, &sites, Side::Right, &vp).unwrap();
        assert_ne!(l, r);
    }

    #[test]
    fn collinearity_helper() {
        let line: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 0.5 * i as f64 + 1.0]).collect();
        assert!(is_collinear(&line, 1e-9));
        let arc: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 0.05 * (i * i) as f64]).collect();
        assert!(!is_collinear(&arc, 1.0));
    }

    #[test]
    fn ppm_layout_and_background() {
        let g = RasterGrid {
            width: 2,
            height: 1,
            cells: vec![0, 13],
        };
        let bytes = encode_ppm(&g);
        let header = b"P6\n2 1\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..header.len() + 3], &PALETTE[0]);
        assert_eq!(&bytes[header.len() + 3..], &PALETTE[2]);
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vp = Viewport::square(-4.0, -0.1, 16);
        let g =
            render_voronoi(&texp(0.0), &[[-3.0, -1.0], [-1.0, -3.0]], Side::Right, &vp).unwrap();
        let meta = RasterMeta {
            kind: "voronoi".into(),
            family: texp(0.0).descriptor(None),
            side: Side::Right,
            viewport: vp,
            sites: vec![[-3.0, -1.0], [-1.0, -3.0]],
            radius_px: None,
            radius: None,
            palette: PALETTE.to_vec(),
        };
        let path = dir.path().join("v.ppm");
        let side = write_raster(&g, &meta, &path).unwrap();
        let back: RasterMeta =
            serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(back, meta);
        assert_eq!(std::fs::read(&path).unwrap(), encode_ppm(&g));
    }
}
