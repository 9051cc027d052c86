//! Frozen raster outputs. Regenerate with `TEMCLU_BLESS=1 cargo test --test golden`
//! after an intentional change.

use std::fs;
use std::path::PathBuf;

use temclu::diagram::{render_voronoi, write_raster, RasterMeta, Viewport, PALETTE};
use temclu::divergence::Side;
use temclu::{TemFamily, Temper};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn check(name: &str, t: f64, side: Side) {
    let fam = TemFamily::t_exponential(Temper::new(t).unwrap());
    let vp = Viewport::square(-4.0, -0.1, 16);
    let sites = vec![[-3.0, -1.0], [-1.0, -2.5]];
    let grid = render_voronoi(&fam, &sites, side, &vp).unwrap();
    let meta = RasterMeta {
        kind: "voronoi".into(),
        family: fam.descriptor(None),
        side,
        viewport: vp,
        sites,
        radius_px: None,
        radius: None,
        palette: PALETTE.to_vec(),
    };
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join(name);
    let sidecar = write_raster(&grid, &meta, &out).unwrap();
    let ppm = fs::read(&out).unwrap();
    let json = fs::read(&sidecar).unwrap();
    let gp = golden(name);
    let gj = gp.with_extension("json");
    if std::env::var("TEMCLU_BLESS").is_ok_and(|v| v == "1") {
        fs::write(&gp, &ppm).unwrap();
        fs::write(&gj, &json).unwrap();
    }
    assert_eq!(
        ppm,
        fs::read(&gp).unwrap(),
        "{name} differs from its golden file"
    );
    assert_eq!(
        json,
        fs::read(&gj).unwrap(),
        "{name} sidecar differs from its golden file"
    );
    // the sidecar parses back to the same metadata
    let back: RasterMeta = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, meta);
}

#[test]
fn two_site_voronoi_t0_right() {
    check("voronoi16_t0_right.ppm", 0.0, Side::Right);
}

#[test]
fn two_site_voronoi_t1_left() {
    check("voronoi16_t1_left.ppm", 1.0, Side::Left);
}
