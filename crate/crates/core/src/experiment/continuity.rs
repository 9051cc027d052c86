//! `|G_t(θ) - G_1(θ)|` as t approaches 1.

use super::{fmt_f, Experiment, ExperimentConfig, RunSummary};
use crate::deformed::Temper;
use crate::error::Result;
use crate::family::TemFamily;
use crate::report::write_csv;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityRow {
    pub family: &'static str,
    pub theta: f64,
    /// `(t, |G_t - G_1|)` in the order of the configured t values.
    pub gaps: Vec<(f64, f64)>,
    /// Gap at t = 1 itself.
    pub classical_gap: f64,
    pub decreasing: bool,
    pub final_ok: bool,
}

impl ContinuityRow {
    /// Every gap is exactly zero, so strict decrease is vacuous.
    pub fn identically_zero(&self) -> bool {
        self.gaps.iter().all(|g| g.1 == 0.0)
    }

    pub fn passed(&self) -> bool {
        (self.decreasing || self.identically_zero()) && self.final_ok && self.classical_gap == 0.0
    }
}

pub fn continuity_table(cfg: &ExperimentConfig) -> Result<Vec<ContinuityRow>> {
    let p = &cfg.continuity;
    let ts = cfg.t_list();
    let mut out = Vec::new();
    let build = |name: &str, t: f64| -> Result<TemFamily> {
        let tp = Temper::new(t)?;
        Ok(if name == "t_exponential" {
            TemFamily::t_exponential(tp)
        } else {
            TemFamily::t_gaussian(tp)
        })
    };
    for (name, thetas) in [
        ("t_exponential", &p.thetas_exponential),
        ("t_gaussian_mu0", &p.thetas_gaussian),
    ] {
        let classical = build(name, 1.0)?;
        for &theta in thetas {
            let g1 = classical.cumulant(theta)?;
            let gaps = ts
                .iter()
                .map(|&t| Ok((t, (build(name, t)?.cumulant(theta)? - g1).abs())))
                .collect::<Result<Vec<_>>>()?;
            let decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1);
            let final_ok = gaps.last().is_some_and(|g| g.1 < p.final_tolerance);
            out.push(ContinuityRow {
                family: name,
                theta,
                gaps,
                classical_gap: (classical.cumulant(theta)? - g1).abs(),
                decreasing,
                final_ok,
            });
        }
    }
    Ok(out)
}

pub(super) fn run_continuity(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let rows = continuity_table(cfg)?;
    let path = cfg.output_dir.join("continuity.csv");
    let mut header: Vec<String> = vec!["family".into(), "theta".into()];
    header.extend(cfg.t_list().iter().map(|t| format!("gap_t={}", fmt_f(*t))));
    header.extend(["gap_t=1.0", "decreasing", "final_below_tolerance", "pass"].map(String::from));
    let csv_rows = rows.iter().map(|r| {
        let mut v = vec![r.family.to_string(), fmt_f(r.theta)];
        v.extend(r.gaps.iter().map(|g| fmt_f(g.1)));
        v.push(fmt_f(r.classical_gap));
        v.push(r.decreasing.to_string());
        v.push(r.final_ok.to_string());
        v.push(r.passed().to_string());
        v
    });
    write_csv(
        &path,
        Some(&cfg.csv_header(Experiment::Continuity, "")),
        &header,
        csv_rows,
    )?;
    let failures = rows.iter().filter(|r| !r.passed()).count();
    let mut lines = vec![format!("{} rows, {} failed", rows.len(), failures)];
    for r in rows.iter().filter(|r| r.identically_zero()) {
        lines.push(format!(
            "{} theta={}: gap identically zero",
            r.family, r.theta
        ));
    }
    Ok(RunSummary {
        experiment: Experiment::Continuity,
        files: vec![path],
        failures,
        lines,
    })
}
