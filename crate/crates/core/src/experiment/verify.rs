//! Closed form against quadrature over the (t, θ) grids.

use std::path::PathBuf;

use rayon::prelude::*;

use super::{fmt_f, Experiment, ExperimentConfig, RunSummary};
use crate::deformed::Temper;
use crate::divergence::{
    conformal, conformal_closed_form, conformal_factor_mass_link, psi_bregman,
    tempered_f_divergence,
};
use crate::error::Result;
use crate::family::TemFamily;
use crate::quadrature::QuadratureOptions;
use crate::report::write_csv;

/// One identity check at one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub family: &'static str,
    pub t: f64,
    pub theta: f64,
    /// Second argument for divergence checks.
    pub theta_hat: Option<f64>,
    pub reference: f64,
    pub value: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set when a side of the check could not be evaluated.
    pub error: Option<String>,
}

struct Cell {
    family: &'static str,
    t: f64,
    theta: f64,
    theta_hat: Option<f64>,
}

impl Cell {
    fn row(&self, check: &'static str, tol: f64, r: Result<(f64, f64)>) -> CheckRow {
        let (reference, value, error) = match r {
            Ok((a, b)) => (a, b, None),
            Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
        };
        let discrepancy = (value - reference).abs();
        CheckRow {
            check,
            family: self.family,
            t: self.t,
            theta: self.theta,
            theta_hat: self.theta_hat,
            reference,
            value,
            discrepancy,
            tolerance: tol,
            // NaN fails here too
            passed: error.is_none() && discrepancy <= tol,
            error,
        }
    }
}

fn families(t: f64) -> Result<[(&'static str, TemFamily); 2]> {
    let tp = Temper::new(t)?;
    let q = QuadratureOptions::precise();
    Ok([
        (
            "t_exponential",
            TemFamily::t_exponential(tp).with_quadrature(q),
        ),
        (
            "t_gaussian_mu0",
            TemFamily::t_gaussian(tp).with_quadrature(q),
        ),
    ])
}

fn point_checks(
    name: &'static str,
    fam: &TemFamily,
    theta: f64,
    cfg: &ExperimentConfig,
) -> Vec<CheckRow> {
    let p = &cfg.verify;
    let off = p.cumulant_offset;
    let t = fam.temper().t();
    let cell = Cell {
        family: name,
        t,
        theta,
        theta_hat: None,
    };
    let mut rows = vec![
        cell.row(
            "normalization",
            p.tolerance,
            fam.co_density_mass_quadrature(theta).map(|m| (1.0, m)),
        ),
        cell.row(
            "cumulant",
            p.cumulant_tolerance,
            (|| Ok((fam.oracle().cumulant(theta)?, fam.cumulant(theta)? + off)))(),
        ),
        cell.row(
            "legendre",
            p.cumulant_tolerance,
            (|| {
                let h = fam.grad_cumulant(theta)?;
                Ok((theta * h, fam.cumulant(theta)? + off + fam.conjugate(h)?))
            })(),
        ),
        cell.row(
            "mass_closed_form",
            p.tolerance,
            (|| Ok((fam.total_mass_quadrature(theta)?, fam.total_mass(theta)?)))(),
        ),
        cell.row(
            "mass_conjugate",
            p.tolerance,
            (|| {
                Ok((
                    fam.total_mass_quadrature(theta)?,
                    fam.total_mass_from_conjugate(theta)?,
                ))
            })(),
        ),
        cell.row(
            "conformal_link",
            p.tolerance,
            conformal_factor_mass_link(fam, theta).map(|d| (0.0, d)),
        ),
    ];
    if fam.temper().is_classical() {
        rows.push(cell.row(
            "unit_mass",
            p.tolerance,
            fam.total_mass_quadrature(theta).map(|m| (1.0, m)),
        ));
    }
    rows
}

fn pair_checks(
    name: &'static str,
    fam: &TemFamily,
    theta_hat: f64,
    theta: f64,
    cfg: &ExperimentConfig,
) -> Vec<CheckRow> {
    let p = &cfg.verify;
    let cell = Cell {
        family: name,
        t: fam.temper().t(),
        theta,
        theta_hat: Some(theta_hat),
    };
    let b = || Ok(conformal(fam, theta_hat, theta)?.value);
    vec![
        cell.row(
            "divergence_closed_form",
            p.cumulant_tolerance,
            (|| Ok((b()?, conformal_closed_form(fam, theta_hat, theta)?)))(),
        ),
        cell.row(
            "f_divergence",
            p.divergence_tolerance,
            (|| Ok((b()?, tempered_f_divergence(fam, theta_hat, theta)?)))(),
        ),
        cell.row(
            "psi_swap",
            p.divergence_tolerance,
            (|| Ok((b()?, psi_bregman(fam, theta, theta_hat)?)))(),
        ),
    ]
}

/// All checks, in a fixed order.
pub fn verify_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let p = &cfg.verify;
    let mut jobs = Vec::new();
    for &t in cfg.t_list() {
        for (name, fam) in families(t)? {
            let thetas = if name == "t_exponential" {
                &p.thetas_exponential
            } else {
                &p.thetas_gaussian
            };
            for &th in thetas {
                jobs.push((name, fam, th, None));
            }
            for &(hat, th) in &p.pairs {
                jobs.push((name, fam, th, Some(hat)));
            }
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(name, fam, th, hat)| match hat {
            None => point_checks(name, &fam, th, cfg),
            Some(h) => pair_checks(name, &fam, h, th, cfg),
        })
        .collect::<Vec<_>>()
        .concat())
}

pub(super) fn run_verify(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let rows = verify_checks(cfg)?;
    let path: PathBuf = cfg.output_dir.join("verify.csv");
    let header: Vec<String> = [
        "check",
        "family",
        "t",
        "theta",
        "theta_hat",
        "reference",
        "value",
        "discrepancy",
        "tolerance",
        "pass",
        "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let csv_rows = rows.iter().map(|r| {
        vec![
            r.check.to_string(),
            r.family.to_string(),
            fmt_f(r.t),
            fmt_f(r.theta),
            r.theta_hat.map(fmt_f).unwrap_or_default(),
            fmt_f(r.reference),
            fmt_f(r.value),
            fmt_f(r.discrepancy),
            fmt_f(r.tolerance),
            r.passed.to_string(),
            r.error.clone().unwrap_or_default(),
        ]
    });
    write_csv(
        &path,
        Some(&cfg.csv_header(Experiment::Verify, "")),
        &header,
        csv_rows,
    )?;
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.passed).collect();
    let mut lines = vec![format!("{} checks, {} failed", rows.len(), failed.len())];
    for r in failed.iter().take(20) {
        lines.push(format!(
            "FAIL {} {} t={} theta={} theta_hat={:?} discrepancy={:e} {}",
            r.check,
            r.family,
            r.t,
            r.theta,
            r.theta_hat,
            r.discrepancy,
            r.error.as_deref().unwrap_or("")
        ));
    }
    Ok(RunSummary {
        experiment: Experiment::Verify,
        files: vec![path],
        failures: failed.len(),
        lines,
    })
}
