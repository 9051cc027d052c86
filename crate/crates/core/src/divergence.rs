//! Divergences between members of one TEM family.
//!
//! The conformal Bregman divergence
//! `B(a‖b) = [G(a) - G(b) - (a - b) ∇G(b)] / (1 + (1-t) G(a))`
//! is evaluated from the cumulant, with an independent closed-form route for
//! the two tabulated families. The density-level quantities (tempered
//! f-divergence, Tsallis-Bregman integral, mass link) are computed by
//! quadrature and serve as cross-checks.

use serde::{Deserialize, Serialize};

use crate::deformed::{exp_q, log_q, tsallis_bregman};
use crate::error::{Result, TemError};
use crate::family::{FamilyKind, SufficientStatistic, TemFamily};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceValue {
    pub value: f64,
    /// The Bregman part `D_G(a‖b)`.
    pub numerator: f64,
    /// The conformal factor `1 + (1-t) G(a)`.
    pub denominator: f64,
}

/// How the conformal factor is applied to multi-dimensional parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisFactor {
    /// Each axis is divided by its own factor before summing.
    #[default]
    PerAxis,
    /// The summed Bregman parts are divided by `1 + (1-t) Σ_j G(a_j)`.
    Joint,
}

/// Which argument of the divergence holds the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `B(center‖x)`.
    Left,
    /// `B(x‖center)`.
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Bregman divergence `D_G(a‖b)` of the cumulant.
pub fn bregman(fam: &TemFamily, a: f64, b: f64) -> Result<f64> {
    let ga = fam.cumulant(a)?;
    let gb = fam.cumulant(b)?;
    let hb = fam.grad_cumulant(b)?;
    Ok(ga - gb - (a - b) * hb)
}

/// Conformal Bregman divergence `B(a‖b)`.
pub fn conformal(fam: &TemFamily, a: f64, b: f64) -> Result<DivergenceValue> {
    let ga = fam.cumulant(a)?;
    let gb = fam.cumulant(b)?;
    let hb = fam.grad_cumulant(b)?;
    let numerator = ga - gb - (a - b) * hb;
    let denominator = 1.0 + fam.temper().gap() * ga;
    if !(denominator > 0.0) {
        return Err(TemError::ConformalFactorNonPositive {
            factor: denominator,
        });
    }
    Ok(DivergenceValue {
        value: numerator / denominator,
        numerator,
        denominator,
    })
}

/// `B(a‖b)` from the tabulated closed forms in the ratio `r = a / b`.
/// Only the two closed-form families have one.
pub fn conformal_closed_form(fam: &TemFamily, a: f64, b: f64) -> Result<f64> {
    fam.check_theta(a)?;
    fam.check_theta(b)?;
    let s = fam.temper().star();
    let r = a / b;
    match fam.kind() {
        FamilyKind::TExponential => Ok(s * (r.powf(2.0 - s) - (2.0 - s) * log_q(s, r)? - 1.0)),
        FamilyKind::TGaussianMu0 => {
            let rho = r.sqrt();
            Ok(0.5 * s * (rho.powf(3.0 - s) - (3.0 - s) * log_q(s, rho)? - 1.0))
        }
        FamilyKind::QuadratureGeneric(_) => Err(TemError::Config(
            "no closed-form divergence for quadrature families".into(),
        )),
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(TemError::Config(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(TemError::Empty("parameter vector"));
    }
    Ok(())
}

/// Sum of per-axis Bregman divergences.
pub fn bregman_vec(fam: &TemFamily, a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    a.iter().zip(b).map(|(&x, &y)| bregman(fam, x, y)).sum()
}

/// Multi-dimensional conformal divergence.
pub fn conformal_vec(fam: &TemFamily, a: &[f64], b: &[f64], factor: AxisFactor) -> Result<f64> {
    check_dims(a, b)?;
    match factor {
        AxisFactor::PerAxis => a
            .iter()
            .zip(b)
            .map(|(&x, &y)| conformal(fam, x, y).map(|d| d.value))
            .sum(),
        AxisFactor::Joint => {
            let mut num = 0.0;
            let mut g_sum = 0.0;
            for (&x, &y) in a.iter().zip(b) {
                let d = conformal(fam, x, y)?;
                num += d.numerator;
                g_sum += fam.cumulant(x)?;
            }
            let den = 1.0 + fam.temper().gap() * g_sum;
            if !(den > 0.0) {
                return Err(TemError::ConformalFactorNonPositive { factor: den });
            }
            Ok(num / den)
        }
    }
}

/// Divergence between a center and a point, with the center placed per `side`.
pub fn side_divergence(
    fam: &TemFamily,
    center: &[f64],
    x: &[f64],
    side: Side,
    factor: AxisFactor,
) -> Result<f64> {
    match side {
        Side::Left => conformal_vec(fam, center, x, factor),
        Side::Right => conformal_vec(fam, x, center, factor),
    }
}

/// Per-coordinate cumulant and gradient, cached for repeated divergences.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub theta: Vec<f64>,
    pub g: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Prepared {
    pub fn new(fam: &TemFamily, theta: &[f64]) -> Result<Self> {
        if theta.is_empty() {
            return Err(TemError::Empty("parameter vector"));
        }
        Ok(Prepared {
            theta: theta.to_vec(),
            g: theta
                .iter()
                .map(|&x| fam.cumulant(x))
                .collect::<Result<_>>()?,
            grad: theta
                .iter()
                .map(|&x| fam.grad_cumulant(x))
                .collect::<Result<_>>()?,
        })
    }
}

/// `B(a‖b)` from cached values; `gap` is `1 - t`. Agrees with [`conformal_vec`].
pub fn prepared_conformal(gap: f64, a: &Prepared, b: &Prepared, factor: AxisFactor) -> f64 {
    let n = a.theta.len();
    debug_assert_eq!(n, b.theta.len());
    match factor {
        AxisFactor::PerAxis => (0..n)
            .map(|j| {
                let num = a.g[j] - b.g[j] - (a.theta[j] - b.theta[j]) * b.grad[j];
                num / (1.0 + gap * a.g[j])
            })
            .sum(),
        AxisFactor::Joint => {
            let mut num = 0.0;
            let mut g_sum = 0.0;
            for j in 0..n {
                num += a.g[j] - b.g[j] - (a.theta[j] - b.theta[j]) * b.grad[j];
                g_sum += a.g[j];
            }
            num / (1.0 + gap * g_sum)
        }
    }
}

/// Cached divergence with the center placed per `side`.
pub fn prepared_side(
    gap: f64,
    center: &Prepared,
    x: &Prepared,
    side: Side,
    factor: AxisFactor,
) -> f64 {
    match side {
        Side::Left => prepared_conformal(gap, center, x, factor),
        Side::Right => prepared_conformal(gap, x, center, factor),
    }
}

fn union_support(fam: &TemFamily, a: f64, b: f64) -> Result<(f64, f64, Vec<f64>)> {
    let (la, ha) = fam.support(a)?;
    let (lb, hb) = fam.support(b)?;
    Ok((la.min(lb), ha.max(hb), vec![la, ha, lb, hb]))
}

// theta phi(x) - G, and the conformal factor, for the density of `theta`
struct DensityParts {
    theta: f64,
    g: f64,
    factor: f64,
}

impl DensityParts {
    fn new(fam: &TemFamily, theta: f64) -> Result<Self> {
        let g = fam.cumulant(theta)?;
        Ok(DensityParts {
            theta,
            g,
            factor: 1.0 + fam.temper().gap() * g,
        })
    }

    // exponent z with p = exp_t(z)
    fn z(&self, stat: SufficientStatistic, x: f64) -> f64 {
        (self.theta * stat.eval(x) - self.g) / self.factor
    }
}

/// Tempered f-divergence `F_t(a‖b) = ∫ -log_t(p_a ⊘_t p_b) p_b dξ`.
///
/// With `q = p^{1-t} = [1 + (1-t) z]_+` the integrand reduces to
/// `p_b · min(q_b - q_a, 1) / (1-t)`, so no negative powers of vanishing
/// densities are ever formed. At `t = 1` it is `p_b (z_b - z_a)`.
pub fn tempered_f_divergence(fam: &TemFamily, a: f64, b: f64) -> Result<f64> {
    let pa = DensityParts::new(fam, a)?;
    let pb = DensityParts::new(fam, b)?;
    let (lo, hi) = fam.support(b)?;
    let (_, ha) = fam.support(a)?;
    let stat = fam.statistic();
    let tp = fam.temper();
    let k = tp.gap();
    let breaks = match stat {
        SufficientStatistic::Linear => vec![ha],
        SufficientStatistic::Square => vec![-ha, ha],
    };
    let integrand = |x: f64| {
        if !(stat == SufficientStatistic::Square || x >= 0.0) {
            return 0.0;
        }
        let zb = pb.z(stat, x);
        let za = pa.z(stat, x);
        if tp.is_classical() {
            return zb.exp() * (zb - za);
        }
        let qb = (1.0 + k * zb).max(0.0);
        if qb == 0.0 {
            return 0.0;
        }
        let qa = (1.0 + k * za).max(0.0);
        let p = qb.powf(1.0 / k);
        p * (qb - qa).min(1.0) / k
    };
    fam.integrate_base(integrand, lo, hi, &breaks)
}

/// `∫ D_ψ(p_a(x), p_b(x)) dξ` for the Tsallis generator ψ_t.
/// Equals `B(b‖a)` (note the swapped arguments) when the support of `p_a`
/// lies inside that of `p_b`, i.e. `a <= b`, or when `t = 1`.
pub fn psi_bregman(fam: &TemFamily, a: f64, b: f64) -> Result<f64> {
    let (lo, hi, breaks) = union_support(fam, a, b)?;
    let tp = fam.temper();
    let ga = fam.cumulant(a)?;
    let gb = fam.cumulant(b)?;
    let stat = fam.statistic();
    let dens = |theta: f64, g: f64, x: f64| {
        if stat == SufficientStatistic::Linear && x < 0.0 {
            return 0.0;
        }
        let z = (theta * stat.eval(x) - g) / (1.0 + tp.gap() * g);
        crate::deformed::exp_t(tp, z)
    };
    let integrand = |x: f64| {
        let u = dens(a, ga, x);
        let v = dens(b, gb, x);
        tsallis_bregman(tp, u, v).unwrap_or(f64::NAN)
    };
    fam.integrate_base(integrand, lo, hi, &breaks)
}

/// Relative discrepancy between `D_t(θ)^{1/(1-t*)}` and
/// `∫ exp_{t*}(θ φ(x) / t*) dξ`.
pub fn conformal_factor_mass_link(fam: &TemFamily, theta: f64) -> Result<f64> {
    let tp = fam.temper();
    let g = fam.cumulant(theta)?;
    let lhs = if tp.is_classical() {
        g.exp()
    } else {
        let d = 1.0 + tp.gap() * g;
        if !(d > 0.0) {
            return Err(TemError::ConformalFactorNonPositive { factor: d });
        }
        (d.ln() / (1.0 - tp.star())).exp()
    };
    let s = tp.star();
    let stat = fam.statistic();
    let (lo, hi) = fam.support(theta)?;
    let rhs = fam.integrate_base(|x| exp_q(s, theta * stat.eval(x) / s), lo, hi, &[])?;
    Ok((lhs - rhs).abs() / rhs.abs())
}
