//! One-dimensional tempered exponential measure (TEM) families.
//!
//! A TEM with natural parameter `theta` has the unnormalized density
//! `p(x) = exp_t(theta * phi(x) ⊖_t G_t(theta))` with respect to a base
//! measure `xi`. The cumulant `G_t` is chosen so that the co-density
//! `p^{1/t*}` integrates to one.
//!
//! Two families have closed forms:
//!
//! * [`FamilyKind::TExponential`]: `phi(x) = x` on `x >= 0`, base measure
//!   `(3 - 2t) dx`. The constant density of the base measure is what makes
//!   `G_t(theta) = -log_{2-t}((-theta)^{1/(2-t)})`, with its gradient, conjugate
//!   and source parametrization `theta = -lambda / (3 - 2t)`, mutually
//!   consistent with the defining integral.
//! * [`FamilyKind::TGaussianMu0`]: `phi(x) = x^2` on the real line, Lebesgue
//!   base measure, `G_t(theta) = (log_t)*(c_{t*} t*^{3/2} / sqrt(-theta))`.
//!
//! [`FamilyKind::QuadratureGeneric`] evaluates every quantity from the
//! defining integrals and is used as an independent oracle for the closed
//! forms. Multi-dimensional parameters are handled per axis by the callers.

use serde::{Deserialize, Serialize};

use crate::deformed::{exp_t, exp_t_star, log_q, log_t_star, Temper};
use crate::error::{Result, TemError};
use crate::quadrature::{integrate_with_breaks, QuadratureOptions};

/// Natural parameters must stay at least this far below zero.
pub const DOMAIN_MARGIN: f64 = 1e-12;

/// Fraction of the peak below which classical (`t = 1`) tails are truncated.
const TAIL_CUTOFF: f64 = 1e-16;

/// Natural-parameter coordinates, one per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalParam(pub Vec<f64>);

/// Expectation-parameter coordinates, one per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationParam(pub Vec<f64>);

impl NaturalParam {
    pub fn scalar(theta: f64) -> Self {
        NaturalParam(vec![theta])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for NaturalParam {
    fn from(v: Vec<f64>) -> Self {
        NaturalParam(v)
    }
}

impl ExpectationParam {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Sufficient statistic of a quadrature-backed family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SufficientStatistic {
    /// `phi(x) = x` on `[0, inf)`.
    Linear,
    /// `phi(x) = x^2` on the real line.
    Square,
}

impl SufficientStatistic {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            SufficientStatistic::Linear => x,
            SufficientStatistic::Square => x * x,
        }
    }

    #[inline]
    fn in_domain(self, x: f64) -> bool {
        match self {
            SufficientStatistic::Linear => x >= 0.0,
            SufficientStatistic::Square => true,
        }
    }

    /// The set `{x : phi(x) <= level}` as an interval.
    fn sublevel(self, level: f64) -> (f64, f64) {
        match self {
            SufficientStatistic::Linear => (0.0, level),
            SufficientStatistic::Square => {
                let r = level.sqrt();
                (-r, r)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenericSpec {
    pub statistic: SufficientStatistic,
    /// Constant density of the base measure with respect to Lebesgue measure.
    pub base_measure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    TExponential,
    TGaussianMu0,
    QuadratureGeneric(GenericSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindTag {
    TExponential,
    TGaussianMu0,
    QuadratureGeneric,
}

/// Serializable family description `{kind, t, source_param}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    pub kind: KindTag,
    pub t: f64,
    #[serde(default)]
    pub source_param: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<SufficientStatistic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_measure: Option<f64>,
}

impl FamilyDescriptor {
    pub fn t_exponential(t: f64) -> Self {
        FamilyDescriptor {
            kind: KindTag::TExponential,
            t,
            source_param: None,
            statistic: None,
            base_measure: None,
        }
    }

    pub fn build(&self) -> Result<TemFamily> {
        let tp = Temper::new(self.t)?;
        Ok(match self.kind {
            KindTag::TExponential => TemFamily::t_exponential(tp),
            KindTag::TGaussianMu0 => TemFamily::t_gaussian(tp),
            KindTag::QuadratureGeneric => TemFamily::quadrature_generic(
                tp,
                self.statistic.unwrap_or(SufficientStatistic::Linear),
                self.base_measure.unwrap_or(1.0),
            ),
        })
    }

    /// Same descriptor at another temper.
    pub fn with_t(&self, t: f64) -> Self {
        FamilyDescriptor { t, ..self.clone() }
    }
}

/// A 1D TEM family at a fixed temper. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemFamily {
    kind: FamilyKind,
    temper: Temper,
    quad: QuadratureOptions,
    // c_{t*} sqrt(t*) for the t-Gaussian, unused otherwise
    gauss_k: f64,
    // c_{t*} for the t-Gaussian, unused otherwise
    gauss_c: f64,
}

impl TemFamily {
    pub fn new(kind: FamilyKind, temper: Temper) -> Self {
        let (gauss_c, gauss_k) = if kind == FamilyKind::TGaussianMu0 {
            let c = c_const(temper.star());
            (c, c * temper.star().sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        TemFamily {
            kind,
            temper,
            quad: QuadratureOptions::default(),
            gauss_k,
            gauss_c,
        }
    }

    pub fn t_exponential(temper: Temper) -> Self {
        Self::new(FamilyKind::TExponential, temper)
    }

    pub fn t_gaussian(temper: Temper) -> Self {
        Self::new(FamilyKind::TGaussianMu0, temper)
    }

    pub fn quadrature_generic(
        temper: Temper,
        statistic: SufficientStatistic,
        base_measure: f64,
    ) -> Self {
        Self::new(
            FamilyKind::QuadratureGeneric(GenericSpec {
                statistic,
                base_measure,
            }),
            temper,
        )
    }

    pub fn with_quadrature(mut self, quad: QuadratureOptions) -> Self {
        self.quad = quad;
        self
    }

    /// The quadrature-backed family with the same statistic and base
    /// measure. Shares no closed-form code with `self`.
    pub fn oracle(&self) -> TemFamily {
        TemFamily::quadrature_generic(self.temper, self.statistic(), self.base_measure())
            .with_quadrature(QuadratureOptions::precise())
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn temper(&self) -> Temper {
        self.temper
    }

    pub fn quadrature(&self) -> &QuadratureOptions {
        &self.quad
    }

    pub fn descriptor(&self, source_param: Option<f64>) -> FamilyDescriptor {
        let (kind, statistic, base_measure) = match self.kind {
            FamilyKind::TExponential => (KindTag::TExponential, None, None),
            FamilyKind::TGaussianMu0 => (KindTag::TGaussianMu0, None, None),
            FamilyKind::QuadratureGeneric(g) => (
                KindTag::QuadratureGeneric,
                Some(g.statistic),
                Some(g.base_measure),
            ),
        };
        FamilyDescriptor {
            kind,
            t: self.temper.t(),
            source_param,
            statistic,
            base_measure,
        }
    }

    pub fn statistic(&self) -> SufficientStatistic {
        match self.kind {
            FamilyKind::TExponential => SufficientStatistic::Linear,
            FamilyKind::TGaussianMu0 => SufficientStatistic::Square,
            FamilyKind::QuadratureGeneric(g) => g.statistic,
        }
    }

    pub fn base_measure(&self) -> f64 {
        match self.kind {
            FamilyKind::TExponential => 3.0 - 2.0 * self.temper.t(),
            FamilyKind::TGaussianMu0 => 1.0,
            FamilyKind::QuadratureGeneric(g) => g.base_measure,
        }
    }

    pub fn check_theta(&self, theta: f64) -> Result<()> {
        if theta.is_finite() && theta < -DOMAIN_MARGIN {
            Ok(())
        } else {
            Err(TemError::domain("natural parameter", theta))
        }
    }

    /// Interval outside which the density vanishes, for `theta < 0`.
    ///
    /// For `t < 1` this is `{x : 1 + (1-t) theta phi(x) > 0}`. For `t = 1` the
    /// support is unbounded and is truncated where `exp(theta phi(x))` falls
    /// below `1e-16` of its peak.
    pub fn support(&self, theta: f64) -> Result<(f64, f64)> {
        self.check_theta(theta)?;
        let level = if self.temper.is_classical() {
            -TAIL_CUTOFF.ln() / -theta
        } else {
            1.0 / (self.temper.gap() * -theta)
        };
        Ok(self.statistic().sublevel(level))
    }

    /// Cumulant `G_t(theta)`.
    pub fn cumulant(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let tp = self.temper;
        match self.kind {
            FamilyKind::TExponential => {
                let u = -theta;
                let q = 2.0 - tp.t();
                Ok(-log_q(q, u.powf(1.0 / q))?)
            }
            FamilyKind::TGaussianMu0 => {
                let s = tp.star();
                Ok(s * log_q(s, self.gauss_k / (-theta).sqrt())?)
            }
            FamilyKind::QuadratureGeneric(_) => {
                let mass = self.dual_partition(theta)?;
                log_t_star(tp, mass)
            }
        }
    }

    /// `∫ (exp_t)*(theta phi(x)) dxi` by quadrature.
    fn dual_partition(&self, theta: f64) -> Result<f64> {
        let (lo, hi) = self.support(theta)?;
        let tp = self.temper;
        let stat = self.statistic();
        let w = self.base_measure();
        let r = integrate_with_breaks(
            |x| w * exp_t_star(tp, theta * stat.eval(x)),
            lo,
            hi,
            &self.peak_breaks(),
            &self.quad,
        )?;
        Ok(r.value)
    }

    fn peak_breaks(&self) -> Vec<f64> {
        match self.statistic() {
            SufficientStatistic::Linear => vec![],
            SufficientStatistic::Square => vec![0.0],
        }
    }

    /// `1 + (1-t) G_t(theta)`, the conformal factor.
    pub fn conformal_factor(&self, theta: f64) -> Result<f64> {
        Ok(1.0 + self.temper.gap() * self.cumulant(theta)?)
    }

    /// Expectation parameter `∇G_t(theta)`.
    pub fn grad_cumulant(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let s = self.temper.star();
        match self.kind {
            FamilyKind::TExponential => Ok(s * (-theta).powf(-(2.0 - s))),
            FamilyKind::TGaussianMu0 => {
                Ok(0.5 * s * self.gauss_k.powf(1.0 - s) * (-theta).powf(-(3.0 - s) / 2.0))
            }
            FamilyKind::QuadratureGeneric(_) => {
                let g = self.cumulant(theta)?;
                let stat = self.statistic();
                self.integrate_density(theta, g, |x, p| stat.eval(x) * p)
            }
        }
    }

    /// `∫ f(x, p(x)) dxi` over the support, given a precomputed cumulant.
    fn integrate_density<F: Fn(f64, f64) -> f64>(
        &self,
        theta: f64,
        cumulant: f64,
        f: F,
    ) -> Result<f64> {
        let (lo, hi) = self.support(theta)?;
        let w = self.base_measure();
        let r = integrate_with_breaks(
            |x| w * f(x, self.density_with(theta, cumulant, x)),
            lo,
            hi,
            &self.peak_breaks(),
            &self.quad,
        )?;
        Ok(r.value)
    }

    /// Natural parameter `(∇G_t)^{-1}(hbar)`.
    pub fn inv_grad_cumulant(&self, hbar: f64) -> Result<f64> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(TemError::OutOfImage { value: hbar });
        }
        let s = self.temper.star();
        let theta = match self.kind {
            FamilyKind::TExponential => -(hbar / s).powf(-1.0 / (2.0 - s)),
            FamilyKind::TGaussianMu0 => {
                let base = 2.0 * hbar / (s * self.gauss_k.powf(1.0 - s));
                -base.powf(-2.0 / (3.0 - s))
            }
            FamilyKind::QuadratureGeneric(_) => self.invert_gradient_by_bisection(hbar)?,
        };
        if !(theta.is_finite() && theta < -DOMAIN_MARGIN) {
            return Err(TemError::OutOfImage { value: hbar });
        }
        Ok(theta)
    }

    // ∇G_t is increasing on (-inf, 0); bisect in log(-theta).
    fn invert_gradient_by_bisection(&self, hbar: f64) -> Result<f64> {
        let grad_at = |log_u: f64| self.grad_cumulant(-log_u.exp());
        // large u (very negative theta) gives small gradients
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let mut steps = 0;
        while grad_at(hi)? > hbar {
            hi += 2.0;
            steps += 1;
            if steps > 200 {
                return Err(TemError::OutOfImage { value: hbar });
            }
        }
        while grad_at(lo)? < hbar {
            lo -= 2.0;
            steps += 1;
            if steps > 200 {
                return Err(TemError::OutOfImage { value: hbar });
            }
        }
        // grad(lo) >= hbar >= grad(hi), lo < hi in log(-theta)
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo < 1e-14 {
                break;
            }
            if grad_at(mid)? > hbar {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(-(0.5 * (lo + hi)).exp())
    }

    /// Convex conjugate `G*_t(hbar)`.
    pub fn conjugate(&self, hbar: f64) -> Result<f64> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(TemError::domain("expectation parameter", hbar));
        }
        let s = self.temper.star();
        match self.kind {
            FamilyKind::TExponential => Ok(-s * (log_q(1.0 / (2.0 - s), hbar / s)? + 1.0)),
            FamilyKind::TGaussianMu0 => {
                let t2 = 2.0 / (3.0 - s);
                let c = self.gauss_c;
                Ok(-0.5 * s * (log_q(t2, 2.0 * c * c * hbar)? + 1.0))
            }
            FamilyKind::QuadratureGeneric(_) => {
                let theta = self.inv_grad_cumulant(hbar)?;
                Ok(theta * hbar - self.cumulant(theta)?)
            }
        }
    }

    fn density_with(&self, theta: f64, cumulant: f64, x: f64) -> f64 {
        let stat = self.statistic();
        if !stat.in_domain(x) {
            return 0.0;
        }
        let tp = self.temper;
        let z = (theta * stat.eval(x) - cumulant) / (1.0 + tp.gap() * cumulant);
        exp_t(tp, z)
    }

    /// Unnormalized TEM density `exp_t(theta phi(x) ⊖_t G_t(theta))`, zero
    /// outside the support.
    pub fn density(&self, theta: f64, x: f64) -> Result<f64> {
        let g = self.cumulant(theta)?;
        Ok(self.density_with(theta, g, x))
    }

    /// Co-density `p(x)^{1/t*}`, a probability density w.r.t. the base measure.
    pub fn co_density(&self, theta: f64, x: f64) -> Result<f64> {
        let p = self.density(theta, x)?;
        Ok(p.powf(2.0 - self.temper.t()))
    }

    /// Total mass `M_t(theta) = 1 + (1-t)(G_t(theta) - theta ∇G_t(theta))`.
    pub fn total_mass(&self, theta: f64) -> Result<f64> {
        let g = self.cumulant(theta)?;
        let h = self.grad_cumulant(theta)?;
        Ok(1.0 + self.temper.gap() * (g - theta * h))
    }

    /// Total mass through the conjugate, `1 - (1-t) G*_t(hbar)`.
    pub fn total_mass_from_conjugate(&self, theta: f64) -> Result<f64> {
        let h = self.grad_cumulant(theta)?;
        Ok(1.0 - self.temper.gap() * self.conjugate(h)?)
    }

    /// `∫ p dxi` by quadrature.
    pub fn total_mass_quadrature(&self, theta: f64) -> Result<f64> {
        let g = self.cumulant(theta)?;
        self.integrate_density(theta, g, |_, p| p)
    }

    /// `∫ p^{1/t*} dxi` by quadrature; equals 1 for a valid cumulant.
    pub fn co_density_mass_quadrature(&self, theta: f64) -> Result<f64> {
        let g = self.cumulant(theta)?;
        let e = 2.0 - self.temper.t();
        self.integrate_density(theta, g, |_, p| p.powf(e))
    }

    /// `∫ phi p dxi` by quadrature.
    pub fn expectation_quadrature(&self, theta: f64) -> Result<f64> {
        let g = self.cumulant(theta)?;
        let stat = self.statistic();
        self.integrate_density(theta, g, |x, p| stat.eval(x) * p)
    }

    /// Integrates `f(x)` against the base measure over `[lo, hi]`.
    pub fn integrate_base<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        breaks: &[f64],
    ) -> Result<f64> {
        let w = self.base_measure();
        let mut all = breaks.to_vec();
        all.extend(self.peak_breaks());
        Ok(integrate_with_breaks(|x| w * f(x), lo, hi, &all, &self.quad)?.value)
    }

    /// Source parameter (`lambda` or `sigma^2`) to natural parameter.
    pub fn source_to_natural(&self, source: f64) -> Result<f64> {
        if !(source.is_finite() && source > 0.0) {
            return Err(TemError::domain("source parameter", source));
        }
        match self.kind {
            FamilyKind::TExponential => Ok(-source / (3.0 - 2.0 * self.temper.t())),
            FamilyKind::TGaussianMu0 => Ok(-self.temper.star() / (2.0 * source)),
            FamilyKind::QuadratureGeneric(_) => Err(TemError::Config(
                "quadrature families have no source parametrization".into(),
            )),
        }
    }

    pub fn natural_to_source(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        match self.kind {
            FamilyKind::TExponential => Ok(-(3.0 - 2.0 * self.temper.t()) * theta),
            FamilyKind::TGaussianMu0 => Ok(-self.temper.star() / (2.0 * theta)),
            FamilyKind::QuadratureGeneric(_) => Err(TemError::Config(
                "quadrature families have no source parametrization".into(),
            )),
        }
    }

    pub fn grad_cumulant_vec(&self, theta: &NaturalParam) -> Result<ExpectationParam> {
        theta
            .0
            .iter()
            .map(|&th| self.grad_cumulant(th))
            .collect::<Result<Vec<_>>>()
            .map(ExpectationParam)
    }

    pub fn inv_grad_cumulant_vec(&self, hbar: &ExpectationParam) -> Result<NaturalParam> {
        hbar.0
            .iter()
            .map(|&h| self.inv_grad_cumulant(h))
            .collect::<Result<Vec<_>>>()
            .map(NaturalParam)
    }
}

/// `Γ(n + 1) / Γ(n + 3/2)`, accurate for large `n`.
fn gamma_ratio(n: f64) -> f64 {
    if n < 1e3 {
        return (libm::lgamma(n + 1.0) - libm::lgamma(n + 1.5)).exp();
    }
    // Γ(x)/Γ(x + 1/2) with x = n + 1
    let x = n + 1.0;
    let inv = 1.0 / x;
    let series = 1.0 - inv / 8.0 + inv * inv / 128.0 + 5.0 * inv.powi(3) / 1024.0
        - 21.0 * inv.powi(4) / 32768.0;
    1.0 / (x.sqrt() * series)
}

/// `c_s = sqrt(pi / (1-s)) Γ(1 + 1/(1-s)) / Γ(3/2 + 1/(1-s))`, with the
/// limit `sqrt(pi)` at `s = 1`.
pub fn c_const(s: f64) -> f64 {
    if (1.0 - s).abs() < crate::deformed::CLASSICAL_EPS {
        return std::f64::consts::PI.sqrt();
    }
    let n = 1.0 / (1.0 - s);
    (std::f64::consts::PI * n).sqrt() * gamma_ratio(n)
}
