//! Left and right population minimizers of the conformal divergence.
//!
//! With the per-axis conformal factor both losses separate over axes, so
//! every solve below is a set of independent scalar problems.
//!
//! Right: `argmin_θ E_i B(θ_i‖θ)` is the mean of the `θ_i` reweighted by
//! `1 / D(θ_i)`.
//!
//! Left: `argmin_θ E_i B(θ‖θ_i)` satisfies `∇G(θ) = α* E_i ∇G(θ_i)` where
//! `α* = D(θ)/N(θ)`, `D = 1 + (1-t) G` and
//! `N(θ) = 1 + (1-t)(E G(θ_i) + θ E ∇G(θ_i) - E θ_i ∇G(θ_i))`.
//! α* is found by bisection inside `[1, min_i D(θ_i)/N(θ_i)]`.

use crate::divergence::{conformal, Side};
use crate::error::{Result, TemError};
use crate::family::{FamilyKind, NaturalParam, TemFamily};

const ALPHA_TOL: f64 = 1e-12;
const ALPHA_MAX_ITERS: usize = 200;
const PRESCAN_POINTS: usize = 64;
// Residuals this small are roots: α* can sit on the bracket end, where
// rounding alone decides the sign.
const RESIDUAL_ZERO: f64 = 1e-13;

/// Points with normalized non-negative weights. Zero-weight points are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPopulation {
    points: Vec<NaturalParam>,
    weights: Vec<f64>,
    dim: usize,
}

impl WeightedPopulation {
    pub fn new(points: Vec<NaturalParam>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(TemError::Config(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(TemError::domain("population weight", w));
        }
        let (points, weights): (Vec<_>, Vec<_>) = points
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .unzip();
        if points.is_empty() {
            return Err(TemError::Empty("population"));
        }
        let dim = points[0].dim();
        if dim == 0 || points.iter().any(|p| p.dim() != dim) {
            return Err(TemError::Config(
                "population points must share a positive dimension".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(WeightedPopulation {
            points,
            weights,
            dim,
        })
    }

    pub fn uniform(points: Vec<NaturalParam>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n])
    }

    pub fn points(&self) -> &[NaturalParam] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mixes in `outlier` with weight `eps`, scaling the others by `1 - eps`.
    pub fn contaminate(&self, outlier: &NaturalParam, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(TemError::domain("contamination weight", eps));
        }
        let mut points = self.points.clone();
        let mut weights: Vec<f64> = self.weights.iter().map(|w| w * (1.0 - eps)).collect();
        points.push(outlier.clone());
        weights.push(eps);
        Self::new(points, weights)
    }

    fn axis(&self, j: usize) -> Vec<f64> {
        self.points.iter().map(|p| p.0[j]).collect()
    }
}

/// Per-axis outcome of the α* line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSolve {
    pub alpha_star: f64,
    /// `N(θ_l)`.
    pub n_value: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    /// Sign changes of the α residual seen by the pre-scan.
    pub sign_changes: usize,
    /// `θ_l` lies outside `[min_i θ_i, max_i θ_i]`.
    pub bounding_violation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeftMinimizerResult {
    pub theta_l: NaturalParam,
    pub axes: Vec<AxisSolve>,
}

impl LeftMinimizerResult {
    pub fn multi_root(&self) -> bool {
        self.axes.iter().any(|a| a.sign_changes > 1)
    }

    pub fn bounding_violation(&self) -> bool {
        self.axes.iter().any(|a| a.bounding_violation)
    }

    pub fn iterations(&self) -> usize {
        self.axes.iter().map(|a| a.iterations).sum()
    }
}

// Population moments of one axis needed by N.
#[derive(Debug, Clone, Copy)]
struct Moments {
    mean_g: f64,
    mean_grad: f64,
    mean_theta_grad: f64,
}

struct AxisData<'a> {
    fam: &'a TemFamily,
    thetas: Vec<f64>,
    g: Vec<f64>,
    m: Moments,
}

impl<'a> AxisData<'a> {
    fn new(fam: &'a TemFamily, thetas: Vec<f64>, weights: &[f64]) -> Result<Self> {
        let g = thetas
            .iter()
            .map(|&th| fam.cumulant(th))
            .collect::<Result<Vec<_>>>()?;
        let grads = thetas
            .iter()
            .map(|&th| fam.grad_cumulant(th))
            .collect::<Result<Vec<_>>>()?;
        let mut m = Moments {
            mean_g: 0.0,
            mean_grad: 0.0,
            mean_theta_grad: 0.0,
        };
        for i in 0..thetas.len() {
            let w = weights[i];
            m.mean_g += w * g[i];
            m.mean_grad += w * grads[i];
            m.mean_theta_grad += w * thetas[i] * grads[i];
        }
        Ok(AxisData { fam, thetas, g, m })
    }

    fn gap(&self) -> f64 {
        self.fam.temper().gap()
    }

    fn n_at(&self, theta: f64) -> f64 {
        1.0 + self.gap() * (self.m.mean_g + theta * self.m.mean_grad - self.m.mean_theta_grad)
    }

    fn theta_of(&self, alpha: f64) -> Result<f64> {
        self.fam.inv_grad_cumulant(alpha * self.m.mean_grad)
    }

    fn residual(&self, alpha: f64) -> Result<f64> {
        let th = self.theta_of(alpha)?;
        let n = self.n_at(th);
        if !(n > 0.0) {
            return Err(TemError::NonPositiveN);
        }
        Ok(alpha - self.fam.conformal_factor(th)? / n)
    }

    fn bracket(&self) -> Result<(f64, f64)> {
        let hi = self
            .thetas
            .iter()
            .zip(&self.g)
            .filter_map(|(&th, &g)| {
                let n = self.n_at(th);
                (n > 0.0).then(|| (1.0 + self.gap() * g) / n)
            })
            .fold(f64::INFINITY, f64::min);
        if !hi.is_finite() {
            return Err(TemError::BracketFailure { lo: 1.0, hi });
        }
        Ok((1.0, hi))
    }

    fn f_mean(&self) -> Result<f64> {
        self.theta_of(1.0)
    }

    fn solve(&self) -> Result<(f64, AxisSolve)> {
        let (lo, hi) = self.bracket()?;
        let (min_th, max_th) = self
            .thetas
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        let finish = |theta: f64, alpha: f64, iterations: usize, sign_changes: usize| {
            let solve = AxisSolve {
                alpha_star: alpha,
                n_value: self.n_at(theta),
                iterations,
                bracket: (lo, hi),
                sign_changes,
                bounding_violation: theta < min_th || theta > max_th,
            };
            (theta, solve)
        };
        if hi < lo + ALPHA_TOL || self.fam.temper().is_classical() {
            let th = self.f_mean()?;
            return Ok(finish(th, 1.0, 0, 0));
        }

        // coarse scan: finds a sign change and counts them
        let mut prev: Option<(f64, f64)> = None;
        let mut first: Option<(f64, f64)> = None;
        let mut sign_changes = 0;
        let mut any_valid = false;
        for i in 0..=PRESCAN_POINTS {
            let a = lo + (hi - lo) * i as f64 / PRESCAN_POINTS as f64;
            let r = match self.residual(a) {
                Ok(r) => r,
                Err(TemError::NonPositiveN) => continue,
                Err(e) => return Err(e),
            };
            any_valid = true;
            let r = if r.abs() <= RESIDUAL_ZERO * a { 0.0 } else { r };
            if r == 0.0 {
                if first.is_none() {
                    first = Some((a, a));
                }
                sign_changes += 1;
            } else if let Some((pa, pr)) = prev {
                if pr != 0.0 && (pr < 0.0) != (r < 0.0) {
                    sign_changes += 1;
                    if first.is_none() {
                        first = Some((pa, a));
                    }
                }
            }
            prev = Some((a, r));
        }
        if !any_valid {
            return Err(TemError::NonPositiveN);
        }
        let (mut a0, mut a1) = first.ok_or(TemError::BracketFailure { lo, hi })?;
        let mut r0 = self.residual(a0)?;
        let mut iterations = 0;
        while a1 - a0 > ALPHA_TOL && iterations < ALPHA_MAX_ITERS {
            let mid = 0.5 * (a0 + a1);
            let rm = self.residual(mid)?;
            iterations += 1;
            if rm == 0.0 {
                a0 = mid;
                a1 = mid;
                break;
            }
            if (rm < 0.0) == (r0 < 0.0) {
                a0 = mid;
                r0 = rm;
            } else {
                a1 = mid;
            }
        }
        let alpha = 0.5 * (a0 + a1);
        let th = self.theta_of(alpha)?;
        Ok(finish(th, alpha, iterations, sign_changes))
    }
}

/// `Σ_i w_i θ_i / D(θ_i)` per axis: the tabulated right-minimizer form,
/// without the `Σ_i w_i / D(θ_i)` normalizer.
pub fn conformal_weighted_sum(fam: &TemFamily, pop: &WeightedPopulation) -> Result<NaturalParam> {
    let mut out = vec![0.0; pop.dim()];
    for (p, &w) in pop.points().iter().zip(pop.weights()) {
        for (o, &th) in out.iter_mut().zip(&p.0) {
            *o += w * th / fam.conformal_factor(th)?;
        }
    }
    Ok(NaturalParam(out))
}

/// Exact right population minimizer `Σ w_i θ_i / D_i ÷ Σ w_i / D_i`.
pub fn right_minimizer(fam: &TemFamily, pop: &WeightedPopulation) -> Result<NaturalParam> {
    let mut num = vec![0.0; pop.dim()];
    let mut den = vec![0.0; pop.dim()];
    for (p, &w) in pop.points().iter().zip(pop.weights()) {
        for j in 0..pop.dim() {
            let th = p.0[j];
            let d = fam.conformal_factor(th)?;
            if !(d > 0.0) {
                return Err(TemError::ConformalFactorNonPositive { factor: d });
            }
            num[j] += w * th / d;
            den[j] += w / d;
        }
    }
    Ok(NaturalParam(
        num.iter().zip(&den).map(|(n, d)| n / d).collect(),
    ))
}

/// Left population minimizer by the α* line search.
pub fn left_minimizer(fam: &TemFamily, pop: &WeightedPopulation) -> Result<LeftMinimizerResult> {
    let mut theta = Vec::with_capacity(pop.dim());
    let mut axes = Vec::with_capacity(pop.dim());
    for j in 0..pop.dim() {
        let data = AxisData::new(fam, pop.axis(j), pop.weights())?;
        let (th, solve) = data.solve()?;
        theta.push(th);
        axes.push(solve);
    }
    Ok(LeftMinimizerResult {
        theta_l: NaturalParam(theta),
        axes,
    })
}

/// f-mean `∇G^{-1}(E_i ∇G(θ_i))` per axis.
pub fn f_mean(fam: &TemFamily, pop: &WeightedPopulation) -> Result<NaturalParam> {
    (0..pop.dim())
        .map(|j| AxisData::new(fam, pop.axis(j), pop.weights())?.f_mean())
        .collect::<Result<Vec<_>>>()
        .map(NaturalParam)
}

/// `α - D(θ(α)) / N(θ(α))` on each axis.
pub fn alpha_residual(fam: &TemFamily, pop: &WeightedPopulation, alpha: f64) -> Result<Vec<f64>> {
    (0..pop.dim())
        .map(|j| AxisData::new(fam, pop.axis(j), pop.weights())?.residual(alpha))
        .collect()
}

/// The α bracket `[1, min_i D(θ_i)/N(θ_i)]` on each axis, over points with `N(θ_i) > 0`.
pub fn alpha_bracket(fam: &TemFamily, pop: &WeightedPopulation) -> Result<Vec<(f64, f64)>> {
    (0..pop.dim())
        .map(|j| AxisData::new(fam, pop.axis(j), pop.weights())?.bracket())
        .collect()
}

/// Max-norm of `N(θ) ∇G(θ) - D(θ) E_i ∇G(θ_i)`, the critical-point condition of
/// the left loss with the common `(1-t)` factor removed.
pub fn stationarity_residual(
    fam: &TemFamily,
    pop: &WeightedPopulation,
    theta: &NaturalParam,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 0..pop.dim() {
        let data = AxisData::new(fam, pop.axis(j), pop.weights())?;
        let th = theta.0[j];
        let r =
            data.n_at(th) * fam.grad_cumulant(th)? - fam.conformal_factor(th)? * data.m.mean_grad;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Tabulated left minimizer for the two closed-form families.
pub fn left_minimizer_closed_form(
    fam: &TemFamily,
    pop: &WeightedPopulation,
) -> Result<NaturalParam> {
    let s = fam.temper().star();
    let (p_num, p_den) = match fam.kind() {
        FamilyKind::TExponential => (1.0 - s, 2.0 - s),
        FamilyKind::TGaussianMu0 => ((1.0 - s) / 2.0, (3.0 - s) / 2.0),
        FamilyKind::QuadratureGeneric(_) => {
            return Err(TemError::Config(
                "no closed-form minimizer for quadrature families".into(),
            ))
        }
    };
    let out = (0..pop.dim())
        .map(|j| {
            let (mut num, mut den) = (0.0, 0.0);
            for (p, &w) in pop.points().iter().zip(pop.weights()) {
                let u = -p.0[j];
                num += w * u.powf(-p_num);
                den += w * u.powf(-p_den);
            }
            -num / den
        })
        .collect();
    Ok(NaturalParam(out))
}

/// `E_i B(θ‖θ_i)` summed over axes.
pub fn left_loss(fam: &TemFamily, pop: &WeightedPopulation, theta: &NaturalParam) -> Result<f64> {
    loss(fam, pop, theta, Side::Left)
}

/// `E_i B(θ_i‖θ)` summed over axes.
pub fn right_loss(fam: &TemFamily, pop: &WeightedPopulation, theta: &NaturalParam) -> Result<f64> {
    loss(fam, pop, theta, Side::Right)
}

fn loss(
    fam: &TemFamily,
    pop: &WeightedPopulation,
    theta: &NaturalParam,
    side: Side,
) -> Result<f64> {
    if theta.dim() != pop.dim() {
        return Err(TemError::Config(
            "center dimension differs from population".into(),
        ));
    }
    let mut total = 0.0;
    for (p, &w) in pop.points().iter().zip(pop.weights()) {
        for (&c, &x) in theta.0.iter().zip(&p.0) {
            let d = match side {
                Side::Left => conformal(fam, c, x)?,
                Side::Right => conformal(fam, x, c)?,
            };
            total += w * d.value;
        }
    }
    Ok(total)
}

/// Minimizer on the given side.
pub fn minimizer(fam: &TemFamily, pop: &WeightedPopulation, side: Side) -> Result<NaturalParam> {
    match side {
        Side::Left => Ok(left_minimizer(fam, pop)?.theta_l),
        Side::Right => right_minimizer(fam, pop),
    }
}

/// Displacement of the minimizer when `outlier` takes weight `eps` and the
/// rest of the population is scaled by `1 - eps`.
pub fn influence_probe(
    fam: &TemFamily,
    pop: &WeightedPopulation,
    outlier: &NaturalParam,
    eps: f64,
    side: Side,
) -> Result<Vec<f64>> {
    let old = minimizer(fam, pop, side)?;
    if eps == 0.0 {
        return Ok(vec![0.0; pop.dim()]);
    }
    let new = minimizer(fam, &pop.contaminate(outlier, eps)?, side)?;
    Ok(new.0.iter().zip(&old.0).map(|(n, o)| n - o).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformed::Temper;

    fn texp(t: f64) -> TemFamily {
        TemFamily::t_exponential(Temper::new(t).unwrap())
    }

    fn tgauss(t: f64) -> TemFamily {
        TemFamily::t_gaussian(Temper::new(t).unwrap())
    }

    fn pop1(xs: &[f64]) -> WeightedPopulation {
        WeightedPopulation::uniform(xs.iter().map(|&x| NaturalParam::scalar(x)).collect()).unwrap()
    }

    #[test]
    fn population_validation() {
        assert!(WeightedPopulation::uniform(vec![]).is_err());
        let p = NaturalParam::scalar(-1.0);
        assert!(WeightedPopulation::new(vec![p.clone()], vec![-1.0]).is_err());
        assert!(WeightedPopulation::new(vec![p.clone()], vec![0.0]).is_err());
        assert!(WeightedPopulation::new(
            vec![p.clone(), NaturalParam(vec![-1.0, -2.0])],
            vec![1.0, 1.0]
        )
        .is_err());
        let w =
            WeightedPopulation::new(vec![p.clone(), NaturalParam::scalar(-2.0)], vec![3.0, 0.0])
                .unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.weights(), &[1.0]);
    }

    #[test]
    fn classical_right_is_mean() {
        let c = right_minimizer(&texp(1.0), &pop1(&[-1.0, -3.0])).unwrap();
        assert!((c.0[0] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn classical_left_is_harmonic_type_mean() {
        let r = left_minimizer(&texp(1.0), &pop1(&[-1.0, -2.0])).unwrap();
        assert!((r.theta_l.0[0] + 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(r.axes[0].alpha_star, 1.0);
    }

    #[test]
    fn single_point_is_fixed() {
        for t in [0.0, 0.5, 1.0] {
            let r = left_minimizer(&texp(t), &pop1(&[-1.7, -1.7])).unwrap();
            assert!((r.theta_l.0[0] + 1.7).abs() < 1e-12);
            assert!((r.axes[0].alpha_star - 1.0).abs() < 1e-12);
            let c = right_minimizer(&texp(t), &pop1(&[-1.7])).unwrap();
            assert!((c.0[0] + 1.7).abs() < 1e-14);
        }
    }

    #[test]
    fn tabulated_right_row_is_the_unnormalized_sum() {
        let p = pop1(&[-1.0, -4.0, -0.3]);
        for t in [0.0, 0.4, 1.0] {
            let f = texp(t);
            let s = f.temper().star();
            let row = -p
                .points()
                .iter()
                .map(|q| (-q.0[0]).powf(2.0 - s))
                .sum::<f64>()
                / 3.0;
            let sum = conformal_weighted_sum(&f, &p).unwrap().0[0];
            assert!((row - sum).abs() < 1e-12, "t={t}");

            let g = tgauss(t);
            let k = crate::family::c_const(s) * s.sqrt();
            let row = -p
                .points()
                .iter()
                .map(|q| (-q.0[0]).powf((3.0 - s) / 2.0))
                .sum::<f64>()
                / 3.0
                / k.powf(1.0 - s);
            let sum = conformal_weighted_sum(&g, &p).unwrap().0[0];
            assert!((row - sum).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn normalized_right_relates_to_tabulated_sum() {
        let p = pop1(&[-1.0, -4.0]);
        let f = texp(0.0);
        let sum = conformal_weighted_sum(&f, &p).unwrap().0[0];
        let exact = right_minimizer(&f, &p).unwrap().0[0];
        let inv_d: f64 = p
            .points()
            .iter()
            .map(|q| 1.0 / f.conformal_factor(q.0[0]).unwrap())
            .sum::<f64>()
            / 2.0;
        assert!((sum - exact * inv_d).abs() < 1e-12);
        // only the normalized form minimizes the right loss
        let l_exact = right_loss(&f, &p, &NaturalParam::scalar(exact)).unwrap();
        let l_sum = right_loss(&f, &p, &NaturalParam::scalar(sum)).unwrap();
        assert!(l_exact < l_sum);
    }

    #[test]
    fn right_minimizer_beats_grid() {
        let p = pop1(&[-0.5, -2.0, -3.5]);
        for t in [0.0, 0.5] {
            let f = texp(t);
            let c = right_minimizer(&f, &p).unwrap();
            let lc = right_loss(&f, &p, &c).unwrap();
            for i in 1..400 {
                let th = -0.01 * i as f64;
                assert!(lc <= right_loss(&f, &p, &NaturalParam::scalar(th)).unwrap() + 1e-14);
            }
        }
    }

    #[test]
    fn left_closed_form_agrees_at_t0() {
        let p = pop1(&[-1.0, -4.0]);
        let f = texp(0.0);
        let ls = left_minimizer(&f, &p).unwrap();
        let cf = left_minimizer_closed_form(&f, &p).unwrap();
        assert!((ls.theta_l.0[0] - cf.0[0]).abs() < 1e-10);
        // t* = 1/2: -E[u^{-1/2}] / E[u^{-3/2}] = -(1 + 1/2) / (1 + 1/8)
        assert!((cf.0[0] + 1.5 / 1.125).abs() < 1e-14);
    }

    #[test]
    fn left_beats_grid_and_population() {
        let p = pop1(&[-0.2, -1.0, -6.0]);
        for t in [0.0, 0.3, 0.8] {
            for f in [texp(t), tgauss(t)] {
                let r = left_minimizer(&f, &p).unwrap();
                let lc = left_loss(&f, &p, &r.theta_l).unwrap();
                for q in p.points() {
                    assert!(lc <= left_loss(&f, &p, q).unwrap() + 1e-14);
                }
                for i in 1..300 {
                    let th = -0.02 * i as f64;
                    assert!(lc <= left_loss(&f, &p, &NaturalParam::scalar(th)).unwrap() + 1e-13);
                }
                let (lo, hi) = r.axes[0].bracket;
                assert!(r.axes[0].alpha_star >= lo && r.axes[0].alpha_star <= hi);
                assert!(r.axes[0].n_value > 0.0);
                assert!(stationarity_residual(&f, &p, &r.theta_l).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn residual_is_zero_at_one_for_t1() {
        let r = alpha_residual(&texp(1.0), &pop1(&[-1.0, -5.0]), 1.0).unwrap();
        assert!(r[0].abs() < 1e-15);
    }

    #[test]
    fn wide_population_still_brackets() {
        // points with N(θ_i) <= 0 are excluded from the bracket bound
        let p = pop1(&[-1e-3, -50.0, -2000.0]);
        let f = texp(0.0);
        let (lo, hi) = alpha_bracket(&f, &p).unwrap()[0];
        assert!(hi >= lo);
        let r = left_minimizer(&f, &p).unwrap();
        let cf = left_minimizer_closed_form(&f, &p).unwrap();
        assert!((r.theta_l.0[0] - cf.0[0]).abs() < 1e-8 * cf.0[0].abs());
    }

    #[test]
    fn influence_at_t1_is_linear() {
        let p = pop1(&[-1.0, -2.0, -3.0]);
        let f = texp(1.0);
        let out = NaturalParam::scalar(-40.0);
        let d = influence_probe(&f, &p, &out, 0.01, Side::Right).unwrap();
        assert!((d[0] - 0.01 * (-40.0 + 2.0)).abs() < 1e-12);
        assert_eq!(
            influence_probe(&f, &p, &out, 0.0, Side::Left).unwrap(),
            vec![0.0]
        );
    }

    fn right_disp(t: f64, outlier: f64) -> f64 {
        let p = pop1(&[-1.0, -2.0, -3.0]);
        influence_probe(
            &texp(t),
            &p,
            &NaturalParam::scalar(outlier),
            0.01,
            Side::Right,
        )
        .unwrap()[0]
            .abs()
    }

    #[test]
    fn right_influence_vanishes_toward_zero_at_t0() {
        // D(θ*) blows up as θ* -> 0-, so the outlier's weight vanishes
        let d: Vec<f64> = [-1e-1, -1e-2, -1e-4]
            .iter()
            .map(|&o| right_disp(0.0, o))
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2]);
        assert!(d[2] < 1e-3);
        assert!(right_disp(1.0, -1e-4) > 0.019);
    }

    #[test]
    fn right_influence_grows_toward_minus_infinity() {
        // G_t is bounded below by -1/(1-t), so D(θ*) -> 0 and the outlier
        // dominates: the influence is unbounded on this side for every t
        let d0: Vec<f64> = [-10.0, -1e2, -1e4]
            .iter()
            .map(|&o| right_disp(0.0, o))
            .collect();
        let d1: Vec<f64> = [-10.0, -1e2, -1e4]
            .iter()
            .map(|&o| right_disp(1.0, o))
            .collect();
        assert!(d0[2] > 100.0 * d0[0]);
        assert!(d0[2] / d1[2] > d0[0] / d1[0]);
    }

    #[test]
    fn multi_axis_solves_independently() {
        let pts = vec![
            NaturalParam(vec![-1.0, -0.5]),
            NaturalParam(vec![-4.0, -2.0]),
        ];
        let p = WeightedPopulation::uniform(pts).unwrap();
        let f = texp(0.5);
        let r = left_minimizer(&f, &p).unwrap();
        let a0 = left_minimizer(&f, &pop1(&[-1.0, -4.0])).unwrap();
        let a1 = left_minimizer(&f, &pop1(&[-0.5, -2.0])).unwrap();
        assert_eq!(r.theta_l.0, vec![a0.theta_l.0[0], a1.theta_l.0[0]]);
    }
}
