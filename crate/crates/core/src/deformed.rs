//! Tempered (t-deformed) exponential and logarithm, their perspective duals,
//! and the t-arithmetic operators.
//!
//! All functions are pure. Near the classical limit (`|1 - t| < 1e-9`) they
//! switch to `exp`/`ln` and ordinary arithmetic, because the deformed formulas
//! are `0/0` at `t = 1`. Away from the limit they are evaluated through
//! `ln_1p`/`exp_m1` so that tempers close to 1 stay accurate.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TemError};

/// Distance from 1 below which a temper is treated as classical.
pub const CLASSICAL_EPS: f64 = 1e-9;

/// Deformation parameter `t` in `[0, 1]` together with its dual
/// `t* = 1 / (2 - t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temper {
    t: f64,
    t_star: f64,
}

impl Temper {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(TemError::domain("temper t", t));
        }
        Ok(Temper {
            t,
            t_star: 1.0 / (2.0 - t),
        })
    }

    /// The classical (exponential family) temper `t = 1`.
    pub fn classical() -> Self {
        Temper {
            t: 1.0,
            t_star: 1.0,
        }
    }

    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn star(&self) -> f64 {
        self.t_star
    }

    /// `1 - t`.
    #[inline]
    pub fn gap(&self) -> f64 {
        1.0 - self.t
    }

    #[inline]
    pub fn is_classical(&self) -> bool {
        is_classical(self.t)
    }
}

impl TryFrom<f64> for Temper {
    type Error = TemError;

    fn try_from(t: f64) -> Result<Self> {
        Temper::new(t)
    }
}

impl From<Temper> for f64 {
    fn from(tp: Temper) -> f64 {
        tp.t
    }
}

#[inline]
fn is_classical(q: f64) -> bool {
    (1.0 - q).abs() < CLASSICAL_EPS
}

/// `exp_q(z) = [1 + (1-q) z]_+^{1/(1-q)}` for any real `q`.
///
/// For `q < 1` the value is clamped to 0 below the cutoff `z <= -1/(1-q)`.
/// For `q > 1` the function has a pole there and returns `+inf` past it.
pub fn exp_q(q: f64, z: f64) -> f64 {
    if is_classical(q) {
        return z.exp();
    }
    let k = 1.0 - q;
    let arg = k * z;
    if arg <= -1.0 {
        return if k > 0.0 { 0.0 } else { f64::INFINITY };
    }
    (arg.ln_1p() / k).exp()
}

/// `log_q(z) = (z^{1-q} - 1) / (1-q)` for any real `q`.
///
/// `z = 0` is accepted only when `q < 1` and yields `-1/(1-q)`.
pub fn log_q(q: f64, z: f64) -> Result<f64> {
    if z.is_nan() || z < 0.0 {
        return Err(TemError::domain("log_t argument", z));
    }
    if z == 0.0 {
        if !is_classical(q) && q < 1.0 {
            return Ok(-1.0 / (1.0 - q));
        }
        return Err(TemError::domain("log_t argument", z));
    }
    if is_classical(q) {
        return Ok(z.ln());
    }
    let k = 1.0 - q;
    Ok((k * z.ln()).exp_m1() / k)
}

/// Tempered exponential `exp_t`.
pub fn exp_t(tp: Temper, z: f64) -> f64 {
    exp_q(tp.t, z)
}

/// Tempered logarithm `log_t`, inverse of [`exp_t`] above the cutoff.
pub fn log_t(tp: Temper, z: f64) -> Result<f64> {
    log_q(tp.t, z)
}

/// Perspective dual `(exp_t)*(z) = t* exp_{t*}(z / t*)`.
pub fn exp_t_star(tp: Temper, z: f64) -> f64 {
    let s = tp.t_star;
    s * exp_q(s, z / s)
}

/// Dual logarithm `(log_t)*(z) = t* log_{t*}(z / t*)`, inverse of
/// [`exp_t_star`].
pub fn log_t_star(tp: Temper, z: f64) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(TemError::domain("log_t_star argument", z));
    }
    let s = tp.t_star;
    Ok(s * log_q(s, z / s)?)
}

/// `x ⊕_t y = x + y + (1-t) x y`.
pub fn t_add(tp: Temper, x: f64, y: f64) -> f64 {
    if tp.is_classical() {
        return x + y;
    }
    x + y + tp.gap() * x * y
}

/// `x ⊖_t y = (x - y) / (1 + (1-t) y)`.
pub fn t_sub(tp: Temper, x: f64, y: f64) -> Result<f64> {
    if tp.is_classical() {
        return Ok(x - y);
    }
    let den = 1.0 + tp.gap() * y;
    if den == 0.0 {
        return Err(TemError::domain("t_sub denominator 1+(1-t)y", den));
    }
    Ok((x - y) / den)
}

fn check_nonneg(x: f64, y: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(TemError::domain("t-product operand", x));
    }
    if y.is_nan() || y < 0.0 {
        return Err(TemError::domain("t-product operand", y));
    }
    Ok(())
}

// (1 + s)_+^{1/k} where s is a sum of expm1 terms.
fn pow_from_shift(s: f64, k: f64) -> f64 {
    if s <= -1.0 {
        return 0.0;
    }
    (s.ln_1p() / k).exp()
}

// x^{k} - 1 computed without cancellation; x = 0 gives -1.
fn pow_m1(x: f64, k: f64) -> f64 {
    if x == 0.0 {
        return -1.0;
    }
    (k * x.ln()).exp_m1()
}

/// `x ⊗_t y = (x^{1-t} + y^{1-t} - 1)_+^{1/(1-t)}` for `x, y >= 0`.
pub fn t_mul(tp: Temper, x: f64, y: f64) -> Result<f64> {
    check_nonneg(x, y)?;
    if tp.is_classical() {
        return Ok(x * y);
    }
    let k = tp.gap();
    Ok(pow_from_shift(pow_m1(x, k) + pow_m1(y, k), k))
}

/// `x ⊘_t y = (x^{1-t} - y^{1-t} + 1)_+^{1/(1-t)}` for `x, y >= 0`.
pub fn t_div(tp: Temper, x: f64, y: f64) -> Result<f64> {
    check_nonneg(x, y)?;
    if tp.is_classical() {
        if y == 0.0 {
            return Err(TemError::domain("t_div divisor", y));
        }
        return Ok(x / y);
    }
    let k = tp.gap();
    Ok(pow_from_shift(pow_m1(x, k) - pow_m1(y, k), k))
}

/// Tsallis generator `psi_t(z) = z log_t z - log_{t-1} z` for `z >= 0`.
pub fn tsallis_generator(tp: Temper, z: f64) -> Result<f64> {
    let head = if z == 0.0 { 0.0 } else { z * log_t(tp, z)? };
    Ok(head - log_q(tp.t - 1.0, z)?)
}

/// Scalar Bregman divergence of the Tsallis generator,
/// `D(u, v) = u log_t u - u log_t v - log_{t-1} u + log_{t-1} v`.
///
/// `u = 0` contributes `log_{t-1} v - log_{t-1} 0` (the `0 log 0` terms vanish).
pub fn tsallis_bregman(tp: Temper, u: f64, v: f64) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return Err(TemError::domain("tsallis_bregman u", u));
    }
    if v.is_nan() || v < 0.0 {
        return Err(TemError::domain("tsallis_bregman v", v));
    }
    let q = tp.t - 1.0;
    let tail = log_q(q, v)? - log_q(q, u)?;
    if u == 0.0 {
        return Ok(tail);
    }
    if tp.is_classical() {
        if v == 0.0 {
            return Ok(f64::INFINITY);
        }
        return Ok(u * (u / v).ln() + tail);
    }
    Ok(u * (log_t(tp, u)? - log_t(tp, v)?) + tail)
}
