//! Risk-neutral NIG option pricing.
//!
//! Under the mean-correcting martingale measure the log price is
//! `ln S_t = ln S_0 + (r - ln M(1)) t + X_t`, with `M` the moment generating
//! function of `X_1`. Calls are priced with the damped Fourier transform of
//! Carr and Madan evaluated by FFT.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::FftPlan;
use crate::nig::NigParams;
use crate::optim::brent_root;
use crate::special::norm_cdf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketSpec {
    pub s0: f64,
    pub r: f64,
    pub day_count: f64,
}

impl Default for MarketSpec {
    fn default() -> Self {
        Self { s0: 100.0, r: 0.0, day_count: 365.0 }
    }
}

impl MarketSpec {
    pub fn new(s0: f64, r: f64, day_count: f64) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidInput(format!("spot must be positive, got {s0}")));
        }
        if !(day_count > 0.0 && day_count.is_finite()) {
            return Err(Error::InvalidInput(format!("day count must be positive, got {day_count}")));
        }
        if !r.is_finite() {
            return Err(Error::InvalidInput("risk-free rate must be finite".into()));
        }
        Ok(Self { s0, r, day_count })
    }

    /// Maturity in years.
    pub fn years(&self, t_days: f64) -> f64 {
        t_days / self.day_count
    }

    pub fn discount(&self, t_days: f64) -> f64 {
        libm::exp(-self.r * self.years(t_days))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Call,
    Put,
    ImpliedVol,
}

impl SurfaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurfaceKind::Call => "call",
            SurfaceKind::Put => "put",
            SurfaceKind::ImpliedVol => "iv",
        }
    }
}

/// Prices or implied vols on a maturity x strike grid (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSurface {
    pub maturities: Vec<f64>,
    pub strikes: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SurfaceKind,
    pub s0: f64,
}

impl PriceSurface {
    pub fn get(&self, maturity: usize, strike: usize) -> f64 {
        self.values[maturity * self.strikes.len() + strike]
    }

    pub fn row(&self, maturity: usize) -> &[f64] {
        let n = self.strikes.len();
        &self.values[maturity * n..(maturity + 1) * n]
    }

    pub fn moneyness(&self, strike: usize) -> f64 {
        self.strikes[strike] / self.s0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmmCheck {
    pub valid: bool,
    /// `alpha == |beta + 1|` to rounding: the moment exists but only just.
    pub marginal: bool,
    pub alpha: f64,
    pub bound: f64,
}

impl McmmCheck {
    pub fn diagnostic(&self) -> alloc::string::String {
        if !self.valid {
            format!(
                "martingale measure does not exist: need alpha >= |beta + 1|, got alpha = {} < {}",
                self.alpha, self.bound
            )
        } else if self.marginal {
            format!("marginal: alpha = |beta + 1| = {}", self.bound)
        } else {
            format!("ok: alpha = {} >= |beta + 1| = {}", self.alpha, self.bound)
        }
    }
}

/// `alpha >= |beta + 1|`, the condition for `E[exp(X_1)]` to be finite.
pub fn check_mcmm(p: &NigParams) -> McmmCheck {
    let bound = libm::fabs(p.beta() + 1.0);
    let alpha = p.alpha();
    McmmCheck {
        valid: alpha >= bound,
        marginal: alpha >= bound && alpha - bound <= 1e-12 * alpha.max(1.0),
        alpha,
        bound,
    }
}

fn require_mcmm(p: &NigParams) -> Result<f64> {
    let c = check_mcmm(p);
    if !c.valid {
        return Err(Error::Martingale { alpha: c.alpha, bound: c.bound });
    }
    Ok(p.ln_mgf(1.0).expect("moment exists when the check passes"))
}

/// `ln E^Q[exp(i z ln S_t)]` for complex `z` inside the analytic strip.
pub fn risk_neutral_ln_cf(z: Complex64, t: f64, p: &NigParams, m: &MarketSpec) -> Result<Complex64> {
    let ln_m1 = require_mcmm(p)?;
    Ok(rn_ln_cf(z, t, p, m, ln_m1))
}

fn rn_ln_cf(z: Complex64, t: f64, p: &NigParams, m: &MarketSpec, ln_m1: f64) -> Complex64 {
    let i = Complex64::i();
    i * z * libm::log(m.s0) + (i * z * (m.r - ln_m1) + p.ln_cf(z)) * t
}

/// `E^Q[exp(i v ln S_t)]`, `t` in years.
pub fn risk_neutral_cf(v: f64, t: f64, p: &NigParams, m: &MarketSpec) -> Result<Complex64> {
    Ok(risk_neutral_ln_cf(Complex64::new(v, 0.0), t, p, m)?.exp())
}

/// Carr-Madan grid settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrMadan {
    pub n: usize,
    pub eta: f64,
    pub dampening: f64,
    /// Shrink an infeasible dampening to half the feasibility bound instead
    /// of failing.
    pub auto_reduce: bool,
}

impl Default for CarrMadan {
    fn default() -> Self {
        Self { n: 4096, eta: 0.25, dampening: 1.5, auto_reduce: true }
    }
}

impl CarrMadan {
    /// Log-strike spacing `2 pi / (N eta)`.
    pub fn lambda(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.eta)
    }

    /// Dampening actually used for `p`. `E^Q[S^(1+a)]` is finite iff
    /// `beta + 1 + a <= alpha`.
    pub fn effective_dampening(&self, p: &NigParams) -> Result<f64> {
        let max = p.alpha() - p.beta() - 1.0;
        let a = self.dampening;
        if !(a > 0.0) {
            return Err(Error::Dampening { a, max });
        }
        if a < max {
            return Ok(a);
        }
        if self.auto_reduce && max > 1e-6 {
            Ok(0.5 * max)
        } else {
            Err(Error::Dampening { a, max })
        }
    }
}

/// Call prices for `strikes` at maturity `t_days`.
///
/// Each strike gets its own FFT whose log-strike grid is shifted so that
/// `ln K` is node `N / 2`; no interpolation in log-strike is needed. Prices
/// are clamped into `[max(S0 - K e^{-rT}, 0), S0]`.
pub fn carr_madan_call(p: &NigParams, m: &MarketSpec, strikes: &[f64], t_days: f64, cfg: &CarrMadan) -> Result<Vec<f64>> {
    let ln_m1 = require_mcmm(p)?;
    if let Some(k) = strikes.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidInput(format!("strike must be positive, got {k}")));
    }
    if !(t_days > 0.0 && t_days.is_finite()) {
        return Err(Error::InvalidInput(format!("maturity must be positive, got {t_days} days")));
    }
    let a = cfg.effective_dampening(p)?;
    let plan = FftPlan::new(cfg.n).ok_or_else(|| Error::InvalidInput(format!("FFT size {} is not a power of two", cfg.n)))?;
    let t = m.years(t_days);
    let disc = m.discount(t_days);
    let lambda = cfg.lambda();
    let half = cfg.n / 2;
    let i = Complex64::i();

    // damped transform times Simpson weights; independent of the strike
    let psi: Vec<Complex64> = (0..cfg.n)
        .map(|j| {
            let v = cfg.eta * j as f64;
            let w = if j == 0 {
                cfg.eta / 3.0
            } else if j % 2 == 1 {
                4.0 * cfg.eta / 3.0
            } else {
                2.0 * cfg.eta / 3.0
            };
            let z = Complex64::new(v, -(a + 1.0));
            let num = rn_ln_cf(z, t, p, m, ln_m1).exp() * disc;
            let den = Complex64::new(a * a + a - v * v, (2.0 * a + 1.0) * v);
            num / den * w
        })
        .collect();

    let mut buf = alloc::vec![Complex64::new(0.0, 0.0); cfg.n];
    let mut out = Vec::with_capacity(strikes.len());
    for &strike in strikes {
        let k = libm::log(strike);
        let k0 = k - lambda * half as f64;
        for (j, (b, s)) in buf.iter_mut().zip(&psi).enumerate() {
            let v = cfg.eta * j as f64;
            *b = (-i * v * k0).exp() * s;
        }
        plan.forward(&mut buf);
        let c = libm::exp(-a * k) / PI * buf[half].re;
        if !c.is_finite() {
            return Err(Error::Pricing(format!("non-finite call price at K = {strike}, T = {t_days} days")));
        }
        let lower = (m.s0 - strike * disc).max(0.0);
        out.push(c.clamp(lower, m.s0));
    }
    Ok(out)
}

/// `P = C - S0 + K e^{-rT}`.
pub fn put_from_parity(call: f64, strike: f64, t_days: f64, m: &MarketSpec) -> Result<f64> {
    let p = call - m.s0 + strike * m.discount(t_days);
    if p < -1e-10 * m.s0 {
        return Err(Error::Pricing(format!(
            "put-call parity gives a negative put {p:e} at K = {strike}, T = {t_days} days"
        )));
    }
    Ok(p.max(0.0))
}

/// Black-Scholes price with rate `m.r` and no dividends.
pub fn bs_price(sigma: f64, strike: f64, t_days: f64, m: &MarketSpec, kind: OptionKind) -> f64 {
    let t = m.years(t_days);
    let df = m.discount(t_days);
    let call = if strike <= 0.0 {
        m.s0 - strike * df
    } else if t <= 0.0 || sigma <= 0.0 {
        (m.s0 - strike * df).max(0.0)
    } else {
        let sd = sigma * libm::sqrt(t);
        let d1 = (libm::log(m.s0 / strike) + (m.r + 0.5 * sigma * sigma) * t) / sd;
        let d2 = d1 - sd;
        m.s0 * norm_cdf(d1) - strike * df * norm_cdf(d2)
    };
    match kind {
        OptionKind::Call => call,
        OptionKind::Put => call - m.s0 + strike * df,
    }
}

/// Black-Scholes implied volatility by Brent's method on `[1e-6, 10]`.
pub fn implied_vol(price: f64, strike: f64, t_days: f64, m: &MarketSpec, kind: OptionKind) -> Result<f64> {
    let df = m.discount(t_days);
    let (lo, hi) = match kind {
        OptionKind::Call => ((m.s0 - strike * df).max(0.0), m.s0),
        OptionKind::Put => ((strike * df - m.s0).max(0.0), strike * df),
    };
    if !(price > lo && price < hi) {
        return Err(Error::NoSolution(format!(
            "price {price} outside the open no-arbitrage band ({lo}, {hi}) at K = {strike}, T = {t_days} days"
        )));
    }
    let f = |s: f64| bs_price(s, strike, t_days, m, kind) - price;
    let (a, b) = (1e-6, 10.0);
    if f(a) > 0.0 || f(b) < 0.0 {
        return Err(Error::Convergence { iterations: 0, residual: f(b).min(-f(a)) });
    }
    let sigma = brent_root(f, a, b, 1e-15, 200).ok_or(Error::Convergence { iterations: 200, residual: f64::NAN })?;
    let resid = libm::fabs(f(sigma));
    if resid > 1e-10 * m.s0 {
        return Err(Error::Convergence { iterations: 200, residual: resid });
    }
    Ok(sigma)
}

/// Call, put or implied-vol surface. Implied vols invert calls where
/// `K / S0 <= 1` and puts where `K / S0 > 1`.
pub fn price_surface(
    p: &NigParams,
    m: &MarketSpec,
    strikes: &[f64],
    maturities: &[f64],
    kind: SurfaceKind,
    cfg: &CarrMadan,
) -> Result<PriceSurface> {
    if strikes.is_empty() || maturities.is_empty() {
        return Err(Error::InvalidInput("price surface needs nonempty strike and maturity grids".into()));
    }
    let mut values = Vec::with_capacity(strikes.len() * maturities.len());
    for &t in maturities {
        let calls = carr_madan_call(p, m, strikes, t, cfg)?;
        for (&k, &c) in strikes.iter().zip(&calls) {
            let v = match kind {
                SurfaceKind::Call => c,
                SurfaceKind::Put => put_from_parity(c, k, t, m)?,
                SurfaceKind::ImpliedVol => {
                    if k / m.s0 <= 1.0 {
                        implied_vol(c, k, t, m, OptionKind::Call)?
                    } else {
                        implied_vol(put_from_parity(c, k, t, m)?, k, t, m, OptionKind::Put)?
                    }
                }
            };
            values.push(v);
        }
    }
    Ok(PriceSurface { maturities: maturities.to_vec(), strikes: strikes.to_vec(), values, kind, s0: m.s0 })
}
