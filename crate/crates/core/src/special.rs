//! Special functions used by the distribution kernels and test statistics.
//!
//! Everything here is evaluated with `libm` so the crate stays usable
//! without `std`.

use core::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Modified Bessel function of the second kind, order one.
pub fn bessel_k1(x: f64) -> f64 {
    if x <= 2.0 {
        k1_series(x)
    } else {
        k1_scaled_cheb(x) * libm::exp(-x)
    }
}

/// Exponentially scaled `exp(x) * K1(x)`; finite for arguments where
/// `K1` itself underflows.
pub fn bessel_k1_scaled(x: f64) -> f64 {
    if x <= 2.0 {
        k1_series(x) * libm::exp(x)
    } else {
        k1_scaled_cheb(x)
    }
}

/// `ln K1(x)`, finite for large `x`.
pub fn ln_bessel_k1(x: f64) -> f64 {
    if x <= 2.0 {
        libm::log(k1_series(x))
    } else {
        libm::log(k1_scaled_cheb(x)) - x
    }
}

// Power series around the origin (converges quickly for x <= 2).
fn k1_series(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    let q = 0.25 * x * x;
    // term_k = q^k / (k! (k+1)!)
    let mut term = 1.0;
    let mut i1 = 0.0;
    let mut psi_sum = 0.0;
    let mut harmonic_k = 0.0; // H_k
    let mut k = 0usize;
    loop {
        let harmonic_k1 = harmonic_k + 1.0 / (k as f64 + 1.0);
        let psi = -2.0 * EULER_GAMMA + harmonic_k + harmonic_k1;
        i1 += term;
        psi_sum += psi * term;
        if term < EPS * i1 && k > 1 {
            break;
        }
        k += 1;
        term *= q / (k as f64 * (k as f64 + 1.0));
        harmonic_k = harmonic_k1;
        if k > 200 {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    1.0 / x + libm::log(0.5 * x) * i1 - 0.25 * x * psi_sum
}

// Chebyshev coefficients of sqrt(x) exp(x) K1(x) in u = 4/x - 1, x >= 2.
const K1_CHEB: [f64; 26] = [
    2.7206261904844427,
    0.10392373657681724,
    -0.002857816859622779,
    0.00019521551847135162,
    -1.936197974166083e-05,
    2.406484947837217e-06,
    -3.5019606030878126e-07,
    5.7410841254500495e-08,
    -1.0345762465678097e-08,
    2.0150497551970347e-09,
    -4.1903547593419254e-10,
    9.218315187605315e-11,
    -2.129967838427791e-11,
    5.139639673482343e-12,
    -1.2891739609498229e-12,
    3.348419666052243e-13,
    -8.976705182010146e-14,
    2.4771544242195988e-14,
    -7.0198370892147685e-15,
    2.038703166239861e-15,
    -6.057047270643018e-16,
    1.8380935752430455e-16,
    -5.689462849193648e-17,
    1.7940510478863572e-17,
    -5.7567444820733025e-18,
    1.8778651901623268e-18,
];

// exp(x) * K1(x) for x >= 2 by Clenshaw summation.
fn k1_scaled_cheb(x: f64) -> f64 {
    let u = 4.0 / x - 1.0;
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in K1_CHEB[1..].iter().rev() {
        let t = 2.0 * u * b1 - b2 + c;
        b2 = b1;
        b1 = t;
    }
    (u * b1 - b2 + 0.5 * K1_CHEB[0]) / libm::sqrt(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn norm_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile: rational initial guess refined by one Halley
/// step against `erfc`, accurate to about 1e-15.
#[allow(clippy::excessive_precision)]
pub fn norm_ppf(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement; work on the smaller tail to keep precision.
    let e = if p < 0.5 {
        0.5 * libm::erfc(-x / SQRT_2) - p
    } else {
        (1.0 - p) - 0.5 * libm::erfc(x / SQRT_2)
    };
    let u = e * libm::sqrt(2.0 * PI) * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < 3e-16 {
            break;
        }
    }
    h
}

/// Upper regularized incomplete gamma `Q(a, x) = Gamma(a, x) / Gamma(a)`.
pub fn reg_inc_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if libm::fabs(del) < libm::fabs(sum) * EPS {
            break;
        }
    }
    sum * libm::exp(-x + a * libm::log(x) - ln_gamma(a))
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if libm::fabs(del - 1.0) < EPS {
            break;
        }
    }
    libm::exp(-x + a * libm::log(x) - ln_gamma(a)) * h
}

/// Student's t CDF with `nu` degrees of freedom (unit scale).
pub fn student_t_cdf(x: f64, nu: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let tail = 0.5 * reg_inc_beta(0.5 * nu, 0.5, nu / (nu + x * x));
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Log-density of the Student's t law with `nu` degrees of freedom.
pub fn student_t_ln_pdf(x: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * libm::log(nu * PI)
        - 0.5 * (nu + 1.0) * libm::log1p(x * x / nu)
}

/// Survival function of the chi-square law with `k` degrees of freedom.
pub fn chi2_sf(x: f64, k: f64) -> f64 {
    reg_inc_gamma_q(0.5 * k, 0.5 * x)
}

/// Quantile of the chi-square law with one degree of freedom.
pub fn chi2_1_ppf(p: f64) -> f64 {
    let z = norm_ppf(0.5 * (1.0 + p));
    z * z
}

/// `P(X <= k)` for `X ~ Binomial(n, p)`.
pub fn binom_cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    reg_inc_beta((n - k) as f64, k as f64 + 1.0, 1.0 - p)
}

/// `x ln y` with the `0 ln 0 = 0` convention.
pub fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * libm::log(y)
    }
}
