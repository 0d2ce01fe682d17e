//! Adaptive Gauss-Kronrod (7/15) quadrature.

use alloc::vec::Vec;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, libm::fabs((kron - gauss) * half))
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`, refining the
/// interval with the largest error estimate until the total estimate drops
/// below `tol` or `max_intervals` is reached. Returns `(value, error)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (v, e) = kronrod(&mut f, a, b);
    let mut pieces: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    let mut err = e;
    while err > tol && pieces.len() < max_intervals {
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, pe) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&mut f, lo, mid);
        let (v2, e2) = kronrod(&mut f, mid, hi);
        err += e1 + e2 - pe;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    let value = pieces.iter().map(|p| p.2).sum();
    let error = pieces.iter().map(|p| p.3).sum();
    (value, error)
}

/// Integral of `f` over `[a, +inf)` through the substitution
/// `x = a + t / (1 - t)`.
pub fn integrate_upper<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    tol: f64,
    max_intervals: usize,
) -> (f64, f64) {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = 1.0 - t;
            let v = f(a + t / u) / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
        max_intervals,
    )
}

/// Integral of `f` over `(-inf, b]`.
pub fn integrate_lower<F: FnMut(f64) -> f64>(
    mut f: F,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> (f64, f64) {
    integrate_upper(|x| f(2.0 * b - x), b, tol, max_intervals)
}
