//! Derivative-free minimisation and bracketed root finding.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evaluations: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ...and the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evaluations: 4000,
            f_tol: 1e-10,
            x_tol: 1e-9,
        }
    }
}

impl NelderMead {
    /// Minimise `f` starting from `x0` with initial simplex offsets `step`.
    /// Non-finite objective values are treated as `+inf`.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], step: &[f64]) -> Minimum {
        let n = x0.len();
        let mut evals = 0usize;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += step[i];
            simplex.push(p);
        }
        let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut converged = false;
        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut trial2 = vec![0.0; n];

        while evals < self.max_evaluations {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[n] - values[0];
            let diameter = simplex[1..]
                .iter()
                .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| libm::fabs(a - b)))
                .fold(0.0, f64::max);
            if spread.is_finite() && spread <= self.f_tol * (1.0 + libm::fabs(values[0])) && diameter <= self.x_tol {
                converged = true;
                break;
            }

            for c in centroid.iter_mut() {
                *c = 0.0;
            }
            for p in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / n as f64;
                }
            }
            let worst = &simplex[n];
            for i in 0..n {
                trial[i] = centroid[i] + alpha * (centroid[i] - worst[i]);
            }
            let fr = eval(&trial, &mut evals);
            if fr < values[0] {
                for i in 0..n {
                    trial2[i] = centroid[i] + gamma * (trial[i] - centroid[i]);
                }
                let fe = eval(&trial2, &mut evals);
                if fe < fr {
                    simplex[n].copy_from_slice(&trial2);
                    values[n] = fe;
                } else {
                    simplex[n].copy_from_slice(&trial);
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
                continue;
            }
            // contraction (outside if the reflection improved on the worst)
            let outside = fr < values[n];
            for i in 0..n {
                trial2[i] = if outside {
                    centroid[i] + rho * (trial[i] - centroid[i])
                } else {
                    centroid[i] + rho * (worst[i] - centroid[i])
                };
            }
            let fc = eval(&trial2, &mut evals);
            if fc < values[n].min(fr) {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fc;
                continue;
            }
            // shrink toward the best vertex
            let best = simplex[0].clone();
            for k in 1..=n {
                for i in 0..n {
                    simplex[k][i] = best[i] + sigma * (simplex[k][i] - best[i]);
                }
                values[k] = eval(&simplex[k], &mut evals);
            }
        }

        let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        Minimum {
            x: simplex[best].clone(),
            value: values[best],
            evaluations: evals,
            converged,
        }
    }
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if libm::fabs(b - a) <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Brent's method for a root of `f` bracketed by `[a, b]`. Returns `None`
/// when the endpoints do not bracket a sign change or the iteration cap is
/// reached.
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, x_tol: f64, max_iter: usize) -> Option<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if libm::fabs(fc) < libm::fabs(fb) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * libm::fabs(b) + 0.5 * x_tol;
        let m = 0.5 * (c - b);
        if libm::fabs(m) <= tol || fb == 0.0 {
            return Some(b);
        }
        if libm::fabs(e) >= tol && libm::fabs(fa) > libm::fabs(fb) {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - libm::fabs(tol * q)).min(libm::fabs(e * q)) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if libm::fabs(d) > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    None
}

/// Bisection for the point where a non-decreasing `f` crosses `target`,
/// stopping when the bracket is narrower than `x_tol`.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(mut f: F, target: f64, mut lo: f64, mut hi: f64, x_tol: f64) -> f64 {
    for _ in 0..400 {
        if hi - lo <= x_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
