//! In-place iterative radix-2 FFT.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// Precomputed twiddles and bit-reversal table for a fixed power-of-two
/// length. Immutable after construction, so one plan can be shared.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    /// Plan for the forward transform `X_k = sum_j x_j exp(-2 pi i j k / n)`.
    /// Returns `None` unless `n` is a power of two.
    pub fn new(n: usize) -> Option<Self> {
        if n == 0 || !n.is_power_of_two() {
            return None;
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let ang = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(ang), libm::sin(ang))
            })
            .collect();
        Some(Self { len: n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Forward transform of `buf` in place. Panics if the length differs
    /// from the plan.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length must match the plan");
        let n = self.len;
        for i in 0..n {
            let j = self.bitrev[i];
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}
