//! Axis-wise FFTs on row-major n-d arrays.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

fn planner() -> &'static Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)> {
    static P: OnceLock<Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Plan>)>> = OnceLock::new();
    P.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
}

pub fn plan(n: usize, inverse: bool) -> Plan {
    let mut g = planner().lock().expect("fft planner lock");
    if let Some(p) = g.1.get(&(n, inverse)) {
        return p.clone();
    }
    let p = if inverse {
        g.0.plan_fft_inverse(n)
    } else {
        g.0.plan_fft_forward(n)
    };
    g.1.insert((n, inverse), p.clone());
    p
}

const LINES_PER_TASK: usize = 32;

/// Unnormalised FFT of every line along `axis`.
pub fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fft = plan(n, inverse);
    if stride == 1 {
        data.par_chunks_mut(n * LINES_PER_TASK).for_each(|c| fft.process(c));
        return;
    }
    let lines = outer * stride;
    let mut buf = vec![Complex64::new(0.0, 0.0); lines * n];
    buf.par_chunks_mut(n).enumerate().for_each(|(li, line)| {
        let (o, s) = (li / stride, li % stride);
        let base = o * n * stride + s;
        for (j, v) in line.iter_mut().enumerate() {
            *v = data[base + j * stride];
        }
    });
    buf.par_chunks_mut(n * LINES_PER_TASK).for_each(|c| fft.process(c));
    data.par_chunks_mut(n * stride).enumerate().for_each(|(o, blk)| {
        for s in 0..stride {
            let line = &buf[(o * stride + s) * n..(o * stride + s + 1) * n];
            for (j, v) in line.iter().enumerate() {
                blk[j * stride + s] = *v;
            }
        }
    });
}

/// Signed FFT frequency index of bin j on an n-point axis.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Multiplier for a translation by `shift` of the bin j mode (angular frequency 2π·index/L).
///
/// The Nyquist bin gets the real part so real data stays real.
pub fn shift_factor(j: usize, n: usize, length: f64, shift: f64) -> Complex64 {
    let idx = signed_index(j, n);
    let w = 2.0 * std::f64::consts::PI * idx as f64 / length;
    if n % 2 == 0 && j == n / 2 {
        Complex64::new((w * shift).cos(), 0.0)
    } else {
        Complex64::from_polar(1.0, -w * shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_fft_matches_naive_dft() {
        let shape = [4usize, 8, 2];
        let n: usize = shape.iter().product();
        let data: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        for axis in 0..3 {
            let mut d = data.clone();
            fft_axis(&mut d, &shape, axis, false);
            let m = shape[axis];
            let stride: usize = shape[axis + 1..].iter().product();
            for i in 0..n {
                let j = (i / stride) % m;
                let base = i - j * stride;
                let want: Complex64 = (0..m)
                    .map(|t| {
                        data[base + t * stride]
                            * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (j * t) as f64 / m as f64)
                    })
                    .sum();
                assert!((d[i] - want).norm() < 1e-12);
            }
        }
    }
}
