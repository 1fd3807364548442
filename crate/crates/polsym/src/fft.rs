//! Aperiodic convolution through a zero-padded FFT.
//!
//! The kernel is sampled at every lattice offset in `[-(n-1), n-1]^N` and
//! stored circularly on a `P^N` box with `P >= 2n - 1`, so the circular
//! convolution of the padded arrays equals the linear one on the grid.

use std::sync::Arc;

use polsym_core::energy::{sample_kernel, Convolver, KernelV};
use polsym_core::{GridSpec, Result};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest `2^a 3^b 5^c` that is at least `min`.
pub fn smooth_length(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut r = n;
        for f in [2, 3, 5] {
            while r % f == 0 {
                r /= f;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

pub struct FftConvolver {
    spec: GridSpec,
    padded: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex64>,
}

impl FftConvolver {
    pub fn new(kernel: &KernelV, spec: &GridSpec) -> Result<Self> {
        let sampled = sample_kernel(kernel, spec)?;
        let padded = smooth_length(2 * spec.points_per_axis() - 1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);
        let dim = spec.dim();
        let kspec = sampled.spec();
        let mut buf = vec![Complex64::new(0.0, 0.0); padded.pow(dim as u32)];
        for (idx, &v) in sampled.values().iter().enumerate() {
            let o = kspec.point(idx);
            let mut flat = 0;
            for &c in &o[..dim] {
                flat = flat * padded + c.rem_euclid(padded as i64) as usize;
            }
            buf[flat] = Complex64::new(v, 0.0);
        }
        let mut conv = Self {
            spec: *spec,
            padded,
            forward,
            inverse,
            kernel_hat: Vec::new(),
        };
        conv.transform(&mut buf, false);
        conv.kernel_hat = buf;
        Ok(conv)
    }

    /// Padded length per axis.
    pub fn padded_len(&self) -> usize {
        self.padded
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let p = self.padded;
        let dim = self.spec.dim();
        let mut line = vec![Complex64::new(0.0, 0.0); p];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..dim {
            let stride = p.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(buf, &mut scratch);
                continue;
            }
            let block = stride * p;
            for base in (0..buf.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (k, c) in line.iter_mut().enumerate() {
                        *c = buf[start + k * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (k, c) in line.iter().enumerate() {
                        buf[start + k * stride] = *c;
                    }
                }
            }
        }
    }
}

impl Convolver for FftConvolver {
    fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn convolve(&self, g: &[f64]) -> Vec<f64> {
        let spec = &self.spec;
        let n = spec.points_per_axis();
        let p = self.padded;
        let dim = spec.dim();
        let padded_index = |idx: usize| {
            let mut rest = idx;
            let mut flat = 0;
            let mut scale = 1;
            for _ in 0..dim {
                flat += (rest % n) * scale;
                rest /= n;
                scale *= p;
            }
            flat
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); self.kernel_hat.len()];
        for (idx, &v) in g.iter().enumerate() {
            buf[padded_index(idx)] = Complex64::new(v, 0.0);
        }
        self.transform(&mut buf, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.transform(&mut buf, true);
        let norm = 1.0 / self.kernel_hat.len() as f64;
        (0..g.len()).map(|idx| buf[padded_index(idx)].re * norm).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use polsym_core::energy::{DirectConvolver, OriginRule};

    #[test]
    fn smooth_lengths() {
        assert_eq!(smooth_length(65), 72);
        assert_eq!(smooth_length(17), 18);
        assert_eq!(smooth_length(7), 8);
        assert_eq!(smooth_length(1), 1);
    }

    #[test]
    fn matches_direct_sum_in_each_dimension() {
        let kernel = KernelV::coulomb(OriginRule::CellAverage);
        for (dim, n) in [(1, 11), (2, 7), (3, 5)] {
            let spec = GridSpec::new(dim, n, 2.0).unwrap();
            let g: Vec<f64> = (0..spec.len()).map(|i| ((i * 37 % 11) as f64) / 7.0).collect();
            let direct = DirectConvolver::new(&kernel, &spec).unwrap().convolve(&g);
            let fft = FftConvolver::new(&kernel, &spec).unwrap().convolve(&g);
            for (a, b) in fft.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "dim {dim}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn padded_size_for_common_grids() {
        let kernel = KernelV::constant(1.0);
        let spec = GridSpec::new(3, 33, 8.0).unwrap();
        assert_eq!(FftConvolver::new(&kernel, &spec).unwrap().padded_len(), 72);
    }
}
