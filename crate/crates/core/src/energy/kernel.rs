use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::math;

/// Radial profile `r ↦ V(r)` for `r > 0`.
pub trait RadialProfile {
    fn value(&self, r: f64) -> f64;
}

impl<F: Fn(f64) -> f64> RadialProfile for F {
    fn value(&self, r: f64) -> f64 {
        self(r)
    }
}

/// Value assigned to the zero offset, where `V` may be singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OriginRule {
    /// Mean of `V(|x|)` over the cell `[-h/2, h/2]^N`, by a `16^N`-point
    /// midpoint rule.
    CellAverage,
    Zero,
    Explicit(f64),
}

/// Midpoints per axis of the origin-cell quadrature.
pub const CELL_QUADRATURE_POINTS: usize = 16;

pub struct KernelV {
    profile: Box<dyn RadialProfile>,
    /// Weak-integrability exponent; declared, never checked.
    pub q: f64,
    pub origin: OriginRule,
}

impl KernelV {
    pub fn new(profile: Box<dyn RadialProfile>, q: f64, origin: OriginRule) -> Self {
        Self { profile, q, origin }
    }

    /// `V(r) = 1/r`, declared in weak `L^3`.
    pub fn coulomb(origin: OriginRule) -> Self {
        Self::new(Box::new(|r: f64| 1.0 / r), 3.0, origin)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Box::new(move |_r: f64| c), f64::INFINITY, OriginRule::Explicit(c))
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.profile.value(r)
    }

    /// Value used for the zero offset on a grid.
    pub fn origin_value(&self, spec: &GridSpec) -> f64 {
        match self.origin {
            OriginRule::Zero => 0.0,
            OriginRule::Explicit(v) => v,
            OriginRule::CellAverage => {
                let h = spec.spacing();
                let k = CELL_QUADRATURE_POINTS;
                let mids: Vec<f64> = (0..k).map(|i| ((i as f64 + 0.5) / k as f64 - 0.5) * h).collect();
                let dim = spec.dim();
                let total = k.pow(dim as u32);
                let mut sum = 0.0;
                for flat in 0..total {
                    let mut rest = flat;
                    let mut r2 = 0.0;
                    for _ in 0..dim {
                        let x = mids[rest % k];
                        rest /= k;
                        r2 += x * x;
                    }
                    sum += self.value(math::sqrt(r2));
                }
                sum / total as f64
            }
        }
    }
}

/// `V(|o|)` at every lattice offset `o ∈ [-(n-1), n-1]^N`, returned as a field
/// on the `(2n-1)`-point grid of half-width `2L` (same spacing).
pub fn sample_kernel(kernel: &KernelV, spec: &GridSpec) -> Result<ScalarField> {
    let padded = GridSpec::new(spec.dim(), 2 * spec.points_per_axis() - 1, 2.0 * spec.half_width())?;
    let origin = kernel.origin_value(spec);
    let mut values = Vec::with_capacity(padded.len());
    for idx in 0..padded.len() {
        let v = if padded.radius2_units(idx) == 0 {
            origin
        } else {
            kernel.value(padded.radius(idx))
        };
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "kernel not finite at r = {}",
                padded.radius(idx)
            )));
        }
        values.push(v);
    }
    ScalarField::new(padded, values)
}

/// Discrete aperiodic convolution `(V ⋆ g)(x) = Σ_y V(|x - y|) g(y)` over one
/// grid (no quadrature weight).
pub trait Convolver {
    fn spec(&self) -> &GridSpec;
    fn convolve(&self, g: &[f64]) -> Vec<f64>;
}

/// Literal double sum; `O(M^2)`.
pub struct DirectConvolver {
    spec: GridSpec,
    sampled: ScalarField,
}

impl DirectConvolver {
    pub fn new(kernel: &KernelV, spec: &GridSpec) -> Result<Self> {
        Ok(Self {
            spec: *spec,
            sampled: sample_kernel(kernel, spec)?,
        })
    }
}

impl Convolver for DirectConvolver {
    fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn convolve(&self, g: &[f64]) -> Vec<f64> {
        let spec = &self.spec;
        let padded = self.sampled.spec();
        let kv = self.sampled.values();
        let points: Vec<_> = (0..spec.len()).map(|i| spec.point(i)).collect();
        let mut out = vec![0.0; spec.len()];
        for (x, px) in points.iter().enumerate() {
            let mut acc = 0.0;
            for (y, py) in points.iter().enumerate() {
                if g[y] == 0.0 {
                    continue;
                }
                let o = [px[0] - py[0], px[1] - py[1], px[2] - py[2]];
                let k = padded.index(&o).expect("offset inside padded grid");
                acc += kv[k] * g[y];
            }
            out[x] = acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_kernel_samples() {
        let spec = GridSpec::new(2, 5, 1.0).unwrap();
        let s = sample_kernel(&KernelV::constant(1.0), &spec).unwrap();
        assert_eq!(s.spec().points_per_axis(), 9);
        assert!(s.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn coulomb_origin_cell_average_scales_as_one_over_h() {
        // quadrature oracle at h = 1, written out independently
        let mut c = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                for k in 0..16 {
                    let m = |a: usize| (a as f64 + 0.5) / 16.0 - 0.5;
                    c += 1.0 / (m(i).powi(2) + m(j).powi(2) + m(k).powi(2)).sqrt();
                }
            }
        }
        c /= 4096.0;
        // close to the exact cell mean of 1/r over the unit cube
        assert!((c - 2.380077).abs() < 5e-3, "{c}");
        let spec = GridSpec::new(3, 5, 1.0).unwrap(); // h = 0.5
        let s = sample_kernel(&KernelV::coulomb(OriginRule::CellAverage), &spec).unwrap();
        let o = s.spec().index(&[0, 0, 0]).unwrap();
        assert!((s.values()[o] - c / 0.5).abs() < 1e-12);
    }

    #[test]
    fn coulomb_samples_decrease_with_radius() {
        let spec = GridSpec::new(3, 5, 1.0).unwrap();
        let s = sample_kernel(&KernelV::coulomb(OriginRule::CellAverage), &spec).unwrap();
        let padded = s.spec();
        let mut pairs: Vec<(i64, f64)> =
            (0..padded.len()).map(|i| (padded.radius2_units(i), s.values()[i])).collect();
        pairs.sort_by_key(|a| a.0);
        for w in pairs.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn non_finite_kernel_is_an_error() {
        let spec = GridSpec::new(1, 3, 1.0).unwrap();
        let k = KernelV::new(Box::new(|r: f64| if r > 1.5 { f64::INFINITY } else { 1.0 }), 2.0, OriginRule::Zero);
        assert!(sample_kernel(&k, &spec).unwrap_err().to_string().starts_with("kernel not finite"));
    }

    #[test]
    fn direct_convolution_of_a_delta_reproduces_the_kernel() {
        let spec = GridSpec::new(2, 5, 2.0).unwrap();
        let kernel = KernelV::coulomb(OriginRule::Zero);
        let conv = DirectConvolver::new(&kernel, &spec).unwrap();
        let mut g = vec![0.0; spec.len()];
        let origin = spec.index(&[0, 0, 0]).unwrap();
        g[origin] = 1.0;
        let out = conv.convolve(&g);
        for (idx, v) in out.iter().enumerate() {
            let expect = if idx == origin { 0.0 } else { 1.0 / spec.radius(idx) };
            assert!((v - expect).abs() < 1e-15);
        }
    }
}
