//! Uniform grids on the centred box `[-L, L]^N` and the fields sampled on them.
//!
//! Values are stored row-major with the first axis varying slowest. Points are
//! addressed either by flat index or by integer offsets from the origin
//! (`[i64; 3]`, unused axes zero), which is what reflections operate on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Integer grid offsets from the origin, in units of the spacing.
pub type Point = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Grid(format!("dim must be 1, 2, or 3 (got {dim})")));
        }
        if points_per_axis < 3 || points_per_axis % 2 == 0 {
            return Err(Error::Grid("grid must have odd point count ≥ 3".into()));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Grid("half-width must be positive".into()));
        }
        Ok(Self {
            dim,
            n: points_per_axis,
            half_width,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Grid spacing `h = 2L / (n - 1)`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    /// Quadrature weight `h^N`.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        math::powf(self.spacing(), self.dim as f64)
    }

    /// Total number of points `n^N`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest offset along an axis, `(n - 1) / 2`.
    #[inline]
    pub fn half_points(&self) -> i64 {
        ((self.n - 1) / 2) as i64
    }

    /// Coordinates along one axis, `-L + k h`.
    pub fn axis_coords(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|k| (k as i64 - self.half_points()) as f64 * h)
            .collect()
    }

    /// Offsets of the point with flat index `idx`.
    pub fn point(&self, mut idx: usize) -> Point {
        debug_assert!(idx < self.len());
        let mut p = [0i64; 3];
        for axis in (0..self.dim).rev() {
            p[axis] = (idx % self.n) as i64 - self.half_points();
            idx /= self.n;
        }
        p
    }

    /// Flat index of a point, or `None` when it lies outside the box.
    pub fn index(&self, p: &Point) -> Option<usize> {
        let half = self.half_points();
        let mut idx = 0usize;
        for (axis, &x) in p.iter().enumerate() {
            if axis >= self.dim {
                if x != 0 {
                    return None;
                }
                continue;
            }
            if x < -half || x > half {
                return None;
            }
            idx = idx * self.n + (x + half) as usize;
        }
        Some(idx)
    }

    /// Physical coordinates of a grid point.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let p = self.point(idx);
        [p[0] as f64 * h, p[1] as f64 * h, p[2] as f64 * h]
    }

    /// Squared distance to the origin in grid units (exact).
    pub fn radius2_units(&self, idx: usize) -> i64 {
        let p = self.point(idx);
        p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
    }

    /// Euclidean distance `|x|` of a grid point.
    pub fn radius(&self, idx: usize) -> f64 {
        math::sqrt(self.radius2_units(idx) as f64) * self.spacing()
    }

    /// Stride of one step along `axis` in flat indexing.
    #[inline]
    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }
}

/// A real function sampled on a [`GridSpec`]. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Grid(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("non-finite field value at index {i}")));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    /// Samples `f` at every grid point (coordinates padded with zeros to 3).
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64; 3]) -> f64) -> Result<Self> {
        let values = (0..spec.len()).map(|i| f(&spec.coords(i))).collect();
        Self::new(spec, values)
    }

    /// Constructor for values already known to be finite and of the right length.
    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { spec, values }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `alpha * u`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.spec, self.values.iter().map(|v| alpha * v).collect())
    }

    /// Values sorted in descending order; two fields are equimeasurable on the
    /// same grid exactly when these agree.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_unstable_by(|a, b| b.total_cmp(a));
        v
    }

    /// `Σ |u|^p h^N`, summed independently of point order.
    pub fn lp_norm_pow(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Domain("exponent out of range".into()));
        }
        let mut terms: Vec<f64> = self.values.iter().map(|v| math::powf(v.abs(), p)).collect();
        Ok(math::order_free_sum(&mut terms) * self.spec.cell_volume())
    }

    /// Grid quadrature of the `L^p` norm, `(Σ |u|^p h^N)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        Ok(math::powf(self.lp_norm_pow(p)?, 1.0 / p))
    }

    /// Measure of the superlevel set `{u > level}`.
    pub fn distribution_function(&self, level: f64) -> Result<f64> {
        if !(level > 0.0) {
            return Err(Error::Domain("level must be positive".into()));
        }
        let count = self.values.iter().filter(|&&v| v > level).count();
        Ok(count as f64 * self.spec.cell_volume())
    }

    /// Finite-difference derivative along `axis`: centred in the interior,
    /// one-sided on the two faces.
    pub fn partial(&self, axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.values.len()];
        partial_into(&self.spec, &self.values, axis, &mut out);
        out
    }

    /// Pointwise Euclidean norm of the finite-difference gradient.
    pub fn gradient_magnitude(&self) -> ScalarField {
        let b2 = gradient_squared(&self.spec, &self.values);
        ScalarField::from_raw(self.spec, b2.into_iter().map(math::sqrt).collect())
    }

    /// `Σ |u|^p h^N` over points on the box faces; a truncation diagnostic.
    pub fn boundary_shell_mass(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Domain("exponent out of range".into()));
        }
        let half = self.spec.half_points();
        let dim = self.spec.dim();
        let mut terms: Vec<f64> = (0..self.values.len())
            .filter(|&i| {
                let pt = self.spec.point(i);
                pt[..dim].iter().any(|x| x.abs() == half)
            })
            .map(|i| math::powf(self.values[i].abs(), p))
            .collect();
        Ok(math::order_free_sum(&mut terms) * self.spec.cell_volume())
    }
}

/// Writes the finite-difference derivative of `values` along `axis` into `out`.
pub(crate) fn partial_into(spec: &GridSpec, values: &[f64], axis: usize, out: &mut [f64]) {
    let n = spec.points_per_axis();
    let h = spec.spacing();
    let stride = spec.stride(axis);
    for (idx, o) in out.iter_mut().enumerate() {
        let k = (idx / stride) % n;
        *o = if k == 0 {
            (values[idx + stride] - values[idx]) / h
        } else if k == n - 1 {
            (values[idx] - values[idx - stride]) / h
        } else {
            (values[idx + stride] - values[idx - stride]) / (2.0 * h)
        };
    }
}

/// Adds `Dᵀ flux` to `out`, where `D` is the operator of [`partial_into`].
pub(crate) fn partial_adjoint_add(spec: &GridSpec, flux: &[f64], axis: usize, out: &mut [f64]) {
    let n = spec.points_per_axis();
    let h = spec.spacing();
    let stride = spec.stride(axis);
    for (idx, &q) in flux.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let k = (idx / stride) % n;
        if k == 0 {
            out[idx + stride] += q / h;
            out[idx] -= q / h;
        } else if k == n - 1 {
            out[idx] += q / h;
            out[idx - stride] -= q / h;
        } else {
            out[idx + stride] += q / (2.0 * h);
            out[idx - stride] -= q / (2.0 * h);
        }
    }
}

/// `|Du|^2` at every point.
pub(crate) fn gradient_squared(spec: &GridSpec, values: &[f64]) -> Vec<f64> {
    let mut b2 = vec![0.0; values.len()];
    let mut d = vec![0.0; values.len()];
    for axis in 0..spec.dim() {
        partial_into(spec, values, axis, &mut d);
        for (acc, &x) in b2.iter_mut().zip(&d) {
            *acc += x * x;
        }
    }
    b2
}

/// `U = (u_1, ..., u_m)`, all components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiField {
    components: Vec<ScalarField>,
}

impl MultiField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Grid("a multi-field needs at least one component".into()))?;
        if components.iter().any(|c| c.spec() != first.spec()) {
            return Err(Error::Grid("all components must share one grid".into()));
        }
        Ok(Self { components })
    }

    pub fn single(field: ScalarField) -> Self {
        Self {
            components: vec![field],
        }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        self.components[0].spec()
    }

    /// Number of components `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    #[inline]
    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn is_nonnegative(&self) -> bool {
        self.components.iter().all(ScalarField::is_nonnegative)
    }

    /// Values of all components at point `idx`.
    pub(crate) fn point_values(&self, idx: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.values[idx];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> ScalarField {
        let n = values.len();
        let spec = GridSpec::new(1, n, (n - 1) as f64 / 2.0).unwrap();
        ScalarField::new(spec, values.to_vec()).unwrap()
    }

    #[test]
    fn make_grid_examples() {
        let g = GridSpec::new(1, 5, 2.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.axis_coords(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);

        let err = GridSpec::new(1, 4, 2.0).unwrap_err();
        assert_eq!(err.to_string(), "grid must have odd point count ≥ 3");
        assert_eq!(
            GridSpec::new(1, 5, 0.0).unwrap_err().to_string(),
            "half-width must be positive"
        );
        assert!(GridSpec::new(4, 5, 1.0).is_err());

        let g = GridSpec::new(3, 17, 8.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.len(), 4913);
    }

    #[test]
    fn origin_is_a_grid_point_and_indexing_round_trips() {
        let g = GridSpec::new(3, 7, 1.5).unwrap();
        let origin = g.index(&[0, 0, 0]).unwrap();
        assert_eq!(g.radius2_units(origin), 0);
        for idx in 0..g.len() {
            assert_eq!(g.index(&g.point(idx)), Some(idx));
        }
        assert_eq!(g.index(&[4, 0, 0]), None);
        let g2 = GridSpec::new(2, 5, 1.0).unwrap();
        assert_eq!(g2.index(&[0, 0, 1]), None);
    }

    #[test]
    fn lp_norm_hand_sum() {
        let u = line(&[0.0, 2.0, 1.0, 0.0, 3.0]);
        assert!((u.lp_norm(2.0).unwrap() - 14f64.sqrt()).abs() < 1e-15);
        assert_eq!(ScalarField::zeros(*u.spec()).lp_norm(3.0).unwrap(), 0.0);
        assert_eq!(u.lp_norm(0.5).unwrap_err().to_string(), "exponent out of range");
    }

    #[test]
    fn distribution_function_examples() {
        let u = line(&[0.0, 2.0, 1.0, 0.0, 3.0]);
        assert_eq!(u.distribution_function(1.5).unwrap(), 2.0);
        assert_eq!(u.distribution_function(3.5).unwrap(), 0.0);
        assert_eq!(
            u.distribution_function(0.0).unwrap_err().to_string(),
            "level must be positive"
        );
    }

    #[test]
    fn gradient_examples() {
        let u = line(&[0.0, 1.0, 4.0, 9.0, 16.0]);
        let g = u.gradient_magnitude();
        assert_eq!(&g.values()[1..4], &[2.0, 4.0, 6.0]);
        // one-sided faces
        assert_eq!(g.values()[0], 1.0);
        assert_eq!(g.values()[4], 7.0);

        let affine = line(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!(affine.gradient_magnitude().values().iter().all(|&b| b == 1.0));

        let spec = GridSpec::new(2, 5, 1.0).unwrap();
        let c = ScalarField::new(spec, vec![0.7; 25]).unwrap();
        assert!(c.gradient_magnitude().is_zero());
    }

    #[test]
    fn adjoint_matches_partial() {
        let spec = GridSpec::new(2, 5, 1.0).unwrap();
        let u: Vec<f64> = (0..25).map(|i| ((i * 7919) % 13) as f64 * 0.1).collect();
        let w: Vec<f64> = (0..25).map(|i| ((i * 104729) % 11) as f64 * 0.3 - 1.0).collect();
        for axis in 0..2 {
            let mut du = vec![0.0; 25];
            partial_into(&spec, &u, axis, &mut du);
            let lhs: f64 = du.iter().zip(&w).map(|(a, b)| a * b).sum();
            let mut dtw = vec![0.0; 25];
            partial_adjoint_add(&spec, &w, axis, &mut dtw);
            let rhs: f64 = dtw.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12, "axis {axis}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn rejects_bad_values() {
        let spec = GridSpec::new(1, 3, 1.0).unwrap();
        assert!(ScalarField::new(spec, vec![0.0, f64::NAN, 1.0]).is_err());
        assert_eq!(
            ScalarField::new(spec, vec![0.0; 2]).unwrap_err().to_string(),
            "expected 3 values, got 2"
        );
        let other = GridSpec::new(1, 5, 1.0).unwrap();
        assert!(MultiField::new(vec![ScalarField::zeros(spec), ScalarField::zeros(other)]).is_err());
        assert!(MultiField::new(vec![]).is_err());
    }

    #[test]
    fn boundary_shell_mass_sees_faces_only() {
        let spec = GridSpec::new(2, 5, 2.0).unwrap();
        let mut bump = ScalarField::zeros(spec);
        bump.values[spec.index(&[0, 0, 0]).unwrap()] = 1.0;
        assert_eq!(bump.boundary_shell_mass(2.0).unwrap(), 0.0);
        bump.values[spec.index(&[2, -1, 0]).unwrap()] = 2.0;
        assert_eq!(bump.boundary_shell_mass(2.0).unwrap(), 4.0);
    }
}
