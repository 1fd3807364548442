//! Polarization with respect to grid-compatible half-spaces, discrete Schwarz
//! symmetrization and iterated polarizations.
//!
//! Only reflections that permute grid points are admissible: planes normal to
//! an axis through grid or half-grid planes, and the two-axis diagonal planes
//! through the origin. Polarizing is then an exact exchange of values between
//! reflection pairs, so the multiset of values is preserved bit-for-bit.
//!
//! The canonical Schwarz order lists points by distance to the origin and
//! breaks ties by ascending coordinates. An origin plane leaves the canonical
//! rearrangement fixed only when its orientation agrees with that order, i.e.
//! `{x_k <= 0}`, `{x_i <= x_j}` and `{x_i + x_j <= 0}` for `i < j`; planes with
//! `t < 0` fix it for either orientation. [`schedule_family`] is built from
//! exactly these half-spaces.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, MultiField, Point, ScalarField};
use crate::math;

/// Unit normal of an admissible half-space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normal {
    /// `sign * e_axis`.
    Axis { axis: usize, sign: i8 },
    /// `orientation * (e_i + sigma * e_j) / sqrt(2)` with `i < j`.
    Diagonal {
        i: usize,
        j: usize,
        sigma: i8,
        orientation: i8,
    },
}

/// Closed half-space `H = {x : x·e >= t}` with `t <= 0`.
///
/// The offset is stored in half grid steps, `t = offset_half_steps * h / 2`, so
/// the same value describes the same plane on any grid with that spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfSpace {
    normal: Normal,
    offset_half_steps: i64,
}

impl HalfSpace {
    /// Axis-normal half-space `{sign * x_axis >= t}`, `t = offset_half_steps * h / 2 <= 0`.
    pub fn axis(axis: usize, sign: i8, offset_half_steps: i64) -> Result<Self> {
        if axis > 2 || (sign != 1 && sign != -1) || offset_half_steps > 0 {
            return Err(Error::NotGridCompatible);
        }
        Ok(Self {
            normal: Normal::Axis { axis, sign },
            offset_half_steps,
        })
    }

    /// Diagonal half-space through the origin,
    /// `{orientation * (x_i + sigma * x_j) >= 0}`.
    pub fn diagonal(i: usize, j: usize, sigma: i8, orientation: i8) -> Result<Self> {
        let unit = |s: i8| s == 1 || s == -1;
        if i >= j || j > 2 || !unit(sigma) || !unit(orientation) {
            return Err(Error::NotGridCompatible);
        }
        Ok(Self {
            normal: Normal::Diagonal {
                i,
                j,
                sigma,
                orientation,
            },
            offset_half_steps: 0,
        })
    }

    #[inline]
    pub fn normal(&self) -> Normal {
        self.normal
    }

    #[inline]
    pub fn offset_half_steps(&self) -> i64 {
        self.offset_half_steps
    }

    /// Offset `t` in length units on `spec`.
    pub fn offset(&self, spec: &GridSpec) -> f64 {
        self.offset_half_steps as f64 * spec.spacing() / 2.0
    }

    /// Unit normal as a 3-vector.
    pub fn normal_vector(&self) -> [f64; 3] {
        let mut e = [0.0; 3];
        match self.normal {
            Normal::Axis { axis, sign } => e[axis] = sign as f64,
            Normal::Diagonal {
                i,
                j,
                sigma,
                orientation,
            } => {
                let c = orientation as f64 / math::sqrt(2.0);
                e[i] = c;
                e[j] = c * sigma as f64;
            }
        }
        e
    }

    /// Errors unless every axis used by the normal exists on `spec`.
    pub fn check(&self, spec: &GridSpec) -> Result<()> {
        let top = match self.normal {
            Normal::Axis { axis, .. } => axis,
            Normal::Diagonal { j, .. } => j,
        };
        if top >= spec.dim() {
            return Err(Error::NotGridCompatible);
        }
        Ok(())
    }

    /// Positive inside `H`, zero on `∂H`, negative outside. Integer valued so
    /// membership is decided exactly.
    #[inline]
    pub fn signed_level(&self, p: &Point) -> i64 {
        match self.normal {
            Normal::Axis { axis, sign } => 2 * sign as i64 * p[axis] - self.offset_half_steps,
            Normal::Diagonal {
                i,
                j,
                sigma,
                orientation,
            } => orientation as i64 * (p[i] + sigma as i64 * p[j]),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.signed_level(p) >= 0
    }

    /// `x_H = x - 2 (x·e - t) e` in grid offsets.
    #[inline]
    pub fn reflect_point(&self, p: &Point) -> Point {
        let mut q = *p;
        match self.normal {
            Normal::Axis { axis, sign } => {
                q[axis] = sign as i64 * self.offset_half_steps - p[axis];
            }
            Normal::Diagonal { i, j, sigma, .. } => {
                let s = sigma as i64;
                q[i] = -s * p[j];
                q[j] = -s * p[i];
            }
        }
        q
    }

    /// Whether polarizing by this half-space leaves the canonical Schwarz
    /// arrangement unchanged (see the module docs).
    pub fn fixes_canonical_order(&self) -> bool {
        if self.offset_half_steps < 0 {
            return true;
        }
        match self.normal {
            Normal::Axis { sign, .. } => sign == -1,
            Normal::Diagonal { orientation, .. } => orientation == -1,
        }
    }
}

impl fmt::Display for HalfSpace {
    /// Normal only; e.g. `+e1`, `-(e1-e2)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sgn = |s: i8| if s > 0 { '+' } else { '-' };
        match self.normal {
            Normal::Axis { axis, sign } => write!(f, "{}e{}", sgn(sign), axis + 1),
            Normal::Diagonal {
                i,
                j,
                sigma,
                orientation,
            } => write!(f, "{}(e{}{}e{})", sgn(orientation), i + 1, sgn(sigma), j + 1),
        }
    }
}

/// Index of `x_H` for the point with flat index `index`, or `None` when the
/// reflected point leaves the box.
pub fn reflect(spec: &GridSpec, h: &HalfSpace, index: usize) -> Result<Option<usize>> {
    h.check(spec)?;
    if index >= spec.len() {
        return Err(Error::Domain(format!("grid index {index} out of range")));
    }
    Ok(spec.index(&h.reflect_point(&spec.point(index))))
}

/// Every admissible half-space on `spec`, both orientations.
pub fn all_half_spaces(spec: &GridSpec) -> Vec<HalfSpace> {
    let mut out = Vec::new();
    let reach = (spec.points_per_axis() - 1) as i64;
    for axis in 0..spec.dim() {
        for t2 in (-reach..=0).rev() {
            for sign in [1i8, -1] {
                out.push(HalfSpace::axis(axis, sign, t2).expect("valid axis plane"));
            }
        }
    }
    for i in 0..spec.dim() {
        for j in i + 1..spec.dim() {
            for sigma in [-1i8, 1] {
                for orientation in [1i8, -1] {
                    out.push(HalfSpace::diagonal(i, j, sigma, orientation).expect("valid diagonal"));
                }
            }
        }
    }
    out
}

/// Half-spaces used by iterated polarizations: the admissible ones that keep
/// the canonical Schwarz arrangement fixed.
pub fn schedule_family(spec: &GridSpec) -> Vec<HalfSpace> {
    all_half_spaces(spec)
        .into_iter()
        .filter(HalfSpace::fixes_canonical_order)
        .collect()
}

fn require_nonnegative(field: &ScalarField, msg: &'static str) -> Result<()> {
    if field.is_nonnegative() {
        Ok(())
    } else {
        Err(Error::Negative(msg))
    }
}

/// Polarization `u^H`, together with the mass lost to the implicit zero
/// extension outside the box (always zero when `t <= 0`, kept as a check).
pub fn polarize_with_leak(field: &ScalarField, h: &HalfSpace) -> Result<(ScalarField, f64)> {
    require_nonnegative(field, "polarization requires non-negative fields")?;
    let spec = *field.spec();
    h.check(&spec)?;
    let u = field.values();
    let mut out = u.to_vec();
    let mut leak = 0.0;
    for idx in 0..u.len() {
        let p = spec.point(idx);
        let level = h.signed_level(&p);
        if level == 0 {
            continue;
        }
        match spec.index(&h.reflect_point(&p)) {
            Some(partner) if level > 0 => {
                let (a, b) = (u[idx], u[partner]);
                out[idx] = a.max(b);
                out[partner] = a.min(b);
            }
            // handled from the partner's side
            Some(_) => {}
            // partner is the zero extension: max(u, 0) = u inside H
            None if level > 0 => {}
            None => {
                leak += u[idx];
                out[idx] = 0.0;
            }
        }
    }
    Ok((ScalarField::from_raw(spec, out), leak * spec.cell_volume()))
}

pub fn polarize(field: &ScalarField, h: &HalfSpace) -> Result<ScalarField> {
    polarize_with_leak(field, h).map(|(f, _)| f)
}

/// Component-wise polarization with one half-space.
pub fn polarize_multi(fields: &MultiField, h: &HalfSpace) -> Result<MultiField> {
    let comps = fields
        .components()
        .iter()
        .map(|c| polarize(c, h))
        .collect::<Result<Vec<_>>>()?;
    MultiField::new(comps)
}

/// The canonical point order of a grid: distance to the origin ascending, ties
/// by ascending coordinates.
#[derive(Debug, Clone)]
pub struct SchwarzOrder {
    spec: GridSpec,
    order: Vec<usize>,
}

impl SchwarzOrder {
    pub fn new(spec: &GridSpec) -> Self {
        let mut order: Vec<usize> = (0..spec.len()).collect();
        order.sort_by_key(|&i| (spec.radius2_units(i), spec.point(i)));
        Self { spec: *spec, order }
    }

    /// Flat indices in canonical order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Schwarz rearrangement `u*`: the largest value goes to the first point
    /// of the canonical order, and so on.
    pub fn apply(&self, field: &ScalarField) -> Result<ScalarField> {
        require_nonnegative(field, "Schwarz rearrangement requires non-negative fields")?;
        if field.spec() != &self.spec {
            return Err(Error::Grid("field is not on the grid of this order".into()));
        }
        let sorted = field.sorted_values();
        let mut out = vec![0.0; sorted.len()];
        for (&idx, v) in self.order.iter().zip(sorted) {
            out[idx] = v;
        }
        Ok(ScalarField::from_raw(self.spec, out))
    }
}

pub fn schwarz(field: &ScalarField) -> Result<ScalarField> {
    SchwarzOrder::new(field.spec()).apply(field)
}

pub fn schwarz_multi(fields: &MultiField) -> Result<MultiField> {
    let order = SchwarzOrder::new(fields.spec());
    let comps = fields
        .components()
        .iter()
        .map(|c| order.apply(c))
        .collect::<Result<Vec<_>>>()?;
    MultiField::new(comps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Random,
    Sweep,
    Greedy,
}

impl ScheduleMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(Self::Random),
            "sweep" => Some(Self::Sweep),
            "greedy" => Some(Self::Greedy),
            _ => None,
        }
    }
}

/// Candidates examined per greedy step.
pub const GREEDY_CANDIDATES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationSchedule {
    pub mode: ScheduleMode,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once every relative distance is at most this.
    pub tol: f64,
    /// Norm exponent used for the monitored distance.
    pub p: f64,
}

impl PolarizationSchedule {
    fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        if !(self.p >= 1.0) {
            return Err(Error::Domain("exponent out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// `None` for the initial state.
    pub half_space: Option<HalfSpace>,
    /// `t` of the half-space in length units (0 for the initial state).
    pub offset: f64,
    /// `‖u_{n,i} - u_i*‖_p / ‖u_i*‖_p` per component.
    pub rel_dist: Vec<f64>,
}

impl TraceRecord {
    pub fn max_dist(&self) -> f64 {
        self.rel_dist.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Converged,
    MaxIterReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub status: TraceStatus,
    /// Total mass lost to the zero extension over the run.
    pub mass_leak: f64,
}

impl ConvergenceTrace {
    pub fn final_max_dist(&self) -> f64 {
        self.records.last().map_or(0.0, TraceRecord::max_dist)
    }

    /// CSV with columns `iter,normal,offset,rel_dist_1,...,rel_dist_m`.
    pub fn to_csv(&self) -> String {
        let m = self.records.first().map_or(0, |r| r.rel_dist.len());
        let mut s = String::from("iter,normal,offset");
        for i in 1..=m {
            s.push_str(&format!(",rel_dist_{i}"));
        }
        s.push('\n');
        for r in &self.records {
            let normal = r
                .half_space
                .map_or_else(|| String::from("none"), |h| format!("{h}"));
            s.push_str(&format!("{},{},{:e}", r.iter, normal, r.offset));
            for d in &r.rel_dist {
                s.push_str(&format!(",{d:.17e}"));
            }
            s.push('\n');
        }
        s
    }
}

/// `Σ_x |u(x) - v(x)|^p` summed independently of point order.
fn distance_pow(u: &ScalarField, v: &ScalarField, p: f64) -> f64 {
    let mut terms: Vec<f64> = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| math::powf((a - b).abs(), p))
        .collect();
    math::order_free_sum(&mut terms)
}

fn relative_distances(u: &MultiField, targets: &[ScalarField], target_norms: &[f64], p: f64) -> Vec<f64> {
    u.components()
        .iter()
        .zip(targets)
        .zip(target_norms)
        .map(|((c, t), &norm)| {
            let d = math::powf(distance_pow(c, t, p), 1.0 / p);
            if norm == 0.0 {
                d
            } else {
                d / norm
            }
        })
        .collect()
}

/// Iterates `U_n = U_{n-1}^{H_n}` towards the component-wise Schwarz
/// rearrangement, with `H_n` drawn from [`schedule_family`].
pub fn iterate_polarizations(
    initial: &MultiField,
    schedule: &PolarizationSchedule,
) -> Result<(MultiField, ConvergenceTrace)> {
    schedule.validate()?;
    if !initial.is_nonnegative() {
        return Err(Error::Negative("polarization requires non-negative fields"));
    }
    let spec = *initial.spec();
    let family = schedule_family(&spec);
    if family.is_empty() {
        return Err(Error::Config("empty admissible half-space family".into()));
    }
    let order = SchwarzOrder::new(&spec);
    let targets = initial
        .components()
        .iter()
        .map(|c| order.apply(c))
        .collect::<Result<Vec<_>>>()?;
    // Σ|u*|^p over points, same normalisation as `distance_pow`
    let target_norms: Vec<f64> = targets
        .iter()
        .map(|t| {
            let mut terms: Vec<f64> = t.values().iter().map(|v| math::powf(*v, schedule.p)).collect();
            math::powf(math::order_free_sum(&mut terms), 1.0 / schedule.p)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut current = initial.clone();
    let mut records = vec![TraceRecord {
        iter: 0,
        half_space: None,
        offset: 0.0,
        rel_dist: relative_distances(&current, &targets, &target_norms, schedule.p),
    }];
    let mut mass_leak = 0.0;
    let mut status = TraceStatus::MaxIterReached;
    if records[0].max_dist() <= schedule.tol {
        status = TraceStatus::Converged;
    }

    let mut iter = 0;
    while status != TraceStatus::Converged && iter < schedule.max_iter {
        iter += 1;
        let chosen = match schedule.mode {
            ScheduleMode::Sweep => family[(iter - 1) % family.len()],
            ScheduleMode::Random => family[rng.random_range(0..family.len())],
            ScheduleMode::Greedy => {
                greedy_pick(&current, &targets, &family, &mut rng, schedule.p)?
            }
        };
        let mut comps = Vec::with_capacity(current.m());
        for c in current.components() {
            let (f, leak) = polarize_with_leak(c, &chosen)?;
            mass_leak += leak;
            comps.push(f);
        }
        current = MultiField::new(comps)?;
        let rel_dist = relative_distances(&current, &targets, &target_norms, schedule.p);
        records.push(TraceRecord {
            iter,
            half_space: Some(chosen),
            offset: chosen.offset(&spec),
            rel_dist,
        });
        if records[iter].max_dist() <= schedule.tol {
            status = TraceStatus::Converged;
        }
    }
    Ok((
        current,
        ConvergenceTrace {
            records,
            status,
            mass_leak,
        },
    ))
}

/// Best of a random subsample of the family by one-step decrease of
/// `Σ_i ‖u_i - u_i*‖_p^p`.
fn greedy_pick(
    current: &MultiField,
    targets: &[ScalarField],
    family: &[HalfSpace],
    rng: &mut ChaCha8Rng,
    p: f64,
) -> Result<HalfSpace> {
    let mut pool: Vec<usize> = (0..family.len()).collect();
    let k = GREEDY_CANDIDATES.min(pool.len());
    // partial Fisher-Yates
    for slot in 0..k {
        let pick = rng.random_range(slot..pool.len());
        pool.swap(slot, pick);
    }
    let mut best: Option<(f64, HalfSpace)> = None;
    for &ci in &pool[..k] {
        let h = family[ci];
        let mut score = 0.0;
        for (c, t) in current.components().iter().zip(targets) {
            // ranking only, so a plain (order-dependent) sum is enough
            let v = polarize(c, &h)?;
            score += v
                .values()
                .iter()
                .zip(t.values())
                .map(|(a, b)| math::powf((a - b).abs(), p))
                .sum::<f64>();
        }
        if best.map_or(true, |(s, _)| score < s) {
            best = Some((score, h));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

/// Relative distance between a field, re-centred by whole grid steps at its
/// mass centroid, and its Schwarz rearrangement. Returns the deficit and the
/// applied translation in grid steps.
pub fn symmetry_deficit(field: &ScalarField, p: f64) -> Result<(f64, [i64; 3])> {
    if !field.is_nonnegative() {
        return Err(Error::Negative("Schwarz rearrangement requires non-negative fields"));
    }
    if field.is_zero() {
        return Err(Error::Domain("deficit undefined for zero field".into()));
    }
    let norm = field.lp_norm(p)?;
    let spec = *field.spec();
    let u = field.values();
    let mass: f64 = u.iter().sum();
    let mut shift = [0i64; 3];
    for (axis, s) in shift.iter_mut().enumerate().take(spec.dim()) {
        let moment: f64 = u
            .iter()
            .enumerate()
            .map(|(i, v)| v * spec.point(i)[axis] as f64)
            .sum();
        *s = -(math::round(moment / mass) as i64);
    }
    let shifted = translate(field, &shift);
    let target = schwarz(field)?;
    let diff = math::powf(distance_pow(&shifted, &target, p) * spec.cell_volume(), 1.0 / p);
    Ok((diff / norm, shift))
}

/// `x ↦ u(x - shift)` with zero fill.
pub fn translate(field: &ScalarField, shift: &[i64; 3]) -> ScalarField {
    let spec = *field.spec();
    let mut out = vec![0.0; spec.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let p = spec.point(idx);
        let src = [p[0] - shift[0], p[1] - shift[1], p[2] - shift[2]];
        if let Some(j) = spec.index(&src) {
            *o = field.get(j);
        }
    }
    ScalarField::from_raw(spec, out)
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
    fn reflect_examples() {
        let spec = GridSpec::new(1, 5, 2.0).unwrap();
        let h = HalfSpace::axis(0, 1, 0).unwrap();
        let at = |x: i64| spec.index(&[x, 0, 0]).unwrap();
        assert_eq!(reflect(&spec, &h, at(1)).unwrap(), Some(at(-1)));
        assert_eq!(reflect(&spec, &h, at(0)).unwrap(), Some(at(0)));

        let h = HalfSpace::axis(0, 1, -1).unwrap(); // x >= -1/2
        assert_eq!(reflect(&spec, &h, at(0)).unwrap(), Some(at(-1)));
        assert_eq!(reflect(&spec, &h, at(2)).unwrap(), None);

        let spec2 = GridSpec::new(2, 5, 2.0).unwrap();
        let d = HalfSpace::diagonal(0, 1, -1, 1).unwrap();
        for idx in 0..spec2.len() {
            let p = spec2.point(idx);
            let q = reflect(&spec2, &d, idx).unwrap().unwrap();
            assert_eq!(spec2.point(q), [p[1], p[0], 0]);
            assert_eq!(reflect(&spec2, &d, q).unwrap(), Some(idx));
        }
        assert_eq!(
            reflect(&spec, &d, 0).unwrap_err().to_string(),
            "reflection not grid-compatible"
        );
    }

    #[test]
    fn inadmissible_half_spaces() {
        assert!(HalfSpace::axis(0, 1, 1).is_err());
        assert!(HalfSpace::axis(0, 2, 0).is_err());
        assert!(HalfSpace::diagonal(1, 1, 1, 1).is_err());
        assert!(HalfSpace::diagonal(1, 0, 1, 1).is_err());
    }

    #[test]
    fn polarize_shifted_bump() {
        let u = line(&[0.0, 3.0, 1.0, 0.0, 0.0]);
        let h = HalfSpace::axis(0, 1, 0).unwrap();
        let uh = polarize(&u, &h).unwrap();
        assert_eq!(uh.values(), &[0.0, 0.0, 1.0, 3.0, 0.0]);
        assert_eq!(polarize(&uh, &h).unwrap(), uh);
        let neg = line(&[0.0, -1.0, 0.0]);
        assert_eq!(
            polarize(&neg, &h).unwrap_err().to_string(),
            "polarization requires non-negative fields"
        );
    }

    #[test]
    fn schwarz_examples() {
        let u = line(&[0.0, 2.0, 1.0, 0.0, 3.0]);
        let s = schwarz(&u).unwrap();
        assert_eq!(s.values(), &[0.0, 2.0, 3.0, 1.0, 0.0]);
        assert_eq!(schwarz(&s).unwrap(), s);
        let c = line(&[0.5; 7]);
        assert_eq!(schwarz(&c).unwrap(), c);
        assert_eq!(
            schwarz(&line(&[0.0, -1.0, 0.0])).unwrap_err().to_string(),
            "Schwarz rearrangement requires non-negative fields"
        );
    }

    #[test]
    fn canonical_rearrangement_is_fixed_by_schedule_family() {
        let spec = GridSpec::new(2, 9, 2.0).unwrap();
        let u = ScalarField::from_fn(spec, |x| {
            1.0 + ((x[0] * 3.1).sin() + (x[1] * 1.7).cos()).abs()
        })
        .unwrap();
        let s = schwarz(&u).unwrap();
        for h in schedule_family(&spec) {
            assert_eq!(polarize(&s, &h).unwrap(), s, "{h} t2={}", h.offset_half_steps());
        }
        // the opposite orientation of an origin plane swaps tied values
        let h = HalfSpace::axis(0, 1, 0).unwrap();
        assert_ne!(polarize(&s, &h).unwrap(), s);
    }

    #[test]
    fn iterate_fixed_point_and_sweep() {
        let u = line(&[0.0, 1.0, 3.0, 0.0, 0.0]);
        let sched = PolarizationSchedule {
            mode: ScheduleMode::Sweep,
            seed: 1,
            max_iter: 50,
            tol: 1e-12,
            p: 2.0,
        };
        let (out, trace) = iterate_polarizations(&MultiField::single(u.clone()), &sched).unwrap();
        assert_eq!(trace.status, TraceStatus::Converged);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(out.component(0), &u);

        let shifted = line(&[0.0, 3.0, 1.0, 0.0, 0.0]);
        let (out, trace) = iterate_polarizations(&MultiField::single(shifted), &sched).unwrap();
        assert_eq!(trace.status, TraceStatus::Converged);
        assert_eq!(out.component(0).values(), &[0.0, 1.0, 3.0, 0.0, 0.0]);
        assert_eq!(trace.mass_leak, 0.0);
        for w in trace.records.windows(2) {
            assert!(w[1].max_dist() <= w[0].max_dist());
        }
    }

    #[test]
    fn schedule_validation() {
        let u = MultiField::single(line(&[0.0, 1.0, 0.0]));
        let mut sched = PolarizationSchedule {
            mode: ScheduleMode::Random,
            seed: 0,
            max_iter: 0,
            tol: 1e-3,
            p: 2.0,
        };
        assert!(iterate_polarizations(&u, &sched).is_err());
        sched.max_iter = 3;
        sched.tol = 0.0;
        assert!(iterate_polarizations(&u, &sched).is_err());
    }

    #[test]
    fn deficit_examples() {
        let centred = line(&[0.0, 0.0, 0.0, 1.0, 3.0, 1.0, 0.0, 0.0, 0.0]);
        let (d, shift) = symmetry_deficit(&centred, 2.0).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(shift, [0, 0, 0]);

        let moved = translate(&centred, &[2, 0, 0]);
        let (d, shift) = symmetry_deficit(&moved, 2.0).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(shift, [-2, 0, 0]);

        // centroid -0.75 -> shift +1: [0,0,3,1,0] against u* = [0,1,3,0,0]
        let u = line(&[0.0, 3.0, 1.0, 0.0, 0.0]);
        let (d, shift) = symmetry_deficit(&u, 2.0).unwrap();
        assert_eq!(shift, [1, 0, 0]);
        assert!((d - (2.0f64 / 10.0).sqrt()).abs() < 1e-15);

        assert_eq!(
            symmetry_deficit(&line(&[0.0; 3]), 2.0).unwrap_err().to_string(),
            "deficit undefined for zero field"
        );
    }

    #[test]
    fn csv_layout() {
        let u = MultiField::single(line(&[0.0, 3.0, 1.0, 0.0, 0.0]));
        let sched = PolarizationSchedule {
            mode: ScheduleMode::Sweep,
            seed: 0,
            max_iter: 4,
            tol: 1e-12,
            p: 2.0,
        };
        let (_, trace) = iterate_polarizations(&u, &sched).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iter,normal,offset,rel_dist_1"));
        assert!(lines.next().unwrap().starts_with("0,none,"));
    }
}
