//! Executable checks of the rearrangement inequalities on concrete fields,
//! tail (equiintegrability) profiles, and a randomised property suite.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::catalogue::{PowerGradient, RadialPower, SaturatingWeight, SumOfSquares, ValuePower};
use crate::energy::{integrate_j, integrate_local, nonlocal_q, Convolver, Coupling, DirectConvolver, Integrand, KernelV, LocalTerm, OriginRule};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, MultiField, ScalarField};
use crate::math;
use crate::rearrange::{all_half_spaces, polarize, polarize_multi, schwarz, HalfSpace};

/// Default constant in the gradient-integral tolerance `C h^{1/2} (1 + |I|)`.
pub const DEFAULT_C_TOL: f64 = 1.0;
/// Absolute tolerance of the local-term monotonicity check.
pub const LOCAL_TOL: f64 = 1e-12;
/// Relative tolerance of the nonlocal monotonicity check.
pub const NONLOCAL_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub left: f64,
    pub right: f64,
    /// `right - left`.
    pub slack: f64,
    pub tol: f64,
    /// Points per axis of the grid the check ran on.
    pub resolution: usize,
    pub pass: bool,
}

impl InequalityReport {
    fn new(name: &str, left: f64, right: f64, tol: f64, resolution: usize) -> Self {
        let slack = right - left;
        Self {
            name: name.into(),
            left,
            right,
            slack,
            tol,
            resolution,
            pass: slack >= -tol,
        }
    }
}

/// `C h^{1/2} (1 + |I|)`.
pub fn gradient_tolerance(spec: &GridSpec, c_tol: f64, integral: f64) -> f64 {
    c_tol * math::sqrt(spec.spacing()) * (1.0 + integral.abs())
}

/// Compares `I = Σ j(u, |Du|) h^N` before and after polarizing by `h`.
/// `left = |I^H - I|`, `right = 0`; the tolerance is zero for gradient-free
/// `j`, where the two sums are permutations of each other.
pub fn check_polarization_invariance(
    u: &ScalarField,
    j: &dyn Integrand,
    h: &HalfSpace,
    c_tol: f64,
) -> Result<InequalityReport> {
    let uh = polarize(u, h)?;
    let i = integrate_j(u, j)?;
    let ih = integrate_j(&uh, j)?;
    let tol = if j.gradient_free() {
        0.0
    } else {
        gradient_tolerance(u.spec(), c_tol, i)
    };
    Ok(InequalityReport::new(
        "polarization_invariance",
        (ih - i).abs(),
        0.0,
        tol,
        u.spec().points_per_axis(),
    ))
}

/// `Σ j(u*, |Du*|) h^N <= Σ j(u, |Du|) h^N + tol(h)`.
pub fn check_polya_szego(u: &ScalarField, j: &dyn Integrand, c_tol: f64) -> Result<InequalityReport> {
    let star = schwarz(u)?;
    let i = integrate_j(u, j)?;
    let istar = integrate_j(&star, j)?;
    Ok(InequalityReport::new(
        "polya_szego",
        istar,
        i,
        gradient_tolerance(u.spec(), c_tol, i),
        u.spec().points_per_axis(),
    ))
}

/// `Σ F(|x|, U^H) h^N >= Σ F(|x|, U) h^N - 1e-12`.
pub fn check_local_monotonicity(u: &MultiField, f: &dyn LocalTerm, h: &HalfSpace) -> Result<InequalityReport> {
    let uh = polarize_multi(u, h)?;
    Ok(InequalityReport::new(
        "local_monotonicity",
        integrate_local(u, f)?,
        integrate_local(&uh, f)?,
        LOCAL_TOL,
        u.spec().points_per_axis(),
    ))
}

/// `Q(U^H) >= Q(U) - 1e-10 (1 + |Q(U)|)` for the positive double sum `Q`.
pub fn check_nonlocal_monotonicity(
    u: &MultiField,
    g: &dyn Coupling,
    conv: &dyn Convolver,
    h: &HalfSpace,
) -> Result<InequalityReport> {
    let uh = polarize_multi(u, h)?;
    let q = nonlocal_q(u, g, conv)?;
    let qh = nonlocal_q(&uh, g, conv)?;
    Ok(InequalityReport::new(
        "nonlocal_monotonicity",
        q,
        qh,
        NONLOCAL_REL_TOL * (1.0 + q.abs()),
        u.spec().points_per_axis(),
    ))
}

/// Exact comparison of `u`, `u^H` and `u*`: sorted values and `L^p` norms
/// for `p` in `exponents`. `left` is the largest discrepancy found.
pub fn check_equimeasurability(u: &ScalarField, h: &HalfSpace, exponents: &[f64]) -> Result<InequalityReport> {
    let uh = polarize(u, h)?;
    let star = schwarz(u)?;
    let base = u.sorted_values();
    let mut worst: f64 = 0.0;
    for other in [&uh, &star] {
        for (a, b) in base.iter().zip(other.sorted_values()) {
            worst = worst.max((a - b).abs());
        }
        for &p in exponents {
            worst = worst.max((u.lp_norm(p)? - other.lp_norm(p)?).abs());
        }
    }
    Ok(InequalityReport::new(
        "equimeasurability",
        worst,
        0.0,
        0.0,
        u.spec().points_per_axis(),
    ))
}

/// Tail masses of a sequence of fields. Each table is indexed
/// `[field][threshold]`; the `sup_*` rows take the supremum over fields.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProfile {
    pub r: f64,
    pub deltas: Vec<f64>,
    pub levels: Vec<f64>,
    pub radii: Vec<f64>,
    /// `Σ_{|v| < δ} |v|^r h^N`.
    pub small: Vec<Vec<f64>>,
    /// `Σ_{|v| > level} |v|^r h^N`.
    pub large: Vec<Vec<f64>>,
    /// `Σ_{|x| > R} |v|^r h^N`.
    pub exterior: Vec<Vec<f64>>,
    pub sup_small: Vec<f64>,
    pub sup_large: Vec<f64>,
    pub sup_exterior: Vec<f64>,
}

fn masked_mass(field: &ScalarField, r: f64, keep: impl Fn(usize, f64) -> bool) -> f64 {
    let mut terms: Vec<f64> = field
        .values()
        .iter()
        .enumerate()
        .filter(|&(i, &v)| keep(i, v))
        .map(|(_, v)| math::powf(v.abs(), r))
        .collect();
    math::order_free_sum(&mut terms) * field.spec().cell_volume()
}

fn column_sup(table: &[Vec<f64>], len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| table.iter().map(|row| row[k]).fold(0.0, f64::max))
        .collect()
}

pub fn equiintegrability_profile(
    fields: &[ScalarField],
    r: f64,
    deltas: &[f64],
    levels: &[f64],
    radii: &[f64],
) -> Result<TailProfile> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Domain("tail profile needs at least one field".into()))?;
    if fields.iter().any(|f| f.spec() != first.spec()) {
        return Err(Error::Grid("tail profile fields must share one grid".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain("exponent out of range".into()));
    }
    let spec = first.spec();
    let small: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| deltas.iter().map(|&d| masked_mass(f, r, |_, v| v.abs() < d)).collect())
        .collect();
    let large: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| levels.iter().map(|&l| masked_mass(f, r, |_, v| v.abs() > l)).collect())
        .collect();
    let exterior: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| radii.iter().map(|&big_r| masked_mass(f, r, |i, _| spec.radius(i) > big_r)).collect())
        .collect();
    Ok(TailProfile {
        r,
        deltas: deltas.to_vec(),
        levels: levels.to_vec(),
        radii: radii.to_vec(),
        sup_small: column_sup(&small, deltas.len()),
        sup_large: column_sup(&large, levels.len()),
        sup_exterior: column_sup(&exterior, radii.len()),
        small,
        large,
        exterior,
    })
}

/// Sum of 1 to 3 Gaussians `a exp(-|x - c|^2 / w^2)` with centres in
/// `[-L/2, L/2]^N`, widths in `[L/8, L/4]` and amplitudes in `[0.1, 2]`.
pub fn random_bumps<R: Rng + ?Sized>(spec: &GridSpec, rng: &mut R) -> ScalarField {
    let l = spec.half_width();
    let count = rng.random_range(1..=3usize);
    let bumps: Vec<([f64; 3], f64, f64)> = (0..count)
        .map(|_| {
            let mut c = [0.0; 3];
            for x in c.iter_mut().take(spec.dim()) {
                *x = rng.random_range(-l / 2.0..=l / 2.0);
            }
            let w = rng.random_range(l / 8.0..=l / 4.0);
            let a = rng.random_range(0.1..=2.0);
            (c, w, a)
        })
        .collect();
    let values = (0..spec.len())
        .map(|i| {
            let x = spec.coords(i);
            bumps
                .iter()
                .map(|(c, w, a)| {
                    let d2: f64 = (0..3).map(|k| (x[k] - c[k]) * (x[k] - c[k])).sum();
                    a * math::exp(-d2 / (w * w))
                })
                .sum()
        })
        .collect();
    ScalarField::from_raw(*spec, values)
}

/// Aggregate of one check over all suite trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub check: &'static str,
    pub trials: usize,
    pub passes: usize,
    /// Smallest slack seen (not offset by the tolerance).
    pub worst_slack: f64,
    /// Largest tolerance applied.
    pub tolerance: f64,
    /// Trial index and report of the worst slack.
    pub witness: Option<(usize, InequalityReport)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
}

impl SuiteSummary {
    pub fn failures(&self) -> usize {
        self.rows.iter().map(|r| r.trials - r.passes).sum()
    }

    pub fn row(&self, check: &str) -> Option<&SuiteRow> {
        self.rows.iter().find(|r| r.check == check)
    }

    /// CSV with columns `check,trials,passes,worst_slack,tolerance`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,trials,passes,worst_slack,tolerance\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{:.17e},{:.17e}\n",
                r.check, r.trials, r.passes, r.worst_slack, r.tolerance
            ));
        }
        s
    }
}

/// Names of the suite checks, in output order.
pub const SUITE_CHECKS: [&str; 8] = [
    "equimeasurability",
    "invariance_gradient_free",
    "invariance_dirichlet",
    "polya_szego_dirichlet",
    "polya_szego_saturating",
    "local_monotonicity",
    "nonlocal_monotonicity",
    "value_tails",
];

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs every check of [`SUITE_CHECKS`] on `trials` random fields, each
/// paired with one random half-space through the origin. Deterministic given
/// `seed`; trial `k` draws from its own derived stream.
pub fn run_property_suite(seed: u64, trials: usize, spec: &GridSpec) -> Result<SuiteSummary> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let family = all_half_spaces(spec);
    let conv = DirectConvolver::new(&KernelV::coulomb(OriginRule::CellAverage), spec)?;
    let coupling = SumOfSquares::new(1);
    let local = RadialPower::new(1.0, true);
    let dirichlet = PowerGradient::new(2.0);
    let value_only = ValuePower { p: 2.0 };

    let mut rows: Vec<SuiteRow> = SUITE_CHECKS
        .iter()
        .map(|&check| SuiteRow {
            check,
            trials,
            passes: 0,
            worst_slack: f64::INFINITY,
            tolerance: 0.0,
            witness: None,
        })
        .collect();

    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
        let u = random_bumps(spec, &mut rng);
        let h = family[rng.random_range(0..family.len())];
        let multi = MultiField::single(u.clone());

        let tails = {
            let seq = [u.clone(), polarize(&u, &h)?, schwarz(&u)?];
            let max = u.max();
            let cuts = [0.25 * max, 0.5 * max];
            let prof = equiintegrability_profile(&seq, 2.0, &cuts, &cuts, &[])?;
            let mut worst: f64 = 0.0;
            for table in [&prof.small, &prof.large] {
                for row in table.iter() {
                    for (a, b) in row.iter().zip(&table[0]) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
            InequalityReport::new("value_tails", worst, 0.0, 0.0, spec.points_per_axis())
        };

        let reports = [
            check_equimeasurability(&u, &h, &[1.5, 2.0, 3.0])?,
            check_polarization_invariance(&u, &value_only, &h, DEFAULT_C_TOL)?,
            check_polarization_invariance(&u, &dirichlet, &h, DEFAULT_C_TOL)?,
            check_polya_szego(&u, &dirichlet, DEFAULT_C_TOL)?,
            check_polya_szego(&u, &SaturatingWeight, DEFAULT_C_TOL)?,
            check_local_monotonicity(&multi, &local, &h)?,
            check_nonlocal_monotonicity(&multi, &coupling, &conv, &h)?,
            tails,
        ];
        for (row, report) in rows.iter_mut().zip(reports) {
            if report.pass {
                row.passes += 1;
            }
            row.tolerance = row.tolerance.max(report.tol);
            if report.slack < row.worst_slack {
                row.worst_slack = report.slack;
                row.witness = Some((trial, report));
            }
        }
    }
    Ok(SuiteSummary { seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::catalogue::NegativeProduct;

    fn line(values: &[f64]) -> ScalarField {
        let n = values.len();
        let spec = GridSpec::new(1, n, (n - 1) as f64 / 2.0).unwrap();
        ScalarField::new(spec, values.to_vec()).unwrap()
    }

    fn upper() -> HalfSpace {
        HalfSpace::axis(0, 1, 0).unwrap()
    }

    #[test]
    fn gradient_free_invariance_is_exact() {
        let u = line(&[0.0, 3.0, 1.0, 0.0, 0.0]);
        let r = check_polarization_invariance(&u, &ValuePower { p: 2.0 }, &upper(), 1.0).unwrap();
        assert_eq!((r.left, r.slack, r.tol), (0.0, 0.0, 0.0));
        assert!(r.pass);
    }

    #[test]
    fn invariance_error_shrinks_under_refinement() {
        let run = |n: usize| {
            let spec = GridSpec::new(2, n, 4.0).unwrap();
            let u = ScalarField::from_fn(spec, |x| {
                (-((x[0] + 0.9).powi(2) + (x[1] - 0.4).powi(2))).exp()
                    + 0.7 * (-((x[0] - 1.3).powi(2) + (x[1] + 0.8).powi(2)) / 2.0).exp()
            })
            .unwrap();
            check_polarization_invariance(&u, &PowerGradient::new(2.0), &upper(), 1.0).unwrap()
        };
        let (coarse, fine) = (run(33), run(65));
        assert!(coarse.pass && fine.pass);
        assert!(fine.left < coarse.left, "{} vs {}", fine.left, coarse.left);
    }

    #[test]
    fn polya_szego_hand_sums() {
        // u = [0,3,1,0,0], u* = [0,1,3,0,0], h = 1
        // |Du|  = [3, 1/2, 3/2, 1/2, 0]   -> Σ b^2 = 9 + 0.25 + 2.25 + 0.25 = 11.75
        // |Du*| = [1, 3/2, 1/2, 3/2, 0]   -> Σ b^2 = 1 + 2.25 + 0.25 + 2.25 = 5.75
        let r = check_polya_szego(&line(&[0.0, 3.0, 1.0, 0.0, 0.0]), &PowerGradient::new(2.0), 1.0).unwrap();
        assert_eq!((r.left, r.right), (5.75, 11.75));
        assert_eq!(r.slack, 6.0);
        assert!(r.pass);

        let sym = line(&[0.0, 1.0, 3.0, 0.0, 0.0]);
        let r = check_polya_szego(&sym, &PowerGradient::new(2.0), 1.0).unwrap();
        assert_eq!(r.slack, 0.0);
    }

    #[test]
    fn local_monotonicity_examples() {
        let u = MultiField::single(line(&[0.0, 3.0, 1.0, 0.0, 0.0]));
        let flat = check_local_monotonicity(&u, &RadialPower::new(1.0, false), &upper()).unwrap();
        assert_eq!(flat.slack, 0.0);
        // F = exp(-r) s, H = {x <= 1}: [0,0,0,1,3] becomes [0,0,3,1,0]
        let shifted = MultiField::single(line(&[0.0, 0.0, 0.0, 1.0, 3.0]));
        let h = HalfSpace::axis(0, -1, -2).unwrap();
        let r = check_local_monotonicity(&shifted, &RadialPower::new(1.0, true), &h).unwrap();
        let e = |x: f64| (-x).exp();
        assert!((r.left - (e(1.0) + 3.0 * e(2.0))).abs() < 1e-15);
        assert!((r.right - (3.0 + e(1.0))).abs() < 1e-15);
        assert!(r.pass);
    }

    #[test]
    fn submodular_local_term_can_fail() {
        // F = -s1 s2 rewards separating the components; polarizing them onto the
        // same side lowers Σ F.
        let spec = GridSpec::new(1, 5, 2.0).unwrap();
        let a = ScalarField::new(spec, vec![0.0, 0.0, 0.0, 2.0, 0.0]).unwrap();
        let b = ScalarField::new(spec, vec![0.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        let u = MultiField::new(vec![a, b]).unwrap();
        let r = check_local_monotonicity(&u, &NegativeProduct, &upper()).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn nonlocal_monotonicity_examples() {
        let spec = GridSpec::new(3, 9, 2.0).unwrap();
        let u = ScalarField::from_fn(spec, |x| (-((x[0] - 0.7).powi(2) + x[1] * x[1] + x[2] * x[2])).exp()).unwrap();
        let u = MultiField::single(u);
        let h = HalfSpace::axis(0, -1, 0).unwrap();
        let conv = DirectConvolver::new(&KernelV::coulomb(OriginRule::CellAverage), &spec).unwrap();
        let r = check_nonlocal_monotonicity(&u, &SumOfSquares::new(1), &conv, &h).unwrap();
        assert!(r.pass && r.slack > 0.0, "{r:?}");

        let constant = DirectConvolver::new(&KernelV::constant(1.0), &spec).unwrap();
        let r = check_nonlocal_monotonicity(&u, &SumOfSquares::new(1), &constant, &h).unwrap();
        assert!(r.pass);
        assert!(r.slack.abs() <= 1e-12 * r.left);
    }

    #[test]
    fn tail_profile_rows() {
        let spec = GridSpec::new(1, 9, 4.0).unwrap();
        let u = ScalarField::new(spec, vec![0.0, 0.0, 0.0, 1.0, 3.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let prof = equiintegrability_profile(&[u.clone(), u.clone(), u], 2.0, &[2.0], &[0.5, 2.0], &[0.5, 3.5]).unwrap();
        assert_eq!(prof.sup_small, vec![1.0]);
        assert_eq!(prof.sup_large, vec![10.0, 9.0]);
        assert_eq!(prof.sup_exterior, vec![1.0, 0.0]);
        assert!(equiintegrability_profile(&[], 2.0, &[], &[], &[]).is_err());
    }

    #[test]
    fn suite_is_deterministic_and_exact_checks_hold() {
        let spec = GridSpec::new(2, 17, 4.0).unwrap();
        let a = run_property_suite(5, 12, &spec).unwrap();
        let b = run_property_suite(5, 12, &spec).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for name in ["equimeasurability", "invariance_gradient_free", "value_tails"] {
            let row = a.row(name).unwrap();
            assert_eq!(row.passes, row.trials, "{name}");
            assert_eq!(row.worst_slack, 0.0, "{name}");
        }
        assert!(run_property_suite(5, 0, &spec).is_err());
        assert!(a.to_csv().starts_with("check,trials,passes,worst_slack,tolerance\n"));
    }
}
