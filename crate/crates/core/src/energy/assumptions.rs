//! Randomised checks of the structural hypotheses on `j_i`, `F`, `G` and `V`.
//!
//! Each inequality is tested at random sample points; the first violation is
//! kept as a witness. Comparisons allow a rounding slack of `1e-12` times the
//! sum of the magnitudes of the terms involved, so exactly modular functions
//! (e.g. `Σ s_i^2`) are not rejected on round-off.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Coupling, EnergyModel, Integrand, KernelV, LocalTerm};
use crate::math;

const ROUNDING: f64 = 1e-12;
/// Required strict-convexity gap at a midpoint.
const STRICT_MARGIN: f64 = 1e-12;
const S_MAX: f64 = 5.0;
const R_MAX: f64 = 10.0;
const STEP_MAX: f64 = 3.0;
/// Smallest separation of the two slopes in a convexity sample.
const MIN_SLOPE_GAP: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    /// Short label, e.g. `"J1"`, `"G4"`.
    pub name: &'static str,
    /// False when the model has no term the assumption is about, or when it
    /// has no finite test and is only declared.
    pub applicable: bool,
    pub passed: bool,
    /// Sample point and values of the first violation.
    pub witness: Option<String>,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub trials: usize,
    pub seed: u64,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// `Σ lhs >= Σ rhs` up to rounding.
fn ge(lhs: &[f64], rhs: &[f64]) -> bool {
    let l: f64 = lhs.iter().sum();
    let r: f64 = rhs.iter().sum();
    let scale: f64 = lhs.iter().chain(rhs).map(|x| x.abs()).sum();
    l >= r - ROUNDING * scale
}

struct Builder {
    checks: Vec<AssumptionCheck>,
}

impl Builder {
    fn not_applicable(&mut self, name: &'static str, note: &'static str) {
        self.checks.push(AssumptionCheck {
            name,
            applicable: false,
            passed: true,
            witness: None,
            note,
        });
    }

    fn result(&mut self, name: &'static str, witness: Option<String>, note: &'static str) {
        self.checks.push(AssumptionCheck {
            name,
            applicable: true,
            passed: witness.is_none(),
            witness,
            note,
        });
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn vector(rng: &mut ChaCha8Rng, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..m).map(|_| uniform(rng, lo, hi)).collect()
}

fn two_indices(rng: &mut ChaCha8Rng, m: usize) -> (usize, usize) {
    let i = rng.random_range(0..m);
    let mut j = rng.random_range(0..m - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

fn euclid_pow(s: &[f64], p: f64) -> f64 {
    math::powf(math::sqrt(s.iter().map(|x| x * x).sum()), p)
}

/// Samples every assumption `trials` times. Deterministic given `seed`.
pub fn check_assumptions(model: &EnergyModel, trials: usize, seed: u64) -> AssumptionReport {
    let trials = trials.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder { checks: Vec::new() };
    let p = model.p();

    check_integrands(&mut b, model.integrands(), p, trials, &mut rng);

    match model.local() {
        Some(f) => check_local(&mut b, f, model, trials, &mut rng),
        None => {
            for name in ["F0", "F1", "F2", "F3"] {
                b.not_applicable(name, "no local term");
            }
        }
    }

    match model.nonlocal() {
        Some(nl) => {
            check_coupling(&mut b, nl.coupling.as_ref(), &nl.kernel, model, trials, &mut rng);
        }
        None => {
            for name in ["G0", "G1", "G2", "G3", "G4"] {
                b.not_applicable(name, "no nonlocal term");
            }
        }
    }

    AssumptionReport {
        checks: b.checks,
        trials,
        seed,
    }
}

fn check_integrands(
    b: &mut Builder,
    integrands: &[alloc::boxed::Box<dyn Integrand>],
    p: f64,
    trials: usize,
    rng: &mut ChaCha8Rng,
) {
    let mut j0 = None;
    let mut j1 = None;
    let mut j2 = None;
    for (i, j) in integrands.iter().enumerate() {
        if j1.is_none() && !(j.coercivity() > 0.0) {
            j1 = Some(format!("j_{}: declared a_1 = {} is not positive", i + 1, j.coercivity()));
        }
        for _ in 0..trials {
            let s = uniform(rng, -S_MAX, S_MAX);
            let bb = uniform(rng, 0.0, S_MAX);
            if j0.is_none() && !ge(&[j.value(s, bb)], &[j.value(s.abs(), bb)]) {
                j0 = Some(format!(
                    "j_{}: s={s}, b={bb}: j(|s|,b)={} > j(s,b)={}",
                    i + 1,
                    j.value(s.abs(), bb),
                    j.value(s, bb)
                ));
            }
            let s = s.abs();
            let bound = j.coercivity() * math::powf(bb, p);
            if j1.is_none() && !ge(&[j.value(s, bb)], &[bound]) {
                j1 = Some(format!(
                    "j_{}: s={s}, b={bb}: j={} < a_1 b^p={bound}",
                    i + 1,
                    j.value(s, bb)
                ));
            }
            let b2 = bb + uniform(rng, MIN_SLOPE_GAP, S_MAX);
            let (lo, hi) = (j.value(s, bb), j.value(s, b2));
            if j2.is_none() && !ge(&[hi], &[lo]) {
                j2 = Some(format!("j_{}: s={s}: j(s,{bb})={lo} > j(s,{b2})={hi}", i + 1));
            }
            let mid = j.value(s, 0.5 * (bb + b2));
            let avg = 0.5 * (lo + hi);
            let convex = if j.strictly_convex() {
                mid <= avg - STRICT_MARGIN
            } else {
                ge(&[avg], &[mid])
            };
            if j2.is_none() && !convex {
                j2 = Some(format!(
                    "j_{}: s={s}, b={bb}, b'={b2}: j(mid)={mid} vs average {avg}",
                    i + 1
                ));
            }
        }
    }
    b.result("J0", j0, "j(|s|, b) <= j(s, b)");
    b.result("J1", j1, "j(s, b) >= a_1 b^p");
    b.result("J2", j2, "j(s, .) convex and non-decreasing");
}

fn check_local(b: &mut Builder, f: &dyn LocalTerm, model: &EnergyModel, trials: usize, rng: &mut ChaCha8Rng) {
    let m = model.m();
    let p = model.p();
    let k = f.growth_constant();
    let ls = f.growth_exponents();
    let l_of = |i: usize| ls.get(i).or(ls.last()).copied().unwrap_or(0.0);

    let mut f0 = None;
    let mut f1 = None;
    let mut f2 = None;
    let mut f3 = None;

    let l_max = p * p / model.dim() as f64;
    for i in 0..m {
        let l = l_of(i);
        if f1.is_none() && !(l > 0.0 && l < l_max) {
            f1 = Some(format!("declared l_{} = {l} outside (0, p^2/N) = (0, {l_max})", i + 1));
        }
    }
    if f1.is_none() && !(k > 0.0) {
        f1 = Some(format!("declared K = {k} is not positive"));
    }

    for _ in 0..trials {
        let r = uniform(rng, 0.0, R_MAX);
        let signed = vector(rng, m, -S_MAX, S_MAX);
        let abs: Vec<f64> = signed.iter().map(|x| x.abs()).collect();
        if f0.is_none() && !ge(&[f.value(r, &abs)], &[f.value(r, &signed)]) {
            f0 = Some(format!(
                "r={r}, s={signed:?}: F(r,s)={} > F(r,|s|)={}",
                f.value(r, &signed),
                f.value(r, &abs)
            ));
        }

        let y = vector(rng, m, 0.0, S_MAX);
        let fy = f.value(r, &y);
        let bound = k * (euclid_pow(&y, p) + y.iter().enumerate().map(|(i, s)| math::powf(*s, l_of(i) + p)).sum::<f64>());
        if f1.is_none() && !(ge(&[fy], &[0.0]) && ge(&[bound], &[fy])) {
            f1 = Some(format!("r={r}, s={y:?}: F={fy}, growth bound {bound}"));
        }

        let hstep = uniform(rng, 0.0, STEP_MAX);
        let kstep = uniform(rng, 0.0, STEP_MAX);
        let rr = r + uniform(rng, 0.0, R_MAX);
        let i = rng.random_range(0..m);
        let mut yi = y.clone();
        yi[i] += hstep;
        // F(r, y + h e_i) + F(R, y) >= F(R, y + h e_i) + F(r, y)
        let lhs = [f.value(r, &yi), f.value(rr, &y)];
        let rhs = [f.value(rr, &yi), fy];
        if f3.is_none() && !ge(&lhs, &rhs) {
            f3 = Some(format!(
                "r={r}, R={rr}, y={y:?}, h={hstep}, i={}: {} < {}",
                i + 1,
                lhs[0] + lhs[1],
                rhs[0] + rhs[1]
            ));
        }
        if m >= 2 {
            let (i, j) = two_indices(rng, m);
            let mut yi = y.clone();
            yi[i] += hstep;
            let mut yj = y.clone();
            yj[j] += kstep;
            let mut yij = yi.clone();
            yij[j] += kstep;
            let lhs = [f.value(r, &yij), fy];
            let rhs = [f.value(r, &yi), f.value(r, &yj)];
            if f3.is_none() && !ge(&lhs, &rhs) {
                f3 = Some(format!(
                    "r={r}, y={y:?}, h={hstep}, k={kstep}, i={}, j={}: {} < {}",
                    i + 1,
                    j + 1,
                    lhs[0] + lhs[1],
                    rhs[0] + rhs[1]
                ));
            }
        }
    }
    // deterministic corner probe: y = 0, h = k = 1
    if f3.is_none() && m >= 2 {
        let zero = vec![0.0; m];
        let mut e1 = zero.clone();
        e1[0] = 1.0;
        let mut e2 = zero.clone();
        e2[1] = 1.0;
        let mut e12 = e1.clone();
        e12[1] = 1.0;
        let lhs = [f.value(1.0, &e12), f.value(1.0, &zero)];
        let rhs = [f.value(1.0, &e1), f.value(1.0, &e2)];
        if !ge(&lhs, &rhs) {
            f3 = Some(format!(
                "r=1, y=0, h=k=1, i=1, j=2: {} < {}",
                lhs[0] + lhs[1],
                rhs[0] + rhs[1]
            ));
        }
    }

    b.result("F0", f0, "F(r, s) <= F(r, |s|)");
    b.result("F1", f1, "0 <= F <= K(|s|^p + Σ s_i^(l_i+p))");
    match f.decay_certificate() {
        Some((eps, r0, s0)) => {
            for _ in 0..trials {
                let r = r0 + uniform(rng, 0.0, 2.0 * R_MAX);
                let s = vector(rng, m, 0.0, s0);
                let val = f.value(r, &s);
                let bound = eps * euclid_pow(&s, p);
                if f2.is_none() && !ge(&[bound], &[val]) {
                    f2 = Some(format!("r={r}, s={s:?}: F={val} > eps|s|^p={bound}"));
                }
            }
            b.result("F2", f2, "F <= eps |s|^p far out, for the declared (eps, R0, s0)");
        }
        None => b.not_applicable("F2", "declared only; no certificate configured"),
    }
    b.result("F3", f3, "(t, y) -> F(1/t, y) supermodular");
}

fn check_coupling(
    b: &mut Builder,
    g: &dyn Coupling,
    v: &KernelV,
    model: &EnergyModel,
    trials: usize,
    rng: &mut ChaCha8Rng,
) {
    let m = model.m();
    let p = model.p();
    let kp = g.growth_constant();
    let mus = g.growth_exponents();
    let mu_of = |i: usize| mus.get(i).or(mus.last()).copied().unwrap_or(0.0);

    let mut g0 = None;
    let mut g1 = None;
    let mut g3 = None;
    let mut g4 = None;

    let ratio = if v.q.is_finite() {
        (2.0 * v.q - 1.0) / (2.0 * v.q)
    } else {
        1.0
    };
    let (lo, hi) = (p * ratio, model.p_star() * ratio);
    for i in 0..m {
        let mu = mu_of(i);
        if g1.is_none() && !(mu > lo && mu < hi) {
            g1 = Some(format!("declared mu_{} = {mu} outside ({lo}, {hi})", i + 1));
        }
    }
    if g1.is_none() && !(kp > 0.0) {
        g1 = Some(format!("declared K' = {kp} is not positive"));
    }

    for _ in 0..trials {
        let signed = vector(rng, m, -S_MAX, S_MAX);
        let abs: Vec<f64> = signed.iter().map(|x| x.abs()).collect();
        if g0.is_none() && !ge(&[g.value(&abs)], &[g.value(&signed)]) {
            g0 = Some(format!(
                "s={signed:?}: G(s)={} > G(|s|)={}",
                g.value(&signed),
                g.value(&abs)
            ));
        }

        let y = vector(rng, m, 0.0, S_MAX);
        let gy = g.value(&y);
        let bound = kp * y.iter().enumerate().map(|(i, s)| math::powf(*s, mu_of(i))).sum::<f64>();
        if g1.is_none() && !(ge(&[gy], &[0.0]) && ge(&[bound], &[gy])) {
            g1 = Some(format!("s={y:?}: G={gy}, growth bound {bound}"));
        }

        let r1 = uniform(rng, 1e-3, R_MAX);
        let r2 = r1 + uniform(rng, 0.0, R_MAX);
        let (v1, v2) = (v.value(r1), v.value(r2));
        if g3.is_none() && !(v2 >= 0.0 && ge(&[v1], &[v2])) {
            g3 = Some(format!("V({r1})={v1}, V({r2})={v2}"));
        }

        let hstep = uniform(rng, 0.0, STEP_MAX);
        let i = rng.random_range(0..m);
        let mut yi = y.clone();
        yi[i] += hstep;
        if g4.is_none() && !ge(&[g.value(&yi)], &[gy]) {
            g4 = Some(format!(
                "y={y:?}, h={hstep}, i={}: G(y+h e_i)={} < G(y)={gy}",
                i + 1,
                g.value(&yi)
            ));
        }
        if m >= 2 {
            let kstep = uniform(rng, 0.0, STEP_MAX);
            let (i, j) = two_indices(rng, m);
            let mut yi = y.clone();
            yi[i] += hstep;
            let mut yj = y.clone();
            yj[j] += kstep;
            let mut yij = yi.clone();
            yij[j] += kstep;
            let lhs = [g.value(&yij), gy];
            let rhs = [g.value(&yi), g.value(&yj)];
            if g4.is_none() && !ge(&lhs, &rhs) {
                g4 = Some(format!(
                    "y={y:?}, h={hstep}, k={kstep}, i={}, j={}: {} < {}",
                    i + 1,
                    j + 1,
                    lhs[0] + lhs[1],
                    rhs[0] + rhs[1]
                ));
            }
        }
    }

    b.result("G0", g0, "G(s) <= G(|s|)");
    b.result("G1", g1, "0 <= G <= K' Σ s_i^mu_i");
    b.not_applicable("G2", "weak L^q membership of V is declared, not checked");
    b.result("G3", g3, "V non-negative and non-increasing");
    b.result("G4", g4, "G non-decreasing in each variable and supermodular");
}

#[cfg(test)]
mod tests {
    use super::super::catalogue;
    use super::*;

    #[test]
    fn example_model_passes_everything() {
        let report = check_assumptions(&catalogue::example_paper(2).unwrap(), 500, 11);
        for c in &report.checks {
            assert!(c.passed, "{} failed: {:?}", c.name, c.witness);
        }
        assert!(!report.get("F1").unwrap().applicable);
        assert!(!report.get("G2").unwrap().applicable);
    }

    #[test]
    fn nonmonotone_coupling_fails_g4_with_witness() {
        let report = check_assumptions(&catalogue::control_nonmonotone_g().unwrap(), 200, 3);
        let g4 = report.get("G4").unwrap();
        assert!(!g4.passed);
        assert!(g4.witness.as_deref().unwrap().contains("G(y+h e_i)"));
    }

    #[test]
    fn negative_product_fails_f1_and_f3() {
        let report = check_assumptions(&catalogue::control_submodular_f().unwrap(), 200, 3);
        assert!(!report.get("F1").unwrap().passed);
        assert!(!report.get("F3").unwrap().passed);
        assert!(report.get("F1").unwrap().witness.is_some());
    }

    #[test]
    fn deterministic_given_seed() {
        let m = catalogue::control_submodular_f().unwrap();
        assert_eq!(check_assumptions(&m, 50, 9), check_assumptions(&m, 50, 9));
    }

    #[test]
    fn ge_allows_rounding_only() {
        assert!(ge(&[1.0, 2.0], &[3.0 + 1e-15]));
        assert!(!ge(&[1.0, 2.0], &[3.0 + 1e-9]));
    }
}
