//! Projected gradient descent for the energy on the product of `L^p` spheres
//! `S_c = {U : Σ |u_i|^p h^N = c_i}`, with optional Schwarz interleaving,
//! Lagrange-multiplier estimates and the dilation scan.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{coupling_values, eval_total, Convolver, EnergyBreakdown, EnergyModel};
use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, MultiField, ScalarField};
use crate::math;
use crate::rearrange::{schwarz, schwarz_multi, symmetry_deficit};
use crate::verify::{gradient_tolerance, random_bumps, DEFAULT_C_TOL};

/// Number of times the step is halved before a step counts as stalled.
pub const MAX_HALVINGS: usize = 30;
/// Relative threshold defining the discrete plateau set.
pub const PLATEAU_REL: f64 = 1e-8;

/// Targets `c_i > 0` for `Σ |u_i|^p h^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintVector(Vec<f64>);

impl ConstraintVector {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Config("constraint vector is empty".into()));
        }
        if let Some(bad) = c.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("constraint values must be positive, got {bad}")));
        }
        Ok(Self(c))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Rescales each component onto its sphere.
pub fn project_constraints(u: &MultiField, c: &ConstraintVector, p: f64) -> Result<MultiField> {
    if c.len() != u.m() {
        return Err(Error::Config(format!(
            "{} constraint values for {} components",
            c.len(),
            u.m()
        )));
    }
    let comps = u
        .components()
        .iter()
        .zip(c.values())
        .map(|(f, &ci)| {
            let norm = f.lp_norm_pow(p)?;
            if norm == 0.0 {
                return Err(Error::Domain("cannot project zero component onto sphere".into()));
            }
            f.scaled(math::powf(ci / norm, 1.0 / p))
        })
        .collect::<Result<Vec<_>>>()?;
    MultiField::new(comps)
}

fn missing(what: &str) -> Error {
    Error::Config(format!("{what} derivative unavailable"))
}

/// Exact gradient of [`eval_total`] with respect to the grid values.
///
/// `E1` contributes `j_s h^N + Σ_k D_kᵀ(j_b D_k u / |Du|) h^N` (the flux is
/// taken as zero where `|Du| = 0`), `E2` contributes `-∂_i F h^N` and `E3`
/// `-2 (V ⋆ g) ∂_i G h^{2N}`.
pub fn discrete_gradient(u: &MultiField, model: &EnergyModel, conv: Option<&dyn Convolver>) -> Result<MultiField> {
    model.check_field(u)?;
    let spec = *u.spec();
    let len = spec.len();
    let hn = spec.cell_volume();
    let dim = spec.dim();
    let m = u.m();

    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut partials = vec![vec![0.0; len]; dim];
    let mut flux = vec![0.0; len];
    for (comp, j) in u.components().iter().zip(model.integrands()) {
        let vals = comp.values();
        for (axis, d) in partials.iter_mut().enumerate() {
            grid::partial_into(&spec, vals, axis, d);
        }
        let b: Vec<f64> = (0..len)
            .map(|x| math::sqrt(partials.iter().map(|d| d[x] * d[x]).sum()))
            .collect();
        let mut out = vec![0.0; len];
        let mut jb = vec![0.0; len];
        for x in 0..len {
            out[x] = j.d_s(vals[x], b[x]).ok_or_else(|| missing("integrand s"))? * hn;
            jb[x] = if b[x] > 0.0 {
                j.d_b(vals[x], b[x]).ok_or_else(|| missing("integrand b"))? / b[x]
            } else {
                0.0
            };
        }
        for (axis, d) in partials.iter().enumerate() {
            for x in 0..len {
                flux[x] = jb[x] * d[x] * hn;
            }
            grid::partial_adjoint_add(&spec, &flux, axis, &mut out);
        }
        grads.push(out);
    }

    let mut s = vec![0.0; m];
    if let Some(f) = model.local() {
        for x in 0..len {
            u.point_values(x, &mut s);
            let r = spec.radius(x);
            for (i, g) in grads.iter_mut().enumerate() {
                g[x] -= f.d_s(r, &s, i).ok_or_else(|| missing("local term"))? * hn;
            }
        }
    }

    if let Some(nl) = model.nonlocal() {
        let conv = conv.ok_or_else(|| Error::Config("nonlocal term configured but no convolver given".into()))?;
        if conv.spec() != &spec {
            return Err(Error::Grid("convolver was built for a different grid".into()));
        }
        let gv = coupling_values(u, nl.coupling.as_ref())?;
        let vg = conv.convolve(&gv);
        for x in 0..len {
            u.point_values(x, &mut s);
            for (i, g) in grads.iter_mut().enumerate() {
                let dg = nl.coupling.d_s(&s, i).ok_or_else(|| missing("coupling"))?;
                g[x] -= 2.0 * vg[x] * dg * hn * hn;
            }
        }
    }

    let comps = grads
        .into_iter()
        .map(|g| ScalarField::new(spec, g))
        .collect::<Result<Vec<_>>>()?;
    MultiField::new(comps)
}

/// Outcome of one backtracking step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub field: MultiField,
    pub energy: EnergyBreakdown,
    /// Step size of the accepted candidate (or the last one tried).
    pub eta: f64,
    pub accepted: bool,
    /// Whether the clamped candidate, before projection, had some component
    /// with `Σ |u_i|^p h^N` below its target.
    pub drift_below: bool,
}

fn candidate(u: &MultiField, grad: &MultiField, eta: f64) -> Result<MultiField> {
    let comps = u
        .components()
        .iter()
        .zip(grad.components())
        .map(|(f, g)| {
            let v = f
                .values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| (a - eta * b).max(0.0))
                .collect();
            ScalarField::new(*f.spec(), v)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiField::new(comps)
}

fn step_from(
    u: &MultiField,
    current: &EnergyBreakdown,
    grad: &MultiField,
    model: &EnergyModel,
    conv: Option<&dyn Convolver>,
    c: &ConstraintVector,
    eta: f64,
) -> Result<StepOutcome> {
    let p = model.p();
    let mut eta = eta;
    for _ in 0..=MAX_HALVINGS {
        let raw = candidate(u, grad, eta)?;
        let projected = match project_constraints(&raw, c, p) {
            Ok(v) => v,
            Err(Error::Domain(_)) => {
                eta *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        };
        let energy = eval_total(&projected, model, conv)?;
        if energy.total < current.total {
            let mut drift_below = false;
            for (f, &ci) in raw.components().iter().zip(c.values()) {
                drift_below |= f.lp_norm_pow(p)? < ci;
            }
            return Ok(StepOutcome {
                field: projected,
                energy,
                eta,
                accepted: true,
                drift_below,
            });
        }
        eta *= 0.5;
    }
    Ok(StepOutcome {
        field: u.clone(),
        energy: *current,
        eta,
        accepted: false,
        drift_below: false,
    })
}

/// `U ← P_c(max(U - η ∇E, 0))`, halving `η` until the energy decreases.
pub fn descent_step(
    u: &MultiField,
    model: &EnergyModel,
    conv: Option<&dyn Convolver>,
    c: &ConstraintVector,
    eta: f64,
) -> Result<StepOutcome> {
    if !(eta > 0.0) {
        return Err(Error::Config("step size must be positive".into()));
    }
    let current = eval_total(u, model, conv)?;
    let grad = discrete_gradient(u, model, conv)?;
    step_from(u, &current, &grad, model, conv, c, eta)
}

/// Least-squares multipliers `λ_i = -⟨g_i, u_i⟩ / ⟨φ_i, u_i⟩` with
/// `φ_i = u_i |u_i|^{p-2} h^N`, and residuals `‖g_i + λ_i φ_i‖ / ‖g_i‖`.
pub fn lagrange_residual_from(u: &MultiField, grad: &MultiField, p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let hn = u.spec().cell_volume();
    let mut lambdas = Vec::with_capacity(u.m());
    let mut residuals = Vec::with_capacity(u.m());
    for (f, g) in u.components().iter().zip(grad.components()) {
        if f.is_zero() {
            return Err(Error::Domain("multiplier undefined for zero component".into()));
        }
        let phi: Vec<f64> = f
            .values()
            .iter()
            .map(|&v| v * math::powf(v.abs(), p - 2.0) * hn)
            .collect();
        let gu: f64 = g.values().iter().zip(f.values()).map(|(a, b)| a * b).sum();
        let phiu: f64 = phi.iter().zip(f.values()).map(|(a, b)| a * b).sum();
        let lambda = -gu / phiu;
        let num: f64 = g
            .values()
            .iter()
            .zip(&phi)
            .map(|(a, b)| (a + lambda * b) * (a + lambda * b))
            .sum();
        let den: f64 = g.values().iter().map(|a| a * a).sum();
        let res = if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            math::sqrt(num / den)
        };
        lambdas.push(lambda);
        residuals.push(res);
    }
    Ok((lambdas, residuals))
}

pub fn lagrange_residual(
    u: &MultiField,
    model: &EnergyModel,
    conv: Option<&dyn Convolver>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grad = discrete_gradient(u, model, conv)?;
    lagrange_residual_from(u, &grad, model.p())
}

/// Starting point of a run, projected onto `S_c` before the first step.
#[derive(Debug, Clone)]
pub enum Initializer {
    /// `exp(-|x|^2 / (2 w^2))` in every component.
    Gaussian { width: f64 },
    /// [`random_bumps`] per component, drawn from the run seed.
    Bumps,
    Field(MultiField),
}

#[derive(Debug, Clone)]
pub struct MinimizeConfig {
    pub constraints: ConstraintVector,
    pub initial: Initializer,
    /// Initial step size.
    pub eta: f64,
    /// Factor applied to the step size after each accepted step.
    pub eta_growth: f64,
    pub max_steps: usize,
    /// Stop once every Lagrange residual is at most this.
    pub grad_tol: f64,
    /// Schwarz pass every `k_pol` steps; 0 disables it.
    pub k_pol: usize,
    /// Last step at which a Schwarz pass may run; `None` means the whole run.
    pub interleave_until: Option<usize>,
    pub seed: u64,
}

impl MinimizeConfig {
    pub fn new(constraints: ConstraintVector) -> Self {
        Self {
            constraints,
            initial: Initializer::Bumps,
            eta: 1.0,
            eta_growth: 1.5,
            max_steps: 1000,
            grad_tol: 1e-6,
            k_pol: 0,
            interleave_until: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Config("eta must be positive".into()));
        }
        if !(self.eta_growth >= 1.0) || !self.eta_growth.is_finite() {
            return Err(Error::Config("eta_growth must be at least 1".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::Config("grad_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimizeStatus {
    Converged,
    Stalled,
    MaxSteps,
}

impl MinimizeStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Stalled => "stalled",
            Self::MaxSteps => "max_steps",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub step: usize,
    pub energy: EnergyBreakdown,
    pub eta: f64,
    pub accepted: bool,
}

/// Energy around one Schwarz pass (after re-projection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwarzEvent {
    pub step: usize,
    pub before: f64,
    pub after: f64,
    pub tol: f64,
    /// `after > before + tol`.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub field: MultiField,
    /// One row per descent step; row 0 is the projected initial state.
    pub trace: Vec<EnergyRecord>,
    pub schwarz_events: Vec<SchwarzEvent>,
    pub lambda: Vec<f64>,
    pub residuals: Vec<f64>,
    pub deficits: Vec<f64>,
    pub status: MinimizeStatus,
    /// Accepted steps whose unprojected candidate fell below a target.
    pub drift_warnings: usize,
}

impl MinimizeResult {
    pub fn final_energy(&self) -> EnergyBreakdown {
        self.trace.last().map(|r| r.energy).unwrap_or_default()
    }

    /// CSV with columns `step,E1,E2,E3,total,eta,accepted`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("step,E1,E2,E3,total,eta,accepted\n");
        for r in &self.trace {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                r.step,
                r.energy.e1,
                r.energy.e2,
                r.energy.e3,
                r.energy.total,
                r.eta,
                u8::from(r.accepted)
            ));
        }
        s
    }

    /// CSV with columns `step,before,after,tol,flagged`.
    pub fn schwarz_csv(&self) -> String {
        let mut s = String::from("step,before,after,tol,flagged\n");
        for e in &self.schwarz_events {
            s.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{}\n",
                e.step,
                e.before,
                e.after,
                e.tol,
                u8::from(e.flagged)
            ));
        }
        s
    }
}

fn initial_field(init: &Initializer, spec: &GridSpec, m: usize, seed: u64) -> Result<MultiField> {
    match init {
        Initializer::Gaussian { width } => {
            if !(*width > 0.0) {
                return Err(Error::Config("initial width must be positive".into()));
            }
            let two_w2 = 2.0 * width * width;
            let f = ScalarField::from_fn(*spec, |x| math::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / two_w2))?;
            MultiField::new(vec![f; m])
        }
        Initializer::Bumps => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            MultiField::new((0..m).map(|_| random_bumps(spec, &mut rng)).collect())
        }
        Initializer::Field(f) => {
            if f.spec() != spec || f.m() != m {
                return Err(Error::Config("initial field does not match grid or model".into()));
            }
            Ok(f.clone())
        }
    }
}

/// Runs projected descent from the configured initial state.
pub fn minimize(
    model: &EnergyModel,
    spec: &GridSpec,
    conv: Option<&dyn Convolver>,
    config: &MinimizeConfig,
) -> Result<MinimizeResult> {
    config.validate()?;
    if spec.dim() != model.dim() {
        return Err(Error::Config(format!(
            "grid dimension {} does not match model dimension {}",
            spec.dim(),
            model.dim()
        )));
    }
    let c = &config.constraints;
    let p = model.p();
    let raw = initial_field(&config.initial, spec, model.m(), config.seed)?;
    let mut u = project_constraints(&raw, c, p)?;
    let mut energy = eval_total(&u, model, conv)?;
    let mut eta = config.eta;
    let mut trace = vec![EnergyRecord {
        step: 0,
        energy,
        eta,
        accepted: true,
    }];
    let mut events = Vec::new();
    let mut drift_warnings = 0;
    let mut status = MinimizeStatus::MaxSteps;
    let mut grad = discrete_gradient(&u, model, conv)?;
    let (mut lambda, mut residuals) = lagrange_residual_from(&u, &grad, p)?;

    for step in 1..=config.max_steps {
        if residuals.iter().all(|&r| r <= config.grad_tol) {
            status = MinimizeStatus::Converged;
            break;
        }
        let window = config.interleave_until.map_or(true, |last| step <= last);
        if config.k_pol > 0 && step % config.k_pol == 0 && window {
            let before = energy.total;
            u = project_constraints(&schwarz_multi(&u)?, c, p)?;
            energy = eval_total(&u, model, conv)?;
            let tol = gradient_tolerance(spec, DEFAULT_C_TOL, before);
            events.push(SchwarzEvent {
                step,
                before,
                after: energy.total,
                tol,
                flagged: energy.total > before + tol,
            });
            grad = discrete_gradient(&u, model, conv)?;
        }
        let out = step_from(&u, &energy, &grad, model, conv, c, eta)?;
        trace.push(EnergyRecord {
            step,
            energy: out.energy,
            eta: out.eta,
            accepted: out.accepted,
        });
        if !out.accepted {
            status = MinimizeStatus::Stalled;
            break;
        }
        drift_warnings += usize::from(out.drift_below);
        u = out.field;
        energy = out.energy;
        eta = out.eta * config.eta_growth;
        grad = discrete_gradient(&u, model, conv)?;
        (lambda, residuals) = lagrange_residual_from(&u, &grad, p)?;
    }
    if status == MinimizeStatus::MaxSteps && residuals.iter().all(|&r| r <= config.grad_tol) {
        status = MinimizeStatus::Converged;
    }

    let deficits = u
        .components()
        .iter()
        .map(|f| symmetry_deficit(f, p).map(|d| d.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(MinimizeResult {
        field: u,
        trace,
        schwarz_events: events,
        lambda,
        residuals,
        deficits,
        status,
        drift_warnings,
    })
}

/// `x ↦ δ^{N/p} U(δx)`, sampled by multilinear interpolation with zero
/// outside the box.
pub fn dilate(u: &MultiField, delta: f64, p: f64) -> Result<MultiField> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain("dilation factor must be positive".into()));
    }
    let spec = *u.spec();
    let dim = spec.dim();
    let n = spec.points_per_axis();
    let half = spec.half_points();
    let amp = math::powf(delta, dim as f64 / p);

    // per point: corner indices and weights
    let mut stencils: Vec<Option<Vec<(usize, f64)>>> = Vec::with_capacity(spec.len());
    for idx in 0..spec.len() {
        let pt = spec.point(idx);
        let mut axes = [(0usize, 1.0f64, 0usize, 0.0f64); 3];
        let mut inside = true;
        for (k, ax) in axes.iter_mut().enumerate().take(dim) {
            // position in index units, exact when delta * integer is exact
            let t = delta * pt[k] as f64 + half as f64;
            if t < 0.0 || t > (n - 1) as f64 {
                inside = false;
                break;
            }
            let i0 = math::floor(t) as usize;
            let frac = t - i0 as f64;
            *ax = if i0 >= n - 1 {
                (n - 1, 1.0, n - 1, 0.0)
            } else {
                (i0, 1.0 - frac, i0 + 1, frac)
            };
        }
        if !inside {
            stencils.push(None);
            continue;
        }
        let mut corners = Vec::with_capacity(1 << dim);
        for mask in 0..(1usize << dim) {
            let mut w = 1.0;
            let mut flat = 0;
            for (k, &(i0, w0, i1, w1)) in axes.iter().enumerate().take(dim) {
                let (i, wk) = if mask & (1 << k) == 0 { (i0, w0) } else { (i1, w1) };
                w *= wk;
                flat = flat * n + i;
            }
            if w != 0.0 {
                corners.push((flat, w));
            }
        }
        stencils.push(Some(corners));
    }

    let comps = u
        .components()
        .iter()
        .map(|f| {
            let vals = f.values();
            let out = stencils
                .iter()
                .map(|s| match s {
                    None => 0.0,
                    Some(c) => amp * c.iter().map(|&(i, w)| w * vals[i]).sum::<f64>(),
                })
                .collect();
            ScalarField::new(spec, out)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiField::new(comps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentSymmetry {
    pub deficit: f64,
    /// Whole-step translation applied before comparing.
    pub shift: [i64; 3],
    pub grad_norm: f64,
    pub grad_norm_star: f64,
    /// `‖Du‖_p - ‖Du*‖_p`.
    pub grad_norm_diff: f64,
    /// `|{|Du*| < ε} ∩ {ε < u* < max - ε}|` with `ε = 1e-8 max u*`.
    pub plateau_measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryDiagnostics {
    pub components: Vec<ComponentSymmetry>,
}

pub fn symmetry_report(u: &MultiField, p: f64) -> Result<SymmetryDiagnostics> {
    let spec = u.spec();
    let components = u
        .components()
        .iter()
        .map(|f| {
            let (deficit, shift) = symmetry_deficit(f, p)?;
            let star = schwarz(f)?;
            let grad_norm = f.gradient_magnitude().lp_norm(p)?;
            let star_grad = star.gradient_magnitude();
            let grad_norm_star = star_grad.lp_norm(p)?;
            let top = star.max();
            let eps = PLATEAU_REL * top;
            let count = star
                .values()
                .iter()
                .zip(star_grad.values())
                .filter(|&(&v, &b)| b < eps && v > eps && v < top - eps)
                .count();
            Ok(ComponentSymmetry {
                deficit,
                shift,
                grad_norm,
                grad_norm_star,
                grad_norm_diff: grad_norm - grad_norm_star,
                plateau_measure: count as f64 * spec.cell_volume(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SymmetryDiagnostics { components })
}
