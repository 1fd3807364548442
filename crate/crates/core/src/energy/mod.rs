//! The three energy terms on grid fields,
//!
//! ```text
//! E(U) = Σ_i Σ_x j_i(u_i, |Du_i|) h^N          (E1)
//!      - Σ_x F(|x|, U(x)) h^N                   (E2)
//!      - Σ_x Σ_y G(U(x)) V(|x-y|) G(U(y)) h^2N  (E3)
//! ```
//!
//! with pluggable integrands. The nonlocal sum goes through a [`Convolver`];
//! this crate ships the direct double sum, the `polsym` crate an FFT one.

mod assumptions;
pub mod catalogue;
mod kernel;

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use assumptions::{check_assumptions, AssumptionCheck, AssumptionReport};
pub use kernel::{sample_kernel, Convolver, DirectConvolver, KernelV, OriginRule, RadialProfile};

use crate::error::{Error, Result};
use crate::grid::{self, GridSpec, MultiField};
use crate::math;

/// Gradient integrand `j(s, b)` of one component (`s` the value, `b = |Du|`).
pub trait Integrand {
    fn value(&self, s: f64, b: f64) -> f64;

    /// `∂j/∂s`, when available.
    fn d_s(&self, _s: f64, _b: f64) -> Option<f64> {
        None
    }

    /// `∂j/∂b`, when available.
    fn d_b(&self, _s: f64, _b: f64) -> Option<f64> {
        None
    }

    /// Constant `a_1` with `j(s, b) >= a_1 b^p`.
    fn coercivity(&self) -> f64;

    /// Whether `j(s, ·)` is strictly convex.
    fn strictly_convex(&self) -> bool;

    /// True when `j` ignores `b`.
    fn gradient_free(&self) -> bool {
        false
    }
}

/// Local term `F(r, s_1, ..., s_m)`.
pub trait LocalTerm {
    fn value(&self, r: f64, s: &[f64]) -> f64;

    /// `∂F/∂s_i`, when available.
    fn d_s(&self, _r: f64, _s: &[f64], _i: usize) -> Option<f64> {
        None
    }

    /// Growth constant `K`.
    fn growth_constant(&self) -> f64;

    /// Growth exponents `l_i`.
    fn growth_exponents(&self) -> Vec<f64>;

    /// One `(epsilon, R0, s0)` triple for which the decay bound
    /// `F(r, s) <= epsilon |s|^p` (`r >= R0`, `s_i < s0`) is claimed.
    fn decay_certificate(&self) -> Option<(f64, f64, f64)> {
        None
    }
}

/// Coupling `G(s_1, ..., s_m) >= 0` of the nonlocal term.
pub trait Coupling {
    fn value(&self, s: &[f64]) -> f64;

    fn d_s(&self, _s: &[f64], _i: usize) -> Option<f64> {
        None
    }

    /// Growth constant `K'`.
    fn growth_constant(&self) -> f64;

    /// Growth exponents `mu_i`.
    fn growth_exponents(&self) -> Vec<f64>;
}

/// `G` together with the kernel `V` it is convolved against.
pub struct Nonlocal {
    pub coupling: Box<dyn Coupling>,
    pub kernel: KernelV,
}

/// Critical Sobolev exponent `pN/(N-p)` for `p < N`, otherwise `fallback`.
pub fn critical_exponent(p: f64, dim: usize, fallback: f64) -> f64 {
    let n = dim as f64;
    if p < n {
        p * n / (n - p)
    } else {
        fallback
    }
}

pub struct EnergyModel {
    dim: usize,
    p: f64,
    p_star: f64,
    integrands: Vec<Box<dyn Integrand>>,
    local: Option<Box<dyn LocalTerm>>,
    nonlocal: Option<Nonlocal>,
}

impl EnergyModel {
    pub fn new(dim: usize, p: f64, p_star: f64, integrands: Vec<Box<dyn Integrand>>) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Config(format!("exponent p must lie in (1, inf), got {p}")));
        }
        if !(p_star > p) {
            return Err(Error::Config(format!("critical exponent p* = {p_star} must exceed p = {p}")));
        }
        if integrands.is_empty() {
            return Err(Error::Config("an energy model needs at least one integrand".into()));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dim must be 1, 2, or 3 (got {dim})")));
        }
        Ok(Self {
            dim,
            p,
            p_star,
            integrands,
            local: None,
            nonlocal: None,
        })
    }

    pub fn with_local(mut self, f: Box<dyn LocalTerm>) -> Self {
        self.local = Some(f);
        self
    }

    pub fn with_nonlocal(mut self, coupling: Box<dyn Coupling>, kernel: KernelV) -> Self {
        self.nonlocal = Some(Nonlocal { coupling, kernel });
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    /// Number of components `m`.
    pub fn m(&self) -> usize {
        self.integrands.len()
    }

    pub fn integrands(&self) -> &[Box<dyn Integrand>] {
        &self.integrands
    }

    pub fn local(&self) -> Option<&dyn LocalTerm> {
        self.local.as_deref()
    }

    pub fn nonlocal(&self) -> Option<&Nonlocal> {
        self.nonlocal.as_ref()
    }

    pub fn kernel(&self) -> Option<&KernelV> {
        self.nonlocal.as_ref().map(|n| &n.kernel)
    }

    pub(crate) fn check_field(&self, u: &MultiField) -> Result<()> {
        if u.m() != self.m() {
            return Err(Error::Config(format!(
                "model has {} components, field has {}",
                self.m(),
                u.m()
            )));
        }
        if !u.is_nonnegative() {
            return Err(Error::Negative("energy evaluation requires non-negative fields"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub total: f64,
}

fn non_finite_at(spec: &GridSpec, idx: usize, what: &str) -> Error {
    let x = spec.coords(idx);
    Error::NonFinite(format!(
        "{what} produced non-finite value at x = ({}, {}, {})",
        x[0], x[1], x[2]
    ))
}

/// `Σ_x j(u(x), |Du|(x)) h^N` for one component, summed independently of
/// point order.
pub fn integrate_j(field: &grid::ScalarField, j: &dyn Integrand) -> Result<f64> {
    let spec = field.spec();
    let b = field.gradient_magnitude();
    let mut terms = Vec::with_capacity(spec.len());
    for (idx, (&s, &bb)) in field.values().iter().zip(b.values()).enumerate() {
        let v = j.value(s, bb);
        if !v.is_finite() {
            return Err(non_finite_at(spec, idx, "integrand"));
        }
        terms.push(v);
    }
    Ok(math::order_free_sum(&mut terms) * spec.cell_volume())
}

pub fn eval_e1(u: &MultiField, model: &EnergyModel) -> Result<f64> {
    model.check_field(u)?;
    let mut total = 0.0;
    for (c, j) in u.components().iter().zip(model.integrands()) {
        total += integrate_j(c, j.as_ref())?;
    }
    Ok(total)
}

/// `Σ_x F(|x|, U(x)) h^N` (without the leading minus).
pub fn integrate_local(u: &MultiField, f: &dyn LocalTerm) -> Result<f64> {
    let spec = u.spec();
    let mut s = vec![0.0; u.m()];
    let mut terms = Vec::with_capacity(spec.len());
    for idx in 0..spec.len() {
        u.point_values(idx, &mut s);
        let v = f.value(spec.radius(idx), &s);
        if !v.is_finite() {
            return Err(non_finite_at(spec, idx, "integrand"));
        }
        terms.push(v);
    }
    Ok(math::order_free_sum(&mut terms) * spec.cell_volume())
}

pub fn eval_e2(u: &MultiField, model: &EnergyModel) -> Result<f64> {
    model.check_field(u)?;
    match model.local() {
        Some(f) => Ok(-integrate_local(u, f)?),
        None => Ok(0.0),
    }
}

/// `g(x) = G(U(x))` at every grid point.
pub fn coupling_values(u: &MultiField, g: &dyn Coupling) -> Result<Vec<f64>> {
    let spec = u.spec();
    let mut s = vec![0.0; u.m()];
    (0..spec.len())
        .map(|idx| {
            u.point_values(idx, &mut s);
            let v = g.value(&s);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(non_finite_at(spec, idx, "coupling"))
            }
        })
        .collect()
}

/// Positive double sum `Q(U) = Σ_x Σ_y g(x) V(|x-y|) g(y) h^2N`.
pub fn nonlocal_q(u: &MultiField, g: &dyn Coupling, conv: &dyn Convolver) -> Result<f64> {
    let spec = u.spec();
    if conv.spec() != spec {
        return Err(Error::Grid("convolver was built for a different grid".into()));
    }
    let gv = coupling_values(u, g)?;
    let vg = conv.convolve(&gv);
    let hn = spec.cell_volume();
    Ok(gv.iter().zip(&vg).map(|(a, b)| a * b).sum::<f64>() * hn * hn)
}

/// `E3 = -Q(U)`; zero when the model has no nonlocal term.
pub fn eval_e3(u: &MultiField, model: &EnergyModel, conv: &dyn Convolver) -> Result<f64> {
    model.check_field(u)?;
    match model.nonlocal() {
        Some(nl) => Ok(-nonlocal_q(u, nl.coupling.as_ref(), conv)?),
        None => Ok(0.0),
    }
}

/// All three terms. `conv` is only consulted when the model has a nonlocal
/// term, and must then be built from the model's kernel on `u`'s grid.
pub fn eval_total(
    u: &MultiField,
    model: &EnergyModel,
    conv: Option<&dyn Convolver>,
) -> Result<EnergyBreakdown> {
    let e1 = eval_e1(u, model)?;
    let e2 = eval_e2(u, model)?;
    let e3 = match (model.nonlocal(), conv) {
        (None, _) => 0.0,
        (Some(_), Some(c)) => eval_e3(u, model, c)?,
        (Some(_), None) => {
            return Err(Error::Config("nonlocal term configured but no convolver given".into()))
        }
    };
    Ok(EnergyBreakdown {
        e1,
        e2,
        e3,
        total: e1 + e2 + e3,
    })
}

#[cfg(test)]
mod tests {
    use super::catalogue::*;
    use super::*;
    use crate::grid::ScalarField;
    use alloc::boxed::Box;

    fn line(values: &[f64]) -> MultiField {
        let n = values.len();
        let spec = GridSpec::new(1, n, (n - 1) as f64 / 2.0).unwrap();
        MultiField::single(ScalarField::new(spec, values.to_vec()).unwrap())
    }

    fn dirichlet(dim: usize) -> EnergyModel {
        EnergyModel::new(dim, 2.0, 4.0, vec![Box::new(PowerGradient::new(2.0))]).unwrap()
    }

    #[test]
    fn e1_examples() {
        let model = dirichlet(1);
        assert_eq!(eval_e1(&line(&[0.3; 5]), &model).unwrap(), 0.0);
        // u = x + 2 on h = 1: |Du| = 1 at all five points (one-sided at faces)
        assert_eq!(eval_e1(&line(&[0.0, 1.0, 2.0, 3.0, 4.0]), &model).unwrap(), 5.0);
        // u = [0,1,4,9,16]: |Du| = [1,2,4,6,7]
        let e = eval_e1(&line(&[0.0, 1.0, 4.0, 9.0, 16.0]), &model).unwrap();
        assert_eq!(e, 1.0 + 4.0 + 16.0 + 36.0 + 49.0);
    }

    #[test]
    fn e2_examples() {
        let u = line(&[0.0, 2.0, 1.0, 0.5, 3.0]);
        let none = dirichlet(1);
        assert_eq!(eval_e2(&u, &none).unwrap(), 0.0);

        let pow = dirichlet(1).with_local(Box::new(RadialPower::new(2.0, false)));
        let expect = u.component(0).lp_norm_pow(2.0).unwrap();
        assert_eq!(eval_e2(&u, &pow).unwrap(), -expect);

        // F = exp(-r) s on coords -2..2, h = 1
        let decaying = dirichlet(1).with_local(Box::new(RadialPower::new(1.0, true)));
        let hand = -(0.0 * (-2f64).exp()
            + 2.0 * (-1f64).exp()
            + 1.0
            + 0.5 * (-1f64).exp()
            + 3.0 * (-2f64).exp());
        assert!((eval_e2(&u, &decaying).unwrap() - hand).abs() < 1e-15);
    }

    #[test]
    fn e3_point_mass_and_zero_coupling() {
        let spec = GridSpec::new(3, 5, 1.0).unwrap();
        let h = spec.spacing();
        let mut v = vec![0.0; spec.len()];
        v[spec.index(&[0, 0, 0]).unwrap()] = 1.0;
        let u = MultiField::single(ScalarField::new(spec, v).unwrap());
        let kernel = KernelV::coulomb(OriginRule::Explicit(7.5));
        let conv = DirectConvolver::new(&kernel, &spec).unwrap();
        let model = EnergyModel::new(3, 2.0, 6.0, vec![Box::new(PowerGradient::new(2.0))])
            .unwrap()
            .with_nonlocal(Box::new(SumOfSquares::new(1)), kernel);
        let e3 = eval_e3(&u, &model, &conv).unwrap();
        let expect = -7.5 * h.powi(6);
        assert!((e3 - expect).abs() <= 1e-15 * expect.abs());

        let plain = EnergyModel::new(3, 2.0, 6.0, vec![Box::new(PowerGradient::new(2.0))]).unwrap();
        assert_eq!(eval_e3(&u, &plain, &conv).unwrap(), 0.0);
    }

    #[test]
    fn total_is_sum_of_terms() {
        let spec = GridSpec::new(2, 7, 1.5).unwrap();
        let u = ScalarField::from_fn(spec, |x| (-(x[0] - 0.3).powi(2) - x[1] * x[1]).exp()).unwrap();
        let u = MultiField::single(u);
        let model = dirichlet(2)
            .with_local(Box::new(RadialPower::new(1.0, true)))
            .with_nonlocal(Box::new(SumOfSquares::new(1)), KernelV::coulomb(OriginRule::CellAverage));
        let conv = DirectConvolver::new(model.kernel().unwrap(), &spec).unwrap();
        let b = eval_total(&u, &model, Some(&conv)).unwrap();
        assert_eq!(b.e1, eval_e1(&u, &model).unwrap());
        assert_eq!(b.e2, eval_e2(&u, &model).unwrap());
        assert_eq!(b.e3, eval_e3(&u, &model, &conv).unwrap());
        assert_eq!(b.total, b.e1 + b.e2 + b.e3);
        assert!(b.e3 <= 0.0);

        let only_e1 = eval_total(&u, &dirichlet(2), None).unwrap();
        assert_eq!(only_e1.total, only_e1.e1);
        assert!(eval_total(&u, &model, None).is_err());
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        struct Bad;
        impl Integrand for Bad {
            fn value(&self, s: f64, _b: f64) -> f64 {
                if s > 1.0 {
                    f64::NAN
                } else {
                    0.0
                }
            }
            fn coercivity(&self) -> f64 {
                0.0
            }
            fn strictly_convex(&self) -> bool {
                false
            }
        }
        let model = EnergyModel::new(1, 2.0, 4.0, vec![Box::new(Bad)]).unwrap();
        let err = eval_e1(&line(&[0.0, 2.0, 0.0]), &model).unwrap_err();
        assert!(err.to_string().starts_with("integrand produced non-finite value at x"));
    }

    #[test]
    fn model_validation() {
        assert!(EnergyModel::new(3, 1.0, 6.0, vec![Box::new(PowerGradient::new(2.0))]).is_err());
        assert!(EnergyModel::new(3, 2.0, 2.0, vec![Box::new(PowerGradient::new(2.0))]).is_err());
        assert!(EnergyModel::new(3, 2.0, 6.0, vec![]).is_err());
        assert_eq!(critical_exponent(2.0, 3, 10.0), 6.0);
        assert_eq!(critical_exponent(2.0, 2, 10.0), 10.0);
    }
}
