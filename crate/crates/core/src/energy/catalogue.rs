//! Built-in integrands and the named models addressable from configuration.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{critical_exponent, Coupling, EnergyModel, Integrand, KernelV, LocalTerm, OriginRule};
use crate::error::{Error, Result};
use crate::math;

/// `j(s, b) = b^p`.
#[derive(Debug, Clone, Copy)]
pub struct PowerGradient {
    pub p: f64,
}

impl PowerGradient {
    pub fn new(p: f64) -> Self {
        Self { p }
    }
}

impl Integrand for PowerGradient {
    fn value(&self, _s: f64, b: f64) -> f64 {
        math::powf(b, self.p)
    }
    fn d_s(&self, _s: f64, _b: f64) -> Option<f64> {
        Some(0.0)
    }
    fn d_b(&self, _s: f64, b: f64) -> Option<f64> {
        Some(self.p * math::powf(b, self.p - 1.0))
    }
    fn coercivity(&self) -> f64 {
        1.0
    }
    fn strictly_convex(&self) -> bool {
        self.p > 1.0
    }
}

/// `j(s, b) = (1 + 1/(1 + |s|)) b^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SaturatingWeight;

impl Integrand for SaturatingWeight {
    fn value(&self, s: f64, b: f64) -> f64 {
        (1.0 + 1.0 / (1.0 + s.abs())) * b * b
    }
    fn d_s(&self, s: f64, b: f64) -> Option<f64> {
        let d = 1.0 + s.abs();
        Some(-s.signum() * b * b / (d * d))
    }
    fn d_b(&self, s: f64, b: f64) -> Option<f64> {
        Some(2.0 * (1.0 + 1.0 / (1.0 + s.abs())) * b)
    }
    fn coercivity(&self) -> f64 {
        1.0
    }
    fn strictly_convex(&self) -> bool {
        true
    }
}

/// Gradient-free `j(s, b) = |s|^p`.
#[derive(Debug, Clone, Copy)]
pub struct ValuePower {
    pub p: f64,
}

impl Integrand for ValuePower {
    fn value(&self, s: f64, _b: f64) -> f64 {
        math::powf(s.abs(), self.p)
    }
    fn d_s(&self, s: f64, _b: f64) -> Option<f64> {
        Some(self.p * s.signum() * math::powf(s.abs(), self.p - 1.0))
    }
    fn d_b(&self, _s: f64, _b: f64) -> Option<f64> {
        Some(0.0)
    }
    fn coercivity(&self) -> f64 {
        0.0
    }
    fn strictly_convex(&self) -> bool {
        false
    }
    fn gradient_free(&self) -> bool {
        true
    }
}

/// `F(r, s) = w(r) Σ_i |s_i|^gamma` with `w(r) = exp(-r)` or `w = 1`.
#[derive(Debug, Clone, Copy)]
pub struct RadialPower {
    pub gamma: f64,
    pub decaying: bool,
}

impl RadialPower {
    pub fn new(gamma: f64, decaying: bool) -> Self {
        Self { gamma, decaying }
    }

    fn weight(&self, r: f64) -> f64 {
        if self.decaying {
            math::exp(-r)
        } else {
            1.0
        }
    }
}

impl LocalTerm for RadialPower {
    fn value(&self, r: f64, s: &[f64]) -> f64 {
        let w = self.weight(r);
        s.iter().map(|x| w * math::powf(x.abs(), self.gamma)).sum()
    }
    fn d_s(&self, r: f64, s: &[f64], i: usize) -> Option<f64> {
        let x = s[i];
        Some(self.weight(r) * self.gamma * x.signum() * math::powf(x.abs(), self.gamma - 1.0))
    }
    fn growth_constant(&self) -> f64 {
        1.0
    }
    fn growth_exponents(&self) -> Vec<f64> {
        vec![self.gamma]
    }
}

/// `F(r, s) = -s_1 s_2`; negative and submodular, a control that must fail
/// the local-term checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegativeProduct;

impl LocalTerm for NegativeProduct {
    fn value(&self, _r: f64, s: &[f64]) -> f64 {
        -s[0] * s[1]
    }
    fn d_s(&self, _r: f64, s: &[f64], i: usize) -> Option<f64> {
        Some(-s[1 - i])
    }
    fn growth_constant(&self) -> f64 {
        1.0
    }
    fn growth_exponents(&self) -> Vec<f64> {
        vec![1.0, 1.0]
    }
}

/// `G(s) = Σ_i s_i^2`.
#[derive(Debug, Clone, Copy)]
pub struct SumOfSquares {
    m: usize,
}

impl SumOfSquares {
    pub fn new(m: usize) -> Self {
        Self { m }
    }
}

impl Coupling for SumOfSquares {
    fn value(&self, s: &[f64]) -> f64 {
        s.iter().map(|x| x * x).sum()
    }
    fn d_s(&self, s: &[f64], i: usize) -> Option<f64> {
        Some(2.0 * s[i])
    }
    fn growth_constant(&self) -> f64 {
        1.0
    }
    fn growth_exponents(&self) -> Vec<f64> {
        vec![2.0; self.m]
    }
}

/// `G(s) = (Σ_i |s_i|)^2`, strictly supermodular for `m >= 2`.
#[derive(Debug, Clone, Copy)]
pub struct SquaredSum {
    m: usize,
}

impl SquaredSum {
    pub fn new(m: usize) -> Self {
        Self { m }
    }
}

impl Coupling for SquaredSum {
    fn value(&self, s: &[f64]) -> f64 {
        let t: f64 = s.iter().map(|x| x.abs()).sum();
        t * t
    }
    fn d_s(&self, s: &[f64], i: usize) -> Option<f64> {
        let t: f64 = s.iter().map(|x| x.abs()).sum();
        Some(2.0 * t * s[i].signum())
    }
    fn growth_constant(&self) -> f64 {
        self.m as f64
    }
    fn growth_exponents(&self) -> Vec<f64> {
        vec![2.0; self.m]
    }
}

/// `G(s) = s_1 - s_2`; decreasing in `s_2`, a control for the coupling checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct Difference;

impl Coupling for Difference {
    fn value(&self, s: &[f64]) -> f64 {
        s[0] - s[1]
    }
    fn d_s(&self, _s: &[f64], i: usize) -> Option<f64> {
        Some(if i == 0 { 1.0 } else { -1.0 })
    }
    fn growth_constant(&self) -> f64 {
        1.0
    }
    fn growth_exponents(&self) -> Vec<f64> {
        vec![2.0, 2.0]
    }
}

/// Names accepted by [`by_name`].
pub const MODEL_NAMES: [&str; 5] = [
    "example_paper",
    "plaplace",
    "choquard",
    "control_nonmonotone_g",
    "control_submodular_f",
];

/// Three-dimensional Choquard-type model with `m` components:
/// `j_i = (1 + 1/(1+|s|)) b^2`, `F = 0`, `G = Σ s_i^2`, `V = 1/r`
/// (`N = 3`, `p = 2`, `q = 3`).
pub fn example_paper(m: usize) -> Result<EnergyModel> {
    if m == 0 {
        return Err(Error::Config("m must be at least 1".into()));
    }
    let integrands: Vec<Box<dyn Integrand>> = (0..m).map(|_| Box::new(SaturatingWeight) as _).collect();
    Ok(EnergyModel::new(3, 2.0, 6.0, integrands)?.with_nonlocal(
        Box::new(SumOfSquares::new(m)),
        KernelV::coulomb(OriginRule::CellAverage),
    ))
}

/// `j = b^p` alone, one component.
pub fn plaplace(dim: usize, p: f64) -> Result<EnergyModel> {
    EnergyModel::new(
        dim,
        p,
        critical_exponent(p, dim, 2.0 * p),
        vec![Box::new(PowerGradient::new(p))],
    )
}

/// `j = b^2`, `G = s^2`, `V = 1/r`, one component.
pub fn choquard(dim: usize) -> Result<EnergyModel> {
    Ok(EnergyModel::new(
        dim,
        2.0,
        critical_exponent(2.0, dim, 4.0),
        vec![Box::new(PowerGradient::new(2.0))],
    )?
    .with_nonlocal(
        Box::new(SumOfSquares::new(1)),
        KernelV::coulomb(OriginRule::CellAverage),
    ))
}

/// Two-component model whose coupling `G = s_1 - s_2` is not monotone.
pub fn control_nonmonotone_g() -> Result<EnergyModel> {
    Ok(EnergyModel::new(
        3,
        2.0,
        6.0,
        vec![Box::new(SaturatingWeight), Box::new(SaturatingWeight)],
    )?
    .with_nonlocal(Box::new(Difference), KernelV::coulomb(OriginRule::CellAverage)))
}

/// Two-component model with the submodular, negative local term `F = -s_1 s_2`.
pub fn control_submodular_f() -> Result<EnergyModel> {
    Ok(EnergyModel::new(
        3,
        2.0,
        6.0,
        vec![Box::new(SaturatingWeight), Box::new(SaturatingWeight)],
    )?
    .with_local(Box::new(NegativeProduct)))
}

/// Looks a model up by its configuration name. `dim` and `p` are used by the
/// models that take them; `m` only by `example_paper`.
pub fn by_name(name: &str, dim: usize, m: usize, p: f64) -> Result<EnergyModel> {
    match name {
        "example_paper" => example_paper(m),
        "plaplace" => plaplace(dim, p),
        "choquard" => choquard(dim),
        "control_nonmonotone_g" => control_nonmonotone_g(),
        "control_submodular_f" => control_submodular_f(),
        other => Err(Error::Config(format!("unknown model '{other}'"))),
    }
}
