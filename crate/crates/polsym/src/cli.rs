//! The four command workflows. Each writes its outputs under one directory
//! and reports whether all of its checks passed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use polsym_core::energy::catalogue::{self, PowerGradient, SaturatingWeight};
use polsym_core::energy::{check_assumptions, eval_total, Convolver, DirectConvolver, EnergyModel, Integrand};
use polsym_core::minimize::{dilate, minimize, project_constraints, symmetry_report, ConstraintVector, Initializer, MinimizeConfig};
use polsym_core::rearrange::{iterate_polarizations, schwarz_multi, PolarizationSchedule, TraceStatus};
use polsym_core::verify::{check_polya_szego, random_bumps, run_property_suite};
use polsym_core::{MultiField, ScalarField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, ConvolutionMethod, InitKind, IntegrandKind, RunConfig};
use crate::error::{Error, Result};
use crate::fft::FftConvolver;
use crate::io::{read_field, write_csv, write_field};

/// Result of a workflow that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False if any check failed.
    pub passed: bool,
    /// Key-value report, also written to `summary.txt`.
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Exit code of a failed run: configuration and I/O errors map to 2.
pub fn error_exit_code(_err: &Error) -> i32 {
    2
}

pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.check_command(command)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let outcome = match command {
        Command::Symmetrize => symmetrize(cfg, out)?,
        Command::Verify => verify(cfg, out)?,
        Command::Minimize => run_minimize(cfg, out)?,
        Command::PolyaSzego => polya_szego(cfg, out)?,
    };
    let path = out.join("summary.txt");
    fs::write(&path, &outcome.summary).map_err(|e| Error::io(&path, e))?;
    Ok(outcome)
}

fn kv(s: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(s, "{key} = {value}");
}

fn bumps_field(cfg: &RunConfig, seed: u64) -> Result<MultiField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(MultiField::new(
        (0..cfg.m).map(|_| random_bumps(&cfg.grid, &mut rng)).collect(),
    )?)
}

fn symmetrize(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let initial = match &cfg.input {
        Some(path) => {
            let f = read_field(path)?;
            if f.spec() != &cfg.grid {
                return Err(Error::Config(format!(
                    "{} does not match the configured grid",
                    path.display()
                )));
            }
            f
        }
        None => bumps_field(cfg, cfg.seed)?,
    };
    let schedule = PolarizationSchedule {
        mode: cfg.schedule,
        seed: cfg.seed,
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        p: cfg.p,
    };
    let (last, trace) = iterate_polarizations(&initial, &schedule)?;
    write_csv(&out.join("trace.csv"), &trace.to_csv())?;
    write_field(&out.join("initial.rfld"), &initial)?;
    write_field(&out.join("final.rfld"), &last)?;
    write_field(&out.join("schwarz.rfld"), &schwarz_multi(&initial)?)?;

    let m = initial.m();
    let monotone = trace
        .records
        .windows(2)
        .all(|w| (0..m).all(|i| w[1].rel_dist[i] <= w[0].rel_dist[i]));
    let mut s = String::new();
    kv(&mut s, "command", "symmetrize");
    kv(&mut s, "status", match trace.status {
        TraceStatus::Converged => "converged",
        TraceStatus::MaxIterReached => "max_iter_reached",
    });
    kv(&mut s, "iterations", trace.records.len() - 1);
    kv(&mut s, "final_max_rel_dist", format!("{:e}", trace.final_max_dist()));
    kv(&mut s, "mass_leak", format!("{:e}", trace.mass_leak));
    kv(&mut s, "rel_dist_non_increasing", monotone);
    Ok(Outcome {
        passed: monotone,
        summary: s,
    })
}

fn verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let suite = run_property_suite(cfg.seed, cfg.trials, &cfg.grid)?;
    write_csv(&out.join("suite.csv"), &suite.to_csv())?;

    let model = catalogue::by_name(&cfg.model, cfg.grid.dim(), cfg.m, cfg.p)?;
    let report = check_assumptions(&model, cfg.assumption_trials, cfg.seed);
    let mut a = String::from("check,applicable,passed,witness\n");
    for c in &report.checks {
        let _ = writeln!(
            a,
            "{},{},{},\"{}\"",
            c.name,
            c.applicable,
            c.passed,
            c.witness.as_deref().unwrap_or("").replace('"', "'")
        );
    }
    write_csv(&out.join("assumptions.csv"), &a)?;

    let mut s = String::new();
    kv(&mut s, "command", "verify");
    kv(&mut s, "trials", cfg.trials);
    kv(&mut s, "suite_failures", suite.failures());
    for row in &suite.rows {
        if let Some((trial, r)) = &row.witness {
            if !r.pass {
                kv(&mut s, &format!("witness.{}", row.check), format!("trial {trial}: {r:?}"));
            }
        }
    }
    kv(&mut s, "model", &cfg.model);
    kv(&mut s, "assumptions_passed", report.all_passed());
    for c in report.failures() {
        kv(&mut s, &format!("assumption.{}", c.name), c.witness.as_deref().unwrap_or("failed"));
    }
    Ok(Outcome {
        passed: suite.failures() == 0 && report.all_passed(),
        summary: s,
    })
}

fn polya_szego(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let power = PowerGradient::new(cfg.p);
    let j: &dyn Integrand = match cfg.integrand {
        IntegrandKind::Power => &power,
        IntegrandKind::Saturating => &SaturatingWeight,
    };
    let mut csv = String::from("trial,left,right,slack,tol,pass\n");
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for trial in 0..cfg.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(trial as u64));
        let u = random_bumps(&cfg.grid, &mut rng);
        let r = check_polya_szego(&u, j, cfg.c_tol)?;
        failures += usize::from(!r.pass);
        worst = worst.min(r.slack);
        let _ = writeln!(
            csv,
            "{trial},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            r.left,
            r.right,
            r.slack,
            r.tol,
            u8::from(r.pass)
        );
    }
    write_csv(&out.join("polya_szego.csv"), &csv)?;
    let mut s = String::new();
    kv(&mut s, "command", "polya-szego");
    kv(&mut s, "trials", cfg.trials);
    kv(&mut s, "failures", failures);
    kv(&mut s, "worst_slack", format!("{worst:e}"));
    Ok(Outcome {
        passed: failures == 0,
        summary: s,
    })
}

/// Convolver for the model's kernel on the configured grid, if it has one.
pub fn build_convolver(
    model: &EnergyModel,
    cfg: &RunConfig,
) -> Result<Option<Box<dyn Convolver>>> {
    let Some(kernel) = model.kernel() else {
        return Ok(None);
    };
    Ok(Some(match cfg.convolution {
        ConvolutionMethod::Fft => Box::new(FftConvolver::new(kernel, &cfg.grid)?),
        ConvolutionMethod::Direct => Box::new(DirectConvolver::new(kernel, &cfg.grid)?),
    }))
}

fn run_minimize(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let model = catalogue::by_name(&cfg.model, cfg.grid.dim(), cfg.m, cfg.p)?;
    let conv = build_convolver(&model, cfg)?;
    let conv = conv.as_deref();
    let constraints = ConstraintVector::new(cfg.constraints.clone())?;
    let p = model.p();

    let raw = match cfg.init {
        InitKind::Gaussian => {
            let width = cfg.init_width.unwrap_or(cfg.grid.half_width() / 4.0);
            if !(width > 0.0) {
                return Err(Error::Config("init_width must be positive".into()));
            }
            let two_w2 = 2.0 * width * width;
            let f = ScalarField::from_fn(cfg.grid, |x| {
                (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / two_w2).exp()
            })?;
            MultiField::new(vec![f; model.m()])?
        }
        InitKind::Bumps => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            MultiField::new(
                (0..model.m())
                    .map(|_| random_bumps(&cfg.grid, &mut rng))
                    .collect(),
            )?
        }
    };
    let mut mc = MinimizeConfig::new(constraints.clone());
    mc.initial = Initializer::Field(raw.clone());
    mc.eta = cfg.eta;
    mc.eta_growth = cfg.eta_growth;
    mc.max_steps = cfg.max_steps;
    mc.grad_tol = cfg.grad_tol;
    mc.k_pol = cfg.k_pol;
    mc.interleave_until = cfg.interleave_until;
    mc.seed = cfg.seed;

    // dilation scan around the projected starting point
    let start = project_constraints(&raw, &constraints, p)?;
    let mut dil = String::from("delta,E1,E2,E3,total,norm_pow_1\n");
    let mut best_dilation = f64::INFINITY;
    for &delta in &cfg.dilations {
        let d = dilate(&start, delta, p)?;
        let e = eval_total(&d, &model, conv)?;
        best_dilation = best_dilation.min(e.total);
        let _ = writeln!(
            dil,
            "{delta},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            e.e1,
            e.e2,
            e.e3,
            e.total,
            d.component(0).lp_norm_pow(p)?
        );
    }
    write_csv(&out.join("dilation.csv"), &dil)?;

    let res = minimize(&model, &cfg.grid, conv, &mc)?;
    write_csv(&out.join("energy_trace.csv"), &res.trace_csv())?;
    write_csv(&out.join("schwarz_events.csv"), &res.schwarz_csv())?;
    write_field(&out.join("final.rfld"), &res.field)?;

    let sym = symmetry_report(&res.field, p)?;
    let e = res.final_energy();
    let mut constraint_ok = true;
    let mut s = String::new();
    kv(&mut s, "command", "minimize");
    kv(&mut s, "model", &cfg.model);
    kv(&mut s, "status", res.status.as_str());
    kv(&mut s, "steps", res.trace.len() - 1);
    kv(&mut s, "E1", format!("{:.12e}", e.e1));
    kv(&mut s, "E2", format!("{:.12e}", e.e2));
    kv(&mut s, "E3", format!("{:.12e}", e.e3));
    kv(&mut s, "total", format!("{:.12e}", e.total));
    kv(&mut s, "min_dilation_energy", format!("{best_dilation:.12e}"));
    for (i, f) in res.field.components().iter().enumerate() {
        let k = i + 1;
        let target = constraints.values()[i];
        let rel = (f.lp_norm_pow(p)? - target).abs() / target;
        constraint_ok &= rel <= 1e-12;
        let c = &sym.components[i];
        kv(&mut s, &format!("constraint_rel_err_{k}"), format!("{rel:e}"));
        kv(&mut s, &format!("lambda_{k}"), format!("{:.12e}", res.lambda[i]));
        kv(&mut s, &format!("el_residual_{k}"), format!("{:e}", res.residuals[i]));
        kv(&mut s, &format!("symmetry_deficit_{k}"), format!("{:e}", c.deficit));
        kv(&mut s, &format!("grad_norm_{k}"), format!("{:.12e}", c.grad_norm));
        kv(&mut s, &format!("grad_norm_star_{k}"), format!("{:.12e}", c.grad_norm_star));
        kv(&mut s, &format!("plateau_measure_{k}"), format!("{:e}", c.plateau_measure));
        kv(&mut s, &format!("boundary_shell_mass_{k}"), format!("{:e}", f.boundary_shell_mass(p)?));
    }
    let flagged = res.schwarz_events.iter().filter(|e| e.flagged).count();
    kv(&mut s, "schwarz_passes", res.schwarz_events.len());
    kv(&mut s, "schwarz_increases_flagged", flagged);
    kv(&mut s, "norm_drift_warnings", res.drift_warnings);
    Ok(Outcome {
        passed: constraint_ok && flagged == 0,
        summary: s,
    })
}
