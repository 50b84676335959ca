use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{
    cor52_eval, example43_dichotomy, lemma_a1_residual, run_general_mu, thm51_check, thm_a3_check, MuRule, PcRecord,
    RegularizerForm,
};
use crate::error::{Error, Result};
use crate::gcg::{cor42_eval, da_equivalence_check, moreau_check, run_gcg, thm41_bound_eval, ClosedFormConjugate, DualRegularizer};
use crate::optimizers::{run_from, OptimizerKind, RunConfig, StepContext};
use crate::problems::Problem;
use crate::quantizers::{
    check_fixed_points, check_map_axioms, check_prox_axioms, probe_grid, PiecewiseLinearQuantizer, QuantizationGrid,
    QuantizerSpec,
};
use crate::schedules::{StepKind, StepSchedule};
use crate::weights::Weights;

pub const SUITES: [&str; 8] =
    ["axioms", "combinators", "special-cases", "moreau", "lemma-a1", "bounds", "da-equivalence", "example43"];

/// Deliberate breakage used to confirm the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Negates the slope of every linear piece of the piecewise-linear quantizer.
    SlopeSign,
}

impl std::str::FromStr for Mutation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slope-sign" => Ok(Self::SlopeSign),
            _ => Err(Error::Config { key: "--mutation".into(), message: format!("unknown mutation `{s}` (slope-sign)") }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &'static str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { suite, name: name.into(), passed, detail: detail.into() }
}

/// Expands `all` and rejects unknown names.
pub fn resolve_suites(selector: &str) -> Result<Vec<&'static str>> {
    if selector == "all" {
        return Ok(SUITES.to_vec());
    }
    selector
        .split(',')
        .map(|s| {
            SUITES.iter().find(|k| **k == s.trim()).copied().ok_or_else(|| Error::Config {
                key: "--suite".into(),
                message: format!("unknown suite `{s}`; available: all, {}", SUITES.join(", ")),
            })
        })
        .collect()
}

pub fn run_suite(name: &str, mutation: Option<Mutation>) -> Result<Vec<Check>> {
    match name {
        "axioms" => axioms(mutation),
        "combinators" => combinators(),
        "special-cases" => special_cases(),
        "moreau" => moreau(),
        "lemma-a1" => lemma_a1(),
        "bounds" => bounds(),
        "da-equivalence" => da_equivalence(),
        "example43" => example43(),
        _ => resolve_suites(name).map(|_| Vec::new()),
    }
}

/// The quantizers shipped with the crate, by name.
pub fn builtin_quantizers() -> Result<Vec<(String, QuantizerSpec)>> {
    let mut out = Vec::new();
    for (gname, g) in
        [("binary", QuantizationGrid::binary()), ("ternary", QuantizationGrid::ternary()), ("quaternary", QuantizationGrid::quaternary())]
    {
        out.push((format!("projector/{gname}"), QuantizerSpec::Projector(g.clone())));
        for (rho, varrho) in [(0.1, 0.05), (0.3, 0.0), (0.0, 0.25), (0.2, 0.2)] {
            let q = PiecewiseLinearQuantizer::new(g.clone(), rho, varrho)?;
            out.push((format!("plq/{gname}/{rho}/{varrho}"), QuantizerSpec::PiecewiseLinear(q.clone())));
            out.push((format!("plq-unclamped/{gname}/{rho}/{varrho}"), QuantizerSpec::PiecewiseLinear(q.unclamped())));
        }
        out.push((format!("binary_relax/{gname}"), QuantizerSpec::binary_relax(g.clone(), 1.0)?));
    }
    out.push(("example43".into(), QuantizerSpec::example43(0.5, 1.0)?));
    let plq = QuantizerSpec::PiecewiseLinear(PiecewiseLinearQuantizer::new(QuantizationGrid::ternary(), 0.1, 0.1)?);
    out.push((
        "average".into(),
        QuantizerSpec::average(vec![(0.5, plq.clone()), (0.5, QuantizerSpec::binary_relax(QuantizationGrid::ternary(), 2.0)?)])?,
    ));
    out.push(("random_select".into(), QuantizerSpec::random_select(vec![plq, QuantizerSpec::Identity], 3)?));
    Ok(out)
}

fn axioms(mutation: Option<Mutation>) -> Result<Vec<Check>> {
    let probes = probe_grid(-2.0, 2.0, 10_000);
    let mut out = Vec::new();
    for (name, spec) in builtin_quantizers()? {
        for s in [1.0, 10.0] {
            let rep = match (mutation, &spec) {
                (Some(Mutation::SlopeSign), QuantizerSpec::PiecewiseLinear(q)) => {
                    check_map_axioms(|w| q.eval_with(w, q.rho * s, q.varrho * s, -1.0), &probes)
                }
                _ => check_prox_axioms(&spec, &probes, s)?,
            };
            out.push(check(
                "axioms",
                format!("monotone {name} s={s}"),
                rep.passed(),
                format!("{} violations over {} probes", rep.monotonicity_violations, rep.probes),
            ));
            let bad = check_fixed_points(&spec, s)?;
            out.push(check("axioms", format!("fixed points {name} s={s}"), bad.is_empty(), format!("{bad:?}")));
        }
    }
    Ok(out)
}

fn combinators() -> Result<Vec<Check>> {
    let g = QuantizationGrid::ternary();
    let a = QuantizerSpec::PiecewiseLinear(PiecewiseLinearQuantizer::new(g.clone(), 0.2, 0.1)?);
    let b = QuantizerSpec::binary_relax(g.clone(), 1.0)?;
    let avg = QuantizerSpec::average(vec![(0.3, a.clone()), (0.7, b.clone())])?;
    let mut gap: f64 = 0.0;
    for x in probe_grid(-2.0, 2.0, 2001) {
        let direct = 0.3 * a.eval_scalar(x, 1.0, 0)? + 0.7 * b.eval_scalar(x, 1.0, 0)?;
        gap = gap.max((avg.eval_scalar(x, 1.0, 0)? - direct).abs());
    }
    let mono = check_prox_axioms(&avg, &probe_grid(-2.0, 2.0, 10_000), 1.0)?;
    let w = Weights::new().with_group("W", vec![0.4, -0.7]).with_group("b", vec![0.4]);
    let pg = QuantizerSpec::per_group(vec![("W", QuantizerSpec::Projector(g.clone())), ("b", QuantizerSpec::Identity)])?;
    let out = pg.apply(&w, 1.0, 0)?;
    let per_group_ok = out.group("W") == Some(&[0.0, -1.0][..]) && out.group("b") == Some(&[0.4][..]);
    let rs = QuantizerSpec::random_select(vec![a, b], 11)?;
    let again = (0..20).all(|d| rs.eval_scalar(0.3, 1.0, d).ok() == rs.eval_scalar(0.3, 1.0, d).ok());
    Ok(vec![
        check("combinators", "average is the weighted sum", gap < 1e-15, format!("max gap {gap:e}")),
        check("combinators", "average stays monotone", mono.passed(), format!("{} violations", mono.monotonicity_violations)),
        check("combinators", "per-group acts groupwise", per_group_ok, format!("{out:?}")),
        check("combinators", "random select is reproducible", again, String::new()),
    ])
}

/// Largest gaps of the two special cases of the piecewise-linear quantizer.
pub fn special_case_gaps() -> Result<(f64, f64)> {
    let mut relax_gap: f64 = 0.0;
    for levels in [vec![0.0, 1.0], vec![-1.0, 0.0, 1.0], vec![-2.0, -1.0, 0.0, 1.0, 2.0]] {
        let g = QuantizationGrid::new(&levels)?;
        for mu in [0.1, 1.0, 10.0] {
            let plq = PiecewiseLinearQuantizer::new(g.clone(), 0.0, mu / (2.0 * (1.0 + mu)))?;
            let relax = QuantizerSpec::binary_relax(g.clone(), mu)?;
            for x in probe_grid(g.lo(), g.hi(), 10_001) {
                relax_gap = relax_gap.max((plq.eval(x, 1.0)? - relax.eval_scalar(x, 1.0, 0)?).abs());
            }
        }
    }
    let mut proj_gap: f64 = 0.0;
    for g in [QuantizationGrid::binary(), QuantizationGrid::ternary(), QuantizationGrid::quaternary()] {
        let plq = PiecewiseLinearQuantizer::new(g.clone(), 1e6, 1e6)?;
        for x in probe_grid(-2.0, 2.0, 10_000) {
            if g.midpoints().iter().any(|m| (x - m).abs() < 1e-9) {
                continue;
            }
            proj_gap = proj_gap.max((plq.eval(x, 1.0)? - g.project(x)?).abs());
        }
    }
    Ok((relax_gap, proj_gap))
}

fn special_cases() -> Result<Vec<Check>> {
    let (relax, proj) = special_case_gaps()?;
    Ok(vec![
        check("special-cases", "vertical shift gives the relaxed projection", relax <= 1e-12, format!("max gap {relax:e}")),
        check("special-cases", "huge shifts give the projector", proj == 0.0, format!("max gap {proj:e}")),
    ])
}

/// Descriptors used by the Moreau and equivalence checks.
pub fn dual_regularizers() -> Vec<DualRegularizer> {
    vec![
        DualRegularizer::SquaredNorm { sigma: 1.0 },
        DualRegularizer::SquaredNorm { sigma: 0.2 },
        DualRegularizer::BoxedSquaredNorm { lo: -1.0, hi: 1.0, sigma: 0.5 },
        DualRegularizer::ScaledSqDist { grid: QuantizationGrid::binary(), beta: 1.0 },
        DualRegularizer::ScaledSqDist { grid: QuantizationGrid::new(&[0.0, 1.0]).expect("valid grid"), beta: 4.0 },
    ]
}

fn moreau() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let probes: Vec<f64> = (0..100).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let mut out = Vec::new();
    for reg in dual_regularizers() {
        for mu in [0.1, 1.0] {
            let c = moreau_check(&reg, mu, &probes)?;
            out.push(check(
                "moreau",
                format!("{reg:?} mu={mu}"),
                c.route_gap <= 1e-10 && c.fd_gap <= 1e-6 && c.conjugate_gap <= 1e-6,
                format!("routes {:.1e}, fd {:.1e}, conjugate {:.1e}", c.route_gap, c.fd_gap, c.conjugate_gap),
            ));
        }
    }
    Ok(out)
}

/// Worst relative residual of the telescoping identity over seeded random sequences.
pub fn lemma_a1_worst(cases: u64, steps: usize, dim: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for seed in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = || Weights::single((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let zs: Vec<Weights> = (0..steps).map(|_| v()).collect();
        let ws: Vec<Weights> = (0..=steps).map(|_| v()).collect();
        let (w1, w) = (v(), v());
        let etas: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.01..1.0)).collect();
        let g = |x: &Weights| x.iter().map(|a| a.abs() + 0.5 * a * a).sum::<f64>();
        let r = lemma_a1_residual(&etas, &zs, &ws, &w1, &g, &w, 1, steps)?;
        worst = worst.max(r.relative());
    }
    Ok(worst)
}

fn lemma_a1() -> Result<Vec<Check>> {
    let worst = lemma_a1_worst(100, 10, 3)?;
    Ok(vec![check("lemma-a1", "100 random sequences", worst <= 1e-9, format!("worst relative residual {worst:e}"))])
}

fn bounds() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = Problem::random_quadratic(3, 2, 0.1)?;
    let w = p.optimum().expect("quadratic has an optimum");
    for form in [
        RegularizerForm::SquaredNorm { sigma: 0.5 },
        RegularizerForm::ScaledSqDist { grid: QuantizationGrid::binary(), weight: 1.0 },
    ] {
        for sched in [StepSchedule::constant(0.1)?, StepSchedule::polynomial(0.3, 0.5)?] {
            let ctx = StepContext::new(&p, &form, &sched);
            let traj = run_from(ctx, RunConfig::new(OptimizerKind::Pc, 200, 0), p.init_weights(1))?;
            let rec = PcRecord::from_trajectory(&traj, &form)?;
            let r = thm51_check(&rec, &form, &w, 1, 200)?;
            out.push(check("bounds", format!("pc bound {}", form.name()), r.holds(), format!("{:.6} <= {:.6}", r.lhs, r.rhs)));
            for c in cor52_eval(&rec, &form, &p, &w, 1, 200)? {
                out.push(check(
                    "bounds",
                    format!("{} {}", c.name, form.name()),
                    !c.violated(),
                    format!("{:.6} <= {:.6}{}", c.lhs, c.rhs, if c.asserted { "" } else { " (reported)" }),
                ));
            }
        }
    }
    let f = RegularizerForm::SquaredNorm { sigma: 0.5 };
    let rec = run_general_mu(&p, &f, &StepSchedule::polynomial(0.3, 0.5)?, MuRule::Rate { sigma0: 0.5, c: 1.0 }, p.init_weights(1), 200)?;
    let (r, tw) = thm_a3_check(&rec, &f, &w, 1, 200)?;
    out.push(check("bounds", "general smoothing bound", !r.violated(), format!("{:.6} <= {:.6}", r.lhs, r.rhs)));
    out.push(check(
        "bounds",
        "termwise Bregman bound",
        tw.corrected_violations == 0,
        format!("{} of {} terms violate; literal step-size form: {}", tw.corrected_violations, tw.checked, tw.literal_violations),
    ));
    let inst = ClosedFormConjugate::new(p.clone(), DualRegularizer::SquaredNorm { sigma: 0.5 }, None)?;
    let traj = run_gcg(&inst, &StepSchedule::new(StepKind::GcgInvT)?, p.init_weights(1), 200)?;
    let r = thm41_bound_eval(&traj, &inst, &w)?;
    out.push(check("bounds", "gcg bound", r.holds(), format!("{:.6} <= {:.6}", r.lhs, r.rhs)));
    let r = cor42_eval(&traj, &inst, &w)?;
    out.push(check("bounds", "gcg averaged bound", r.holds(), format!("{:.6} <= {:.6}", r.lhs, r.rhs)));
    Ok(out)
}

fn da_equivalence() -> Result<Vec<Check>> {
    let p = Problem::random_quadratic(3, 5, 0.1)?;
    let sched = StepSchedule::polynomial(0.5, 0.5)?;
    let w1 = p.init_weights(3);
    let mut out = Vec::new();
    for reg in dual_regularizers() {
        let eq = da_equivalence_check(&p, &reg, &sched, &w1, 100, 1.0)?;
        let neg = da_equivalence_check(&p, &reg, &sched, &w1, 100, 1.5)?;
        out.push(check("da-equivalence", format!("{reg:?}"), eq.max() <= 1e-12, format!("max deviation {:.1e}", eq.max())));
        out.push(check(
            "da-equivalence",
            format!("{reg:?} perturbed smoothing"),
            neg.max() > 1e-6,
            format!("deviation {:.1e}", neg.max()),
        ));
    }
    Ok(out)
}

fn example43() -> Result<Vec<Check>> {
    let r = example43_dichotomy(0.5, 1.0, 0.1, 0.5, 10_000, 0.9)?;
    Ok(vec![
        check(
            "example43",
            "fixed-mu BC keeps oscillating",
            r.bc_min_quantized > 0.3 && r.bc_amplitude > 0.03 && r.bc_sign_changes > 0,
            format!("min |w| {:.3}, amplitude {:.4}, {} sign changes", r.bc_min_quantized, r.bc_amplitude, r.bc_sign_changes),
        ),
        check("example43", "PC average converges", r.pc_ergodic < 0.05, format!("|w_bar| = {:.4}", r.pc_ergodic)),
    ])
}
