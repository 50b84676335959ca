use proptest::prelude::*;

use proxconnect::cli::checkpoint;
use proxconnect::diagnostics::{bregman_delta, lemma_a1_residual, RegularizerForm};
use proxconnect::optimizers::{OptimizerKind, RunConfig, Runner, StepContext};
use proxconnect::problems::Problem;
use proxconnect::quantizers::{check_fixed_points, PiecewiseLinearQuantizer, QuantizationGrid, QuantizerSpec};
use proxconnect::schedules::{ScheduleState, StepSchedule};
use proxconnect::Weights;

fn grid() -> impl Strategy<Value = QuantizationGrid> {
    prop::collection::btree_set(-40i32..40, 2..6)
        .prop_map(|s| QuantizationGrid::new(&s.into_iter().map(|k| k as f64 / 10.0).collect::<Vec<_>>()).unwrap())
}

fn plq_on(g: QuantizationGrid) -> impl Strategy<Value = QuantizerSpec> {
    (0.0..2.0f64, 0.0..2.0f64, any::<bool>()).prop_map(move |(r, v, clip)| {
        let q = PiecewiseLinearQuantizer::new(g.clone(), r, v).unwrap();
        QuantizerSpec::PiecewiseLinear(if clip { q } else { q.unclamped() })
    })
}

fn plq() -> impl Strategy<Value = QuantizerSpec> {
    grid().prop_flat_map(plq_on)
}

/// Convex combination of two maps on one grid.
fn average() -> impl Strategy<Value = QuantizerSpec> {
    grid().prop_flat_map(|g| (plq_on(g.clone()), (0.01..20.0f64), 0.0..1.0f64).prop_map(move |(a, mu, t)| {
        QuantizerSpec::average(vec![(t, a), (1.0 - t, QuantizerSpec::binary_relax(g.clone(), mu).unwrap())]).unwrap()
    }))
}

fn spec() -> impl Strategy<Value = QuantizerSpec> {
    prop_oneof![
        plq(),
        grid().prop_map(QuantizerSpec::Projector),
        (grid(), 0.01..20.0f64).prop_map(|(g, mu)| QuantizerSpec::binary_relax(g, mu).unwrap()),
        (0.1..2.0f64, 0.1..5.0f64).prop_map(|(e, mu)| QuantizerSpec::example43(e, mu).unwrap()),
        average(),
    ]
}

fn vec3() -> impl Strategy<Value = Weights> {
    prop::collection::vec(-2.0..2.0f64, 3).prop_map(Weights::single)
}

proptest! {
    #[test]
    fn quantizers_are_monotone(q in spec(), a in -3.0..3.0f64, b in -3.0..3.0f64, s in 0.1..50.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(q.eval_scalar(lo, s, 0).unwrap() <= q.eval_scalar(hi, s, 0).unwrap());
    }

    #[test]
    fn levels_are_fixed(q in spec(), s in 0.1..50.0f64) {
        prop_assert!(check_fixed_points(&q, s).unwrap().is_empty());
    }

    #[test]
    fn infinite_sharpness_projects(g in grid(), r in 0.01..1.0f64, v in 0.01..1.0f64, x in -3.0..3.0f64) {
        prop_assume!(g.midpoints().iter().all(|m| (x - m).abs() > 1e-9));
        let q = PiecewiseLinearQuantizer::new(g.clone(), r, v).unwrap();
        prop_assert_eq!(q.eval(x, f64::INFINITY).unwrap(), g.project(x).unwrap());
    }

    #[test]
    fn schedule_identity(eta0 in 0.001..2.0f64, power in 0.0..=0.5f64, steps in 1u64..300) {
        let s = StepSchedule::polynomial(eta0, power).unwrap();
        let mut st = ScheduleState::initial();
        for _ in 0..steps {
            st = st.advance(&s).unwrap();
            prop_assert!(st.identity_defect() <= 1e-12);
            prop_assert!(st.pi < st.mu);
        }
    }

    #[test]
    fn telescoping_identity(seed in any::<u64>(), n in 1usize..12) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = || Weights::single((0..2).map(|_| rng.gen_range(-3.0..3.0)).collect());
        let zs: Vec<Weights> = (0..n).map(|_| v()).collect();
        let ws: Vec<Weights> = (0..=n).map(|_| v()).collect();
        let (w1, w) = (v(), v());
        let etas: Vec<f64> = (0..n).map(|i| 0.05 + 0.1 * i as f64).collect();
        let g = |x: &Weights| x.iter().map(|a| a.abs()).sum::<f64>();
        for s in 1..=n {
            let r = lemma_a1_residual(&etas, &zs, &ws, &w1, &g, &w, s, n).unwrap();
            prop_assert!(r.relative() <= 1e-9, "{:?}", r);
        }
    }

    #[test]
    fn bregman_nonnegative_for_convex(sigma in 0.0..3.0f64, pi in 0.001..1.0f64, w in vec3(), ws in vec3()) {
        let f = RegularizerForm::SquaredNorm { sigma };
        let next = f.prox(&ws, 1.0 / pi);
        let d = bregman_delta(&f, pi, &w, &next, &ws).unwrap();
        prop_assert!(d >= -1e-12 * (1.0 + w.norm_sq() + ws.norm_sq()), "{}", d);
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), steps in 0u64..30, kind in 0usize..5) {
        let p = Problem::random_quadratic(3, seed % 17, 0.1).unwrap();
        let q = QuantizerSpec::PiecewiseLinear(PiecewiseLinearQuantizer::new(QuantizationGrid::ternary(), 0.1, 0.05).unwrap());
        let sched = StepSchedule::polynomial(0.3, 0.5).unwrap();
        let ctx = StepContext::new(&p, &q, &sched);
        let cfg = RunConfig::new(OptimizerKind::ALL[kind], steps, seed);
        let mut r = Runner::new(ctx, cfg, p.init_weights(seed)).unwrap();
        while !r.done() {
            r.next_snapshot().unwrap();
        }
        let st = r.state().clone();
        let back = checkpoint::decode(&checkpoint::encode(&st)).unwrap();
        prop_assert!(back.w_star.bit_eq(&st.w_star) && back.w_quant.bit_eq(&st.w_quant));
        prop_assert_eq!(back, st);
    }
}
