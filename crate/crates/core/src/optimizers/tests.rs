use super::*;
use crate::problems::{gen_blobs, Activation, SyntheticDataset};
use crate::quantizers::{PiecewiseLinearQuantizer, QuantizationGrid, QuantizerSpec};
use crate::schedules::StepKind;

fn one_step(kind: OptimizerKind, q: &QuantizerSpec, eta: f64, w0: f64) -> TrainState {
    let p = Problem::half_square();
    let sch = StepSchedule::constant(eta).unwrap();
    let ctx = StepContext::new(&p, q, &sch);
    let s = TrainState::new(kind, Weights::scalar(w0), &ctx, 0).unwrap();
    step(&s, &ctx).unwrap()
}

fn scalar(w: &Weights) -> f64 {
    w.to_flat()[0]
}

fn sign() -> QuantizerSpec {
    QuantizerSpec::projector(&[-1.0, 1.0]).unwrap()
}

#[test]
fn bc_hand_step() {
    let s = one_step(OptimizerKind::Bc, &sign(), 0.1, 0.3);
    assert!((scalar(&s.w_star) - 0.2).abs() < 1e-15);
    assert_eq!(scalar(&s.w_quant), 1.0);
    let z = one_step(OptimizerKind::Bc, &sign(), 0.0, 0.3);
    assert_eq!(scalar(&z.w_star), 0.3);
    let sgd = one_step(OptimizerKind::Bc, &QuantizerSpec::Identity, 0.1, 0.3);
    assert!((scalar(&sgd.w_star) - 0.27).abs() < 1e-15);
}

#[test]
fn pq_sticks_on_binary() {
    let mut s = one_step(OptimizerKind::Pq, &sign(), 0.1, 1.0);
    assert_eq!(scalar(&s.w_quant), 1.0);
    let p = Problem::half_square();
    let sch = StepSchedule::constant(0.1).unwrap();
    let q = sign();
    let ctx = StepContext::new(&p, &q, &sch);
    for _ in 0..100 {
        s = step(&s, &ctx).unwrap();
        assert_eq!(scalar(&s.w_quant), 1.0);
    }
    let sgd = one_step(OptimizerKind::Pq, &QuantizerSpec::Identity, 0.1, 0.3);
    assert!((scalar(&sgd.w_star) - 0.27).abs() < 1e-15);
}

#[test]
fn rpc_hand_step() {
    let s = one_step(OptimizerKind::Rpc, &QuantizerSpec::Identity, 0.1, 0.3);
    assert!((scalar(&s.w_star) - 0.27).abs() < 1e-15);
    let s = one_step(OptimizerKind::Rpc, &sign(), 0.1, 0.3);
    assert!((scalar(&s.w_star) - 0.97).abs() < 1e-15);
    let s = one_step(OptimizerKind::Rpc, &sign(), 0.0, 0.3);
    assert_eq!(scalar(&s.w_star), 1.0);
}

#[test]
fn ptq_ignores_quantizer() {
    let p = Problem::random_quadratic(3, 2, 0.2).unwrap();
    let sch = StepSchedule::constant(0.1).unwrap();
    let specs = [
        QuantizerSpec::Identity,
        sign(),
        QuantizerSpec::PiecewiseLinear(PiecewiseLinearQuantizer::new(QuantizationGrid::ternary(), 0.1, 0.1).unwrap()),
    ];
    let trajs: Vec<Trajectory> = specs
        .iter()
        .map(|q| run(StepContext::new(&p, q, &sch), RunConfig::new(OptimizerKind::Ptq, 50, 7)).unwrap())
        .collect();
    for t in &trajs[1..] {
        for (a, b) in t.snapshots.iter().zip(&trajs[0].snapshots) {
            assert!(a.w_star.bit_eq(&b.w_star));
        }
    }
}

#[test]
fn ptq_limit_then_projection() {
    let p = Problem::quadratic(vec![1.0], vec![0.4]).unwrap();
    let sch = StepSchedule::constant(0.1).unwrap();
    let q = sign();
    let t = run_from(StepContext::new(&p, &q, &sch), RunConfig::new(OptimizerKind::Ptq, 500, 0), Weights::scalar(-0.9))
        .unwrap();
    assert!((scalar(&t.last().w_star) - 0.4).abs() < 1e-12);
    assert_eq!(scalar(&t.terminal), 1.0);
}

#[test]
fn zero_steps() {
    let p = Problem::half_square();
    let sch = StepSchedule::constant(0.1).unwrap();
    let q = sign();
    let t = run_from(StepContext::new(&p, &q, &sch), RunConfig::new(OptimizerKind::Pc, 0, 0), Weights::scalar(-0.2))
        .unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(scalar(&t.terminal), -1.0);
}

#[test]
fn pc_with_zero_shifts_is_sgd() {
    let p = Problem::random_quadratic(4, 3, 0.1).unwrap();
    let sch = StepSchedule::polynomial(0.3, 0.5).unwrap();
    let plq = QuantizerSpec::PiecewiseLinear(
        PiecewiseLinearQuantizer::new(QuantizationGrid::ternary(), 0.0, 0.0).unwrap().unclamped(),
    );
    let id = QuantizerSpec::Identity;
    let a = run(StepContext::new(&p, &plq, &sch), RunConfig::new(OptimizerKind::Pc, 100, 1)).unwrap();
    let b = run(StepContext::new(&p, &id, &sch), RunConfig::new(OptimizerKind::Pc, 100, 1)).unwrap();
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        assert!(x.w_star.bit_eq(&y.w_star));
    }
}

fn blob_mlp() -> Problem {
    let data = gen_blobs(&SyntheticDataset {
        seed: 3,
        n_samples: 60,
        n_features: 3,
        n_classes: 3,
        class_separation: 3.0,
    })
    .unwrap();
    Problem::mlp(&[6], Activation::Tanh, data).unwrap()
}

#[test]
fn bc_equals_pc_with_projector() {
    let p = blob_mlp();
    let q = QuantizerSpec::per_group(vec![
        ("W1", sign()),
        ("b1", QuantizerSpec::Identity),
        ("W2", sign()),
        ("b2", QuantizerSpec::Identity),
    ])
    .unwrap();
    let sch = StepSchedule::constant(0.05).unwrap();
    let ctx = StepContext::new(&p, &q, &sch).with_batch_size(Some(16));
    let bc = run(ctx, RunConfig::new(OptimizerKind::Bc, 60, 9)).unwrap();
    let pc = run(ctx, RunConfig::new(OptimizerKind::Pc, 60, 9)).unwrap();
    assert!(bc.bit_eq(&pc));
    let again = run(ctx, RunConfig::new(OptimizerKind::Bc, 60, 9)).unwrap();
    assert!(bc.bit_eq(&again));
}

#[test]
fn hard_quantization_freezes_weights() {
    let p = blob_mlp();
    let q = QuantizerSpec::per_group(vec![
        ("W1", sign()),
        ("b1", QuantizerSpec::Identity),
        ("W2", sign()),
        ("b2", QuantizerSpec::Identity),
    ])
    .unwrap();
    let sch = StepSchedule::constant(0.05).unwrap();
    let ctx = StepContext::new(&p, &q, &sch);
    let mut cfg = RunConfig::new(OptimizerKind::Pc, 40, 2);
    cfg.hard_quantize_at = Some(20);
    let t = run(ctx, cfg).unwrap();
    let at = &t.snapshots[20];
    for s in &t.snapshots[21..] {
        assert_eq!(s.w_star.group("W1"), at.w_star.group("W1"));
        assert!(s.w_star.group("W1").unwrap().iter().all(|v| v.abs() == 1.0));
    }
    assert_ne!(t.last().w_star.group("b1"), at.w_star.group("b1"));
}

#[test]
fn divergence_guard() {
    let p = Problem::half_square();
    let sch = StepSchedule::constant(3.0).unwrap();
    let q = QuantizerSpec::Identity;
    let err = run_from(StepContext::new(&p, &q, &sch), RunConfig::new(OptimizerKind::Ptq, 100, 0), Weights::scalar(1.0))
        .unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }));
}

#[test]
fn averages() {
    let p = Problem::half_square();
    let q = QuantizerSpec::Identity;
    for kind in [StepKind::ConstantEta(0.3), StepKind::GcgInvT] {
        let sch = StepSchedule::new(kind).unwrap();
        let t = run_from(StepContext::new(&p, &q, &sch), RunConfig::new(OptimizerKind::Pc, 10, 0), Weights::scalar(1.0))
            .unwrap();
        let avg = ergodic_average(&t, AveragingWeights::StepSize).unwrap();
        let mean: f64 = t.snapshots[..10].iter().map(|s| scalar(&s.w_quant)).sum::<f64>() / 10.0;
        assert!((scalar(&avg) - mean).abs() < 1e-15);
    }
    let sch = StepSchedule::constant(0.3).unwrap();
    let t = run_from(StepContext::new(&p, &q, &sch), RunConfig::new(OptimizerKind::Pc, 0, 0), Weights::scalar(0.7)).unwrap();
    assert_eq!(scalar(&ergodic_average(&t, AveragingWeights::StepSize).unwrap()), 0.7);
    assert_eq!(scalar(&ergodic_average(&t, AveragingWeights::Uniform).unwrap()), 0.7);
}

#[test]
fn rpc_residual() {
    let p = Problem::half_square();
    let id = QuantizerSpec::Identity;
    let r = rpc_fixed_point_residual(&Weights::scalar(0.4), &p, &id, 0.1, 0.5).unwrap();
    assert!((r - 0.04).abs() < 1e-15);
    let r = rpc_fixed_point_residual(&Weights::scalar(1.0), &p, &sign(), 0.0, 0.5).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn converged_rpc_has_small_residual() {
    let p = Problem::quadratic(vec![1.0], vec![0.3]).unwrap();
    let plq = QuantizerSpec::PiecewiseLinear(PiecewiseLinearQuantizer::new(QuantizationGrid::binary(), 0.0, 0.1).unwrap());
    let sch = StepSchedule::constant(0.1).unwrap().with_sharpness(crate::schedules::SharpnessRule::Fixed, 1.0, 1.0).unwrap();
    let t = run_from(StepContext::new(&p, &plq, &sch), RunConfig::new(OptimizerKind::Rpc, 2000, 0), Weights::scalar(0.2))
        .unwrap();
    let r = rpc_fixed_point_residual(&t.last().w_star, &p, &plq, 0.1, 1.0).unwrap();
    assert!(r < 1e-12, "{r}");
}

#[test]
fn snapshots_keep_schedule_identity() {
    let p = Problem::half_square();
    let q = sign();
    let sch = StepSchedule::polynomial(0.5, 0.5).unwrap();
    let t = run(StepContext::new(&p, &q, &sch), RunConfig::new(OptimizerKind::Pc, 300, 0)).unwrap();
    assert_eq!(t.len(), 301);
    for s in &t.snapshots {
        assert!(s.schedule.identity_defect() <= 1e-12);
        assert_eq!(s.sharpness, s.schedule.inverse_pi());
    }
}
