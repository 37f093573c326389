use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavenet_core::audio_io::{synth_dataset, Example};
use wavenet_core::compression::{schedule_sparsity, MaskScheme, PruneSchedule, PruneSchedules};
use wavenet_core::kernels::PrecisionContext;
use wavenet_core::model::ModelConfig;
use wavenet_core::numerics::FormatName;
use wavenet_core::training::{
    adam_step, cross_entropy, cross_entropy_with_grad, evaluate, one_shot_2to4_procedure,
    sample_segment, train, OptimizerState, Pruning, TrainConfig, Trainer,
};
use wavenet_core::{Error, Parameters32, Parameters64, Tensor};

fn small_cfg(steps: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 2,
        segment_samples: 400,
        steps,
        seed,
        ..TrainConfig::default()
    }
}

fn data() -> Vec<Example> {
    synth_dataset(7, 3, 0.25)
}

#[test]
fn cross_entropy_matches_direct_softmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (a, t) = (16, 9);
    let logits: Vec<f64> = (0..a * t).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let targets: Vec<usize> = (0..t).map(|_| rng.gen_range(0..a)).collect();
    let tensor = Tensor::from_vec(&[a, t], logits.clone()).unwrap();
    let mut want = 0.0;
    for (j, &c) in targets.iter().enumerate() {
        let z: f64 = (0..a).map(|i| logits[i * t + j].exp()).sum();
        want -= (logits[c * t + j].exp() / z).ln();
    }
    want /= t as f64;
    assert!((cross_entropy(&tensor, &targets).unwrap() - want).abs() < 1e-12);

    let (_, grad) = cross_entropy_with_grad(&tensor, &targets).unwrap();
    let h = 1e-6;
    for idx in [0, 5, 17, 40, a * t - 1] {
        let (mut p, mut m) = (tensor.clone(), tensor.clone());
        p.data_mut()[idx] += h;
        m.data_mut()[idx] -= h;
        let fd = (cross_entropy(&p, &targets).unwrap() - cross_entropy(&m, &targets).unwrap()) / (2.0 * h);
        assert!((fd - grad.data()[idx]).abs() < 1e-8);
    }
    assert!(matches!(
        cross_entropy(&tensor, &vec![a; t]),
        Err(Error::CodeOutOfRange { .. })
    ));
    assert!(matches!(cross_entropy(&tensor, &[0]), Err(Error::Shape(_))));
}

#[test]
fn adam_minimizes_a_quadratic() {
    // loss = 0.5 * |p - 0.3|^2 over every parameter
    let config = ModelConfig {
        mel_bins: 4,
        upsample_kernel: 4,
        upsample_stride: 2,
        ..ModelConfig::tiny()
    };
    let mut p = Parameters64::build(&config, 2).unwrap();
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        ..TrainConfig::default()
    };
    let dist = |p: &Parameters64| -> f64 {
        p.tensors().iter().flat_map(|t| t.data()).map(|x| (x - 0.3).powi(2)).sum::<f64>()
    };
    let before = dist(&p);
    let mut state = OptimizerState::new(&p);
    for _ in 0..1500 {
        let mut g = p.clone();
        for t in g.tensors_mut() {
            for x in t.data_mut() {
                *x -= 0.3;
            }
        }
        adam_step(&mut p, &g, &mut state, &cfg, None).unwrap();
    }
    assert!(dist(&p) < 1e-3 * before, "{} -> {}", before, dist(&p));

    let mut g = p.clone();
    g.tensors_mut()[0].data_mut()[0] = f64::NAN;
    assert!(matches!(
        adam_step(&mut p, &g, &mut state, &cfg, None),
        Err(Error::NonFiniteGradient { .. })
    ));
}

#[test]
fn segments_are_frame_aligned() {
    let ex = &data()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let s = sample_segment(ex, &mut rng, 1000, 256).unwrap();
        assert_eq!(s.start % 200, 0);
        assert_eq!(s.codes.len(), 1000);
        assert_eq!(s.features.frames(), 5);
    }
    // longer than the clip: padded with silence
    let s = sample_segment(ex, &mut rng, 8000, 256).unwrap();
    assert_eq!(s.codes.len(), 8000);
    assert!(s.codes[4000..].iter().all(|&c| c == 128));
    assert!(matches!(sample_segment(ex, &mut rng, 300, 256), Err(Error::Config(_))));
}

#[test]
fn training_reduces_loss() {
    let data = data();
    let params = Parameters32::build(&ModelConfig::tiny(), 1).unwrap();
    let out = train(params, &small_cfg(80, 1), &data, Pruning::Dense, None).unwrap();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let losses: Vec<f64> = out.metrics.iter().map(|m| m.loss).collect();
    let (head, tail) = (mean(&losses[..10]), mean(&losses[70..]));
    assert!(tail < head - 0.2, "{head} -> {tail}");
}

#[test]
fn training_is_deterministic() {
    let data = data();
    let run = |seed: u64| -> Vec<u8> {
        let params = Parameters32::build(&ModelConfig::tiny(), 5).unwrap();
        let mut log = Vec::new();
        train(params, &small_cfg(6, seed), &data, Pruning::Dense, Some(&mut log)).unwrap();
        log
    };
    let a = run(9);
    assert_eq!(a, run(9));
    assert_ne!(a, run(10));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 6);
}

#[test]
fn non_finite_loss_is_divergence() {
    let data = data();
    let mut params = Parameters32::build(&ModelConfig::tiny(), 1).unwrap();
    let i = params.position("end.weight").unwrap();
    params.tensors_mut()[i].data_mut()[0] = f32::INFINITY;
    let mut tr = Trainer::new(params, small_cfg(3, 1), &data, Pruning::Dense).unwrap();
    assert!(matches!(tr.step(), Err(Error::Diverged { step: 1, .. })));
}

#[test]
fn iterative_pruning_hits_schedule() {
    let data = data();
    let sch = PruneSchedule::new(0.75, 0, 6, 10).unwrap();
    let params = Parameters32::build(&ModelConfig::tiny(), 2).unwrap();
    let out = train(
        params,
        &small_cfg(80, 2),
        &data,
        Pruning::Iterative(PruneSchedules::uniform(sch)),
        None,
    )
    .unwrap();
    assert_eq!(out.events.len(), 8);
    for ev in &out.events {
        assert_eq!(ev.step % 10, 0);
        for t in &ev.tensors {
            let s = schedule_sparsity(ev.step, &sch);
            assert_eq!(t.target, s);
            assert_eq!(t.kept, t.numel - (s * t.numel as f64).round() as usize);
        }
    }
    let ck = &out.checkpoint;
    for m in ck.masks.iter() {
        assert_eq!(m.scheme(), MaskScheme::Unstructured);
        assert_eq!(m.popcount(), m.numel() - (0.75 * m.numel() as f64).round() as usize);
        let t = &ck.params.tensors()[ck.params.position(m.owner()).unwrap()];
        assert!(t.data().iter().zip(m.bits()).all(|(x, &k)| k || *x == 0.0));
    }
    // sparsity in the log is held between events
    let last = out.metrics.last().unwrap();
    assert!(last.sparsity.values().all(|&s| (s - 0.75).abs() < 0.01));
}

#[test]
fn missing_schedule_is_an_error() {
    let data = data();
    let params = Parameters32::build(&ModelConfig::tiny(), 2).unwrap();
    let empty = PruneSchedules(Default::default());
    let err = train(params, &small_cfg(20, 2), &data, Pruning::Iterative(empty), None).unwrap_err();
    assert!(matches!(err, Error::MissingSchedule(_)), "{err}");
}

#[test]
fn one_shot_two_of_four() {
    let data = data();
    let params = Parameters32::build(&ModelConfig::tiny(), 3).unwrap();
    let out = one_shot_2to4_procedure(params, &small_cfg(30, 3), &data, None).unwrap();
    assert_eq!(out.pruned.masks, out.retrained.masks);
    assert_eq!(out.metrics.len(), 60);
    assert_eq!(out.retrained.step, 60);
    for m in out.retrained.masks.iter() {
        assert!(m.group_violations().is_empty());
        let t = &out.retrained.params.tensors()[out.retrained.params.position(m.owner()).unwrap()];
        assert!(t.data().iter().zip(m.bits()).all(|(x, &k)| k || *x == 0.0));
    }
    let ctx = PrecisionContext::new(FormatName::Fp32);
    let pruned = evaluate(&out.pruned.params, &data, &ctx, None).unwrap();
    let retrained = evaluate(&out.retrained.params, &data, &ctx, None).unwrap();
    assert!(retrained <= pruned, "{retrained} > {pruned}");
}

#[test]
fn evaluation_under_formats() {
    let data = data();
    let params = Parameters32::build(&ModelConfig::tiny(), 4).unwrap();
    let fp32 = evaluate(&params, &data, &PrecisionContext::new(FormatName::Fp32), None).unwrap();
    let tf32 = evaluate(&params, &data, &PrecisionContext::new(FormatName::Tf32), None).unwrap();
    assert!((fp32 - tf32).abs() < 1e-3);
    let err = evaluate(&params, &data, &PrecisionContext::new(FormatName::Int8), None).unwrap_err();
    assert!(matches!(err, Error::CalibrationRequired(_)));
}
