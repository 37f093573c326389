//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use half::{bf16, f16};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use wavenet_cli::commands::checkpoint_violations;
use wavenet_cli::tables::{render_ops, render_params, OutputFormat};
use wavenet_core::audio_io::{
    decode_checkpoint, decode_features, decode_wav, encode_checkpoint, encode_features, encode_wav,
    mulaw_decode, mulaw_encode, synth_dataset, AudioClip, Checkpoint, FeatureMatrix,
};
use wavenet_core::compression::{
    nominal_report, prune_all_2to4, schedule_sparsity, sparsity_for_cr, NominalPruning, PruneSchedule,
    PruneSchedules, SpeedupConvention,
};
use wavenet_core::kernels::PrecisionContext;
use wavenet_core::model::{forward_teacher_forced, forward_with_cache, loss_and_grad, Generator, ModelConfig, PreparedModel};
use wavenet_core::numerics::{bits_per_value, quantize_block, quantize_int8_value, round_float, FormatName};
use wavenet_core::training::{cross_entropy, evaluate, train, Pruning, TrainConfig, Trainer};
use wavenet_core::{Checkpoint32, Error, Parameters32, Parameters64, Tensor};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if $cond {
        } else {
            return Err(format!($($fmt)*));
        }
    };
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("C1  parameter and GOP/s table", c1_tables, Duration::from_secs(1)),
        ("C2  quantization CRs", c2_format_crs, Duration::from_secs(1)),
        ("C3  sparse model CRs", c3_model_crs, Duration::from_secs(60)),
        ("C4  theoretical speedups", c4_speedups, Duration::from_secs(60)),
        ("C5  combined sparsity x format CRs", c5_combined, Duration::from_secs(60)),
        ("C6  format oracles and quantizer properties", c6_formats, Duration::from_secs(60)),
        ("C7  generation, causality, receptive field", c7_model, Duration::from_secs(120)),
        ("C8  end-to-end gradient check", c8_gradients, Duration::from_secs(120)),
        ("C9  iterative pruning run", c9_pruning, Duration::from_secs(600)),
        ("C10 precision robustness", c10_precision, Duration::from_secs(300)),
        ("C11 I/O exactness", c11_io, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        let took = start.elapsed();
        let result = match result {
            Ok(detail) if took > budget => Err(format!("{detail}; over the {budget:?} budget")),
            r => r,
        };
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{:.2}s]", took.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{:.2}s]", took.as_secs_f64());
            }
        }
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn c1_tables() -> Outcome {
    let c = ModelConfig::paper();
    let params: Value = serde_json::from_str(&render_params(&c, OutputFormat::Json)).map_err(|e| e.to_string())?;
    let ops: Value = serde_json::from_str(&render_ops(&c, OutputFormat::Json)).map_err(|e| e.to_string())?;
    let want_params = [30_720u64, 5_120_080, 57_840, 19_440, 14_520, 29_040, 61_440, 65_536];
    let got: Vec<u64> = params["rows"]
        .as_array()
        .ok_or("no rows")?
        .iter()
        .map(|r| r["params_per_layer"].as_u64().unwrap_or(0))
        .collect();
    ensure!(got == want_params, "per-layer params {got:?}");
    ensure!(params["total_params"] == 7_196_696, "total {}", params["total_params"]);

    // the embedding row has no op count
    let want_gops = [0.82, 1.84, 0.61, 0.46, 0.92, 1.96, 2.09];
    let got: Vec<f64> = ops["rows"]
        .as_array()
        .ok_or("no rows")?
        .iter()
        .filter_map(|r| r["gops_per_layer"].as_f64())
        .collect();
    ensure!(got.len() == want_gops.len(), "gop rows {got:?}");
    for (g, w) in got.iter().zip(want_gops) {
        ensure!((g - w).abs() <= 0.005, "GOP/s {g} vs {w}");
    }
    let total = ops["total_gops"].as_f64().ok_or("no total")?;
    ensure!((total - 65.85).abs() <= 0.005, "total GOP/s {total}");
    Ok(format!("7,196,696 params, {total:.4} GOP/s"))
}

fn c2_format_crs() -> Outcome {
    let c = ModelConfig::paper();
    let want = [1.00, 1.68, 2.00, 3.61, 2.00, 2.00, 4.00];
    let mut shown = Vec::new();
    for (f, w) in FormatName::ALL.into_iter().zip(want) {
        let cr = nominal_report(&c, NominalPruning::Dense, f).model_cr;
        if f == FormatName::Bfp16 {
            ensure!((3.55..=3.64).contains(&cr), "BFP16 CR {cr}");
        } else {
            ensure!((cr - w).abs() <= 0.03, "{f} CR {cr} vs {w}");
        }
        shown.push(format!("{f}={cr:.3}"));
    }
    Ok(shown.join(" "))
}

fn c3_model_crs() -> Outcome {
    let c = ModelConfig::paper();
    let want = [1.97, 3.83, 7.23, 13.02, 21.73];
    let mut shown = Vec::new();
    for (cr, w) in [2.0, 4.0, 8.0, 16.0, 32.0].into_iter().zip(want) {
        let r = nominal_report(&c, NominalPruning::Unstructured(sparsity_for_cr(cr).unwrap()), FormatName::Fp32);
        ensure!((r.model_cr - w).abs() / w <= 0.03, "sparse CR {cr}: model CR {} vs {w}", r.model_cr);
        shown.push(format!("{:.2}({:+.1}%)", r.model_cr, 100.0 * (r.model_cr / w - 1.0)));
    }
    let b = nominal_report(&c, NominalPruning::Balanced2of4, FormatName::Fp32).model_cr;
    ensure!((b - 1.97).abs() <= 0.01, "2:4 model CR {b}");
    Ok(format!("{} 2:4={b:.3}", shown.join(" ")))
}

fn c4_speedups() -> Outcome {
    let c = ModelConfig::paper();
    let want = [1.91, 3.51, 6.03, 9.41, 12.95];
    let mut shown = Vec::new();
    for (cr, w) in [2.0, 4.0, 8.0, 16.0, 32.0].into_iter().zip(want) {
        let r = nominal_report(&c, NominalPruning::Unstructured(sparsity_for_cr(cr).unwrap()), FormatName::Fp32);
        let s = r.speedup(SpeedupConvention::UpsampleDense);
        ensure!((s - w).abs() / w <= 0.05, "sparse CR {cr}: speedup {s} vs {w}");
        shown.push(format!("{s:.2}"));
    }
    Ok(shown.join(" "))
}

fn c5_combined() -> Outcome {
    let c = ModelConfig::paper();
    let cr4 = NominalPruning::Unstructured(sparsity_for_cr(4.0).unwrap());
    let published = [
        (FormatName::Tf32, 6.44, 3.32),
        (FormatName::Bf16, 7.65, 3.94),
        (FormatName::Bfp16, 13.84, 7.13),
        (FormatName::Fp16_16, 7.65, 3.94),
        (FormatName::Fp16_32, 7.65, 3.94),
        (FormatName::Int8, 15.30, 7.88),
    ];
    let mut errors = Vec::new();
    let mut shown = Vec::new();
    for (f, want_cr4, want_24) in published {
        // nominal width: whole blocks for BFP16
        let bpv = bits_per_value(&f.spec(), &[10]);
        let width = *bpv.numer() as f64 / *bpv.denom() as f64;
        for (pruning, want, label) in [(cr4, want_cr4, "CR4"), (NominalPruning::Balanced2of4, want_24, "2:4")] {
            let fp32 = nominal_report(&c, pruning, FormatName::Fp32).model_cr;
            let got = nominal_report(&c, pruning, f).model_cr;
            let product = fp32 * 32.0 / width;
            if (got / product - 1.0).abs() > 0.01 {
                errors.push(format!("{f} {label}: {got:.3} vs product {product:.3}"));
            }
            if (got - want).abs() > 0.05 {
                errors.push(format!("{f} {label}: {got:.3} vs published {want}"));
            }
            shown.push(format!("{f}/{label}={got:.2}"));
        }
    }
    ensure!(errors.is_empty(), "{}", errors.join("; "));
    Ok(shown.join(" "))
}

fn same(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits()
}

fn c6_formats() -> Outcome {
    const TAILS: [u32; 6] = [0x0000, 0x0001, 0x7fff, 0x8000, 0x8001, 0xffff];
    let mut mismatches = 0usize;
    let mut swept = 0usize;
    for hi in 0u32..=0xffff {
        for &lo in &TAILS {
            let x = f32::from_bits(hi << 16 | lo);
            mismatches += !same(round_float(x as f64, 8, 7), bf16::from_f32(x).to_f64()) as usize;
            mismatches += !same(round_float(x as f64, 5, 10), f16::from_f64(x as f64).to_f64()) as usize;
            swept += 2;
        }
    }
    for bits in 0u16..=0xffff {
        let v = f16::from_bits(bits);
        if !v.is_finite() {
            continue;
        }
        let a = v.to_f64().abs();
        let up = f16::from_bits((bits & 0x7fff) + 1).to_f64();
        let ulp = if up.is_finite() { up - a } else { 32.0 };
        for k in 0..4 {
            let x = (a + ulp * k as f64 / 4.0).copysign(v.to_f64());
            mismatches += !same(round_float(x, 5, 10), f16::from_f64(x).to_f64()) as usize;
            swept += 1;
        }
    }
    ensure!(mismatches == 0, "{mismatches} mismatches against the soft-float reference");

    let quantized = |b: &[f64]| {
        let mut q = b.to_vec();
        quantize_block(&mut q);
        q
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases = 100_000;
    for _ in 0..cases {
        let len = rng.gen_range(1..=10);
        let scale = 2f64.powi(rng.gen_range(-40..40));
        let block: Vec<f64> = (0..len)
            .map(|_| match rng.gen_range(0..8) {
                0 => 0.0,
                1 => scale * 2f64.powi(-rng.gen_range(0..20)),
                _ => rng.gen_range(-1.0..1.0) * scale,
            })
            .collect();
        let q = quantized(&block);
        let neg: Vec<f64> = block.iter().map(|x| -x).collect();
        ensure!(quantized(&neg).iter().zip(&q).all(|(a, b)| *a == -*b), "BFP sign symmetry {block:?}");
        ensure!(quantized(&q) == q, "BFP idempotence {block:?}");
        ensure!(block.iter().zip(&q).all(|(x, y)| *x != 0.0 || *y == 0.0), "BFP zero {block:?}");
        for i in 0..len {
            for j in 0..len {
                ensure!(block[i] > block[j] || q[i] <= q[j], "BFP monotonicity {block:?}");
            }
        }
    }
    for _ in 0..cases {
        let scale = rng.gen_range(1e-4..1.0);
        let r = 200.0 * scale;
        let (x, y): (f64, f64) = (rng.gen_range(-r..r), rng.gen_range(-r..r));
        let q = |v: f64| quantize_int8_value(v, scale);
        ensure!(q(-x) == -q(x), "INT8 sign symmetry {x} {scale}");
        ensure!(q(0.0) == 0 && q(-0.0) == 0, "INT8 zero");
        ensure!(q(q(x) as f64 * scale) == q(x), "INT8 idempotence {x} {scale}");
        ensure!(x > y || q(x) <= q(y), "INT8 monotonicity {x} {y} {scale}");
    }
    Ok(format!("{swept} sweep points, 0 mismatches; {cases} BFP16 + {cases} INT8 property cases"))
}

fn features<T: wavenet_core::Scalar>(frames: usize, seed: u64) -> Tensor<T> {
    synth_dataset(seed, 1, frames as f64 * 200.0 / 16_000.0)[0].features.to_tensor()
}

fn random_codes(n: usize, channels: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..channels)).collect()
}

/// Output columns whose logits change when the code at `at` is altered.
fn influenced_columns(c: &ModelConfig, at: usize, len: usize) -> Vec<usize> {
    let p = Parameters32::build(c, 21).unwrap();
    let feats = features::<f32>(len / 200, 2);
    let codes = random_codes(len, c.audio_channels, 8);
    let mut bumped = codes.clone();
    bumped[at] = (codes[at] + c.audio_channels / 2) % c.audio_channels;
    let ctx = PrecisionContext::native();
    let a = forward_teacher_forced(&p, &feats, &codes, &ctx, None).unwrap();
    let b = forward_teacher_forced(&p, &feats, &bumped, &ctx, None).unwrap();
    (0..a.dim(1)).filter(|&t| a.column(t) != b.column(t)).collect()
}

fn c7_model() -> Outcome {
    let c = ModelConfig::desk();
    let p = Parameters32::build(&c, 11).unwrap();
    let feats = features::<f32>(1, 3);
    let model = PreparedModel::new(&p, &PrecisionContext::default(), None).map_err(|e| e.to_string())?;
    let mut gen = Generator::new(&model, &feats, 5).map_err(|e| e.to_string())?;
    let (mut codes, mut fast) = (Vec::new(), Vec::new());
    for _ in 0..50 {
        let (code, logits) = gen.step().map_err(|e| e.to_string())?.ok_or("generator ended early")?;
        codes.push(code);
        fast.push(logits);
    }
    let mut padded = codes.clone();
    padded.resize(200, c.silence_code());
    let naive = model.forward(&feats, &padded).map_err(|e| e.to_string())?;
    let mut worst = 0f32;
    for (t, col) in fast.iter().enumerate() {
        for (a, &v) in col.iter().enumerate() {
            worst = worst.max((v - naive.data()[a * 200 + t]).abs());
        }
    }
    ensure!(worst <= 1e-5, "fast vs naive logits differ by {worst:e}");

    let changed = influenced_columns(&c, 300, 800);
    ensure!(
        changed.first() == Some(&301) && changed.last() == Some(&(300 + c.receptive_field())),
        "desk influence span {:?}..{:?}",
        changed.first(),
        changed.last()
    );
    let changed = influenced_columns(&ModelConfig::paper(), 100, 800);
    let span = changed.last().unwrap() - changed.first().unwrap() + 1;
    ensure!(span == 511 && changed.len() == 511, "paper receptive field {span}");
    Ok(format!("max logit diff {worst:.1e} over 50 steps; causal; receptive field {span}"))
}

fn c8_gradients() -> Outcome {
    let c = ModelConfig::tiny();
    let mut p = Parameters64::build(&c, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (i, t) in p.tensors_mut().iter_mut().enumerate() {
        if t.shape().len() == 1 {
            t.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1) * (i % 3) as f64);
        }
    }
    let feats = features::<f64>(2, 4);
    let codes = random_codes(400, c.audio_channels, 6);
    let (_, grads) = loss_and_grad(&p, &feats, &codes).map_err(|e| e.to_string())?;
    let eval = |p: &Parameters64| {
        let (l, cache) = forward_with_cache(p, &feats, &codes).unwrap();
        let signs: Vec<bool> = cache.skip_sum.data().iter().chain(cache.out_pre.data()).map(|&v| v > 0.0).collect();
        (cross_entropy(&l, &codes).unwrap(), signs)
    };
    let (_, base) = eval(&p);
    let n = p.tensors().len();
    let probes = 120;
    let mut worst = 0f64;
    for probe in 0..probes {
        let ti = probe % n;
        let j = rng.gen_range(0..p.tensors()[ti].numel());
        let orig = p.tensors()[ti].data()[j];
        // shrink the step while it straddles a ReLU kink
        let mut h = 1e-3;
        let numeric = loop {
            p.tensors_mut()[ti].data_mut()[j] = orig + h;
            let (up, su) = eval(&p);
            p.tensors_mut()[ti].data_mut()[j] = orig - h;
            let (down, sd) = eval(&p);
            p.tensors_mut()[ti].data_mut()[j] = orig;
            if (su == base && sd == base) || h < 1e-7 {
                break (up - down) / (2.0 * h);
            }
            h /= 4.0;
        };
        let analytic = grads.tensors()[ti].data()[j];
        let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-7);
        worst = worst.max(rel);
        ensure!(rel < 1e-3, "{}[{j}]: analytic {analytic:e} numeric {numeric:e}", p.infos()[ti].name);
    }
    Ok(format!("{probes} probes, worst relative error {worst:.1e}"))
}

fn c9_pruning() -> Outcome {
    let c = ModelConfig::desk();
    let data = synth_dataset(31, 4, 0.5);
    let steps = 1000;
    let sch = PruneSchedule::for_training(0.75, steps, 10).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        batch_size: 2,
        segment_samples: 400,
        steps,
        seed: 9,
        ..TrainConfig::default()
    };
    let params = Parameters32::build(&c, 9).unwrap();
    let run = train(params, &cfg, &data, Pruning::Iterative(PruneSchedules::uniform(sch)), None)
        .map_err(|e| e.to_string())?;

    let want_events: Vec<usize> = (10..=steps).step_by(10).collect();
    let got_events: Vec<usize> = run.events.iter().map(|e| e.step).collect();
    ensure!(got_events == want_events, "events at {:?}..", &got_events[..got_events.len().min(5)]);
    for ev in &run.events {
        let s = schedule_sparsity(ev.step, &sch);
        let (mut dropped, mut total) = (0usize, 0usize);
        for t in &ev.tensors {
            let want_kept = t.numel - (s * t.numel as f64).round() as usize;
            ensure!(t.target == s, "step {}: {} target {} vs {s}", ev.step, t.name, t.target);
            ensure!(t.kept == want_kept, "step {}: {} keeps {} vs {want_kept}", ev.step, t.name, t.kept);
            dropped += t.numel - t.kept;
            total += t.numel;
        }
        // the logged trace: achieved sparsity over all pruned weights
        let m = &run.metrics[ev.step - 1];
        let zeros: f64 = m
            .sparsity
            .values()
            .zip(kind_sizes(&c, &m.sparsity))
            .map(|(sp, n)| sp * n as f64)
            .sum();
        let logged = zeros / total as f64;
        let expected = dropped as f64 / total as f64;
        ensure!((logged - expected).abs() < 1e-9, "step {}: trace {logged} vs {expected}", ev.step);
        ensure!((logged - s).abs() <= 1e-4, "step {}: trace {logged} vs schedule {s}", ev.step);
    }

    let ck: Checkpoint32 = decode_checkpoint(&encode_checkpoint(&run.checkpoint).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut masked = 0usize;
    for m in ck.masks.iter() {
        let t = ck.params.get(m.owner()).ok_or("mask owner missing")?;
        let want = m.numel() - (0.75 * m.numel() as f64).round() as usize;
        ensure!(m.popcount() == want, "{} final popcount {} vs {want}", m.owner(), m.popcount());
        for (x, &k) in t.data().iter().zip(m.bits()) {
            ensure!(k || x.to_bits() == 0, "{}: masked weight {x}", m.owner());
            masked += !k as usize;
        }
    }
    let bad = checkpoint_violations(&ck);
    ensure!(bad.is_empty(), "verify: {}", bad.join("; "));

    // one-shot 2:4 on the trained weights, then retrain with masks fixed
    let mut p = run.checkpoint.params.clone();
    let masks = prune_all_2to4(&mut p).map_err(|e| e.to_string())?;
    let short = TrainConfig { steps: 20, ..cfg.clone() };
    let retrained = train(p, &short, &data, Pruning::Fixed(masks.clone()), None).map_err(|e| e.to_string())?;
    let ck24: Checkpoint32 = decode_checkpoint(&encode_checkpoint(&retrained.checkpoint).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure!(ck24.masks == masks, "2:4 masks changed during retraining");
    let groups: usize = ck24.masks.iter().map(|m| m.numel() / 4).sum();
    for m in ck24.masks.iter() {
        ensure!(m.group_violations().is_empty(), "{}: 2:4 violation", m.owner());
    }
    let bad = checkpoint_violations(&ck24);
    ensure!(bad.is_empty(), "2:4 verify: {}", bad.join("; "));
    Ok(format!(
        "{} events exact, {masked} masked weights zero, {groups} aligned 2:4 groups verified",
        run.events.len()
    ))
}

/// Pruned-weight counts per layer kind, in the key order of `sparsity`.
fn kind_sizes(c: &ModelConfig, sparsity: &std::collections::BTreeMap<String, f64>) -> Vec<usize> {
    let infos = wavenet_core::model::layout(c);
    sparsity
        .keys()
        .map(|k| {
            infos
                .iter()
                .filter(|i| i.is_pruned() && format!("{:?}", i.kind).to_lowercase() == *k)
                .map(|i| i.numel())
                .sum()
        })
        .collect()
}

fn c10_precision() -> Outcome {
    let c = ModelConfig::desk();
    let clip = synth_dataset(77, 1, 0.25);
    let cfg = TrainConfig {
        learning_rate: 3e-3,
        batch_size: 2,
        segment_samples: 1000,
        steps: 250,
        seed: 3,
        ..TrainConfig::default()
    };
    let params = Parameters32::build(&c, 3).unwrap();
    let start_ce = evaluate(&params, &clip, &PrecisionContext::native(), None).map_err(|e| e.to_string())?;
    let mut trainer = Trainer::new(params, cfg, &clip, Pruning::Dense).map_err(|e| e.to_string())?;
    trainer.run(None).map_err(|e| e.to_string())?;
    let p = trainer.params();
    let ce = |f: FormatName| evaluate(p, &clip, &PrecisionContext::new(f), None).map_err(|e| e.to_string());
    let fp32 = ce(FormatName::Fp32)?;
    ensure!(fp32 < start_ce - 1.0, "model did not overfit: CE {start_ce:.3} -> {fp32:.3}");
    let tf32 = (ce(FormatName::Tf32)? - fp32).abs();
    let bf16 = (ce(FormatName::Bf16)? - fp32).abs();
    let fp16 = (ce(FormatName::Fp16_32)? - fp32).abs();
    ensure!(tf32 < 1e-3, "TF32 CE differs by {tf32:e}");
    ensure!(bf16 < 5e-2, "bfloat16 CE differs by {bf16:e}");
    ensure!(fp16 < 5e-2, "FP16.32 CE differs by {fp16:e}");
    match ce(FormatName::Int8) {
        Err(_) => {}
        Ok(v) => return Err(format!("INT8 without calibration evaluated to {v}")),
    }
    ensure!(
        matches!(
            evaluate(p, &clip, &PrecisionContext::new(FormatName::Int8), None),
            Err(Error::CalibrationRequired(_))
        ),
        "INT8 error kind"
    );
    Ok(format!(
        "FP32 CE {start_ce:.3} -> {fp32:.4}; |dCE| TF32 {tf32:.1e}, bf16 {bf16:.1e}, FP16.32 {fp16:.1e}; INT8 refused"
    ))
}

fn c11_io() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<f32> = (0..4000).map(|_| rng.gen_range(-32767i32..=32767) as f32 / 32767.0).collect();
    let clip = AudioClip::new(samples, 16_000);
    let bytes = encode_wav(&clip);
    let back = decode_wav(&bytes).map_err(|e| e.to_string())?;
    ensure!(back == clip && encode_wav(&back) == bytes, "WAV round trip");

    let data: Vec<f32> = (0..80 * 13).map(|_| f32::from_bits(rng.gen::<u32>() & 0x3fff_ffff)).collect();
    let fm = FeatureMatrix::new(13, 80, data).unwrap();
    let bytes = encode_features(&fm);
    let back = decode_features(&bytes, 80).map_err(|e| e.to_string())?;
    ensure!(
        back.data().iter().zip(fm.data()).all(|(a, b)| a.to_bits() == b.to_bits()) && encode_features(&back) == bytes,
        "WNF1 round trip"
    );

    let mut params = Parameters32::build(&ModelConfig::desk(), 3).unwrap();
    let masks = prune_all_2to4(&mut params).map_err(|e| e.to_string())?;
    let mut ck = Checkpoint::new(params, 42);
    ck.masks = masks;
    ck.step = 77;
    ck.format = FormatName::Bfp16;
    let bytes = encode_checkpoint(&ck).map_err(|e| e.to_string())?;
    let back: Checkpoint32 = decode_checkpoint(&bytes).map_err(|e| e.to_string())?;
    ensure!(back == ck, "checkpoint fields differ after round trip");
    for (a, b) in back.params.tensors().iter().zip(ck.params.tensors()) {
        ensure!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()), "checkpoint bits");
    }
    ensure!(encode_checkpoint(&back).map_err(|e| e.to_string())? == bytes, "checkpoint re-encode");

    for code in 0..256 {
        let x = mulaw_decode(code).map_err(|e| e.to_string())?;
        ensure!(mulaw_encode(x) == code, "µ-law code {code}");
    }
    let n = 200_001;
    let mut worst = 0f64;
    for i in 0..n {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        worst = worst.max((mulaw_decode(mulaw_encode(x)).unwrap() - x).abs());
    }
    ensure!(worst < 0.03, "µ-law amplitude error {worst}");
    Ok(format!("bit-exact WAV/WNF1/checkpoint; 256 codes; worst amplitude error {worst:.4}"))
}
