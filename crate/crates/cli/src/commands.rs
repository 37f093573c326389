use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde_json::json;

use wavenet_core::audio_io::{
    load_dataset, read_checkpoint, read_features, synth_dataset, write_checkpoint, write_dataset,
    write_wav, FeatureMatrix,
};
use wavenet_core::compression::{
    compression_ratios, sparsity_for_cr, CompressionReport, MaskScheme, PruneSchedule,
    PruneSchedules,
};
use wavenet_core::kernels::PrecisionContext;
use wavenet_core::model::generate;
use wavenet_core::numerics::{calibrate_int8, FormatKind, FormatName};
use wavenet_core::training::{one_shot_2to4_procedure, Pruning, TrainConfig, Trainer};
use wavenet_core::{Checkpoint32, Parameters32};

use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_path_for, ManifestBuilder};
use crate::tables::{render_ops, render_params, OutputFormat};
use crate::{
    Command, PruneMode, QuantizeArgs, ReportArgs, SynthDataArgs, SynthesizeArgs, TrainArgs,
    VerifyArgs,
};

pub const RUN_MANIFEST: &str = "run_manifest.json";

pub fn dispatch(cmd: &Command, argv: &[String], out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Params(a) => {
            out.write_all(render_params(&a.config.resolve("paper")?, a.format).as_bytes())?;
            Ok(())
        }
        Command::Ops(a) => {
            out.write_all(render_ops(&a.config.resolve("paper")?, a.format).as_bytes())?;
            Ok(())
        }
        Command::Train(a) => cmd_train(a, argv, out),
        Command::Quantize(a) => cmd_quantize(a, argv, out),
        Command::Synthesize(a) => cmd_synthesize(a, argv, out),
        Command::Report(a) => cmd_report(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::SynthData(a) => cmd_synth_data(a, argv, out),
    }
}

/// A manifest path, or a directory containing `manifest.txt`.
fn resolve_manifest(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("manifest.txt")
    } else {
        p.to_path_buf()
    }
}

/// Final sparsity requested by `--prune-cr` / `--sparsity`, if any.
fn target_sparsity(a: &TrainArgs) -> CliResult<Option<f64>> {
    match (a.prune_cr, a.sparsity) {
        (Some(cr), None) => Ok(Some(sparsity_for_cr(cr)?)),
        (None, Some(s)) if (0.0..1.0).contains(&s) => Ok(Some(s)),
        (None, Some(s)) => Err(CliError::config(format!("sparsity must lie in [0, 1), got {s}"))),
        (None, None) => Ok(None),
        (Some(_), Some(_)) => Err(CliError::config("give --prune-cr or --sparsity, not both")),
    }
}

fn summary_line(r: &CompressionReport) -> String {
    format!(
        "format={} sparse_layer_cr={:.2} model_cr={:.2} speedup={:.2} speedup_upsample_sparse={:.2}",
        r.format, r.sparse_layer_cr, r.model_cr, r.speedup_upsample_dense, r.speedup_upsample_sparse
    )
}

fn cmd_train(a: &TrainArgs, argv: &[String], out: &mut dyn Write) -> CliResult<()> {
    let config = a.config.resolve("desk")?;
    let data_path = a
        .data
        .as_deref()
        .map(resolve_manifest)
        .ok_or_else(|| CliError::config(format!("no --data given and {} is unset", crate::DATA_DIR_ENV)))?;
    let cfg = TrainConfig {
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        segment_samples: a.segment_samples,
        steps: a.steps,
        seed: a.seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let sparsity = target_sparsity(a)?;
    if a.prune_mode == PruneMode::TwoFour {
        if let Some(s) = sparsity.filter(|s| (s - 0.5).abs() > 1e-12) {
            return Err(CliError::config(format!(
                "2:4 pruning fixes sparsity at 0.5, but {s} was requested"
            )));
        }
    }
    let data = load_dataset(&data_path, config.mel_bins)?;
    std::fs::create_dir_all(&a.out)?;
    let mut manifest = ManifestBuilder::new("train", argv);
    manifest
        .config(json!({ "model": config, "train": cfg, "prune_mode": format!("{:?}", a.prune_mode),
            "sparsity": sparsity, "prune_frequency": a.prune_frequency }))
        .seed(a.seed)
        .input(&data_path);
    let params = Parameters32::build(&config, a.seed)?;
    let metrics_path = a.out.join("metrics.log");
    let mut log = BufWriter::new(File::create(&metrics_path)?);
    let model_path = a.out.join("model.ckpt");

    let final_ck = match (a.prune_mode, sparsity) {
        (PruneMode::TwoFour, _) => {
            info!("training dense for {} steps, then 2:4 pruning and retraining", a.steps);
            let outcome = one_shot_2to4_procedure(params, &cfg, &data, Some(&mut log))?;
            for (name, ck) in [("dense.ckpt", &outcome.dense), ("oneshot.ckpt", &outcome.pruned)] {
                let p = a.out.join(name);
                write_checkpoint(&p, ck)?;
                manifest.output(p);
            }
            outcome.retrained
        }
        (PruneMode::Iterative, s) => {
            let pruning = match s {
                Some(s) if s > 0.0 => {
                    let sch = PruneSchedule::for_training(s, a.steps, a.prune_frequency)?;
                    info!(
                        "pruning to {s} every {} steps from step {} to {}",
                        sch.frequency,
                        sch.start_step,
                        sch.end_step()
                    );
                    Pruning::Iterative(PruneSchedules::uniform(sch))
                }
                _ => Pruning::Dense,
            };
            let mut tr = Trainer::new(params, cfg.clone(), &data, pruning)?;
            while tr.step_count() < cfg.steps {
                let m = tr.step()?;
                writeln!(log, "{m}")?;
                if a.log_every > 0 && (m.step % a.log_every == 0 || m.step == cfg.steps) {
                    info!("step {} loss {:.4}", m.step, m.loss);
                }
            }
            tr.checkpoint()
        }
    };
    log.flush()?;
    let mut ck = final_ck;
    ck.metadata.insert("command".into(), argv.join(" "));
    write_checkpoint(&model_path, &ck)?;
    manifest.output(&model_path).output(&metrics_path);
    manifest.finish(&a.out.join(RUN_MANIFEST))?;
    let r = compression_ratios(&ck.params, &ck.masks, FormatName::Fp32);
    writeln!(out, "wrote {}", model_path.display())?;
    writeln!(out, "{}", summary_line(&r))?;
    Ok(())
}

fn calibration_features(a: &QuantizeArgs, bands: usize) -> CliResult<Vec<FeatureMatrix>> {
    let mut feats = Vec::new();
    for p in &a.calib {
        feats.push(read_features(p, bands)?);
    }
    if let Some(m) = &a.calib_data {
        feats.extend(load_dataset(resolve_manifest(m), bands)?.into_iter().map(|e| e.features));
    }
    Ok(feats)
}

/// Convert `ck` to `format`. Integer and block formats store pre-quantized
/// weights; floating formats are only tagged and rounded at execution.
pub fn quantize_checkpoint(
    ck: &Checkpoint32,
    format: FormatName,
    calib_features: &[FeatureMatrix],
) -> CliResult<Checkpoint32> {
    let mut out = ck.clone();
    out.format = format;
    out.calibration = None;
    let spec = format.spec();
    if format == FormatName::Int8 {
        if calib_features.is_empty() {
            return Err(wavenet_core::Error::CalibrationRequired(
                "INT8 needs --calib or --calib-data features".into(),
            )
            .into());
        }
        out.calibration = Some(calibrate_int8(&ck.params, calib_features, None)?);
    }
    if spec.kind != FormatKind::Floating {
        let ctx = PrecisionContext::new(format);
        for i in 0..out.params.infos().len() {
            let name = out.params.infos()[i].name.clone();
            let scale = out.calibration.as_ref().and_then(|c| c.weights.get(&name));
            let q = ctx.quantize_param(&out.params.tensors()[i], scale)?;
            out.params.tensors_mut()[i] = q;
        }
    }
    Ok(out)
}

fn cmd_quantize(a: &QuantizeArgs, argv: &[String], out: &mut dyn Write) -> CliResult<()> {
    let ck: Checkpoint32 = read_checkpoint(&a.checkpoint)?;
    if ck.format != FormatName::Fp32 {
        warn!("source checkpoint is already tagged {}", ck.format);
    }
    let feats = calibration_features(a, ck.params.config().mel_bins)?;
    let q = quantize_checkpoint(&ck, a.format, &feats)?;
    write_checkpoint(&a.out, &q)?;
    let mut manifest = ManifestBuilder::new("quantize", argv);
    manifest
        .config(json!({ "model": q.params.config(), "format": a.format }))
        .seed(ck.seed)
        .input(&a.checkpoint)
        .output(&a.out);
    for p in a.calib.iter().chain(&a.calib_data) {
        manifest.input(p);
    }
    manifest.finish(&manifest_path_for(&a.out))?;
    let r = compression_ratios(&q.params, &q.masks, q.format);
    writeln!(out, "wrote {}", a.out.display())?;
    writeln!(out, "{}", summary_line(&r))?;
    Ok(())
}

fn cmd_synthesize(a: &SynthesizeArgs, argv: &[String], out: &mut dyn Write) -> CliResult<()> {
    let ck: Checkpoint32 = read_checkpoint(&a.checkpoint)?;
    let fm = read_features(&a.features, ck.params.config().mel_bins)?;
    let feats = fm.to_tensor::<f32>();
    let format = a.format.unwrap_or(ck.format);
    let g = generate(&ck.params, &feats, a.seed, &PrecisionContext::new(format), ck.calibration.as_ref())?;
    write_wav(&a.out, &g.audio)?;
    writeln!(out, "wrote {} ({} samples, {format})", a.out.display(), g.audio.len())?;
    if let Some(other) = a.compare {
        let h = generate(&ck.params, &feats, a.seed, &PrecisionContext::new(other), ck.calibration.as_ref())?;
        match g.codes.iter().zip(&h.codes).position(|(x, y)| x != y) {
            Some(i) => writeln!(out, "first divergence between {format} and {other} at sample {i}")?,
            None => writeln!(out, "no divergence between {format} and {other}")?,
        }
    }
    let mut manifest = ManifestBuilder::new("synthesize", argv);
    manifest
        .config(json!({ "model": ck.params.config(), "format": format, "compare": a.compare }))
        .seed(a.seed)
        .input(&a.checkpoint)
        .input(&a.features)
        .output(&a.out);
    manifest.finish(&manifest_path_for(&a.out))?;
    Ok(())
}

pub fn render_report(r: &CompressionReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serde_json::to_string_pretty(r).expect("plain values") + "\n",
        OutputFormat::Table | OutputFormat::Tsv => {
            let mut s = String::new();
            let sep = if format == OutputFormat::Tsv { "\t" } else { "  " };
            s += &format!("format{sep}{}\n", r.format);
            s += &format!("sparse_layer_cr{sep}{:.4}\n", r.sparse_layer_cr);
            s += &format!("model_cr{sep}{:.4}\n", r.model_cr);
            s += &format!("speedup_upsample_dense{sep}{:.4}\n", r.speedup_upsample_dense);
            s += &format!("speedup_upsample_sparse{sep}{:.4}\n", r.speedup_upsample_sparse);
            s += &format!("pruned_sparsity{sep}{:.6}\n", r.pruned_sparsity());
            s += "\n";
            s += &format!("tensor{sep}numel{sep}kept{sep}sparsity\n");
            for l in &r.layers {
                let mark = if l.pruned { "" } else { " (dense)" };
                s += &format!("{}{mark}{sep}{}{sep}{}{sep}{:.6}\n", l.name, l.numel, l.kept, l.sparsity());
            }
            s
        }
    }
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> CliResult<()> {
    let ck: Checkpoint32 = read_checkpoint(&a.checkpoint)?;
    let r = compression_ratios(&ck.params, &ck.masks, ck.format);
    out.write_all(render_report(&r, a.format).as_bytes())?;
    Ok(())
}

/// Invariant failures of a decoded checkpoint, one message each.
pub fn checkpoint_violations(ck: &Checkpoint32) -> Vec<String> {
    let mut bad = Vec::new();
    for (info, t) in ck.params.iter() {
        if t.data().iter().any(|x| !x.is_finite()) {
            bad.push(format!("{}: non-finite values", info.name));
        }
    }
    for m in ck.masks.iter() {
        let Some(i) = ck.params.position(m.owner()) else {
            bad.push(format!("mask for unknown tensor `{}`", m.owner()));
            continue;
        };
        let t = &ck.params.tensors()[i];
        let nonzero = t.data().iter().zip(m.bits()).filter(|(x, &k)| !k && **x != 0.0).count();
        if nonzero > 0 {
            bad.push(format!("{}: {nonzero} masked weights are not zero", m.owner()));
        }
        if m.scheme() == MaskScheme::Balanced2of4 {
            for v in m.group_violations() {
                bad.push(format!(
                    "{}: row {} group {} keeps {} (expected {})",
                    m.owner(),
                    v.row,
                    v.group,
                    v.kept,
                    v.expected
                ));
            }
        }
        if m.scheme() == MaskScheme::Unstructured {
            let kind = ck.params.infos()[i].kind;
            if let Some(sch) = ck.schedules.as_ref().and_then(|s| s.get(kind)) {
                if ck.step >= sch.end_step() {
                    let want = m.numel() - wavenet_core::compression::dropped_count(m.numel(), sch.final_sparsity);
                    if m.popcount() != want {
                        bad.push(format!("{}: keeps {} entries, schedule target {want}", m.owner(), m.popcount()));
                    }
                }
            }
        }
    }
    if ck.format == FormatName::Int8 && ck.calibration.is_none() {
        bad.push("INT8 checkpoint without calibration scales".into());
    }
    bad
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let bytes = std::fs::read(&a.checkpoint)?;
    let ck: Checkpoint32 = match wavenet_core::audio_io::decode_checkpoint(&bytes) {
        Ok(ck) => ck,
        Err(e) => {
            writeln!(out, "FAIL container: {e}")?;
            return Err(CliError::check(format!("{} failed verification", a.checkpoint.display())));
        }
    };
    writeln!(out, "PASS container and checksums")?;
    let bad = checkpoint_violations(&ck);
    for b in &bad {
        writeln!(out, "FAIL {b}")?;
    }
    if bad.is_empty() {
        writeln!(out, "PASS {} masks, {} tensors", ck.masks.len(), ck.params.infos().len())?;
        Ok(())
    } else {
        Err(CliError::check(format!("{} invariant failures", bad.len())))
    }
}

fn cmd_synth_data(a: &SynthDataArgs, argv: &[String], out: &mut dyn Write) -> CliResult<()> {
    if a.clips == 0 || !(a.duration > 0.0) {
        return Err(CliError::config("need at least one clip of positive duration"));
    }
    let examples = synth_dataset(a.seed, a.clips, a.duration);
    if examples.iter().any(|e| e.audio.is_empty()) {
        return Err(CliError::config("clip duration is shorter than one feature frame"));
    }
    let manifest_path = write_dataset(&a.out, &examples)?;
    let mut manifest = ManifestBuilder::new("synth-data", argv);
    manifest
        .config(json!({ "clips": a.clips, "duration": a.duration }))
        .seed(a.seed)
        .output(&manifest_path);
    manifest.finish(&a.out.join(RUN_MANIFEST))?;
    writeln!(out, "wrote {}", manifest_path.display())?;
    Ok(())
}
