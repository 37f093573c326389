use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavenet_core::audio_io::{
    decode_checkpoint, decode_features, decode_wav, encode_checkpoint, encode_features,
    encode_wav, load_dataset, mulaw_decode, mulaw_encode, mulaw_encode_channels,
    mulaw_decode_channels, read_checkpoint, synth_dataset, write_checkpoint, write_dataset,
    AudioClip, Checkpoint, FeatureMatrix,
};
use wavenet_core::compression::{prune_all_2to4, PruneSchedule, PruneSchedules};
use wavenet_core::model::ModelConfig;
use wavenet_core::numerics::{FormatName, Int8Calibration, IntQuantParams};
use wavenet_core::{Checkpoint32, Error, Parameters32, Parameters64};

#[test]
fn wav_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // samples already on the 16-bit grid survive unchanged
    let samples: Vec<f32> = (0..4000)
        .map(|_| rng.gen_range(-32767i32..=32767) as f32 / 32767.0)
        .collect();
    let clip = AudioClip::new(samples, 16_000);
    let bytes = encode_wav(&clip);
    assert_eq!(bytes.len(), 44 + 2 * 4000);
    let back = decode_wav(&bytes).unwrap();
    assert_eq!(back, clip);
    assert_eq!(encode_wav(&back), bytes);
    assert!(matches!(decode_wav(&bytes[..30]), Err(Error::Format { .. })));
    let mut stereo = bytes.clone();
    stereo[22] = 2;
    assert!(matches!(decode_wav(&stereo), Err(Error::Format { .. })));
}

#[test]
fn features_round_trip_is_bit_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data: Vec<f32> = (0..80 * 13).map(|_| f32::from_bits(rng.gen::<u32>() & 0x3fff_ffff)).collect();
    let fm = FeatureMatrix::new(13, 80, data).unwrap();
    let bytes = encode_features(&fm);
    let back = decode_features(&bytes, 80).unwrap();
    assert!(back.data().iter().zip(fm.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(encode_features(&back), bytes);
    assert!(decode_features(&bytes, 40).is_err());
    assert!(decode_features(&bytes[..bytes.len() - 1], 80).is_err());
}

fn rich_checkpoint() -> Checkpoint32 {
    let config = ModelConfig::desk();
    let mut params = Parameters32::build(&config, 3).unwrap();
    let masks = prune_all_2to4(&mut params).unwrap();
    let mut ck = Checkpoint::new(params, 42);
    ck.masks = masks;
    ck.step = 1234;
    ck.format = FormatName::Int8;
    ck.schedules = Some(PruneSchedules::uniform(PruneSchedule::new(0.75, 0, 8, 10).unwrap()));
    let mut calib = Int8Calibration::default();
    calib.weights.insert("end.weight".into(), IntQuantParams::new(0.1 / 3.0).unwrap());
    calib.sites.insert("end.in".into(), IntQuantParams::new(std::f64::consts::PI / 127.0).unwrap());
    ck.calibration = Some(calib);
    ck.metadata = BTreeMap::from([("note".to_string(), "µ-law 256".to_string())]);
    ck
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let ck = rich_checkpoint();
    let bytes = encode_checkpoint(&ck).unwrap();
    let back: Checkpoint32 = decode_checkpoint(&bytes).unwrap();
    assert_eq!(back, ck);
    for (a, b) in back.params.tensors().iter().zip(ck.params.tensors()) {
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(encode_checkpoint(&back).unwrap(), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    write_checkpoint(&path, &ck).unwrap();
    assert_eq!(read_checkpoint::<f32>(&path).unwrap(), ck);

    let p64 = Parameters64::build(&ModelConfig::tiny(), 9).unwrap();
    let ck64 = Checkpoint::new(p64, 1);
    let back64: Checkpoint<f64> = decode_checkpoint(&encode_checkpoint(&ck64).unwrap()).unwrap();
    assert_eq!(back64, ck64);
}

#[test]
fn checkpoint_corruption_is_detected() {
    let bytes = encode_checkpoint(&rich_checkpoint()).unwrap();
    let mut bad = bytes.clone();
    let n = bad.len();
    bad[n - 1] ^= 0x01; // inside the last mask blob
    assert!(matches!(decode_checkpoint::<f32>(&bad), Err(Error::Checksum(_))));
    let mut bad = bytes.clone();
    bad[n / 2] ^= 0x40;
    assert!(decode_checkpoint::<f32>(&bad).is_err());
    assert!(decode_checkpoint::<f32>(&bytes[..n - 3]).is_err());
    assert!(decode_checkpoint::<f32>(b"not a checkpoint").is_err());
}

#[test]
fn mulaw_codes_round_trip() {
    for c in 0..256 {
        assert_eq!(mulaw_encode(mulaw_decode(c).unwrap()), c);
    }
    for channels in [2usize, 4, 32, 1024] {
        for c in 0..channels {
            assert_eq!(mulaw_encode_channels(mulaw_decode_channels(c, channels).unwrap(), channels), c);
        }
    }
    assert_eq!(mulaw_decode(128).unwrap(), 0.0);
    assert_eq!(mulaw_decode(0).unwrap(), -1.0);
    assert_eq!(mulaw_decode(255).unwrap(), 1.0);
    assert!(matches!(mulaw_decode(256), Err(Error::CodeOutOfRange { .. })));
}

#[test]
fn mulaw_amplitude_error_is_small() {
    let n = 200_001;
    let mut worst = 0.0f64;
    for i in 0..n {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        worst = worst.max((mulaw_decode(mulaw_encode(x)).unwrap() - x).abs());
    }
    assert!(worst < 0.03, "{worst}");
}

#[test]
fn dataset_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let examples = synth_dataset(5, 3, 0.1);
    let manifest = write_dataset(dir.path(), &examples).unwrap();
    let back = load_dataset(&manifest, 80).unwrap();
    assert_eq!(back.len(), 3);
    for (a, b) in back.iter().zip(&examples) {
        assert_eq!(a.features, b.features);
        // audio passes through 16-bit PCM
        for (x, y) in a.audio.samples.iter().zip(&b.audio.samples) {
            assert!((x - y).abs() <= 0.5 / 32767.0 + 1e-7);
        }
    }
    std::fs::write(dir.path().join("bad.txt"), "missing.wav\n").unwrap();
    assert!(matches!(load_dataset(dir.path().join("bad.txt"), 80), Err(Error::Data(_))));
}
