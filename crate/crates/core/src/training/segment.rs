use rand::Rng;

use crate::audio_io::{mulaw_encode_channels, Example, FeatureMatrix, FRAME_HOP};
use crate::error::{Error, Result};

/// A training window: `segment / hop` feature frames and one code per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub features: FeatureMatrix,
    pub codes: Vec<usize>,
}

/// Cut a frame-aligned window of `segment_samples` from `ex`, starting at a
/// uniformly drawn frame. Clips shorter than the window are right-padded
/// with silence (and zero feature frames).
pub fn sample_segment<R: Rng + ?Sized>(
    ex: &Example,
    rng: &mut R,
    segment_samples: usize,
    channels: usize,
) -> Result<Segment> {
    if segment_samples == 0 || !segment_samples.is_multiple_of(FRAME_HOP) {
        return Err(Error::Config(format!(
            "segment length {segment_samples} must be a positive multiple of {FRAME_HOP}"
        )));
    }
    if ex.audio.is_empty() {
        return Err(Error::Data("empty clip".into()));
    }
    let seg_frames = segment_samples / FRAME_HOP;
    let frames = ex.features.frames();
    let start_frame = if frames > seg_frames {
        rng.gen_range(0..=frames - seg_frames)
    } else {
        0
    };
    let start = start_frame * FRAME_HOP;
    let bands = ex.features.bands();
    let mut data = vec![0f32; seg_frames * bands];
    let avail = frames.saturating_sub(start_frame).min(seg_frames);
    data[..avail * bands].copy_from_slice(ex.features.slice(start_frame, start_frame + avail).data());
    let silence = mulaw_encode_channels(0.0, channels);
    let codes = (0..segment_samples)
        .map(|i| {
            ex.audio
                .samples
                .get(start + i)
                .map_or(silence, |&s| mulaw_encode_channels(s as f64, channels))
        })
        .collect();
    Ok(Segment {
        start,
        features: FeatureMatrix::new(seg_frames, bands, data)?,
        codes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::synth_dataset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn short_clip_padded_with_silence() {
        let ex = &synth_dataset(1, 1, 0.05)[0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_segment(ex, &mut rng, 16_000, 256).unwrap();
        assert_eq!(s.start, 0);
        assert_eq!(s.codes.len(), 16_000);
        assert!(s.codes[800..].iter().all(|&c| c == 128));
        assert_eq!(s.features.frames(), 80);
    }

    #[test]
    fn aligned_starts() {
        let ex = &synth_dataset(1, 1, 2.0)[0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = sample_segment(ex, &mut rng, 4000, 256).unwrap();
            assert_eq!(s.start % 200, 0);
            assert!(s.start + 4000 <= ex.audio.len());
        }
        assert!(sample_segment(ex, &mut rng, 300, 256).is_err());
    }
}
