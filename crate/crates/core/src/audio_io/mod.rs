//! Audio codes, file formats, and the synthetic corpus.

mod checkpoint;
mod clip;
mod dataset;
mod features;
mod mulaw;
mod synth;
mod wav;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint};
pub use clip::{AudioClip, FeatureMatrix, FRAME_HOP, MEL_BANDS};
pub use dataset::{load_dataset, read_manifest, write_dataset};
pub use features::{decode_features, encode_features, read_features, write_features, WNF_MAGIC, WNF_VERSION};
pub use mulaw::{
    compand, expand, mulaw_decode, mulaw_decode_channels, mulaw_encode, mulaw_encode_channels, MULAW_CHANNELS,
};
pub use synth::{pitch_band, synth_dataset, Example, PITCH_RANGE_HZ, SYNTH_SAMPLE_RATE};
pub use wav::{decode_wav, encode_wav, pcm16_to_sample, read_wav, sample_to_pcm16, write_wav};
