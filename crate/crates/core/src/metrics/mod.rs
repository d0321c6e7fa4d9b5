//! Evaluation metrics and forward-only training losses.

pub mod eer;
pub mod losses;
pub mod mel;
pub mod stft;

pub use crate::embedding::cosine_similarity_score;
pub use eer::{compute_eer, parse_scores, read_scores, ScoreSet};
pub use losses::{cross_entropy_units, mse_track};
pub use mel::{log_mel_spectrogram, mel_filterbank, mel_l1, mel_l1_with, MelConfig};
pub use stft::{
    multires_stft_loss, multires_stft_loss_with, stft_magnitude, StftResolution, DEFAULT_RESOLUTIONS,
};
