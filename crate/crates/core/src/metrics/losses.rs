use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

/// Mean over frames of `−log softmax(logits[:, t])[labels[t]]`.
pub fn cross_entropy_units(logits: &FrameTensor, labels: &[usize]) -> Result<f64> {
    let (units, frames) = (logits.channels(), logits.frames());
    if labels.len() != frames {
        return Err(Error::dim(
            "cross_entropy_units",
            format!("{} labels for {frames} frames", labels.len()),
        ));
    }
    if frames == 0 {
        return Err(Error::Empty("label sequence"));
    }
    logits.ensure_finite("cross_entropy_units")?;
    let mut total = 0.0f64;
    for (t, &label) in labels.iter().enumerate() {
        if label >= units {
            return Err(Error::LabelOutOfRange {
                label,
                frame: t,
                num_units: units,
            });
        }
        let max = (0..units)
            .map(|c| logits.get(c, t) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max
            + (0..units)
                .map(|c| (logits.get(c, t) as f64 - max).exp())
                .sum::<f64>()
                .ln();
        total += lse - logits.get(label, t) as f64;
    }
    Ok(total / frames as f64)
}

/// Mean squared difference of two equal-length tracks.
pub fn mse_track(pred: &[f32], target: &[f32]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::dim(
            "mse_track",
            format!("lengths {} and {}", pred.len(), target.len()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::Empty("track"));
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p as f64 - t as f64;
            d * d
        })
        .sum();
    Ok(sum / pred.len() as f64)
}
