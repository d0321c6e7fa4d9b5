use std::path::Path;

use crate::error::{Error, Result};

/// Verification trial scores; higher means "same speaker".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl ScoreSet {
    pub fn new(genuine: Vec<f64>, impostor: Vec<f64>) -> Self {
        Self { genuine, impostor }
    }
}

/// Equal error rate and the threshold where it occurs.
///
/// Candidate thresholds are the midpoints between consecutive distinct
/// scores plus one point below and one above every score. FAR counts
/// impostor scores above the threshold, FRR genuine scores below it. The
/// result interpolates linearly between the two candidates bracketing the
/// FAR = FRR crossing.
pub fn compute_eer(scores: &ScoreSet) -> Result<(f64, f64)> {
    if scores.genuine.is_empty() {
        return Err(Error::Empty("genuine scores"));
    }
    if scores.impostor.is_empty() {
        return Err(Error::Empty("impostor scores"));
    }
    if scores
        .genuine
        .iter()
        .chain(&scores.impostor)
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite {
            layer: "compute_eer".into(),
        });
    }
    let mut gen = scores.genuine.clone();
    let mut imp = scores.impostor.clone();
    gen.sort_by(f64::total_cmp);
    imp.sort_by(f64::total_cmp);
    let mut all: Vec<f64> = gen.iter().chain(&imp).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();

    let (ng, ni) = (gen.len() as f64, imp.len() as f64);
    let mut thresholds = Vec::with_capacity(all.len() + 1);
    thresholds.push(all[0] - 1.0);
    thresholds.extend(all.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    thresholds.push(all[all.len() - 1] + 1.0);

    // Thresholds never equal a score, so counts come from one merge pass.
    let (mut gi, mut ii) = (0usize, 0usize);
    let mut prev: Option<(f64, f64, f64)> = None;
    for &th in &thresholds {
        while gi < gen.len() && gen[gi] < th {
            gi += 1;
        }
        while ii < imp.len() && imp[ii] < th {
            ii += 1;
        }
        let far = (imp.len() - ii) as f64 / ni;
        let frr = gi as f64 / ng;
        let d = far - frr;
        if d <= 0.0 {
            return Ok(match prev {
                Some((pth, pfar, pd)) if d < 0.0 => {
                    let alpha = pd / (pd - d);
                    (pfar + alpha * (far - pfar), pth + alpha * (th - pth))
                }
                _ => (far, th),
            });
        }
        prev = Some((th, far, d));
    }
    unreachable!("FAR - FRR is -1 above every score")
}

/// Reads one real per line; blank lines and `#` comments are skipped.
pub fn parse_scores(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|e| Error::Malformed {
            what: "score file".into(),
            detail: format!("line {}: {e}", i + 1),
        })?;
        if !v.is_finite() {
            return Err(Error::Malformed {
                what: "score file".into(),
                detail: format!("line {}: non-finite score", i + 1),
            });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_scores(&std::fs::read_to_string(path)?)
}
