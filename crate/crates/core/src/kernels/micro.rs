//! Convolution micro-kernels over prepacked weights.
//!
//! All paths compute every output element as
//! `((bias + w₀·x₀) + w₁·x₁) + …` with the terms ordered by input channel,
//! then tap, using separate multiply and add (never fused). The AVX-512
//! kernels only change which elements are computed side by side, so they are
//! bit-identical to the portable path.

use super::conv::ConvSpec;

/// Source frames a row must provide beyond the output length, so that
/// vector loads of a whole block never leave the row.
pub(crate) const FRAME_BLOCK: usize = 64;

/// Input rows after phase splitting, laid out `[in][phase][row_len]`.
pub(crate) struct SourceRows {
    pub data: Vec<f32>,
    pub phases: usize,
    pub row_len: usize,
}

impl SourceRows {
    pub fn zeroed(cin: usize, phases: usize, tout: usize, max_shift: usize) -> Self {
        let row_len = tout.div_ceil(FRAME_BLOCK) * FRAME_BLOCK + max_shift;
        Self {
            data: vec![0.0; cin * phases * row_len],
            phases,
            row_len,
        }
    }

    pub fn row_mut(&mut self, ic: usize, phase: usize) -> &mut [f32] {
        let start = (ic * self.phases + phase) * self.row_len;
        &mut self.data[start..start + self.row_len]
    }
}

/// One tap pattern with weights repacked as `[tile][in][tap][ot]`.
#[derive(Debug, Clone)]
pub(crate) struct TapPlan {
    /// `(phase row, frame shift)` per tap, ascending kernel index.
    taps: Vec<(usize, usize)>,
    ot: usize,
    cin: usize,
    cout: usize,
    weights: Vec<f32>,
    /// Bias padded to a whole number of tiles.
    bias: Vec<f32>,
    pub max_shift: usize,
}

impl TapPlan {
    /// `taps` lists `(kernel index, phase, shift)`.
    pub fn new(
        weight: &[f32],
        bias: Option<&[f32]>,
        spec: &ConvSpec,
        taps: Vec<(usize, usize, usize)>,
    ) -> Self {
        let (cin, cout, k) = (spec.in_channels, spec.out_channels, spec.kernel_size);
        let ot = match cout {
            0..=4 => 4,
            5..=8 => 8,
            _ => 16,
        };
        let tiles = cout.div_ceil(ot);
        let ntap = taps.len();
        let mut weights = vec![0.0f32; tiles * cin * ntap * ot];
        for oc in 0..cout {
            let (tile, o) = (oc / ot, oc % ot);
            for ic in 0..cin {
                for (ti, &(j, _, _)) in taps.iter().enumerate() {
                    weights[((tile * cin + ic) * ntap + ti) * ot + o] = weight[(oc * cin + ic) * k + j];
                }
            }
        }
        let mut padded = vec![0.0f32; tiles * ot];
        if let Some(b) = bias {
            padded[..cout].copy_from_slice(b);
        }
        Self {
            max_shift: taps.iter().map(|t| t.2).max().unwrap_or(0),
            taps: taps.into_iter().map(|(_, p, s)| (p, s)).collect(),
            ot,
            cin,
            cout,
            weights,
            bias: padded,
        }
    }

    /// Outputs `[cout][tout]` for frames `0..tout` of the source rows.
    pub fn run(&self, src: &SourceRows, tout: usize) -> Vec<f32> {
        debug_assert!(src.row_len >= tout.div_ceil(FRAME_BLOCK) * FRAME_BLOCK + self.max_shift);
        let mut out = vec![0.0f32; self.cout * tout];
        if tout == 0 {
            return out;
        }
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx512f") {
                // SAFETY: the feature is present; row lengths cover every
                // block load (checked above), and stores stay inside `out`.
                unsafe { avx512::run(self, src, tout, &mut out) };
                return out;
            }
        }
        self.run_portable(src, tout, &mut out);
        out
    }

    fn run_portable(&self, src: &SourceRows, tout: usize, out: &mut [f32]) {
        let ntap = self.taps.len();
        for oc in 0..self.cout {
            let (tile, o) = (oc / self.ot, oc % self.ot);
            let row = &mut out[oc * tout..(oc + 1) * tout];
            row.fill(self.bias[oc]);
            for ic in 0..self.cin {
                for (ti, &(phase, shift)) in self.taps.iter().enumerate() {
                    let w = self.weights[((tile * self.cin + ic) * ntap + ti) * self.ot + o];
                    let base = (ic * src.phases + phase) * src.row_len + shift;
                    let s = &src.data[base..base + tout];
                    for (r, &x) in row.iter_mut().zip(s) {
                        *r += w * x;
                    }
                }
            }
        }
    }
}

#[cfg(target_arch = "x86_64")]
mod avx512 {
    use super::{SourceRows, TapPlan};
    use std::arch::x86_64::*;

    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn run(plan: &TapPlan, src: &SourceRows, tout: usize, out: &mut [f32]) {
        match plan.ot {
            4 => time_major::<4, 4>(plan, src, tout, out),
            8 => time_major::<8, 2>(plan, src, tout, out),
            _ => {
                let mut t0 = 0;
                while t0 < tout {
                    let left = tout - t0;
                    t0 += if left >= 16 {
                        channel_major::<16>(plan, src, tout, t0, out)
                    } else if left >= 8 {
                        channel_major::<8>(plan, src, tout, t0, out)
                    } else if left >= 4 {
                        channel_major::<4>(plan, src, tout, t0, out)
                    } else {
                        channel_major::<1>(plan, src, tout, t0, out)
                    };
                }
            }
        }
    }

    /// `OT` output channels × `16·TV` frames per block, vectors along time.
    #[target_feature(enable = "avx512f")]
    unsafe fn time_major<const OT: usize, const TV: usize>(
        plan: &TapPlan,
        src: &SourceRows,
        tout: usize,
        out: &mut [f32],
    ) {
        let (cin, ntap) = (plan.cin, plan.taps.len());
        let tiles = plan.cout.div_ceil(OT);
        let data = src.data.as_ptr();
        for tile in 0..tiles {
            let wt = plan.weights.as_ptr().add(tile * cin * ntap * OT);
            let valid = (plan.cout - tile * OT).min(OT);
            let mut t0 = 0;
            while t0 < tout {
                let mut acc = [[_mm512_setzero_ps(); TV]; OT];
                for (o, a) in acc.iter_mut().enumerate() {
                    *a = [_mm512_set1_ps(plan.bias[tile * OT + o]); TV];
                }
                for ic in 0..cin {
                    for (ti, &(phase, shift)) in plan.taps.iter().enumerate() {
                        let p = data.add((ic * src.phases + phase) * src.row_len + t0 + shift);
                        let mut s = [_mm512_setzero_ps(); TV];
                        for (v, sv) in s.iter_mut().enumerate() {
                            *sv = _mm512_loadu_ps(p.add(16 * v));
                        }
                        let w = wt.add((ic * ntap + ti) * OT);
                        for (o, a) in acc.iter_mut().enumerate() {
                            let wb = _mm512_set1_ps(*w.add(o));
                            for v in 0..TV {
                                a[v] = _mm512_add_ps(a[v], _mm512_mul_ps(wb, s[v]));
                            }
                        }
                    }
                }
                for (o, a) in acc.iter().enumerate().take(valid) {
                    let row = out.as_mut_ptr().add((tile * OT + o) * tout);
                    for (v, &av) in a.iter().enumerate() {
                        let t = t0 + 16 * v;
                        if t >= tout {
                            break;
                        }
                        let n = (tout - t).min(16);
                        let mask: __mmask16 = if n == 16 { 0xffff } else { (1u16 << n) - 1 };
                        _mm512_mask_storeu_ps(row.add(t), mask, av);
                    }
                }
                t0 += 16 * TV;
            }
        }
    }

    /// 16 output channels × `TB` frames starting at `t0`, vectors along
    /// channels. Returns the number of frames done.
    #[target_feature(enable = "avx512f")]
    unsafe fn channel_major<const TB: usize>(
        plan: &TapPlan,
        src: &SourceRows,
        tout: usize,
        t0: usize,
        out: &mut [f32],
    ) -> usize {
        let (cin, ntap) = (plan.cin, plan.taps.len());
        let tiles = plan.cout.div_ceil(16);
        let data = src.data.as_ptr();
        for tile in 0..tiles {
            let wt = plan.weights.as_ptr().add(tile * cin * ntap * 16);
            let valid = (plan.cout - tile * 16).min(16);
            let bias = _mm512_loadu_ps(plan.bias.as_ptr().add(tile * 16));
            let mut acc = [bias; TB];
            for ic in 0..cin {
                for (ti, &(phase, shift)) in plan.taps.iter().enumerate() {
                    let p = data.add((ic * src.phases + phase) * src.row_len + t0 + shift);
                    let w = _mm512_loadu_ps(wt.add((ic * ntap + ti) * 16));
                    for (tb, a) in acc.iter_mut().enumerate() {
                        *a = _mm512_add_ps(*a, _mm512_mul_ps(w, _mm512_set1_ps(*p.add(tb))));
                    }
                }
            }
            let mut lanes = [0.0f32; 16];
            for (tb, &a) in acc.iter().enumerate() {
                _mm512_storeu_ps(lanes.as_mut_ptr(), a);
                for (o, &v) in lanes.iter().enumerate().take(valid) {
                    out[(tile * 16 + o) * tout + t0 + tb] = v;
                }
            }
        }
        TB
    }
}
