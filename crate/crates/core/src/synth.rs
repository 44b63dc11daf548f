//! Deterministic synthetic CRF-ladder corpora.
//!
//! Each clip follows a piecewise-constant complexity regime: a dwell time
//! (uniform integer in `dwell_windows`) and a multiplier (log-uniform in
//! `multiplier_range`) are drawn whenever the previous regime ends. On top of
//! that every window gets a rate jitter factor `1 + jitter * u` and a quality
//! offset `quality_jitter * u'` with `u, u'` uniform in `[-1, 1)`.
//!
//! For CRF `c`, with `x = -(c - crf_ref) / crf_doubling`:
//!
//! ```text
//! rate(t, c) = base * regime(t) * jitter(t) * 2^x
//! vmaf(t, c) = 100 / (1 + exp(-(logit_intercept + logit_slope * x + offset(t))))
//! ```
//!
//! Rates are rounded to whole bits/s and VMAF to four decimals, so both are
//! strictly decreasing in CRF within a window.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`). Clip `i` uses
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`, so clips are
//! independent of each other and of how many clips are generated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{LadderCell, LadderTrace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipProfile {
    /// Mean rate of the reference CRF at regime multiplier 1.
    pub base_rate_bps: f64,
    /// Inclusive range of regime lengths, in windows.
    pub dwell_windows: [u32; 2],
    /// Range the regime multiplier is drawn from (log-uniformly).
    pub multiplier_range: [f64; 2],
    /// Per-window rate jitter fraction, in `[0, 1)`.
    pub jitter: f64,
}

impl ClipProfile {
    fn validate(&self, idx: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(format!("profile {idx}: {msg}")));
        if !(self.base_rate_bps > 0.0 && self.base_rate_bps.is_finite()) {
            return bad(format!(
                "base_rate_bps {} must be positive",
                self.base_rate_bps
            ));
        }
        let [dmin, dmax] = self.dwell_windows;
        if dmin == 0 || dmin > dmax {
            return bad(format!(
                "dwell_windows [{dmin}, {dmax}] must satisfy 1 <= min <= max"
            ));
        }
        let [mmin, mmax] = self.multiplier_range;
        if !(mmin > 0.0 && mmin <= mmax && mmax.is_finite()) {
            return bad(format!(
                "multiplier_range [{mmin}, {mmax}] must satisfy 0 < min <= max"
            ));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return bad(format!("jitter {} must be in [0, 1)", self.jitter));
        }
        Ok(())
    }
}

/// Shared CRF to rate/VMAF shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmafModel {
    pub crf_ref: f64,
    /// CRF increase that halves the rate.
    pub crf_doubling: f64,
    pub logit_intercept: f64,
    pub logit_slope: f64,
    /// Per-window offset amplitude on the logit scale.
    pub quality_jitter: f64,
}

impl Default for VmafModel {
    fn default() -> Self {
        // ~97 VMAF at CRF 20, ~30 at CRF 45
        Self {
            crf_ref: 20.0,
            crf_doubling: 6.0,
            logit_intercept: 3.476,
            logit_slope: 1.037,
            quality_jitter: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub clip_count: usize,
    pub windows_per_clip: usize,
    pub crf_values: Vec<u32>,
    pub seed: u64,
    /// Clip `i` uses `profiles[i % profiles.len()]`.
    pub profiles: Vec<ClipProfile>,
    #[serde(default)]
    pub vmaf: VmafModel,
}

pub const DEFAULT_SEED: u64 = 42;

pub fn default_crf_values() -> Vec<u32> {
    std::iter::once(20).chain(25..=45).collect()
}

pub fn default_profiles() -> Vec<ClipProfile> {
    let profile = |base_rate_bps: f64, dwell: [u32; 2], range: [f64; 2], jitter: f64| ClipProfile {
        base_rate_bps,
        dwell_windows: dwell,
        multiplier_range: range,
        jitter,
    };
    vec![
        profile(2.6e6, [30, 240], [0.45, 2.2], 0.15),
        profile(4.5e6, [10, 120], [0.4, 2.5], 0.2),
        profile(7.0e6, [5, 60], [0.35, 2.8], 0.25),
        profile(9.5e6, [10, 90], [0.4, 2.5], 0.2),
        profile(13.0e6, [60, 330], [0.5, 2.0], 0.15),
    ]
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            clip_count: 5,
            windows_per_clip: 1320,
            crf_values: default_crf_values(),
            seed: DEFAULT_SEED,
            profiles: default_profiles(),
            vmaf: VmafModel::default(),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if self.clip_count == 0 {
            return Err(Error::InvalidParams("clip_count must be >= 1".into()));
        }
        if self.windows_per_clip == 0 {
            return Err(Error::InvalidParams("windows_per_clip must be >= 1".into()));
        }
        if self.crf_values.is_empty() || self.crf_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams(
                "crf_values must be non-empty and strictly ascending".into(),
            ));
        }
        if self.profiles.is_empty() {
            return Err(Error::InvalidParams(
                "at least one clip profile is required".into(),
            ));
        }
        for (i, p) in self.profiles.iter().enumerate() {
            p.validate(i)?;
        }
        let m = &self.vmaf;
        if !(m.crf_doubling > 0.0 && m.logit_slope > 0.0 && m.quality_jitter >= 0.0) {
            return Err(Error::InvalidParams(
                "vmaf model needs crf_doubling > 0, logit_slope > 0, quality_jitter >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn clip_id(&self, idx: usize) -> String {
        format!("clip{idx}")
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (x * scale).round() / scale
}

/// Generates clip `idx` of the corpus described by `params`.
pub fn generate_clip(params: &GenParams, idx: usize) -> Result<LadderTrace> {
    params.validate()?;
    let profile = &params.profiles[idx % params.profiles.len()];
    let model = &params.vmaf;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(idx as u64);

    let offsets: Vec<f64> = params
        .crf_values
        .iter()
        .map(|&c| -(c as f64 - model.crf_ref) / model.crf_doubling)
        .collect();
    let [dmin, dmax] = profile.dwell_windows;
    let [mmin, mmax] = profile.multiplier_range;
    let (ln_lo, ln_hi) = (mmin.ln(), mmax.ln());

    let mut regime_left = 0u32;
    let mut multiplier = 1.0;
    let mut windows = Vec::with_capacity(params.windows_per_clip);
    for _ in 0..params.windows_per_clip {
        if regime_left == 0 {
            regime_left = rng.gen_range(dmin..=dmax);
            multiplier = if ln_hi > ln_lo {
                rng.gen_range(ln_lo..ln_hi).exp()
            } else {
                mmin
            };
        }
        regime_left -= 1;
        let jitter = 1.0 + profile.jitter * rng.gen_range(-1.0..1.0);
        let quality = model.quality_jitter * rng.gen_range(-1.0..1.0);
        let scale = profile.base_rate_bps * multiplier * jitter;
        let row = offsets
            .iter()
            .map(|&x| {
                let logit = model.logit_intercept + model.logit_slope * x + quality;
                LadderCell {
                    mean_rate_bps: (scale * x.exp2()).round().max(1.0),
                    window_vmaf: round_to(100.0 / (1.0 + (-logit).exp()), 4),
                }
            })
            .collect();
        windows.push(row);
    }
    LadderTrace::new(params.clip_id(idx), 1.0, params.crf_values.clone(), windows)
}

/// Generates every clip of the corpus.
pub fn generate_corpus(params: &GenParams) -> Result<Vec<LadderTrace>> {
    params.validate()?;
    (0..params.clip_count)
        .map(|i| generate_clip(params, i))
        .collect()
}
