//! Piecewise-linear VMAF to utility policy curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(u32, f64)", into = "(u32, f64)")]
pub struct Anchor {
    pub vmaf: u32,
    pub utility: f64,
}

impl From<(u32, f64)> for Anchor {
    fn from((vmaf, utility): (u32, f64)) -> Self {
        Self { vmaf, utility }
    }
}

impl From<Anchor> for (u32, f64) {
    fn from(a: Anchor) -> Self {
        (a.vmaf, a.utility)
    }
}

/// Maps VMAF to utility: 0 below `v_min`, linear between anchors, flat above `v_max`.
///
/// Configured as
///
/// ```toml
/// v_min = 50
/// v_max = 90
/// anchors = [[50, 100.0], [70, 120.0], [90, 130.0]]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveConfig", into = "CurveConfig")]
pub struct UtilityCurve {
    v_min: u32,
    v_max: u32,
    anchors: Vec<Anchor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveConfig {
    v_min: u32,
    v_max: u32,
    anchors: Vec<Anchor>,
}

impl TryFrom<CurveConfig> for UtilityCurve {
    type Error = Error;

    fn try_from(c: CurveConfig) -> Result<Self> {
        UtilityCurve::new(c.v_min, c.v_max, c.anchors)
    }
}

impl From<UtilityCurve> for CurveConfig {
    fn from(c: UtilityCurve) -> Self {
        CurveConfig {
            v_min: c.v_min,
            v_max: c.v_max,
            anchors: c.anchors,
        }
    }
}

impl Default for UtilityCurve {
    fn default() -> Self {
        Self {
            v_min: 50,
            v_max: 90,
            anchors: vec![(50, 100.0).into(), (70, 120.0).into(), (90, 130.0).into()],
        }
    }
}

impl UtilityCurve {
    pub fn new(v_min: u32, v_max: u32, anchors: Vec<Anchor>) -> Result<Self> {
        if v_min >= v_max {
            return Err(Error::InvalidCurve(format!(
                "v_min {v_min} must be below v_max {v_max}"
            )));
        }
        let (first, last) = match (anchors.first(), anchors.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidCurve("no anchors".into())),
        };
        if first.vmaf != v_min || last.vmaf != v_max {
            return Err(Error::InvalidCurve(format!(
                "anchors must start at v_min {v_min} and end at v_max {v_max}"
            )));
        }
        if anchors
            .iter()
            .any(|a| !a.utility.is_finite() || a.utility <= 0.0)
        {
            return Err(Error::InvalidCurve(
                "anchor utilities must be finite and positive".into(),
            ));
        }
        if anchors
            .windows(2)
            .any(|w| w[1].vmaf <= w[0].vmaf || w[1].utility <= w[0].utility)
        {
            return Err(Error::InvalidCurve(
                "anchors must be strictly increasing in vmaf and utility".into(),
            ));
        }
        Ok(Self {
            v_min,
            v_max,
            anchors,
        })
    }

    pub fn v_min(&self) -> u32 {
        self.v_min
    }

    pub fn v_max(&self) -> u32 {
        self.v_max
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn max_utility(&self) -> f64 {
        self.anchors.last().map_or(0.0, |a| a.utility)
    }

    /// Returns a copy with every anchor utility multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let anchors = self
            .anchors
            .iter()
            .map(|a| Anchor {
                vmaf: a.vmaf,
                utility: a.utility * factor,
            })
            .collect();
        Self::new(self.v_min, self.v_max, anchors)
    }

    pub fn utility(&self, vmaf: f64) -> f64 {
        if vmaf < self.v_min as f64 {
            return 0.0;
        }
        if vmaf >= self.v_max as f64 {
            return self.max_utility();
        }
        // first anchor strictly above vmaf; exists since vmaf < v_max
        let hi = self.anchors.partition_point(|a| (a.vmaf as f64) <= vmaf);
        let (a, b) = (self.anchors[hi - 1], self.anchors[hi]);
        let frac = (vmaf - a.vmaf as f64) / (b.vmaf - a.vmaf) as f64;
        a.utility + frac * (b.utility - a.utility)
    }

    /// Utility gained per additional bit/s when moving from `v_from` at
    /// `r_from` to `v_to` at `r_to`.
    ///
    /// A zero rate step with positive gain is worth `+inf`; a step to an
    /// unreachable (infinite-rate) target or with no gain is worth 0. From
    /// `v_from = 0, r_from = 0` this is the admission value `U(v_to) / r_to`.
    pub fn marginal_utility(&self, v_from: u32, v_to: u32, r_from: f64, r_to: f64) -> Result<f64> {
        debug_assert!(v_to > v_from);
        let du = self.utility(v_to as f64) - self.utility(v_from as f64);
        if du <= 0.0 || r_to == f64::INFINITY {
            return Ok(0.0);
        }
        let dr = r_to - r_from;
        if dr < 0.0 || dr.is_nan() {
            return Err(Error::NegativeRateStep { r_from, r_to });
        }
        if dr == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(du / dr)
    }
}
