//! Bottleneck sharing methods for one reallocation interval.
//!
//! Every method works on an [`AllocationInput`]: a capacity, a shared target
//! grid, a utility curve and, per session, a sanitized demand row
//! (`demands[s][i]` is the rate session `s` needs to reach `grid[i]`).

mod brute;
mod greedy;

pub use brute::{brute_force_max_utility, BRUTE_FORCE_LIMIT};
pub use greedy::{allocate_max_utility, run_greedy, BreakRule, GreedyOutcome, StopReason};

use crate::emulation::{achievable_index, AvgScc, TargetGrid};
use crate::error::{Error, Result};
use crate::utility::UtilityCurve;

#[derive(Clone, Debug)]
pub struct AllocationInput<'a> {
    pub capacity_bps: f64,
    pub grid: &'a TargetGrid,
    pub curve: &'a UtilityCurve,
    pub demands: Vec<&'a [f64]>,
}

impl AllocationInput<'_> {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.capacity_bps >= 0.0 && self.capacity_bps.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "capacity {} must be finite and >= 0",
                self.capacity_bps
            )));
        }
        if let Some(s) = self.demands.iter().position(|d| d.len() != self.grid.len()) {
            return Err(Error::InvalidInput(format!(
                "session {s} has {} demand values for a grid of {}",
                self.demands[s].len(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// Grid indices of the lowest and highest targets inside `[v_min, v_max]`.
    pub(crate) fn utility_levels(&self) -> Result<(usize, usize)> {
        let targets = self.grid.targets();
        let lo = targets.partition_point(|&v| v < self.curve.v_min());
        let hi = targets.partition_point(|&v| v <= self.curve.v_max());
        if lo >= hi {
            return Err(Error::InvalidGrid(format!(
                "no grid target within [{}, {}]",
                self.curve.v_min(),
                self.curve.v_max()
            )));
        }
        Ok((lo, hi - 1))
    }
}

/// One session's share: target 0 means not admitted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionShare {
    pub target: u32,
    pub rate_bps: f64,
}

impl SessionShare {
    pub const NONE: SessionShare = SessionShare {
        target: 0,
        rate_bps: 0.0,
    };
}

#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    pub shares: Vec<SessionShare>,
    pub leftover_bps: f64,
    /// Sum of `U(target)` over sessions.
    pub total_utility: f64,
}

impl Allocation {
    pub fn allocated_bps(&self) -> f64 {
        self.shares.iter().map(|s| s.rate_bps).sum()
    }

    pub fn targets(&self) -> Vec<u32> {
        self.shares.iter().map(|s| s.target).collect()
    }

    pub(crate) fn from_shares(
        shares: Vec<SessionShare>,
        capacity_bps: f64,
        curve: &UtilityCurve,
    ) -> Self {
        let total_utility = shares.iter().map(|s| curve.utility(s.target as f64)).sum();
        let allocated: f64 = shares.iter().map(|s| s.rate_bps).sum();
        Allocation {
            shares,
            leftover_bps: capacity_bps - allocated,
            total_utility,
        }
    }
}

/// Gives every session the highest common grid target whose total demand fits.
///
/// The whole grid is searched, including targets below `v_min`. If even the
/// lowest target does not fit, nobody is admitted. Leftover capacity is not
/// redistributed.
pub fn allocate_equal_vmaf(input: &AllocationInput<'_>) -> Result<Allocation> {
    input.validate()?;
    let total = |i: usize| input.demands.iter().map(|d| d[i]).sum::<f64>();
    // total demand is non-decreasing in the target, so feasible levels form a prefix
    let (mut feasible, mut hi) = (0, input.grid.len());
    while feasible < hi {
        let mid = (feasible + hi) / 2;
        if total(mid) <= input.capacity_bps {
            feasible = mid + 1;
        } else {
            hi = mid;
        }
    }
    let shares = match feasible.checked_sub(1) {
        Some(level) => {
            let target = input.grid.targets()[level];
            input
                .demands
                .iter()
                .map(|d| SessionShare {
                    target,
                    rate_bps: d[level],
                })
                .collect()
        }
        None => vec![SessionShare::NONE; input.demands.len()],
    };
    Ok(Allocation::from_shares(
        shares,
        input.capacity_bps,
        input.curve,
    ))
}

/// Largest per-session rate `r <= capacity / n` such that `n` copies of `r`
/// summed in order do not exceed `capacity`.
pub fn fair_share(capacity_bps: f64, n: usize) -> f64 {
    let mut r = capacity_bps / n as f64;
    while r > 0.0 && std::iter::repeat_n(r, n).sum::<f64>() > capacity_bps {
        r = r.next_down();
    }
    r
}

/// Splits capacity equally; each session reaches whatever its share affords.
pub fn allocate_rate_fair(input: &AllocationInput<'_>) -> Result<Allocation> {
    input.validate()?;
    let n = input.demands.len();
    if n == 0 {
        return Err(Error::InvalidInput(
            "rate fair needs at least one session".into(),
        ));
    }
    let r = fair_share(input.capacity_bps, n);
    let shares = input
        .demands
        .iter()
        .map(|d| SessionShare {
            target: achievable_index(d, r).map_or(0, |i| input.grid.targets()[i]),
            rate_bps: r,
        })
        .collect();
    Ok(Allocation::from_shares(
        shares,
        input.capacity_bps,
        input.curve,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StaticMode {
    PerClip,
    PerSession,
}

/// Long-term demand curves known for one session.
#[derive(Clone, Copy, Debug)]
pub struct StaticScc<'a> {
    pub clip: &'a AvgScc,
    pub session: &'a AvgScc,
}

/// Fixed per-session rates from the greedy utility allocation run once on
/// time-invariant average demand (the clip's or the session's own).
pub fn compute_static_rates(
    sccs: &[StaticScc<'_>],
    capacity_bps: f64,
    curve: &UtilityCurve,
    grid: &TargetGrid,
    mode: StaticMode,
    rule: BreakRule,
) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = sccs
        .iter()
        .map(|s| {
            let scc = match mode {
                StaticMode::PerClip => s.clip,
                StaticMode::PerSession => s.session,
            };
            if &scc.grid != grid {
                return Err(Error::GridMismatch {
                    first: "allocation grid".into(),
                    other: scc.label.clone(),
                });
            }
            Ok(scc.demand_row())
        })
        .collect::<Result<_>>()?;
    let input = AllocationInput {
        capacity_bps,
        grid,
        curve,
        demands: rows.iter().map(Vec::as_slice).collect(),
    };
    let outcome = run_greedy(&input, rule)?;
    Ok(outcome
        .allocation
        .shares
        .iter()
        .map(|s| s.rate_bps)
        .collect())
}
