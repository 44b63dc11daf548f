//! Trace-driven scenarios: a fixed set of sessions shares one bottleneck,
//! reallocated every window (dynamic methods) or with rates fixed for the
//! whole run (static methods).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{
    allocate_equal_vmaf, allocate_rate_fair, compute_static_rates, run_greedy, AllocationInput,
    BreakRule, StaticMode, StaticScc,
};
use crate::emulation::{
    achievable_index, average_scc, emulate_session, AvgScc, TargetGrid, TargetVmafTrace,
};
use crate::error::{Error, Result};
use crate::trace::{cut_sessions, LadderTrace};
use crate::utility::UtilityCurve;

/// VMAF threshold of the `frac_below_50` KPI.
pub const KPI_VMAF_FLOOR: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MaxUtility,
    EqualVmaf,
    RateFair,
    MuPerClip,
    MuPerSession,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::MaxUtility,
        Method::EqualVmaf,
        Method::RateFair,
        Method::MuPerClip,
        Method::MuPerSession,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MaxUtility => "max_utility",
            Method::EqualVmaf => "equal_vmaf",
            Method::RateFair => "rate_fair",
            Method::MuPerClip => "mu_per_clip",
            Method::MuPerSession => "mu_per_session",
        }
    }

    pub fn is_static(self) -> bool {
        matches!(self, Method::MuPerClip | Method::MuPerSession)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    /// Accepts `max_utility` and `max-utility` spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| format!("unknown method {s:?}; expected one of max-utility, equal-vmaf, rate-fair, mu-per-clip, mu-per-session"))
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioSession {
    pub trace: TargetVmafTrace,
    /// Index into the scenario's clip SCCs.
    pub clip: usize,
}

/// Sessions, their long-term SCCs and the allocation policy shared by every run.
#[derive(Clone, Debug)]
pub struct Scenario {
    grid: TargetGrid,
    curve: UtilityCurve,
    rule: BreakRule,
    length: usize,
    sessions: Vec<ScenarioSession>,
    clip_sccs: Vec<AvgScc>,
    session_sccs: Vec<AvgScc>,
}

impl Scenario {
    /// Builds a scenario from emulated sessions and the average SCCs of their clips.
    pub fn new(
        sessions: Vec<ScenarioSession>,
        clip_sccs: Vec<AvgScc>,
        length: usize,
        grid: TargetGrid,
        curve: UtilityCurve,
    ) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::InvalidInput(
                "scenario needs at least one session".into(),
            ));
        }
        if length == 0 {
            return Err(Error::InvalidInput("scenario length must be > 0".into()));
        }
        for s in &sessions {
            if s.trace.len() < length {
                return Err(Error::SessionTooShort {
                    session: s.trace.session_id().to_string(),
                    required: length,
                    available: s.trace.len(),
                });
            }
            if s.trace.grid() != &grid {
                return Err(Error::GridMismatch {
                    first: "scenario grid".into(),
                    other: s.trace.session_id().to_string(),
                });
            }
            if !s.trace.is_sanitized() {
                return Err(Error::Unsanitized(s.trace.session_id().to_string()));
            }
            let scc = clip_sccs.get(s.clip).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "session {} refers to missing clip {}",
                    s.trace.session_id(),
                    s.clip
                ))
            })?;
            if scc.grid != grid {
                return Err(Error::GridMismatch {
                    first: "scenario grid".into(),
                    other: scc.label.clone(),
                });
            }
        }
        let session_sccs = sessions
            .iter()
            .map(|s| average_scc(&[&s.trace], s.trace.session_id()))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid,
            curve,
            rule: BreakRule::Break,
            length,
            sessions,
            clip_sccs,
            session_sccs,
        })
    }

    /// Cuts `sessions_per_clip` sessions of `session_len` windows from each
    /// clip, emulates target-VMAF encoding for them and for the full clips.
    pub fn from_clips(
        clips: &[Arc<LadderTrace>],
        sessions_per_clip: usize,
        session_len: usize,
        grid: TargetGrid,
        curve: UtilityCurve,
    ) -> Result<Self> {
        let clip_sccs = clips
            .par_iter()
            .map(|clip| {
                let full = emulate_session(clip.clip_id(), clip.view(), &grid)?;
                average_scc(&[&full], clip.clip_id())
            })
            .collect::<Result<Vec<_>>>()?;
        let cuts = clips
            .iter()
            .enumerate()
            .map(|(i, clip)| {
                Ok(cut_sessions(clip, session_len, sessions_per_clip)?
                    .into_iter()
                    .map(move |s| (i, s)))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect::<Vec<_>>();
        let sessions = cuts
            .par_iter()
            .map(|(clip, s)| {
                Ok(ScenarioSession {
                    trace: emulate_session(s.session_id(), s.view(), &grid)?,
                    clip: *clip,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sessions, clip_sccs, session_len, grid, curve)
    }

    pub fn with_break_rule(mut self, rule: BreakRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn grid(&self) -> &TargetGrid {
        &self.grid
    }

    pub fn curve(&self) -> &UtilityCurve {
        &self.curve
    }

    pub fn break_rule(&self) -> BreakRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn sessions(&self) -> &[ScenarioSession] {
        &self.sessions
    }

    pub fn session_ids(&self) -> Vec<&str> {
        self.sessions.iter().map(|s| s.trace.session_id()).collect()
    }

    pub fn clip_sccs(&self) -> &[AvgScc] {
        &self.clip_sccs
    }

    pub fn session_sccs(&self) -> &[AvgScc] {
        &self.session_sccs
    }

    /// Sanitized demand rows of every session in window `t`.
    pub fn demand_rows(&self, t: usize) -> Result<Vec<&[f64]>> {
        self.sessions
            .iter()
            .map(|s| s.trace.demand_row(t))
            .collect()
    }

    /// Fixed rates of a static method at `capacity_bps`.
    pub fn static_rates(&self, capacity_bps: f64, mode: StaticMode) -> Result<Vec<f64>> {
        let sccs: Vec<StaticScc<'_>> = self
            .sessions
            .iter()
            .zip(&self.session_sccs)
            .map(|(s, own)| StaticScc {
                clip: &self.clip_sccs[s.clip],
                session: own,
            })
            .collect();
        compute_static_rates(
            &sccs,
            capacity_bps,
            &self.curve,
            &self.grid,
            mode,
            self.rule,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub capacity_bps: f64,
    pub method: Method,
}

/// One session during one window. `target_vmaf == 0` means nothing was delivered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerSecondRecord {
    pub t: u32,
    pub session: u32,
    pub target_vmaf: u32,
    pub experienced_vmaf: f64,
    pub rate_bps: f64,
    pub utility: f64,
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub method: Method,
    pub capacity_bps: f64,
    pub records: Vec<PerSecondRecord>,
}

impl ScenarioRun {
    pub fn summary(&self) -> Result<KpiSummary> {
        let kpis = compute_kpis(&self.records)?;
        Ok(KpiSummary {
            capacity_bps: self.capacity_bps,
            method: self.method,
            avg_utility: kpis.avg_utility,
            avg_vmaf: kpis.avg_vmaf,
            frac_below_50: kpis.frac_below_50,
            frac_zero: kpis.frac_zero,
        })
    }
}

fn record(
    scenario: &Scenario,
    t: usize,
    session: usize,
    level: Option<usize>,
    rate_bps: f64,
) -> Result<PerSecondRecord> {
    let (target_vmaf, experienced_vmaf) = match level {
        Some(i) => {
            let trace = &scenario.sessions[session].trace;
            let cell = trace.cells(t)?[i].ok_or_else(|| {
                Error::InvalidInput(format!(
                    "{}: window {t} target index {i} is unreachable",
                    trace.session_id()
                ))
            })?;
            (scenario.grid.targets()[i], cell.vmaf)
        }
        None => (0, 0.0),
    };
    let utility = if target_vmaf == 0 {
        0.0
    } else {
        scenario.curve.utility(experienced_vmaf)
    };
    Ok(PerSecondRecord {
        t: t as u32,
        session: session as u32,
        target_vmaf,
        experienced_vmaf,
        rate_bps,
        utility,
    })
}

/// Runs one method at one capacity over every window of the scenario.
///
/// Target-based methods (max utility, equal VMAF) record the allocated target
/// and the experienced VMAF of the encode selected for it. Rate-based methods
/// (rate fair, static) record the highest target their rate affords in that
/// window.
pub fn run_scenario(scenario: &Scenario, config: ScenarioConfig) -> Result<ScenarioRun> {
    let c = config.capacity_bps;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "capacity {c} must be positive"
        )));
    }
    let n = scenario.sessions.len();
    let mut records = Vec::with_capacity(n * scenario.length);

    let fixed_rates = match config.method {
        Method::MuPerClip => Some(scenario.static_rates(c, StaticMode::PerClip)?),
        Method::MuPerSession => Some(scenario.static_rates(c, StaticMode::PerSession)?),
        _ => None,
    };

    for t in 0..scenario.length {
        let rows = scenario.demand_rows(t)?;
        let rate_based = |s: usize, r: f64| record(scenario, t, s, achievable_index(rows[s], r), r);
        match config.method {
            Method::MaxUtility | Method::EqualVmaf | Method::RateFair => {
                let input = AllocationInput {
                    capacity_bps: c,
                    grid: &scenario.grid,
                    curve: &scenario.curve,
                    demands: rows.clone(),
                };
                let allocation = match config.method {
                    Method::MaxUtility => run_greedy(&input, scenario.rule)?.allocation,
                    Method::EqualVmaf => allocate_equal_vmaf(&input)?,
                    _ => allocate_rate_fair(&input)?,
                };
                for (s, share) in allocation.shares.iter().enumerate() {
                    let rec = if config.method == Method::RateFair {
                        rate_based(s, share.rate_bps)?
                    } else {
                        let level = scenario.grid.index_of(share.target);
                        record(scenario, t, s, level, share.rate_bps)?
                    };
                    records.push(rec);
                }
            }
            Method::MuPerClip | Method::MuPerSession => {
                let rates = fixed_rates.as_deref().unwrap_or_default();
                for (s, &r) in rates.iter().enumerate() {
                    records.push(rate_based(s, r)?);
                }
            }
        }
    }
    Ok(ScenarioRun {
        method: config.method,
        capacity_bps: c,
        records,
    })
}

/// Aggregates of one window across sessions (non-admitted sessions count as 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondStats {
    pub t: u32,
    pub sessions: usize,
    pub avg_utility: f64,
    pub avg_vmaf: f64,
    pub min_vmaf: f64,
    pub total_rate_bps: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KpiReport {
    pub per_second: Vec<SecondStats>,
    /// Mean of the per-second average utilities.
    pub avg_utility: f64,
    /// Mean of the per-second average experienced VMAFs.
    pub avg_vmaf: f64,
    /// Share of session-seconds with experienced VMAF below 50.
    pub frac_below_50: f64,
    /// Share of session-seconds with experienced VMAF of 0.
    pub frac_zero: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiSummary {
    pub capacity_bps: f64,
    pub method: Method,
    pub avg_utility: f64,
    pub avg_vmaf: f64,
    pub frac_below_50: f64,
    pub frac_zero: f64,
}

/// Computes per-second aggregates and scenario KPIs.
///
/// Averages are over the records present for each window, so sessions that
/// got nothing must be present as zero records to count.
pub fn compute_kpis(records: &[PerSecondRecord]) -> Result<KpiReport> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    #[derive(Default)]
    struct Acc {
        n: usize,
        utility: f64,
        vmaf: f64,
        min: f64,
        rate: f64,
    }
    let mut by_t: BTreeMap<u32, Acc> = BTreeMap::new();
    let (mut below, mut zero) = (0usize, 0usize);
    for r in records {
        let acc = by_t.entry(r.t).or_insert_with(|| Acc {
            min: f64::INFINITY,
            ..Acc::default()
        });
        acc.n += 1;
        acc.utility += r.utility;
        acc.vmaf += r.experienced_vmaf;
        acc.min = acc.min.min(r.experienced_vmaf);
        acc.rate += r.rate_bps;
        if r.experienced_vmaf < KPI_VMAF_FLOOR {
            below += 1;
        }
        if r.experienced_vmaf == 0.0 {
            zero += 1;
        }
    }
    let per_second: Vec<SecondStats> = by_t
        .into_iter()
        .map(|(t, a)| SecondStats {
            t,
            sessions: a.n,
            avg_utility: a.utility / a.n as f64,
            avg_vmaf: a.vmaf / a.n as f64,
            min_vmaf: a.min,
            total_rate_bps: a.rate,
        })
        .collect();
    let seconds = per_second.len() as f64;
    let total = records.len() as f64;
    Ok(KpiReport {
        avg_utility: per_second.iter().map(|s| s.avg_utility).sum::<f64>() / seconds,
        avg_vmaf: per_second.iter().map(|s| s.avg_vmaf).sum::<f64>() / seconds,
        frac_below_50: below as f64 / total,
        frac_zero: zero as f64 / total,
        per_second,
    })
}

/// Runs every (capacity, method) pair in parallel on the current rayon pool.
/// Rows are ordered by capacity, then by the order of `methods`.
pub fn sweep_capacity(
    scenario: &Scenario,
    capacities: &[f64],
    methods: &[Method],
) -> Result<Vec<KpiSummary>> {
    let jobs: Vec<ScenarioConfig> = capacities
        .iter()
        .flat_map(|&capacity_bps| {
            methods.iter().map(move |&method| ScenarioConfig {
                capacity_bps,
                method,
            })
        })
        .collect();
    jobs.par_iter()
        .map(|&config| run_scenario(scenario, config)?.summary())
        .collect()
}

/// Inclusive capacity range `start, start + step, ...` up to `stop`.
pub fn capacity_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop >= start && step > 0.0 && stop.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "capacity range {start}:{stop}:{step} needs 0 < start <= stop and step > 0"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Per window, running sums of each trace's demand at `target`, in trace order.
pub fn cumulative_shares(traces: &[&TargetVmafTrace], target: u32) -> Result<Vec<Vec<f64>>> {
    let windows = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    (0..windows)
        .map(|t| {
            let mut sum = 0.0;
            traces
                .iter()
                .map(|tr| {
                    sum += tr.demand(t, target)?;
                    Ok(sum)
                })
                .collect()
        })
        .collect()
}

/// Per window and grid target, the total demand of all traces.
pub fn aggregate_demand(traces: &[&TargetVmafTrace]) -> Result<Vec<Vec<f64>>> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidInput("aggregate demand needs at least one trace".into()))?;
    let windows = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    (0..windows)
        .map(|t| {
            let mut totals = vec![0.0; first.grid().len()];
            for tr in traces {
                if tr.grid() != first.grid() {
                    return Err(Error::GridMismatch {
                        first: first.session_id().to_string(),
                        other: tr.session_id().to_string(),
                    });
                }
                for (acc, d) in totals.iter_mut().zip(tr.demand_row(t)?) {
                    *acc += d;
                }
            }
            Ok(totals)
        })
        .collect()
}
