//! QoE-aware sharing of a bottleneck among cloud-gaming video sessions.
//!
//! The crate turns CRF ladder traces into target-VMAF demand curves, splits a
//! link among sessions with several allocation policies and replays them
//! second by second to compare quality and utility.
//!
//! ```
//! use qoetm_core::{
//!     generate_corpus, run_scenario, GenParams, Method, Scenario, ScenarioConfig, TargetGrid, UtilityCurve,
//! };
//! use std::sync::Arc;
//!
//! let params = GenParams { clip_count: 2, windows_per_clip: 20, ..GenParams::default() };
//! let clips: Vec<_> = generate_corpus(&params).unwrap().into_iter().map(Arc::new).collect();
//! let scenario = Scenario::from_clips(&clips, 2, 10, TargetGrid::default(), UtilityCurve::default()).unwrap();
//! let run = run_scenario(&scenario, ScenarioConfig { capacity_bps: 20e6, method: Method::MaxUtility }).unwrap();
//! assert_eq!(run.records.len(), 4 * 10);
//! ```

pub mod allocation;
pub mod emulation;
pub mod error;
pub mod export;
pub mod simulation;
pub mod synth;
pub mod trace;
pub mod utility;

pub use allocation::{
    allocate_equal_vmaf, allocate_max_utility, allocate_rate_fair, brute_force_max_utility,
    compute_static_rates, fair_share, run_greedy, Allocation, AllocationInput, BreakRule,
    GreedyOutcome, SessionShare, StaticMode, StaticScc, StopReason, BRUTE_FORCE_LIMIT,
};
pub use emulation::{
    achievable_index, average_scc, emulate_session, emulate_target_vmaf, sanitize_demand, AvgScc,
    EmulatedCell, TargetGrid, TargetVmafTrace,
};
pub use error::{Error, Result};
pub use simulation::{
    aggregate_demand, capacity_range, compute_kpis, cumulative_shares, run_scenario,
    sweep_capacity, KpiReport, KpiSummary, Method, PerSecondRecord, Scenario, ScenarioConfig,
    ScenarioRun, ScenarioSession, SecondStats,
};
pub use synth::{generate_clip, generate_corpus, ClipProfile, GenParams, VmafModel};
pub use trace::{
    aggregate_frames, cut_sessions, ladder_from_frame_logs, load_frame_logs, load_ladder_trace,
    read_frame_logs, read_ladder_trace, save_ladder_trace, write_ladder_trace, Frame, FrameLog,
    LadderCell, LadderTrace, LadderView, SessionTrace,
};
pub use utility::{Anchor, UtilityCurve};
