//! Target-VMAF encoder emulation over CRF ladders, per-window demand and
//! average spatial complexity curves.
//!
//! For every window and integer target `v`, the emulated encoder uses the CRF
//! encode with the smallest window VMAF that is still `>= v`. Ties on that VMAF
//! go to the higher CRF. The selected encode's rate is the raw demand; the
//! sanitized demand is its running maximum over targets, so demand is
//! non-decreasing in `v` and unreachable targets cost `+inf`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::trace::LadderView;

/// Sorted, duplicate-free integer VMAF targets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TargetGrid(Vec<u32>);

impl TargetGrid {
    pub fn new(mut targets: Vec<u32>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidGrid("empty target grid".into()));
        }
        targets.sort_unstable();
        targets.dedup();
        if targets.iter().any(|&v| v > 100) {
            return Err(Error::InvalidGrid("targets must be within [0, 100]".into()));
        }
        if targets[0] == 0 {
            return Err(Error::InvalidGrid(
                "target 0 is reserved for 'not admitted'".into(),
            ));
        }
        Ok(Self(targets))
    }

    /// Every integer in `lo..=hi`.
    pub fn range(lo: u32, hi: u32) -> Result<Self> {
        Self::new((lo..=hi).collect())
    }

    pub fn targets(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, v: u32) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }

    pub fn get(&self, idx: usize) -> Option<u32> {
        self.0.get(idx).copied()
    }
}

impl Default for TargetGrid {
    fn default() -> Self {
        Self((10..=95).collect())
    }
}

/// The encode chosen for one (window, target) cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmulatedCell {
    pub crf: u32,
    pub rate_bps: f64,
    pub vmaf: f64,
}

/// Emulated target-VMAF encoding of one session or clip.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetVmafTrace {
    session_id: String,
    grid: TargetGrid,
    windows: usize,
    // row-major [window][target index]
    cells: Vec<Option<EmulatedCell>>,
    sanitized: Option<Vec<f64>>,
}

/// Runs the target-VMAF selection for every window of `ladder` and every grid target.
///
/// The result has raw per-cell selections only; call [`sanitize_demand`]
/// before querying demand.
pub fn emulate_target_vmaf(
    session_id: impl Into<String>,
    ladder: LadderView<'_>,
    grid: &TargetGrid,
) -> Result<TargetVmafTrace> {
    let session_id = session_id.into();
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty target grid".into()));
    }
    let targets = grid.targets();
    let mut cells = Vec::with_capacity(ladder.windows.len() * targets.len());
    let mut order: Vec<usize> = Vec::with_capacity(ladder.crf_values.len());
    for (t, window) in ladder.windows.iter().enumerate() {
        if window.is_empty() || window.len() != ladder.crf_values.len() {
            return Err(Error::InvalidLadder(format!(
                "window {t} of {session_id:?} has no usable encodes"
            )));
        }
        // ascending VMAF, equal VMAF -> higher CRF first
        order.clear();
        order.extend(0..window.len());
        order.sort_by(|&a, &b| {
            window[a]
                .window_vmaf
                .total_cmp(&window[b].window_vmaf)
                .then(ladder.crf_values[b].cmp(&ladder.crf_values[a]))
        });
        let mut k = 0;
        for &v in targets {
            while k < order.len() && window[order[k]].window_vmaf < v as f64 {
                k += 1;
            }
            cells.push(order.get(k).map(|&i| EmulatedCell {
                crf: ladder.crf_values[i],
                rate_bps: window[i].mean_rate_bps,
                vmaf: window[i].window_vmaf,
            }));
        }
    }
    Ok(TargetVmafTrace {
        session_id,
        grid: grid.clone(),
        windows: ladder.windows.len(),
        cells,
        sanitized: None,
    })
}

/// Fills the sanitized demand: per window, the running maximum of raw rates
/// over targets, with `+inf` from the first unreachable target on.
pub fn sanitize_demand(mut trace: TargetVmafTrace) -> TargetVmafTrace {
    let g = trace.grid.len();
    let mut demand = Vec::with_capacity(trace.cells.len());
    for row in trace.cells.chunks(g) {
        let mut running = 0.0f64;
        for cell in row {
            running = match cell {
                Some(c) => running.max(c.rate_bps),
                None => f64::INFINITY,
            };
            demand.push(running);
        }
    }
    trace.sanitized = Some(demand);
    trace
}

impl TargetVmafTrace {
    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn grid(&self) -> &TargetGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.windows
    }

    pub fn is_empty(&self) -> bool {
        self.windows == 0
    }

    pub fn is_sanitized(&self) -> bool {
        self.sanitized.is_some()
    }

    fn check_window(&self, t: usize) -> Result<()> {
        if t >= self.windows {
            return Err(Error::WindowOutOfRange {
                t,
                len: self.windows,
            });
        }
        Ok(())
    }

    /// Raw selections of window `t`, indexed like the grid.
    pub fn cells(&self, t: usize) -> Result<&[Option<EmulatedCell>]> {
        self.check_window(t)?;
        let g = self.grid.len();
        Ok(&self.cells[t * g..(t + 1) * g])
    }

    pub fn cell(&self, t: usize, v: u32) -> Result<Option<EmulatedCell>> {
        let i = self.grid.index_of(v).ok_or(Error::TargetNotOnGrid(v))?;
        Ok(self.cells(t)?[i])
    }

    /// Sanitized demand of window `t`, indexed like the grid.
    pub fn demand_row(&self, t: usize) -> Result<&[f64]> {
        self.check_window(t)?;
        let demand = self
            .sanitized
            .as_ref()
            .ok_or_else(|| Error::Unsanitized(self.session_id.clone()))?;
        let g = self.grid.len();
        Ok(&demand[t * g..(t + 1) * g])
    }

    /// Rate needed in window `t` to reach target `v` (`+inf` if unreachable).
    pub fn demand(&self, t: usize, v: u32) -> Result<f64> {
        let i = self.grid.index_of(v).ok_or(Error::TargetNotOnGrid(v))?;
        Ok(self.demand_row(t)?[i])
    }

    /// Highest grid target whose demand in window `t` fits in `rate_budget`, or 0.
    pub fn achievable_vmaf(&self, t: usize, rate_budget: f64) -> Result<u32> {
        let row = self.demand_row(t)?;
        Ok(achievable_index(row, rate_budget).map_or(0, |i| self.grid.targets()[i]))
    }
}

/// Index of the highest target in a non-decreasing demand row that fits `rate_budget`.
pub fn achievable_index(row: &[f64], rate_budget: f64) -> Option<usize> {
    row.partition_point(|&d| d <= rate_budget).checked_sub(1)
}

/// Convenience: emulate and sanitize in one step.
pub fn emulate_session(
    session_id: impl Into<String>,
    ladder: LadderView<'_>,
    grid: &TargetGrid,
) -> Result<TargetVmafTrace> {
    emulate_target_vmaf(session_id, ladder, grid).map(sanitize_demand)
}

/// Long-term average demand per target.
#[derive(Clone, Debug, PartialEq)]
pub struct AvgScc {
    pub label: String,
    pub grid: TargetGrid,
    /// `None` where the target is unreachable in every window.
    pub avg_rate_bps: Vec<Option<f64>>,
}

impl AvgScc {
    /// Demand row usable by allocators; unreachable targets become `+inf`.
    pub fn demand_row(&self) -> Vec<f64> {
        self.avg_rate_bps
            .iter()
            .map(|r| r.unwrap_or(f64::INFINITY))
            .collect()
    }
}

/// Averages sanitized demand over every window of every trace.
///
/// Windows where a target is unreachable are left out of that target's mean.
/// Because such exclusions can make the mean dip at high targets, the result
/// is lifted to its running maximum so it stays non-decreasing.
pub fn average_scc(traces: &[&TargetVmafTrace], label: impl Into<String>) -> Result<AvgScc> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidInput("average_scc needs at least one trace".into()))?;
    let grid = first.grid().clone();
    let g = grid.len();
    let mut sums = vec![0.0f64; g];
    let mut counts = vec![0usize; g];
    for trace in traces {
        if trace.grid() != &grid {
            return Err(Error::GridMismatch {
                first: first.session_id().to_string(),
                other: trace.session_id().to_string(),
            });
        }
        for t in 0..trace.len() {
            for (i, &d) in trace.demand_row(t)?.iter().enumerate() {
                if d.is_finite() {
                    sums[i] += d;
                    counts[i] += 1;
                }
            }
        }
    }
    let mut running = 0.0f64;
    let mut unreachable = false;
    let avg_rate_bps = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| {
            if n == 0 || unreachable {
                unreachable = true;
                return None;
            }
            running = running.max(s / n as f64);
            Some(running)
        })
        .collect();
    Ok(AvgScc {
        label: label.into(),
        grid,
        avg_rate_bps,
    })
}

/// `session_id,window_index,target_vmaf,selected_crf,rate_bps,experienced_vmaf`;
/// unreachable cells are omitted.
pub fn write_target_trace_csv(trace: &TargetVmafTrace, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "session_id",
        "window_index",
        "target_vmaf",
        "selected_crf",
        "rate_bps",
        "experienced_vmaf",
    ])?;
    for t in 0..trace.len() {
        for (v, cell) in trace.grid().targets().iter().zip(trace.cells(t)?) {
            if let Some(c) = cell {
                w.write_record([
                    trace.session_id().to_string(),
                    t.to_string(),
                    v.to_string(),
                    c.crf.to_string(),
                    c.rate_bps.to_string(),
                    c.vmaf.to_string(),
                ])?;
            }
        }
    }
    w.flush()
        .map_err(|e| Error::io("<target trace output>", e))?;
    Ok(())
}

/// `label,target_vmaf,avg_rate_bps`; unreachable targets are omitted.
pub fn write_avg_scc_csv<'a>(
    sccs: impl IntoIterator<Item = &'a AvgScc>,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "target_vmaf", "avg_rate_bps"])?;
    for scc in sccs {
        for (v, r) in scc.grid.targets().iter().zip(&scc.avg_rate_bps) {
            if let Some(r) = r {
                w.write_record([scc.label.clone(), v.to_string(), r.to_string()])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<scc output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::LadderCell;

    fn cell(rate: f64, vmaf: f64) -> LadderCell {
        LadderCell {
            mean_rate_bps: rate,
            window_vmaf: vmaf,
        }
    }

    fn window() -> Vec<LadderCell> {
        vec![cell(2.0e6, 72.0), cell(1.6e6, 68.0), cell(1.1e6, 61.0)]
    }

    const CRFS: [u32; 3] = [30, 32, 35];

    #[test]
    fn selects_smallest_sufficient_vmaf() {
        let windows = vec![window()];
        let grid = TargetGrid::new(vec![65, 95]).unwrap();
        let tr = emulate_target_vmaf(
            "s",
            LadderView {
                crf_values: &CRFS,
                windows: &windows,
            },
            &grid,
        )
        .unwrap();
        assert_eq!(
            tr.cell(0, 65).unwrap(),
            Some(EmulatedCell {
                crf: 32,
                rate_bps: 1.6e6,
                vmaf: 68.0
            })
        );
        assert_eq!(tr.cell(0, 95).unwrap(), None);
    }

    #[test]
    fn tie_goes_to_higher_crf() {
        let windows = vec![vec![
            cell(2.0e6, 70.0),
            cell(1.5e6, 70.0),
            cell(1.1e6, 61.0),
        ]];
        let grid = TargetGrid::new(vec![65]).unwrap();
        let tr = emulate_target_vmaf(
            "s",
            LadderView {
                crf_values: &CRFS,
                windows: &windows,
            },
            &grid,
        )
        .unwrap();
        assert_eq!(tr.cell(0, 65).unwrap().unwrap().crf, 32);
    }

    #[test]
    fn target_equal_to_vmaf_is_reachable() {
        let windows = vec![window()];
        let grid = TargetGrid::new(vec![68, 72, 73]).unwrap();
        let tr = emulate_session(
            "s",
            LadderView {
                crf_values: &CRFS,
                windows: &windows,
            },
            &grid,
        )
        .unwrap();
        assert_eq!(tr.cell(0, 68).unwrap().unwrap().crf, 32);
        assert_eq!(tr.cell(0, 72).unwrap().unwrap().crf, 30);
        assert_eq!(tr.demand(0, 73).unwrap(), f64::INFINITY);
    }

    fn trace_from_raw(rows: &[Vec<Option<f64>>]) -> TargetVmafTrace {
        let g = rows[0].len();
        let grid = TargetGrid::range(50, 50 + g as u32 - 1).unwrap();
        let cells = rows
            .iter()
            .flatten()
            .map(|r| {
                r.map(|rate_bps| EmulatedCell {
                    crf: 30,
                    rate_bps,
                    vmaf: 99.0,
                })
            })
            .collect();
        TargetVmafTrace {
            session_id: "raw".into(),
            grid,
            windows: rows.len(),
            cells,
            sanitized: None,
        }
    }

    #[test]
    fn running_max_sanitization() {
        let tr = sanitize_demand(trace_from_raw(&[vec![Some(1.0), Some(0.9), Some(1.2)]]));
        assert_eq!(tr.demand_row(0).unwrap(), &[1.0, 1.0, 1.2]);
        assert_eq!(tr.demand(0, 51).unwrap(), 1.0);
    }

    #[test]
    fn monotone_input_unchanged() {
        let tr = sanitize_demand(trace_from_raw(&[vec![Some(1.0), Some(2.0), Some(3.0)]]));
        assert_eq!(tr.demand_row(0).unwrap(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn unreachable_tail_is_infinite() {
        let tr = sanitize_demand(trace_from_raw(&[vec![Some(1.0), None, None]]));
        assert_eq!(
            tr.demand_row(0).unwrap(),
            &[1.0, f64::INFINITY, f64::INFINITY]
        );
    }

    #[test]
    fn demand_errors() {
        let raw = trace_from_raw(&[vec![Some(1.0), Some(2.0)]]);
        assert!(matches!(raw.demand(0, 50), Err(Error::Unsanitized(_))));
        let tr = sanitize_demand(raw);
        assert!(matches!(
            tr.demand(1, 50),
            Err(Error::WindowOutOfRange { .. })
        ));
        assert!(matches!(tr.demand(0, 49), Err(Error::TargetNotOnGrid(49))));
    }

    #[test]
    fn achievable_boundaries() {
        let tr = sanitize_demand(trace_from_raw(&[vec![Some(1.0), Some(2.0), Some(3.0)]]));
        assert_eq!(tr.achievable_vmaf(0, 0.5).unwrap(), 0);
        assert_eq!(tr.achievable_vmaf(0, 2.0).unwrap(), 51);
        assert_eq!(tr.achievable_vmaf(0, 2.5).unwrap(), 51);
        assert_eq!(tr.achievable_vmaf(0, 1e9).unwrap(), 52);
    }

    #[test]
    fn averages() {
        let tr = sanitize_demand(trace_from_raw(&[
            vec![Some(1.0e6), Some(2.0e6)],
            vec![Some(3.0e6), None],
        ]));
        let scc = average_scc(&[&tr], "x").unwrap();
        assert_eq!(scc.avg_rate_bps, vec![Some(2.0e6), Some(2.0e6)]);
        let single = sanitize_demand(trace_from_raw(&[vec![Some(1.0e6), Some(2.0e6)]]));
        let scc = average_scc(&[&single], "y").unwrap();
        assert_eq!(scc.avg_rate_bps, vec![Some(1.0e6), Some(2.0e6)]);
        let never = sanitize_demand(trace_from_raw(&[vec![Some(1.0e6), None]]));
        assert_eq!(
            average_scc(&[&never], "z").unwrap().avg_rate_bps,
            vec![Some(1.0e6), None]
        );
    }

    #[test]
    fn average_scc_rejects_grid_mismatch() {
        let a = sanitize_demand(trace_from_raw(&[vec![Some(1.0), Some(2.0)]]));
        let b = sanitize_demand(trace_from_raw(&[vec![Some(1.0), Some(2.0), Some(3.0)]]));
        assert!(matches!(
            average_scc(&[&a, &b], "m"),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(TargetGrid::new(vec![]).is_err());
        assert!(TargetGrid::new(vec![0, 5]).is_err());
    }
}
