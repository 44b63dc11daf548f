//! Greedy maximum-utility allocation.
//!
//! Sessions start unadmitted. Each round the session with the highest marginal
//! utility (lowest index on ties) takes its next step: admission at the lowest
//! target `>= v_min`, then one grid step at a time up to the highest target
//! `<= v_max`. The loop ends when no session has positive marginal utility
//! left, or when the chosen step does not fit in the remaining capacity.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Allocation, AllocationInput, SessionShare};
use crate::error::{Error, Result};

/// What to do when the session with the best marginal utility cannot afford its step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum BreakRule {
    /// Stop allocating altogether.
    #[default]
    Break,
    /// Freeze that session and keep serving the others.
    Skip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No session had positive marginal utility left.
    Saturated,
    /// The best step did not fit and the break rule stopped the loop.
    CapacityBreak,
    /// Skip rule: every session is either saturated or frozen.
    CapacityLimited,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    pub allocation: Allocation,
    pub stop: StopReason,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    marginal: f64,
    session: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // max-heap: highest marginal first, then lowest session index
    fn cmp(&self, other: &Self) -> Ordering {
        self.marginal
            .total_cmp(&other.marginal)
            .then_with(|| other.session.cmp(&self.session))
    }
}

#[derive(Clone, Copy, Debug)]
struct State {
    level: Option<usize>,
    next: usize,
    rate: f64,
}

/// Whether session `s` may move to `r_next`, given `slack = remaining - dr`.
///
/// Away from the boundary the running remainder decides. Within rounding
/// distance of it the rates are summed in session order, the same sum the
/// feasibility invariant and the exhaustive oracle use.
fn fits(states: &[State], s: usize, r_next: f64, slack: f64, capacity: f64, steps: usize) -> bool {
    let margin = (steps + states.len() + 2) as f64 * f64::EPSILON * capacity;
    if slack > margin {
        return true;
    }
    let total: f64 = states
        .iter()
        .enumerate()
        .map(|(i, st)| if i == s { r_next } else { st.rate })
        .sum();
    total <= capacity
}

pub fn run_greedy(input: &AllocationInput<'_>, rule: BreakRule) -> Result<GreedyOutcome> {
    input.validate()?;
    let (lo, hi) = input.utility_levels()?;
    let targets = input.grid.targets();
    let curve = input.curve;

    let mut states = vec![
        State {
            level: None,
            next: lo,
            rate: 0.0,
        };
        input.demands.len()
    ];
    let mut heap = BinaryHeap::with_capacity(states.len());
    for (s, demand) in input.demands.iter().enumerate() {
        let marginal = curve.marginal_utility(0, targets[lo], 0.0, demand[lo])?;
        heap.push(Candidate {
            marginal,
            session: s,
        });
    }

    let mut remaining = input.capacity_bps;
    let mut steps = 0;
    let mut skipped = false;
    let stop = loop {
        let Some(best) = heap.pop() else {
            break if skipped {
                StopReason::CapacityLimited
            } else {
                StopReason::Saturated
            };
        };
        if best.marginal == 0.0 {
            break if skipped {
                StopReason::CapacityLimited
            } else {
                StopReason::Saturated
            };
        }
        let s = best.session;
        let demand = input.demands[s];
        let r_next = demand[states[s].next];
        let dr = r_next - states[s].rate;
        if dr < 0.0 {
            return Err(Error::NegativeRateStep {
                r_from: states[s].rate,
                r_to: r_next,
            });
        }
        if !fits(
            &states,
            s,
            r_next,
            remaining - dr,
            input.capacity_bps,
            steps,
        ) {
            match rule {
                BreakRule::Break => break StopReason::CapacityBreak,
                BreakRule::Skip => {
                    skipped = true;
                    continue;
                }
            }
        }
        remaining -= dr;
        let state = &mut states[s];
        state.level = Some(state.next);
        state.rate = r_next;
        state.next += 1;
        steps += 1;
        let marginal = if state.next > hi {
            0.0
        } else {
            let cur = state.next - 1;
            curve.marginal_utility(
                targets[cur],
                targets[state.next],
                demand[cur],
                demand[state.next],
            )?
        };
        heap.push(Candidate {
            marginal,
            session: s,
        });
    };

    let shares: Vec<SessionShare> = states
        .iter()
        .map(|st| match st.level {
            Some(l) => SessionShare {
                target: targets[l],
                rate_bps: st.rate,
            },
            None => SessionShare::NONE,
        })
        .collect();
    Ok(GreedyOutcome {
        allocation: Allocation::from_shares(shares, input.capacity_bps, curve),
        stop,
        steps,
    })
}

/// Greedy allocation with the break rule.
pub fn allocate_max_utility(input: &AllocationInput<'_>) -> Result<Allocation> {
    run_greedy(input, BreakRule::Break).map(|o| o.allocation)
}
