//! Exhaustive maximum-utility search, used to validate the greedy allocator.

use super::{Allocation, AllocationInput, SessionShare};
use crate::error::{Error, Result};

/// Upper bound on the number of assignments the exhaustive search will visit.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// Enumerates every assignment of each session to `0` or one of its
/// candidate targets and returns a feasible one with maximal total utility.
///
/// `candidates[s]` lists grid targets for session `s`; `None` uses every grid
/// target within `[v_min, v_max]` for all sessions. Assignments are visited in
/// lexicographic order of the target vector and only a strictly better one
/// replaces the incumbent, so ties resolve to the lexicographically smallest.
pub fn brute_force_max_utility(
    input: &AllocationInput<'_>,
    candidates: Option<&[Vec<u32>]>,
) -> Result<Allocation> {
    input.validate()?;
    let n = input.demands.len();

    // per session: (target, grid index) options, with "not admitted" first
    let options: Vec<Vec<Option<(u32, usize)>>> = match candidates {
        Some(sets) => {
            if sets.len() != n {
                return Err(Error::InvalidInput(format!(
                    "{} candidate sets for {n} sessions",
                    sets.len()
                )));
            }
            sets.iter()
                .map(|set| {
                    let mut set = set.clone();
                    set.sort_unstable();
                    set.dedup();
                    let mut opts = vec![None];
                    for v in set.into_iter().filter(|&v| v != 0) {
                        let i = input.grid.index_of(v).ok_or(Error::TargetNotOnGrid(v))?;
                        opts.push(Some((v, i)));
                    }
                    Ok(opts)
                })
                .collect::<Result<_>>()?
        }
        None => {
            let (lo, hi) = input.utility_levels()?;
            let opts: Vec<_> = std::iter::once(None)
                .chain((lo..=hi).map(|i| Some((input.grid.targets()[i], i))))
                .collect();
            vec![opts; n]
        }
    };

    let size = options
        .iter()
        .try_fold(1u128, |acc, o| acc.checked_mul(o.len() as u128))
        .unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let utility = |o: Option<(u32, usize)>| o.map_or(0.0, |(v, _)| input.curve.utility(v as f64));
    let rate = |s: usize, o: Option<(u32, usize)>| o.map_or(0.0, |(_, i)| input.demands[s][i]);

    let mut digits = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let used: f64 = (0..n).map(|s| rate(s, options[s][digits[s]])).sum();
        if used <= input.capacity_bps {
            let total: f64 = (0..n).map(|s| utility(options[s][digits[s]])).sum();
            if best.as_ref().is_none_or(|(u, _)| total > *u) {
                best = Some((total, digits.clone()));
            }
        }
        // odometer increment, last session fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < options[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
        if digits.iter().all(|&d| d == 0) {
            break;
        }
    }

    // the all-zero assignment is always feasible
    let (_, digits) = best.expect("empty assignment is feasible");
    let shares = digits
        .iter()
        .enumerate()
        .map(|(s, &d)| match options[s][d] {
            Some((target, i)) => SessionShare {
                target,
                rate_bps: input.demands[s][i],
            },
            None => SessionShare::NONE,
        })
        .collect();
    Ok(Allocation::from_shares(
        shares,
        input.capacity_bps,
        input.curve,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::emulation::TargetGrid;
    use crate::utility::UtilityCurve;

    fn oracle(c: f64, rows: &[Vec<f64>], grid: &TargetGrid) -> Allocation {
        let curve = UtilityCurve::default();
        let input = AllocationInput {
            capacity_bps: c,
            grid,
            curve: &curve,
            demands: rows.iter().map(Vec::as_slice).collect(),
        };
        brute_force_max_utility(&input, None).unwrap()
    }

    #[test]
    fn worked_examples() {
        let grid = coarse_grid();
        let a = oracle(5.0 * MBPS, &two_sessions(), &grid);
        assert_eq!(a.total_utility, 240.0);
        assert_eq!(a.targets(), vec![70, 70]);
        let b = oracle(2.5 * MBPS, &two_sessions(), &grid);
        assert_eq!(b.total_utility, 120.0);
        assert_eq!(b.targets(), vec![70, 0]);
        let z = oracle(0.0, &two_sessions(), &grid);
        assert_eq!(z.targets(), vec![0, 0]);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let grid = TargetGrid::new(vec![50]).unwrap();
        let rows = vec![vec![1.0], vec![1.0]];
        assert_eq!(oracle(1.0, &rows, &grid).targets(), vec![0, 50]);
    }

    #[test]
    fn explicit_candidates() {
        let grid = coarse_grid();
        let curve = UtilityCurve::default();
        let rows = two_sessions();
        let input = AllocationInput {
            capacity_bps: 10.0 * MBPS,
            grid: &grid,
            curve: &curve,
            demands: rows.iter().map(Vec::as_slice).collect(),
        };
        let a = brute_force_max_utility(&input, Some(&[vec![50], vec![70]])).unwrap();
        assert_eq!(a.targets(), vec![50, 70]);
        assert!(brute_force_max_utility(&input, Some(&[vec![55], vec![70]])).is_err());
    }

    #[test]
    fn guard() {
        let grid = TargetGrid::range(50, 90).unwrap();
        let rows = vec![vec![1.0; 41]; 5];
        let curve = UtilityCurve::default();
        let input = AllocationInput {
            capacity_bps: 1.0,
            grid: &grid,
            curve: &curve,
            demands: rows.iter().map(Vec::as_slice).collect(),
        };
        let err = brute_force_max_utility(&input, None).unwrap_err();
        assert!(matches!(err, Error::SearchSpaceTooLarge { .. }));
        assert!(err.to_string().contains("smaller instance"));
    }
}
