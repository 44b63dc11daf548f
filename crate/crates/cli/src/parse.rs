//! Value parsers shared by flags and config keys.

use anyhow::{anyhow, bail, Result};
use qoetm_core::{capacity_range, BreakRule, Method, TargetGrid};

/// Bits per second: `50000000`, `50e6`, or megabits with an `M` suffix (`50M`).
pub fn parse_rate(s: &str) -> Result<f64> {
    let s = s.trim();
    let (num, scale) = match s.strip_suffix(['M', 'm']) {
        Some(head) => (head, 1e6),
        None => (s, 1.0),
    };
    let v: f64 = num
        .parse()
        .map_err(|_| anyhow!("invalid rate {s:?}; expected e.g. 50e6 or 50M"))?;
    let v = v * scale;
    if !(v > 0.0 && v.is_finite()) {
        bail!("rate {s:?} must be positive");
    }
    Ok(v)
}

/// A single rate, or an inclusive `start:stop:step` range of rates.
pub fn parse_caps(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![parse_rate(one)?]),
        [a, b, step] => Ok(capacity_range(
            parse_rate(a)?,
            parse_rate(b)?,
            parse_rate(step)?,
        )?),
        _ => bail!("invalid capacity {s:?}; expected RATE or START:STOP:STEP"),
    }
}

/// `lo:hi` (inclusive) or a comma-separated list of integer targets.
pub fn parse_targets(s: &str) -> Result<TargetGrid> {
    let int = |x: &str| {
        x.trim()
            .parse::<u32>()
            .map_err(|_| anyhow!("invalid target {x:?} in {s:?}"))
    };
    let grid = match s.split_once(':') {
        Some((lo, hi)) => TargetGrid::range(int(lo)?, int(hi)?)?,
        None => TargetGrid::new(s.split(',').map(int).collect::<Result<_>>()?)?,
    };
    Ok(grid)
}

/// `all` or a comma-separated list of method names.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    if s.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    let mut out = Vec::new();
    for name in s.split(',') {
        let m: Method = name.parse().map_err(|e: String| anyhow!(e))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

pub fn parse_mode(s: &str) -> Result<BreakRule> {
    match s.trim() {
        "break" => Ok(BreakRule::Break),
        "skip" => Ok(BreakRule::Skip),
        other => bail!("invalid mode {other:?}; expected break or skip"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        assert_eq!(parse_rate("50e6").unwrap(), 50e6);
        assert_eq!(parse_rate("50M").unwrap(), 50e6);
        assert_eq!(parse_rate("2.5M").unwrap(), 2.5e6);
        assert_eq!(parse_rate("1200000").unwrap(), 1.2e6);
        assert!(parse_rate("fast").is_err());
        assert!(parse_rate("-5M").is_err());
        assert!(parse_rate("0").is_err());
    }

    #[test]
    fn caps() {
        assert_eq!(parse_caps("10e6:100e6:1e6").unwrap().len(), 91);
        assert_eq!(parse_caps("10M:12M:1M").unwrap(), vec![10e6, 11e6, 12e6]);
        assert_eq!(parse_caps("50e6").unwrap(), vec![50e6]);
        assert!(parse_caps("1:2").is_err());
    }

    #[test]
    fn targets() {
        assert_eq!(parse_targets("10:95").unwrap().len(), 86);
        assert_eq!(parse_targets("90,50,70").unwrap().targets(), &[50, 70, 90]);
        assert!(parse_targets("0:10").is_err());
        assert!(parse_targets("a:b").is_err());
    }

    #[test]
    fn methods() {
        assert_eq!(parse_methods("all").unwrap().len(), 5);
        assert_eq!(
            parse_methods("max-utility,rate_fair").unwrap(),
            vec![Method::MaxUtility, Method::RateFair]
        );
        assert!(parse_methods("best").is_err());
        assert_eq!(parse_mode("skip").unwrap(), BreakRule::Skip);
        assert!(parse_mode("stop").is_err());
    }
}
