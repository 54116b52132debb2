//! Compact list syntax for command-line grids.
//!
//! Items are comma separated; each item is a value or an inclusive range
//! `lo..hi` (integers, unit step) or `lo..hi:step`. Floats accept `pi`, `pi/2`
//! and similar.

use std::f64::consts::PI;

use anyhow::{anyhow, bail, Context, Result};

pub fn parse_f64(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("pi") {
        if rest.is_empty() {
            return Ok(PI);
        }
        let d: f64 = rest
            .strip_prefix('/')
            .ok_or_else(|| anyhow!("cannot parse {s:?}"))?
            .parse()
            .with_context(|| format!("cannot parse {s:?}"))?;
        return Ok(PI / d);
    }
    s.parse().with_context(|| format!("cannot parse {s:?} as a number"))
}

fn split_range(item: &str) -> Option<(&str, &str, Option<&str>)> {
    let (lo, rest) = item.split_once("..")?;
    match rest.split_once(':') {
        Some((hi, step)) => Some((lo, hi, Some(step))),
        None => Some((lo, rest, None)),
    }
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        match split_range(item) {
            None => out.push(parse_f64(item)?),
            Some((lo, hi, step)) => {
                let (lo, hi) = (parse_f64(lo)?, parse_f64(hi)?);
                let step = parse_f64(step.ok_or_else(|| anyhow!("float range {item:?} needs a step"))?)?;
                if !(step > 0.0) || hi < lo {
                    bail!("invalid range {item:?}");
                }
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                out.extend((0..=n).map(|k| lo + step * k as f64));
            }
        }
    }
    if out.is_empty() {
        bail!("empty list {s:?}");
    }
    Ok(out)
}

pub fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let int = |x: &str| x.trim().parse::<u64>().with_context(|| format!("cannot parse {x:?} as an integer"));
        match split_range(item) {
            None => out.push(int(item)?),
            Some((lo, hi, step)) => {
                let (lo, hi) = (int(lo)?, int(hi)?);
                let step = step.map(int).transpose()?.unwrap_or(1);
                if step == 0 || hi < lo {
                    bail!("invalid range {item:?}");
                }
                out.extend((lo..=hi).step_by(step as usize));
            }
        }
    }
    if out.is_empty() {
        bail!("empty list {s:?}");
    }
    Ok(out)
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    Ok(parse_u64_list(s)?.into_iter().map(|v| v as usize).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_ranges_are_inclusive() {
        assert_eq!(parse_u64_list("0..9").unwrap(), (0..=9).collect::<Vec<_>>());
        assert_eq!(parse_usize_list("4..12:2").unwrap(), vec![4, 6, 8, 10, 12]);
        assert_eq!(parse_usize_list("3, 5,8").unwrap(), vec![3, 5, 8]);
    }

    #[test]
    fn float_lists() {
        let g = parse_f64_list("0.3,0.5,1.0,pi/2").unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[3] - PI / 2.0).abs() < 1e-15);
        let s = parse_f64_list("-0.02..0.2:0.002").unwrap();
        assert_eq!(s.len(), 111);
        assert!((s[110] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_f64_list("a").is_err());
        assert!(parse_u64_list("5..1").is_err());
        assert!(parse_f64_list("0..1").is_err());
    }
}
