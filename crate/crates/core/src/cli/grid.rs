//! Grid syntax: `start:stop:step` (stop included when it lies on the grid) or
//! a comma-separated list.

use crate::error::{Error, Result};

fn parse_num<V: std::str::FromStr>(s: &str, spec: &str) -> Result<V> {
    s.trim()
        .parse()
        .map_err(|_| Error::Grid(format!("{spec:?}: cannot parse {s:?}")))
}

/// Parses an integer grid such as `4:140:8` or `5,10,20`.
pub fn parse_usize_grid(spec: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (usize, usize, usize) =
                (parse_num(start, spec)?, parse_num(stop, spec)?, parse_num(step, spec)?);
            if step == 0 || stop < start {
                return Err(Error::Grid(format!("{spec:?}: need step > 0 and start <= stop")));
            }
            (start..=stop).step_by(step).collect()
        }
        [_] => spec
            .split(',')
            .map(|v| parse_num(v, spec))
            .collect::<Result<Vec<usize>>>()?,
        _ => {
            return Err(Error::Grid(format!(
                "{spec:?}: expected start:stop:step or a comma list"
            )))
        }
    };
    Ok(grid)
}

/// Parses a real grid such as `0.1:1:0.05` or `0.2,0.36,0.5`.
///
/// Range points are `start + i * step`, rounded to 12 significant digits so
/// that `0.1:0.3:0.1` yields `0.1, 0.2, 0.3` rather than accumulated drift.
pub fn parse_f64_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) =
                (parse_num(start, spec)?, parse_num(stop, spec)?, parse_num(step, spec)?);
            if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
                return Err(Error::Grid(format!("{spec:?}: need step > 0 and start <= stop")));
            }
            let count = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(Error::Grid(format!("{spec:?}: more than 10^6 points")));
            }
            (0..count)
                .map(|i| {
                    let v = start + i as f64 * step;
                    format!("{v:.11e}").parse().expect("formatted float reparses")
                })
                .collect()
        }
        [_] => spec
            .split(',')
            .map(|v| parse_num(v, spec))
            .collect::<Result<Vec<f64>>>()?,
        _ => {
            return Err(Error::Grid(format!(
                "{spec:?}: expected start:stop:step or a comma list"
            )))
        }
    };
    Ok(grid)
}
