//! Sweep syntax shared by the numeric flags: `v`, `a,b,c` or `start:step:stop`.

use crate::{usage, CliError};

/// Parses a sweep. Ranges are inclusive of `stop` (to within a millionth of
/// a step) and are generated as `start + i·step` so values do not drift.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(usage("empty value list"));
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(parse_number).collect(),
        [start, step, stop] => {
            let (start, step, stop) = (parse_number(start)?, parse_number(step)?, parse_number(stop)?);
            if step == 0.0 || (stop - start) * step < 0.0 {
                return Err(usage(format!("range {text} is empty or never terminates")));
            }
            let count = ((stop - start) / step + 1e-6).floor() as usize + 1;
            if count > 100_000 {
                return Err(usage(format!("range {text} has {count} points")));
            }
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(usage(format!("cannot parse '{text}': expected v, a,b,c or start:step:stop"))),
    }
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| usage(format!("'{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(usage(format!("'{s}' is not finite")));
    }
    Ok(v)
}

/// Integer-valued sweep (port counts, user counts).
pub fn parse_count_grid(text: &str) -> Result<Vec<u64>, CliError> {
    parse_grid(text)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
                Ok(v as u64)
            } else {
                Err(usage(format!("{v} is not a positive integer")))
            }
        })
        .collect()
}
