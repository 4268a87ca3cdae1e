use std::f64::consts::PI;

use crate::usage;

/// Parses a number or a multiple of π: `0.5`, `pi`, `-pi/8`, `3pi/4`.
pub fn angle(text: &str) -> anyhow::Result<f64> {
    let t = text.trim();
    let bad = || usage(format!("cannot parse angle '{text}'"));
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t),
    };
    let Some(pos) = body.find("pi") else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let coeff = match &body[..pos] {
        "" => 1.0,
        c => c.trim_end_matches('*').parse::<f64>().map_err(|_| bad())?,
    };
    let divisor = match &body[pos + 2..] {
        "" => 1.0,
        d => d.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    if divisor == 0.0 {
        return Err(bad());
    }
    Ok(sign * coeff * PI / divisor)
}

pub fn numbers(text: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{what}: cannot parse '{s}' as a number")))
        })
        .collect()
}

pub fn keypoint(text: &str) -> anyhow::Result<(usize, usize)> {
    let bad = || usage(format!("keypoint '{text}' must be 'x,y' with non-negative integers"));
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    Ok((
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

/// Rotation set snapped to exact multiples of `step`; anything further than
/// 1e-6 rad from a multiple is rejected.
pub fn psis(text: &str, step: f64) -> anyhow::Result<Vec<f64>> {
    let mut out: Vec<f64> = Vec::new();
    for token in text.split(',') {
        let psi = angle(token)?;
        let k = (psi / step).round();
        if (psi - k * step).abs() > 1e-6 {
            return Err(usage(format!(
                "rotation {token} is not a multiple of the bank orientation step {step}"
            )));
        }
        let snapped = k * step;
        if !out.contains(&snapped) {
            out.push(snapped);
        }
    }
    Ok(out)
}
