//! Parsing of sweep values: a single number, a comma list, or `A:B:K`.

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !v.is_finite() {
        return Err(format!("not a finite number: {s:?}"));
    }
    Ok(v)
}

/// `A:B:K` gives `K` points from `A` to `B` inclusive; anything else is a
/// comma-separated list kept in the given order.
pub fn parse_values(text: &str, scale: Scale) -> Result<Vec<f64>, String> {
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, steps] = parts[..] else {
            return Err(format!("range must be START:STOP:STEPS, got {text:?}"));
        };
        let (start, stop) = (number(start)?, number(stop)?);
        let steps: usize = steps
            .trim()
            .parse()
            .map_err(|_| format!("step count must be an integer, got {steps:?}"))?;
        if steps < 2 {
            return Err(format!("a range needs at least 2 steps, got {steps}"));
        }
        if !(start < stop) {
            return Err(format!("range start {start} must be below stop {stop}"));
        }
        let last = (steps - 1) as f64;
        Ok(match scale {
            Scale::Linear => (0..steps).map(|i| start + (stop - start) * i as f64 / last).collect(),
            Scale::Log => {
                if start <= 0.0 {
                    return Err(format!("log-scaled range needs a positive start, got {start}"));
                }
                let (a, b) = (start.log10(), stop.log10());
                (0..steps)
                    .map(|i| match i {
                        0 => start,
                        i if i == steps - 1 => stop,
                        i => 10f64.powf(a + (b - a) * i as f64 / last),
                    })
                    .collect()
            }
        })
    } else {
        text.split(',').map(number).collect()
    }
}

/// Atom numbers: positive integers up to 1e15, rounded from the sweep values.
pub fn parse_atom_numbers(text: &str, scale: Scale) -> Result<Vec<u64>, String> {
    parse_values(text, scale)?
        .into_iter()
        .map(|v| {
            let n = v.round();
            if !(1.0..=1e15).contains(&n) {
                return Err(format!("atom numbers must lie in [1, 1e15], got {v}"));
            }
            if text.contains(':') || (v - n).abs() <= 1e-9 * n {
                Ok(n as u64)
            } else {
                Err(format!("atom number must be an integer, got {v}"))
            }
        })
        .collect()
}
