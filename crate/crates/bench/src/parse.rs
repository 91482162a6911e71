//! Command-line value syntax: `start:stop:step` ranges and 1-D normal mixtures
//! such as `0.8:N(1,1),0.2:N(10,1)`.

use robust_gan::numkit::Rng;
use robust_gan::{Error, Result};

fn number(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("{what}: `{s}` is not a number")))
}

/// Inclusive range `start:stop:step`, or a comma list, or a single value.
/// Points are `start + k·step`, rounded to 12 decimals so that `0.05:0.2:0.05`
/// yields `0.15` rather than `0.15000000000000002`.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(|v| number(v, "range value")).collect(),
        [a, b, step] => {
            let (a, b, step) = (
                number(a, "range start")?,
                number(b, "range stop")?,
                number(step, "range step")?,
            );
            if !(step > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                return Err(Error::Parse(format!("range `{s}` needs start <= stop and step > 0")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count)
                .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        _ => Err(Error::Parse(format!("range `{s}` must be start:stop:step"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Weights must be positive and sum to 1 (within 1e-9).
pub fn parse_mixture(s: &str) -> Result<Vec<NormalComponent>> {
    let bad = |msg: String| Error::Parse(format!("mixture `{s}`: {msg}"));
    let mut out = Vec::new();
    // Split on commas outside parentheses.
    let mut depth = 0usize;
    let mut start = 0;
    let mut pieces = Vec::new();
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                pieces.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push(&s[start..]);
    for piece in pieces {
        let (w, law) = piece
            .split_once(':')
            .ok_or_else(|| bad(format!("component `{piece}` needs weight:N(mean,sd)")))?;
        let law = law.trim();
        let inner = law
            .strip_prefix("N(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| bad(format!("law `{law}` must be N(mean,sd)")))?;
        let (m, sd) = inner
            .split_once(',')
            .ok_or_else(|| bad(format!("law `{law}` must be N(mean,sd)")))?;
        let c = NormalComponent {
            weight: number(w, "mixture weight")?,
            mean: number(m, "mixture mean")?,
            sd: number(sd, "mixture sd")?,
        };
        if !(c.weight > 0.0) || !(c.sd > 0.0) {
            return Err(bad("weights and sds must be positive".into()));
        }
        out.push(c);
    }
    let total: f64 = out.iter().map(|c| c.weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(bad(format!("weights sum to {total}")));
    }
    Ok(out)
}

/// `n` draws; each picks its component by one uniform, then one normal.
pub fn sample_mixture(mix: &[NormalComponent], n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u = rng.uniform();
            let mut acc = 0.0;
            let mut chosen = mix[mix.len() - 1];
            for c in mix {
                acc += c.weight;
                if u < acc {
                    chosen = *c;
                    break;
                }
            }
            rng.normal(chosen.mean, chosen.sd)
        })
        .collect()
}
