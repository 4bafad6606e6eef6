//! `key = value` configuration files for the solver. Blank lines and text
//! after `#` are ignored; unknown keys are errors.

use crate::error::{Error, Result};
use crate::ripm::{IpmSettings, Mode};

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: bad value `{value}` for `{key}`")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("line {line}: `{key}` expects true or false, got `{value}`"))),
    }
}

pub fn parse_mode(value: &str) -> Result<Mode> {
    match value {
        "paper" => Ok(Mode::Paper),
        "practical" => Ok(Mode::Practical),
        _ => Err(Error::Config(format!("unknown mode `{value}` (expected paper or practical)"))),
    }
}

/// Applies the assignments in `text` on top of `base`. Setting `mode`
/// does not reset other keys.
pub fn parse_config(text: &str, base: IpmSettings) -> Result<IpmSettings> {
    let mut s = base;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "mode" => s.mode = parse_mode(value).map_err(|e| Error::Config(format!("line {line}: {e}")))?,
            "alpha" => s.alpha = Some(parse_num(line, key, value)?),
            "lambda" => s.lambda = Some(parse_num(line, key, value)?),
            "eps_bar" => s.eps_bar = Some(parse_num(line, key, value)?),
            "eps_p_factor" => s.eps_p_factor = parse_num(line, key, value)?,
            "t_rate" => s.t_rate = Some(parse_num(line, key, value)?),
            "restart_stride" => s.restart_stride = Some(parse_num(line, key, value)?),
            "sparsify" => s.sparsify = parse_bool(line, key, value)?,
            "dense_mirror" => s.dense_mirror = parse_bool(line, key, value)?,
            "seed" => s.seed = parse_num(line, key, value)?,
            "max_iterations" => s.max_iterations = parse_num(line, key, value)?,
            _ => return Err(Error::Config(format!("line {line}: unknown key `{key}`"))),
        }
    }
    for (name, v) in [("alpha", s.alpha), ("lambda", s.lambda), ("eps_bar", s.eps_bar), ("t_rate", s.t_rate)] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("`{name}` must be positive, got {v}")));
            }
        }
    }
    if !(s.eps_p_factor.is_finite() && s.eps_p_factor > 0.0) {
        return Err(Error::Config(format!("`eps_p_factor` must be positive, got {}", s.eps_p_factor)));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# solver\nmode = paper\nalpha = 0.5  # step\nlambda=3\neps_bar = 0.01\n\
                    eps_p_factor = 0.2\nt_rate = 2\nrestart_stride = 7\nsparsify = true\n\
                    dense_mirror = no\nseed = 42\nmax_iterations = 100\n";
        let s = parse_config(text, IpmSettings::default()).unwrap();
        assert_eq!(s.mode, Mode::Paper);
        assert_eq!(s.alpha, Some(0.5));
        assert_eq!(s.lambda, Some(3.0));
        assert_eq!(s.eps_bar, Some(0.01));
        assert_eq!(s.eps_p_factor, 0.2);
        assert_eq!(s.t_rate, Some(2.0));
        assert_eq!(s.restart_stride, Some(7.0));
        assert!(s.sparsify && !s.dense_mirror);
        assert_eq!((s.seed, s.max_iterations), (42, 100));
    }

    #[test]
    fn empty_keeps_base() {
        let s = parse_config("\n  # nothing\n", IpmSettings::default()).unwrap();
        assert_eq!(s.mode, Mode::Practical);
        assert_eq!(s.alpha, None);
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["alpha", "colour = red", "alpha = x", "alpha = -1", "sparsify = maybe", "mode = fast"] {
            let err = parse_config(text, IpmSettings::default()).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{text}");
        }
    }
}
