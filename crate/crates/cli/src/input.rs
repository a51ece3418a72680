use std::path::{Path, PathBuf};

use mulab::averaging::{AvgKind, IntervalScheme};
use mulab::seqgen::{cache, materialize, MultFuncKind, MultFuncSpec, SequenceBlock, SequenceSpec, SyntheticSpec};
use mulab::MulabError;

use crate::args::{Avg, Range};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag value, detected before any computation (exit 2).
    Config { field: String, message: String },
    Lib(MulabError),
    Io(String),
    /// The computation ran but an inequality was violated (exit 1).
    Violated(String),
}

impl From<MulabError> for CliError {
    fn from(e: MulabError) -> Self {
        CliError::Lib(e)
    }
}

pub fn config_err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.into(), message: message.into() }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// A nonnegative integer, also accepting exact scientific notation (`1e6`).
pub fn parse_count(s: &str) -> Result<u64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = t.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(f >= 0.0) || f.fract() != 0.0 || f > 9.007_199_254_740_992e15 {
        return Err(format!("`{s}` is not a nonnegative integer below 2^53"));
    }
    Ok(f as u64)
}

pub fn parse_real_arg(s: &str) -> Result<f64, String> {
    mulab::nilseq::parse_real(s).map_err(|e| e.to_string())
}

/// The `--func` mini-language, or a JSON `SequenceSpec`.
pub fn parse_func(field: &str, s: &str, seed: u64) -> CliResult<SequenceSpec> {
    let bad = |m: &str| config_err(field, format!("`{s}`: {m}"));
    let t = s.trim();
    if t.starts_with('{') {
        let spec: SequenceSpec = serde_json::from_str(t).map_err(|e| bad(&e.to_string()))?;
        if let SequenceSpec::Mult(m) = &spec {
            m.validate().map_err(|e| bad(&e.to_string()))?;
        }
        return Ok(spec);
    }
    let mut parts = t.split(':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| bad(&format!("`{x}` is not a number")));
    let int = |x: &str| parse_count(x).map_err(|m| bad(&m));
    let arity = |n: usize| if rest.len() > n { Err(bad("too many `:` fields")) } else { Ok(()) };
    let spec: SequenceSpec = match head {
        "liouville" => {
            arity(0)?;
            MultFuncSpec::liouville().into()
        }
        "mobius" => {
            arity(0)?;
            MultFuncSpec::mobius().into()
        }
        "one" => {
            arity(0)?;
            MultFuncSpec::one().into()
        }
        "dirichlet" => {
            if rest.len() != 2 {
                return Err(bad("expected dirichlet:Q:I"));
            }
            let m = MultFuncSpec::dirichlet(int(rest[0])?, int(rest[1])?);
            m.validate().map_err(|e| bad(&e.to_string()))?;
            m.into()
        }
        "constant" => {
            arity(2)?;
            let re = rest.first().map(|x| num(x)).transpose()?.unwrap_or(1.0);
            let im = rest.get(1).map(|x| num(x)).transpose()?.unwrap_or(0.0);
            if (re * re + im * im).sqrt() > 1.0 + 1e-12 {
                return Err(bad("constant must have modulus at most 1"));
            }
            SyntheticSpec::Constant { re, im }.into()
        }
        "alternating" => {
            arity(0)?;
            SyntheticSpec::Alternating.into()
        }
        "poly" => {
            if rest.len() != 1 {
                return Err(bad("expected poly:C0,C1,..."));
            }
            let coeffs = rest[0].split(',').map(num).collect::<CliResult<Vec<f64>>>()?;
            SyntheticSpec::PolyPhase { coeffs }.into()
        }
        "block_sign_a" => {
            arity(0)?;
            SyntheticSpec::BlockSignA.into()
        }
        "block_sign_b" => {
            arity(0)?;
            SyntheticSpec::BlockSignB.into()
        }
        "random" => {
            arity(1)?;
            let seed = rest.first().map(|x| int(x)).transpose()?.unwrap_or(seed);
            SyntheticSpec::Random { seed }.into()
        }
        _ => return Err(bad("unknown sequence")),
    };
    Ok(spec)
}

pub fn parse_mult(field: &str, s: &str) -> CliResult<MultFuncSpec> {
    match parse_func(field, s, 0)? {
        SequenceSpec::Mult(m) => Ok(m),
        SequenceSpec::Synthetic(_) => Err(config_err(field, format!("`{s}` is not a multiplicative function"))),
    }
}

pub fn kind(avg: Avg) -> AvgKind {
    match avg {
        Avg::Cesaro => AvgKind::Cesaro,
        Avg::Log => AvgKind::Log,
    }
}

pub fn scheme(range: &Range) -> CliResult<IntervalScheme> {
    let k = kind(range.avg);
    match (&range.n, &range.scheme) {
        (Some(_), Some(_)) => Err(config_err("--scheme", "give either --N or --scheme, not both")),
        (None, None) => Err(config_err("--N", "required (or --scheme)")),
        (Some(0), None) => Err(config_err("--N", "must be at least 1")),
        (Some(n), None) => Ok(IntervalScheme::prefix(*n, k)),
        (None, Some(text)) => IntervalScheme::from_json(text, k).map_err(|e| config_err("--scheme", e.to_string())),
    }
}

/// Cache file stem for specs worth caching.
fn cache_name(spec: &SequenceSpec) -> Option<String> {
    let SequenceSpec::Mult(m) = spec else { return None };
    if m != &MultFuncSpec::liouville() && m != &MultFuncSpec::mobius() && !matches!(m.kind, MultFuncKind::Dirichlet { .. }) {
        return None;
    }
    Some(match &m.kind {
        MultFuncKind::Liouville => "liouville".into(),
        MultFuncKind::Mobius => "mobius".into(),
        MultFuncKind::Dirichlet { modulus, index } => format!("dirichlet{modulus}x{index}"),
        _ => return None,
    })
}

pub fn cache_file(dir: &Path, spec: &SequenceSpec, start: u64, end: u64) -> Option<PathBuf> {
    cache_name(spec).map(|name| cache::cache_path(dir, &name, start, end - start))
}

/// A cached block covering `[start, end)`, if any file in `dir` has one.
fn find_cached(dir: &Path, name: &str, start: u64, end: u64) -> Option<SequenceBlock> {
    let mut best: Option<(u64, PathBuf)> = None;
    for entry in std::fs::read_dir(dir).ok()?.flatten() {
        let file = entry.file_name();
        let Some(stem) = file.to_str().and_then(|f| f.strip_suffix(".mulab")) else { continue };
        let Some(nums) = stem.strip_prefix(name).and_then(|r| r.strip_prefix('_')) else { continue };
        let Some((a, l)) = nums.split_once('_') else { continue };
        let (Ok(a), Ok(l)) = (a.parse::<u64>(), l.parse::<u64>()) else { continue };
        if a <= start && a + l >= end && best.as_ref().is_none_or(|(bl, _)| l < *bl) {
            best = Some((l, entry.path()));
        }
    }
    let (_, path) = best?;
    let block = cache::read(&path).ok()?;
    (block.start() <= start && block.end() >= end).then_some(block)
}

/// Values of `spec` on at least `[start, end)`, from the cache when possible.
pub fn load_block(spec: &SequenceSpec, start: u64, end: u64, cache_dir: Option<&Path>) -> CliResult<SequenceBlock> {
    if let (Some(dir), Some(name)) = (cache_dir, cache_name(spec)) {
        if let Some(b) = find_cached(dir, &name, start, end) {
            return Ok(b);
        }
    }
    Ok(materialize(spec, start, end)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("2.5e3"), Ok(2500));
        assert_eq!(parse_count("17"), Ok(17));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert!(parse_count("1e30").is_err());
    }

    #[test]
    fn funcs() {
        assert_eq!(parse_func("--func", "liouville", 0).unwrap(), MultFuncSpec::liouville().into());
        assert_eq!(parse_func("--func", "dirichlet:5:1", 0).unwrap(), MultFuncSpec::dirichlet(5, 1).into());
        assert!(parse_func("--func", "dirichlet:5:4", 0).is_err());
        assert_eq!(parse_func("--func", "random", 9).unwrap(), SyntheticSpec::Random { seed: 9 }.into());
        assert_eq!(
            parse_func("--func", "poly:0,0.5", 0).unwrap(),
            SyntheticSpec::PolyPhase { coeffs: vec![0.0, 0.5] }.into()
        );
        assert!(parse_func("--func", "constant:2", 0).is_err());
        assert!(parse_func("--func", "nope", 0).is_err());
        let j = r#"{"kind":{"custom":{"prime_phase":{"2":0.25}}}}"#;
        assert!(matches!(parse_func("--func", j, 0).unwrap(), SequenceSpec::Mult(_)));
        assert!(parse_mult("--g", "alternating").is_err());
    }
}
