//! Method descriptors and their textual grammar.
//!
//! A method is `name` or `name:key=value;key=value`, for example
//! `bcg`, `cg:policy=none`, `nystrom:s=3;l=8;theta=auto*10` or `deflation:r=10;theta=lambda_d`.

use std::fmt;
use std::str::FromStr;

use augcg::ReorthPolicy;

use crate::HarnessError;

/// How the deflation shift `θ` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaChoice {
    /// Smallest retained eigenvalue of the Nyström approximation.
    Auto,
    /// `factor` times the automatic choice.
    Scaled(f64),
    Value(f64),
    /// Smallest eigenvalue of `A` (needs the oracle).
    LambdaMin,
    /// `λ_{r+1}` of `A` (exact deflation only; needs the oracle).
    LambdaNext,
}

impl fmt::Display for ThetaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaChoice::Auto => write!(f, "auto"),
            ThetaChoice::Scaled(k) => write!(f, "auto*{k}"),
            ThetaChoice::Value(v) => write!(f, "{v}"),
            ThetaChoice::LambdaMin => write!(f, "lambda_d"),
            ThetaChoice::LambdaNext => write!(f, "lambda_r1"),
        }
    }
}

impl FromStr for ThetaChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Config(format!("invalid theta `{s}`"));
        match s {
            "auto" => Ok(ThetaChoice::Auto),
            "lambda_d" => Ok(ThetaChoice::LambdaMin),
            "lambda_r1" => Ok(ThetaChoice::LambdaNext),
            _ => {
                if let Some(k) = s.strip_prefix("auto*") {
                    let k: f64 = k.parse().map_err(|_| bad())?;
                    return (k > 0.0).then_some(ThetaChoice::Scaled(k)).ok_or_else(bad);
                }
                let v: f64 = s.parse().map_err(|_| bad())?;
                (v > 0.0 && v.is_finite())
                    .then_some(ThetaChoice::Value(v))
                    .ok_or_else(bad)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    /// Block-CG on `[b Ω]`, with `Ω` of width `sketch` (defaults to the run's sketch width).
    BlockCg {
        sketch: Option<usize>,
        policy: Option<ReorthPolicy>,
    },
    Cg {
        policy: Option<ReorthPolicy>,
    },
    /// PCG with a depth-`s` Nyström preconditioner built from the shared `Ω`.
    Nystrom {
        s: usize,
        sketch: Option<usize>,
        theta: ThetaChoice,
    },
    /// PCG with exact top-`r` deflation taken from the oracle.
    Deflation {
        r: usize,
        theta: ThetaChoice,
    },
}

impl MethodSpec {
    /// Stable label used in the `method` CSV column.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let policy =
            |p: &Option<ReorthPolicy>| p.map(|p| format!(":policy={p}")).unwrap_or_default();
        match self {
            MethodSpec::BlockCg { sketch, policy: p } => {
                write!(f, "bcg")?;
                let mut opts = Vec::new();
                if let Some(l) = sketch {
                    opts.push(format!("l={l}"));
                }
                if let Some(p) = p {
                    opts.push(format!("policy={p}"));
                }
                if !opts.is_empty() {
                    write!(f, ":{}", opts.join(";"))?;
                }
                Ok(())
            }
            MethodSpec::Cg { policy: p } => write!(f, "cg{}", policy(p)),
            MethodSpec::Nystrom { s, sketch, theta } => {
                write!(f, "nystrom:s={s}")?;
                if let Some(l) = sketch {
                    write!(f, ";l={l}")?;
                }
                write!(f, ";theta={theta}")
            }
            MethodSpec::Deflation { r, theta } => write!(f, "deflation:r={r};theta={theta}"),
        }
    }
}

fn parse_usize(key: &str, v: &str) -> Result<usize, HarnessError> {
    v.parse().map_err(|_| {
        HarnessError::Config(format!("`{key}` expects a nonnegative integer, got `{v}`"))
    })
}

impl FromStr for MethodSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut opts = Vec::new();
        for kv in rest.split(';').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("method option `{kv}` is not key=value"))
            })?;
            opts.push((k.trim(), v.trim()));
        }
        let mut sketch = None;
        let mut policy = None;
        let mut depth = None;
        let mut rank = None;
        let mut theta = None;
        for (k, v) in &opts {
            match *k {
                "l" => sketch = Some(parse_usize(k, v)?),
                "policy" => {
                    policy = Some(
                        v.parse::<ReorthPolicy>()
                            .map_err(|e| HarnessError::Config(e.to_string()))?,
                    )
                }
                "s" => depth = Some(parse_usize(k, v)?),
                "r" => rank = Some(parse_usize(k, v)?),
                "theta" => theta = Some(v.parse::<ThetaChoice>()?),
                other => {
                    return Err(HarnessError::Config(format!(
                        "unknown method option `{other}` in `{s}`"
                    )))
                }
            }
        }
        let reject = |what: &str| {
            Err(HarnessError::Config(format!(
                "`{what}` does not apply to method `{name}`"
            )))
        };
        match name {
            "bcg" => {
                if depth.is_some() || rank.is_some() || theta.is_some() {
                    return reject("s/r/theta");
                }
                Ok(MethodSpec::BlockCg { sketch, policy })
            }
            "cg" => {
                if depth.is_some() || rank.is_some() || theta.is_some() || sketch.is_some() {
                    return reject("s/r/l/theta");
                }
                Ok(MethodSpec::Cg { policy })
            }
            "nystrom" => {
                if rank.is_some() || policy.is_some() {
                    return reject("r/policy");
                }
                let s = depth.ok_or_else(|| HarnessError::Config("nystrom needs `s`".into()))?;
                if s == 0 {
                    return Err(HarnessError::Config(
                        "nystrom depth must be at least 1".into(),
                    ));
                }
                if theta == Some(ThetaChoice::LambdaNext) {
                    return reject("theta=lambda_r1");
                }
                Ok(MethodSpec::Nystrom {
                    s,
                    sketch,
                    theta: theta.unwrap_or(ThetaChoice::Auto),
                })
            }
            "deflation" => {
                if depth.is_some() || sketch.is_some() || policy.is_some() {
                    return reject("s/l/policy");
                }
                if matches!(theta, Some(ThetaChoice::Auto | ThetaChoice::Scaled(_))) {
                    return reject("theta=auto");
                }
                let r = rank.ok_or_else(|| HarnessError::Config("deflation needs `r`".into()))?;
                Ok(MethodSpec::Deflation {
                    r,
                    theta: theta.unwrap_or(ThetaChoice::LambdaMin),
                })
            }
            other => Err(HarnessError::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Parses a comma-separated method list.
pub fn parse_method_list(s: &str) -> Result<Vec<MethodSpec>, HarnessError> {
    s.split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(str::parse)
        .collect()
}
