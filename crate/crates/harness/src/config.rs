//! Experiment configuration and its text format.
//!
//! The format is UTF-8 `key = value` lines grouped under `[section]` headers. `#`
//! starts a comment. Every key is listed below; anything else is rejected.
//!
//! ```text
//! [problem]
//! spectrum = fastdecay      # fastdecay | outliers | bottom | explicit
//! dim = 200
//! count = 20                # outliers / bottom: number of separated eigenvalues
//! gap = 1000                # outliers / bottom: separation factor (> 1)
//! rate = 0.95               # optional geometric rate in (0, 1)
//! values = 4, 1             # explicit spectrum
//! seed = 0
//! matrix = a.bin            # optional chunked file; runs without the oracle
//!
//! [run]
//! id = fastdecay            # experiment column of the CSV
//! sketch = 8                # width l of the shared Gaussian sketch
//! t_max = 80
//! mu = 0, 1e-3              # or log:LO:HI:N
//! mu_relative = false       # multiply the mu grid by lambda_1
//! policy = full             # full | none | partial:K
//! output = out.csv
//!
//! [methods]
//! list = bcg, cg, nystrom:s=1, nystrom:s=3
//!
//! [sampling]
//! samples = 10
//!
//! [diagnostics]
//! seeds = 20
//! oversample = 2            # r = l - oversample
//! pairs = 12x5, 8x1         # (l)x(s) pairs
//! theta = lambda_d          # auto | lambda_d | auto*K | value
//! deflation = 10            # optional exact-deflation rank for a reference row
//! ```

use std::path::{Path, PathBuf};

use augcg::{ReorthPolicy, SpectrumKind, SpectrumSpec};

use crate::methods::{parse_method_list, MethodSpec, ThetaChoice};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub spectrum: SpectrumSpec,
    pub seed: u64,
    /// Chunked matrix file; when set the spectrum is ignored and no oracle is available.
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub problem: ProblemConfig,
    pub methods: Vec<MethodSpec>,
    pub sketch: usize,
    pub t_max: usize,
    pub mu: Vec<f64>,
    pub mu_relative: bool,
    pub policy: ReorthPolicy,
    pub output: Option<PathBuf>,
    pub samples: usize,
    pub seeds: usize,
    pub oversample: usize,
    pub pairs: Vec<(usize, usize)>,
    pub theta: ThetaChoice,
    pub deflation: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            id: "experiment".into(),
            problem: ProblemConfig {
                spectrum: SpectrumSpec::fastdecay(200),
                seed: 0,
                matrix: None,
            },
            methods: vec![MethodSpec::BlockCg {
                sketch: None,
                policy: None,
            }],
            sketch: 8,
            t_max: 80,
            mu: vec![0.0],
            mu_relative: false,
            policy: ReorthPolicy::Full,
            output: None,
            samples: 10,
            seeds: 1,
            oversample: 2,
            pairs: vec![(12, 5)],
            theta: ThetaChoice::Auto,
            deflation: None,
        }
    }
}

fn err(line: usize, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("line {line}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| err(line, format!("`{key}` has invalid value `{v}`")))
}

fn parse_f64_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|x| parse_num(line, key, x.trim()))
        .collect()
}

/// `log:LO:HI:N` (log-spaced, inclusive) or a comma-separated list.
pub fn parse_mu_grid(v: &str) -> std::result::Result<Vec<f64>, String> {
    let grid = if let Some(spec) = v.strip_prefix("log:") {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected log:LO:HI:N, got `{v}`"));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| format!("bad bound `{}`", parts[0]))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| format!("bad bound `{}`", parts[1]))?;
        let n: usize = parts[2]
            .parse()
            .map_err(|_| format!("bad count `{}`", parts[2]))?;
        if !(lo > 0.0 && hi >= lo) || n == 0 {
            return Err(format!("invalid log grid `{v}`"));
        }
        if n == 1 {
            vec![lo]
        } else {
            let step = (hi / lo).ln() / (n - 1) as f64;
            (0..n).map(|i| lo * (step * i as f64).exp()).collect()
        }
    } else {
        v.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad shift `{}`", x.trim()))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(format!("shifts must be finite and nonnegative: `{v}`"));
    }
    Ok(grid)
}

fn parse_pairs(line: usize, v: &str) -> Result<Vec<(usize, usize)>> {
    v.split(',')
        .map(|p| {
            let (l, s) = p
                .trim()
                .split_once('x')
                .ok_or_else(|| err(line, format!("pair `{}` is not LxS", p.trim())))?;
            Ok((parse_num(line, "pairs", l)?, parse_num(line, "pairs", s)?))
        })
        .collect()
}

#[derive(Default)]
struct SpectrumFields {
    kind: Option<String>,
    dim: Option<usize>,
    count: Option<usize>,
    gap: Option<f64>,
    rate: Option<f64>,
    values: Option<Vec<f64>>,
}

impl SpectrumFields {
    fn any(&self) -> bool {
        self.kind.is_some()
            || self.dim.is_some()
            || self.count.is_some()
            || self.gap.is_some()
            || self.rate.is_some()
            || self.values.is_some()
    }

    /// Merges the fields over `base`.
    fn resolve(self, base: &SpectrumSpec) -> Result<SpectrumSpec> {
        let (base_count, base_gap) = match base.kind {
            SpectrumKind::Outliers { count, gap } | SpectrumKind::Bottom { count, gap } => {
                (count, gap)
            }
            _ => (20, 1e3),
        };
        let kind_name = self.kind.unwrap_or_else(|| {
            match base.kind {
                SpectrumKind::FastDecay => "fastdecay",
                SpectrumKind::Outliers { .. } => "outliers",
                SpectrumKind::Bottom { .. } => "bottom",
                SpectrumKind::Explicit(_) => "explicit",
            }
            .to_string()
        });
        let count = self.count.unwrap_or(base_count);
        let gap = self.gap.unwrap_or(base_gap);
        let dim = self.dim.unwrap_or(base.dim);
        let mut spec = match kind_name.as_str() {
            "fastdecay" => SpectrumSpec::fastdecay(dim),
            "outliers" => SpectrumSpec::outliers(dim, count, gap),
            "bottom" => SpectrumSpec::bottom(dim, count, gap),
            "explicit" => {
                let values = match (self.values, &base.kind) {
                    (Some(v), _) => v,
                    (None, SpectrumKind::Explicit(v)) => v.clone(),
                    _ => {
                        return Err(HarnessError::Config(
                            "explicit spectrum needs `values`".into(),
                        ))
                    }
                };
                if self.dim.is_some_and(|d| d != values.len()) {
                    return Err(HarnessError::Config(
                        "`dim` disagrees with the number of `values`".into(),
                    ));
                }
                SpectrumSpec::explicit(values)
            }
            other => return Err(HarnessError::Config(format!("unknown spectrum `{other}`"))),
        };
        spec.rate = self.rate.or(base.rate);
        augcg::make_eigenvalues(&spec).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(spec)
    }
}

impl ExperimentConfig {
    /// Parses config text on top of `base` (usually the defaults or a preset).
    pub fn parse_over(base: ExperimentConfig, text: &str) -> Result<Self> {
        let mut cfg = base;
        let mut section = String::new();
        let mut spectrum = SpectrumFields::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("malformed section header `{content}`")))?
                    .trim();
                if !["problem", "run", "methods", "sampling", "diagnostics"].contains(&name) {
                    return Err(err(line, format!("unknown section `[{name}]`")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected key = value, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() {
                return Err(err(line, format!("key `{key}` appears before any section")));
            }
            if !seen.insert(format!("{section}.{key}")) {
                return Err(err(line, format!("duplicate key `{key}` in [{section}]")));
            }
            match (section.as_str(), key) {
                ("problem", "spectrum") => spectrum.kind = Some(value.to_string()),
                ("problem", "dim") => spectrum.dim = Some(parse_num(line, key, value)?),
                ("problem", "count") => spectrum.count = Some(parse_num(line, key, value)?),
                ("problem", "gap") => spectrum.gap = Some(parse_num(line, key, value)?),
                ("problem", "rate") => spectrum.rate = Some(parse_num(line, key, value)?),
                ("problem", "values") => spectrum.values = Some(parse_f64_list(line, key, value)?),
                ("problem", "seed") => cfg.problem.seed = parse_num(line, key, value)?,
                ("problem", "matrix") => cfg.problem.matrix = Some(PathBuf::from(value)),
                ("run", "id") => cfg.id = value.to_string(),
                ("run", "sketch") => cfg.sketch = parse_num(line, key, value)?,
                ("run", "t_max") => cfg.t_max = parse_num(line, key, value)?,
                ("run", "mu") => cfg.mu = parse_mu_grid(value).map_err(|e| err(line, e))?,
                ("run", "mu_relative") => cfg.mu_relative = parse_num(line, key, value)?,
                ("run", "policy") => {
                    cfg.policy = value.parse().map_err(|e: augcg::Error| err(line, e))?;
                }
                ("run", "output") => cfg.output = Some(PathBuf::from(value)),
                ("methods", "list") => {
                    cfg.methods = parse_method_list(value).map_err(|e| err(line, e))?
                }
                ("sampling", "samples") => cfg.samples = parse_num(line, key, value)?,
                ("diagnostics", "seeds") => cfg.seeds = parse_num(line, key, value)?,
                ("diagnostics", "oversample") => cfg.oversample = parse_num(line, key, value)?,
                ("diagnostics", "pairs") => cfg.pairs = parse_pairs(line, value)?,
                ("diagnostics", "theta") => cfg.theta = value.parse().map_err(|e| err(line, e))?,
                ("diagnostics", "deflation") => cfg.deflation = Some(parse_num(line, key, value)?),
                _ => return Err(err(line, format!("unknown key `{key}` in [{section}]"))),
            }
        }
        if spectrum.any() {
            cfg.problem.spectrum = spectrum.resolve(&cfg.problem.spectrum)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_over(Self::default(), text)
    }

    pub fn load(path: &Path, base: ExperimentConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_over(base, &text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        if self.t_max == 0 {
            return bad("t_max must be positive".into());
        }
        if self.mu.is_empty() {
            return bad("mu grid is empty".into());
        }
        if self.samples == 0 || self.seeds == 0 {
            return bad("samples and seeds must be positive".into());
        }
        if self.pairs.iter().any(|&(l, s)| l == 0 || s == 0) {
            return bad("diagnostic pairs need positive l and s".into());
        }
        Ok(())
    }

    /// Largest sketch width any method needs; the shared `Ω` has this many columns.
    pub fn max_sketch(&self) -> usize {
        self.methods
            .iter()
            .map(|m| match m {
                MethodSpec::BlockCg { sketch, .. } | MethodSpec::Nystrom { sketch, .. } => {
                    sketch.unwrap_or(self.sketch)
                }
                _ => 0,
            })
            .chain(self.pairs.iter().map(|p| p.0))
            .chain(std::iter::once(self.sketch))
            .max()
            .unwrap_or(0)
    }
}
