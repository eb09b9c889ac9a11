//! Named desk-scale experiment configurations.

use augcg::{ReorthPolicy, SpectrumSpec};

use crate::config::{parse_mu_grid, ExperimentConfig, ProblemConfig};
use crate::methods::{parse_method_list, ThetaChoice};
use crate::{HarnessError, Result};

pub const PRESETS: [&str; 7] = [
    "fastdecay",
    "outliers20",
    "bottom20",
    "theta-sweep",
    "regpath",
    "sampling",
    "diagnostics",
];

fn with(id: &str, spectrum: SpectrumSpec, sketch: usize, methods: &str) -> ExperimentConfig {
    ExperimentConfig {
        id: id.into(),
        problem: ProblemConfig {
            spectrum,
            seed: 0,
            matrix: None,
        },
        methods: parse_method_list(methods).expect("preset method lists are valid"),
        sketch,
        t_max: 80,
        policy: ReorthPolicy::Full,
        ..ExperimentConfig::default()
    }
}

fn theta_sweep() -> ExperimentConfig {
    let mut methods = vec!["bcg".to_string()];
    for s in [1, 5, 11] {
        for k in ["0.01", "0.1", "1", "10", "100"] {
            methods.push(format!("nystrom:s={s};theta=auto*{k}"));
        }
    }
    let mut cfg = with(
        "theta-sweep",
        SpectrumSpec::fastdecay(200),
        12,
        &methods.join(", "),
    );
    cfg.t_max = 60;
    cfg
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "fastdecay" => with(
            "fastdecay",
            SpectrumSpec::fastdecay(200),
            8,
            "bcg, cg, nystrom:s=1, nystrom:s=3, deflation:r=8",
        ),
        "outliers20" => with(
            "outliers20",
            SpectrumSpec::outliers(200, 20, 1e3),
            10,
            "bcg, cg, nystrom:s=1, nystrom:s=3, nystrom:s=5",
        ),
        "bottom20" => with(
            "bottom20",
            SpectrumSpec::bottom(200, 20, 1e3),
            10,
            "bcg, cg, nystrom:s=1, nystrom:s=3, nystrom:s=5",
        ),
        "theta-sweep" => theta_sweep(),
        "regpath" => {
            let mut cfg = with(
                "regpath",
                SpectrumSpec::fastdecay(200),
                8,
                "bcg, cg, nystrom:s=1, nystrom:s=3",
            );
            cfg.t_max = 40;
            cfg.mu = parse_mu_grid("log:1e-6:1:20").expect("valid grid");
            cfg
        }
        "sampling" => {
            let mut cfg = with("sampling", SpectrumSpec::outliers(200, 20, 1e3), 8, "bcg");
            cfg.samples = 10;
            cfg.t_max = 30;
            cfg
        }
        "diagnostics" => {
            let mut cfg = with("diagnostics", SpectrumSpec::fastdecay(200), 12, "bcg");
            cfg.pairs = vec![(8, 1), (8, 3), (12, 3), (12, 5)];
            cfg.seeds = 20;
            cfg.mu = vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];
            cfg.mu_relative = true;
            cfg.theta = ThetaChoice::LambdaMin;
            cfg.deflation = Some(10);
            cfg
        }
        other => {
            return Err(HarnessError::Config(format!(
                "unknown preset `{other}` (available: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.id, name);
        }
        assert!(matches!(preset("nope"), Err(HarnessError::Config(_))));
    }
}
