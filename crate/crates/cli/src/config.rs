use std::fs;
use std::path::{Path, PathBuf};

use nodal_core::experiments::{Numerics, Preset};
use nodal_core::DomainSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Bracket,
    EpsSweep,
    Sectors,
    Verdict,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Bracket => "bracket",
            Experiment::EpsSweep => "eps-sweep",
            Experiment::Sectors => "sectors",
            Experiment::Verdict => "verdict",
        }
    }
}

/// On-disk run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    #[serde(default)]
    pub numerics: Option<Numerics>,
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Values of `eps` for sweeps and sector scans.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default)]
    pub kmax: Option<usize>,
    /// Truncation lengths for the narrowing-tube verdict.
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Usage(format!("malformed config {}: {e}", path.display()))
    })
}

/// Fully resolved run after merging config, preset and flags.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub spec: DomainSpec,
    pub numerics: Numerics,
    pub output_dir: PathBuf,
    pub eps: Option<Vec<f64>>,
    pub kmax: Option<usize>,
    pub lengths: Vec<f64>,
    pub label: String,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eps: Option<Vec<f64>>,
    pub kmax: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub target_h: Option<f64>,
    pub trunc: Option<f64>,
}

pub fn resolve(config: Option<RunConfig>, preset: Option<Preset>, ov: &Overrides) -> Result<Resolved, CliError> {
    let (mut spec, numerics, output_dir, eps, kmax, lengths, label) = match (config, preset) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--config and --preset are mutually exclusive".into())),
        (None, None) => return Err(CliError::MissingDomain),
        (Some(c), None) => {
            let numerics = c.numerics.unwrap_or_else(|| Numerics::for_spec(&c.domain));
            (c.domain, numerics, c.output_dir, c.eps, c.kmax, c.lengths, "config".to_string())
        }
        (None, Some(p)) => {
            let spec = p.spec();
            let lengths = (ov.trunc.is_none()).then(|| p.lengths());
            (spec, Numerics::for_spec(&spec), None, None, None, lengths, p.name().to_string())
        }
    };
    let mut numerics = numerics;
    if let Some(l) = ov.trunc {
        spec.trunc = l;
    }
    if let Some(h) = ov.target_h {
        numerics.target_h = h;
    }
    if let Some(s) = ov.seed {
        numerics.seed = s;
    }
    let eps = ov.eps.clone().or(eps);
    let kmax = ov.kmax.or(kmax);
    if kmax == Some(0) {
        return Err(CliError::Usage("--kmax must be at least 1".into()));
    }
    if let Some(list) = &eps {
        if list.is_empty() || list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(CliError::Usage(format!("eps values must be positive, got {list:?}")));
        }
    }
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    numerics.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let lengths = lengths.unwrap_or_else(|| default_lengths(&spec));
    Ok(Resolved {
        spec,
        numerics,
        output_dir: ov.out.clone().or(output_dir).unwrap_or_else(|| PathBuf::from("out")),
        eps,
        kmax,
        lengths,
        label,
    })
}

fn default_lengths(spec: &DomainSpec) -> Vec<f64> {
    if spec.profile.decays() {
        let l = spec.trunc;
        vec![(l - 2.0).max(spec.b + 1.0), l, l + 2.0]
    } else {
        vec![spec.trunc]
    }
}
