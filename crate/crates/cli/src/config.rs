//! JSON run configurations, one per subcommand. Every field has a default,
//! so `{}` is a valid configuration for each command. Unknown fields are
//! rejected.

use std::path::{Path, PathBuf};

use dualwave::dde::{BaseFamily, DdeConfig};
use dualwave::nie::{NieConfig, SpectraPolicy};
use dualwave::petviashvili::PvConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Base state of a DDE run: an analytic or Petviashvili family, or a profile
/// CSV with columns `x` and `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    Pv,
    ScaledPv { alpha: f64, shift: f64 },
    Gaussian { gamma: f64 },
    Sine { omega: f64 },
    Hat { height: f64 },
    Linear { slope: f64 },
    File { path: PathBuf },
}

impl Default for BaseSpec {
    fn default() -> Self {
        BaseSpec::ScaledPv { alpha: 2.0, shift: 0.0 }
    }
}

impl BaseSpec {
    /// The solver family, or `None` for file input.
    pub fn family(&self) -> Option<BaseFamily> {
        Some(match *self {
            BaseSpec::Pv => BaseFamily::Pv,
            BaseSpec::ScaledPv { alpha, shift } => BaseFamily::ScaledPv { alpha, shift },
            BaseSpec::Gaussian { gamma } => BaseFamily::Gaussian { gamma },
            BaseSpec::Sine { omega } => BaseFamily::Sine { omega },
            BaseSpec::Hat { height } => BaseFamily::Hat { height },
            BaseSpec::Linear { slope } => BaseFamily::Linear { slope },
            BaseSpec::File { .. } => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdeRun {
    pub half_length: f64,
    pub elements: usize,
    pub base: BaseSpec,
    pub solver: DdeConfig,
}

impl Default for DdeRun {
    fn default() -> Self {
        Self { half_length: 8.0, elements: 400, base: BaseSpec::default(), solver: DdeConfig::default() }
    }
}

/// Grid of the periodic NIE problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub half_length: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_length: 25.0, points: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NieRun {
    pub grid: GridSpec,
    pub u_inf: f64,
    pub solver: NieConfig,
    /// Attach the spectrum of the stability matrix.
    pub spectrum: bool,
    /// Seed profile CSV (columns `x`, `w`); the Petviashvili profile at
    /// `u = 0` when absent.
    pub seed: Option<PathBuf>,
}

impl Default for NieRun {
    fn default() -> Self {
        Self { grid: GridSpec::default(), u_inf: 0.0, solver: NieConfig::default(), spectrum: true, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepRun {
    pub grid: GridSpec,
    pub u_start: f64,
    /// End points; each direction is an independent path from `u_start`.
    pub u_end: Vec<f64>,
    pub solver: NieConfig,
    pub spectra: SpectraPolicy,
}

impl Default for SweepRun {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            u_start: 0.0,
            u_end: vec![-0.475],
            solver: NieConfig::default(),
            spectra: SpectraPolicy::Never,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvRun {
    pub grid: GridSpec,
    pub u_inf: f64,
    pub pv: PvConfig,
    /// Seed profile CSV (columns `x`, `w`); the standard Gaussian when absent.
    pub seed: Option<PathBuf>,
}

impl Default for PvRun {
    fn default() -> Self {
        Self { grid: GridSpec::default(), u_inf: 0.0, pv: PvConfig::default(), seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveRun {
    /// Profile CSV with columns `x`, `f`, `w`, `u_inf` on a uniform periodic grid.
    pub profile: PathBuf,
    /// Speed of the profile as stored.
    pub c_profile: f64,
    /// Lattice wave speed after rescaling.
    pub c_target: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for EvolveRun {
    fn default() -> Self {
        Self { profile: PathBuf::from("profile.csv"), c_profile: -0.5, c_target: 1.0, dt: 0.01, t_end: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyRun {
    /// Template run; `elements` is replaced by each entry of `meshes`.
    pub run: DdeRun,
    /// Mesh sizes, each twice the previous one.
    pub meshes: Vec<usize>,
}

impl Default for VerifyRun {
    fn default() -> Self {
        Self { run: DdeRun::default(), meshes: vec![200, 400] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumRun {
    /// Profile CSV with columns `x`, `f`, `w`, `u_inf` on a uniform periodic grid.
    pub profile: PathBuf,
}

impl Default for SpectrumRun {
    fn default() -> Self {
        Self { profile: PathBuf::from("profile.csv") }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let run: DdeRun = serde_json::from_str("{}").unwrap();
        assert_eq!(run, DdeRun::default());
        let run: SweepRun = serde_json::from_str("{}").unwrap();
        assert_eq!(run.u_end, vec![-0.475]);
    }

    #[test]
    fn base_spec_is_tagged() {
        let b: BaseSpec = serde_json::from_str(r#"{"family": "gaussian", "gamma": -1.9}"#).unwrap();
        assert_eq!(b.family(), Some(BaseFamily::Gaussian { gamma: -1.9 }));
        let b: BaseSpec = serde_json::from_str(r#"{"family": "file", "path": "a.csv"}"#).unwrap();
        assert_eq!(b.family(), None);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<NieRun>(r#"{"u_infinity": 1.0}"#).is_err());
    }
}
