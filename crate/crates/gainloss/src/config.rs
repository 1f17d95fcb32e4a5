//! JSON encoding of models, states and run configurations.
//!
//! Complex numbers are `[re, im]`; matrices are row-major nested arrays.

use gainloss_core::experiments::standard_model;
use gainloss_core::numerics::CMatrix;
use gainloss_core::random::random_density;
use gainloss_core::spectral::{analyze, Phase};
use gainloss_core::state::{validate_density, DensityMatrix, GainLossModel};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn encode_matrix(m: &CMatrix) -> JsonMatrix {
    let n = m.dim();
    (0..n)
        .map(|i| (0..n).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn decode_matrix(rows: &JsonMatrix) -> Result<CMatrix, CliError> {
    let n = rows.len();
    if n == 0 {
        return Err(CliError::Config("matrix must be nonempty".into()));
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(CliError::Config(format!(
                "matrix row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        data.extend(row.iter().map(|&[re, im]| Complex64::new(re, im)));
    }
    CMatrix::from_row_major(n, data).map_err(|e| CliError::Config(e.to_string()))
}

pub fn encode_complex(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Either explicit operators or the two-level model `σx - iγσz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Explicit {
        #[serde(rename = "H")]
        h: JsonMatrix,
        #[serde(rename = "Gamma")]
        gamma: JsonMatrix,
        #[serde(default)]
        kappa: f64,
    },
    Standard {
        gamma: f64,
        #[serde(default)]
        kappa: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<GainLossModel, CliError> {
        let model = match self {
            ModelSpec::Explicit { h, gamma, kappa } => {
                GainLossModel::new(decode_matrix(h)?, decode_matrix(gamma)?, *kappa)
            }
            ModelSpec::Standard { gamma, kappa } => standard_model(*gamma, *kappa),
        };
        model.map_err(|e| CliError::Config(format!("invalid model: {e}")))
    }
}

/// A matrix, or one of `"maximally-mixed"`, `"pure:<i>"` (basis state
/// `|i>`), `"eigen:<j>"` (projector on the `j`-th eigenvector of `K`) and
/// `"random"` (drawn from the run seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Matrix(JsonMatrix),
    Token(String),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Token("maximally-mixed".into())
    }
}

impl InitialState {
    pub fn build(&self, model: &GainLossModel, seed: u64) -> Result<DensityMatrix, CliError> {
        let n = model.dim();
        let bad = |msg: String| CliError::Config(msg);
        match self {
            InitialState::Matrix(rows) => {
                let m = decode_matrix(rows)?;
                if m.dim() != n {
                    return Err(bad(format!("rho0 is {}x{}, model is {n}x{n}", m.dim(), m.dim())));
                }
                validate_density(m).map_err(|e| bad(format!("invalid rho0: {e}")))
            }
            InitialState::Token(t) if t == "maximally-mixed" => Ok(DensityMatrix::maximally_mixed(n)),
            InitialState::Token(t) if t == "random" => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                random_density(n, &mut rng).map_err(|e| CliError::Numerical(e.to_string()))
            }
            InitialState::Token(t) => {
                let index = |s: &str| -> Result<usize, CliError> {
                    s.parse::<usize>()
                        .map_err(|_| bad(format!("bad index in rho0 token {t:?}")))
                };
                if let Some(i) = t.strip_prefix("pure:") {
                    let i = index(i)?;
                    DensityMatrix::basis(n, i).map_err(|e| bad(format!("rho0 {t:?}: {e}")))
                } else if let Some(j) = t.strip_prefix("eigen:") {
                    let j = index(j)?;
                    let sys = analyze(model);
                    if j >= n {
                        return Err(bad(format!("rho0 {t:?}: index out of range")));
                    }
                    if sys.phase == Phase::Exceptional {
                        return Err(CliError::Unsupported(
                            "eigenstate initial condition at an exceptional point".into(),
                        ));
                    }
                    sys.projector(j).map_err(|e| CliError::Numerical(e.to_string()))
                } else {
                    Err(bad(format!("unknown rho0 token {t:?}")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub rho0: InitialState,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// Sample spacing; every accepted step when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn default_t_final() -> f64 {
    10.0
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is serialisable")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_config_round_trips() {
        let text = r#"{"model": {"gamma": 2.0, "kappa": 0.1}, "rho0": "pure:1", "t_final": 5.0,
                       "output_interval": 0.5, "tolerances": {"rel": 1e-10, "abs": 1e-12}, "seed": 9}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let model = cfg.model.build().unwrap();
        assert_eq!(model.kappa(), 0.1);
        let rho = cfg.rho0.build(&model, cfg.seed).unwrap();
        assert_eq!(rho, DensityMatrix::basis(2, 1).unwrap());
    }

    #[test]
    fn explicit_model_and_matrix_state() {
        let text = r#"{"model": {"H": [[[0,0],[1,0]],[[1,0],[0,0]]], "Gamma": [[[0.5,0],[0,0]],[[0,0],[-0.5,0]]]},
                       "rho0": [[[0.5,0],[0,0.1]],[[0,-0.1],[0.5,0]]]}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let model = cfg.model.build().unwrap();
        assert_eq!(model.kappa(), 0.0);
        let rho = cfg.rho0.build(&model, 0).unwrap();
        assert_eq!(rho.matrix()[(0, 1)], Complex64::new(0.0, 0.1));
        assert_eq!(cfg.t_final, 10.0);
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_json("{not json").is_err());
        assert!(RunConfig::from_json(r#"{"model": {"gamma": 1}, "bogus": 1}"#).is_err());
        let cfg = RunConfig::from_json(r#"{"model": {"gamma": 1}, "rho0": "pure:7"}"#).unwrap();
        let model = cfg.model.build().unwrap();
        assert!(cfg.rho0.build(&model, 0).is_err());
        let cfg = RunConfig::from_json(r#"{"model": {"gamma": 1, "kappa": -1}}"#).unwrap();
        assert!(cfg.model.build().is_err());
        let ragged = r#"{"model": {"H": [[[0,0]],[[1,0],[0,0]]], "Gamma": [[[0,0],[0,0]],[[0,0],[0,0]]]}}"#;
        assert!(RunConfig::from_json(ragged).unwrap().model.build().is_err());
    }

    #[test]
    fn seeded_random_state_is_reproducible() {
        let model = standard_model(0.5, 0.0).unwrap();
        let a = InitialState::Token("random".into()).build(&model, 3).unwrap();
        let b = InitialState::Token("random".into()).build(&model, 3).unwrap();
        assert_eq!(a, b);
    }
}
