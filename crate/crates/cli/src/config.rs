//! System configuration files (see `config.schema.json`).

use std::path::Path;
use std::sync::Arc;

use ckstab::nonlinear::{LorenzG, Nonlinearity, PolyTerm, Polynomial, Zero};
use ckstab::FracOrder;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown built-in system `{0}` (available: lorenz)")]
    UnknownSystem(String),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NonlinearitySpec {
    /// `"lorenz-g"` or `"zero"`
    Named(String),
    Polynomial { polynomial: Vec<PolyTerm> },
}

/// Linear state feedback `u = K x` entering through `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feedback {
    pub b: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderSpec {
    pub alpha: f64,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "one")]
    pub t0: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub horizon: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub nonlinearity: NonlinearitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<Feedback>,
    pub order: OrderSpec,
    pub simulation: SimulationSpec,
}

fn to_matrix(field: &str, rows: &[Vec<f64>], shape: Option<(usize, usize)>) -> Result<DMatrix<f64>, ConfigError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(invalid(field, "must be a non-empty matrix"));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(invalid(format!("{field}[{i}]"), format!("has {} entries, expected {c}", rows[i].len())));
    }
    if let Some((er, ec)) = shape {
        if (r, c) != (er, ec) {
            return Err(invalid(field, format!("is {r}x{c}, expected {er}x{ec}")));
        }
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(field, "entries must be finite"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl SystemConfig {
    /// The systems shipped with the tool.
    pub fn builtin(name: &str) -> Result<Self, ConfigError> {
        match name {
            "lorenz" => Ok(lorenz()),
            other => Err(ConfigError::UnknownSystem(other.to_string())),
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = self.dim();
        to_matrix("a", &self.a, None)?;
        if self.a[0].len() != d {
            return Err(invalid("a", format!("must be square, got {d}x{}", self.a[0].len())));
        }
        if let Some(fb) = &self.feedback {
            let b = to_matrix("feedback.b", &fb.b, None)?;
            if b.nrows() != d {
                return Err(invalid("feedback.b", format!("has {} rows, expected {d}", b.nrows())));
            }
            to_matrix("feedback.k", &fb.k, Some((b.ncols(), d)))?;
        }
        let o = self.order;
        if !(o.alpha > 0.0 && o.alpha < 1.0) {
            return Err(invalid("order.alpha", format!("must lie in (0,1), got {}", o.alpha)));
        }
        if !(o.rho > 0.0 && o.rho.is_finite()) {
            return Err(invalid("order.rho", format!("must be positive, got {}", o.rho)));
        }
        if !(o.t0 > 0.0 && o.t0.is_finite()) {
            return Err(invalid("order.t0", format!("must be positive, got {}", o.t0)));
        }
        let s = &self.simulation;
        if !(s.horizon > o.t0 && s.horizon.is_finite()) {
            return Err(invalid("simulation.horizon", format!("must exceed t0 = {}, got {}", o.t0, s.horizon)));
        }
        if s.steps < ckstab::dynamics::MIN_STEPS {
            return Err(invalid(
                "simulation.steps",
                format!("must be at least {}, got {}", ckstab::dynamics::MIN_STEPS, s.steps),
            ));
        }
        if s.x0.len() != d {
            return Err(invalid("simulation.x0", format!("has {} entries, expected {d}", s.x0.len())));
        }
        if s.x0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("simulation.x0", "entries must be finite"));
        }
        self.nonlinearity()?;
        Ok(())
    }

    pub fn order(&self) -> Result<FracOrder, ConfigError> {
        FracOrder::caputo(self.order.alpha, self.order.rho, self.order.t0).map_err(|e| invalid("order", e.to_string()))
    }

    /// The open-loop matrix `A`.
    pub fn open_loop(&self) -> Result<DMatrix<f64>, ConfigError> {
        to_matrix("a", &self.a, Some((self.dim(), self.dim())))
    }

    /// `A + B K`, or `A` without feedback.
    pub fn closed_loop(&self) -> Result<DMatrix<f64>, ConfigError> {
        let a = self.open_loop()?;
        match &self.feedback {
            None => Ok(a),
            Some(fb) => {
                let b = to_matrix("feedback.b", &fb.b, None)?;
                let k = to_matrix("feedback.k", &fb.k, Some((b.ncols(), a.nrows())))?;
                Ok(a + b * k)
            }
        }
    }

    pub fn nonlinearity(&self) -> Result<Arc<dyn Nonlinearity>, ConfigError> {
        build_nonlinearity(&self.nonlinearity, self.dim())
    }
}

pub fn build_nonlinearity(spec: &NonlinearitySpec, dim: usize) -> Result<Arc<dyn Nonlinearity>, ConfigError> {
    match spec {
        NonlinearitySpec::Named(n) if n == "zero" => Ok(Arc::new(Zero(dim))),
        NonlinearitySpec::Named(n) if n == "lorenz-g" => {
            if dim != 3 {
                return Err(invalid("nonlinearity", format!("lorenz-g needs dimension 3, system has {dim}")));
            }
            Ok(Arc::new(LorenzG))
        }
        NonlinearitySpec::Named(n) => Err(invalid(
            "nonlinearity",
            format!("unknown built-in `{n}` (available: zero, lorenz-g)"),
        )),
        NonlinearitySpec::Polynomial { polynomial } => Polynomial::new(dim, polynomial.clone())
            .map(|p| Arc::new(p) as Arc<dyn Nonlinearity>)
            .map_err(|e| invalid("nonlinearity.polynomial", e.to_string())),
    }
}

/// Parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<SystemConfig, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: shown.clone(),
        source,
    })?;
    let cfg: SystemConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: shown, source })?;
    cfg.validate()?;
    Ok(cfg)
}

/// A built-in name or a path to a configuration file.
pub fn resolve_system(name_or_path: &str) -> Result<SystemConfig, ConfigError> {
    let path = Path::new(name_or_path);
    if path.exists() {
        load_config(path)
    } else {
        SystemConfig::builtin(name_or_path)
    }
}

/// Lorenz system `a = -8, b = 26, c = -7, d = 3` with feedback on the second
/// state, `α = 0.9`, `ρ = 1.2`, `t0 = 1`.
fn lorenz() -> SystemConfig {
    let (a, b, c, d) = (-8.0, 26.0, -7.0, 3.0);
    SystemConfig {
        name: "lorenz".into(),
        a: vec![vec![a, -a, 0.0], vec![b, -c, 0.0], vec![0.0, 0.0, -d]],
        nonlinearity: NonlinearitySpec::Named("lorenz-g".into()),
        feedback: Some(Feedback {
            b: vec![vec![0.0], vec![1.0], vec![0.0]],
            k: vec![vec![0.0, -50.0, 0.0]],
        }),
        order: OrderSpec {
            alpha: 0.9,
            rho: 1.2,
            t0: 1.0,
        },
        simulation: SimulationSpec {
            horizon: 51.0,
            steps: 8192,
            x0: vec![0.1, 0.1, 0.1],
        },
    }
}
