//! Experiment configuration: JSON schema, validation, presets, and
//! construction of the geometric partition per refinement level.

use mtf2d::geometry::{gap_partition, single_circle_partition, square_circle_partition, Partition};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum GeometryId {
    Fig1CircleInSquare,
    TwoDomainCircle,
    Gap { delta: f64 },
    Custom { path: String },
}

/// A scalar relaxation parameter: plain number or `[re, im]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl AlphaSpec {
    pub fn value(self) -> Complex64 {
        match self {
            AlphaSpec::Real(re) => Complex64::new(re, 0.0),
            AlphaSpec::Complex([re, im]) => Complex64::new(re, im),
        }
    }

    /// Filename-safe label, e.g. `1`, `-0.25`, `0+1i`.
    pub fn label(self) -> String {
        let a = self.value();
        if a.im == 0.0 {
            format!("{}", a.re)
        } else {
            format!("{}{}{}i", a.re, if a.im < 0.0 { "" } else { "+" }, a.im)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Spectrum,
    Identities,
    Solve,
    Convergence,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub geometry: GeometryId,
    /// Wavenumber per subdomain (ignored for custom geometry files, which
    /// carry their own).
    pub kappa: Vec<f64>,
    pub alpha: Vec<AlphaSpec>,
    pub h: Vec<f64>,
    pub tasks: Vec<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.tasks.is_empty() {
            return Err("task list is empty".into());
        }
        if self.h.is_empty() || self.h.iter().any(|&h| h.is_nan() || h <= 0.0) {
            return Err("h list must be nonempty with positive entries".into());
        }
        if self.alpha.is_empty() {
            return Err("alpha list is empty".into());
        }
        let want_kappas = match &self.geometry {
            GeometryId::Fig1CircleInSquare | GeometryId::Gap { .. } => Some(3),
            GeometryId::TwoDomainCircle => Some(2),
            GeometryId::Custom { .. } => None,
        };
        if let Some(n) = want_kappas {
            if self.kappa.len() != n {
                return Err(format!("geometry needs {n} wavenumbers, got {}", self.kappa.len()));
            }
        }
        if let GeometryId::Gap { delta } = self.geometry {
            if delta.is_nan() || delta <= 0.0 {
                return Err(
                    "gap width must be positive: a closed gap creates a junction point, \
                     and the formulation requires a junction-free partition"
                        .into(),
                );
            }
        }
        Ok(())
    }

    /// Builds (and validates) the partition at one refinement level.
    pub fn partition(&self, h: f64) -> Result<Partition, String> {
        let part = match &self.geometry {
            GeometryId::Fig1CircleInSquare => {
                square_circle_partition([self.kappa[0], self.kappa[1], self.kappa[2]], h)
            }
            GeometryId::TwoDomainCircle => {
                single_circle_partition(self.kappa[0], self.kappa[1], 1.0, h)
            }
            GeometryId::Gap { delta } => {
                gap_partition([self.kappa[0], self.kappa[1], self.kappa[2]], *delta, h)
            }
            GeometryId::Custom { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {path}: {e}"))?;
                let mut part = Partition::from_json(&text).map_err(|e| e.to_string())?;
                part.h = h;
                part
            }
        };
        part.validate().map_err(|e| e.to_string())?;
        Ok(part)
    }

    pub fn kappas_equal(&self) -> bool {
        self.kappa.windows(2).all(|w| w[0] == w[1])
    }
}

/// Built-in experiment presets mirroring the reference figures.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let fig1 = |kappa: [f64; 3], alpha: f64| ExperimentConfig {
        geometry: GeometryId::Fig1CircleInSquare,
        kappa: kappa.to_vec(),
        alpha: vec![AlphaSpec::Real(alpha)],
        h: vec![0.05],
        tasks: vec![Task::Spectrum],
        output: Some(format!("out-{name}")),
    };
    let gap = |delta: f64| ExperimentConfig {
        geometry: GeometryId::Gap { delta },
        kappa: vec![1.0, 1.0, 1.0],
        alpha: vec![AlphaSpec::Real(1.0)],
        h: vec![0.1],
        tasks: vec![Task::Spectrum],
        output: Some(format!("out-{name}")),
    };
    Some(match name {
        "fig2" => fig1([1.0, 1.0, 1.0], 1.0),
        "fig3a" => fig1([1.0, 1.0, 1.0], 0.5),
        "fig3b" => fig1([1.0, 1.0, 1.0], -0.25),
        "fig4" => fig1([1.0, 5.0, 2.0], 1.0),
        "fig5a" => gap(0.1),
        "fig5b" => gap(0.01),
        "fig5c" => gap(0.001),
        _ => return None,
    })
}

pub const PRESET_NAMES: [&str; 7] = ["fig2", "fig3a", "fig3b", "fig4", "fig5a", "fig5b", "fig5c"];
