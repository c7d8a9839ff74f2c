use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    HeatContent,
    Inradius,
    CoverTime,
    Capacity,
    Spectrum,
    ConjectureProbe,
}

impl ExperimentKind {
    /// Stem of the output file names.
    pub fn stem(self) -> &'static str {
        match self {
            ExperimentKind::HeatContent => "heat_content",
            ExperimentKind::Inradius => "inradius",
            ExperimentKind::CoverTime => "cover_time",
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::ConjectureProbe => "probe_conjectures",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Ball,
    Segment,
    Path,
}

fn default_m() -> usize {
    3
}
fn default_replicas() -> usize {
    100
}
fn default_walkers() -> usize {
    10_000
}
fn default_tol() -> f64 {
    1e-6
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment. Unset budgets take per-kind defaults at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub s_list: Vec<f64>,
    #[serde(default)]
    pub t_list: Vec<f64>,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    /// Tube radii for a capacity sweep.
    #[serde(default)]
    pub delta_list: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_walkers")]
    pub walkers: usize,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub g: Option<usize>,
    /// Fixed voxel size (heat content); requires `dt`.
    #[serde(default)]
    pub h: Option<f64>,
    /// Relative voxel size `h / sqrt(min(s, t))` (heat content).
    #[serde(default)]
    pub h_rel: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub shape: Option<Shape>,
    /// Ball radius or segment length.
    #[serde(default)]
    pub size: Option<f64>,
    /// Simulated time for cover times, as a multiple of the largest `s`.
    #[serde(default)]
    pub horizon_factor: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            m: default_m(),
            s_list: Vec::new(),
            t_list: Vec::new(),
            eps_list: Vec::new(),
            delta_list: Vec::new(),
            replicas: default_replicas(),
            walkers: default_walkers(),
            dt: None,
            g: None,
            h: None,
            h_rel: None,
            delta: None,
            shape: None,
            size: None,
            horizon_factor: None,
            tol: default_tol(),
            master_seed: 0,
            output: default_output(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Default relative voxel size for heat content.
    pub fn h_rel_or_default(&self) -> f64 {
        self.h_rel.unwrap_or(if self.m == 2 { 0.5 } else { 0.1 })
    }

    /// Default torus grid.
    pub fn g_or_default(&self) -> usize {
        self.g.unwrap_or(match self.m {
            2 => 128,
            3 => 48,
            _ => 12,
        })
    }

    /// Checks every field needed by `kind` before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        if !(2..=crate::stochastic::MAX_DIM).contains(&self.m) {
            return bad(format!("m = {} outside 2..={}", self.m, crate::stochastic::MAX_DIM));
        }
        if self.replicas == 0 || self.walkers == 0 {
            return bad("budgets (replicas, walkers) must be positive".into());
        }
        for (name, v) in [("dt", self.dt), ("h", self.h), ("h_rel", self.h_rel), ("delta", self.delta), ("size", self.size)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if let Some(f) = self.horizon_factor {
            if !(f >= 1.0 && f.is_finite()) {
                return bad(format!("horizon_factor must be at least 1, got {f}"));
            }
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.g.is_some_and(|g| g < 2) {
            return bad("g must be at least 2".into());
        }
        for (name, list) in [
            ("s_list", &self.s_list),
            ("t_list", &self.t_list),
            ("eps_list", &self.eps_list),
            ("delta_list", &self.delta_list),
        ] {
            if list.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad(format!("{name} entries must be finite and non-negative"));
            }
        }
        let increasing = |l: &[f64]| l.windows(2).all(|w| w[1] > w[0]);
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { bad(format!("{:?} needs {what}", self.kind)) };
        match self.kind {
            ExperimentKind::HeatContent => {
                need(!self.s_list.is_empty() && !self.t_list.is_empty(), "nonempty s_list and t_list")?;
                need(self.h.is_some() == self.dt.is_some(), "both or neither of h and dt")?;
                need(self.h.is_some() || (self.s_list.iter().chain(&self.t_list).all(|&v| v > 0.0)), "positive times with h_rel")?;
            }
            ExperimentKind::Inradius | ExperimentKind::ConjectureProbe => {
                need(!self.s_list.is_empty() && increasing(&self.s_list), "an increasing nonempty s_list")?;
                if self.kind == ExperimentKind::ConjectureProbe {
                    need(self.m == 2 || self.m == 3, "m = 2 or 3")?;
                }
            }
            ExperimentKind::CoverTime => {
                need(!self.s_list.is_empty(), "a nonempty s_list")?;
                need(!self.eps_list.is_empty() && self.eps_list.iter().all(|&e| e > 0.0), "positive eps_list")?;
            }
            ExperimentKind::Capacity => {
                need(self.m == 3, "m = 3")?;
                let shape = self.shape.ok_or_else(|| LabError::Config("capacity needs a shape".into()))?;
                if shape == Shape::Path {
                    need(!self.s_list.is_empty() && self.s_list.iter().all(|&s| s > 0.0), "positive s_list for path shapes")?;
                    need(self.replicas >= 2, "at least two paths")?;
                    need(self.delta_list.is_empty(), "no delta_list for path shapes (delta follows dt)")?;
                }
                if !self.delta_list.is_empty() {
                    need(self.delta_list.len() >= 2 && self.delta_list.iter().all(|&d| d > 0.0), "two or more positive radii in delta_list")?;
                }
            }
            ExperimentKind::Spectrum => {
                need(!self.eps_list.is_empty() || (!self.s_list.is_empty() && increasing(&self.s_list)), "eps_list or an increasing s_list")?;
                if !self.eps_list.is_empty() {
                    let h = 1.0 / self.g_or_default() as f64;
                    need(self.eps_list.iter().all(|&e| e > h && e < 0.25), "radii in (h, 1/4)")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind": "inradius", "m": 3, "s_list": [1, 2], "replicas": 4, "g": 16}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Inradius);
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn kind_specific_fields_are_required() {
        for text in [
            r#"{"kind": "heat-content", "s_list": [1]}"#,
            r#"{"kind": "capacity", "shape": "path"}"#,
            r#"{"kind": "capacity"}"#,
            r#"{"kind": "cover-time", "s_list": [1]}"#,
            r#"{"kind": "inradius", "s_list": [2, 1]}"#,
            r#"{"kind": "inradius", "s_list": [1], "replicas": 0}"#,
            r#"{"kind": "conjecture-probe", "m": 4, "s_list": [1]}"#,
            r#"{"kind": "spectrum", "eps_list": [0.3]}"#,
            r#"{"kind": "inradius", "s_list": [1], "typo": 1}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }
}
