use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::grid::{ImageGrid, ProjectionGeometry};
use crate::motion::MotionSamplerConfig;
use crate::phantom::PhantomSpec;
use crate::projector::{default_geometry, NoiseSpec};
use crate::recon::SirtConfig;
use crate::scalar::Real;

/// Optional replacements for the image-derived default geometry.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeometryOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_angles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_detectors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_spacing_mm: Option<f64>,
}

impl GeometryOverrides {
    pub fn apply<T: Real>(&self, img: &ImageGrid<T>) -> Result<ProjectionGeometry> {
        let mut g = default_geometry(img, self.n_angles);
        if let Some(n) = self.n_detectors {
            g.n_detectors = n;
        }
        if let Some(d) = self.detector_spacing_mm {
            g.detector_spacing_mm = d;
        }
        g.validate()?;
        Ok(g)
    }
}

/// Dataset recipe. Seeds inside `phantom`, `noise` and `motion` are ignored:
/// every item derives its own from `master_seed` (see [`crate::rng`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub phantom: PhantomSpec,
    #[serde(default)]
    pub geometry: GeometryOverrides,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub motion: MotionSamplerConfig,
    pub sirt_reduced: SirtConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sirt_converged: Option<SirtConfig>,
    pub n_pairs: usize,
    #[serde(default = "yes")]
    pub emit_blur_matched: bool,
    #[serde(default)]
    pub master_seed: u64,
}

fn yes() -> bool {
    true
}

impl PipelineConfig {
    /// 128 x 128 distal phantom, 360 views, splice of 40 views, SIRT 30.
    pub fn desk() -> Self {
        Self {
            phantom: PhantomSpec::distal(128, 0),
            geometry: GeometryOverrides {
                n_angles: Some(360),
                ..Default::default()
            },
            noise: NoiseSpec {
                sigma: 0.02,
                seed: 0,
            },
            motion: MotionSamplerConfig {
                span_views: 40,
                ..Default::default()
            },
            sirt_reduced: SirtConfig::with_iterations(30),
            sirt_converged: None,
            n_pairs: 20,
            emit_blur_matched: true,
            master_seed: 0,
        }
    }

    /// 256 x 256 distal phantom, 1800 views, splice of 200 views, SIRT 50.
    pub fn paper() -> Self {
        Self {
            phantom: PhantomSpec::distal(256, 0),
            geometry: GeometryOverrides::default(),
            motion: MotionSamplerConfig::default(),
            sirt_reduced: SirtConfig::reduced(),
            n_pairs: 100,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_pairs >= 1, Validation, "n_pairs must be at least 1");
        self.phantom.validate()?;
        self.motion.validate()?;
        self.sirt_reduced.validate()?;
        if let Some(c) = &self.sirt_converged {
            c.validate()?;
        }
        ensure!(
            self.noise.sigma.is_finite() && self.noise.sigma >= 0.0,
            Validation,
            "noise sigma must be nonnegative"
        );
        Ok(())
    }

    /// Parse TOML or JSON, chosen by file extension (`.json` is JSON, anything else TOML).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Format {
                path: path.into(),
                msg: e.to_string(),
            })?
        } else {
            toml::from_str(&text).map_err(|e| Error::Format {
                path: path.into(),
                msg: e.to_string(),
            })?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
