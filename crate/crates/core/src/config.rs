//! Versioned TOML run configuration shared by every pipeline stage.
//!
//! ```toml
//! version = 1
//!
//! [array]
//! path = "arrays/default12.toml"   # omit for the built-in 12-microphone layout
//!
//! [grid]
//! res_elevation = 8
//! res_azimuth = 16
//!
//! [signal]
//! fs = 16000
//! k = 4096
//! overlap = 0.25
//!
//! [srp]
//! method = "lc-edge"               # fd | td | lc | lc-edge
//!
//! [model]
//! variant = "em"                   # baseline | el | em | es
//! weights = "weights/em.c3de"      # omit to use seeded random weights
//! seed = 7
//!
//! [scene]
//! room = [6.0, 5.0, 3.0]
//! t60 = 0.0                        # or: beta = 0.0
//! array_center = [2.0, 2.0, 1.5]
//! duration_s = 2.0
//! snr_db = 20.0                    # omit for a noise-free clip
//! seed = 1
//! sources = [{ start_s = 0.0, position = [4.5, 3.5, 1.6] }]
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::{CandidateGrid, MicArray};
use crate::net::{NetConfig, Variant};
use crate::signal::{FrameSpec, WindowKind};
use crate::simroom::{Absorption, Scene, Segment};
use crate::srp::SrpMethod;
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub srp: SrpSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub scene: Option<SceneSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub res_elevation: usize,
    pub res_azimuth: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            res_elevation: 8,
            res_azimuth: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub fs: u32,
    pub k: usize,
    pub overlap: f64,
    #[serde(default = "default_window")]
    pub window: WindowKind,
}

fn default_window() -> WindowKind {
    WindowKind::Hann
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            fs: 16000,
            k: 4096,
            overlap: 0.25,
            window: WindowKind::Hann,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrpSection {
    pub method: SrpMethod,
}

impl Default for SrpSection {
    fn default() -> Self {
        Self {
            method: SrpMethod::LcEdge,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub variant: Variant,
    pub weights: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            variant: Variant::Em,
            weights: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub room: [f64; 3],
    pub t60: Option<f64>,
    pub beta: Option<f64>,
    pub array_center: [f64; 3],
    pub duration_s: f64,
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub max_order: Option<i32>,
    /// Mono dry source; seeded white noise when omitted.
    pub dry: Option<PathBuf>,
    pub sources: Vec<Segment>,
}

impl SceneSection {
    pub fn scene(&self) -> Result<Scene> {
        let absorption = match (self.t60, self.beta) {
            (Some(t), None) => Absorption::T60(t),
            (None, Some(b)) => Absorption::Beta(b),
            (None, None) => Absorption::Beta(0.0),
            (Some(_), Some(_)) => {
                return Err(Error::Config("scene: give either t60 or beta, not both".into()))
            }
        };
        if !(self.duration_s > 0.0) {
            return Err(Error::Config("scene: duration_s must be positive".into()));
        }
        let scene = Scene {
            room_dims: self.room,
            absorption,
            trajectory: self.sources.clone(),
            array_center: self.array_center,
            snr_db: self.snr_db,
            seed: self.seed,
            max_order: self.max_order,
        };
        scene.validate()?;
        Ok(scene)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config; relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.array.path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.model.weights.as_mut() {
            fix(p);
        }
        if let Some(p) = self.scene.as_mut().and_then(|s| s.dry.as_mut()) {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Version {
                found: self.version,
                expected: CONFIG_VERSION,
            });
        }
        self.frame_spec()?;
        if self.signal.fs == 0 {
            return Err(Error::Config("signal.fs must be positive".into()));
        }
        self.net_config().branch_depth()?;
        Ok(())
    }

    pub fn frame_spec(&self) -> Result<FrameSpec> {
        FrameSpec::new(self.signal.k, self.signal.overlap, self.signal.window)
    }

    pub fn grid(&self) -> Result<CandidateGrid> {
        CandidateGrid::new(self.grid.res_elevation, self.grid.res_azimuth)
    }

    pub fn array(&self) -> Result<MicArray> {
        match &self.array.path {
            Some(p) => MicArray::load(p),
            None => Ok(MicArray::default_12()),
        }
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig::variant(self.model.variant, self.grid.res_elevation, self.grid.res_azimuth)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            array: ArraySection::default(),
            grid: GridSection::default(),
            signal: SignalSection::default(),
            srp: SrpSection::default(),
            model: ModelSection::default(),
            scene: None,
            output: OutputSection::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
version = 1
[grid]
res_elevation = 4
res_azimuth = 8
[signal]
fs = 16000
k = 1024
overlap = 0.5
[srp]
method = "td"
[model]
variant = "es"
seed = 3
[scene]
room = [6.0, 5.0, 3.0]
beta = 0.0
array_center = [2.0, 2.0, 1.5]
duration_s = 1.0
sources = [{ start_s = 0.0, position = [4.5, 3.5, 1.6] }]
"#;

    #[test]
    fn parses_and_derives() {
        let cfg = RunConfig::from_toml_str(EXAMPLE).unwrap();
        assert_eq!(cfg.srp.method, SrpMethod::Td);
        let net = cfg.net_config();
        assert_eq!((net.channels, net.depthwise), (8, true));
        assert_eq!(cfg.frame_spec().unwrap().hop(), 512);
        assert!(cfg.scene.as_ref().unwrap().scene().is_ok());
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_str(&EXAMPLE.replace("k = 1024", "k = 1000")).is_err());
        assert!(matches!(
            RunConfig::from_toml_str(&EXAMPLE.replace("version = 1", "version = 2")),
            Err(Error::Version { .. })
        ));
        assert!(RunConfig::from_toml_str(&EXAMPLE.replace("res_azimuth = 8", "res_azimuth = 12")).is_err());
        assert!(RunConfig::from_toml_str(&EXAMPLE.replace("variant = \"es\"", "variant = \"xl\"")).is_err());
        assert!(RunConfig::from_toml_str(&format!("{EXAMPLE}\nbogus = 1")).is_err());
    }

    #[test]
    fn variant_table() {
        for (v, c, dw) in [
            (Variant::Baseline, 32, false),
            (Variant::El, 32, true),
            (Variant::Em, 16, true),
            (Variant::Es, 8, true),
        ] {
            let cfg = RunConfig {
                model: ModelSection { variant: v, ..ModelSection::default() },
                ..RunConfig::default()
            };
            assert_eq!((cfg.net_config().channels, cfg.net_config().depthwise), (c, dw));
        }
    }
}
