//! Matching parameters: feature weights, Φ sensitivities and thresholds.
//!
//! The text format is one `key = value` pair per line; `#` starts a comment.
//! Unspecified keys keep their defaults.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::fourier::OrientationConfig;
use crate::features::phi::phi_unchecked;

/// Relative importance of the six feature groups; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub spatial: f64,
    pub shape: f64,
    pub color: f64,
    pub rotation: f64,
    pub scale: f64,
    pub texture: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            spatial: 0.30,
            shape: 0.30,
            color: 0.11,
            rotation: 0.11,
            scale: 0.11,
            texture: 0.07,
        }
    }
}

impl Weights {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.spatial,
            self.shape,
            self.color,
            self.rotation,
            self.scale,
            self.texture,
        ]
    }

    pub fn from_array(w: [f64; 6]) -> Self {
        Self {
            spatial: w[0],
            shape: w[1],
            color: w[2],
            rotation: w[3],
            scale: w[4],
            texture: w[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// Φ parameters for one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub fx: f64,
    pub fy: f64,
}

impl Sensitivity {
    pub const fn new(fx: f64, fy: f64) -> Self {
        Self { fx, fy }
    }

    /// Φ applied to a distance.
    pub fn sim(&self, x: f64) -> f64 {
        phi_unchecked(x.max(0.0), self.fx, self.fy)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.fx > 0.0 && self.fx.is_finite()) || !(self.fy > 0.0 && self.fy < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} sensitivity needs fx > 0 and 0 < fy < 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityConfig {
    pub fourier_descriptors_threshold: f64,
    pub circular_symmetry_threshold: f64,
    pub spatial_similarity_threshold: f64,
    pub symmetry_maxima_threshold: f64,
    pub global_similarity_threshold: f64,
    pub spatial: Sensitivity,
    pub shape: Sensitivity,
    pub color: Sensitivity,
    pub rotation: Sensitivity,
    pub texture: Sensitivity,
    pub scale: Sensitivity,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            fourier_descriptors_threshold: 0.98,
            circular_symmetry_threshold: 0.99,
            spatial_similarity_threshold: 0.30,
            symmetry_maxima_threshold: 0.10,
            global_similarity_threshold: 0.70,
            spatial: Sensitivity::new(90.0, 0.40),
            shape: Sensitivity::new(0.005, 0.20),
            color: Sensitivity::new(110.0, 0.40),
            rotation: Sensitivity::new(90.0, 0.40),
            texture: Sensitivity::new(110.0, 0.40),
            scale: Sensitivity::new(0.50, 0.40),
        }
    }
}

impl SensitivityConfig {
    pub fn orientation(&self) -> OrientationConfig {
        OrientationConfig {
            symmetry_maxima_threshold: self.symmetry_maxima_threshold,
            circular_symmetry_threshold: self.circular_symmetry_threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fourier_descriptors_threshold", self.fourier_descriptors_threshold),
            ("circular_symmetry_threshold", self.circular_symmetry_threshold),
            ("spatial_similarity_threshold", self.spatial_similarity_threshold),
            ("symmetry_maxima_threshold", self.symmetry_maxima_threshold),
            ("global_similarity_threshold", self.global_similarity_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1]")));
            }
        }
        for (name, s) in self.features() {
            s.validate(name)?;
        }
        Ok(())
    }

    fn features(&self) -> [(&'static str, Sensitivity); 6] {
        [
            ("spatial", self.spatial),
            ("shape", self.shape),
            ("color", self.color),
            ("rotation", self.rotation),
            ("texture", self.texture),
            ("scale", self.scale),
        ]
    }
}

/// Weights plus sensitivities, as read from a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchConfig {
    pub weights: Weights,
    pub sensitivity: SensitivityConfig,
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.sensitivity.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = MatchConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("`{}` is not a number", value.trim())))?;
            let slot = cfg.slot(key).ok_or_else(|| err(format!("unknown key `{key}`")))?;
            *slot = value;
        }
        cfg.validate().map_err(|e| Error::Config {
            line: 0,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        let s = &mut self.sensitivity;
        let w = &mut self.weights;
        Some(match key {
            "fourier_descriptors_threshold" => &mut s.fourier_descriptors_threshold,
            "circular_symmetry_threshold" => &mut s.circular_symmetry_threshold,
            "spatial_similarity_threshold" => &mut s.spatial_similarity_threshold,
            "symmetry_maxima_threshold" => &mut s.symmetry_maxima_threshold,
            "global_similarity_threshold" => &mut s.global_similarity_threshold,
            "spatial_similarity_weight" => &mut w.spatial,
            "spatial_similarity_sensitivity_fx" => &mut s.spatial.fx,
            "spatial_similarity_sensitivity_fy" => &mut s.spatial.fy,
            "shape_similarity_weight" => &mut w.shape,
            "shape_similarity_sensitivity_fx" => &mut s.shape.fx,
            "shape_similarity_sensitivity_fy" => &mut s.shape.fy,
            "color_similarity_weight" => &mut w.color,
            "color_similarity_sensitivity_fx" => &mut s.color.fx,
            "color_similarity_sensitivity_fy" => &mut s.color.fy,
            "rotation_similarity_weight" => &mut w.rotation,
            "rotation_similarity_sensitivity_fx" => &mut s.rotation.fx,
            "rotation_similarity_sensitivity_fy" => &mut s.rotation.fy,
            "texture_similarity_weight" => &mut w.texture,
            "texture_similarity_sensitivity_fx" => &mut s.texture.fx,
            "texture_similarity_sensitivity_fy" => &mut s.texture.fy,
            "scale_similarity_weight" => &mut w.scale,
            "scale_similarity_sensitivity_fx" => &mut s.scale.fx,
            "scale_similarity_sensitivity_fy" => &mut s.scale.fy,
            _ => return None,
        })
    }

    /// Renders every key in file order; `parse(to_text())` round-trips.
    pub fn to_text(&self) -> String {
        let s = &self.sensitivity;
        let w = &self.weights;
        let mut out = String::new();
        let mut put = |k: &str, v: f64| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("fourier_descriptors_threshold", s.fourier_descriptors_threshold);
        put("circular_symmetry_threshold", s.circular_symmetry_threshold);
        put("spatial_similarity_threshold", s.spatial_similarity_threshold);
        put("symmetry_maxima_threshold", s.symmetry_maxima_threshold);
        for (name, weight, sens) in [
            ("spatial", w.spatial, s.spatial),
            ("shape", w.shape, s.shape),
            ("color", w.color, s.color),
            ("rotation", w.rotation, s.rotation),
            ("texture", w.texture, s.texture),
            ("scale", w.scale, s.scale),
        ] {
            put(&format!("{name}_similarity_weight"), weight);
            put(&format!("{name}_similarity_sensitivity_fx"), sens.fx);
            put(&format!("{name}_similarity_sensitivity_fy"), sens.fy);
        }
        put("global_similarity_threshold", s.global_similarity_threshold);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_sum_to_one() {
        let c = MatchConfig::default();
        c.validate().unwrap();
        let sum: f64 = c.weights.as_array().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip() {
        let c = MatchConfig::default();
        assert_eq!(MatchConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn partial_file_overrides() {
        let c = MatchConfig::parse("# tuned\nglobal_similarity_threshold = 0.5\n\n").unwrap();
        assert_eq!(c.sensitivity.global_similarity_threshold, 0.5);
        assert_eq!(c.sensitivity.color, SensitivityConfig::default().color);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            MatchConfig::parse("a = 1"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            MatchConfig::parse("\nshape_similarity_weight = x"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(MatchConfig::parse("shape_similarity_weight = 0.9").is_err());
        assert!(MatchConfig::parse("color_similarity_sensitivity_fy = 1.5").is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::from_array([1.0 / 6.0; 6]).validate().is_ok());
        assert!(Weights::from_array([0.5, 0.5, 0.1, 0.0, 0.0, 0.0]).validate().is_err());
        assert!(Weights::from_array([1.2, -0.2, 0.0, 0.0, 0.0, 0.0]).validate().is_err());
    }
}
