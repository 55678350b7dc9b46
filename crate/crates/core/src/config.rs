//! Tunable thresholds and geometry for the kernel.
//!
//! Every value has a default, so an empty config file (or none at all) is
//! valid. Config files are TOML with one table per subsystem.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config value out of range: {0}")]
    Range(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub gesture: GestureConfig,
    pub selection: SelectionConfig,
    pub regions: RegionConfig,
    pub layout: LayoutConfig,
    pub session: SessionConfig,
}

/// Touch and hand gesture thresholds. Pixels are viewport pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GestureConfig {
    /// Width of the activation strip along the left and right screen edges.
    pub side_zone_px: f64,
    pub tap_max_ms: u64,
    pub long_press_ms: u64,
    /// Movement at or below this distance still counts as a stationary press.
    pub slop_px: f64,
    pub flick_min_px_per_s: f64,
    /// Look-back window for release velocity estimation.
    pub velocity_window_ms: u64,
    pub throw_min_m_per_s: f64,
}

impl Default for GestureConfig {
    fn default() -> Self {
        Self {
            side_zone_px: 24.0,
            tap_max_ms: 300,
            long_press_ms: 500,
            slop_px: 8.0,
            flick_min_px_per_s: 800.0,
            velocity_window_ms: 100,
            throw_min_m_per_s: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// Minimum fraction of an element's own area that a rubberband must cover.
    pub rubberband_threshold: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            rubberband_threshold: 0.5,
        }
    }
}

/// Geometry of the three spatial regions, in meters and degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub fov_radius_m: f64,
    pub fov_half_angle_deg: f64,
    pub phone_radius_m: f64,
    pub phone_screen_w_m: f64,
    pub phone_screen_h_m: f64,
    pub implicit_floor_y: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            fov_radius_m: 0.35,
            fov_half_angle_deg: 60.0,
            phone_radius_m: 0.25,
            phone_screen_w_m: 0.07,
            phone_screen_h_m: 0.15,
            implicit_floor_y: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StripSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    /// Vertical gap between stacked phone-anchored items.
    pub strip_gap_m: f64,
    pub strip_side: StripSide,
    /// Number of strip slots visible at once in the scrollable layout.
    pub strip_window: usize,
    /// Offloaded items are shown this much larger than on the phone screen.
    pub offload_scale: f64,
    /// Fraction of the viewport left above a counterpart when scrolling to it.
    pub scroll_margin: f64,
    /// Slack around an item's panel within which a pinch grabs it.
    pub grab_margin_m: f64,
    /// Longest side of an offloaded item; larger items shrink to fit.
    pub max_item_m: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            strip_gap_m: 0.02,
            strip_side: StripSide::Right,
            strip_window: 4,
            offload_scale: 1.5,
            scroll_margin: 0.15,
            grab_margin_m: 0.03,
            max_item_m: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub max_image_bytes: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            max_image_bytes: 8 * 1024 * 1024,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("gesture.slop_px", self.gesture.slop_px),
            ("gesture.flick_min_px_per_s", self.gesture.flick_min_px_per_s),
            ("gesture.throw_min_m_per_s", self.gesture.throw_min_m_per_s),
            ("regions.fov_radius_m", self.regions.fov_radius_m),
            ("regions.phone_radius_m", self.regions.phone_radius_m),
            ("regions.phone_screen_w_m", self.regions.phone_screen_w_m),
            ("regions.phone_screen_h_m", self.regions.phone_screen_h_m),
            ("layout.offload_scale", self.layout.offload_scale),
            ("layout.max_item_m", self.layout.max_item_m),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::Range(format!("{name} must be positive, got {value}")));
            }
        }
        let t = self.selection.rubberband_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(ConfigError::Range(format!(
                "selection.rubberband_threshold must be in (0, 1], got {t}"
            )));
        }
        let angle = self.regions.fov_half_angle_deg;
        if !(angle > 0.0 && angle <= 180.0) {
            return Err(ConfigError::Range(format!(
                "regions.fov_half_angle_deg must be in (0, 180], got {angle}"
            )));
        }
        if self.gesture.long_press_ms <= self.gesture.tap_max_ms {
            return Err(ConfigError::Range(
                "gesture.long_press_ms must exceed gesture.tap_max_ms".into(),
            ));
        }
        if self.layout.strip_window == 0 {
            return Err(ConfigError::Range("layout.strip_window must be at least 1".into()));
        }
        let finite = [
            ("layout.strip_gap_m", self.layout.strip_gap_m),
            ("layout.scroll_margin", self.layout.scroll_margin),
            ("layout.grab_margin_m", self.layout.grab_margin_m),
            ("regions.implicit_floor_y", self.regions.implicit_floor_y),
            ("gesture.side_zone_px", self.gesture.side_zone_px),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(ConfigError::Range(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_yields_defaults() {
        assert_eq!(Config::from_toml_str("").unwrap(), Config::default());
    }

    #[test]
    fn partial_override() {
        let c = Config::from_toml_str("[gesture]\ntap_max_ms = 200\n").unwrap();
        assert_eq!(c.gesture.tap_max_ms, 200);
        assert_eq!(c.gesture.long_press_ms, 500);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        assert!(Config::from_toml_str("[gesture]\ntap_ms = 1\n").is_err());
        assert!(Config::from_toml_str("[selection]\nrubberband_threshold = 0.0\n").is_err());
        assert!(Config::from_toml_str("[gesture]\nlong_press_ms = 100\n").is_err());
    }
}
