//! Unified Currency Damage Index.
//!
//! Seven damage measurements are normalised, passed through per-term
//! nonlinearities, combined with fixed perceptual weights, capped when
//! symbolic loss and material loss are both severe, and clamped to `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UcdiConfig {
    pub epsilon: f64,
    pub z_max: f64,
    /// Weights for the binary, RGB, edge, corner, feature and cluster terms.
    pub weights: [f64; 6],
    pub override_feature_ratio: f64,
    pub override_binary_floor: f64,
    pub override_cap: f64,
}

impl Default for UcdiConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            z_max: 20.0,
            weights: [0.4, 0.2, 0.15, 0.15, 0.05, 0.05],
            override_feature_ratio: 0.45,
            override_binary_floor: 5.0,
            override_cap: 0.65,
        }
    }
}

impl UcdiConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("ucdi: {m}")));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be > 0");
        }
        if !(self.z_max > 0.0) {
            return bad("z_max must be > 0");
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return bad("weights must be positive");
        }
        if !self.override_cap.is_finite()
            || !self.override_feature_ratio.is_finite()
            || !self.override_binary_floor.is_finite()
        {
            return bad("override parameters must be finite");
        }
        Ok(())
    }
}

/// The seven measurements the score is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcdiInputs {
    /// Binary (material) damage, percent.
    pub binary: f64,
    /// RGB (chromatic) damage, percent.
    pub rgb: f64,
    /// Damaged edges, 0–4.
    pub edges: u32,
    /// Damaged corners, 0–4.
    pub corners: u32,
    /// Missing key features.
    pub missing_features: usize,
    /// Total detected features.
    pub total_features: usize,
    /// Distinct damaged regions.
    pub regions: usize,
}

impl UcdiInputs {
    pub fn pristine(total_features: usize) -> Self {
        Self {
            binary: 0.0,
            rgb: 0.0,
            edges: 0,
            corners: 0,
            missing_features: 0,
            total_features,
            regions: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInputs(m));
        if !(0.0..=100.0).contains(&self.binary) {
            return bad(format!("binary damage {} outside [0, 100]", self.binary));
        }
        if !(0.0..=100.0).contains(&self.rgb) {
            return bad(format!("rgb damage {} outside [0, 100]", self.rgb));
        }
        if self.edges > 4 || self.corners > 4 {
            return bad(format!(
                "edge/corner counts ({}, {}) exceed 4",
                self.edges, self.corners
            ));
        }
        if self.missing_features > self.total_features {
            return bad(format!(
                "missing features {} exceed total {}",
                self.missing_features, self.total_features
            ));
        }
        Ok(())
    }
}

/// Term-by-term account of one score, in binary/RGB/edge/corner/feature/cluster order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcdiBreakdown {
    pub normalized: [f64; 6],
    pub transformed: [f64; 6],
    pub contributions: [f64; 6],
    /// `1 − Σ contributions`, before the override and the clamp.
    pub weighted_score: f64,
    pub override_fired: bool,
    /// Value after the override, before clamping.
    pub pre_clamp: f64,
    pub clamp_fired: bool,
    pub score: f64,
}

impl UcdiBreakdown {
    pub const TERM_NAMES: [&'static str; 6] =
        ["binary", "rgb", "edges", "corners", "features", "regions"];
}

pub fn explain_ucdi(inputs: &UcdiInputs, config: &UcdiConfig) -> Result<UcdiBreakdown> {
    inputs.validate()?;
    config.validate()?;
    let eps = config.epsilon;

    let normalized = [
        inputs.binary / (100.0 + eps),
        inputs.rgb / (100.0 + eps),
        inputs.edges as f64 / 4.0,
        inputs.corners as f64 / 4.0,
        inputs.missing_features as f64 / (inputs.total_features as f64 + eps),
        inputs.regions as f64 / (config.z_max + eps),
    ];
    let [b, r, e, c, f, z] = normalized;
    let transformed = [
        2.0 * b,
        2.0 * r,
        1.5 * e,
        c.powf(1.5),
        (1.0 + f).ln(),
        z.tanh(),
    ];
    let mut contributions = [0.0; 6];
    for (i, slot) in contributions.iter_mut().enumerate() {
        *slot = config.weights[i] * transformed[i];
    }
    let weighted_score = 1.0 - contributions.iter().sum::<f64>();

    // The override uses the exact ratio F/N, not the ε-regularised one.
    let feature_ratio = if inputs.total_features == 0 {
        0.0
    } else {
        inputs.missing_features as f64 / inputs.total_features as f64
    };
    let override_fired = feature_ratio > config.override_feature_ratio
        && inputs.binary > config.override_binary_floor;
    let pre_clamp = if override_fired {
        weighted_score.min(config.override_cap)
    } else {
        weighted_score
    };
    let score = pre_clamp.clamp(0.0, 1.0);
    Ok(UcdiBreakdown {
        normalized,
        transformed,
        contributions,
        weighted_score,
        override_fired,
        pre_clamp,
        clamp_fired: score != pre_clamp,
        score,
    })
}

pub fn compute_ucdi(inputs: &UcdiInputs, config: &UcdiConfig) -> Result<f64> {
    explain_ucdi(inputs, config).map(|b| b.score)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(b: f64, r: f64, e: u32, c: u32, f: usize, n: usize, z: usize) -> UcdiInputs {
        UcdiInputs {
            binary: b,
            rgb: r,
            edges: e,
            corners: c,
            missing_features: f,
            total_features: n,
            regions: z,
        }
    }

    #[test]
    fn reference_cases() {
        let cfg = UcdiConfig::default();
        let case1 = compute_ucdi(&inputs(0.0, 24.1346, 0, 0, 60, 73, 0), &cfg).unwrap();
        assert!((case1 - 0.8735).abs() <= 1e-3, "{case1}");
        let case3 = compute_ucdi(&inputs(0.0, 20.9730, 0, 0, 67, 100, 0), &cfg).unwrap();
        assert!((case3 - 0.8905).abs() <= 1e-3, "{case3}");
        let case2 = compute_ucdi(&inputs(7.6906, 13.8539, 2, 1, 26, 60, 3), &cfg).unwrap();
        assert!((case2 - 0.7264).abs() <= 1e-3, "{case2}");
    }

    #[test]
    fn pristine_scores_one() {
        let b = explain_ucdi(&UcdiInputs::pristine(23), &UcdiConfig::default()).unwrap();
        assert_eq!(b.score, 1.0);
        assert!(b.contributions.iter().all(|&c| c == 0.0));
        assert!(!b.override_fired && !b.clamp_fired);
    }

    #[test]
    fn override_caps_score() {
        let b = explain_ucdi(&inputs(10.0, 0.0, 0, 0, 50, 100, 0), &UcdiConfig::default()).unwrap();
        let uncapped = 1.0 - (0.08 + 0.05 * 1.5f64.ln());
        assert!((b.weighted_score - uncapped).abs() < 1e-6);
        assert!(b.override_fired);
        assert_eq!(b.score, 0.65);
    }

    #[test]
    fn worst_case_clamps_to_zero() {
        let b = explain_ucdi(
            &inputs(100.0, 100.0, 4, 4, 10, 10, 100),
            &UcdiConfig::default(),
        )
        .unwrap();
        assert!(b.weighted_score < 0.0);
        assert!(b.clamp_fired);
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn rejects_inadmissible_inputs() {
        let cfg = UcdiConfig::default();
        assert!(compute_ucdi(&inputs(0.0, 0.0, 0, 0, 1, 0, 0), &cfg).is_err());
        assert!(compute_ucdi(&inputs(101.0, 0.0, 0, 0, 0, 0, 0), &cfg).is_err());
        assert!(compute_ucdi(&inputs(0.0, 0.0, 5, 0, 0, 0, 0), &cfg).is_err());
        assert!(compute_ucdi(&inputs(f64::NAN, 0.0, 0, 0, 0, 0, 0), &cfg).is_err());
        assert_eq!(
            compute_ucdi(&inputs(0.0, 0.0, 0, 0, 0, 0, 0), &cfg).unwrap(),
            1.0
        );
    }
}
