//! Run configuration: INI sections layered under command-line overrides.
//!
//! Each `[section]` corresponds to one library config struct. Values are
//! typed by the struct's defaults, so unknown keys and malformed values are
//! caught before any work starts.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};
use ucdi_core::dataprep::{AugmentConfig, DedupConfig};
use ucdi_core::damage::AnalysisConfig;

/// Environment variable naming a config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "UCDI_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub analysis: AnalysisConfig,
    pub dedup: DedupConfig,
    pub augment: AugmentConfig,
}

/// `section → key → raw value`, in file order of first appearance.
pub type Ini = BTreeMap<String, BTreeMap<String, String>>;

/// Parses flat `key = value` lines under `[section]` headers. `#` and `;`
/// start comment lines.
pub fn parse_ini(text: &str) -> Result<Ini> {
    let mut out = Ini::new();
    let mut section: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("line {}: unterminated section header", n + 1))?;
            section = Some(name.trim().to_string());
            out.entry(name.trim().to_string()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
        let sec = section
            .as_ref()
            .ok_or_else(|| anyhow!("line {}: key outside any [section]", n + 1))?;
        out.get_mut(sec)
            .expect("section created on header")
            .insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

/// JSON path of each INI section inside a serialised [`RunConfig`].
const SECTIONS: [(&str, &[&str]); 8] = [
    ("background", &["analysis", "background"]),
    ("enhance", &["analysis", "enhance"]),
    ("align", &["analysis", "align"]),
    ("detector", &["analysis", "align", "detector"]),
    ("damage", &["analysis", "damage"]),
    ("ucdi", &["analysis", "ucdi"]),
    ("dedup", &["dedup"]),
    ("augment", &["augment"]),
];

fn typed(template: &Value, raw: &str) -> Option<Value> {
    match template {
        Value::Bool(_) => match raw {
            "true" | "yes" | "on" | "1" => Some(Value::Bool(true)),
            "false" | "no" | "off" | "0" => Some(Value::Bool(false)),
            _ => None,
        },
        Value::Number(n) if n.is_f64() => raw.parse::<f64>().ok().and_then(Number::from_f64).map(Value::Number),
        Value::Number(n) if n.is_u64() => raw.parse::<u64>().ok().map(|v| Value::Number(v.into())),
        Value::Number(_) => raw.parse::<i64>().ok().map(|v| Value::Number(v.into())),
        Value::String(_) => Some(Value::String(raw.to_string())),
        Value::Array(items) => {
            let parts: Vec<&str> = raw.split([',', 'x']).map(str::trim).collect();
            if parts.len() != items.len() {
                return None;
            }
            items.iter().zip(parts).map(|(t, p)| typed(t, p)).collect::<Option<Vec<_>>>().map(Value::Array)
        }
        _ => None,
    }
}

fn section_mut<'a>(root: &'a mut Value, path: &[&str]) -> &'a mut Map<String, Value> {
    let mut cur = root;
    for p in path {
        cur = cur.get_mut(*p).expect("section path exists in the defaults");
    }
    cur.as_object_mut().expect("sections are objects")
}

impl RunConfig {
    /// Applies INI values over `self`, rejecting unknown sections and keys.
    pub fn apply(&mut self, ini: &Ini) -> Result<()> {
        let mut root = serde_json::to_value(&*self)?;
        for (section, entries) in ini {
            let path = SECTIONS
                .iter()
                .find(|(name, _)| name == section)
                .map(|(_, p)| *p)
                .ok_or_else(|| anyhow!("unknown config section [{section}]"))?;
            let obj = section_mut(&mut root, path);
            for (key, raw) in entries {
                let slot = obj
                    .get_mut(key)
                    .filter(|v| !v.is_object())
                    .ok_or_else(|| anyhow!("unknown config key {section}.{key}"))?;
                *slot = typed(slot, raw).ok_or_else(|| anyhow!("bad value for {section}.{key}: {raw:?}"))?;
            }
        }
        *self = serde_json::from_value(root).context("config does not fit its schema")?;
        Ok(())
    }

    /// Applies `section.key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        let mut ini = Ini::new();
        for o in overrides {
            let (lhs, value) = o.split_once('=').ok_or_else(|| anyhow!("override {o:?} is not section.key=value"))?;
            let (section, key) = lhs
                .trim()
                .split_once('.')
                .ok_or_else(|| anyhow!("override {o:?} is not section.key=value"))?;
            ini.entry(section.to_string()).or_default().insert(key.to_string(), value.trim().to_string());
        }
        self.apply(&ini)
    }

    pub fn validate(&self) -> Result<()> {
        self.analysis.validate()?;
        self.dedup.validate()?;
        self.augment.validate()?;
        Ok(())
    }

    /// Defaults, then the config file, then overrides; validated as a whole.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(file) = path {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading config {}", file.display()))?;
            let ini = parse_ini(&text).with_context(|| format!("parsing config {}", file.display()))?;
            cfg.apply(&ini).with_context(|| format!("config {}", file.display()))?;
        }
        cfg.apply_overrides(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let ini = parse_ini("# top\n[align]\nratio_test = 0.7\n; note\n[ucdi]\nz_max=10\n").unwrap();
        assert_eq!(ini["align"]["ratio_test"], "0.7");
        assert_eq!(ini["ucdi"]["z_max"], "10");
        assert!(parse_ini("ratio_test = 1").is_err());
        assert!(parse_ini("[align\n").is_err());
    }

    #[test]
    fn values_are_typed_by_defaults() {
        let mut cfg = RunConfig::default();
        let ini = parse_ini(
            "[enhance]\nclahe_tiles = 4x4\nmedian_enabled = false\n[detector]\nmax_keypoints = 300\n[ucdi]\nweights = 0.5,0.2,0.1,0.1,0.05,0.05\n",
        )
        .unwrap();
        cfg.apply(&ini).unwrap();
        assert_eq!(cfg.analysis.enhance.clahe_tiles, (4, 4));
        assert!(!cfg.analysis.enhance.median_enabled);
        assert_eq!(cfg.analysis.align.detector.max_keypoints, 300);
        assert_eq!(cfg.analysis.ucdi.weights[0], 0.5);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply(&parse_ini("[align]\nratio = 0.7\n").unwrap()).is_err());
        assert!(cfg.apply(&parse_ini("[colour]\nx = 1\n").unwrap()).is_err());
        assert!(cfg.apply(&parse_ini("[align]\nmin_inliers = many\n").unwrap()).is_err());
        assert!(cfg.apply(&parse_ini("[align]\ndetector = 3\n").unwrap()).is_err());
    }

    #[test]
    fn overrides_win_and_are_validated() {
        let mut cfg = RunConfig::default();
        cfg.apply(&parse_ini("[dedup]\nthreshold = 3\n").unwrap()).unwrap();
        cfg.apply_overrides(&["dedup.threshold=7".into()]).unwrap();
        assert_eq!(cfg.dedup.threshold, 7);
        cfg.apply_overrides(&["align.ratio_test=1.5".into()]).unwrap();
        assert!(cfg.validate().is_err());
        assert!(cfg.apply_overrides(&["threshold=1".into()]).is_err());
    }
}
