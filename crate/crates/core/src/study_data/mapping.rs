use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Conclusion, InconclusiveSubtype};
use crate::error::{Error, Result};

const ULERY2011: &str = include_str!("../../fixtures/mappings/ulery2011.toml");
const MONSON2022: &str = include_str!("../../fixtures/mappings/monson2022.toml");
const CANONICAL: &str = include_str!("../../fixtures/mappings/canonical.toml");

/// Raw study label -> canonical category, plus optional inconclusive
/// subtype labels.
///
/// The on-disk form is TOML:
///
/// ```toml
/// study_name = "monson2022"
/// [conclusions]
/// "Elimination" = "exclusion"
/// [subtypes]
/// "Inc-A" = "support_same"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConclusionMapping {
    pub study_name: String,
    #[serde(rename = "conclusions")]
    pub entries: BTreeMap<String, Conclusion>,
    #[serde(rename = "subtypes", default)]
    pub subtype_entries: BTreeMap<String, InconclusiveSubtype>,
}

impl ConclusionMapping {
    pub const BUILTIN: [&'static str; 3] = ["ulery2011", "monson2022", "canonical"];

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: ConclusionMapping =
            toml::from_str(text).map_err(|e| Error::MappingConfig(e.to_string()))?;
        for (label, c) in &m.entries {
            if m.subtype_entries.contains_key(label) && *c != Conclusion::Inconclusive {
                return Err(Error::MappingConfig(format!(
                    "label `{label}` has a subtype but maps to {}",
                    c.name()
                )));
            }
        }
        Ok(m)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let text = match name {
            "ulery2011" => ULERY2011,
            "monson2022" => MONSON2022,
            "canonical" => CANONICAL,
            _ => return None,
        };
        Some(Self::from_toml_str(text).expect("built-in mapping parses"))
    }

    /// A built-in name or a path to a mapping file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::builtin(name_or_path) {
            Some(m) => Ok(m),
            None => Self::from_path(name_or_path),
        }
    }

    pub fn canonical(&self, raw: &str) -> Result<Conclusion> {
        self.entries
            .get(raw.trim())
            .copied()
            .ok_or_else(|| Error::UnmappedLabel(raw.to_string()))
    }

    pub fn subtype(&self, raw: &str) -> Option<InconclusiveSubtype> {
        self.subtype_entries.get(raw.trim()).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_cover_the_conclusion_scales() {
        let u = ConclusionMapping::builtin("ulery2011").unwrap();
        assert_eq!(u.canonical("Individualization").unwrap(), Conclusion::Identification);
        assert_eq!(u.canonical("No Value").unwrap(), Conclusion::Unsuitable);
        assert_eq!(u.subtype("Close"), Some(InconclusiveSubtype::SupportSame));
        let m = ConclusionMapping::builtin("monson2022").unwrap();
        assert_eq!(m.canonical("Elimination").unwrap(), Conclusion::Exclusion);
        assert_eq!(m.canonical("Inc-C").unwrap(), Conclusion::Inconclusive);
        assert_eq!(m.subtype("Inc-C"), Some(InconclusiveSubtype::SupportDifferent));
        assert!(matches!(m.canonical("Maybe"), Err(Error::UnmappedLabel(l)) if l == "Maybe"));
    }

    #[test]
    fn rejects_subtype_on_conclusive_label() {
        let text = "study_name = \"x\"\n[conclusions]\n\"A\" = \"identification\"\n[subtypes]\n\"A\" = \"support_same\"\n";
        assert!(matches!(ConclusionMapping::from_toml_str(text), Err(Error::MappingConfig(_))));
    }

    #[test]
    fn rejects_unknown_category() {
        let text = "study_name = \"x\"\n[conclusions]\n\"A\" = \"probable\"\n";
        assert!(ConclusionMapping::from_toml_str(text).is_err());
    }
}
