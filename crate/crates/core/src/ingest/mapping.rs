// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use super::Situation;
use crate::error::IngestError;

/// Situation classes and their default raw spellings.
const DEFAULT_SITUATIONS: [(Situation, &[&str]); 4] = [
    (Situation::Graduated, &["graduated", "formado", "concluido", "diplomado"]),
    (Situation::InProgress, &["enrolled", "active", "in_progress", "matriculado", "ativo", "cursando"]),
    (Situation::Deceased, &["deceased", "falecido", "obito"]),
    (
        Situation::Dropout,
        &[
            "dropout", "withdrawn", "abandoned", "cancelled", "transferred", "expelled",
            "desistente", "abandono", "cancelado", "transferido", "desligado", "jubilado",
        ],
    ),
];

fn situation_key(situation: Situation) -> &'static str {
    match situation {
        Situation::Graduated => "graduated",
        Situation::InProgress => "in_progress",
        Situation::Deceased => "deceased",
        Situation::Dropout => "dropout",
    }
}

/// Raw situation value to [`Situation`]; comparison ignores ASCII case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SituationMapping {
    classes: BTreeMap<Situation, BTreeSet<String>>,
}

impl Default for SituationMapping {
    fn default() -> Self {
        let classes = DEFAULT_SITUATIONS
            .iter()
            .map(|(s, values)| (*s, values.iter().map(|v| v.to_string()).collect()))
            .collect();
        Self { classes }
    }
}

impl SituationMapping {
    pub fn classify(&self, raw: &str) -> Option<Situation> {
        let key = raw.trim().to_ascii_lowercase();
        self.classes
            .iter()
            .find(|(_, values)| values.contains(&key))
            .map(|(situation, _)| *situation)
    }

    /// Replaces the raw values accepted for one situation.
    pub fn set_class(&mut self, situation: Situation, values: impl IntoIterator<Item = String>) {
        let values = values.into_iter().map(|v| v.trim().to_ascii_lowercase()).collect();
        self.classes.insert(situation, values);
    }

    fn overlap(&self) -> Option<String> {
        let mut seen = BTreeSet::new();
        self.classes.values().flatten().find(|v| !seen.insert(v.as_str())).cloned()
    }
}

/// Column-mapping config.
///
/// A `key=value` text file. Plain keys rename a source header to a canonical
/// header. Keys of the form `situation.<class>` (class one of `graduated`,
/// `in_progress`, `deceased`, `dropout`) replace the comma-separated list of
/// raw situation values accepted for that class. `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingConfig {
    columns: BTreeMap<String, String>,
    pub situations: SituationMapping,
}

impl MappingConfig {
    pub fn parse(text: &str, canonical: &[&str]) -> Result<Self, IngestError> {
        let mut config = MappingConfig::default();
        for (n, line) in key_value_lines(text) {
            let (key, value) = line.map_err(|message| IngestError::Mapping { line: n, message })?;
            if let Some(class) = key.strip_prefix("situation.") {
                let situation = DEFAULT_SITUATIONS
                    .iter()
                    .map(|(s, _)| *s)
                    .find(|s| situation_key(*s) == class)
                    .ok_or_else(|| IngestError::Mapping {
                        line: n,
                        message: format!("unknown situation class `{class}`"),
                    })?;
                let values = value
                    .split(',')
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .map(str::to_owned);
                config.situations.set_class(situation, values);
                if let Some(dup) = config.situations.overlap() {
                    return Err(IngestError::Mapping {
                        line: n,
                        message: format!("situation value `{dup}` mapped to two classes"),
                    });
                }
            } else {
                if !canonical.contains(&value) {
                    return Err(IngestError::Mapping {
                        line: n,
                        message: format!("`{value}` is not a canonical column"),
                    });
                }
                config.columns.insert(key.to_owned(), value.to_owned());
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path, canonical: &[&str]) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| IngestError::Io { path: path.to_owned(), source })?;
        Self::parse(&text, canonical)
    }

    pub fn rename_column(&mut self, source: impl Into<String>, canonical: impl Into<String>) {
        self.columns.insert(source.into(), canonical.into());
    }

    /// Canonical name for a source header.
    pub fn canonical<'a>(&'a self, header: &'a str) -> &'a str {
        self.columns.get(header).map(String::as_str).unwrap_or(header)
    }
}

/// Reference TDA values read from a cohort file's companion metadata.
///
/// Recognized keys: `national_avg`, `state_avg`, `institution_avg`, each a
/// percentage. Averages derivable from the cohort table take precedence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ReferenceConfig {
    pub national_avg: Option<f64>,
    pub state_avg: Option<f64>,
    pub institution_avg: Option<f64>,
}

impl ReferenceConfig {
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut config = ReferenceConfig::default();
        for (n, line) in key_value_lines(text) {
            let (key, value) = line.map_err(|message| IngestError::CohortMeta { line: n, message })?;
            let parsed: f64 = value.parse().map_err(|_| IngestError::CohortMeta {
                line: n,
                message: format!("`{value}` is not a number"),
            })?;
            if !(0.0..=100.0).contains(&parsed) {
                return Err(IngestError::CohortMeta {
                    line: n,
                    message: format!("{key} must be a percentage in [0,100]"),
                });
            }
            let slot = match key {
                "national_avg" => &mut config.national_avg,
                "state_avg" => &mut config.state_avg,
                "institution_avg" => &mut config.institution_avg,
                _ => {
                    return Err(IngestError::CohortMeta {
                        line: n,
                        message: format!("unknown key `{key}`"),
                    })
                }
            };
            *slot = Some(parsed);
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| IngestError::Io { path: path.to_owned(), source })?;
        Self::parse(&text)
    }
}

type KeyValue<'a> = Result<(&'a str, &'a str), String>;

fn key_value_lines(text: &str) -> impl Iterator<Item = (usize, KeyValue<'_>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let parsed = match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim(), v.trim())),
            _ => Err(format!("expected key=value, found `{line}`")),
        };
        Some((i + 1, parsed))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &[&str] = &["student_id", "grade"];

    #[test]
    fn default_mapping_classifies_case_insensitively() {
        let mapping = SituationMapping::default();
        assert_eq!(mapping.classify("Formado"), Some(Situation::Graduated));
        assert_eq!(mapping.classify(" ACTIVE "), Some(Situation::InProgress));
        assert_eq!(mapping.classify("transferred"), Some(Situation::Dropout));
        assert_eq!(mapping.classify("falecido"), Some(Situation::Deceased));
        assert_eq!(mapping.classify("on_leave"), None);
    }

    #[test]
    fn parses_renames_and_situation_classes() {
        let text = "# registrar export\nMATRICULA = student_id\nnota=grade\n\nsituation.dropout = desistente, trancado\n";
        let config = MappingConfig::parse(text, CANONICAL).unwrap();
        assert_eq!(config.canonical("MATRICULA"), "student_id");
        assert_eq!(config.canonical("nota"), "grade");
        assert_eq!(config.canonical("other"), "other");
        assert_eq!(config.situations.classify("Trancado"), Some(Situation::Dropout));
        // replaced, not extended
        assert_eq!(config.situations.classify("withdrawn"), None);
    }

    #[test]
    fn rejects_bad_mapping_lines() {
        let err = MappingConfig::parse("a=b", CANONICAL).unwrap_err();
        assert!(err.to_string().contains("`b` is not a canonical column"), "{err}");
        let err = MappingConfig::parse("\nnonsense", CANONICAL).unwrap_err();
        assert!(matches!(err, IngestError::Mapping { line: 2, .. }));
        let err = MappingConfig::parse("situation.graduated=dropout", CANONICAL).unwrap_err();
        assert!(err.to_string().contains("two classes"), "{err}");
        assert!(MappingConfig::parse("situation.leave=x", CANONICAL).is_err());
    }

    #[test]
    fn reference_config_reads_known_keys() {
        let config = ReferenceConfig::parse("national_avg=56.5\nstate_avg = 50.2\n").unwrap();
        assert_eq!(config.national_avg, Some(56.5));
        assert_eq!(config.state_avg, Some(50.2));
        assert_eq!(config.institution_avg, None);
        assert!(ReferenceConfig::parse("state_avg=140").is_err());
        assert!(ReferenceConfig::parse("regional=3").is_err());
    }
}
