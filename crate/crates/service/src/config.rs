// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use retention_core::DataSources;
use serde::Deserialize;
use thiserror::Error;

pub const ENV_PREFIX: &str = "RETENTION_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("no {0} path configured")]
    MissingPath(&'static str),
    #[error("invalid CORS origin `{0}`")]
    CorsOrigin(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    listen: Option<String>,
    admin_token: Option<String>,
    cors_origin: Option<String>,
    #[serde(default)]
    data: DataSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    activity: Option<PathBuf>,
    cohort: Option<PathBuf>,
    mapping: Option<PathBuf>,
    cohort_meta: Option<PathBuf>,
}

/// Runtime settings. Relative data paths in a config file are resolved
/// against the file's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub listen: String,
    pub sources: DataSources,
    /// Reload is refused for every caller when unset.
    pub admin_token: Option<String>,
    pub cors_origin: Option<String>,
}

impl ServiceConfig {
    pub const DEFAULT_LISTEN: &'static str = "127.0.0.1:8080";

    pub fn new(sources: DataSources) -> Self {
        Self { listen: Self::DEFAULT_LISTEN.to_owned(), sources, admin_token: None, cors_origin: None }
    }

    /// Reads `path` (when given) and applies `RETENTION_*` overrides from
    /// the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let (file, base) = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
                let file = toml::from_str(&text)
                    .map_err(|source| ConfigError::Toml { path: path.to_owned(), source })?;
                (file, path.parent().map(Path::to_owned).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        Self::resolve(file, &base, std::env::vars())
    }

    /// Parses TOML text; relative paths are kept as written.
    pub fn from_toml(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        let file = toml::from_str(text).map_err(|source| ConfigError::Toml { path: PathBuf::from("<inline>"), source })?;
        Self::resolve(file, Path::new(""), env)
    }

    fn resolve(
        mut file: FileConfig,
        base: &Path,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let join = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        file.data.activity = file.data.activity.map(join);
        file.data.cohort = file.data.cohort.map(join);
        file.data.mapping = file.data.mapping.map(join);
        file.data.cohort_meta = file.data.cohort_meta.map(join);

        for (key, value) in env {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else { continue };
            match name {
                "LISTEN" => file.listen = Some(value),
                "ADMIN_TOKEN" => file.admin_token = Some(value),
                "CORS_ORIGIN" => file.cors_origin = Some(value),
                "ACTIVITY" => file.data.activity = Some(value.into()),
                "COHORT" => file.data.cohort = Some(value.into()),
                "MAPPING" => file.data.mapping = Some(value.into()),
                "COHORT_META" => file.data.cohort_meta = Some(value.into()),
                _ => {}
            }
        }

        let mut sources = DataSources::new(
            file.data.activity.ok_or(ConfigError::MissingPath("activity"))?,
            file.data.cohort.ok_or(ConfigError::MissingPath("cohort"))?,
        );
        sources.mapping = file.data.mapping;
        sources.cohort_meta = file.data.cohort_meta;
        Ok(Self {
            listen: file.listen.unwrap_or_else(|| Self::DEFAULT_LISTEN.to_owned()),
            sources,
            admin_token: file.admin_token.filter(|t| !t.is_empty()),
            cors_origin: file.cors_origin.filter(|o| !o.is_empty()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
listen = "0.0.0.0:9000"
admin_token = "secret"

[data]
activity = "a.csv"
cohort = "/abs/c.csv"
"#;

    #[test]
    fn file_values_and_env_overrides() {
        let config = ServiceConfig::from_toml(TEXT, []).unwrap();
        assert_eq!(config.listen, "0.0.0.0:9000");
        assert_eq!(config.sources.activity, PathBuf::from("a.csv"));
        assert_eq!(config.admin_token.as_deref(), Some("secret"));
        assert_eq!(config.cors_origin, None);

        let env = [
            ("RETENTION_LISTEN".to_owned(), "127.0.0.1:1".to_owned()),
            ("RETENTION_MAPPING".to_owned(), "m.cfg".to_owned()),
            ("RETENTION_CORS_ORIGIN".to_owned(), "http://localhost:5173".to_owned()),
            ("HOME".to_owned(), "/root".to_owned()),
        ];
        let config = ServiceConfig::from_toml(TEXT, env).unwrap();
        assert_eq!(config.listen, "127.0.0.1:1");
        assert_eq!(config.sources.mapping, Some(PathBuf::from("m.cfg")));
        assert_eq!(config.cors_origin.as_deref(), Some("http://localhost:5173"));
    }

    #[test]
    fn missing_paths_and_unknown_keys() {
        assert!(matches!(ServiceConfig::from_toml("", []), Err(ConfigError::MissingPath("activity"))));
        assert!(matches!(ServiceConfig::from_toml("port = 1", []), Err(ConfigError::Toml { .. })));
        let env = [
            ("RETENTION_ACTIVITY".to_owned(), "a".to_owned()),
            ("RETENTION_COHORT".to_owned(), "c".to_owned()),
        ];
        let config = ServiceConfig::from_toml("", env).unwrap();
        assert_eq!(config.listen, ServiceConfig::DEFAULT_LISTEN);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("service.toml");
        std::fs::write(&path, TEXT).unwrap();
        let file: FileConfig = toml::from_str(TEXT).unwrap();
        let config = ServiceConfig::resolve(file, dir.path(), []).unwrap();
        assert_eq!(config.sources.activity, dir.path().join("a.csv"));
        assert_eq!(config.sources.cohort, PathBuf::from("/abs/c.csv"));
    }
}
