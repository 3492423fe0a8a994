//! Flat `key = value` config files whose keys mirror the long flag names.
//! Flags override file values; unknown keys are usage errors.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>, known_keys: &[&str]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let Some(path) = path else {
            return Ok(FileConfig { values });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            if !known_keys.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "{}:{}: unknown key `{key}`",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    /// Resolves one setting: explicit flag, then file value, then default.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))),
            None => Ok(default),
        }
    }

    /// Same, but the setting stays optional.
    pub fn resolve_opt<T: std::str::FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`"))),
            None => Ok(None),
        }
    }
}
