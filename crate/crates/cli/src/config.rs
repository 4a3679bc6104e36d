//! The `--run-config` file: `key: value` lines, `#` comments. Keys match the
//! long flag names. Relative paths are resolved against the file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

const KEYS: [&str; 11] = [
    "schema", "rules", "plan", "clean", "seed", "epochs", "lr", "batch", "optimizer", "algo", "k",
];
const PATH_KEYS: [&str; 4] = ["schema", "rules", "plan", "clean"];

#[derive(Debug, Default)]
pub struct RunConfig {
    values: BTreeMap<String, (usize, String)>,
    dir: PathBuf,
    file: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::parse(&text).map_err(|(line, msg)| CliError::data(format!("{}:{line}: {msg}", path.display())))?;
        cfg.dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.file = path.to_path_buf();
        Ok(cfg)
    }

    fn parse(text: &str) -> Result<RunConfig, (usize, String)> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once(':')
                .ok_or_else(|| (line, format!("expected `key: value`, found `{content}`")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err((line, format!("unknown key `{key}`")));
            }
            if values.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err((line, format!("key `{key}` set twice")));
            }
        }
        Ok(RunConfig {
            values,
            ..RunConfig::default()
        })
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        debug_assert!(PATH_KEYS.contains(&key));
        self.values.get(key).map(|(_, v)| self.dir.join(v))
    }

    /// Parsed value of `key`, with a file:line diagnostic on failure.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                CliError::data(format!("{}:{line}: bad value `{v}` for `{key}`", self.file.display()))
            }),
        }
    }

    pub fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.values.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    pub fn file(&self) -> &Path {
        &self.file
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let cfg = RunConfig::parse("# run\nseed: 7\nlr: 0.01\nschema: s.schema\n").unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(cfg.get::<f64>("lr").unwrap(), Some(0.01));
        assert_eq!(cfg.get::<usize>("epochs").unwrap(), None);
        assert_eq!(cfg.path("schema"), Some(PathBuf::from("s.schema")));
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert_eq!(RunConfig::parse("colour: red\n").unwrap_err().0, 1);
        assert_eq!(RunConfig::parse("seed: 1\n\nseed: 2\n").unwrap_err().0, 3);
        assert_eq!(RunConfig::parse("seed 1\n").unwrap_err().0, 1);
    }
}
