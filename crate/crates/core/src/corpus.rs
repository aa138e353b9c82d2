//! Fixture corpus: `<name>.msol` sources with `<name>.txs.json` transaction suites.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::exec::{SuiteError, TxSuite};

pub const SOURCE_EXTENSION: &str = "msol";
pub const SUITE_SUFFIX: &str = ".txs.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{name}: {source}")]
    Suite { name: String, source: SuiteError },
    #[error("{0} has no transaction suite next to it")]
    MissingSuite(String),
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub path: PathBuf,
    pub source: String,
    pub suite: TxSuite,
    /// From a leading `// categories: a, b` line.
    pub categories: Vec<String>,
}

impl Fixture {
    pub fn file_name(&self) -> String {
        format!("{}.{SOURCE_EXTENSION}", self.name)
    }
}

/// The fixtures shipped with the crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn load_bundled() -> Result<Vec<Fixture>, CorpusError> {
    load_dir(&bundled_dir())
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn categories_of(source: &str) -> Vec<String> {
    source
        .lines()
        .find_map(|l| l.trim().strip_prefix("// categories:"))
        .map(|rest| {
            rest.split(',')
                .map(|c| c.trim().to_string())
                .filter(|c| !c.is_empty())
                .collect()
        })
        .unwrap_or_default()
}

pub fn load_fixture(path: &Path) -> Result<Fixture, CorpusError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let source = read(path)?;
    let suite_path = path.with_file_name(format!("{name}{SUITE_SUFFIX}"));
    if !suite_path.exists() {
        return Err(CorpusError::MissingSuite(path.display().to_string()));
    }
    let suite = TxSuite::parse(&read(&suite_path)?).map_err(|source| CorpusError::Suite {
        name: name.clone(),
        source,
    })?;
    Ok(Fixture {
        categories: categories_of(&source),
        name,
        path: path.to_path_buf(),
        source,
        suite,
    })
}

/// Every `*.msol` in `dir`, sorted by name.
pub fn load_dir(dir: &Path) -> Result<Vec<Fixture>, CorpusError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == SOURCE_EXTENSION))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_fixture(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_header() {
        assert_eq!(
            categories_of("// categories: loops, storage\ncontract A {}"),
            vec!["loops", "storage"]
        );
        assert!(categories_of("contract A {}").is_empty());
    }

    #[test]
    fn missing_suite_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.msol");
        std::fs::write(&p, "contract A {}").unwrap();
        assert!(matches!(
            load_dir(dir.path()),
            Err(CorpusError::MissingSuite(_))
        ));
        std::fs::write(dir.path().join("a.txs.json"), "[]").unwrap();
        let fx = load_dir(dir.path()).unwrap();
        assert_eq!(fx[0].name, "a");
        assert_eq!(fx[0].file_name(), "a.msol");
    }
}
