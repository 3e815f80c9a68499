use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Settings read from `--config`. Every key is optional; flags win over
/// the file and the file wins over the defaults. Relative paths are taken
/// relative to the file's directory.
///
/// ```toml
/// traditional = "data/traditional.csv"
/// bidding = "data/bidding.csv"
/// seed = 7
/// model = "rf"
/// select = "recursive"
/// runs = 5
/// split_ratio = 0.8
/// out = "reports"
/// ```
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub traditional: Option<PathBuf>,
    pub bidding: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub traditional_schema: Option<PathBuf>,
    pub bidding_schema: Option<PathBuf>,
    pub seed: Option<u64>,
    pub model: Option<String>,
    pub select: Option<String>,
    pub task: Option<String>,
    pub runs: Option<usize>,
    pub split_ratio: Option<f64>,
    pub sentiment_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub bind: Option<String>,
    pub cors_origin: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut c = Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut c.traditional,
            &mut c.bidding,
            &mut c.lexicon,
            &mut c.traditional_schema,
            &mut c.bidding_schema,
            &mut c.out,
            &mut c.bundle,
            &mut c.input,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("seed = 3\nmodel = \"rf\"\n").is_ok());
        assert!(RunConfig::parse("sede = 3\n").is_err());
        assert!(RunConfig::parse("seed = \"three\"\n").is_err());
    }

    #[test]
    fn paths_are_relative_to_the_file() {
        let dir = std::env::temp_dir().join(format!("lendwise-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "traditional = \"t.csv\"\nout = \"/abs/out\"\n").unwrap();
        let c = RunConfig::load(&path).unwrap();
        assert_eq!(c.traditional.unwrap(), dir.join("t.csv"));
        assert_eq!(c.out.unwrap(), PathBuf::from("/abs/out"));
        std::fs::remove_dir_all(dir).unwrap();
    }
}
