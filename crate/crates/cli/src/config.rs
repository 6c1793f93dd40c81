//! Build configuration: UTF-8 `key=value` lines, `#` starts a comment.
//!
//! ```text
//! # (6,3) code repairable from 4 or 5 helpers
//! n=6
//! k=3
//! delta0=2
//! degrees=2,3
//! q=32
//! seed=0
//! ```
//!
//! `delta0` defaults to the smallest degree; `q` to the smallest power of
//! two the construction allows; `seed` to 0.

use std::collections::BTreeMap;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildConfig {
    pub n: usize,
    pub k: usize,
    pub delta0: usize,
    pub degrees: Vec<usize>,
    pub q: Option<u32>,
    pub seed: u64,
}

const KEYS: [&str; 6] = ["n", "k", "delta0", "degrees", "q", "seed"];

fn bad(line: usize, what: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        what: what.into(),
    }
}

impl BuildConfig {
    pub fn parse(text: &str) -> Result<BuildConfig, CliError> {
        let mut map: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| bad(no, "expected key=value"))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(bad(no, format!("unknown key `{key}`")));
            }
            if map.insert(key, (no, value.trim())).is_some() {
                return Err(bad(no, format!("`{key}` given twice")));
            }
        }
        fn num<T: std::str::FromStr>(map: &BTreeMap<&str, (usize, &str)>, key: &str) -> Result<Option<T>, CliError> {
            match map.get(key) {
                None => Ok(None),
                Some(&(no, v)) => v
                    .parse()
                    .map(Some)
                    .map_err(|_| bad(no, format!("`{key}`: not a number: {v}"))),
            }
        }
        let need = |key: &'static str| CliError::Config {
            line: 0,
            what: format!("missing `{key}`"),
        };
        let degrees = match map.get("degrees") {
            None => return Err(need("degrees")),
            Some(&(no, v)) => v
                .split(',')
                .map(|d| d.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad(no, format!("`degrees`: expected a comma-separated list, got {v}")))?,
        };
        let smallest = *degrees.iter().min().ok_or_else(|| need("degrees"))?;
        Ok(BuildConfig {
            n: num(&map, "n")?.ok_or_else(|| need("n"))?,
            k: num(&map, "k")?.ok_or_else(|| need("k"))?,
            delta0: num(&map, "delta0")?.unwrap_or(smallest),
            degrees,
            q: num(&map, "q")?,
            seed: num(&map, "seed")?.unwrap_or(0),
        })
    }

    pub fn read(path: &std::path::Path) -> Result<BuildConfig, CliError> {
        BuildConfig::parse(&crate::read_text(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_comments() {
        let c = BuildConfig::parse("# demo\nn=6\nk = 3 # three data nodes\n\ndegrees=2, 3\n").unwrap();
        assert_eq!(
            c,
            BuildConfig {
                n: 6,
                k: 3,
                delta0: 2,
                degrees: vec![2, 3],
                q: None,
                seed: 0
            }
        );
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(BuildConfig::parse("n=6\nk=3\n"), Err(CliError::Config { .. })));
        assert!(matches!(
            BuildConfig::parse("n=6\nk=3\ndegrees=2\nwidth=4\n"),
            Err(CliError::Config { line: 4, .. })
        ));
        assert!(BuildConfig::parse("n=6\nn=7\nk=3\ndegrees=2\n").is_err());
        assert!(BuildConfig::parse("n=six\nk=3\ndegrees=2\n").is_err());
        assert!(BuildConfig::parse("n=6\nk=3\ndegrees=2;3\n").is_err());
    }
}
