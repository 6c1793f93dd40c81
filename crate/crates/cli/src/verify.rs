//! The verification suite run by `mdsa verify`.

use std::fmt;
use std::str::FromStr;

use mdsa::verify::{check_lemma5, check_mds, check_repair_bound, check_tmds, Coverage, PropertyReport};

use crate::build::LoadedCode;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    /// The base code's certificate: MDS, repair at the smallest degree,
    /// C1, C2 and C3 for each goal set.
    Tmds,
    /// MDS of the final code.
    Mds,
    /// Repairs at every node, degree and helper set against the bound.
    Repair,
    /// Identities of the selection matrices (base 2 and 3, three digits).
    Lemma5,
}

/// What runs when no suite is named.
pub const DEFAULT_SUITES: [Suite; 3] = [Suite::Tmds, Suite::Mds, Suite::Repair];

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Suite, String> {
        match s {
            "tmds" => Ok(Suite::Tmds),
            "mds" => Ok(Suite::Mds),
            "repair" => Ok(Suite::Repair),
            "lemma5" => Ok(Suite::Lemma5),
            other => Err(format!("unknown suite `{other}` (tmds, mds, repair, lemma5)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Tmds => "tmds",
            Suite::Mds => "mds",
            Suite::Repair => "repair",
            Suite::Lemma5 => "lemma5",
        })
    }
}

/// Runs `suites` in order. Names of base-code checks start with `base/`.
pub fn run_suites(code: &LoadedCode, suites: &[Suite], coverage: &Coverage, seed: u64) -> Result<Vec<PropertyReport>, CliError> {
    let mut out = Vec::new();
    for suite in suites {
        match suite {
            Suite::Tmds => {
                let mut base = code.descriptor.clone();
                base.round_goal_sets.clear();
                let base = base.build()?;
                out.extend(check_tmds(&base, coverage).into_iter().map(|mut r| {
                    r.name = format!("base/{}", r.name);
                    r
                }));
            }
            Suite::Mds => out.push(check_mds(code.code(), coverage)),
            Suite::Repair => out.push(check_repair_bound(code.code(), coverage, seed)),
            Suite::Lemma5 => {
                for s in [2, 3] {
                    out.extend(check_lemma5(s, 3));
                }
            }
        }
    }
    Ok(out)
}

/// Coverage from the command-line flags: `--sample N` samples `N` cases
/// per check, `--exhaustive` enumerates, otherwise enumeration up to the
/// library's threshold.
pub fn coverage(sample: Option<usize>, exhaustive: bool, seed: u64) -> Coverage {
    match (sample, exhaustive) {
        (Some(count), _) => Coverage::Sample { count, seed },
        (None, true) => Coverage::Exhaustive,
        (None, false) => Coverage::auto(seed),
    }
}
