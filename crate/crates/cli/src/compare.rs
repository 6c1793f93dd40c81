//! Parameter comparison between the lifted code and the two codes of
//! Ye and Barg with the same repair degrees, by formula.
//!
//! With `delta` the lcm of the degree set:
//!
//! | code | sub-packetization | field size |
//! |------|-------------------|------------|
//! | lifted, `delta0 <= 4` | `delta^ceil(n/delta0)` | `6 ceil(n/2) + 2` (`delta0 = 2`), `18 ceil(n/delta0) + 2` (3, 4) |
//! | lifted, `delta0 >= 5` | `lcm(4, delta)^ceil(n/4)` | `18 ceil(n/4) + 2` |
//! | YB3 | `delta^n` | `delta n` |
//! | YB4 | `delta^n` | `n + 1` |
//!
//! For `delta0 >= 5` the lifted code starts from degree 4, which is added
//! to the set. Only the formulas are evaluated; nothing is built.
//!
//! ```
//! use mdsa_cli::compare::compare;
//!
//! let rows = compare(24, 20, 2, &[vec![2, 3]], true).unwrap();
//! assert_eq!(rows[0].sub_packetization.to_string(), "6^12");
//! assert_eq!(rows[0].field_size(), "2^7");
//! assert_eq!(rows[2].field_size(), "2^5");
//! ```

use std::fmt;

use serde::Serialize;

use crate::CliError;

/// `base^exp`, kept symbolic: most of these numbers overflow `u128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Power {
    pub base: u64,
    pub exp: u32,
}

impl Power {
    pub fn log2(&self) -> f64 {
        self.exp as f64 * (self.base as f64).log2()
    }

    pub fn value(&self) -> Option<u128> {
        (self.base as u128).checked_pow(self.exp)
    }
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.base, self.exp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeName {
    Lifted,
    Yb3,
    Yb4,
}

impl fmt::Display for CodeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeName::Lifted => "G",
            CodeName::Yb3 => "YB3",
            CodeName::Yb4 => "YB4",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub code: CodeName,
    pub degrees: Vec<usize>,
    pub sub_packetization: Power,
    /// Smallest field order the construction allows.
    pub field_bound: u64,
    /// The field used: `field_bound`, or the next power of two.
    pub field: u64,
    pub rounded: bool,
    /// `log2(field)`: bits per symbol.
    pub symbol_bits: f64,
    /// Storage per node relative to YB4 in the same group.
    pub storage_ratio: f64,
    /// How many times smaller `N` is than for YB3/YB4, as text, with its
    /// base-10 logarithm; lifted rows only.
    pub reduction: Option<(String, f64)>,
}

impl CompareRow {
    /// `2^7` for rounded fields, the plain number otherwise.
    pub fn field_size(&self) -> String {
        if self.rounded {
            format!("2^{}", self.field.trailing_zeros())
        } else {
            self.field.to_string()
        }
    }

    /// Bits per node, `N log2 q`, as `bits x N`.
    pub fn storage(&self) -> String {
        if self.symbol_bits.fract() == 0.0 {
            format!("{}x{}", self.symbol_bits, self.sub_packetization)
        } else {
            format!("{:.3}x{}", self.symbol_bits, self.sub_packetization)
        }
    }

    pub fn storage_log2(&self) -> f64 {
        self.sub_packetization.log2() + self.symbol_bits.log2()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn round_field(bound: u64, round: bool) -> (u64, f64) {
    let q = if round { bound.next_power_of_two() } else { bound };
    (q, (q as f64).log2())
}

/// Three rows (lifted code, YB3, YB4) per degree set. Fields are rounded up
/// to powers of two when `round` is set.
pub fn compare(n: usize, k: usize, delta0: usize, sets: &[Vec<usize>], round: bool) -> Result<Vec<CompareRow>, CliError> {
    if k == 0 || k >= n {
        return Err(CliError::Compare(format!("need 0 < k < n, got n={n} k={k}")));
    }
    if delta0 < 2 {
        return Err(CliError::Compare(format!("delta0 must be at least 2, got {delta0}")));
    }
    let r = n - k;
    let nn = n as u64;
    let mut rows = Vec::new();
    for set in sets {
        let mut degrees = set.clone();
        degrees.sort_unstable();
        degrees.dedup();
        if degrees.first() != Some(&delta0) || degrees.last().is_some_and(|&d| d > r) {
            return Err(CliError::Compare(format!(
                "degree set {set:?} must start at delta0 = {delta0} and stay within r = {r}"
            )));
        }
        let delta = degrees.iter().fold(1u64, |acc, &d| lcm(acc, d as u64));
        let big = delta0 >= 5;
        let blocks = if big { nn.div_ceil(4) } else { nn.div_ceil(delta0 as u64) };
        let g_n = Power {
            base: if big { lcm(4, delta) } else { delta },
            exp: blocks as u32,
        };
        let g_bound = match delta0 {
            2 => 6 * nn.div_ceil(2) + 2,
            _ => 18 * blocks + 2,
        };
        let yb_n = Power {
            base: delta,
            exp: n as u32,
        };
        let rest = (nn - blocks) as u32;
        let reduction = if !big {
            (format!("{delta}^{rest}"), rest as f64 * (delta as f64).log10())
        } else {
            let div = if delta % 4 == 0 {
                1
            } else if delta % 2 == 0 {
                2
            } else {
                4
            };
            let log = rest as f64 * (delta as f64).log10() - blocks as f64 * (div as f64).log10();
            if div == 1 {
                (format!("{delta}^{rest}"), log)
            } else {
                (format!("{delta}^{rest}/{div}^{blocks}"), log)
            }
        };
        let (_, yb4_bits) = round_field(nn + 1, round);
        let yb4_storage = yb_n.log2() + yb4_bits.log2();
        let mut push = |code, n_level: Power, bound: u64, reduction| {
            let (field, bits) = round_field(bound, round);
            let mut row = CompareRow {
                code,
                degrees: degrees.clone(),
                sub_packetization: n_level,
                field_bound: bound,
                field,
                rounded: round,
                symbol_bits: bits,
                storage_ratio: 0.0,
                reduction,
            };
            row.storage_ratio = (row.storage_log2() - yb4_storage).exp2();
            rows.push(row);
        };
        push(CodeName::Lifted, g_n, g_bound, Some(reduction));
        push(CodeName::Yb3, yb_n, delta * nn, None);
        push(CodeName::Yb4, yb_n, nn + 1, None);
    }
    Ok(rows)
}

fn sci(x: f64) -> String {
    if (0.01..1000.0).contains(&x) {
        let s = format!("{x:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.2e}")
    }
}

/// The rows as an aligned text table.
pub fn render(n: usize, k: usize, delta0: usize, rows: &[CompareRow]) -> String {
    let mut table = vec![[
        "code".to_string(),
        "degrees".into(),
        "N".into(),
        "q".into(),
        "N log2 q".into(),
        "vs YB4".into(),
        "N reduced by".into(),
    ]];
    for row in rows {
        let set = row.degrees.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        let set = if row.code == CodeName::Lifted && delta0 >= 5 {
            format!("{{4,{set}}}")
        } else {
            format!("{{{set}}}")
        };
        table.push([
            row.code.to_string(),
            set,
            row.sub_packetization.to_string(),
            row.field_size(),
            row.storage(),
            sci(row.storage_ratio),
            row.reduction.as_ref().map(|r| r.0.clone()).unwrap_or_default(),
        ]);
    }
    let widths: Vec<usize> = (0..7).map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = format!("({n},{k}), delta0 = {delta0}\n");
    for r in &table {
        let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_matches_the_published_magnitude() {
        let rows = compare(24, 20, 2, &[vec![2, 3]], true).unwrap();
        assert!((rows[0].storage_ratio / 6.43e-10 - 1.0).abs() < 0.01);
        assert!((rows[1].storage_ratio - 1.6).abs() < 1e-9);
        assert_eq!(rows[2].storage_ratio, 1.0);
    }

    #[test]
    fn large_delta0_uses_degree_four() {
        // delta = 30: even but not a multiple of 4
        let rows = compare(24, 16, 5, &[vec![5, 6]], true).unwrap();
        assert_eq!(rows[0].sub_packetization, Power { base: 60, exp: 6 });
        assert_eq!(rows[0].field_bound, 18 * 6 + 2);
        assert_eq!(rows[0].reduction.as_ref().unwrap().0, "30^18/2^6");
        // log10 of 30^24 / 60^6
        let want = 24.0 * 30f64.log10() - 6.0 * 60f64.log10();
        assert!((rows[0].reduction.as_ref().unwrap().1 - want).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(compare(24, 20, 2, &[vec![3, 4]], true).is_err());
        assert!(compare(24, 20, 2, &[vec![2, 5]], true).is_err());
        assert!(compare(4, 4, 2, &[vec![2]], true).is_err());
    }
}
