//! Per-atom level vocabularies and multi-atom product bases.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single-atom level.
///
/// `Zero` and `One` are the lossy S state and the P state of the
/// microwave-coupled scheme; `Up`/`Down` are the two P-state pseudospin
/// levels; `G` is the terminal ground level that collects lost population.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    G,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    Up,
    Down,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::G, Level::Zero, Level::One, Level::Up, Level::Down];

    pub fn name(self) -> &'static str {
        match self {
            Level::G => "g",
            Level::Zero => "0",
            Level::One => "1",
            Level::Up => "up",
            Level::Down => "down",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" => Ok(Level::G),
            "0" => Ok(Level::Zero),
            "1" => Ok(Level::One),
            "up" | "u" | "↑" => Ok(Level::Up),
            "down" | "d" | "↓" => Ok(Level::Down),
            _ => Err(Error::BadConfiguration(s.to_string())),
        }
    }
}

/// Ordered, duplicate-free list of the levels each atom carries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LevelSet {
    labels: Arc<[Level]>,
}

impl LevelSet {
    pub fn new(labels: &[Level]) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::LevelSet(format!(
                "need at least two levels, got {}",
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::LevelSet(format!("duplicate level {a}")));
            }
        }
        Ok(Self { labels: labels.into() })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Level] {
        &self.labels
    }

    pub fn index(&self, level: Level) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == level)
            .ok_or(Error::UnknownLevel(level))
    }

    pub fn contains(&self, level: Level) -> bool {
        self.labels.contains(&level)
    }
}

/// `n_sites` copies of one level set; site 0 is the most significant digit
/// of the basis index, so `|down up down>` reads left to right.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TensorBasis {
    n_sites: usize,
    levels: LevelSet,
}

impl TensorBasis {
    pub fn new(n_sites: usize, levels: LevelSet) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidParameter {
                name: "n_sites",
                reason: "must be positive".into(),
            });
        }
        levels
            .dim()
            .checked_pow(n_sites as u32)
            .ok_or_else(|| Error::InvalidParameter {
                name: "n_sites",
                reason: "basis dimension overflows".into(),
            })?;
        Ok(Self { n_sites, levels })
    }

    pub fn from_levels(n_sites: usize, labels: &[Level]) -> Result<Self> {
        Self::new(n_sites, LevelSet::new(labels)?)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn levels(&self) -> &LevelSet {
        &self.levels
    }

    pub fn site_dim(&self) -> usize {
        self.levels.dim()
    }

    pub fn total_dim(&self) -> usize {
        self.levels.dim().pow(self.n_sites as u32)
    }

    /// Mixed-radix index of a configuration.
    pub fn index_of(&self, config: &[Level]) -> Result<usize> {
        if config.len() != self.n_sites {
            return Err(Error::Dimension {
                expected: self.n_sites,
                found: config.len(),
            });
        }
        let d = self.site_dim();
        config
            .iter()
            .try_fold(0usize, |acc, &l| Ok(acc * d + self.levels.index(l)?))
    }

    /// Per-site level indices of a basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let d = self.site_dim();
        let mut out = vec![0; self.n_sites];
        for slot in out.iter_mut().rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn config_of(&self, index: usize) -> Vec<Level> {
        self.digits(index)
            .into_iter()
            .map(|i| self.levels.labels()[i])
            .collect()
    }

    /// Level index at `site` of basis index `index`.
    pub fn digit(&self, index: usize, site: usize) -> usize {
        let d = self.site_dim();
        (index / d.pow((self.n_sites - 1 - site) as u32)) % d
    }

    /// Parses a configuration string such as `"down-up-down"`, `"upup"` or
    /// `"00"`. Hyphens are optional separators; tokens are matched greedily.
    pub fn parse_config(&self, s: &str) -> Result<Vec<Level>> {
        let config = parse_levels(s)?;
        if config.len() != self.n_sites {
            return Err(Error::BadConfiguration(format!(
                "`{s}` names {} sites, basis has {}",
                config.len(),
                self.n_sites
            )));
        }
        for &l in &config {
            self.levels.index(l)?;
        }
        Ok(config)
    }

    pub fn format_config(&self, index: usize) -> String {
        self.config_of(index)
            .iter()
            .map(|l| l.name())
            .collect::<Vec<_>>()
            .join("-")
    }
}

fn parse_levels(s: &str) -> Result<Vec<Level>> {
    const TOKENS: [(&str, Level); 9] = [
        ("down", Level::Down),
        ("up", Level::Up),
        ("↑", Level::Up),
        ("↓", Level::Down),
        ("g", Level::G),
        ("0", Level::Zero),
        ("1", Level::One),
        ("u", Level::Up),
        ("d", Level::Down),
    ];
    let mut out = Vec::new();
    for part in s.split(['-', ',', ' ']).filter(|p| !p.is_empty()) {
        let mut rest = part;
        while !rest.is_empty() {
            let (tok, level) = TOKENS
                .iter()
                .find(|(t, _)| rest.starts_with(t))
                .ok_or_else(|| Error::BadConfiguration(s.to_string()))?;
            out.push(*level);
            rest = &rest[tok.len()..];
        }
    }
    if out.is_empty() {
        return Err(Error::BadConfiguration(s.to_string()));
    }
    Ok(out)
}

/// The space an operator or state lives in: either a full product basis, or
/// a labelled reduced basis such as the symmetric pair sector
/// `{|00>, |+>, |11>}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Tensor(TensorBasis),
    Named(Arc<[String]>),
}

impl Basis {
    pub fn named<S: AsRef<str>>(labels: &[S]) -> Self {
        Basis::Named(labels.iter().map(|s| s.as_ref().to_string()).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Tensor(t) => t.total_dim(),
            Basis::Named(l) => l.len(),
        }
    }

    pub fn as_tensor(&self) -> Result<&TensorBasis> {
        match self {
            Basis::Tensor(t) => Ok(t),
            Basis::Named(_) => Err(Error::NotTensorBasis),
        }
    }

    pub fn label(&self, index: usize) -> String {
        match self {
            Basis::Tensor(t) => t.format_config(index),
            Basis::Named(l) => l[index].clone(),
        }
    }

    pub fn index_of_label(&self, label: &str) -> Result<usize> {
        match self {
            Basis::Tensor(t) => t.index_of(&t.parse_config(label)?),
            Basis::Named(l) => l
                .iter()
                .position(|x| x == label)
                .ok_or_else(|| Error::BadConfiguration(label.to_string())),
        }
    }
}

impl From<TensorBasis> for Basis {
    fn from(t: TensorBasis) -> Self {
        Basis::Tensor(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spin3() -> TensorBasis {
        TensorBasis::from_levels(3, &[Level::Up, Level::Down]).unwrap()
    }

    #[test]
    fn level_set_rejects_duplicates_and_singletons() {
        assert!(LevelSet::new(&[Level::Up]).is_err());
        assert!(LevelSet::new(&[Level::Up, Level::Up]).is_err());
        let ls = LevelSet::new(&[Level::One, Level::Zero, Level::G]).unwrap();
        assert_eq!(ls.index(Level::G).unwrap(), 2);
        assert!(ls.index(Level::Up).is_err());
    }

    #[test]
    fn mixed_radix_site_zero_most_significant() {
        let b = spin3();
        assert_eq!(b.total_dim(), 8);
        let idx = b.index_of(&[Level::Down, Level::Up, Level::Down]).unwrap();
        assert_eq!(idx, 0b101);
        assert_eq!(b.config_of(idx), vec![Level::Down, Level::Up, Level::Down]);
        assert_eq!(b.digit(idx, 0), 1);
        assert_eq!(b.digit(idx, 1), 0);
    }

    #[test]
    fn parses_configuration_strings() {
        let b = spin3();
        let want = vec![Level::Down, Level::Up, Level::Down];
        assert_eq!(b.parse_config("down-up-down").unwrap(), want);
        assert_eq!(b.parse_config("downupdown").unwrap(), want);
        assert_eq!(b.parse_config("↓↑↓").unwrap(), want);
        assert!(b.parse_config("upup").is_err());
        assert!(b.parse_config("up-x-up").is_err());

        let pair = TensorBasis::from_levels(2, &[Level::One, Level::Zero, Level::G]).unwrap();
        assert_eq!(pair.parse_config("00").unwrap(), vec![Level::Zero; 2]);
        assert_eq!(pair.parse_config("g1").unwrap(), vec![Level::G, Level::One]);
        assert!(pair.parse_config("upup").is_err());
    }

    #[test]
    fn round_trips_every_index() {
        let b = TensorBasis::from_levels(3, &[Level::Up, Level::Down, Level::Zero]).unwrap();
        for i in 0..b.total_dim() {
            assert_eq!(b.index_of(&b.config_of(i)).unwrap(), i);
            assert_eq!(Basis::Tensor(b.clone()).index_of_label(&b.format_config(i)).unwrap(), i);
        }
    }
}
