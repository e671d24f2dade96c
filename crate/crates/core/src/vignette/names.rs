use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use crate::domain::{Gender, Race};
use crate::error::{Error, Result};

/// Names per pool. Each (gender, race) pool must hold exactly this many.
pub const POOL_SIZE: usize = 20;

const DEFAULT_POOLS: &str = include_str!("../../data/name_pools.json");

#[derive(Deserialize)]
struct RawPools {
    #[serde(rename = "F")]
    female: BTreeMap<String, Vec<String>>,
    #[serde(rename = "M")]
    male: BTreeMap<String, Vec<String>>,
}

/// Gender- and race-associated first names.
///
/// Races without a dedicated pool (Other, Unknown) draw from the union of the
/// four same-gender pools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamePools {
    pools: BTreeMap<(Gender, Race), Vec<String>>,
}

impl Default for NamePools {
    fn default() -> Self {
        NamePools::from_json(DEFAULT_POOLS).expect("bundled name pools are valid")
    }
}

impl NamePools {
    pub fn from_json(json: &str) -> Result<NamePools> {
        let raw: RawPools = serde_json::from_str(json)?;
        let mut pools = BTreeMap::new();
        for (gender, map) in [(Gender::F, raw.female), (Gender::M, raw.male)] {
            for (key, names) in map {
                let race = Race::POOLED
                    .into_iter()
                    .find(|r| r.as_str().eq_ignore_ascii_case(key.trim()))
                    .ok_or_else(|| Error::Config(format!("unknown name-pool race {key:?}")))?;
                let names: Vec<String> = names.into_iter().map(|n| n.trim().to_string()).collect();
                pools.insert((gender, race), names);
            }
        }
        let p = NamePools { pools };
        p.check()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<NamePools> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NamePools::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        for g in [Gender::F, Gender::M] {
            for r in Race::POOLED {
                let names = self
                    .pools
                    .get(&(g, r))
                    .ok_or_else(|| Error::Config(format!("missing name pool {g}/{r}")))?;
                let unique: BTreeSet<&String> = names.iter().collect();
                if names.len() != POOL_SIZE || unique.len() != POOL_SIZE {
                    return Err(Error::Config(format!(
                        "name pool {g}/{r} must hold {POOL_SIZE} distinct names, found {}",
                        unique.len()
                    )));
                }
                if names.iter().any(|n| n.is_empty() || !n.chars().all(|c| c.is_alphabetic() || c == '\'' || c == '-')) {
                    return Err(Error::Config(format!("name pool {g}/{r} has a malformed name")));
                }
            }
        }
        let f = self.names_for_gender(Gender::F);
        let m = self.names_for_gender(Gender::M);
        if let Some(shared) = f.intersection(&m).next() {
            return Err(Error::Config(format!("name {shared:?} appears in both genders")));
        }
        Ok(())
    }

    fn names_for_gender(&self, g: Gender) -> BTreeSet<&str> {
        self.pools
            .iter()
            .filter(|((pg, _), _)| *pg == g)
            .flat_map(|(_, v)| v.iter().map(String::as_str))
            .collect()
    }

    /// Candidate names for a patient of `gender` and `race`, in a fixed order.
    pub fn pool(&self, gender: Gender, race: Race) -> Vec<&str> {
        match self.pools.get(&(gender, race)) {
            Some(v) => v.iter().map(String::as_str).collect(),
            None => Race::POOLED
                .iter()
                .filter_map(|r| self.pools.get(&(gender, *r)))
                .flat_map(|v| v.iter().map(String::as_str))
                .collect(),
        }
    }

    /// Every name across all pools.
    pub fn all_names(&self) -> BTreeSet<&str> {
        self.pools.values().flat_map(|v| v.iter().map(String::as_str)).collect()
    }

    /// Restricts a pool, for tests and small demonstrations.
    pub fn with_pool(mut self, gender: Gender, race: Race, names: Vec<String>) -> NamePools {
        self.pools.insert((gender, race), names);
        self
    }
}
