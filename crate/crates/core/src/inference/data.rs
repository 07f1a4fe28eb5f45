use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{DolError, Result};
use crate::profile::LoadProfile;

/// One tested piece: a failure time, or a censoring time if it survived the test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub profile_id: String,
    /// hours
    pub time: f64,
    pub censored: bool,
}

/// Test records together with the load profiles they were tested under.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub profiles: BTreeMap<String, LoadProfile>,
    pub records: Vec<FailureRecord>,
}

impl Dataset {
    pub fn new(
        profiles: BTreeMap<String, LoadProfile>,
        records: Vec<FailureRecord>,
    ) -> Result<Self> {
        let ds = Self { profiles, records };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        for (row, rec) in self.records.iter().enumerate() {
            let profile = self.profiles.get(&rec.profile_id).ok_or_else(|| {
                DolError::config(format!(
                    "record {row}: unknown profile id '{}'",
                    rec.profile_id
                ))
            })?;
            if !(rec.time > 0.0) || !rec.time.is_finite() {
                return Err(DolError::domain(format!("record {row}: time must be > 0")));
            }
            if rec.time > profile.horizon() {
                return Err(DolError::domain(format!(
                    "record {row}: time {} exceeds profile '{}' horizon {}",
                    rec.time,
                    rec.profile_id,
                    profile.horizon()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of both datasets; profile ids must agree where they overlap.
    pub fn union(&self, other: &Dataset) -> Result<Dataset> {
        let mut profiles = self.profiles.clone();
        for (id, p) in &other.profiles {
            match profiles.get(id) {
                Some(existing) if existing != p => {
                    return Err(DolError::config(format!(
                        "profile '{id}' differs between datasets"
                    )))
                }
                _ => {
                    profiles.insert(id.clone(), p.clone());
                }
            }
        }
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Dataset::new(profiles, records)
    }

    /// Records tested under profile `id`.
    pub fn arm<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a FailureRecord> + 'a {
        self.records.iter().filter(move |r| r.profile_id == id)
    }
}
