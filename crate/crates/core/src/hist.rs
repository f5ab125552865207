//! Sparse degree histograms.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::csv_float;
use crate::error::{Error, Result};

/// Degree histogram over entities: how many entities carry each degree.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DegreeHistogram {
    counts: BTreeMap<u64, u64>,
    entities: u64,
}

impl DegreeHistogram {
    pub fn from_degree_counts<I: IntoIterator<Item = u64>>(degrees: I) -> Self {
        let mut counts = BTreeMap::new();
        let mut entities = 0;
        for d in degrees {
            *counts.entry(d).or_insert(0) += 1;
            entities += 1;
        }
        DegreeHistogram { counts, entities }
    }

    pub fn from_map(counts: BTreeMap<u64, u64>) -> Self {
        let entities = counts.values().sum();
        DegreeHistogram { counts, entities }
    }

    pub fn entities(&self) -> u64 {
        self.entities
    }

    /// Total degree mass, i.e. the number of facts seen from this role.
    pub fn facts(&self) -> u64 {
        self.counts.iter().map(|(&k, &c)| k * c).sum()
    }

    pub fn k_max(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// Ascending (degree, count) pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k, c))
    }

    pub fn count(&self, degree: u64) -> u64 {
        self.counts.get(&degree).copied().unwrap_or(0)
    }

    /// Empirical P(degree = k); zero on an empty histogram.
    pub fn probability(&self, degree: u64) -> f64 {
        if self.entities == 0 {
            return 0.0;
        }
        self.count(degree) as f64 / self.entities as f64
    }

    /// Ascending (degree, probability) pairs over the support.
    pub fn normalized(&self) -> Vec<(u64, f64)> {
        self.iter()
            .map(|(k, c)| (k, c as f64 / self.entities as f64))
            .collect()
    }

    /// Columns `degree,count,probability`, ascending by degree.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["degree", "count", "probability"])?;
        for (k, c) in self.iter() {
            w.write_record([k.to_string(), c.to_string(), csv_float(self.probability(k))])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of `write_csv`; the probability column is ignored in favor
    /// of the exact counts.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut counts = BTreeMap::new();
        for record in r.records() {
            let record = record?;
            let parse = |i: usize| -> Result<u64> {
                record
                    .get(i)
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::domain(format!("bad histogram row {record:?}")))
            };
            counts.insert(parse(0)?, parse(1)?);
        }
        Ok(DegreeHistogram::from_map(counts))
    }
}
