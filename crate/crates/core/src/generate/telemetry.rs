//! Sampled time series of a generation run.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// One sampled instant. Fact counters are post-seed (so their sum equals
/// t); the entity counters include the seed entities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TelemetryRow {
    pub t: u64,
    /// Total entities m(t).
    pub m: u64,
    /// Exceptional steps so far.
    pub exceptional: u64,
    /// Distinct entities per relationship, m_r(t).
    pub m_r: Vec<u64>,
    /// Facts per relationship since seeding, F_r(t).
    pub f_r: Vec<u64>,
    /// Entities attached to exactly i distinct relationships, i = 1..=n.
    pub m_i: Vec<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct SimulationTelemetry {
    pub relationships: u32,
    pub rows: Vec<TelemetryRow>,
}

impl SimulationTelemetry {
    pub fn last(&self) -> &TelemetryRow {
        self.rows.last().expect("telemetry always samples t=0 and t=T")
    }

    /// Columns: t, m, exceptional, then m_r, F_r and M_i blocks.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.relationships as usize;
        let mut header = vec!["t".to_string(), "m".to_string(), "exceptional".to_string()];
        header.extend((1..=n).map(|r| format!("m_{r}")));
        header.extend((1..=n).map(|r| format!("f_{r}")));
        header.extend((1..=n).map(|i| format!("M_{i}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.t.to_string(), row.m.to_string(), row.exceptional.to_string()];
            rec.extend(row.m_r.iter().map(|v| v.to_string()));
            rec.extend(row.f_r.iter().map(|v| v.to_string()));
            rec.extend(row.m_i.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of `write_csv`; the relationship count is inferred from
    /// the header width.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let width = r.headers()?.len();
        if width < 3 || (width - 3) % 3 != 0 {
            return Err(Error::domain(format!("telemetry header has {width} columns")));
        }
        let n = (width - 3) / 3;
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let cell = |i: usize| -> Result<u64> {
                record
                    .get(i)
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::domain(format!("bad telemetry cell {i}")))
            };
            let block = |start: usize| -> Result<Vec<u64>> {
                (start..start + n).map(cell).collect()
            };
            rows.push(TelemetryRow {
                t: cell(0)?,
                m: cell(1)?,
                exceptional: cell(2)?,
                m_r: block(3)?,
                f_r: block(3 + n)?,
                m_i: block(3 + 2 * n)?,
            });
        }
        Ok(SimulationTelemetry { relationships: n as u32, rows })
    }
}

/// Row schedule: t = 0, t = T, and about `points` evenly spaced samples.
#[derive(Clone, Copy, Debug)]
pub struct SampleSchedule {
    steps: u64,
    interval: u64,
}

impl SampleSchedule {
    pub fn new(steps: u64, points: u32) -> Self {
        let interval = if points == 0 { steps.max(1) } else { (steps / points as u64).max(1) };
        SampleSchedule { steps, interval }
    }

    pub fn wants(&self, t: u64) -> bool {
        t == 0 || t == self.steps || t % self.interval == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_includes_endpoints_and_spacing() {
        let s = SampleSchedule::new(1000, 10);
        let sampled: Vec<u64> = (0..=1000).filter(|&t| s.wants(t)).collect();
        assert_eq!(sampled.first(), Some(&0));
        assert_eq!(sampled.last(), Some(&1000));
        assert_eq!(sampled.len(), 11);
        assert!(sampled.windows(2).all(|w| w[1] - w[0] == 100));

        // more points than steps degrades to every step
        let dense = SampleSchedule::new(5, 100);
        assert_eq!((0..=5).filter(|&t| dense.wants(t)).count(), 6);

        // zero points keeps only the endpoints
        let sparse = SampleSchedule::new(7, 0);
        let got: Vec<u64> = (0..=7).filter(|&t| sparse.wants(t)).collect();
        assert_eq!(got, vec![0, 7]);

        // empty run still samples its single instant
        assert!(SampleSchedule::new(0, 3).wants(0));
    }

    #[test]
    fn csv_layout() {
        let tel = SimulationTelemetry {
            relationships: 2,
            rows: vec![TelemetryRow {
                t: 5,
                m: 4,
                exceptional: 1,
                m_r: vec![3, 2],
                f_r: vec![4, 1],
                m_i: vec![3, 1],
            }],
        };
        let mut buf = Vec::new();
        tel.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,m,exceptional,m_1,m_2,f_1,f_2,M_1,M_2"));
        assert_eq!(lines.next(), Some("5,4,1,3,2,4,1,3,1"));

        let back = SimulationTelemetry::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.relationships, 2);
        assert_eq!(back.rows, tel.rows);
    }
}
