//! Binary edge stream shared by ingestion and generation.
//!
//! Format: consecutive little-endian u32 triples (subject, relationship,
//! object), 12 bytes per fact, no header. Dictionaries are plain text,
//! one name per line, line number = id. Real and synthetic graphs use the
//! same files so the fitting stage cannot tell them apart.

use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const EDGES_FILE: &str = "edges.bin";
pub const ENTITY_DICT_FILE: &str = "entities.txt";
pub const RELATIONSHIP_DICT_FILE: &str = "relationships.txt";
pub const INGEST_SUMMARY_FILE: &str = "ingest_summary.json";

/// Which side of a fact an entity sits on. OUT degrees count facts where
/// the entity is the subject, IN degrees where it is the object.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Out,
    In,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Out, Role::In];

    pub fn label(self) -> &'static str {
        match self {
            Role::Out => "out",
            Role::In => "in",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Role::Out => 0,
            Role::In => 1,
        }
    }
}

impl std::str::FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "out" | "OUT" => Ok(Role::Out),
            "in" | "IN" => Ok(Role::In),
            _ => Err(Error::config(format!("unknown role '{s}', expected in|out"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Edge {
    pub subject: u32,
    pub relationship: u32,
    pub object: u32,
}

impl Edge {
    pub fn end(&self, role: Role) -> u32 {
        match role {
            Role::Out => self.subject,
            Role::In => self.object,
        }
    }
}

pub struct EdgeWriter<W: Write> {
    inner: BufWriter<W>,
    count: u64,
}

impl EdgeWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(EdgeWriter::new(File::create(path)?))
    }
}

impl<W: Write> EdgeWriter<W> {
    pub fn new(w: W) -> Self {
        EdgeWriter { inner: BufWriter::new(w), count: 0 }
    }

    pub fn write(&mut self, e: Edge) -> Result<()> {
        let mut buf = [0u8; 12];
        buf[0..4].copy_from_slice(&e.subject.to_le_bytes());
        buf[4..8].copy_from_slice(&e.relationship.to_le_bytes());
        buf[8..12].copy_from_slice(&e.object.to_le_bytes());
        self.inner.write_all(&buf)?;
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.inner.flush()?;
        Ok(self.count)
    }
}

pub struct EdgeReader<R: Read> {
    inner: BufReader<R>,
}

impl EdgeReader<File> {
    pub fn open(path: &Path) -> Result<Self> {
        Ok(EdgeReader::new(File::open(path)?))
    }
}

impl<R: Read> EdgeReader<R> {
    pub fn new(r: R) -> Self {
        EdgeReader { inner: BufReader::new(r) }
    }
}

impl<R: Read> Iterator for EdgeReader<R> {
    type Item = Result<Edge>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = [0u8; 12];
        let mut filled = 0;
        while filled < 12 {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return if filled == 0 {
                        None
                    } else {
                        Some(Err(Error::internal(format!(
                            "edge stream truncated: {filled} trailing bytes"
                        ))))
                    };
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Some(Err(e.into())),
            }
        }
        Some(Ok(Edge {
            subject: u32::from_le_bytes(buf[0..4].try_into().unwrap()),
            relationship: u32::from_le_bytes(buf[4..8].try_into().unwrap()),
            object: u32::from_le_bytes(buf[8..12].try_into().unwrap()),
        }))
    }
}

/// Collect a whole stream into memory. Intended for tests and desk-scale
/// inputs; large dumps should iterate instead.
pub fn read_edges(path: &Path) -> Result<Vec<Edge>> {
    EdgeReader::open(path)?.collect()
}

pub fn write_edges(path: &Path, edges: &[Edge]) -> Result<u64> {
    let mut w = EdgeWriter::create(path)?;
    for &e in edges {
        w.write(e)?;
    }
    w.finish()
}

pub fn write_dictionary(path: &Path, names: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for n in names {
        writeln!(w, "{n}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dictionary(path: &Path) -> Result<Vec<String>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        out.push(line?);
    }
    Ok(out)
}
