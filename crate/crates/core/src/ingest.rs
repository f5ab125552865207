//! Streaming dump ingestion.
//!
//! Filters N-Triples lines down to internal entity-to-entity facts and
//! emits the compact edge stream plus dictionaries, without ever holding
//! the dump in memory. Parsing runs in parallel over line-aligned chunks;
//! id assignment and counter merging stay sequential in input order, so
//! the outputs are identical for any thread count.

use crate::edges::{
    Edge, EdgeWriter, EDGES_FILE, ENTITY_DICT_FILE, INGEST_SUMMARY_FILE,
    RELATIONSHIP_DICT_FILE, Role,
};
use crate::error::{Error, Result};
use crate::ntriples::{parse_line, Line, Term};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

#[derive(Clone, Debug)]
pub struct IngestFilter {
    /// IRIs starting with this prefix are internal entities. Blank nodes
    /// always count as internal.
    pub entity_prefix: String,
    /// Optional predicate allowlist (full IRI text).
    pub keep_predicates: Option<HashSet<String>>,
}

impl IngestFilter {
    pub fn new(prefix: impl Into<String>) -> Self {
        IngestFilter { entity_prefix: prefix.into(), keep_predicates: None }
    }

    fn internal(&self, t: &Term) -> bool {
        match t {
            Term::Iri(i) => i.starts_with(&self.entity_prefix),
            Term::Blank(_) => true,
            Term::Literal => false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub facts: u64,
    pub entities: u64,
    pub literals_removed: u64,
    pub external_removed: u64,
    pub malformed: u64,
    #[serde(default)]
    pub duplicates_removed: u64,
    #[serde(default)]
    pub predicates_removed: u64,
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub dedup: bool,
    /// Entity count beyond which the reverse dictionary switches to hashed
    /// keys and stops retaining names in memory (file sinks only).
    pub spill_threshold: usize,
    pub chunk_bytes: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            dedup: false,
            spill_threshold: 2_000_000,
            chunk_bytes: 4 << 20,
        }
    }
}

/// In-memory result of `parse_ntriples`, used by tests and small inputs.
#[derive(Debug)]
pub struct EdgeStreamData {
    pub edges: Vec<Edge>,
    pub entities: Vec<String>,
    pub relationships: Vec<String>,
    pub summary: IngestSummary,
}

fn digest16(name: &str) -> [u8; 16] {
    let d = Sha256::digest(name.as_bytes());
    d[..16].try_into().unwrap()
}

/// First-appearance interner. Below the spill threshold it keys on the
/// full name; above it (only when names are being streamed to a sink) it
/// keys on a 128-bit digest and drops the in-memory names, trading an
/// astronomically unlikely collision for bounded memory on huge dumps.
struct Dictionary {
    by_name: HashMap<Box<str>, u32>,
    by_digest: HashMap<[u8; 16], u32>,
    spilled: bool,
    names: Vec<String>,
    sink: Option<BufWriter<File>>,
    threshold: usize,
}

impl Dictionary {
    fn new(threshold: usize, sink: Option<File>) -> Self {
        Dictionary {
            by_name: HashMap::new(),
            by_digest: HashMap::new(),
            spilled: false,
            names: Vec::new(),
            sink: sink.map(BufWriter::new),
            threshold,
        }
    }

    fn len(&self) -> u32 {
        if self.spilled {
            self.by_digest.len() as u32
        } else {
            self.by_name.len() as u32
        }
    }

    fn intern(&mut self, name: &str) -> Result<u32> {
        if self.spilled {
            let d = digest16(name);
            if let Some(&id) = self.by_digest.get(&d) {
                return Ok(id);
            }
            let id = self.by_digest.len() as u32;
            self.by_digest.insert(d, id);
            if let Some(w) = &mut self.sink {
                writeln!(w, "{name}")?;
            }
            Ok(id)
        } else {
            if let Some(&id) = self.by_name.get(name) {
                return Ok(id);
            }
            let id = self.by_name.len() as u32;
            self.by_name.insert(name.into(), id);
            if let Some(w) = &mut self.sink {
                writeln!(w, "{name}")?;
            }
            self.names.push(name.to_string());
            if self.sink.is_some() && self.by_name.len() >= self.threshold {
                self.spill();
            }
            Ok(id)
        }
    }

    fn spill(&mut self) {
        self.by_digest = self
            .by_name
            .drain()
            .map(|(name, id)| (digest16(&name), id))
            .collect();
        self.names = Vec::new();
        self.spilled = true;
    }

    fn finish(mut self) -> Result<Vec<String>> {
        if let Some(mut w) = self.sink.take() {
            w.flush()?;
        }
        Ok(self.names)
    }
}

/// Owned survivor of the parallel classify stage: entity keys plus the
/// predicate, ready for sequential id assignment.
struct RawEdge {
    subject: String,
    predicate: String,
    object: String,
}

#[derive(Default)]
struct ChunkCounts {
    literals: u64,
    external: u64,
    malformed: u64,
    predicates: u64,
}

fn entity_key(t: &Term) -> String {
    match t {
        Term::Iri(i) => (*i).to_string(),
        Term::Blank(b) => (*b).to_string(),
        Term::Literal => unreachable!("literals never become entities"),
    }
}

/// Classify every line of one chunk. Order of checks: malformed, then
/// literal object, then external endpoint, then predicate allowlist.
fn classify_chunk(chunk: &[u8], filter: &IngestFilter) -> (ChunkCounts, Vec<RawEdge>) {
    let mut counts = ChunkCounts::default();
    let mut out = Vec::new();
    for raw in chunk.split(|&b| b == b'\n') {
        let Ok(line) = std::str::from_utf8(raw) else {
            counts.malformed += 1;
            continue;
        };
        match parse_line(line) {
            Line::Skip => {}
            Line::Malformed => counts.malformed += 1,
            Line::Triple { subject, predicate, object } => {
                if object == Term::Literal {
                    counts.literals += 1;
                } else if !filter.internal(&subject) || !filter.internal(&object) {
                    counts.external += 1;
                } else if filter
                    .keep_predicates
                    .as_ref()
                    .is_some_and(|keep| !keep.contains(predicate))
                {
                    counts.predicates += 1;
                } else {
                    out.push(RawEdge {
                        subject: entity_key(&subject),
                        predicate: predicate.to_string(),
                        object: entity_key(&object),
                    });
                }
            }
        }
    }
    (counts, out)
}

/// Split `buf` into roughly `parts` sub-slices aligned on line breaks.
fn split_at_lines(buf: &[u8], parts: usize) -> Vec<&[u8]> {
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    let target = buf.len().div_ceil(parts.max(1));
    while start < buf.len() {
        let mut end = (start + target).min(buf.len());
        if end < buf.len() {
            match buf[end..].iter().position(|&b| b == b'\n') {
                Some(p) => end += p + 1,
                None => end = buf.len(),
            }
        }
        out.push(&buf[start..end]);
        start = end;
    }
    out
}

fn gzip_aware(mut input: impl Read + 'static) -> Result<Box<dyn Read>> {
    let mut head = Vec::with_capacity(2);
    let mut byte = [0u8; 1];
    while head.len() < 2 {
        match input.read(&mut byte)? {
            0 => break,
            _ => head.push(byte[0]),
        }
    }
    let gz = head == [0x1f, 0x8b];
    let chained = std::io::Cursor::new(head).chain(input);
    Ok(if gz {
        Box::new(flate2::read::MultiGzDecoder::new(chained))
    } else {
        Box::new(chained)
    })
}

struct IngestState {
    entities: Dictionary,
    relationships: Dictionary,
    seen: HashSet<(u32, u32, u32)>,
    summary: IngestSummary,
}

impl IngestState {
    fn absorb(
        &mut self,
        counts: ChunkCounts,
        edges: Vec<RawEdge>,
        dedup: bool,
        sink: &mut dyn FnMut(Edge) -> Result<()>,
    ) -> Result<()> {
        self.summary.literals_removed += counts.literals;
        self.summary.external_removed += counts.external;
        self.summary.malformed += counts.malformed;
        self.summary.predicates_removed += counts.predicates;
        for raw in edges {
            let s = self.entities.intern(&raw.subject)?;
            let r = self.relationships.intern(&raw.predicate)?;
            let o = self.entities.intern(&raw.object)?;
            if dedup && !self.seen.insert((s, r, o)) {
                self.summary.duplicates_removed += 1;
                continue;
            }
            self.summary.facts += 1;
            sink(Edge { subject: s, relationship: r, object: o })?;
        }
        Ok(())
    }
}

fn run_ingest(
    input: impl Read + 'static,
    filter: &IngestFilter,
    opts: &IngestOptions,
    entity_sink: Option<File>,
    relationship_sink: Option<File>,
    sink: &mut dyn FnMut(Edge) -> Result<()>,
) -> Result<(IngestSummary, Vec<String>, Vec<String>)> {
    let mut reader = gzip_aware(input)?;
    let mut state = IngestState {
        entities: Dictionary::new(opts.spill_threshold, entity_sink),
        relationships: Dictionary::new(u32::MAX as usize, relationship_sink),
        seen: HashSet::new(),
        summary: IngestSummary::default(),
    };

    let mut carry: Vec<u8> = Vec::new();
    let mut buf = vec![0u8; opts.chunk_bytes.max(4096)];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        carry.extend_from_slice(&buf[..n]);
        // keep the trailing partial line for the next round
        let cut = match carry.iter().rposition(|&b| b == b'\n') {
            Some(p) => p + 1,
            None => continue,
        };
        let parts = split_at_lines(&carry[..cut], rayon::current_num_threads());
        let results: Vec<_> = parts
            .par_iter()
            .map(|part| classify_chunk(part, filter))
            .collect();
        for (counts, edges) in results {
            state.absorb(counts, edges, opts.dedup, sink)?;
        }
        carry.drain(..cut);
    }
    if !carry.is_empty() {
        let (counts, edges) = classify_chunk(&carry, filter);
        state.absorb(counts, edges, opts.dedup, sink)?;
    }

    state.summary.entities = state.entities.len() as u64;
    let entities = state.entities.finish()?;
    let relationships = state.relationships.finish()?;
    Ok((state.summary, entities, relationships))
}

/// Parse a whole stream into memory: edge list, dictionaries, summary.
pub fn parse_ntriples(input: impl Read + 'static, filter: &IngestFilter) -> Result<EdgeStreamData> {
    let opts = IngestOptions::default();
    let mut edges = Vec::new();
    let (summary, entities, relationships) =
        run_ingest(input, filter, &opts, None, None, &mut |e| {
            edges.push(e);
            Ok(())
        })?;
    Ok(EdgeStreamData { edges, entities, relationships, summary })
}

/// Stream a dump file into `out_dir`: edges.bin, both dictionaries, and
/// the ingest summary JSON. Gzip input is detected by magic bytes.
pub fn ingest_to_dir(
    input: &Path,
    filter: &IngestFilter,
    opts: &IngestOptions,
    out_dir: &Path,
) -> Result<IngestSummary> {
    std::fs::create_dir_all(out_dir)?;
    let file = File::open(input)?;
    let entity_sink = File::create(out_dir.join(ENTITY_DICT_FILE))?;
    let rel_sink = File::create(out_dir.join(RELATIONSHIP_DICT_FILE))?;
    let mut writer = EdgeWriter::create(&out_dir.join(EDGES_FILE))?;
    let (summary, _, _) = run_ingest(file, filter, opts, Some(entity_sink), Some(rel_sink), &mut |e| {
        writer.write(e)
    })?;
    writer.finish()?;
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(out_dir.join(INGEST_SUMMARY_FILE), json + "\n")?;
    Ok(summary)
}

pub type DegreeMap = HashMap<u32, u64>;

/// Per-relationship and global degree counts for one role.
#[derive(Debug, Clone)]
pub struct DegreeTables {
    pub role: Role,
    pub per_relationship: BTreeMap<u32, DegreeMap>,
    pub global: DegreeMap,
}

/// Count facts per (relationship, entity) for the given role, plus global
/// per-entity totals. `groups` partitions relationships (by id modulo) into
/// separate passes to bound the number of live tables; the result is
/// independent of the partitioning.
pub fn scan_degrees<I, F>(mut source: F, role: Role, groups: u32) -> Result<DegreeTables>
where
    F: FnMut() -> Result<I>,
    I: IntoIterator<Item = Result<Edge>>,
{
    if groups == 0 {
        return Err(Error::config("groups must be at least 1"));
    }
    let mut tables = DegreeTables {
        role,
        per_relationship: BTreeMap::new(),
        global: HashMap::new(),
    };
    for pass in 0..groups {
        for edge in source()? {
            let edge = edge?;
            let entity = edge.end(role);
            if edge.relationship % groups == pass {
                *tables
                    .per_relationship
                    .entry(edge.relationship)
                    .or_default()
                    .entry(entity)
                    .or_insert(0) += 1;
            }
            if pass == 0 {
                *tables.global.entry(entity).or_insert(0) += 1;
            }
        }
    }
    Ok(tables)
}

impl DegreeTables {
    pub fn from_edges(edges: &[Edge], role: Role, groups: u32) -> Result<Self> {
        scan_degrees(|| Ok(edges.iter().map(|&e| Ok(e))), role, groups)
    }

    pub fn facts(&self) -> u64 {
        self.global.values().sum()
    }
}
