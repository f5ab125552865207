//! The two generation engines and edge sinks.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{GenerationConfig, Mode};
use super::telemetry::{SampleSchedule, SimulationTelemetry};
use super::{EntityRegistry, RoleAction, Stepper, pa_rng};
use crate::edges::{EDGES_FILE, Edge, EdgeWriter, RELATIONSHIP_DICT_FILE, Role, write_dictionary};
use crate::error::{Error, Result};
use crate::weights::DegreeWeightedIndex;

pub const TELEMETRY_FILE: &str = "telemetry.csv";

/// Receives the generated edge stream in timeline order.
pub trait EdgeSink {
    fn emit(&mut self, edge: Edge) -> Result<()>;
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Discards the stream; for runs where only telemetry or the registry
/// matters.
#[derive(Default)]
pub struct NullSink;

impl EdgeSink for NullSink {
    fn emit(&mut self, _edge: Edge) -> Result<()> {
        Ok(())
    }
}

#[derive(Default)]
pub struct VecSink {
    pub edges: Vec<Edge>,
}

impl EdgeSink for VecSink {
    fn emit(&mut self, edge: Edge) -> Result<()> {
        self.edges.push(edge);
        Ok(())
    }
}

pub struct FileSink {
    writer: Option<EdgeWriter<File>>,
    pub written: u64,
}

impl FileSink {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(FileSink { writer: Some(EdgeWriter::create(path)?), written: 0 })
    }
}

impl EdgeSink for FileSink {
    fn emit(&mut self, edge: Edge) -> Result<()> {
        self.writer.as_mut().expect("sink finished").write(edge)
    }

    fn finish(&mut self) -> Result<()> {
        if let Some(w) = self.writer.take() {
            self.written = w.finish()?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct GenerationOutcome {
    pub telemetry: SimulationTelemetry,
    pub registry: EntityRegistry,
    pub exceptional: u64,
    /// Live sampling-index slots at the end of the run: the sum over all
    /// indexes for the direct engine, the largest single relationship for
    /// the per-relationship engine. Proxy for index memory high water.
    pub peak_index_slots: usize,
    pub facts: u64,
}

/// A generation strategy: same model, different bookkeeping order.
pub trait GenerationEngine: Sync {
    fn name(&self) -> &'static str;
    fn run(&self, cfg: &GenerationConfig, seed: u64, sink: &mut dyn EdgeSink)
    -> Result<GenerationOutcome>;
}

struct DirectEngine;
struct PerRelationshipEngine;

static ENGINES: [&dyn GenerationEngine; 2] = [&DirectEngine, &PerRelationshipEngine];

pub fn engine(name: &str) -> Result<&'static dyn GenerationEngine> {
    ENGINES.iter().copied().find(|e| e.name() == name).ok_or_else(|| {
        Error::config(format!(
            "unknown engine '{name}', expected one of: {}",
            engine_names().join(", ")
        ))
    })
}

pub fn engine_names() -> Vec<&'static str> {
    ENGINES.iter().map(|e| e.name()).collect()
}

fn fact_edge(mode: Mode, rel: u32, ends: &[u32; 2]) -> Edge {
    match mode {
        Mode::SingleRoleOut => Edge { subject: ends[0], relationship: rel, object: ends[0] },
        Mode::SingleRoleIn => Edge { subject: ends[1], relationship: rel, object: ends[1] },
        Mode::Joint => Edge { subject: ends[0], relationship: rel, object: ends[1] },
    }
}

fn new_indexes(cfg: &GenerationConfig) -> Vec<[Option<DegreeWeightedIndex>; 2]> {
    cfg.relationships
        .iter()
        .map(|rel| {
            let mut per_role = [None, None];
            for &role in cfg.mode.roles() {
                per_role[role.index()] =
                    Some(DegreeWeightedIndex::new(rel.role(role).expect("validated").alpha));
            }
            per_role
        })
        .collect()
}

impl GenerationEngine for DirectEngine {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn run(
        &self,
        cfg: &GenerationConfig,
        seed: u64,
        sink: &mut dyn EdgeSink,
    ) -> Result<GenerationOutcome> {
        let (mut stepper, seeds) = Stepper::new(cfg, seed)?;
        let roles = cfg.mode.roles();
        let mut indexes = new_indexes(cfg);
        let mut rngs: Vec<[Option<ChaCha8Rng>; 2]> = (0..cfg.relationships.len())
            .map(|rel| {
                let mut per_role = [None, None];
                for &role in roles {
                    per_role[role.index()] = Some(pa_rng(seed, rel as u32, role));
                }
                per_role
            })
            .collect();

        for seed_fact in &seeds {
            for &role in roles {
                let e = seed_fact.entities[role.index()].expect("seeded role");
                indexes[seed_fact.rel as usize][role.index()]
                    .as_mut()
                    .expect("seeded role")
                    .attach(e);
            }
            sink.emit(seed_fact.edge)?;
        }

        let schedule = SampleSchedule::new(cfg.steps, cfg.telemetry_points);
        let mut telemetry =
            SimulationTelemetry { relationships: cfg.relationship_count(), rows: Vec::new() };
        telemetry.rows.push(stepper.telemetry_row());

        for t in 1..=cfg.steps {
            let plan = stepper.step();
            let mut ends = [u32::MAX; 2];
            for &role in roles {
                let slot_idx = role.index();
                let idx = indexes[plan.rel as usize][slot_idx].as_mut().expect("active role");
                let e = match plan.actions[slot_idx].expect("active role") {
                    RoleAction::Preferential => {
                        let rng = rngs[plan.rel as usize][slot_idx].as_mut().expect("active role");
                        let slot = idx.sample(rng);
                        idx.bump(slot);
                        idx.entity(slot)
                    }
                    RoleAction::Fresh(e) | RoleAction::Reuse(e) => {
                        idx.attach(e);
                        e
                    }
                };
                ends[slot_idx] = e;
            }
            sink.emit(fact_edge(cfg.mode, plan.rel, &ends))?;
            if t < cfg.steps && schedule.wants(t) {
                telemetry.rows.push(stepper.telemetry_row());
            }
        }
        if cfg.steps > 0 {
            telemetry.rows.push(stepper.telemetry_row());
        }
        sink.finish()?;

        let peak_index_slots = indexes
            .iter()
            .flat_map(|per_role| per_role.iter().flatten())
            .map(|i| i.slots())
            .sum();
        Ok(GenerationOutcome {
            telemetry,
            exceptional: stepper.exceptional(),
            facts: seeds.len() as u64 + stepper.t(),
            registry: stepper.into_registry(),
            peak_index_slots,
        })
    }
}

/// Replay log of one (relationship, role): arrivals interleaved with
/// preferential draws, in timeline order.
enum ReplayEvent {
    Attach(u32),
    /// Timeline position of the fact whose end awaits the drawn entity.
    Preferential(usize),
}

impl GenerationEngine for PerRelationshipEngine {
    fn name(&self) -> &'static str {
        "per-relationship"
    }

    fn run(
        &self,
        cfg: &GenerationConfig,
        seed: u64,
        sink: &mut dyn EdgeSink,
    ) -> Result<GenerationOutcome> {
        let (mut stepper, seeds) = Stepper::new(cfg, seed)?;
        let roles = cfg.mode.roles();
        let n = cfg.relationships.len();

        // Phase 1: walk the timeline, resolving everything except which
        // entity each preferential draw lands on.
        let mut events: Vec<[Vec<ReplayEvent>; 2]> =
            (0..n).map(|_| [Vec::new(), Vec::new()]).collect();
        let mut edges: Vec<Edge> = Vec::with_capacity(seeds.len() + cfg.steps as usize);
        for seed_fact in &seeds {
            for &role in roles {
                let e = seed_fact.entities[role.index()].expect("seeded role");
                events[seed_fact.rel as usize][role.index()].push(ReplayEvent::Attach(e));
            }
            edges.push(seed_fact.edge);
        }

        let schedule = SampleSchedule::new(cfg.steps, cfg.telemetry_points);
        let mut telemetry =
            SimulationTelemetry { relationships: cfg.relationship_count(), rows: Vec::new() };
        telemetry.rows.push(stepper.telemetry_row());

        for t in 1..=cfg.steps {
            let plan = stepper.step();
            let pos = edges.len();
            let mut ends = [u32::MAX; 2];
            for &role in roles {
                match plan.actions[role.index()].expect("active role") {
                    RoleAction::Preferential => {
                        events[plan.rel as usize][role.index()].push(ReplayEvent::Preferential(pos));
                    }
                    RoleAction::Fresh(e) | RoleAction::Reuse(e) => {
                        events[plan.rel as usize][role.index()].push(ReplayEvent::Attach(e));
                        ends[role.index()] = e;
                    }
                }
            }
            edges.push(fact_edge(cfg.mode, plan.rel, &ends));
            if t < cfg.steps && schedule.wants(t) {
                telemetry.rows.push(stepper.telemetry_row());
            }
        }
        if cfg.steps > 0 {
            telemetry.rows.push(stepper.telemetry_row());
        }

        // Phase 2: one relationship at a time (concurrently; their logs
        // are independent), replay arrivals and preferential draws against
        // a single index, collecting edge patches.
        let mode = cfg.mode;
        let resolved: Vec<(Vec<(usize, Role, u32)>, usize)> = cfg
            .relationships
            .par_iter()
            .enumerate()
            .map(|(rel, spec)| {
                let mut patches = Vec::new();
                let mut slots = 0;
                for &role in roles {
                    let params = spec.role(role).expect("validated");
                    let mut index = DegreeWeightedIndex::new(params.alpha);
                    let mut rng = pa_rng(seed, rel as u32, role);
                    for event in &events[rel][role.index()] {
                        match *event {
                            ReplayEvent::Attach(e) => {
                                index.attach(e);
                            }
                            ReplayEvent::Preferential(pos) => {
                                let slot = index.sample(&mut rng);
                                index.bump(slot);
                                patches.push((pos, role, index.entity(slot)));
                            }
                        }
                    }
                    slots += index.slots();
                }
                (patches, slots)
            })
            .collect();

        let mut peak_index_slots = 0;
        for (patches, slots) in resolved {
            peak_index_slots = peak_index_slots.max(slots);
            for (pos, role, e) in patches {
                match (mode, role) {
                    (Mode::Joint, Role::Out) => edges[pos].subject = e,
                    (Mode::Joint, Role::In) => edges[pos].object = e,
                    _ => {
                        edges[pos].subject = e;
                        edges[pos].object = e;
                    }
                }
            }
        }

        for &edge in &edges {
            sink.emit(edge)?;
        }
        sink.finish()?;

        Ok(GenerationOutcome {
            telemetry,
            exceptional: stepper.exceptional(),
            facts: edges.len() as u64,
            registry: stepper.into_registry(),
            peak_index_slots,
        })
    }
}

/// Run a generation into a directory: the same binary edge stream the
/// ingest path produces, relationship names, and the telemetry series.
pub fn generate_to_dir(
    cfg: &GenerationConfig,
    seed: u64,
    engine_name: &str,
    out_dir: &Path,
) -> Result<GenerationOutcome> {
    let eng = engine(engine_name)?;
    std::fs::create_dir_all(out_dir)?;
    let mut sink = FileSink::create(&out_dir.join(EDGES_FILE))?;
    let outcome = eng.run(cfg, seed, &mut sink)?;
    let names: Vec<String> =
        (0..cfg.relationships.len()).map(|r| format!("relationship_{r}")).collect();
    write_dictionary(&out_dir.join(RELATIONSHIP_DICT_FILE), &names)?;
    let telemetry_file = File::create(out_dir.join(TELEMETRY_FILE))?;
    outcome.telemetry.write_csv(BufWriter::new(telemetry_file))?;
    Ok(outcome)
}
