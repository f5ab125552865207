//! Synthetic graph generation by multiplex preferential attachment with
//! superficiality.
//!
//! Each step draws a relationship proportionally to rho, then resolves one
//! attachment event per active role: preferential attachment with
//! probability beta (weight k^alpha over the entities already attached to
//! the relationship and role), a brand-new entity with probability
//! (1-beta)*sigma, and otherwise uniform reuse of an entity the
//! relationship has not touched yet. When no reusable entity exists the
//! step is exceptional and falls back to creating a fresh entity.
//!
//! Two engines produce the same stream: `direct` keeps every
//! relationship's sampling index live along one pass, `per-relationship`
//! splits the run into a timeline phase and per-relationship replay
//! phases, holding only one index at a time. Randomness is split into a
//! timeline stream plus one stream per (relationship, role), so both
//! engines consume identical draws and emit bit-identical output.

mod config;
mod engine;
mod telemetry;
mod variants;

pub use config::{CaseCScope, GenerationConfig, Mode, RelationshipSpec, RoleParams, SigmaSpec};
pub use engine::{
    EdgeSink, FileSink, GenerationEngine, GenerationOutcome, NullSink, TELEMETRY_FILE, VecSink,
    engine, engine_names, generate_to_dir,
};
pub use telemetry::{SampleSchedule, SimulationTelemetry, TelemetryRow};
pub use variants::{VariantBuilder, variant, variant_names};

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::edges::{Edge, Role};
use crate::error::Result;
use crate::rng::derive_rng;

/// Stream tag for relationship/case/reuse decisions.
const TIMELINE_TAG: &str = "timeline";
/// Stream tag for per-(relationship, role) preferential draws.
const PA_TAG: &str = "pa";

pub fn timeline_rng(seed: u64) -> ChaCha8Rng {
    derive_rng(seed, TIMELINE_TAG, 0, 0)
}

pub fn pa_rng(seed: u64, relationship: u32, role: Role) -> ChaCha8Rng {
    derive_rng(seed, PA_TAG, relationship as u64, role.index() as u64)
}

/// Entities of a generated graph: creation metadata plus the exact set of
/// (relationship, role) attachments.
#[derive(Clone, Debug, Default)]
pub struct EntityRegistry {
    creators: Vec<u32>,
    born: Vec<u64>,
    attachments: Vec<Vec<(u32, Role)>>,
    distinct_rels: Vec<u32>,
}

impl EntityRegistry {
    pub fn len(&self) -> u32 {
        self.creators.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.creators.is_empty()
    }

    pub fn creator(&self, e: u32) -> u32 {
        self.creators[e as usize]
    }

    pub fn born(&self, e: u32) -> u64 {
        self.born[e as usize]
    }

    pub fn attachments(&self, e: u32) -> &[(u32, Role)] {
        &self.attachments[e as usize]
    }

    /// r_e: how many distinct relationships the entity is attached to.
    pub fn distinct_relationships(&self, e: u32) -> u32 {
        self.distinct_rels[e as usize]
    }

    /// M_i for i = 1..=n over the current population.
    pub fn relationship_count_histogram(&self, n: u32) -> Vec<u64> {
        let mut m_i = vec![0u64; n as usize];
        for &c in &self.distinct_rels {
            m_i[c as usize - 1] += 1;
        }
        m_i
    }

    fn create(&mut self, creator: u32, born: u64) -> u32 {
        let e = self.creators.len() as u32;
        self.creators.push(creator);
        self.born.push(born);
        self.attachments.push(Vec::with_capacity(1));
        self.distinct_rels.push(0);
        e
    }

    /// Record the attachment; true when the relationship is new to the
    /// entity regardless of role.
    fn attach(&mut self, e: u32, rel: u32, role: Role) -> bool {
        let list = &mut self.attachments[e as usize];
        debug_assert!(!list.contains(&(rel, role)), "duplicate attachment");
        let newly = !list.iter().any(|&(r, _)| r == rel);
        list.push((rel, role));
        if newly {
            self.distinct_rels[e as usize] += 1;
        }
        newly
    }

    fn is_attached(&self, e: u32, rel: u32, role: Role, scope: CaseCScope) -> bool {
        let list = &self.attachments[e as usize];
        match scope {
            CaseCScope::Role => list.contains(&(rel, role)),
            CaseCScope::Relationship => list.iter().any(|&(r, _)| r == rel),
        }
    }
}

/// How one role's end of a step resolves. Preferential attachment carries
/// no entity: the engine resolves it against its sampling index, keeping
/// the timeline stream independent of index bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoleAction {
    Preferential,
    Fresh(u32),
    Reuse(u32),
}

#[derive(Clone, Copy, Debug)]
pub struct StepPlan {
    pub rel: u32,
    /// Indexed by `Role::index()`; only the mode's roles are set.
    pub actions: [Option<RoleAction>; 2],
}

/// One attachment forced at t=0 so every (relationship, role) index starts
/// with a sampleable entity.
#[derive(Clone, Copy, Debug)]
pub struct SeedFact {
    pub rel: u32,
    pub entities: [Option<u32>; 2],
    pub edge: Edge,
}

struct CaseThresholds {
    beta: f64,
    /// beta + (1-beta)*sigma: below this (and above beta) a fresh entity
    /// is created.
    fresh: f64,
}

/// The sequential heart of generation: consumes only the timeline stream
/// and maintains every counter that does not depend on which entity a
/// preferential draw lands on.
pub struct Stepper {
    mode: Mode,
    scope: CaseCScope,
    cum_rho: Vec<f64>,
    thresholds: Vec<[Option<CaseThresholds>; 2]>,
    timeline: ChaCha8Rng,
    registry: EntityRegistry,
    /// Attached entities per (relationship, role).
    m_role: Vec<[u64; 2]>,
    /// Distinct entities per relationship across roles.
    m_union: Vec<u64>,
    /// M_i, entities with exactly i distinct relationships (index i-1).
    m_i: Vec<u64>,
    /// Post-seed facts per relationship.
    f_r: Vec<u64>,
    exceptional: u64,
    t: u64,
}

impl Stepper {
    /// Validates the config, seeds one entity per relationship per active
    /// role, and returns the seed facts for the engine to materialize.
    pub fn new(cfg: &GenerationConfig, seed: u64) -> Result<(Stepper, Vec<SeedFact>)> {
        cfg.validate()?;
        let n = cfg.relationships.len();
        let mut cum = 0.0;
        let cum_rho: Vec<f64> = cfg
            .relationships
            .iter()
            .map(|r| {
                cum += r.rho;
                cum
            })
            .collect();
        let thresholds = cfg
            .relationships
            .iter()
            .map(|rel| {
                let mut per_role = [None, None];
                for &role in cfg.mode.roles() {
                    let p = rel.role(role).expect("validated");
                    let sigma = cfg.sigma.role(role).expect("validated");
                    per_role[role.index()] = Some(CaseThresholds {
                        beta: p.beta,
                        fresh: p.beta + (1.0 - p.beta) * sigma,
                    });
                }
                per_role
            })
            .collect();

        let mut stepper = Stepper {
            mode: cfg.mode,
            scope: cfg.case_c_scope,
            cum_rho,
            thresholds,
            timeline: timeline_rng(seed),
            registry: EntityRegistry::default(),
            m_role: vec![[0, 0]; n],
            m_union: vec![0; n],
            m_i: vec![0; n],
            f_r: vec![0; n],
            exceptional: 0,
            t: 0,
        };

        let mut seeds = Vec::with_capacity(n);
        for rel in 0..n as u32 {
            let mut entities = [None, None];
            for &role in cfg.mode.roles() {
                let e = stepper.fresh_entity(rel, role);
                entities[role.index()] = Some(e);
            }
            let subject = entities[Role::Out.index()]
                .or(entities[Role::In.index()])
                .expect("at least one role");
            let object = entities[Role::In.index()].unwrap_or(subject);
            seeds.push(SeedFact { rel, entities, edge: Edge { subject, relationship: rel, object } });
        }
        Ok((stepper, seeds))
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn registry(&self) -> &EntityRegistry {
        &self.registry
    }

    pub fn into_registry(self) -> EntityRegistry {
        self.registry
    }

    pub fn exceptional(&self) -> u64 {
        self.exceptional
    }

    pub fn telemetry_row(&self) -> TelemetryRow {
        TelemetryRow {
            t: self.t,
            m: self.registry.len() as u64,
            exceptional: self.exceptional,
            m_r: self.m_union.clone(),
            f_r: self.f_r.clone(),
            m_i: self.m_i.clone(),
        }
    }

    fn fresh_entity(&mut self, rel: u32, role: Role) -> u32 {
        let e = self.registry.create(rel, self.t);
        self.record_attachment(e, rel, role);
        e
    }

    fn record_attachment(&mut self, e: u32, rel: u32, role: Role) {
        let newly = self.registry.attach(e, rel, role);
        self.m_role[rel as usize][role.index()] += 1;
        if newly {
            self.m_union[rel as usize] += 1;
            let r_count = self.registry.distinct_relationships(e) as usize;
            if r_count > 1 {
                self.m_i[r_count - 2] -= 1;
            }
            self.m_i[r_count - 1] += 1;
        }
    }

    /// Entities the reuse case must avoid for (rel, role).
    fn attached_in_scope(&self, rel: u32, role: Role) -> u64 {
        match self.scope {
            CaseCScope::Role => self.m_role[rel as usize][role.index()],
            CaseCScope::Relationship => self.m_union[rel as usize],
        }
    }

    /// Uniform draw over the entities not attached to (rel, role):
    /// rejection against the full population first, falling back to an
    /// explicit complement scan for degenerate pools.
    fn sample_unattached(&mut self, rel: u32, role: Role) -> u32 {
        let m = self.registry.len();
        for _ in 0..64 {
            let cand = self.timeline.random_range(0..m);
            if !self.registry.is_attached(cand, rel, role, self.scope) {
                return cand;
            }
        }
        let pool: Vec<u32> = (0..m)
            .filter(|&e| !self.registry.is_attached(e, rel, role, self.scope))
            .collect();
        pool[self.timeline.random_range(0..pool.len())]
    }

    /// Advance one step: draw the relationship and one action per active
    /// role, updating all registry-level state. Preferential draws are
    /// left to the engine.
    pub fn step(&mut self) -> StepPlan {
        self.t += 1;
        let x: f64 = self.timeline.random();
        let rel = self
            .cum_rho
            .partition_point(|&c| c <= x)
            .min(self.cum_rho.len() - 1);
        self.f_r[rel] += 1;

        let mut actions = [None, None];
        for &role in self.mode.roles() {
            let th = self.thresholds[rel][role.index()].as_ref().expect("validated");
            let u: f64 = self.timeline.random();
            let action = if u < th.beta {
                RoleAction::Preferential
            } else if u < th.fresh {
                RoleAction::Fresh(self.fresh_entity(rel as u32, role))
            } else if self.attached_in_scope(rel as u32, role) == self.registry.len() as u64 {
                // nothing left to reuse: exceptional step, checked before
                // any reuse draw so the fallback consumes no randomness
                self.exceptional += 1;
                RoleAction::Fresh(self.fresh_entity(rel as u32, role))
            } else {
                let e = self.sample_unattached(rel as u32, role);
                self.record_attachment(e, rel as u32, role);
                RoleAction::Reuse(e)
            };
            actions[role.index()] = Some(action);
        }
        StepPlan { rel: rel as u32, actions }
    }
}
