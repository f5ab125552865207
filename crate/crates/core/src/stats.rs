//! Empirical model parameters from degree tables.
//!
//! Estimation is purely arithmetic: proportions for rho, distinct-entity
//! ratios for beta and sigma, and a bisection against the expected maximum
//! degree for alpha. Roles are analyzed independently and a profile stores
//! both sides, so downstream consumers pick whichever view they need.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edges::Role;
use crate::error::{Error, Result};
use crate::hist::DegreeHistogram;
use crate::ingest::DegreeTables;
use crate::theory::{distribution_defined, mean_max_degree};

/// One role's estimated parameters for a single relationship.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleStats {
    pub distinct_entities: u64,
    pub beta: f64,
    pub alpha: f64,
    /// True when the bisection clamped alpha at 0 or 1 because the
    /// observed maximum degree fell outside the predictable range.
    pub alpha_clamped: bool,
    pub k_max: u64,
    /// c_r = rho_r * (1 - beta_r), the per-step probability that this
    /// relationship attaches a non-preferential entity in this role.
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationshipProfile {
    pub relationship_id: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iri: Option<String>,
    pub facts: u64,
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<RoleStats>,
    #[serde(rename = "in", skip_serializing_if = "Option::is_none", default)]
    pub r#in: Option<RoleStats>,
}

impl RelationshipProfile {
    pub fn role(&self, role: Role) -> Option<&RoleStats> {
        match role {
            Role::Out => self.out.as_ref(),
            Role::In => self.r#in.as_ref(),
        }
    }
}

/// Whole-graph aggregates for one role.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleSummary {
    pub entities: u64,
    pub k_max: u64,
    pub sigma: f64,
    /// a = sigma * sum_r c_r, the per-step probability of introducing a
    /// brand-new entity.
    pub a: f64,
    /// Whether (n, sigma) admits the closed-form relationship-count
    /// distribution, i.e. n*sigma > 1 (the strict reading of the minimal
    /// relationship-count constraint n > 1/sigma - 1).
    pub distribution_defined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub facts: u64,
    pub relationships: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<RoleSummary>,
    #[serde(rename = "in", skip_serializing_if = "Option::is_none", default)]
    pub r#in: Option<RoleSummary>,
}

impl GraphSummary {
    pub fn role(&self, role: Role) -> Option<&RoleSummary> {
        match role {
            Role::Out => self.out.as_ref(),
            Role::In => self.r#in.as_ref(),
        }
    }
}

/// rho_r = |F_r| / |F| over the facts map. Errors on an empty graph.
pub fn estimate_rho(facts_per_rel: &BTreeMap<u32, u64>) -> Result<BTreeMap<u32, f64>> {
    let total: u64 = facts_per_rel.values().sum();
    if total == 0 {
        return Err(Error::domain("no facts"));
    }
    Ok(facts_per_rel
        .iter()
        .map(|(&r, &f)| (r, f as f64 / total as f64))
        .collect())
}

/// beta_r = 1 - |E_r| / |F_r|.
pub fn estimate_beta(distinct_entities: u64, facts: u64) -> Result<f64> {
    if facts == 0 {
        return Err(Error::domain("relationship has no facts"));
    }
    if distinct_entities == 0 || distinct_entities > facts {
        return Err(Error::internal(format!(
            "degree table reports {distinct_entities} distinct entities over \
             {facts} facts; ingest cannot produce this"
        )));
    }
    Ok(1.0 - distinct_entities as f64 / facts as f64)
}

/// sigma = |E| / sum_r |E_r|. The denominator equals
/// sum_r rho_r (1 - beta_r) |F| algebraically, so this is the exact form
/// of the ratio-of-expectations estimator.
pub fn estimate_sigma(total_entities: u64, per_rel_entities: impl IntoIterator<Item = u64>) -> Result<f64> {
    let denom: u64 = per_rel_entities.into_iter().sum();
    if denom == 0 {
        return Err(Error::domain("no facts"));
    }
    Ok(total_entities as f64 / denom as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub alpha: f64,
    pub clamped: bool,
}

/// Invert the expected-maximum-degree curve for alpha by bisection.
///
/// The objective is log-scale (|ln predicted - ln observed|) because k_max
/// spans many orders of magnitude. Out-of-range observations clamp to the
/// nearest endpoint and set the flag; the exact endpoint hit stays
/// unflagged.
pub fn fit_alpha(beta: f64, facts: u64, observed_kmax: u64) -> Result<FitResult> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::domain(format!("beta must lie in [0, 1), got {beta}")));
    }
    if observed_kmax < 1 || observed_kmax > facts {
        return Err(Error::domain(format!(
            "observed k_max = {observed_kmax} outside 1..=|F_r| = {facts}"
        )));
    }
    let t = facts as f64;
    let target = (observed_kmax as f64).ln();
    let objective = |alpha: f64| mean_max_degree(alpha, beta, t).ln() - target;

    let at_zero = objective(0.0);
    if at_zero >= 0.0 {
        // alpha = 0 already predicts at least the observation; any larger
        // alpha only overshoots further
        return Ok(FitResult { alpha: 0.0, clamped: at_zero > 0.0 });
    }
    let at_one = objective(1.0);
    if at_one <= 0.0 {
        return Ok(FitResult { alpha: 1.0, clamped: at_one < 0.0 });
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if objective(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FitResult { alpha: 0.5 * (lo + hi), clamped: false })
}

/// Per-relationship and global degree histograms for one role's tables.
pub fn build_histograms(tables: &DegreeTables) -> (BTreeMap<u32, DegreeHistogram>, DegreeHistogram) {
    let per_rel = tables
        .per_relationship
        .iter()
        .map(|(&r, map)| (r, DegreeHistogram::from_degree_counts(map.values().copied())))
        .collect();
    let global = DegreeHistogram::from_degree_counts(tables.global.values().copied());
    (per_rel, global)
}

fn role_stats(map: &std::collections::HashMap<u32, u64>, rho: f64) -> Result<RoleStats> {
    let facts: u64 = map.values().sum();
    let distinct = map.len() as u64;
    let k_max = map.values().copied().max().unwrap_or(0);
    let beta = estimate_beta(distinct, facts)?;
    let fit = fit_alpha(beta, facts, k_max)?;
    Ok(RoleStats {
        distinct_entities: distinct,
        beta,
        alpha: fit.alpha,
        alpha_clamped: fit.clamped,
        k_max,
        c: rho * (1.0 - beta),
    })
}

fn role_summary(tables: &DegreeTables, profiles: &[RelationshipProfile], role: Role) -> Result<RoleSummary> {
    let per_rel_entities = profiles
        .iter()
        .filter_map(|p| p.role(role))
        .map(|s| s.distinct_entities);
    let sigma = estimate_sigma(tables.global.len() as u64, per_rel_entities)?;
    let a: f64 = sigma * profiles.iter().filter_map(|p| p.role(role)).map(|s| s.c).sum::<f64>();
    Ok(RoleSummary {
        entities: tables.global.len() as u64,
        k_max: tables.global.values().copied().max().unwrap_or(0),
        sigma,
        a,
        distribution_defined: distribution_defined(profiles.len() as u32, sigma),
    })
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub profiles: Vec<RelationshipProfile>,
    pub summary: GraphSummary,
}

/// Assemble profiles and summaries from the degree tables of one or both
/// roles. `relationship_names` (index = id) fills the optional IRI field.
pub fn analyze(
    out_tables: Option<&DegreeTables>,
    in_tables: Option<&DegreeTables>,
    relationship_names: Option<&[String]>,
) -> Result<Analysis> {
    let any = out_tables
        .or(in_tables)
        .ok_or_else(|| Error::config("need degree tables for at least one role"))?;
    debug_assert!(out_tables.is_none_or(|t| t.role == Role::Out));
    debug_assert!(in_tables.is_none_or(|t| t.role == Role::In));

    // |F_r| is role-independent (every fact has both ends), so either
    // table yields the same facts map.
    let facts_per_rel: BTreeMap<u32, u64> = any
        .per_relationship
        .iter()
        .map(|(&r, map)| (r, map.values().sum()))
        .collect();
    let total_facts: u64 = facts_per_rel.values().sum();
    let rho = estimate_rho(&facts_per_rel)?;

    let fit_role = |tables: Option<&DegreeTables>| -> Result<BTreeMap<u32, RoleStats>> {
        let Some(tables) = tables else {
            return Ok(BTreeMap::new());
        };
        tables
            .per_relationship
            .par_iter()
            .map(|(&r, map)| Ok((r, role_stats(map, rho[&r])?)))
            .collect()
    };
    let mut out_stats = fit_role(out_tables)?;
    let mut in_stats = fit_role(in_tables)?;

    let profiles: Vec<RelationshipProfile> = facts_per_rel
        .iter()
        .map(|(&r, &facts)| RelationshipProfile {
            relationship_id: r,
            iri: relationship_names.and_then(|names| names.get(r as usize).cloned()),
            facts,
            rho: rho[&r],
            out: out_stats.remove(&r),
            r#in: in_stats.remove(&r),
        })
        .collect();

    let summary = GraphSummary {
        facts: total_facts,
        relationships: profiles.len() as u32,
        out: out_tables.map(|t| role_summary(t, &profiles, Role::Out)).transpose()?,
        r#in: in_tables.map(|t| role_summary(t, &profiles, Role::In)).transpose()?,
    };
    Ok(Analysis { profiles, summary })
}
