//! Ablation variants: rebuild a generation config from fitted profiles at
//! four levels of model richness.

use super::config::{GenerationConfig, Mode, RelationshipSpec, RoleParams, SigmaSpec};
use crate::edges::Role;
use crate::error::{Error, Result};
use crate::stats::{Analysis, fit_alpha};

/// Builds a generation config for one named ablation variant.
pub trait VariantBuilder: Sync {
    fn name(&self) -> &'static str;
    fn build(&self, analysis: &Analysis, role: Role, steps: u64) -> Result<GenerationConfig>;
}

struct MultiplexParam;
struct MultiplexLinear;
struct SimplexParam;
struct SimplexLinear;

static VARIANTS: [&dyn VariantBuilder; 4] =
    [&MultiplexParam, &MultiplexLinear, &SimplexParam, &SimplexLinear];

pub fn variant(name: &str) -> Result<&'static dyn VariantBuilder> {
    VARIANTS.iter().copied().find(|v| v.name() == name).ok_or_else(|| {
        Error::config(format!(
            "unknown variant '{name}', expected one of: {}",
            variant_names().join(", ")
        ))
    })
}

pub fn variant_names() -> Vec<&'static str> {
    VARIANTS.iter().map(|v| v.name()).collect()
}

fn multiplex(
    analysis: &Analysis,
    role: Role,
    steps: u64,
    alpha_override: Option<f64>,
) -> Result<GenerationConfig> {
    let summary = analysis.summary.role(role).ok_or_else(|| {
        Error::config(format!(
            "summary lacks {} statistics; refit with --role {} or both",
            role.label(),
            role.label()
        ))
    })?;
    let relationships = analysis
        .profiles
        .iter()
        .map(|p| {
            let stats = p.role(role).ok_or_else(|| {
                Error::config(format!(
                    "relationship {} lacks {} statistics",
                    p.relationship_id,
                    role.label()
                ))
            })?;
            let params = RoleParams {
                beta: stats.beta,
                alpha: alpha_override.unwrap_or(stats.alpha),
            };
            Ok(RelationshipSpec {
                rho: p.rho,
                out: (role == Role::Out).then_some(params),
                r#in: (role == Role::In).then_some(params),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GenerationConfig {
        mode: Mode::single_role(role),
        steps,
        seed: None,
        sigma: SigmaSpec::single(role, summary.sigma),
        relationships,
        case_c_scope: Default::default(),
        telemetry_points: 100,
    })
}

/// Collapse the graph to one relationship: beta from the global
/// distinct-entity ratio, alpha refit against the global maximum degree,
/// sigma forced to 1 (every non-preferential entity is brand new).
fn simplex(analysis: &Analysis, role: Role, steps: u64, alpha_override: Option<f64>) -> Result<GenerationConfig> {
    let summary = analysis.summary.role(role).ok_or_else(|| {
        Error::config(format!(
            "summary lacks {} statistics; refit with --role {} or both",
            role.label(),
            role.label()
        ))
    })?;
    let facts = analysis.summary.facts;
    if facts == 0 {
        return Err(Error::domain("no facts"));
    }
    let beta = 1.0 - summary.entities as f64 / facts as f64;
    let alpha = match alpha_override {
        Some(a) => a,
        None => fit_alpha(beta, facts, summary.k_max)?.alpha,
    };
    let params = RoleParams { beta, alpha };
    Ok(GenerationConfig {
        mode: Mode::single_role(role),
        steps,
        seed: None,
        sigma: SigmaSpec::single(role, 1.0),
        relationships: vec![RelationshipSpec {
            rho: 1.0,
            out: (role == Role::Out).then_some(params),
            r#in: (role == Role::In).then_some(params),
        }],
        case_c_scope: Default::default(),
        telemetry_points: 100,
    })
}

impl VariantBuilder for MultiplexParam {
    fn name(&self) -> &'static str {
        "multiplex_param"
    }
    fn build(&self, analysis: &Analysis, role: Role, steps: u64) -> Result<GenerationConfig> {
        multiplex(analysis, role, steps, None)
    }
}

impl VariantBuilder for MultiplexLinear {
    fn name(&self) -> &'static str {
        "multiplex_linear"
    }
    fn build(&self, analysis: &Analysis, role: Role, steps: u64) -> Result<GenerationConfig> {
        multiplex(analysis, role, steps, Some(1.0))
    }
}

impl VariantBuilder for SimplexParam {
    fn name(&self) -> &'static str {
        "simplex_param"
    }
    fn build(&self, analysis: &Analysis, role: Role, steps: u64) -> Result<GenerationConfig> {
        simplex(analysis, role, steps, None)
    }
}

impl VariantBuilder for SimplexLinear {
    fn name(&self) -> &'static str {
        "simplex_linear"
    }
    fn build(&self, analysis: &Analysis, role: Role, steps: u64) -> Result<GenerationConfig> {
        simplex(analysis, role, steps, Some(1.0))
    }
}
