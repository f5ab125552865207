//! Generation configuration: the model parameters plus run controls.

use serde::{Deserialize, Serialize};

use crate::edges::Role;
use crate::error::{Error, Result};
use crate::theory::{constraint_error, distribution_defined};

/// Attachment parameters of one relationship for one role.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleParams {
    /// Probability that a fact goes to an already-attached entity via
    /// preferential attachment.
    pub beta: f64,
    /// Preferential-attachment exponent: weight k^alpha.
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationshipSpec {
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<RoleParams>,
    #[serde(rename = "in", skip_serializing_if = "Option::is_none", default)]
    pub r#in: Option<RoleParams>,
}

impl RelationshipSpec {
    pub fn role(&self, role: Role) -> Option<&RoleParams> {
        match role {
            Role::Out => self.out.as_ref(),
            Role::In => self.r#in.as_ref(),
        }
    }
}

/// Which fact ends the timeline models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Model the subject end only; facts are written as self-loops.
    SingleRoleOut,
    /// Model the object end only.
    SingleRoleIn,
    /// Draw subject and object within one step, each with its own role
    /// parameters.
    Joint,
}

impl Mode {
    pub fn roles(&self) -> &'static [Role] {
        match self {
            Mode::SingleRoleOut => &[Role::Out],
            Mode::SingleRoleIn => &[Role::In],
            Mode::Joint => &[Role::Out, Role::In],
        }
    }

    pub fn uses(&self, role: Role) -> bool {
        self.roles().contains(&role)
    }

    pub fn single_role(role: Role) -> Mode {
        match role {
            Role::Out => Mode::SingleRoleOut,
            Role::In => Mode::SingleRoleIn,
        }
    }
}

/// Exclusion scope for the uniform-reuse case: an entity counts as already
/// attached per (relationship, role), or per relationship across roles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseCScope {
    #[default]
    Role,
    Relationship,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SigmaSpec {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out: Option<f64>,
    #[serde(rename = "in", skip_serializing_if = "Option::is_none", default)]
    pub r#in: Option<f64>,
}

impl SigmaSpec {
    pub fn role(&self, role: Role) -> Option<f64> {
        match role {
            Role::Out => self.out,
            Role::In => self.r#in,
        }
    }

    pub fn single(role: Role, value: f64) -> SigmaSpec {
        match role {
            Role::Out => SigmaSpec { out: Some(value), r#in: None },
            Role::In => SigmaSpec { out: None, r#in: Some(value) },
        }
    }
}

fn default_telemetry_points() -> u32 {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub mode: Mode,
    /// Post-seed steps; the output additionally carries one seed fact per
    /// relationship (per role pair in joint mode).
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub sigma: SigmaSpec,
    pub relationships: Vec<RelationshipSpec>,
    #[serde(default)]
    pub case_c_scope: CaseCScope,
    /// Approximate number of sampled telemetry rows between t=0 and t=T.
    #[serde(default = "default_telemetry_points")]
    pub telemetry_points: u32,
}

impl GenerationConfig {
    pub fn relationship_count(&self) -> u32 {
        self.relationships.len() as u32
    }

    /// Check the full parameter domain, including the minimal
    /// relationship-count constraint per active role.
    pub fn validate(&self) -> Result<()> {
        let n = self.relationships.len() as u32;
        if n == 0 {
            return Err(Error::config("need at least one relationship"));
        }
        let rho_sum: f64 = self.relationships.iter().map(|r| r.rho).sum();
        if (rho_sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "relationship proportions must sum to 1, got {rho_sum}"
            )));
        }
        for (i, rel) in self.relationships.iter().enumerate() {
            if !(rel.rho > 0.0) {
                return Err(Error::config(format!(
                    "relationship {i}: rho must be positive, got {}",
                    rel.rho
                )));
            }
            for role in self.mode.roles() {
                let Some(params) = rel.role(*role) else {
                    return Err(Error::config(format!(
                        "relationship {i}: mode {:?} needs {} parameters",
                        self.mode,
                        role.label()
                    )));
                };
                if !(0.0..1.0).contains(&params.beta) {
                    return Err(Error::config(format!(
                        "relationship {i} {}: beta must lie in [0, 1), got {}",
                        role.label(),
                        params.beta
                    )));
                }
                if !(0.0..=1.0).contains(&params.alpha) {
                    return Err(Error::config(format!(
                        "relationship {i} {}: alpha must lie in [0, 1], got {}",
                        role.label(),
                        params.alpha
                    )));
                }
            }
        }
        for role in self.mode.roles() {
            let Some(sigma) = self.sigma.role(*role) else {
                return Err(Error::config(format!(
                    "mode {:?} needs a {} superficiality",
                    self.mode,
                    role.label()
                )));
            };
            if !(sigma > 0.0 && sigma <= 1.0) {
                return Err(Error::config(format!(
                    "{} superficiality must lie in (0, 1], got {sigma}",
                    role.label()
                )));
            }
            if !distribution_defined(n, sigma) {
                return Err(constraint_error(n, sigma));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn uniform_config(
        n: usize,
        beta: f64,
        alpha: f64,
        sigma: f64,
        steps: u64,
    ) -> GenerationConfig {
        GenerationConfig {
            mode: Mode::SingleRoleOut,
            steps,
            seed: None,
            sigma: SigmaSpec::single(Role::Out, sigma),
            relationships: vec![
                RelationshipSpec {
                    rho: 1.0 / n as f64,
                    out: Some(RoleParams { beta, alpha }),
                    r#in: None,
                };
                n
            ],
            case_c_scope: CaseCScope::Role,
            telemetry_points: 10,
        }
    }

    #[test]
    fn valid_config_passes() {
        uniform_config(25, 0.85, 1.0, 0.95, 100).validate().unwrap();
        uniform_config(25, 0.85, 1.0, 0.05, 100).validate().unwrap();
        uniform_config(1, 0.0, 0.0, 1.0, 0).validate().unwrap();
    }

    #[test]
    fn constraint_violations_are_rejected() {
        let err = uniform_config(10, 0.85, 1.0, 0.05, 100).validate().unwrap_err();
        assert!(err.to_string().contains("n > 1/sigma - 1"));
        assert!(matches!(err, Error::Domain(_)));
        let err = uniform_config(20, 0.85, 1.0, 0.05, 100).validate().unwrap_err();
        assert!(err.to_string().contains("n*sigma > 1"));
    }

    #[test]
    fn parameter_domains_are_checked() {
        let mut c = uniform_config(2, 0.85, 1.0, 0.9, 10);
        c.relationships[0].rho = 0.7;
        assert!(c.validate().unwrap_err().to_string().contains("sum to 1"));

        let mut c = uniform_config(2, 1.0, 1.0, 0.9, 10);
        c.relationships[1].out.as_mut().unwrap().beta = 0.5;
        c.relationships[0].rho = 0.5;
        c.relationships[1].rho = 0.5;
        assert!(c.validate().unwrap_err().to_string().contains("beta"));

        let mut c = uniform_config(2, 0.5, 1.5, 0.9, 10);
        c.relationships[0].out.as_mut().unwrap().alpha = 1.5;
        assert!(c.validate().unwrap_err().to_string().contains("alpha"));

        let mut c = uniform_config(2, 0.5, 1.0, 0.9, 10);
        c.sigma = SigmaSpec::single(Role::In, 0.9);
        assert!(c.validate().unwrap_err().to_string().contains("superficiality"));

        let mut c = uniform_config(2, 0.5, 1.0, 0.9, 10);
        c.relationships[0].out = None;
        assert!(c.validate().unwrap_err().to_string().contains("parameters"));
    }

    #[test]
    fn joint_mode_requires_both_roles() {
        let mut c = uniform_config(3, 0.5, 1.0, 0.9, 10);
        c.mode = Mode::Joint;
        assert!(c.validate().is_err());
        for rel in &mut c.relationships {
            rel.r#in = Some(RoleParams { beta: 0.2, alpha: 0.5 });
        }
        c.sigma.r#in = Some(0.8);
        c.validate().unwrap();
    }

    #[test]
    fn config_json_round_trips_with_defaults() {
        let text = r#"{
            "mode": "single_role_out",
            "steps": 50,
            "sigma": {"out": 1.0},
            "relationships": [
                {"rho": 1.0, "out": {"beta": 0.5, "alpha": 1.0}}
            ]
        }"#;
        let c: GenerationConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.case_c_scope, CaseCScope::Role);
        assert_eq!(c.telemetry_points, 100);
        assert_eq!(c.seed, None);
        c.validate().unwrap();
        let back: GenerationConfig =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
