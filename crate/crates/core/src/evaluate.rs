//! Quantitative comparison of real, generated, and closed-form
//! distributions: divergence tables, tail-exponent fits, ablation runs,
//! and telemetry law checks.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::edges::Role;
use crate::error::{Error, Result};
use crate::generate::{
    GenerationConfig, GenerationEngine, Mode, NullSink, RelationshipSpec, RoleParams, SigmaSpec,
    SimulationTelemetry, VecSink, variant, variant_names,
};
use crate::hist::DegreeHistogram;
use crate::ingest::DegreeTables;
use crate::stats::{Analysis, GraphSummary, analyze, build_histograms};
use crate::theory::relationship_count_distribution;

pub use crate::csv_float;

/// One Kullback-Leibler evaluation, natural log, first argument as the
/// reference distribution.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KlResult {
    pub kl: f64,
    /// Floor substituted for generated-side zero bins: 1/(10 * entities
    /// behind the second histogram).
    pub epsilon: f64,
    /// Reference-side degrees the second histogram missed entirely.
    pub floored_bins: u64,
    pub p_support: u64,
    pub q_support: u64,
}

/// KL(p || q) over integer-degree bins. Degrees present in `p` but absent
/// from `q` receive the epsilon floor and `q` is renormalized, so the
/// value stays finite and nonnegative.
pub fn kl_divergence(p: &DegreeHistogram, q: &DegreeHistogram) -> Result<KlResult> {
    if p.entities() == 0 || q.entities() == 0 {
        return Err(Error::domain("KL divergence of an empty histogram"));
    }
    let epsilon = 1.0 / (10.0 * q.entities() as f64);
    let floored_bins = p.iter().filter(|&(k, _)| q.count(k) == 0).count() as u64;
    let z = 1.0 + floored_bins as f64 * epsilon;
    let mut kl = 0.0;
    for (k, count) in p.iter() {
        let p_k = count as f64 / p.entities() as f64;
        let q_k = match q.count(k) {
            0 => epsilon,
            c => c as f64 / q.entities() as f64,
        };
        kl += p_k * (p_k * z / q_k).ln();
    }
    Ok(KlResult {
        kl,
        epsilon,
        floored_bins,
        p_support: p.iter().count() as u64,
        q_support: q.iter().count() as u64,
    })
}

/// Total-variation distance between two probability vectors over the same
/// index set; shorter input is treated as zero-padded.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailBin {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub count: u64,
    pub density: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailFit {
    /// Estimated exponent of P(k) ~ k^-gamma.
    pub gamma: f64,
    pub intercept: f64,
    pub k_min: u64,
    pub ratio: f64,
    pub bins: Vec<TailBin>,
}

/// Least-squares slope of log density against log degree over geometric
/// bins `[k_min * ratio^j, k_min * ratio^(j+1))`. Counts are divided by
/// bin width so unequal bins estimate a density; empty bins are skipped.
pub fn tail_exponent(hist: &DegreeHistogram, k_min: u64, ratio: f64) -> Result<TailFit> {
    if !(ratio > 1.0) {
        return Err(Error::config(format!("bin ratio must exceed 1, got {ratio}")));
    }
    let total = hist.entities();
    if total == 0 {
        return Err(Error::domain("tail fit of an empty histogram"));
    }
    let k_max = hist.k_max();
    let mut bins = Vec::new();
    let mut lo = k_min as f64;
    while lo <= k_max as f64 {
        let hi = lo * ratio;
        let count: u64 = hist
            .iter()
            .filter(|&(k, _)| (k as f64) >= lo && (k as f64) < hi)
            .map(|(_, c)| c)
            .sum();
        if count > 0 {
            bins.push(TailBin {
                lo,
                hi,
                center: (lo * hi).sqrt(),
                count,
                density: count as f64 / total as f64 / (hi - lo),
            });
        }
        lo = hi;
    }
    if bins.len() < 3 {
        return Err(Error::domain(format!(
            "tail fit needs at least 3 occupied bins above degree {k_min}, got {}",
            bins.len()
        )));
    }

    let pts: Vec<(f64, f64)> = bins.iter().map(|b| (b.center.ln(), b.density.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(TailFit { gamma: -slope, intercept: (sy - slope * sx) / n, k_min, ratio, bins })
}

/// A single-relationship run for tail inspection: sigma is forced to 1
/// because one relationship leaves nothing to reuse.
pub fn powerlaw_tail_config(beta: f64, alpha: f64, steps: u64) -> GenerationConfig {
    GenerationConfig {
        mode: Mode::SingleRoleOut,
        steps,
        seed: None,
        sigma: SigmaSpec::single(Role::Out, 1.0),
        relationships: vec![RelationshipSpec {
            rho: 1.0,
            out: Some(RoleParams { beta, alpha }),
            r#in: None,
        }],
        case_c_scope: Default::default(),
        telemetry_points: 0,
    }
}

/// The reference multiplex: 25 equally likely relationships, beta 0.85,
/// alpha 1, subject role only; only sigma and the horizon vary.
pub fn reference_multiplex_config(sigma: f64, steps: u64) -> GenerationConfig {
    let rel = RelationshipSpec {
        rho: 1.0 / 25.0,
        out: Some(RoleParams { beta: 0.85, alpha: 1.0 }),
        r#in: None,
    };
    GenerationConfig {
        mode: Mode::SingleRoleOut,
        steps,
        seed: None,
        sigma: SigmaSpec::single(Role::Out, sigma),
        relationships: vec![rel; 25],
        case_c_scope: Default::default(),
        telemetry_points: 0,
    }
}

/// Degree and relationship-count distributions of one reference-multiplex
/// run, with the closed-form overlay.
#[derive(Clone, Debug)]
pub struct OverlayResult {
    pub sigma: f64,
    pub steps: u64,
    /// (degree, empirical probability), ascending.
    pub degree: Vec<(u64, f64)>,
    /// (r, empirical M_r/m, closed-form P(r)) for r = 1..=25.
    pub relationship_counts: Vec<(u32, f64, f64)>,
    pub tv: f64,
    pub argmax_empirical: u32,
    pub argmax_theory: u32,
}

/// Generate the reference multiplex at one superficiality and compare the
/// empirical relationship-count distribution against the closed form.
pub fn overlay_experiment(
    sigma: f64,
    steps: u64,
    seed: u64,
    engine: &dyn GenerationEngine,
) -> Result<OverlayResult> {
    let cfg = reference_multiplex_config(sigma, steps);
    let mut sink = VecSink::default();
    let outcome = engine.run(&cfg, seed, &mut sink)?;

    let tables = DegreeTables::from_edges(&sink.edges, Role::Out, 1)?;
    let degree = build_histograms(&tables).1.normalized();

    let n = cfg.relationship_count();
    let m_i = outcome.registry.relationship_count_histogram(n);
    let m = outcome.registry.len() as f64;
    let empirical: Vec<f64> = m_i.iter().map(|&c| c as f64 / m).collect();
    let theory = relationship_count_distribution(n, sigma)?;
    let theoretical = theory.probabilities();

    let relationship_counts = (0..n as usize)
        .map(|i| (i as u32 + 1, empirical[i], theoretical[i]))
        .collect();
    let argmax_empirical = empirical
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i as u32 + 1)
        .expect("nonempty");

    Ok(OverlayResult {
        sigma,
        steps,
        degree,
        relationship_counts,
        tv: total_variation(&empirical, theoretical),
        argmax_empirical,
        argmax_theory: theory.argmax(),
    })
}

/// Columns: degree block then relationship block, row-aligned by index;
/// the shorter block leaves its cells empty.
pub fn write_overlay_csv(result: &OverlayResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "P_k", "r", "P_r_emp", "P_r_theory"])?;
    let rows = result.degree.len().max(result.relationship_counts.len());
    for i in 0..rows {
        let (k, pk) = result
            .degree
            .get(i)
            .map(|&(k, p)| (k.to_string(), csv_float(p)))
            .unwrap_or_default();
        let (r, emp, theo) = result
            .relationship_counts
            .get(i)
            .map(|&(r, e, t)| (r.to_string(), csv_float(e), csv_float(t)))
            .unwrap_or_default();
        w.write_record([k, pk, r, emp, theo])?;
    }
    w.flush()?;
    Ok(())
}

/// Head of the degree distribution, for inspecting probability drops at
/// small degrees.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HeadRow {
    pub degree: u64,
    pub p_real: f64,
    pub p_generated: f64,
}

/// KL of one regenerated variant against the reference histogram.
#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub variant: String,
    pub role: Role,
    pub seed: u64,
    pub steps: u64,
    #[serde(flatten)]
    pub kl: KlResult,
    pub head: Vec<HeadRow>,
}

/// Rebuild a generation config for `variant_name` from fitted statistics,
/// run it, and return KL(real || generated) for the role's global degree
/// histogram plus the head region (degrees up to 50).
pub fn compare_to_real(
    analysis: &Analysis,
    real: &DegreeHistogram,
    role: Role,
    variant_name: &str,
    steps: u64,
    seed: u64,
    engine: &dyn GenerationEngine,
) -> Result<DivergenceReport> {
    if steps == 0 {
        return Err(Error::domain("empty generation: zero steps requested"));
    }
    let cfg = variant(variant_name)?.build(analysis, role, steps)?;
    let mut sink = VecSink::default();
    engine.run(&cfg, seed, &mut sink)?;
    let tables = DegreeTables::from_edges(&sink.edges, role, 1)?;
    let generated = build_histograms(&tables).1;

    let kl = kl_divergence(real, &generated)?;
    let head = (1..=50)
        .map(|k| HeadRow {
            degree: k,
            p_real: real.probability(k),
            p_generated: generated.probability(k),
        })
        .collect();
    Ok(DivergenceReport { variant: variant_name.to_string(), role, seed, steps, kl, head })
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationSummaryRow {
    pub variant: String,
    pub role: Role,
    pub kl: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationReport {
    pub scale: f64,
    pub steps: u64,
    pub cells: Vec<DivergenceReport>,
    /// Per (variant, role) means over seeds, variant registry order.
    pub means: Vec<AblationSummaryRow>,
}

impl AblationReport {
    /// Variant with the lowest mean KL for the role, with runner-up gap.
    pub fn best_variant(&self, role: Role) -> Option<(&str, f64)> {
        let mut rows: Vec<&AblationSummaryRow> =
            self.means.iter().filter(|r| r.role == role).collect();
        rows.sort_by(|a, b| a.kl.total_cmp(&b.kl));
        match rows.as_slice() {
            [] => None,
            [only] => Some((&only.variant, f64::INFINITY)),
            [best, next, ..] => Some((&best.variant, next.kl - best.kl)),
        }
    }
}

/// Run every registered variant over the seeds and roles, comparing each
/// regeneration against the corresponding real histogram. `scale` sets
/// the horizon as a fraction of the reference fact count.
pub fn ablate(
    analysis: &Analysis,
    real: &[(Role, &DegreeHistogram)],
    scale: f64,
    seeds: &[u64],
    engine: &dyn GenerationEngine,
) -> Result<AblationReport> {
    let steps = (scale * analysis.summary.facts as f64).round() as u64;
    if steps == 0 {
        return Err(Error::domain(format!(
            "empty generation: scale {scale} of {} facts rounds to zero steps",
            analysis.summary.facts
        )));
    }
    let jobs: Vec<(&str, Role, &DegreeHistogram, u64)> = variant_names()
        .into_iter()
        .flat_map(|v| real.iter().map(move |&(role, hist)| (v, role, hist)))
        .flat_map(|(v, role, hist)| seeds.iter().map(move |&s| (v, role, hist, s)))
        .collect();
    let cells: Vec<DivergenceReport> = jobs
        .into_par_iter()
        .map(|(v, role, hist, seed)| compare_to_real(analysis, hist, role, v, steps, seed, engine))
        .collect::<Result<_>>()?;

    let mut means = Vec::new();
    for v in variant_names() {
        for &(role, _) in real {
            let group: Vec<&DivergenceReport> =
                cells.iter().filter(|c| c.variant == v && c.role == role).collect();
            let len = group.len() as f64;
            means.push(AblationSummaryRow {
                variant: v.to_string(),
                role,
                kl: group.iter().map(|c| c.kl.kl).sum::<f64>() / len,
                epsilon: group.iter().map(|c| c.kl.epsilon).sum::<f64>() / len,
            });
        }
    }
    Ok(AblationReport { scale, steps, cells, means })
}

/// Mean rows, one per (variant, role).
pub fn write_divergence_csv(report: &AblationReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variant", "role", "kl", "epsilon"])?;
    for row in &report.means {
        w.write_record([
            row.variant.clone(),
            row.role.label().to_string(),
            csv_float(row.kl),
            csv_float(row.epsilon),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-seed detail behind the mean table.
pub fn write_divergence_seeds_csv(report: &AblationReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variant", "role", "seed", "kl", "epsilon", "floored_bins"])?;
    for c in &report.cells {
        w.write_record([
            c.variant.clone(),
            c.role.label().to_string(),
            c.seed.to_string(),
            csv_float(c.kl.kl),
            csv_float(c.kl.epsilon),
            c.kl.floored_bins.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One cell of the refit round trip: generate with known parameters,
/// re-estimate from the stream, regenerate, compare.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RefitCell {
    pub alpha_true: f64,
    pub beta_true: f64,
    pub alpha_hat: f64,
    pub alpha_clamped: bool,
    pub beta_hat: f64,
    pub k_max_observed: u64,
    pub kl: f64,
    pub kl_epsilon: f64,
}

/// Round-trip fidelity over a parameter grid of single-relationship runs.
/// Ground truth at cell i uses `base_seed + 1000 + 2i`, the regeneration
/// the following seed, so the two streams are independent.
pub fn refit_grid(
    alphas: &[f64],
    betas: &[f64],
    steps: u64,
    base_seed: u64,
    engine: &dyn GenerationEngine,
) -> Result<Vec<RefitCell>> {
    let cells: Vec<(usize, f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .enumerate()
        .map(|(i, (a, b))| (i, a, b))
        .collect();
    cells
        .into_par_iter()
        .map(|(i, alpha, beta)| {
            let gt_seed = base_seed.wrapping_add(1000 + 2 * i as u64);
            let truth = run_single(beta, alpha, steps, gt_seed, engine)?;
            let profile = &truth.analysis.profiles[0];
            let fitted = profile.out.as_ref().expect("subject role was generated");

            let regen =
                run_single(fitted.beta, fitted.alpha, steps, gt_seed.wrapping_add(1), engine)?;
            let kl = kl_divergence(&truth.hist, &regen.hist)?;
            Ok(RefitCell {
                alpha_true: alpha,
                beta_true: beta,
                alpha_hat: fitted.alpha,
                alpha_clamped: fitted.alpha_clamped,
                beta_hat: fitted.beta,
                k_max_observed: fitted.k_max,
                kl: kl.kl,
                kl_epsilon: kl.epsilon,
            })
        })
        .collect()
}

struct SingleRun {
    analysis: Analysis,
    hist: DegreeHistogram,
}

fn run_single(
    beta: f64,
    alpha: f64,
    steps: u64,
    seed: u64,
    engine: &dyn GenerationEngine,
) -> Result<SingleRun> {
    let cfg = powerlaw_tail_config(beta, alpha, steps);
    let mut sink = VecSink::default();
    engine.run(&cfg, seed, &mut sink)?;
    let tables = DegreeTables::from_edges(&sink.edges, Role::Out, 1)?;
    let hist = build_histograms(&tables).1;
    let analysis = analyze(Some(&tables), None, None)?;
    Ok(SingleRun { analysis, hist })
}

#[derive(Clone, Debug, Serialize)]
pub struct LawCheck {
    pub law: String,
    pub observed: f64,
    pub expected: f64,
    /// Absolute half-width of the acceptance band.
    pub band: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TelemetryReport {
    pub seeds: usize,
    pub steps: u64,
    pub checks: Vec<LawCheck>,
    pub pass: bool,
}

fn check(law: String, observed: f64, expected: f64, band: f64) -> LawCheck {
    LawCheck { law, observed, expected, band, pass: (observed - expected).abs() <= band }
}

/// Check the growth laws against telemetry from independent seeds: the
/// entity total and its variance, per-relationship entity and fact rates,
/// and the relationship-count mixture against the closed form. Mean bands
/// are 3-sigma normal approximations; the variance band is a fraction of
/// the expected value.
pub fn telemetry_checks(
    cfg: &GenerationConfig,
    runs: &[SimulationTelemetry],
    variance_tolerance: f64,
) -> Result<TelemetryReport> {
    let [role] = cfg.mode.roles() else {
        return Err(Error::config("telemetry law checks apply to single-role configurations"));
    };
    if runs.is_empty() {
        return Err(Error::domain("telemetry law checks need at least one run"));
    }
    cfg.validate()?;
    let sigma = cfg.sigma.role(*role).expect("validated");
    let n = cfg.relationship_count();
    let t = cfg.steps as f64;
    let s = runs.len() as f64;

    let c_r: Vec<f64> = cfg
        .relationships
        .iter()
        .map(|r| r.rho * (1.0 - r.role(*role).expect("validated").beta))
        .collect();
    let a: f64 = sigma * c_r.iter().sum::<f64>();

    // every run: entities created after seeding, per-relationship growth,
    // fact shares, final mixture
    let created: Vec<f64> =
        runs.iter().map(|r| (r.last().m - r.rows[0].m) as f64).collect();
    let growth_mean = created.iter().sum::<f64>() / s / t;
    let growth_var = {
        let mean = created.iter().sum::<f64>() / s;
        created.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s - 1.0).max(1.0)
    };

    let mut checks = vec![
        check(
            "entity growth m(T)/T".into(),
            growth_mean,
            a,
            3.0 * (a * (1.0 - a) / t).sqrt() / s.sqrt(),
        ),
        check(
            "entity growth variance/T".into(),
            growth_var / t,
            a * (1.0 - a),
            variance_tolerance * a * (1.0 - a),
        ),
    ];

    // m_r grows on every non-preferential event for r (fresh entity,
    // reuse new to r, or exhausted fallback), hence at rate c_r with no
    // sigma factor
    for r in 0..n as usize {
        let obs = runs
            .iter()
            .map(|run| (run.last().m_r[r] - run.rows[0].m_r[r]) as f64 / t)
            .sum::<f64>()
            / s;
        let c = c_r[r];
        checks.push(check(
            format!("relationship {} entity growth m_r(T)/T", r + 1),
            obs,
            c,
            3.0 * (c * (1.0 - c) / t).sqrt() / s.sqrt(),
        ));
    }

    for r in 0..n as usize {
        let obs = runs.iter().map(|run| run.last().f_r[r] as f64 / t).sum::<f64>() / s;
        let rho = cfg.relationships[r].rho;
        checks.push(check(
            format!("relationship {} fact share F_r(T)/T", r + 1),
            obs,
            rho,
            3.0 * (rho * (1.0 - rho) / t).sqrt() / s.sqrt(),
        ));
    }

    let closed_form = relationship_count_distribution(n, sigma)?;
    let p = closed_form.probabilities();
    for i in 0..n as usize {
        let obs = runs
            .iter()
            .map(|run| run.last().m_i[i] as f64 / run.last().m as f64)
            .sum::<f64>()
            / s;
        checks.push(check(
            format!("relationship-count share M_{}/m", i + 1),
            obs,
            p[i],
            0.02,
        ));
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(TelemetryReport { seeds: runs.len(), steps: cfg.steps, checks, pass })
}

/// Generate `seeds` independent runs of `cfg` (edges discarded) and check
/// the growth laws on their telemetry.
pub fn telemetry_study(
    cfg: &GenerationConfig,
    seeds: &[u64],
    engine: &dyn GenerationEngine,
    variance_tolerance: f64,
) -> Result<TelemetryReport> {
    let runs: Vec<SimulationTelemetry> = seeds
        .par_iter()
        .map(|&seed| Ok(engine.run(cfg, seed, &mut NullSink)?.telemetry))
        .collect::<Result<_>>()?;
    telemetry_checks(cfg, &runs, variance_tolerance)
}

#[derive(Clone, Debug, Serialize)]
pub struct LongitudinalRow {
    pub label: String,
    pub role: Role,
    pub relationships: u32,
    pub entities: u64,
    pub facts: u64,
    pub sigma: f64,
    pub k_max: u64,
}

/// Tabulate labeled graph summaries, one row per summary and available
/// role; no analysis beyond ordering.
pub fn longitudinal_rows(items: &[(String, GraphSummary)]) -> Vec<LongitudinalRow> {
    let mut rows = Vec::new();
    for (label, summary) in items {
        for role in [Role::Out, Role::In] {
            if let Some(rs) = summary.role(role) {
                rows.push(LongitudinalRow {
                    label: label.clone(),
                    role,
                    relationships: summary.relationships,
                    entities: rs.entities,
                    facts: summary.facts,
                    sigma: rs.sigma,
                    k_max: rs.k_max,
                });
            }
        }
    }
    rows
}

pub fn write_longitudinal_csv(rows: &[LongitudinalRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "role", "relationships", "entities", "facts", "sigma", "k_max"])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.role.label().to_string(),
            r.relationships.to_string(),
            r.entities.to_string(),
            r.facts.to_string(),
            csv_float(r.sigma),
            r.k_max.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::engine;
    use crate::rng::DEFAULT_SEED;
    use std::collections::BTreeMap;

    fn hist(pairs: &[(u64, u64)]) -> DegreeHistogram {
        DegreeHistogram::from_map(BTreeMap::from_iter(pairs.iter().copied()))
    }

    #[test]
    fn kl_of_identical_histograms_is_zero() {
        let p = hist(&[(1, 3), (2, 5), (9, 2)]);
        let r = kl_divergence(&p, &p).unwrap();
        assert_eq!(r.kl, 0.0);
        assert_eq!(r.floored_bins, 0);
        assert_eq!(r.p_support, 3);
    }

    #[test]
    fn kl_matches_hand_computation() {
        // p = {1: 1/2, 2: 1/2}, q = {1: 1/4, 2: 3/4}
        let p = hist(&[(1, 1), (2, 1)]);
        let q = hist(&[(1, 1), (2, 3)]);
        let r = kl_divergence(&p, &q).unwrap();
        let expected = 0.5 * 2.0f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((r.kl - expected).abs() < 1e-15);
        assert!((r.kl - 0.14384103622589042).abs() < 1e-15);
        assert_eq!(r.floored_bins, 0);
    }

    #[test]
    fn kl_floors_missing_bins_and_renormalizes() {
        let p = hist(&[(1, 1), (2, 1)]);
        let q = hist(&[(1, 10)]);
        let r = kl_divergence(&p, &q).unwrap();
        assert_eq!(r.floored_bins, 1);
        assert_eq!(r.epsilon, 1.0 / 100.0);
        let z = 1.0 + r.epsilon;
        let expected = 0.5 * (0.5 * z / 1.0).ln() + 0.5 * (0.5 * z / r.epsilon).ln();
        assert!((r.kl - expected).abs() < 1e-15);
        assert!(r.kl > 0.0);

        assert!(kl_divergence(&p, &DegreeHistogram::default()).is_err());
    }

    #[test]
    fn total_variation_bounds() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        let tv = total_variation(&[0.7, 0.3], &[0.5, 0.5]);
        assert!((tv - 0.2).abs() < 1e-15);
        // implicit zero padding
        assert_eq!(total_variation(&[1.0], &[0.5, 0.5]), 0.5);
    }

    #[test]
    fn tail_exponent_recovers_a_synthetic_power_law() {
        // counts proportional to k^-2.176 over a wide range
        let gamma = 2.176;
        let counts: BTreeMap<u64, u64> = (1..=100_000u64)
            .map(|k| (k, (1e9 * (k as f64).powf(-gamma)).round() as u64))
            .filter(|&(_, c)| c > 0)
            .collect();
        let h = DegreeHistogram::from_map(counts);
        let fit = tail_exponent(&h, 10, 2.0).unwrap();
        assert!((fit.gamma - gamma).abs() < 0.02, "gamma {}", fit.gamma);
        assert!(fit.bins.len() >= 10);

        assert!(tail_exponent(&h, 10, 1.0).is_err());
        assert!(tail_exponent(&hist(&[(1, 5)]), 10, 2.0).is_err());
    }

    #[test]
    fn csv_float_round_trips() {
        for (x, s) in [
            (0.0, "0"),
            (0.5, "0.5"),
            (2.176, "2.176"),
            (1e-9, "1e-9"),
            (1.0845986984815618e-2, "0.010845986984815618"),
            (3e21, "3e21"),
        ] {
            assert_eq!(csv_float(x), s);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn overlay_run_matches_theory_loosely_at_high_sigma() {
        let eng = engine("direct").unwrap();
        let r = overlay_experiment(0.95, 30_000, DEFAULT_SEED, eng).unwrap();
        assert_eq!(r.argmax_theory, 1);
        assert_eq!(r.argmax_empirical, 1);
        assert!(r.tv < 0.05, "tv {}", r.tv);
        assert_eq!(r.relationship_counts.len(), 25);
        // theory column is the closed form verbatim
        let p = relationship_count_distribution(25, 0.95).unwrap();
        for (i, &(_, _, theo)) in r.relationship_counts.iter().enumerate() {
            assert_eq!(theo, p.probabilities()[i]);
        }

        let mut buf = Vec::new();
        write_overlay_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,P_k,r,P_r_emp,P_r_theory\n"));
        assert_eq!(text.lines().count() - 1, r.degree.len().max(25));
    }

    /// Two independent runs of one parameter set drift together as the
    /// horizon grows: the two-sample KL must shrink with T.
    #[test]
    fn kl_between_twin_runs_shrinks_with_horizon() {
        let eng = engine("direct").unwrap();
        let kl_at = |steps: u64| {
            let cfg = powerlaw_tail_config(0.6, 0.5, steps);
            let hist = |seed| {
                let mut sink = VecSink::default();
                eng.run(&cfg, seed, &mut sink).unwrap();
                let tables = DegreeTables::from_edges(&sink.edges, Role::Out, 1).unwrap();
                build_histograms(&tables).1
            };
            kl_divergence(&hist(DEFAULT_SEED), &hist(DEFAULT_SEED + 1)).unwrap().kl
        };
        let coarse = kl_at(2_000);
        let fine = kl_at(50_000);
        assert!(
            fine < coarse,
            "KL should shrink with horizon: {coarse} at 2e3 steps vs {fine} at 5e4"
        );
    }

    #[test]
    fn refit_round_trip_is_tight_in_the_strong_attachment_corner() {
        let eng = engine("direct").unwrap();
        let cells = refit_grid(&[0.95], &[0.85], 20_000, DEFAULT_SEED, eng).unwrap();
        assert_eq!(cells.len(), 1);
        let c = &cells[0];
        assert!((c.beta_hat - 0.85).abs() < 0.01, "beta_hat {}", c.beta_hat);
        // two independent heavy-tailed samples keep a noise floor at this
        // short horizon; the bound only screens for gross divergence
        assert!(c.kl > 0.0 && c.kl < 0.2, "kl {}", c.kl);
    }

    #[test]
    fn telemetry_checks_cover_every_law() {
        let eng = engine("direct").unwrap();
        let mut cfg = reference_multiplex_config(0.95, 20_000);
        cfg.telemetry_points = 1;
        // a 3-sigma band on a 30-sample variance needs roughly 80%
        // slack; the tight tolerance is exercised at higher seed counts
        let seeds: Vec<u64> = (0..30).map(|i| DEFAULT_SEED + i).collect();
        let report = telemetry_study(&cfg, &seeds, eng, 0.8).unwrap();
        assert_eq!(report.seeds, 30);
        // 2 growth checks + 25 m_r + 25 F_r + 25 M_i
        assert_eq!(report.checks.len(), 77);
        let growth = &report.checks[0];
        assert!((growth.expected - 0.1425).abs() < 1e-12);
        assert!(growth.pass, "observed {} vs {} +- {}", growth.observed, growth.expected, growth.band);
        let failed: Vec<&LawCheck> = report.checks.iter().filter(|c| !c.pass).collect();
        assert!(
            failed.len() <= 1,
            "laws out of band: {:?}",
            failed.iter().map(|c| &c.law).collect::<Vec<_>>()
        );

        let joint_err = telemetry_checks(
            &GenerationConfig { mode: Mode::Joint, ..cfg.clone() },
            &[],
            0.25,
        );
        assert!(joint_err.is_err());
    }

    #[test]
    fn longitudinal_rows_tabulate_in_order() {
        use crate::stats::RoleSummary;
        let summary = |entities, sigma| GraphSummary {
            facts: 100,
            relationships: 4,
            out: Some(RoleSummary {
                entities,
                k_max: 9,
                sigma,
                a: 0.1,
                distribution_defined: true,
            }),
            r#in: None,
        };
        let items =
            vec![("2016".to_string(), summary(60, 0.348)), ("2022".to_string(), summary(80, 0.284))];
        let rows = longitudinal_rows(&items);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].label, "2016");
        assert_eq!(rows[0].sigma, 0.348);
        assert_eq!(rows[1].entities, 80);

        let mut buf = Vec::new();
        write_longitudinal_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,role,relationships,entities,facts,sigma,k_max\n"));
        assert!(text.contains("2016,out,4,60,100,0.348,9"));
    }

    #[test]
    fn ablation_prefers_the_full_model_on_its_own_output() {
        // ground truth from the rich config, heterogeneous parameters
        let eng = engine("direct").unwrap();
        let rels: Vec<RelationshipSpec> = (0..6)
            .map(|i| RelationshipSpec {
                rho: 1.0 / 6.0,
                out: Some(RoleParams { beta: 0.3 + 0.1 * i as f64, alpha: 0.2 + 0.12 * i as f64 }),
                r#in: None,
            })
            .collect();
        let cfg = GenerationConfig {
            mode: Mode::SingleRoleOut,
            steps: 40_000,
            seed: None,
            sigma: SigmaSpec::single(Role::Out, 0.6),
            relationships: rels,
            case_c_scope: Default::default(),
            telemetry_points: 0,
        };
        let mut sink = VecSink::default();
        eng.run(&cfg, DEFAULT_SEED, &mut sink).unwrap();
        let tables = DegreeTables::from_edges(&sink.edges, Role::Out, 1).unwrap();
        let real = build_histograms(&tables).1;
        let analysis = analyze(Some(&tables), None, None).unwrap();

        let report = ablate(
            &analysis,
            &[(Role::Out, &real)],
            1.0,
            &[7, 8, 9],
            eng,
        )
        .unwrap();
        assert_eq!(report.cells.len(), 4 * 3);
        assert_eq!(report.means.len(), 4);
        let (best, gap) = report.best_variant(Role::Out).unwrap();
        assert_eq!(best, "multiplex_param");
        assert!(gap > 0.0, "gap {gap}");

        let mut buf = Vec::new();
        write_divergence_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("variant,role,kl,epsilon\n"));
        assert_eq!(text.lines().count(), 5);

        assert!(ablate(&analysis, &[(Role::Out, &real)], 0.0, &[1], eng).is_err());
    }
}
