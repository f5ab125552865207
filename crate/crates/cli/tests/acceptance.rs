//! End-to-end acceptance checks, one test per criterion, each printing a
//! single verdict line. They pin the model's laws against full-scale
//! simulation, the estimators against round trips, and the binary against
//! golden inputs, at fixed seeds chosen once in advance.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use kgsynth_core::edges::Role;
use kgsynth_core::evaluate::{
    ablate, overlay_experiment, powerlaw_tail_config, reference_multiplex_config, refit_grid,
    tail_exponent, telemetry_study,
};
use kgsynth_core::generate::{
    GenerationConfig, Mode, RelationshipSpec, RoleParams, SigmaSpec, VecSink, engine,
};
use kgsynth_core::ingest::DegreeTables;
use kgsynth_core::rng::{DEFAULT_SEED, seeded_rng};
use kgsynth_core::stats::{analyze, build_histograms};
use kgsynth_core::theory::{misdescribed_limit, misdescribed_proportion};
use kgsynth_core::{Edge, ingest::IngestSummary};
use rand::RngExt;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kgsynth"))
}

fn testdata(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata").join(name)
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("spawn kgsynth");
    assert!(
        out.status.success(),
        "kgsynth {:?} failed:\n{}",
        cmd.get_args().collect::<Vec<_>>(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Relationship-count distribution of the 25-relationship reference model
/// at two superficialities, 2e6 steps each: empirical within 0.02 total
/// variation of the closed form, matching modal r (interior at low sigma,
/// r = 1 at high sigma), under five minutes a run.
#[test]
fn criterion_1_relationship_count_distribution() {
    let eng = engine("direct").unwrap();
    for (sigma, modal_at_one) in [(0.05, false), (0.95, true)] {
        let start = Instant::now();
        let r = overlay_experiment(sigma, 2_000_000, DEFAULT_SEED, eng).unwrap();
        let secs = start.elapsed().as_secs_f64();
        assert!(
            r.tv <= 0.02,
            "criterion 1: FAIL sigma {sigma}: total variation {:.5} exceeds 0.02",
            r.tv
        );
        assert_eq!(
            r.argmax_empirical, r.argmax_theory,
            "criterion 1: FAIL sigma {sigma}: modal r disagrees with the closed form"
        );
        if modal_at_one {
            assert_eq!(r.argmax_empirical, 1, "criterion 1: FAIL sigma {sigma}: expected modal r = 1");
        } else {
            assert!(r.argmax_empirical > 1, "criterion 1: FAIL sigma {sigma}: expected interior modal r");
        }
        assert!(secs < 300.0, "criterion 1: FAIL sigma {sigma}: run took {secs:.0}s");
        println!(
            "criterion 1: PASS sigma {sigma}: TV {:.5} <= 0.02, modal r {} matches closed form, {secs:.1}s",
            r.tv, r.argmax_empirical
        );
    }
}

/// Degree tail of a single linear-attachment relationship at beta = 0.85
/// over 1e6 steps: log-binned least squares on k >= 10 recovers the
/// closed-form exponent 1 + 1/beta = 2.176 within 0.2.
#[test]
fn criterion_2_powerlaw_tail_exponent() {
    let eng = engine("direct").unwrap();
    let cfg = powerlaw_tail_config(0.85, 1.0, 1_000_000);
    let mut sink = VecSink::default();
    eng.run(&cfg, DEFAULT_SEED, &mut sink).unwrap();
    let tables = DegreeTables::from_edges(&sink.edges, Role::Out, 1).unwrap();
    let hist = build_histograms(&tables).1;
    let fit = tail_exponent(&hist, 10, 2.0).unwrap();
    assert!(
        (fit.gamma - 2.176).abs() <= 0.2,
        "criterion 2: FAIL tail exponent {:.4} outside 2.176 +/- 0.2",
        fit.gamma
    );
    println!(
        "criterion 2: PASS tail exponent {:.4} within 2.176 +/- 0.2 ({} bins from k = 10)",
        fit.gamma,
        fit.bins.len()
    );
}

/// Round trip over the 7x7 (alpha, beta) grid at 1e5 steps a cell:
/// regenerate from fitted parameters and compare degree histograms by KL,
/// demanding mean <= 0.01 and max <= 0.05, with every unclamped alpha fit
/// within 0.1 of truth.
///
/// This check fails as stated and is kept red on purpose. The two-sample
/// KL between a 1e5-step run and ANY independent regeneration has a noise
/// floor above the bounds: with the true parameters and fresh seeds the
/// measured KL already reaches 0.041 to 0.071 on the beta = 0.95 row,
/// where a few thousand entities leave hundreds of singleton tail bins
/// that the second sample misses. Tightening would need longer runs or a
/// smoothed instrument, which would be a different check.
#[test]
fn criterion_3_refit_round_trip() {
    let eng = engine("direct").unwrap();
    let grid: Vec<f64> = (0..7).map(|i| 0.05 + 0.15 * i as f64).collect();
    let cells = refit_grid(&grid, &grid, 100_000, DEFAULT_SEED, eng).unwrap();

    let mean = cells.iter().map(|c| c.kl).sum::<f64>() / cells.len() as f64;
    let max = cells.iter().map(|c| c.kl).fold(0.0, f64::max);
    let alpha_misses = cells
        .iter()
        .filter(|c| !c.alpha_clamped && (c.alpha_hat - c.alpha_true).abs() > 0.1)
        .count();

    let verdict = mean <= 0.01 && max <= 0.05 && alpha_misses == 0;
    assert!(
        verdict,
        "criterion 3: FAIL over {} cells: mean KL {mean:.5} (bound 0.01), max KL {max:.5} \
         (bound 0.05), {alpha_misses} unclamped alpha fits off by more than 0.1; the \
         two-sample KL noise floor at 1e5 steps (0.041 to 0.071 on the beta = 0.95 row even \
         with the true parameters) sits above these bounds",
        cells.len()
    );
    println!("criterion 3: PASS mean KL {mean:.5} <= 0.01, max {max:.5} <= 0.05, alpha within 0.1");
}

/// The superficiality estimator is an identity, not an approximation: on
/// 50 random multigraphs sigma-hat equals |E| / sum_r |E_r| to the last
/// bit, for both roles.
#[test]
fn criterion_4_sigma_estimator_identity() {
    for g in 0..50u64 {
        let mut rng = seeded_rng(DEFAULT_SEED + 500 + g);
        let n_rel = rng.random_range(1..=8u32);
        let n_ent = rng.random_range(2..=60u32);
        let n_edges = rng.random_range(1..=400usize);
        let edges: Vec<Edge> = (0..n_edges)
            .map(|_| Edge {
                subject: rng.random_range(0..n_ent),
                relationship: rng.random_range(0..n_rel),
                object: rng.random_range(0..n_ent),
            })
            .collect();
        let out_tables = DegreeTables::from_edges(&edges, Role::Out, 1).unwrap();
        let in_tables = DegreeTables::from_edges(&edges, Role::In, 1).unwrap();
        let analysis = analyze(Some(&out_tables), Some(&in_tables), None).unwrap();

        for (tables, role) in [(&out_tables, Role::Out), (&in_tables, Role::In)] {
            let m = tables.global.len() as f64;
            let m_r_sum: usize = tables.per_relationship.values().map(|d| d.len()).sum();
            let expected = m / m_r_sum as f64;
            let got = analysis.summary.role(role).unwrap().sigma;
            assert_eq!(
                got.to_bits(),
                expected.to_bits(),
                "criterion 4: FAIL graph {g} role {}: {got:e} != |E|/sum|E_r| = {expected:e}",
                role.label()
            );
        }
    }
    println!("criterion 4: PASS sigma-hat = |E| / sum_r |E_r| to the bit on 50 random multigraphs, both roles");
}

/// Entity growth telemetry of the reference model (sigma 0.95) over 100
/// seeds at 1e5 steps: mean m(T)/T within three standard errors of the
/// new-entity rate a, and the per-step variance within 25 percent of
/// a(1 - a); every per-relationship and relationship-count law holds too.
#[test]
fn criterion_5_growth_telemetry() {
    let eng = engine("direct").unwrap();
    let cfg = reference_multiplex_config(0.95, 100_000);
    let seeds: Vec<u64> = (0..100).map(|i| DEFAULT_SEED + 1_000_000 + i).collect();
    let report = telemetry_study(&cfg, &seeds, eng, 0.25).unwrap();

    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("criterion 5: {}: observed {:.6} expected {:.6} band {:.6}", c.law, c.observed, c.expected, c.band);
    }
    assert!(report.pass, "criterion 5: FAIL {} of {} law checks broke", report.checks.iter().filter(|c| !c.pass).count(), report.checks.len());
    let growth = report.checks.iter().find(|c| c.law == "entity growth m(T)/T").unwrap();
    let variance = report.checks.iter().find(|c| c.law == "entity growth variance/T").unwrap();
    println!(
        "criterion 5: PASS m(T)/T {:.6} within {:.6} of a = {:.6}; variance/T {:.6} within 25% of {:.6}; all {} checks hold",
        growth.observed,
        growth.band,
        growth.expected,
        variance.observed,
        variance.expected,
        report.checks.len()
    );
}

/// Misdescribed-entity proportion at n = 200 sits within 0.01 of its
/// n -> infinity limit 1 - (1-sigma)^3 across superficialities, and the
/// limit itself hits the closed-form values exactly.
#[test]
fn criterion_6_misdescribed_limit() {
    for sigma in [0.3, 0.5, 0.7, 0.95] {
        let at_200 = misdescribed_proportion(200, sigma, 3).unwrap();
        let limit = misdescribed_limit(sigma, 3);
        assert!(
            (at_200 - limit).abs() < 0.01,
            "criterion 6: FAIL sigma {sigma}: |{at_200:.6} - {limit:.6}| >= 0.01"
        );
    }
    assert_eq!(misdescribed_limit(0.5, 3), 0.875, "criterion 6: FAIL limit at sigma 0.5");
    assert_eq!(misdescribed_limit(0.95, 3), 0.999875, "criterion 6: FAIL limit at sigma 0.95");
    println!("criterion 6: PASS n = 200 within 0.01 of the limit at four superficialities; limits exact");
}

/// Ablation self-identification: fit a heterogeneous 25-relationship
/// ground truth, regenerate at full scale under all four variants, and
/// the full multiplex parametric variant wins strictly on mean KL over
/// five seeds, in under ten minutes.
#[test]
fn criterion_7_variant_ablation() {
    let start = Instant::now();
    let eng = engine("direct").unwrap();
    let relationships: Vec<RelationshipSpec> = (0..25)
        .map(|i| RelationshipSpec {
            rho: 1.0 / 25.0,
            out: Some(RoleParams { beta: 0.30 + 0.025 * i as f64, alpha: 0.20 + 0.033 * i as f64 }),
            r#in: None,
        })
        .collect();
    let cfg = GenerationConfig {
        mode: Mode::SingleRoleOut,
        steps: 200_000,
        seed: None,
        sigma: SigmaSpec::single(Role::Out, 0.6),
        relationships,
        case_c_scope: Default::default(),
        telemetry_points: 0,
    };
    let mut sink = VecSink::default();
    eng.run(&cfg, DEFAULT_SEED, &mut sink).unwrap();
    let tables = DegreeTables::from_edges(&sink.edges, Role::Out, 1).unwrap();
    let analysis = analyze(Some(&tables), None, None).unwrap();
    let hist = build_histograms(&tables).1;

    let seeds: Vec<u64> = (0..5).map(|i| DEFAULT_SEED + 10_000 + i).collect();
    let report = ablate(&analysis, &[(Role::Out, &hist)], 1.0, &seeds, eng).unwrap();

    let mut means: Vec<(&str, f64)> = report
        .means
        .iter()
        .filter(|m| m.role == Role::Out)
        .map(|m| (m.variant.as_str(), m.kl))
        .collect();
    means.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, gap) = report.best_variant(Role::Out).unwrap();
    assert_eq!(best, "multiplex_param", "criterion 7: FAIL best variant was {best}, means {means:?}");
    assert!(gap > 0.0, "criterion 7: FAIL multiplex_param tied instead of winning strictly");
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 600.0, "criterion 7: FAIL took {secs:.0}s");
    println!(
        "criterion 7: PASS multiplex_param wins strictly (margin {gap:.5}); ranking {means:?}; {secs:.1}s"
    );
}

/// The golden 200-line dump ingests to exact counts, with and without
/// dedup, and the fitted outputs are byte-identical whether the degree
/// scan partitions relationships into 1 or 4 groups.
#[test]
fn criterion_8_golden_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let golden = testdata("golden_200.nt");
    let plain = dir.path().join("plain");
    let dedup = dir.path().join("dedup");

    run_ok(bin().args(["ingest", "--input"]).arg(&golden).args(["--prefix", "http://kg.test/", "--out"]).arg(&plain));
    let summary: IngestSummary =
        serde_json::from_slice(&read_bytes(&plain.join("ingest_summary.json"))).unwrap();
    let expected = IngestSummary {
        facts: 142,
        entities: 43,
        literals_removed: 24,
        external_removed: 18,
        malformed: 10,
        duplicates_removed: 0,
        predicates_removed: 0,
    };
    assert_eq!(summary, expected, "criterion 8: FAIL ingest counts diverged");

    run_ok(bin().args(["ingest", "--dedup", "--input"]).arg(&golden).args(["--prefix", "http://kg.test/", "--out"]).arg(&dedup));
    let summary: IngestSummary =
        serde_json::from_slice(&read_bytes(&dedup.join("ingest_summary.json"))).unwrap();
    assert_eq!(
        (summary.facts, summary.duplicates_removed),
        (136, 6),
        "criterion 8: FAIL dedup counts diverged"
    );

    let g1 = dir.path().join("fit_g1");
    let g4 = dir.path().join("fit_g4");
    run_ok(bin().args(["fit", "--groups", "1", "--edges"]).arg(&plain).arg("--out").arg(&g1));
    run_ok(bin().args(["fit", "--groups", "4", "--edges"]).arg(&plain).arg("--out").arg(&g4));
    let mut compared = 0;
    for entry in std::fs::read_dir(&g1).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "run_manifest.json" {
            continue; // wall-clock and memory legitimately differ
        }
        assert_eq!(
            read_bytes(&g1.join(&name)),
            read_bytes(&g4.join(&name)),
            "criterion 8: FAIL {name:?} differs between --groups 1 and --groups 4"
        );
        compared += 1;
    }
    // 2 JSON summaries + 2 global histograms + 4 per-relationship histograms per role
    assert_eq!(compared, 12, "criterion 8: FAIL expected 12 fit outputs");
    println!(
        "criterion 8: PASS exact counts (142 facts, 43 entities, 24+18+10 removed, 6 dups under dedup); {compared} fit files identical across --groups"
    );
}

/// The closed-form subcommand enforces the validity constraint: n = 10 at
/// sigma = 0.05 is rejected with the bound quoted, n = 25 is accepted and
/// prints a normalized 25-row distribution.
#[test]
fn criterion_9_domain_gate() {
    let reject = bin().args(["theory", "pr", "--n", "10", "--sigma", "0.05"]).output().unwrap();
    assert_eq!(reject.status.code(), Some(1), "criterion 9: FAIL expected exit 1");
    let stderr = String::from_utf8_lossy(&reject.stderr);
    assert!(
        stderr.contains("needs n > 19"),
        "criterion 9: FAIL rejection does not quote the bound: {stderr}"
    );

    let accept = bin().args(["theory", "pr", "--n", "25", "--sigma", "0.05"]).output().unwrap();
    assert!(accept.status.success(), "criterion 9: FAIL expected exit 0 for n = 25");
    let stdout = String::from_utf8_lossy(&accept.stdout);
    let probs: Vec<f64> =
        stdout.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(probs.len(), 25, "criterion 9: FAIL expected 25 rows");
    let total: f64 = probs.iter().sum();
    assert!((total - 1.0).abs() < 1e-12, "criterion 9: FAIL distribution sums to {total}");
    println!("criterion 9: PASS n = 10 rejected quoting \"needs n > 19\"; n = 25 accepted, 25 rows summing to 1");
}

/// Fixed seeds make every artifact bit-identical across runs: generation
/// outputs, ingest outputs under --threads variation, and the ablation
/// CSVs despite parallel execution.
#[test]
fn criterion_10_bit_identical_replays() {
    let dir = tempfile::tempdir().unwrap();

    let model = dir.path().join("model.json");
    std::fs::write(
        &model,
        r#"{
  "mode": "joint",
  "steps": 60000,
  "sigma": {"out": 0.6, "in": 0.35},
  "relationships": [
    {"rho": 0.45, "out": {"beta": 0.85, "alpha": 1.0}, "in": {"beta": 0.6, "alpha": 0.8}},
    {"rho": 0.35, "out": {"beta": 0.5, "alpha": 0.4}, "in": {"beta": 0.3, "alpha": 0.0}},
    {"rho": 0.2, "out": {"beta": 0.95, "alpha": 0.6}, "in": {"beta": 0.7, "alpha": 1.0}}
  ]
}"#,
    )
    .unwrap();
    let gen_a = dir.path().join("gen_a");
    let gen_b = dir.path().join("gen_b");
    for out in [&gen_a, &gen_b] {
        run_ok(bin().args(["generate", "--seed", "12345", "--config"]).arg(&model).arg("--out").arg(out));
    }
    for name in ["edges.bin", "telemetry.csv", "relationships.txt"] {
        assert_eq!(
            read_bytes(&gen_a.join(name)),
            read_bytes(&gen_b.join(name)),
            "criterion 10: FAIL generated {name} differs between identical runs"
        );
    }

    let golden = testdata("golden_200.nt");
    let ing_a = dir.path().join("ing_a");
    let ing_b = dir.path().join("ing_b");
    run_ok(bin().args(["ingest", "--threads", "1", "--input"]).arg(&golden).args(["--prefix", "http://kg.test/", "--out"]).arg(&ing_a));
    run_ok(bin().args(["ingest", "--threads", "4", "--input"]).arg(&golden).args(["--prefix", "http://kg.test/", "--out"]).arg(&ing_b));
    for name in ["edges.bin", "entities.txt", "relationships.txt", "ingest_summary.json"] {
        assert_eq!(
            read_bytes(&ing_a.join(name)),
            read_bytes(&ing_b.join(name)),
            "criterion 10: FAIL ingest {name} differs between --threads 1 and 4"
        );
    }

    let fit = dir.path().join("fit");
    run_ok(bin().args(["fit", "--edges"]).arg(&ing_a).arg("--out").arg(&fit));
    let abl_a = dir.path().join("abl_a");
    let abl_b = dir.path().join("abl_b");
    run_ok(bin().args(["evaluate", "ablate", "--scale", "20", "--seeds", "3", "--threads", "2", "--stats"]).arg(&fit).arg("--out").arg(&abl_a));
    run_ok(bin().args(["evaluate", "ablate", "--scale", "20", "--seeds", "3", "--threads", "4", "--stats"]).arg(&fit).arg("--out").arg(&abl_b));
    for name in ["divergence.csv", "divergence_seeds.csv"] {
        assert_eq!(
            read_bytes(&abl_a.join(name)),
            read_bytes(&abl_b.join(name)),
            "criterion 10: FAIL ablation {name} differs across runs"
        );
    }
    println!(
        "criterion 10: PASS generation, ingest (across --threads) and ablation CSVs bit-identical"
    );
}
