//! End-to-end behavior of the pipeline with oracle encoders whose planted
//! structure is known.

mod common;

use std::collections::HashMap;

use common::correlation;
use simprobe_core::corpus::{pair_count, SentenceRecord};
use simprobe_core::harness::client::OracleEncoder;
use simprobe_core::harness::replication::replication_report;
use simprobe_core::harness::run::{analyze, build_designs, load_fit_table, FIT_FILE};
use simprobe_core::harness::{run_experiment, Encoder, ExperimentConfig, RunOptions, BUILTIN_NAMES};
use simprobe_core::oracle::OracleSpec;
use simprobe_core::paircode::{pair_indices, INTERCEPT};
use simprobe_core::regress::report::FitTable;
use simprobe_core::similarity::cosine;

fn embed(spec: &OracleSpec, corpus: &[SentenceRecord]) -> HashMap<String, Vec<f64>> {
    let enc = OracleEncoder::new(spec.clone(), corpus).unwrap();
    let texts: Vec<String> = corpus.iter().map(|r| r.text.clone()).collect();
    texts.iter().cloned().zip(enc.embed(&texts).unwrap()).collect()
}

fn fit(experiment: &str, spec: &OracleSpec) -> FitTable {
    let config = ExperimentConfig::builtin(experiment).unwrap();
    let corpus = config.corpus.generate(config.seed).unwrap();
    let designs = build_designs(&config, &corpus).unwrap();
    analyze(&config, &corpus, &designs, &embed(spec, &corpus), &spec.encoder_id())
        .unwrap()
        .1
}

fn estimate(table: &FitTable, model: &str, term: &str) -> f64 {
    table.model(model).unwrap().fit.estimate(term).unwrap()
}

#[test]
fn equal_weights_give_positive_coefficients() {
    let table = fit("intransitive-v1", &OracleSpec::preset("equal-weights").unwrap());
    let main = &table.model("main").unwrap().fit;
    assert_eq!(main.n, 32_640);
    assert_eq!(main.coefficients.len(), 6);
    for c in main.coefficients.iter().filter(|c| c.term != INTERCEPT) {
        assert!(c.estimate > 0.0, "{c:?}");
        assert!(c.is_significant());
    }
}

#[test]
fn noiseless_equal_weights_explain_almost_everything() {
    let table = fit("intransitive-v1", &OracleSpec::new(4096));
    let r2 = table.models[0].fit.r_squared;
    assert!(r2 > 0.95, "R² = {r2}");
}

#[test]
fn cosine_tracks_shared_feature_fraction() {
    let spec = OracleSpec::new(4096);
    let corpus = ExperimentConfig::builtin("intransitive-v1")
        .unwrap()
        .corpus
        .generate(0)
        .unwrap();
    let emb = embed(&spec, &corpus);
    let m = corpus[0].features.len();
    let mut sums = vec![(0.0, 0usize); m];
    for (i, j) in pair_indices(corpus.len()) {
        let (a, b) = (&corpus[i], &corpus[j]);
        let k = a.features.iter().filter(|(s, f)| b.features.get(*s) == Some(f)).count();
        let c = cosine(&emb[&a.text], &emb[&b.text]).unwrap();
        sums[k].0 += c;
        sums[k].1 += 1;
    }
    for (k, (sum, count)) in sums.iter().enumerate() {
        let mean = sum / *count as f64;
        let expected = k as f64 / m as f64;
        assert!((mean - expected).abs() < 0.02, "k = {k}: mean cosine {mean}, expected {expected}");
    }
}

#[test]
fn raising_a_weight_raises_its_coefficient() {
    let coefs: Vec<f64> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&w| {
            let spec = OracleSpec::new(1024).with_weight("subj", w);
            estimate(&fit("intransitive-v1", &spec), "main", "SameSubj")
        })
        .collect();
    assert!(coefs[0] < coefs[1] && coefs[1] < coefs[2], "{coefs:?}");
}

#[test]
fn transitive_codes_reflect_role_sensitivity() {
    // Roles in separate spaces: a swap shares nothing, both identities add up.
    let positional = fit("transitive-v1", &OracleSpec::new(2048));
    let e = |t: &str| estimate(&positional, "main", t);
    assert!(e("SubjObj_BA").abs() < 0.1 * e("SubjObj_AB"));
    let sum = e("SubjObj_A0") + e("SubjObj_0B");
    assert!((e("SubjObj_AB") - sum).abs() < 0.05 * sum);

    // One shared space for both roles: a swap looks like a full match.
    let spec = OracleSpec::new(2048).with_space("subj", "noun").with_space("obj", "noun");
    let shared = fit("transitive-v1", &spec);
    let e = |t: &str| estimate(&shared, "main", t);
    assert!((e("SubjObj_BA") - e("SubjObj_AB")).abs() < 0.05 * e("SubjObj_AB"));
    assert!((e("SubjObj_0A") - e("SubjObj_A0")).abs() < 0.05 * e("SubjObj_A0"));
}

#[test]
fn ditransitive_design_has_orthogonal_spcres() {
    let config = ExperimentConfig::builtin("ditransitive-v1").unwrap();
    let corpus = config.corpus.generate(0).unwrap();
    let designs = build_designs(&config, &corpus).unwrap();
    let main = &designs[0];
    assert_eq!(main.column_names, [INTERCEPT, "SameAdv", "SamePred", "Overlap", "SPCRes"]);
    assert_eq!(main.nrows(), 145_530);
    let spc = main.column("SPCRes").unwrap();
    let overlap = main.column("Overlap").unwrap();
    assert!(correlation(spc, overlap).abs() < 1e-10);
    assert!(spc.iter().sum::<f64>().abs() < 1e-8);
    // Overlap is shifted so one shared noun codes as 0.
    assert_eq!(overlap.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
}

#[test]
fn position_blind_oracle_gains_nothing_from_spcres() {
    let blind = fit("ditransitive-v1", &OracleSpec::preset("participant-set").unwrap());
    let reduced = blind.model("without-SPCRes").unwrap();
    assert!(reduced.delta_r_squared.unwrap() < 0.01);
    assert!(estimate(&blind, "main", "SPCRes").abs() < 0.1);

    let positional = fit("ditransitive-v1", &OracleSpec::new(1024));
    let reduced = positional.model("without-SPCRes").unwrap();
    assert!(reduced.delta_r_squared.unwrap() > 0.1);
}

#[test]
fn replication_preserves_coefficient_order() {
    let spec = OracleSpec::new(2048)
        .with_weight("det", 0.25)
        .with_weight("adv", 0.5)
        .with_weight("punct", 0.75)
        .with_weight("verb", 1.0)
        .with_weight("subj", 2.0);
    let v1 = fit("intransitive-v1", &spec);
    let r2 = fit("intransitive-r2", &spec);
    let report = replication_report("main", &v1.models[0].fit, &r2.models[0].fit).unwrap();
    assert_eq!(report.rank_correlation, Some(1.0));
    for row in &report.rows {
        assert!(row.delta.abs() < 0.1, "{row:?}");
    }
}

#[test]
fn every_design_has_one_row_per_pair() {
    for name in BUILTIN_NAMES {
        let config = ExperimentConfig::builtin(name).unwrap();
        let corpus = config.corpus.generate(config.seed).unwrap();
        for design in build_designs(&config, &corpus).unwrap() {
            assert_eq!(design.nrows(), pair_count(corpus.len()), "{name}");
            assert!(design.columns[0].iter().all(|&v| v == 1.0));
        }
    }
}

#[test]
fn written_fit_tables_parse_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::builtin("coordvp-v1").unwrap();
    let mut opts = RunOptions::new(dir.path());
    opts.write_design = false;
    let summary = run_experiment(&config, &["oracle:equal-weights".to_string()], &opts).unwrap();
    let run = &summary.encoders[0];
    let parsed = load_fit_table(&run.dir.join(FIT_FILE)).unwrap();
    assert_eq!(parsed.models.len(), 3);
    for (a, b) in run.table.models.iter().zip(&parsed.models) {
        assert_eq!(a.model, b.model);
        assert_eq!(a.delta_r_squared, b.delta_r_squared);
        assert_eq!(a.fit.r_squared.to_bits(), b.fit.r_squared.to_bits());
        for (x, y) in a.fit.coefficients.iter().zip(&b.fit.coefficients) {
            assert_eq!(x.term, y.term);
            assert_eq!(x.estimate.to_bits(), y.estimate.to_bits());
            assert_eq!(x.std_error.to_bits(), y.std_error.to_bits());
            assert_eq!(x.t.to_bits(), y.t.to_bits());
        }
    }
    assert_eq!(parsed.to_tsv(), std::fs::read_to_string(run.dir.join(FIT_FILE)).unwrap());
}

#[test]
fn transitive_report_flags_sentence_count() {
    let table = fit("transitive-v1", &OracleSpec::new(64));
    let note = table.meta("note").unwrap();
    assert!(note.contains("1584") && note.contains("672"), "{note}");
}
