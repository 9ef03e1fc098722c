//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use medbench_core::backends::{build_prompt, MockScript};
use medbench_core::filtering::{extract_contexts, formulate_questions, select_high_confidence};
use medbench_core::metrics::{compute_calibration, compute_confusion, compute_metrics};
use medbench_core::orchestrator::{
    build_filter_for_run, read_results, render_report, run_benchmark, Change, ReportFormat, Verdict,
};
use medbench_core::resources::{co2_grams, energy_wh};
use medbench_core::{
    Backend, BackendConfig, ClassificationOutcome, FilterArtifact, FilterCriteria, LabelSet,
    Modality, PowerProfile, Prediction, RunConfig, Split,
};

use common::{entry, spec, XRAY};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn outcome(
    id: String,
    pred: Option<&str>,
    confidence: Option<f64>,
    time: f64,
) -> ClassificationOutcome {
    ClassificationOutcome {
        sample_id: id,
        predicted_label: pred.map_or(Prediction::Unparsed, |p| Prediction::Label(p.into())),
        confidence: pred.and(confidence),
        full_response: String::new(),
        exec_time_s: time,
        attempt_count: 1,
        error: None,
    }
}

fn profile(power: f64, ci: f64) -> PowerProfile {
    PowerProfile {
        profile_id: "acceptance".into(),
        avg_power_w: power,
        carbon_intensity_g_per_kwh: ci,
        source_note: "fixed constants".into(),
    }
}

// ---------------------------------------------------------------------------
// metrics

struct Brute {
    accuracy: f64,
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
    macro_f1: f64,
}

/// Straight counting over (truth, prediction) pairs.
fn brute_force(labels: &[String], pairs: &[(String, Option<String>)]) -> Brute {
    let correct = pairs
        .iter()
        .filter(|(t, p)| p.as_deref() == Some(t.as_str()))
        .count();
    let (mut precision, mut recall, mut f1) = (Vec::new(), Vec::new(), Vec::new());
    for l in labels {
        let (mut tp, mut fp, mut fn_) = (0u32, 0u32, 0u32);
        for (t, p) in pairs {
            let is_t = t == l;
            let is_p = p.as_deref() == Some(l.as_str());
            match (is_t, is_p) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
        let p = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let r = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f = if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        };
        precision.push(p);
        recall.push(r);
        f1.push(f);
    }
    Brute {
        accuracy: correct as f64 / pairs.len() as f64,
        macro_f1: f1.iter().sum::<f64>() / labels.len() as f64,
        precision,
        recall,
        f1,
    }
}

fn metrics_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut outcomes_checked = 0usize;
    for instance in 0..500 {
        let k = rng.gen_range(2..=6);
        let labels: Vec<String> = (0..k).map(|i| format!("class {i}")).collect();
        let label_set = LabelSet::new(labels.clone()).unwrap();
        let n = rng.gen_range(1..=1000);
        let mut pairs = Vec::with_capacity(n);
        let mut outcomes = Vec::with_capacity(n);
        let mut truths = HashMap::new();
        for i in 0..n {
            let t = labels[rng.gen_range(0..k)].clone();
            // Skew toward correct answers so every regime shows up.
            let p = match rng.gen_range(0..10) {
                0 => None,
                1..=4 => Some(t.clone()),
                _ => Some(labels[rng.gen_range(0..k)].clone()),
            };
            let id = format!("s{i}");
            truths.insert(id.clone(), t.clone());
            outcomes.push(outcome(id, p.as_deref(), Some(rng.gen()), 1.0));
            pairs.push((t, p));
        }
        let cm = compute_confusion(&outcomes, &truths, &label_set).map_err(|e| e.to_string())?;
        let m = compute_metrics(&cm, &outcomes).map_err(|e| e.to_string())?;
        let b = brute_force(&labels, &pairs);
        ensure!(
            close(m.accuracy, b.accuracy, 1e-12),
            "instance {instance}: accuracy {} vs {}",
            m.accuracy,
            b.accuracy
        );
        ensure!(
            close(m.macro_f1, b.macro_f1, 1e-12),
            "instance {instance}: macro F1 {} vs {}",
            m.macro_f1,
            b.macro_f1
        );
        for (c, cls) in m.per_class.iter().enumerate() {
            ensure!(
                close(cls.precision, b.precision[c], 1e-12)
                    && close(cls.recall, b.recall[c], 1e-12)
                    && close(cls.f1, b.f1[c], 1e-12),
                "instance {instance}: class {} differs",
                cls.label
            );
        }
        outcomes_checked += n;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "500 instances, {outcomes_checked} outcomes, tol 1e-12, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn calibration_gap() -> Outcome {
    let mut outcomes = Vec::new();
    let mut truths = HashMap::new();
    for i in 0..100 {
        let id = format!("ct{i:03}");
        let pred = if i < 22 { "normal" } else { "adenocarcinoma" };
        truths.insert(id.clone(), "normal".to_string());
        outcomes.push(outcome(id, Some(pred), Some(0.91), 1.0));
    }
    let curve = compute_calibration(&outcomes, &truths, 10).map_err(|e| e.to_string())?;
    ensure!(
        close(curve.calibration_gap, 0.69, 1e-9),
        "gap {}",
        curve.calibration_gap
    );
    Ok(format!(
        "avg confidence 0.91, accuracy 0.22, gap {:.12}",
        curve.calibration_gap
    ))
}

fn resource_formulas() -> Outcome {
    for p in [0.0, 1.0, 350.0, 1063.24, 12345.678] {
        let e = energy_wh(3600.0, &profile(p, 0.0)).map_err(|e| e.to_string())?;
        ensure!(e == p, "energy_wh(3600, {p}) = {e}");
    }
    let e = energy_wh(6.23, &profile(1063.24, 0.0)).map_err(|e| e.to_string())?;
    ensure!(close(e, 1.84, 0.005), "energy_wh(6.23, 1063.24) = {e}");
    let c = co2_grams(1000.0, &profile(1.0, 400.0)).map_err(|e| e.to_string())?;
    ensure!(c == 400.0, "co2_grams(1000, 400) = {c}");
    Ok(format!(
        "E(3600 s) = P exact, E(6.23 s @ 1063.24 W) = {e:.4} Wh, CO2(1000 Wh @ 400) = {c} g"
    ))
}

// ---------------------------------------------------------------------------
// filtering and prompts

fn aggregator_script(dir: &Path) -> PathBuf {
    let mut s = MockScript::new();
    s.insert(
        "@aggregate",
        entry(
            "",
            None,
            "SUMMARY:\nTypical findings.\nQUESTIONS:\n1. Is the finding typical?",
            0.0,
        ),
    );
    common::write_script(&dir.join("aggregator.mock"), &s)
}

async fn filter_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let labels = ["normal", "covid", "lung opacity"];
    for set in 0..200 {
        let n = rng.gen_range(0..120);
        let target = labels[rng.gen_range(0..3)];
        let mut outcomes = Vec::new();
        let mut truths = HashMap::new();
        for i in 0..n {
            let id = format!("s{i}");
            let t = labels[rng.gen_range(0..3)];
            let p = if rng.gen_bool(0.1) {
                None
            } else {
                Some(labels[rng.gen_range(0..3)])
            };
            // Coarse grid so ties with the threshold occur.
            let c = if rng.gen_bool(0.1) {
                None
            } else {
                Some(rng.gen_range(0..=20) as f64 / 20.0)
            };
            truths.insert(id.clone(), t.to_string());
            let mut o = outcome(id, p, c, 0.0);
            o.full_response = format!("response {i}");
            outcomes.push(o);
        }
        let t1 = rng.gen_range(0..=20) as f64 / 20.0;
        let t2 = rng.gen_range(0..=20) as f64 / 20.0;
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };

        let pick = |threshold: f64| -> Result<Vec<String>, String> {
            let criteria = FilterCriteria::new(target).with_threshold(threshold);
            Ok(select_high_confidence(&outcomes, &truths, &criteria)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|o| o.sample_id.clone())
                .collect())
        };
        let brute: Vec<String> = outcomes
            .iter()
            .filter(|o| {
                truths[&o.sample_id] == target
                    && o.predicted_label.label() == Some(target)
                    && o.confidence.is_some_and(|c| c >= lo)
            })
            .map(|o| o.sample_id.clone())
            .collect();
        let low = pick(lo)?;
        ensure!(
            low == brute,
            "set {set}: selection differs from triple predicate"
        );
        let high = pick(hi)?;
        ensure!(
            high.iter().all(|id| low.contains(id)),
            "set {set}: raising {lo} -> {hi} added outcomes"
        );
    }

    let mut truths = HashMap::new();
    truths.insert("edge".to_string(), "normal".to_string());
    let edge = vec![outcome("edge".into(), Some("normal"), Some(0.80), 0.0)];
    let kept = select_high_confidence(
        &edge,
        &truths,
        &FilterCriteria::new("normal").with_threshold(0.80),
    )
    .map_err(|e| e.to_string())?;
    ensure!(kept.len() == 1, "confidence 0.80 dropped at threshold 0.80");

    let dir = tempfile::tempdir().unwrap();
    let aggregator =
        Backend::from_config(&BackendConfig::mock("agg", aggregator_script(dir.path())))
            .map_err(|e| e.to_string())?;
    let criteria = FilterCriteria::new("normal");
    let mut many = Vec::new();
    for i in 0..80 {
        let id = format!("n{i}");
        truths.insert(id.clone(), "normal".into());
        let mut o = outcome(id, Some("normal"), Some(0.9), 0.0);
        o.full_response = format!("context {i}");
        many.push(o);
    }
    let selected = select_high_confidence(&many, &truths, &criteria).map_err(|e| e.to_string())?;
    let contexts = extract_contexts(&selected, &criteria);
    ensure!(
        contexts.len() == 50,
        "max_responses not applied: {}",
        contexts.len()
    );
    formulate_questions(&contexts, &aggregator, &criteria, "r")
        .await
        .map_err(|e| e.to_string())?;
    ensure!(
        aggregator.call_count() == 1,
        "{} aggregator calls",
        aggregator.call_count()
    );
    Ok(
        "200 random sets match triple predicate, monotone, 0.80 kept at 0.80, 1 aggregator call"
            .into(),
    )
}

fn prompt_injection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let labels = Modality::Mri.canonical_labels();
    for n in 1..=10 {
        for round in 0..20 {
            let questions: Vec<String> = (0..n)
                .map(|i| {
                    let noise: String = (0..rng.gen_range(0..12))
                        .map(|_| {
                            ['a', 'Z', '"', '?', ',', '(', ')', '%', 'é', ' '][rng.gen_range(0..10)]
                        })
                        .collect();
                    format!("Q{round}.{i}: is the lesion{noise} enhancing?")
                })
                .collect();
            let artifact = FilterArtifact {
                target_label: "glioma".into(),
                aggregated_context: "ring enhancement".into(),
                targeted_questions: questions.clone(),
                source_run_id: "train".into(),
                criteria: FilterCriteria::new("glioma"),
                created_at: Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap(),
            };
            let bundle =
                build_prompt(&labels, Modality::Mri, &[artifact]).map_err(|e| e.to_string())?;
            let rendered = bundle.render_user_prompt();
            let mut from = 0;
            for q in &questions {
                let Some(at) = rendered[from..].find(q.as_str()) else {
                    return Err(format!("{n} questions: `{q}` missing or out of order"));
                };
                from += at + q.len();
            }
        }
    }
    Ok("1..=10 questions, 20 variants each, verbatim and in order".into())
}

// ---------------------------------------------------------------------------
// end-to-end runs

const N_TABLE: usize = 100;

/// Test split of 100 X-ray images plus 40 train images.
fn xray_world(root: &Path) -> PathBuf {
    let mut specs = Vec::new();
    for i in 0..N_TABLE {
        specs.push(spec(format!("x{i:03}"), XRAY[i % 4], Some("test")));
    }
    for i in 0..40 {
        specs.push(spec(format!("tr{i:03}"), XRAY[i % 4], Some("train")));
    }
    common::write_dataset(&root.join("cxr"), "xray", "@canonical", &specs)
}

/// Test-split script with the first `correct` samples right, all at 0.93.
fn table_script(path: &Path, correct: usize, time: f64) -> PathBuf {
    let mut s = MockScript::new();
    for i in 0..N_TABLE {
        let truth = XRAY[i % 4];
        let pred = if i < correct {
            truth
        } else {
            XRAY[(i + 1) % 4]
        };
        s.insert(
            format!("x{i:03}"),
            entry(
                pred,
                Some(0.93),
                &common::reply_json(pred, 0.93, "scripted"),
                time,
            ),
        );
    }
    common::write_script(path, &s)
}

fn train_script(path: &Path) -> PathBuf {
    let mut s = MockScript::new();
    for i in 0..40 {
        let truth = XRAY[i % 4];
        s.insert(
            format!("tr{i:03}"),
            entry(
                truth,
                Some(0.8 + (i % 5) as f64 * 0.05),
                &format!("{truth}: reasoning {i}"),
                3.0,
            ),
        );
    }
    s.insert(
        "@aggregate:viral pneumonia",
        entry(
            "",
            None,
            "SUMMARY:\nBilateral interstitial pattern.\nQUESTIONS:\n1. Are there bilateral interstitial opacities?\n2. Is there peribronchial thickening?",
            0.0,
        ),
    );
    common::write_script(path, &s)
}

fn run_config(
    root: &Path,
    manifest: &Path,
    run_id: &str,
    split: Split,
    script: PathBuf,
) -> RunConfig {
    let mut c = RunConfig::new(
        run_id,
        manifest,
        split,
        BackendConfig::mock("gpt-4o-mock", script),
        root.join("runs"),
    );
    c.power_profile = profile(1063.24, 400.0);
    c
}

async fn ab_filter_arithmetic() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let manifest = xray_world(root);

    let train = run_config(
        root,
        &manifest,
        "train",
        Split::Train,
        train_script(&root.join("train.mock")),
    );
    run_benchmark(&train).await.map_err(|e| e.to_string())?;
    let aggregator = Backend::from_config(&BackendConfig::mock(
        "agg",
        train_script(&root.join("agg.mock")),
    ))
    .map_err(|e| e.to_string())?;
    let built = build_filter_for_run(&train, &FilterCriteria::new("viral pneumonia"), &aggregator)
        .await
        .map_err(|e| e.to_string())?;
    ensure!(
        aggregator.call_count() == 1,
        "aggregator called {} times",
        aggregator.call_count()
    );

    let base_cfg = run_config(
        root,
        &manifest,
        "without-filter",
        Split::Test,
        table_script(&root.join("base.mock"), 62, 6.23),
    );
    let base = run_benchmark(&base_cfg).await.map_err(|e| e.to_string())?;
    let mut filt_cfg = run_config(
        root,
        &manifest,
        "with-filter",
        Split::Test,
        table_script(&root.join("filt.mock"), 82, 2.35),
    );
    filt_cfg.filter_artifact_paths = vec![built.artifact_path.clone()];
    let filt = run_benchmark(&filt_cfg).await.map_err(|e| e.to_string())?;

    ensure!(
        base.metrics.accuracy == 0.62,
        "unfiltered accuracy {}",
        base.metrics.accuracy
    );
    ensure!(
        filt.metrics.accuracy == 0.82,
        "filtered accuracy {}",
        filt.metrics.accuracy
    );
    ensure!(
        filt.summary.filter_applied && !base.summary.filter_applied,
        "filter flags wrong"
    );

    let report = render_report(
        &[base.results_path.clone(), filt.results_path.clone()],
        ReportFormat::TableText,
        true,
    )
    .map_err(|e| e.to_string())?;
    let cmp = report.comparison.unwrap();
    let row = |m: &str| cmp.iter().find(|c| c.metric == m).unwrap().clone();
    let acc = row("Accuracy");
    ensure!(
        acc.change == Some(Change::Increased) && acc.verdict == Some(Verdict::Improved),
        "accuracy {acc:?}"
    );
    let cs = row("Avg. CS");
    ensure!(cs.change == Some(Change::Unchanged), "avg CS {cs:?}");
    ensure!(
        close(cs.with_filter.unwrap(), 0.93, 1e-9) && close(cs.without_filter.unwrap(), 0.93, 1e-9),
        "avg CS values {cs:?}"
    );
    let time = row("Avg. Exec. Time");
    ensure!(time.change == Some(Change::Decreased), "time {time:?}");
    ensure!(
        close(time.without_filter.unwrap(), 6.23, 1e-9)
            && close(time.with_filter.unwrap(), 2.35, 1e-9),
        "time values {time:?}"
    );
    let energy = row("Avg. Energy");
    ensure!(
        energy.change == Some(Change::Decreased),
        "energy {energy:?}"
    );
    ensure!(
        close(energy.without_filter.unwrap(), 1.84, 0.005),
        "unfiltered energy {:?}",
        energy.without_filter
    );
    Ok(format!(
        "accuracy 0.62 -> 0.82 improved, CS 0.93 unchanged, time 6.23 -> 2.35 s and energy {:.3} -> {:.3} Wh decreased",
        energy.without_filter.unwrap(),
        energy.with_filter.unwrap()
    ))
}

fn strip_timestamps(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| {
            let mut cells: Vec<String> = r.unwrap().iter().map(String::from).collect();
            cells.pop();
            cells
        })
        .collect()
}

async fn determinism_roundtrip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let manifest = xray_world(root);
    let script = table_script(&root.join("s.mock"), 71, 1.25);
    let a = run_config(root, &manifest, "det", Split::Test, script.clone());
    let mut b = a.clone();
    b.output_dir = root.join("runs-b");
    let ra = run_benchmark(&a).await.map_err(|e| e.to_string())?;
    let rb = run_benchmark(&b).await.map_err(|e| e.to_string())?;
    ensure!(
        strip_timestamps(&ra.results_path) == strip_timestamps(&rb.results_path),
        "results differ beyond timestamps"
    );

    let rows = read_results(&ra.results_path).map_err(|e| e.to_string())?;
    let truths: HashMap<String, String> = rows
        .iter()
        .map(|r| (r.sample_id.clone(), r.ground_truth.clone()))
        .collect();
    let outcomes: Vec<_> = rows.iter().map(|r| r.to_outcome()).collect();
    let cm = compute_confusion(&outcomes, &truths, &Modality::Xray.canonical_labels())
        .map_err(|e| e.to_string())?;
    let rescored = compute_metrics(&cm, &outcomes).map_err(|e| e.to_string())?;
    ensure!(rescored == ra.metrics, "re-scored report differs");

    let artifact = FilterArtifact {
        target_label: "lung opacity".into(),
        aggregated_context: "Patchy airspace opacity.\n\n  Indented line, with comma\tand tab."
            .into(),
        targeted_questions: vec![
            "Is there airspace opacity?".into(),
            "Is it lobar, patchy, or diffuse?".into(),
            "Any \"air bronchograms\" (visible airways)?".into(),
        ],
        source_run_id: "train-2026".into(),
        criteria: FilterCriteria::new("lung opacity")
            .with_threshold(0.85)
            .with_max_responses(17),
        created_at: Utc.with_ymd_and_hms(2026, 10, 19, 8, 30, 5).unwrap(),
    };
    let p1 = root.join("a.artifact");
    let p2 = root.join("b.artifact");
    artifact.save(&p1).map_err(|e| e.to_string())?;
    let loaded = FilterArtifact::load(&p1).map_err(|e| e.to_string())?;
    ensure!(loaded == artifact, "artifact fields changed on load");
    loaded.save(&p2).map_err(|e| e.to_string())?;
    ensure!(
        std::fs::read(&p1).unwrap() == std::fs::read(&p2).unwrap(),
        "artifact bytes changed"
    );
    Ok("rows identical except timestamp, CSV re-score identical, artifact bytes identical".into())
}

async fn throughput_concurrency() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let specs: Vec<_> = (0..400)
        .map(|i| spec(format!("m{i:03}"), XRAY[i % 4], Some("test")))
        .collect();
    let manifest = common::write_dataset(&root.join("big"), "xray", "@canonical", &specs);
    let mut s = MockScript::new();
    for i in 0..400 {
        s.insert(format!("m{i:03}"), entry(XRAY[i % 4], Some(0.9), "ok", 0.5));
    }
    let script = common::write_script(&root.join("big.mock"), &s);
    let start = Instant::now();
    let out = run_benchmark(&run_config(root, &manifest, "big", Split::Test, script))
        .await
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(
        out.summary.n_samples == 400,
        "{} samples",
        out.summary.n_samples
    );
    ensure!(
        elapsed < Duration::from_secs(10),
        "400-sample run took {elapsed:?}"
    );

    use axum::{extract::State, routing::post, Json, Router};
    #[derive(Default)]
    struct Gauge {
        now: AtomicUsize,
        peak: AtomicUsize,
    }
    let gauge = Arc::new(Gauge::default());
    let app = Router::new()
        .route(
            "/chat",
            post(|State(g): State<Arc<Gauge>>| async move {
                let now = g.now.fetch_add(1, Ordering::SeqCst) + 1;
                g.peak.fetch_max(now, Ordering::SeqCst);
                tokio::time::sleep(Duration::from_millis(5)).await;
                g.now.fetch_sub(1, Ordering::SeqCst);
                Json(serde_json::json!({
                    "choices": [{ "message": { "content": common::reply_json("normal", 0.9, "") } }]
                }))
            }),
        )
        .with_state(gauge.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });

    let m = medbench_core::dataset::load_manifest(&manifest).map_err(|e| e.to_string())?;
    let mut cfg = BackendConfig::chat_llm("stub", format!("http://{addr}/chat"), "m");
    cfg.max_concurrency = 4;
    let backend = Backend::from_config(&cfg).map_err(|e| e.to_string())?;
    let samples = m.samples_in(Split::Test);
    let bundle = build_prompt(&m.label_set, m.modality, &[]).map_err(|e| e.to_string())?;
    let outs = backend
        .run_batch(&bundle, &samples[..100], &m)
        .await
        .map_err(|e| e.to_string())?;
    ensure!(outs.iter().all(|o| o.error.is_none()), "stub calls failed");
    let peak = gauge.peak.load(Ordering::SeqCst);
    ensure!(peak <= 4, "peak in-flight {peak} with max_concurrency 4");
    Ok(format!(
        "400 samples in {:.3} s; stub peak in-flight {peak} <= 4",
        elapsed.as_secs_f64()
    ))
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap();
    let results: Vec<(&str, Outcome)> = vec![
        ("metrics oracle equivalence", metrics_oracle()),
        (
            "A/B filtering arithmetic",
            rt.block_on(ab_filter_arithmetic()),
        ),
        ("calibration gap", calibration_gap()),
        ("resource formulas", resource_formulas()),
        (
            "filter pipeline properties",
            rt.block_on(filter_properties()),
        ),
        ("prompt injection", prompt_injection()),
        (
            "determinism and round-trip",
            rt.block_on(determinism_roundtrip()),
        ),
        (
            "throughput and concurrency",
            rt.block_on(throughput_concurrency()),
        ),
    ];
    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
