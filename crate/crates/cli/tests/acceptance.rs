//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.
//!
//! Run alone with `cargo test -p agentfilter --test acceptance`; add
//! `--no-default-features` to leave the live service out of the build.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use agentfilter::cli;
use agentfilter_core::analysis::analyze;
use agentfilter_core::config::RunConfig;
use agentfilter_core::corpus::report::{
    agreement_distribution, category_frequencies, filter_counts_by_category_intensity,
    filter_rate_by_category, filter_rate_by_category_intensity, user_filter_histogram,
};
use agentfilter_core::corpus::{
    majority_category, Category, Intensity, Message, SurveySet, UserResponse,
};
use agentfilter_core::filters::{compare_regimes, EvalReport, Regime};
use agentfilter_core::learners::{
    accuracy, fit, LearnerConfig, LearnerKind, LinearSvm, NaiveBayes, RandomForest, SparseVec,
    TrainingSet,
};
use agentfilter_core::stats::{
    anova_oneway, f_critical, studentized_range_quantile, wilcoxon_signed_rank, WilcoxonMethod,
};
use agentfilter_core::synthpop::generate;
use agentfilter_core::textfeat::{build_vocabulary, tokenize, vectorize, FeatureMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------- 1

fn definitional_f(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let (mut ssb, mut ssw) = (0.0, 0.0);
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let k = groups.len() as f64;
    (ssb / (k - 1.0)) / (ssw / (all.len() as f64 - k))
}

/// Count of the 2^n sign flips whose |W| reaches the observed one.
fn enumerate_extreme(d: &[i64]) -> (u64, u64) {
    let d: Vec<i64> = d.iter().copied().filter(|&x| x != 0).collect();
    let r2: Vec<i64> = d
        .iter()
        .map(|x| {
            let less = d.iter().filter(|y| y.abs() < x.abs()).count() as i64;
            let eq = d.iter().filter(|y| y.abs() == x.abs()).count() as i64;
            2 * less + eq + 1
        })
        .collect();
    let observed: i64 = d.iter().zip(&r2).map(|(x, r)| x.signum() * r).sum();
    let n = d.len();
    let hits = (0u64..1 << n)
        .filter(|mask| {
            let w: i64 = r2
                .iter()
                .enumerate()
                .map(|(i, r)| if mask >> i & 1 == 1 { *r } else { -r })
                .sum();
            w.abs() >= observed.abs()
        })
        .count() as u64;
    (hits, 1 << n)
}

fn statistics_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for fixture in 0..50 {
        let k = rng.gen_range(2..7);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let shift = rng.gen_range(-10.0..10.0);
                (0..rng.gen_range(2..10))
                    .map(|_| shift + rng.gen_range(-5.0..5.0))
                    .collect()
            })
            .collect();
        let got = anova_oneway(&groups).map_err(|e| e.to_string())?.f;
        let want = definitional_f(&groups);
        ensure!(
            (got - want).abs() <= 1e-9 * want.abs(),
            "anova fixture {fixture}: {got} vs {want}"
        );
    }

    let crit = f_critical(0.05f64, 4.0, 35.0).map_err(|e| e.to_string())?;
    ensure!((crit - 2.64146).abs() <= 5e-4, "F critical {crit}");

    let mut wilcoxon_cases = 0;
    for n in 1..=12usize {
        for _ in 0..15 {
            let a: Vec<i64> = (0..n).map(|_| rng.gen_range(0..6)).collect();
            let b: Vec<i64> = (0..n).map(|_| rng.gen_range(0..6)).collect();
            let d: Vec<i64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
            let bf: Vec<f64> = b.iter().map(|&v| v as f64).collect();
            let r = wilcoxon_signed_rank(&af, &bf).map_err(|e| e.to_string())?;
            if r.method == WilcoxonMethod::NoTest {
                ensure!(
                    d.iter().all(|&x| x == 0),
                    "no test on nonzero differences {d:?}"
                );
                continue;
            }
            let exact = r.exact.ok_or_else(|| format!("n={n}: no exact p"))?;
            let (hits, total) = enumerate_extreme(&d);
            ensure!(
                exact.extreme as u128 * total as u128 == hits as u128 * exact.total as u128,
                "wilcoxon {d:?}: {}/{} vs {hits}/{total}",
                exact.extreme,
                exact.total
            );
            wilcoxon_cases += 1;
        }
    }

    let q: f64 = studentized_range_quantile(0.05, 5, 35.0).map_err(|e| e.to_string())?;
    ensure!((q - 4.066).abs() <= 0.02, "q(0.05, 5, 35) = {q}");

    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "F crit {crit:.5}, q {q:.4}, {wilcoxon_cases} exact Wilcoxon cases, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 2

fn points(rows: &[(f64, f64, bool)]) -> TrainingSet {
    let xs = rows
        .iter()
        .map(|&(a, b, _)| SparseVec::from_pairs(vec![(0, a), (1, b)]))
        .collect();
    TrainingSet::new(xs, rows.iter().map(|r| r.2).collect(), 2).unwrap()
}

fn learner_oracles() -> Outcome {
    // four documents; hand counts per class over the six terms
    let docs = ["you idiot", "nice day", "idiot troll", "good nice"];
    let labels = vec![true, false, true, false];
    let toks: Vec<Vec<String>> = docs.iter().map(|d| tokenize(d)).collect();
    let vocab = build_vocabulary(&toks, 1);
    ensure!(vocab.len() == 6, "vocabulary {:?}", vocab.terms());
    let xs: Vec<SparseVec> = toks
        .iter()
        .map(|t| vectorize(t, &vocab, FeatureMode::Counts))
        .collect();
    let nb = NaiveBayes::fit(
        &TrainingSet::new(xs.clone(), labels, vocab.len()).unwrap(),
        1.0,
    );
    let filter_counts: BTreeMap<&str, f64> = [("you", 1.0), ("idiot", 2.0), ("troll", 1.0)].into();
    let keep_counts: BTreeMap<&str, f64> = [("nice", 2.0), ("day", 1.0), ("good", 1.0)].into();
    // 4 tokens per class, alpha 1, V = 6
    let hand = |counts: &BTreeMap<&str, f64>, doc: &[String]| {
        0.5f64.ln()
            + doc
                .iter()
                .map(|t| ((counts.get(t.as_str()).unwrap_or(&0.0) + 1.0) / 10.0).ln())
                .sum::<f64>()
    };
    for (x, doc) in xs.iter().zip(&toks) {
        let [no, yes] = nb.joint_log_likelihood(x);
        let (want_no, want_yes) = (hand(&keep_counts, doc), hand(&filter_counts, doc));
        ensure!(
            (no - want_no).abs() <= 1e-12 && (yes - want_yes).abs() <= 1e-12,
            "NB {doc:?}: [{no}, {yes}] vs [{want_no}, {want_yes}]"
        );
    }

    let separable = points(&[
        (3.0, 1.0, true),
        (4.0, 0.5, true),
        (2.5, 0.0, true),
        (5.0, 2.0, true),
        (3.5, 1.5, true),
        (1.0, 3.0, false),
        (0.5, 4.0, false),
        (0.0, 2.5, false),
        (2.0, 5.0, false),
        (1.5, 3.5, false),
    ]);
    let (svm, _) = LinearSvm::fit(&separable, 1e-4, 200, 7);
    let svm_acc = accuracy(&svm, &separable).map_err(|e| e.to_string())?;
    ensure!(svm_acc == 1.0, "SVM training accuracy {svm_acc}");

    let threshold = points(&[
        (1.0, 3.0, false),
        (1.0, 0.0, false),
        (1.0, 1.0, false),
        (1.0, 2.0, false),
        (1.0, 0.0, false),
        (4.0, 1.0, true),
        (4.0, 3.0, true),
        (4.0, 0.0, true),
        (4.0, 2.0, true),
        (4.0, 5.0, true),
    ]);
    let one_tree = LearnerConfig {
        rf_trees: 1,
        ..LearnerConfig::default()
    };
    for seed in 0..10 {
        let rf = RandomForest::fit(&threshold, &one_tree, seed);
        let acc = accuracy(&rf, &threshold).map_err(|e| e.to_string())?;
        ensure!(
            acc == 1.0,
            "single tree, seed {seed}: training accuracy {acc}"
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<(f64, f64, bool)> = (0..60)
        .map(|_| {
            let (a, b) = (rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0));
            (a, b, a + rng.gen_range(-1.0..1.0) > b)
        })
        .collect();
    let noisy = points(&rows);
    for kind in LearnerKind::ALL {
        let first = fit(kind, &noisy, 11, &LearnerConfig::default()).and_then(|m| m.to_json());
        let second = fit(kind, &noisy, 11, &LearnerConfig::default()).and_then(|m| m.to_json());
        let (first, second) = (
            first.map_err(|e| e.to_string())?,
            second.map_err(|e| e.to_string())?,
        );
        ensure!(first == second, "{kind} model differs between runs");
    }
    Ok("NB to 1e-12, SVM 1.0, single tree 1.0, models bit-identical".into())
}

// ---------------------------------------------------------------- 3, 4, 5

struct Population {
    survey: SurveySet,
    report: EvalReport,
    elapsed: Duration,
}

fn default_population() -> Result<Population, String> {
    let cfg = RunConfig::default();
    let start = Instant::now();
    let survey = generate(&cfg.synth).map_err(|e| e.to_string())?.survey;
    let report = compare_regimes(&survey, &cfg.eval_config()).map_err(|e| e.to_string())?;
    Ok(Population {
        survey,
        report,
        elapsed: start.elapsed(),
    })
}

fn adapted_beats_general(p: &Population) -> Outcome {
    let nb = p
        .report
        .mean_accuracy
        .get("nb")
        .copied()
        .ok_or("no nb accuracy")?;
    let general = p
        .report
        .mean_accuracy
        .get("general")
        .copied()
        .ok_or("no general accuracy")?;
    let cmp = p
        .report
        .comparison(Regime::General, Regime::User(LearnerKind::Nb))
        .ok_or("no general/nb comparison")?;
    let gap = nb - general;
    let summary = format!(
        "nb {nb:.4} vs general {general:.4} (gap {:+.1}pp), Wilcoxon p {:.3e}, {:.1}s",
        100.0 * gap,
        cmp.wilcoxon.p_value,
        p.elapsed.as_secs_f64()
    );
    ensure!(gap >= 0.05, "gap below 5pp: {summary}");
    ensure!(cmp.wilcoxon.p_value < 0.05, "not significant: {summary}");
    ensure!(p.elapsed < Duration::from_secs(300), "too slow: {summary}");
    Ok(summary)
}

fn majority_pattern(p: &Population) -> Outcome {
    let cmp = p
        .report
        .comparison(Regime::Majority, Regime::User(LearnerKind::Nb))
        .ok_or("no majority/nb comparison")?;
    // counted from the majority side
    let (nb_win, nb_lose, tie) = (cmp.lose, cmp.win, cmp.tie);
    let vm = p.report.v_shape.majority;
    let vnb = p
        .report
        .v_shape
        .user
        .get(&LearnerKind::Nb)
        .copied()
        .flatten();
    let summary =
        format!("nb win/lose/tie {nb_win}/{nb_lose}/{tie}, V-shape majority {vm:?}, nb {vnb:?}");
    ensure!(nb_lose < nb_win + tie, "{summary}");
    ensure!(vm == Some(1.0), "{summary}");
    ensure!(vnb.is_some_and(|v| v >= 0.6), "{summary}");
    Ok(summary)
}

fn observations(p: &Population) -> Outcome {
    let mut by_level = [(0usize, 0usize); 5];
    for r in p.survey.responses() {
        let slot = &mut by_level[r.intensity.level() as usize - 1];
        slot.0 += r.filter as usize;
        slot.1 += 1;
    }
    let rates: Vec<f64> = by_level
        .iter()
        .filter(|c| c.1 > 0)
        .map(|&(f, t)| f as f64 / t as f64)
        .collect();
    ensure!(
        rates.windows(2).all(|w| w[0] <= w[1]),
        "intensity rates {rates:?}"
    );

    let by_cat = filter_rate_by_category(&p.survey);
    let hi = by_cat.values().copied().fold(f64::MIN, f64::max);
    let lo = by_cat.values().copied().fold(f64::MAX, f64::min);
    ensure!(hi - lo > 0.1, "category spread {}", hi - lo);

    let report = analyze(&p.survey, &RunConfig::default()).map_err(|e| e.to_string())?;
    let anova = report.anova.ok_or("no anova section")?.result;
    ensure!(
        anova.p_value < 0.05 && anova.eta_squared > 0.5,
        "anova p {} eta2 {}",
        anova.p_value,
        anova.eta_squared
    );
    let shown: Vec<String> = rates.iter().map(|r| format!("{r:.3}")).collect();
    Ok(format!(
        "intensity rates [{}], spread {:.3}, anova F {:.1} p {:.2e} eta2 {:.3}",
        shown.join(", "),
        hi - lo,
        anova.f,
        anova.p_value,
        anova.eta_squared
    ))
}

// ---------------------------------------------------------------- 6

fn msg(id: &str, annotations: &[i64]) -> Message {
    Message::new(id, format!("message {id}"), annotations).unwrap()
}

fn resp(user: &str, m: &str, level: i64, filter: bool) -> UserResponse {
    UserResponse {
        user_id: user.into(),
        message_id: m.into(),
        intensity: Intensity::new(level).unwrap(),
        filter,
    }
}

fn corpus_fixtures() -> Result<(), String> {
    let cat = |c: i64| Category::from_code(c).unwrap();
    let ok = |a: &[i64]| {
        majority_category(a)
            .map(|r| r.category())
            .map_err(|e| e.to_string())
    };
    ensure!(ok(&[4, 4, 4])? == Some(cat(4)), "[4,4,4]");
    ensure!(ok(&[1, 1, 7])? == Some(cat(1)), "[1,1,7]");
    ensure!(ok(&[2, 3, 4])?.is_none(), "[2,3,4]");

    let six = vec![
        msg("a", &[7]),
        msg("b", &[7]),
        msg("c", &[1]),
        msg("d", &[5]),
        msg("e", &[2, 3, 4]),
        msg("f", &[1]),
    ];
    let f = category_frequencies(&six);
    let nonzero: BTreeMap<Category, usize> = f
        .counts
        .iter()
        .filter(|(_, &n)| n > 0)
        .map(|(&c, &n)| (c, n))
        .collect();
    ensure!(
        nonzero == BTreeMap::from([(cat(1), 2), (cat(5), 1), (cat(7), 2)])
            && f.non_codable == 1
            && f.total == 6,
        "category_frequencies {f:?}"
    );

    let rates_survey = SurveySet::new(
        six.clone(),
        vec![
            resp("u1", "d", 4, true),
            resp("u2", "d", 4, true),
            resp("u3", "d", 3, false),
            resp("u4", "d", 5, true),
            resp("u1", "a", 1, false),
            resp("u2", "b", 1, false),
        ],
    )
    .map_err(|e| e.to_string())?;
    let rates = filter_rate_by_category(&rates_survey);
    ensure!(
        rates == BTreeMap::from([(cat(5), 0.75), (cat(7), 0.0)]),
        "filter_rate_by_category {rates:?}"
    );

    let cell_survey = SurveySet::new(
        six.clone(),
        vec![
            resp("u1", "c", 2, true),
            resp("u2", "c", 2, false),
            resp("u3", "f", 2, false),
            resp("u4", "f", 2, false),
            resp("u1", "d", 3, true),
        ],
    )
    .map_err(|e| e.to_string())?;
    let cells = filter_rate_by_category_intensity(&cell_survey);
    let level = |l: i64| Intensity::new(l).unwrap();
    ensure!(
        cells[&cat(1)] == BTreeMap::from([(level(2), 0.25)]),
        "cells {cells:?}"
    );
    ensure!(
        cells[&cat(5)].keys().copied().collect::<Vec<_>>() == vec![level(3)],
        "cells {cells:?}"
    );
    ensure!(
        filter_counts_by_category_intensity(&cell_survey)[&cat(1)][&level(2)].total == 4,
        "cell counts"
    );

    let ids = ["a", "b", "c", "d", "e", "f"];
    let mut hist_responses = Vec::new();
    for (u, filtered) in [("x", 0), ("y", 0), ("z", 6)] {
        for (i, id) in ids.iter().enumerate() {
            hist_responses.push(resp(u, id, 3, i < filtered));
        }
    }
    let hist_survey = SurveySet::new(six.clone(), hist_responses).map_err(|e| e.to_string())?;
    let hist = user_filter_histogram(&hist_survey);
    ensure!(
        hist == BTreeMap::from([(0, 2), (6, 1)]),
        "histogram {hist:?}"
    );

    let votes = [("a", "TTFFF"), ("b", "TTTTF")];
    let mut vote_responses = Vec::new();
    for (m, pattern) in votes {
        for (i, v) in pattern.chars().enumerate() {
            vote_responses.push(resp(&format!("r{i}"), m, 3, v == 'T'));
        }
    }
    let vote_survey = SurveySet::new(six, vote_responses).map_err(|e| e.to_string())?;
    let a = agreement_distribution(&vote_survey);
    ensure!(
        (a.unanimous, a.majority, a.maximal_disagreement) == (0.0, 0.5, 0.5) && a.classified == 2,
        "agreement {a:?}"
    );
    Ok(())
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(
        std::iter::once("agentfilter").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    ensure!(
        code == 0,
        "{args:?} exited {code}: {}",
        String::from_utf8_lossy(&err)
    );
    Ok(out)
}

fn corpus_reports(p: &Population) -> Outcome {
    let a = agreement_distribution(&p.survey);
    let sum = a.unanimous + a.majority + a.maximal_disagreement;
    ensure!(
        a.classified > 0 && (sum - 1.0).abs() <= 1e-12,
        "fractions sum to {sum}"
    );
    corpus_fixtures()?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path().to_str().ok_or("temp path")?;
    run_cli(&[
        "simulate",
        "--seed",
        "7",
        "--users",
        "60",
        "--messages",
        "900",
        "--out",
        d,
    ])?;
    let first = run_cli(&["evaluate", "--data", d, "--seed", "7"])?;
    let second = run_cli(&["evaluate", "--data", d, "--seed", "7"])?;
    ensure!(first == second, "evaluate output differs between runs");
    Ok(format!(
        "agreement ({:.3}, {:.3}, {:.3}), fixtures exact, evaluate JSON identical ({} bytes)",
        a.unanimous,
        a.majority,
        a.maximal_disagreement,
        first.len()
    ))
}

// ---------------------------------------------------------------- 7

#[cfg(feature = "serve")]
fn live_loop() -> Outcome {
    use agentfilter::service::{router, AppState};
    use agentfilter::session::LiveContext;
    use axum::body::Body;
    use axum::http::{Request, StatusCode};
    use http_body_util::BodyExt;
    use serde_json::{json, Value};
    use std::sync::Arc;
    use tower::ServiceExt;

    let cfg = RunConfig::default();
    let survey = generate(&cfg.synth).map_err(|e| e.to_string())?.survey;
    let state = Arc::new(AppState::new(LiveContext::new(survey, cfg)).map_err(|e| e.to_string())?);
    let app = router(state);
    let call = |req: Request<Body>| {
        let app = app.clone();
        async move {
            let resp = app.oneshot(req).await.unwrap();
            let status = resp.status();
            let bytes = resp.into_body().collect().await.unwrap().to_bytes();
            (
                status,
                serde_json::from_slice::<Value>(&bytes).unwrap_or(Value::Null),
            )
        }
    };
    let get = |uri: &str| Request::get(uri).body(Body::empty()).unwrap();
    let post = |uri: &str, body: Value| {
        Request::post(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap()
    };

    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let mut ids = Vec::new();
        let mut first_prediction = None;
        for item in 1..=10 {
            let (_, next) = call(get("/api/session/tester/next")).await;
            let id = next["message_id"].as_str().ok_or("no message")?.to_string();
            let (status, out) = call(post(
                "/api/session/tester/response",
                json!({ "message_id": id, "intensity": 1 + item % 5, "filter": item % 3 == 0 }),
            ))
            .await;
            ensure!(status == StatusCode::OK, "item {item}: {status}");
            ensure!(
                out["agent_prediction_was"] == next["prediction"],
                "item {item}: served {} but recorded {}",
                next["prediction"],
                out["agent_prediction_was"]
            );
            if first_prediction.is_none() && !next["prediction"].is_null() {
                first_prediction = Some(item);
            }
            ids.push(id);
        }
        ensure!(
            first_prediction == Some(6),
            "first prediction at item {first_prediction:?}"
        );
        let (_, before) = call(get("/api/session/tester/agent")).await;
        let trace = before["trace"].as_array().ok_or("no trace")?;
        ensure!(trace.len() == 10, "trace length {}", trace.len());
        let (status, _) = call(post(
            "/api/session/tester/response",
            json!({ "message_id": ids[2], "intensity": 3, "filter": true }),
        ))
        .await;
        ensure!(status == StatusCode::CONFLICT, "resubmission gave {status}");
        let (_, after) = call(get("/api/session/tester/agent")).await;
        ensure!(before == after, "state changed by a rejected resubmission");
        ensure!(
            after["agreement_rate"] == trace[9]["running_agreement"],
            "panel {} vs trace {}",
            after["agreement_rate"],
            trace[9]["running_agreement"]
        );
        Ok(format!(
            "trace 10, first prediction at item 6, agreement {}",
            after["agreement_rate"]
        ))
    })
}

fn report(n: u32, name: &str, outcome: &Outcome) -> bool {
    match outcome {
        Ok(detail) => println!("criterion {n} PASS  {name}: {detail}"),
        Err(detail) => println!("criterion {n} FAIL  {name}: {detail}"),
    }
    outcome.is_ok()
}

fn main() {
    let mut ok = true;
    ok &= report(1, "statistics oracles", &statistics_oracles());
    ok &= report(2, "learner oracles", &learner_oracles());
    match default_population() {
        Ok(p) => {
            ok &= report(3, "user-adapted beats general", &adapted_beats_general(&p));
            ok &= report(4, "majority baseline pattern", &majority_pattern(&p));
            ok &= report(5, "survey observations", &observations(&p));
            ok &= report(6, "corpus reports and determinism", &corpus_reports(&p));
        }
        Err(e) => {
            for (n, name) in [
                (3, "user-adapted beats general"),
                (4, "majority baseline pattern"),
                (5, "survey observations"),
                (6, "corpus reports and determinism"),
            ] {
                ok &= report(n, name, &Err(format!("default population: {e}")));
            }
        }
    }
    #[cfg(feature = "serve")]
    {
        ok &= report(7, "live loop", &live_loop());
    }
    if !ok {
        std::process::exit(1);
    }
}
