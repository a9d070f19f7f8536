//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p interest-cli --test acceptance`. Set
//! `INTEREST_WRITE_EXPECTED=1` to regenerate the committed oracle value for
//! the scorer-agreement fixture.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use interest_core::analysis::{flag_outliers, footrule, kendall_tau, mean_displacement, RankPairing};
use interest_core::api::{compare_results, Engine, RerankResponse};
use interest_core::connectors::fixture::record_fixture;
use interest_core::connectors::{result_id, ConnectorRegistry, ConnectorSpec, FetchPolicy};
use interest_core::profile::{DomainProfile, ProfileStore};
use interest_core::rerank::{rerank, SearchResult};
use interest_core::scoring::{build_corpus_stats, idf, Interestingness, MatchMismatch, ScorerId, TfIdf};
use interest_core::text::{analyze, Stopwords};
use oracle::OracleProfile;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixtures() -> PathBuf {
    workspace_root().join("fixtures")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- generators

fn vocab(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

/// A word with random case and edge punctuation, so normalization matters.
fn decorate(rng: &mut ChaCha8Rng, w: &str) -> String {
    let mut s = if rng.random_bool(0.3) {
        w.to_uppercase()
    } else {
        w.to_string()
    };
    if rng.random_bool(0.15) {
        s.push(*[',', '.', ')', '!'].choose(rng).unwrap());
    }
    if rng.random_bool(0.1) {
        s.insert(0, '(');
    }
    s
}

fn random_doc(rng: &mut ChaCha8Rng, words: &[String], max_len: usize) -> String {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| {
            let w = words.choose(rng).unwrap();
            decorate(rng, w)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct RandomProfile {
    target: Vec<String>,
    competitors: Vec<String>,
    stopwords: Vec<String>,
}

impl RandomProfile {
    /// Target and competitor entries come from disjoint halves of the
    /// vocabulary; stopwords from anywhere.
    fn generate(rng: &mut ChaCha8Rng, words: &[String], max_phrase: usize) -> Self {
        let (left, right) = words.split_at(words.len() / 2);
        let stopwords: Vec<String> = words.choose_multiple(rng, 3).cloned().collect();
        let n_target = rng.random_range(1..=8);
        let n_comp = rng.random_range(0..=4);
        let target = entries(rng, left, n_target, max_phrase);
        let competitors = entries(rng, right, n_comp, max_phrase);
        Self {
            target,
            competitors,
            stopwords,
        }
    }

    fn build(&self) -> Option<(DomainProfile, OracleProfile)> {
        let sw = Arc::new(Stopwords::from_words(&self.stopwords));
        let p = DomainProfile::from_lines("p", &self.target.join("\n"), &self.competitors.join("\n"), sw).ok()?;
        if !p.validate().is_empty() {
            return None;
        }
        let o = OracleProfile::from_lines(&refs(&self.target), &refs(&self.competitors), &refs(&self.stopwords));
        Some((p, o))
    }
}

fn entries(rng: &mut ChaCha8Rng, pool: &[String], n: usize, max_phrase: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=max_phrase);
            (0..len)
                .map(|_| pool.choose(rng).unwrap().clone())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn valid_profile(rng: &mut ChaCha8Rng, words: &[String], max_phrase: usize) -> (DomainProfile, OracleProfile) {
    loop {
        if let Some(built) = RandomProfile::generate(rng, words, max_phrase).build() {
            return built;
        }
    }
}

fn results_from(docs: &[String], rng: &mut ChaCha8Rng) -> Vec<SearchResult> {
    let mut ranks: Vec<u32> = (1..=docs.len() as u32).collect();
    ranks.shuffle(rng);
    docs.iter()
        .zip(ranks)
        .enumerate()
        .map(|(i, (d, rank))| SearchResult {
            id: format!("r{i}"),
            rank,
            url: format!("https://example.org/{i}"),
            title: String::new(),
            snippet: d.clone(),
            body: String::new(),
        })
        .collect()
}

// ---------------------------------------------------------------- criteria

fn duplication_invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0_0B1E);
    let words = vocab(50);
    let mut checked = 0;
    // 20 groups of 10 documents, each group scored against its own profile
    for _ in 0..20 {
        let (profile, _) = valid_profile(&mut rng, &words, 1);
        let docs: Vec<String> = (0..10).map(|_| random_doc(&mut rng, &words, 500)).collect();
        let stats: Vec<_> = docs.iter().map(|d| analyze(d, &profile.stopwords)).collect();
        let mm = MatchMismatch.score_all(&stats, &profile).map_err(|e| e.to_string())?;
        let tf = TfIdf.score_all(&stats, &profile).map_err(|e| e.to_string())?;
        for (i, d) in docs.iter().enumerate() {
            let mut doubled = stats.clone();
            doubled[i] = analyze(&format!("{d} {d}"), &profile.stopwords);
            let mm2 = MatchMismatch.score_all(&doubled, &profile).map_err(|e| e.to_string())?;
            let tf2 = TfIdf.score_all(&doubled, &profile).map_err(|e| e.to_string())?;
            for (scorer, a, b) in [("mm", mm[i].value, mm2[i].value), ("tfidf", tf[i].value, tf2[i].value)] {
                ensure((a - b).abs() <= 1e-12, || {
                    format!("{scorer} doc {checked}: {a} vs doubled {b}")
                })?;
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "{checked} documents, both scorers, |delta| <= 1e-12, {elapsed:.2?}"
    ))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0_AC1E);
    let words = vocab(40);
    let mut worst = 0f64;
    let mut scored = 0;
    for corpus in 0..100 {
        let (profile, op) = valid_profile(&mut rng, &words, 3);
        let n_docs = rng.random_range(1..=100);
        let docs: Vec<String> = (0..n_docs).map(|_| random_doc(&mut rng, &words, 80)).collect();
        let stats: Vec<_> = docs.iter().map(|d| analyze(d, &profile.stopwords)).collect();
        let owords: Vec<Vec<String>> = docs.iter().map(|d| oracle::words(d, &op.stopwords)).collect();
        let mm = MatchMismatch.score_all(&stats, &profile).map_err(|e| e.to_string())?;
        let tf = TfIdf.score_all(&stats, &profile).map_err(|e| e.to_string())?;
        for (i, w) in owords.iter().enumerate() {
            let expect_mm = oracle::mm(w, &op);
            let expect_tf = oracle::tfidf(w, &owords, &op);
            let d = (mm[i].value - expect_mm).abs().max((tf[i].value - expect_tf).abs());
            worst = worst.max(d);
            ensure(d <= 1e-9, || {
                format!(
                    "corpus {corpus} doc {i}: mm {} vs {expect_mm}, tfidf {} vs {expect_tf}",
                    mm[i].value, tf[i].value
                )
            })?;
            scored += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "100 corpora, {scored} documents, max |delta| {worst:.1e}, {elapsed:.2?}"
    ))
}

fn table_arithmetic() -> Outcome {
    let far_moves = [133u32, 310, 99, 40, 614, 498, 18, 44, 334, 181];
    let local_swaps = [2u32, 1, 3, 5, 4, 6, 10, 9, 8, 7];
    let one_straggler = [1u32, 2, 3, 5, 4, 6, 8, 7, 9, 560];
    let pairing = |b: &[u32]| RankPairing::from_positions(b.iter().copied()).map_err(|e| e.to_string());

    // direct summation over the table
    let direct: u32 = far_moves
        .iter()
        .enumerate()
        .map(|(i, &b)| (i as u32 + 1).abs_diff(b))
        .sum();
    let direct_mean = direct as f64 / far_moves.len() as f64;
    let p1 = pairing(&far_moves)?;
    let md = mean_displacement(&p1);
    ensure(md == 221.6 && direct_mean == 221.6 && footrule(&p1) == 2216, || {
        format!("mean displacement {md}, direct {direct_mean}")
    })?;

    let tau = kendall_tau(&pairing(&local_swaps)?).map_err(|e| e.to_string())?;
    let brute = oracle::tau(&local_swaps);
    ensure(
        (tau - 29.0 / 45.0).abs() <= 1e-12 && (brute - 29.0 / 45.0).abs() <= 1e-12,
        || format!("tau {tau}, brute force {brute}"),
    )?;

    // the rule by hand: displacement > factor * median displacement
    let mut disp: Vec<u32> = one_straggler
        .iter()
        .enumerate()
        .map(|(i, &b)| (i as u32 + 1).abs_diff(b))
        .collect();
    let by_hand: Vec<usize> = {
        let raw = disp.clone();
        disp.sort_unstable();
        let median = (disp[4] + disp[5]) as f64 / 2.0;
        let threshold = if median == 0.0 { 10.0 } else { 10.0 * median };
        raw.iter()
            .enumerate()
            .filter(|(_, &d)| d as f64 > threshold)
            .map(|(i, _)| i + 1)
            .collect()
    };
    let flagged = flag_outliers(&pairing(&one_straggler)?, 10.0).map_err(|e| e.to_string())?;
    ensure(flagged == [10] && by_hand == [10], || {
        format!("flags {flagged:?}, by hand {by_hand:?}")
    })?;
    ensure(one_straggler[flagged[0] - 1] == 560, || {
        "flagged row is not (10, 560)".into()
    })?;
    Ok("mean displacement 221.6, tau 29/45, outlier row (10,560)".into())
}

fn oracle_fixture_tau(top_k: usize) -> Result<f64, String> {
    let content = std::fs::read_to_string(fixtures().join("stars_mars.jsonl")).map_err(|e| e.to_string())?;
    let mut lines = content.lines();
    lines.next();
    let docs: Vec<Value> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let read = |name: &str| std::fs::read_to_string(fixtures().join("profiles").join(name)).unwrap_or_default();
    let (target, comps, stop) = (
        read("space_stars.target"),
        read("space_stars.competitor"),
        read("stopwords"),
    );
    let lines_of = |s: &str| s.lines().map(str::to_string).collect::<Vec<_>>();
    let (t, c, s) = (lines_of(&target), lines_of(&comps), lines_of(&stop));
    let op = OracleProfile::from_lines(&refs(&t), &refs(&c), &refs(&s));

    let words: Vec<Vec<String>> = docs
        .iter()
        .map(|d| {
            let text = ["title", "snippet", "body"]
                .map(|f| d[f].as_str().unwrap_or(""))
                .join(" ");
            oracle::words(&text, &op.stopwords)
        })
        .collect();
    let ranks: Vec<u32> = docs.iter().map(|d| d["rank"].as_u64().unwrap() as u32).collect();
    let mm: Vec<f64> = words.iter().map(|w| oracle::mm(w, &op)).collect();
    let tf: Vec<f64> = words.iter().map(|w| oracle::tfidf(w, &words, &op)).collect();
    let order_a = oracle::order(&mm, &ranks);
    let order_b = oracle::order(&tf, &ranks);
    let positions: Vec<u32> = order_a
        .iter()
        .take(top_k)
        .map(|i| order_b.iter().position(|j| j == i).unwrap() as u32 + 1)
        .collect();
    Ok(oracle::tau(&positions))
}

fn scorer_agreement() -> Outcome {
    const TOP_K: usize = 10;
    let expected_path = fixtures().join("stars_mars.expected.json");
    let oracle_tau = oracle_fixture_tau(TOP_K)?;
    if std::env::var_os("INTEREST_WRITE_EXPECTED").is_some() {
        let doc = json!({"scorer_a": "mm", "scorer_b": "tfidf", "top_k": TOP_K, "kendall_tau": oracle_tau});
        std::fs::write(&expected_path, format!("{doc:#}\n")).map_err(|e| e.to_string())?;
    }
    let committed: Value = serde_json::from_str(
        &std::fs::read_to_string(&expected_path).map_err(|e| format!("{}: {e}", expected_path.display()))?,
    )
    .map_err(|e| e.to_string())?;
    let expected = committed["kendall_tau"]
        .as_f64()
        .ok_or("expected file lacks kendall_tau")?;

    let store = ProfileStore::new(fixtures().join("profiles"), None);
    let profile = store.load("space_stars").map_err(|e| e.to_string())?;
    let corpus = interest_core::connectors::fixture::read_fixture(&fixtures().join("stars_mars.jsonl"))
        .map_err(|e| e.to_string())?;
    ensure(corpus.results.len() == 30, || {
        format!("fixture has {} docs, want 30", corpus.results.len())
    })?;
    for r in &corpus.results {
        ensure(r.id == result_id(&r.url), || {
            format!("fixture id {} does not match its url", r.id)
        })?;
    }
    let report = compare_results(
        "Mars",
        "stars",
        &profile,
        (ScorerId::MatchMismatch, ScorerId::TfIdf),
        &corpus.results,
        Some(TOP_K),
        10.0,
    )
    .map_err(|e| e.to_string())?;
    let tau = report.summary.kendall_tau;
    ensure((oracle_tau - expected).abs() <= 1e-12, || {
        format!("oracle tau {oracle_tau} differs from committed {}", expected)
    })?;
    ensure((tau - expected).abs() <= 1e-12, || {
        format!("pipeline tau {tau} differs from committed {}", expected)
    })?;
    ensure(tau >= 0.5, || format!("tau {tau} below 0.5"))?;
    Ok(format!(
        "top-{TOP_K} tau {tau:.6} (committed oracle value {:.6}, floor 0.5)",
        expected
    ))
}

fn permutation_and_determinism() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let words = vocab(12);
    let (mut zero_idf, mut edge_df) = (0usize, 0usize);
    for instance in 0..1000 {
        let (profile, op) = valid_profile(&mut rng, &words, 2);
        let n = rng.random_range(1..=20);
        let docs: Vec<String> = (0..n).map(|_| random_doc(&mut rng, &words, 30)).collect();
        let results = results_from(&docs, &mut rng);
        let scorer = *ScorerId::ALL.choose(&mut rng).unwrap();

        let first = rerank(&results, &profile, scorer).map_err(|e| e.to_string())?;
        let second = rerank(&results, &profile, scorer).map_err(|e| e.to_string())?;
        let mut ids_in: Vec<&str> = results.iter().map(|r| r.id.as_str()).collect();
        let mut ids_out: Vec<&str> = first.iter().map(|r| r.result_id.as_str()).collect();
        ids_in.sort_unstable();
        ids_out.sort_unstable();
        ensure(ids_in == ids_out, || {
            format!("instance {instance}: ids not a permutation")
        })?;
        let bits = |v: &[interest_core::ScoredResult]| {
            v.iter()
                .map(|r| (r.result_id.clone(), r.score.value.to_bits(), r.new_rank, r.engine_rank))
                .collect::<Vec<_>>()
        };
        ensure(bits(&first) == bits(&second), || {
            format!("instance {instance}: runs differ")
        })?;

        let stats: Vec<_> = docs.iter().map(|d| analyze(d, &profile.stopwords)).collect();
        let owords: Vec<Vec<String>> = docs.iter().map(|d| oracle::words(d, &op.stopwords)).collect();
        let cs = build_corpus_stats(&stats, &profile.target).map_err(|e| e.to_string())?;
        for entry in &profile.target {
            let terms: Vec<String> = entry.terms().iter().map(ToString::to_string).collect();
            let df = owords.iter().filter(|w| oracle::count(w, &terms) > 0).count();
            let value = idf(entry, &cs);
            let edge = df == 0 || df == n;
            ensure((value == 0.0) == edge, || {
                format!("instance {instance}: idf({entry}) = {value} with df {df} of {n}")
            })?;
            zero_idf += usize::from(value == 0.0);
            edge_df += usize::from(edge);
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "1000 instances, {zero_idf} zero idf values all at df in {{0, N}} ({edge_df}), {elapsed:.2?}"
    ))
}

fn fixture_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("corpus.jsonl");
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let awkward = [
        "Ünïcode “quotes”",
        "tab\there",
        "line\nbreak",
        "back\\slash",
        "{\"json\": 1}",
        "emoji 🪐",
        "",
    ];
    let results: Vec<SearchResult> = (1..=50u32)
        .map(|rank| {
            let url = format!("https://site{}.example/p/{rank}?q=x", rank % 7);
            SearchResult {
                id: result_id(&url),
                rank,
                url,
                title: format!("Result {rank} {}", awkward.choose(&mut rng).unwrap()),
                snippet: awkward.choose(&mut rng).unwrap().to_string(),
                body: format!("{} body {rank}", awkward.choose(&mut rng).unwrap()),
            }
        })
        .collect();
    record_fixture(&results, "round trip", "synthetic", &path).map_err(|e| e.to_string())?;
    let registry = ConnectorRegistry::new([ConnectorSpec::fixture("rt", &path)]);
    let policy = FetchPolicy::default().with_bodies(true);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let replayed = rt
        .block_on(registry.search("rt", "round trip", &policy))
        .map_err(|e| e.to_string())?;
    ensure(replayed.len() == 50, || format!("replayed {} results", replayed.len()))?;
    for (a, b) in results.iter().zip(&replayed) {
        ensure(a == b, || {
            format!("rank {} differs after replay: {a:?} vs {b:?}", a.rank)
        })?;
    }
    Ok("50 results identical field for field".into())
}

async fn post(app: &axum::Router, uri: &str, body: Value) -> Result<Vec<u8>, String> {
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .map_err(|e| e.to_string())?;
    let resp = app.clone().oneshot(req).await.map_err(|e| e.to_string())?;
    let status = resp.status();
    let bytes = resp.into_body().collect().await.map_err(|e| e.to_string())?.to_bytes();
    ensure(status.is_success(), || {
        format!("{uri} -> {status}: {}", String::from_utf8_lossy(&bytes))
    })?;
    Ok(bytes.to_vec())
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let fx = fixtures();
    let out = Command::new(env!("CARGO_BIN_EXE_interest"))
        .arg("--profiles-dir")
        .arg(fx.join("profiles"))
        .arg("--connectors-config")
        .arg(fx.join("connectors.json"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("interest {args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn service_conformance() -> Outcome {
    let fx = fixtures();
    let connectors = ConnectorRegistry::from_config_file(&fx.join("connectors.json")).map_err(|e| e.to_string())?;
    let app = interest_service::router(Engine::new(ProfileStore::new(fx.join("profiles"), None), connectors));
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let read = |p: PathBuf| std::fs::read(&p).map_err(|e| format!("{}: {e}", p.display()));

    for scorer in ["mm", "tfidf"] {
        let body = json!({"connector": "stars", "query": "Mars", "profile": "space_stars", "scorer": scorer});
        let service = rt.block_on(post(&app, "/api/rerank", body))?;
        let out = dir.path().join(scorer);
        let out_str = out.to_string_lossy().into_owned();
        run_cli(&[
            "rerank",
            "--connector",
            "stars",
            "--query",
            "Mars",
            "--profile",
            "space_stars",
            "--scorer",
            scorer,
            "-o",
            &out_str,
        ])?;
        ensure(read(out.join("rerank.json"))? == service, || {
            format!("{scorer}: rerank.json differs from service body")
        })?;
        let parsed: RerankResponse = serde_json::from_slice(&service).map_err(|e| e.to_string())?;
        ensure(read(out.join("rerank.csv"))? == parsed.to_csv().into_bytes(), || {
            format!("{scorer}: rerank.csv differs from the service table")
        })?;
    }

    let body = json!({"connector": "stars", "query": "Mars", "profile": "space_stars",
                      "scorer_a": "mm", "scorer_b": "tfidf", "top_k": 10});
    let service = rt.block_on(post(&app, "/api/compare", body))?;
    let out = dir.path().join("compare");
    let out_str = out.to_string_lossy().into_owned();
    run_cli(&[
        "compare",
        "--connector",
        "stars",
        "--query",
        "Mars",
        "--profile",
        "space_stars",
        "--top-k",
        "10",
        "-o",
        &out_str,
    ])?;
    ensure(read(out.join("compare.json"))? == service, || {
        "compare.json differs from service body".into()
    })?;

    let manifest = std::fs::read_to_string(workspace_root().join("Cargo.toml")).map_err(|e| e.to_string())?;
    let members: HashSet<String> = std::fs::read_dir(workspace_root().join("crates"))
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    ensure(
        members == HashSet::from(["core", "service", "cli"].map(String::from)),
        || format!("unexpected workspace members {members:?}"),
    )?;
    ensure(manifest.contains("crates/*"), || "workspace manifest changed".into())?;
    Ok("rerank (mm, tfidf) JSON and CSV and compare JSON byte-identical; Rust crates only".into())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("duplication invariance", duplication_invariance),
        ("oracle equivalence", oracle_equivalence),
        ("rank-table arithmetic", table_arithmetic),
        ("scorer agreement on planted fixture", scorer_agreement),
        ("permutation and determinism", permutation_and_determinism),
        ("fixture round-trip", fixture_round_trip),
        ("service conformance", service_conformance),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
