//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any failed. Runs without the libtest harness so the lines are
//! never captured.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anamnesa_core::audio::{resample, AudioClip, QualityPolicy, RawAudioFile};
use anamnesa_core::digest::ContentDigest;
use anamnesa_core::form_mapper::{FieldMapping, FillPlan};
use anamnesa_core::orchestrator::{
    estimate_cost, Failure, NationalProjection, Orchestrator, Pipeline, PriceConfig, SessionRecord, SessionState,
    SessionStore, Stage, TIMING_OVERHEAD_TOLERANCE_S,
};
use anamnesa_core::scenario::{synth_recording, write_fixture_dir, FixtureDir, SCENARIOS};
use anamnesa_core::summarizer::{
    recover_json, validate_summary, FixtureChat, FixtureReply, PromptConfig, SchemaError, Summarizer,
    SummarizerBackendDescriptor, SummaryField,
};
use anamnesa_core::transcription::{FixtureTranscriber, Transcriber, TranscriptionBackendDescriptor};
use chrono::Utc;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn anamnesa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anamnesa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------- end to end

fn fixture_end_to_end(fx: &FixtureDir, work: &Path) -> Check {
    let expected_warnings: [&[&str]; 2] = [&["fallback:past_medical_history", "fallback:family_history"], &[]];
    let mut details = Vec::new();
    for (i, scenario) in SCENARIOS.iter().enumerate() {
        let out = work.join(format!("e2e-{}", scenario.name));
        let started = Instant::now();
        let run = anamnesa(&[
            "process",
            path_str(&fx.recordings[i]),
            "--backend",
            "fixture",
            "--fixtures",
            path_str(fx.transcripts.parent().unwrap()),
            "--out",
            path_str(&out),
        ]);
        let elapsed = started.elapsed().as_secs_f64();
        ensure(run.status.success(), || {
            format!(
                "{}: exit {:?}: {}",
                scenario.name,
                run.status.code(),
                String::from_utf8_lossy(&run.stderr)
            )
        })?;
        ensure(elapsed < 5.0, || format!("{}: took {elapsed:.2} s", scenario.name))?;

        let summary_text = std::fs::read_to_string(out.join("summary.json")).map_err(|e| e.to_string())?;
        let summary = validate_summary(&summary_text).map_err(|e| format!("{}: {e}", scenario.name))?;
        let plan: FillPlan =
            serde_json::from_value(read_json(&out.join("fill_plan.json"))?).map_err(|e| e.to_string())?;
        ensure(plan.entries.len() == 8, || {
            format!("{}: {} entries", scenario.name, plan.entries.len())
        })?;
        ensure(plan.summary_digest == summary.digest(), || {
            format!("{}: plan digest mismatch", scenario.name)
        })?;
        if i == 0 {
            ensure(plan.warnings == expected_warnings[0], || {
                format!("{}: warnings {:?}", scenario.name, plan.warnings)
            })?;
        }
        details.push(format!(
            "{} {:.2}s warnings={}",
            scenario.name,
            elapsed,
            plan.warnings.len()
        ));
    }
    Ok(details.join(", "))
}

// ---------------------------------------------------------------- schema

#[derive(Debug, PartialEq)]
enum Expect {
    Valid,
    Missing(String),
    Unexpected(String),
    NonText(String),
}

fn schema_suite(rng: &mut ChaCha8Rng) -> Check {
    let base: Map<String, Value> = serde_json::from_str(SCENARIOS[0].summary_json()).map_err(|e| e.to_string())?;
    let keys: Vec<&str> = SummaryField::ALL.iter().map(|f| f.key()).collect();
    let non_text = [
        json!(null),
        json!(7),
        json!(1.5),
        json!(true),
        json!(["a"]),
        json!({"a": "b"}),
    ];
    let mut counts = [0usize; 4];

    for case in 0..100 {
        let mut obj = base.clone();
        let key = keys.choose(rng).unwrap().to_string();
        let expect = match case % 4 {
            0 => {
                obj.remove(&key);
                Expect::Missing(key)
            }
            1 => {
                let extra = format!("catatan_{}", rng.random_range(0..10_000));
                obj.insert(extra.clone(), json!("tambahan"));
                Expect::Unexpected(extra)
            }
            2 => {
                obj.insert(key.clone(), non_text.choose(rng).unwrap().clone());
                Expect::NonText(key)
            }
            _ => {
                // Controls: reordered keys and blank values are still valid.
                let mut entries: Vec<_> = obj.into_iter().collect();
                entries.reverse();
                obj = entries.into_iter().collect();
                if rng.random_bool(0.5) {
                    obj.insert(key, json!("   "));
                }
                Expect::Valid
            }
        };
        counts[case % 4] += 1;
        let text = Value::Object(obj).to_string();
        let got = match validate_summary(&text) {
            Ok(_) => Expect::Valid,
            Err(SchemaError::MissingKey(k)) => Expect::Missing(k),
            Err(SchemaError::UnexpectedKey(k)) => Expect::Unexpected(k),
            Err(SchemaError::NonTextValue(k)) => Expect::NonText(k),
            Err(e) => return Err(format!("case {case}: unexpected {e:?}")),
        };
        ensure(got == expect, || {
            format!("case {case}: expected {expect:?}, got {got:?} for {text}")
        })?;
    }
    Ok(format!(
        "100 cases: {} removals, {} additions, {} non-text, {} valid controls",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

// ---------------------------------------------------------------- resampler

/// Applies a Hann window and scales so that a full-scale tone of amplitude
/// `a` has DTFT magnitude `a` at its frequency.
fn hann_weighted(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let w: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect();
    let norm = 2.0 / w.iter().sum::<f64>();
    samples.iter().zip(&w).map(|(x, w)| x * w * norm).collect()
}

/// DTFT magnitude at `freq_hz` by direct summation with a rotating phasor.
fn dtft_magnitude(weighted: &[f64], rate_hz: f64, freq_hz: f64) -> f64 {
    let step = -2.0 * std::f64::consts::PI * freq_hz / rate_hz;
    let (ds, dc) = step.sin_cos();
    let (mut re, mut im) = (1.0f64, 0.0f64);
    let (mut acc_re, mut acc_im) = (0.0, 0.0);
    for &x in weighted {
        acc_re += x * re;
        acc_im += x * im;
        (re, im) = (re * dc - im * ds, re * ds + im * dc);
    }
    acc_re.hypot(acc_im)
}

/// Dominant frequency and its amplitude: a 2 Hz grid over 20 Hz..Nyquist
/// (finer than the Hann main lobe of a one-second signal), then a 0.01 Hz
/// refinement around the best grid point.
fn dominant_tone(samples: &[f64], rate_hz: f64) -> (f64, f64) {
    let weighted = hann_weighted(samples);
    let nyquist = (rate_hz / 2.0) as usize;
    let mut best = (0.0, 0.0);
    for f in (20..nyquist).step_by(2) {
        let a = dtft_magnitude(&weighted, rate_hz, f as f64);
        if a > best.1 {
            best = (f as f64, a);
        }
    }
    let centre = best.0;
    for k in -250..=250 {
        let f = centre + k as f64 * 0.01;
        let a = dtft_magnitude(&weighted, rate_hz, f);
        if a > best.1 {
            best = (f, a);
        }
    }
    best
}

fn resampler_oracle(rng: &mut ChaCha8Rng) -> Check {
    let started = Instant::now();
    let amplitude = 12_000.0;
    let mut worst_df: f64 = 0.0;
    let mut worst_da: f64 = 0.0;
    for _ in 0..20 {
        let freq: f64 = rng.random_range(100.0..3500.0);
        let samples: Vec<i16> = (0..44_100)
            .map(|i| (amplitude * (2.0 * std::f64::consts::PI * freq * i as f64 / 44_100.0).sin()).round() as i16)
            .collect();
        let clip = AudioClip::new(samples, 44_100).map_err(|e| e.to_string())?;
        let out = resample(&clip, 16_000);
        ensure(out.sample_rate_hz() == 16_000, || "wrong output rate".into())?;
        ensure(out.samples().len().abs_diff(16_000) <= 1, || {
            format!("{} samples", out.samples().len())
        })?;
        let xs: Vec<f64> = out.samples().iter().map(|&s| s as f64).collect();
        let (f, a) = dominant_tone(&xs, 16_000.0);
        let df = (f - freq).abs();
        let da = (a - amplitude).abs() / amplitude;
        ensure(df <= 1.0, || format!("{freq:.2} Hz came out at {f:.2} Hz"))?;
        ensure(da <= 0.05, || format!("{freq:.2} Hz amplitude {a:.1} vs {amplitude}"))?;
        worst_df = worst_df.max(df);
        worst_da = worst_da.max(da);
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "20 tones, worst |df| {worst_df:.3} Hz, worst amplitude error {:.4}%, {secs:.1} s",
        worst_da * 100.0
    ))
}

// ---------------------------------------------------------------- JSON recovery

/// Char-level balanced-brace scan: for each `{` in order, walk forward
/// tracking a string flag and a depth counter; the first one that closes wins.
fn brace_oracle(raw: &str) -> Option<String> {
    let chars: Vec<char> = raw.chars().collect();
    'start: for s in 0..chars.len() {
        if chars[s] != '{' {
            continue;
        }
        let mut depth = 0i64;
        let mut i = s;
        let mut in_str = false;
        while i < chars.len() {
            let c = chars[i];
            if in_str {
                match c {
                    '\\' => i += 1,
                    '"' => in_str = false,
                    _ => {}
                }
            } else {
                match c {
                    '"' => in_str = true,
                    '{' => depth += 1,
                    '}' => {
                        depth -= 1;
                        if depth == 0 {
                            return Some(chars[s..=i].iter().collect());
                        }
                    }
                    _ => {}
                }
            }
            i += 1;
        }
        continue 'start;
    }
    None
}

fn random_text(rng: &mut ChaCha8Rng, tricky: bool) -> String {
    let plain = [
        "nyeri", "kepala", "demam", "sejak", "tiga", "hari", "obat", "pasien", " ", " ", ".",
    ];
    let specials = ["{", "}", "{}", "\\\"", "\\\\", "}{", "\"", "\\n"];
    let len = rng.random_range(0..8);
    (0..len)
        .map(|_| {
            if tricky && rng.random_bool(0.35) {
                specials.choose(rng).unwrap().to_string()
            } else {
                plain.choose(rng).unwrap().to_string()
            }
        })
        .collect()
}

fn random_value(rng: &mut ChaCha8Rng, depth: u32) -> Value {
    match rng.random_range(0..if depth > 2 { 3 } else { 5 }) {
        0 => {
            // Quotes and backslashes come out escaped; braces stay literal.
            let mut s = random_text(rng, true);
            if rng.random_bool(0.5) {
                s.push_str("{\"x\": 1}");
            }
            Value::String(s)
        }
        1 => json!(rng.random_range(-1000..1000)),
        2 => json!(rng.random_bool(0.5)),
        3 => Value::Array(
            (0..rng.random_range(0..3))
                .map(|_| random_value(rng, depth + 1))
                .collect(),
        ),
        _ => random_object(rng, depth + 1),
    }
}

fn random_object(rng: &mut ChaCha8Rng, depth: u32) -> Value {
    let mut map = Map::new();
    for i in 0..rng.random_range(1..5) {
        let key = if rng.random_bool(0.3) {
            format!("k{{{i}}}")
        } else {
            format!("k{i}")
        };
        map.insert(key, random_value(rng, depth));
    }
    Value::Object(map)
}

fn json_recovery_oracle(rng: &mut ChaCha8Rng) -> Check {
    let mut with_stray = 0;
    for case in 0..500 {
        let object = random_object(rng, 0);
        let body = if rng.random_bool(0.5) {
            serde_json::to_string_pretty(&object).unwrap()
        } else {
            object.to_string()
        };
        // Leading prose has no opening brace; trailing prose may hold anything.
        let mut lead = random_text(rng, false);
        if rng.random_bool(0.3) {
            lead.push_str(" } ");
            with_stray += 1;
        }
        if rng.random_bool(0.3) {
            lead.push_str("\n```json\n");
        }
        let trail = random_text(rng, true);
        let raw = format!("{lead}{body}\n{trail}");

        let got = recover_json(&raw).ok().map(str::to_string);
        let oracle = brace_oracle(&raw);
        ensure(got == oracle, || {
            format!("case {case}: recover {got:?} vs oracle {oracle:?} on {raw:?}")
        })?;
        let parsed: Value =
            serde_json::from_str(got.as_deref().unwrap_or("")).map_err(|e| format!("case {case}: {e}"))?;
        ensure(parsed == object, || {
            format!("case {case}: recovered a different object")
        })?;
    }
    Ok(format!(
        "500 cases agree ({with_stray} with stray closing braces in the prose)"
    ))
}

// ---------------------------------------------------------------- timing

fn short_fixture_orchestrator(root: &Path) -> (Orchestrator, Vec<Vec<u8>>) {
    let transcripts = FixtureTranscriber::new();
    let chat = FixtureChat::new();
    let mut wavs = Vec::new();
    for (i, s) in SCENARIOS.iter().enumerate() {
        let clip = synth_recording(20.0, 16_000, 100 + i as u64);
        transcripts.register(clip.digest(), s.transcript()).unwrap();
        chat.register(
            ContentDigest::of_text(s.transcript()),
            FixtureReply::Single(s.summarizer_reply()),
        )
        .unwrap();
        wavs.push(clip.to_wav());
    }
    let pipeline = Pipeline::new(
        Transcriber::with_backend(TranscriptionBackendDescriptor::fixture(None), Arc::new(transcripts)),
        Summarizer::with_backend(
            SummarizerBackendDescriptor::fixture(None),
            PromptConfig::default(),
            Arc::new(chat),
        ),
        FieldMapping::default_mapping(),
        PriceConfig::default(),
    );
    let store = SessionStore::open(root).unwrap();
    (
        Orchestrator::new(pipeline, store, QualityPolicy::default(), true, 4),
        wavs,
    )
}

fn parse_bench(stdout: &str) -> Result<Vec<(String, f64, f64)>, String> {
    stdout
        .lines()
        .skip(2)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split_whitespace().collect();
            match cols.as_slice() {
                [name, mean, max] => Ok((
                    name.to_string(),
                    mean.parse().map_err(|_| format!("bad mean in {l:?}"))?,
                    max.parse().map_err(|_| format!("bad max in {l:?}"))?,
                )),
                _ => Err(format!("bad row {l:?}")),
            }
        })
        .collect()
}

fn timing_additivity(work: &Path) -> Check {
    let root = work.join("timing");
    let (orch, wavs) = short_fixture_orchestrator(&root);
    let rt = tokio::runtime::Runtime::new().unwrap();
    let worst = rt.block_on(async {
        let mut worst: f64 = 0.0;
        for run in 0..50 {
            let id = orch.create_session().await.map_err(|e| e.to_string())?.session_id;
            let file = RawAudioFile::from_named_bytes(wavs[run % 2].clone(), "a.wav").map_err(|e| e.to_string())?;
            orch.attach_audio(id, file).await.map_err(|e| e.to_string())?;
            let record = orch.run_pipeline(id).await.map_err(|e| e.to_string())?;
            ensure(record.state == SessionState::PlanReady, || {
                format!("run {run}: {}", record.state)
            })?;
            let gap = (record.timings.total_s - record.timings.stage_sum()).abs();
            ensure(gap <= TIMING_OVERHEAD_TOLERANCE_S, || {
                format!("run {run}: gap {gap:.3} s")
            })?;
            worst = worst.max(gap);
        }
        Ok::<_, String>(worst)
    })?;
    drop(orch);
    // Every persisted snapshot, not only the returned ones.
    let log = std::fs::read_to_string(root.join("sessions.jsonl")).map_err(|e| e.to_string())?;
    let mut snapshots = 0;
    for line in log.lines() {
        let record: SessionRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let gap = (record.timings.total_s - record.timings.stage_sum()).abs();
        ensure(gap <= TIMING_OVERHEAD_TOLERANCE_S, || {
            format!("persisted gap {gap:.3} s")
        })?;
        snapshots += 1;
    }

    let bench = anamnesa(&["bench", "--runs", "2"]);
    ensure(bench.status.success(), || {
        String::from_utf8_lossy(&bench.stderr).into_owned()
    })?;
    let rows = parse_bench(&String::from_utf8_lossy(&bench.stdout))?;
    let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    ensure(
        names == ["transcription", "summarization", "form_population", "total"],
        || format!("bench rows {names:?}"),
    )?;
    let stage_means: f64 = rows[..3].iter().map(|r| r.1).sum();
    let bench_gap = (rows[3].1 - stage_means).abs();
    ensure(bench_gap <= TIMING_OVERHEAD_TOLERANCE_S, || {
        format!("bench columns off by {bench_gap:.6} s")
    })?;
    Ok(format!(
        "50 runs, {snapshots} snapshots, worst gap {worst:.6} s; bench mean total {:.6} vs stage sum {stage_means:.6}",
        rows[3].1
    ))
}

// ---------------------------------------------------------------- cost

fn cost_arithmetic(rng: &mut ChaCha8Rng) -> Check {
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let prices = PriceConfig {
            currency: "USD".into(),
            audio_rate_per_min: rng.random_range(0.0..0.05),
            input_rate_per_1k: rng.random_range(0.0..0.05),
            output_rate_per_1k: rng.random_range(0.0..0.1),
        };
        let seconds = rng.random_range(0.0..7200.0);
        let tin = rng.random_range(0..40_000u64);
        let tout = rng.random_range(0..4_000u64);
        // Per-second and per-token unit rates, summed in reverse order.
        let oracle = tout as f64 * (prices.output_rate_per_1k / 1000.0)
            + tin as f64 * (prices.input_rate_per_1k / 1000.0)
            + seconds * (prices.audio_rate_per_min / 60.0);
        let got = estimate_cost(seconds, tin, tout, &prices).total_usd;
        let err = (got - oracle).abs();
        ensure(err <= 1e-6, || format!("case {case}: {got} vs {oracle}"))?;
        worst = worst.max(err);
    }
    let projection = NationalProjection::default();
    let (low, high) = projection.annual_band_usd(0.10, 0.15);
    ensure(
        (low - 10_000_000.0).abs() < 1e-3 && (high - 15_000_000.0).abs() < 1e-3,
        || format!("projection {low} .. {high}"),
    )?;
    ensure(low >= 1e6 && high < 1e9, || "projection is not in the millions".into())?;
    Ok(format!(
        "1000 cases, worst error {worst:.2e} USD; 100M x $0.10-0.15 = ${:.0}M-${:.0}M/yr",
        low / 1e6,
        high / 1e6
    ))
}

// ---------------------------------------------------------------- state machine

fn state_machine(work: &Path) -> Check {
    use SessionState::*;
    let order = [Created, AudioReceived, Transcribed, Summarized, PlanReady];
    let legal = |from: SessionState, to: SessionState| {
        let pos = |s| order.iter().position(|&o| o == s);
        match (pos(from), pos(to)) {
            (Some(a), Some(b)) => b == a + 1,
            (Some(_), None) => to == Failed,
            (None, _) => false,
        }
    };
    let mut rejected = 0;
    for from in SessionState::ALL {
        for to in SessionState::ALL {
            ensure(from.can_transition_to(to) == legal(from, to), || {
                format!("{from} -> {to}")
            })?;
            let mut record = SessionRecord::new(Utc::now());
            record.state = from;
            let before = record.clone();
            match record.transition(to, Utc::now()) {
                Ok(()) => ensure(legal(from, to) && record.state == to, || {
                    format!("{from} -> {to} accepted")
                })?,
                Err(e) => {
                    ensure(!legal(from, to), || format!("{from} -> {to} rejected"))?;
                    ensure(record == before, || format!("{from} -> {to} changed the record"))?;
                    ensure(e.from == from && e.to == to, || "wrong error payload".into())?;
                    rejected += 1;
                }
            }
        }
    }

    // Durability: persist each step, tear the log mid-line, reopen.
    let root = work.join("reload");
    let clip = synth_recording(4.0, 16_000, 9);
    let mut record = SessionRecord::with_audio(&clip);
    let id = record.session_id;
    {
        let store = SessionStore::open(&root).map_err(|e| e.to_string())?;
        store.persist(&record).map_err(|e| e.to_string())?;
        record.transcript = Some(anamnesa_core::transcription::Transcript {
            text: "halo".into(),
            language: "id".into(),
            audio_duration_s: 4.0,
            latency_s: 0.0,
        });
        record.transition(Transcribed, Utc::now()).unwrap();
        store.persist(&record).map_err(|e| e.to_string())?;
        record
            .fail(
                Failure {
                    stage: Stage::Summarize,
                    error_code: "summary_invalid".into(),
                    message: "x".into(),
                },
                Utc::now(),
            )
            .unwrap();
        store.persist(&record).map_err(|e| e.to_string())?;
    }
    let mut log = std::fs::OpenOptions::new()
        .append(true)
        .open(root.join("sessions.jsonl"))
        .map_err(|e| e.to_string())?;
    log.write_all(br#"{"session_id":"#).map_err(|e| e.to_string())?;
    drop(log);

    let reopened = SessionStore::open(&root).map_err(|e| e.to_string())?;
    let recovered = reopened.get(id).ok_or("session lost after reload")?;
    ensure(recovered == record, || {
        format!("recovered {} instead of {}", recovered.state, record.state)
    })?;
    recovered.check_invariants()?;
    let states: Vec<_> = reopened
        .history(id)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.state)
        .collect();
    ensure(states == [AudioReceived, Transcribed, Failed], || {
        format!("history {states:?}")
    })?;
    Ok(format!(
        "36 pairs, {rejected} rejected; reload after torn write recovers {}",
        recovered.state
    ))
}

// ---------------------------------------------------------------- offline

/// Accepts connections, counts them and answers each with a 400.
fn counting_stub() -> (u16, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let count = Arc::new(AtomicUsize::new(0));
    let seen = count.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            seen.fetch_add(1, Ordering::SeqCst);
            let _ = stream.set_read_timeout(Some(Duration::from_millis(300)));
            let mut buf = [0u8; 65536];
            let _ = stream.read(&mut buf);
            let body = r#"{"error":"stub"}"#;
            let _ = write!(
                stream,
                "HTTP/1.1 400 Bad Request\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (port, count)
}

fn offline_guarantee(fx: &FixtureDir, work: &Path) -> Check {
    let (port, connections) = counting_stub();
    let config = json!({
        "data_dir": "data",
        "transcription": {
            "kind": "remote_api",
            "endpoint_url": format!("http://x.test:{port}/v1/audio/transcriptions"),
            "model_name": "whisper-1",
            "max_retries": 0
        },
        "summarizer": {
            "kind": "remote_api",
            "endpoint_url": format!("http://x.test:{port}/v1/chat/completions"),
            "model_name": "gpt-3.5-turbo",
            "max_retries": 0
        },
        "network": {"resolve_all_to": "127.0.0.1"}
    });
    let config_path = work.join("offline.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).map_err(|e| e.to_string())?;
    let fixtures = path_str(fx.transcripts.parent().unwrap());
    let recording = path_str(&fx.recordings[0]);

    let run = anamnesa(&[
        "process",
        recording,
        "--backend=fixture",
        "--config",
        path_str(&config_path),
        "--fixtures",
        fixtures,
        "--out",
        path_str(&work.join("offline-fixture")),
    ]);
    ensure(run.status.success(), || {
        String::from_utf8_lossy(&run.stderr).into_owned()
    })?;
    let offline = connections.load(Ordering::SeqCst);
    ensure(offline == 0, || format!("fixture run opened {offline} connection(s)"))?;

    // Positive control: the same config with remote backends reaches the stub.
    let run = anamnesa(&[
        "process",
        recording,
        "--backend=remote",
        "--config",
        path_str(&config_path),
        "--out",
        path_str(&work.join("offline-remote")),
    ]);
    ensure(run.status.code() == Some(2), || {
        format!("remote run exit {:?}", run.status.code())
    })?;
    let online = connections.load(Ordering::SeqCst);
    ensure(online > 0, || {
        "remote control run made no connection; the stub cannot observe traffic".into()
    })?;
    Ok(format!("fixture run: 0 connections; remote control run: {online}"))
}

fn main() -> ExitCode {
    let work = tempfile::tempdir().unwrap();
    let fx = write_fixture_dir(&work.path().join("fixtures")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);

    let checks: Vec<(&str, Check)> = vec![
        ("fixture end-to-end", fixture_end_to_end(&fx, work.path())),
        ("schema suite", schema_suite(&mut rng)),
        ("resampler oracle", resampler_oracle(&mut rng)),
        ("json recovery oracle", json_recovery_oracle(&mut rng)),
        ("timing additivity", timing_additivity(work.path())),
        ("cost arithmetic", cost_arithmetic(&mut rng)),
        ("state machine", state_machine(work.path())),
        ("offline guarantee", offline_guarantee(&fx, work.path())),
    ];
    let mut failed = Vec::new();
    for (name, result) in &checks {
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(*name);
            }
        }
    }
    println!(
        "acceptance: {} passed, {} failed",
        checks.len() - failed.len(),
        failed.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
