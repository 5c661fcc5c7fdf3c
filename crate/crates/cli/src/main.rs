//! `anamnesa`: process a recording without the service, check mapping
//! files, time the pipeline on fixtures, or run the HTTP service.
//!
//! Exit codes: 0 success, 1 usage error, 2 pipeline or configuration failure.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anamnesa_core::audio::{ingest, AudioClip, QualityPolicy, RawAudioFile};
use anamnesa_core::form_mapper::{load_mapping, FieldMapping};
use anamnesa_core::orchestrator::{
    write_artifacts, Orchestrator, Pipeline, PriceConfig, ServiceConfig, SessionRecord, StageTimings,
};
use anamnesa_core::scenario::{self, SUMMARIES_FILE, TRANSCRIPTS_FILE};
use anamnesa_core::summarizer::{FixtureChat, PromptConfig, Summarizer, SummarizerBackendDescriptor};
use anamnesa_core::transcription::{BackendKind, FixtureTranscriber, Transcriber, TranscriptionBackendDescriptor};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "anamnesa", version, about = "Consultation audio to EHR anamnesis fill plans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Fixture,
    Remote,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline on one WAV file and write its artifacts.
    Process {
        audio: PathBuf,
        #[arg(long, value_enum, default_value = "fixture")]
        backend: Backend,
        /// Service config file; backends, prices, quality policy.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory holding transcripts.json and summaries.json.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Mapping file overriding the config's.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a mapping file and print its entry count.
    ValidateMapping { path: PathBuf },
    /// Time the pipeline over fixture recordings.
    Bench {
        #[arg(long)]
        runs: u32,
        /// Directory with *.wav recordings and fixture registries; the
        /// built-in scenarios when absent.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

/// A failed command: exit code plus message for stderr.
struct Failure(u8, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(1, msg.into())
}

fn failed(msg: impl Into<String>) -> Failure {
    Failure(2, msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime starts");
    let result = runtime.block_on(async {
        match cli.command {
            Command::Process {
                audio,
                backend,
                config,
                fixtures,
                mapping,
                out,
            } => {
                process(
                    &audio,
                    backend,
                    config.as_deref(),
                    fixtures.as_deref(),
                    mapping.as_deref(),
                    &out,
                )
                .await
            }
            Command::ValidateMapping { path } => validate_mapping(&path),
            Command::Bench { runs, fixtures } => bench(runs, fixtures.as_deref()).await,
            Command::Serve { config, bind } => serve(config.as_deref(), bind).await,
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ServiceConfig, Failure> {
    match path {
        Some(p) if !p.exists() => Err(usage(format!("config file {} does not exist", p.display()))),
        Some(p) => ServiceConfig::load(p).map_err(|e| failed(e.to_string())),
        None => Ok(ServiceConfig::fixture("anamnesa-data")),
    }
}

fn read_audio(path: &Path) -> Result<RawAudioFile, Failure> {
    if !path.is_file() {
        return Err(usage(format!(
            "audio file {} does not exist\n\nusage: anamnesa process <AUDIO> --out <DIR> [--backend fixture|remote]",
            path.display()
        )));
    }
    let bytes = std::fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    RawAudioFile::from_named_bytes(bytes, name).map_err(|e| failed(format!("stage ingest: {e}")))
}

async fn process(
    audio: &Path,
    backend: Backend,
    config: Option<&Path>,
    fixtures: Option<&Path>,
    mapping: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let file = read_audio(audio)?;
    if let Some(m) = mapping.filter(|m| !m.exists()) {
        return Err(usage(format!("mapping file {} does not exist", m.display())));
    }
    let mut config = load_config(config)?;
    if let Some(m) = mapping {
        config.mapping_path = Some(m.to_path_buf());
    }
    match backend {
        Backend::Fixture => {
            config.transcription.kind = BackendKind::Fixture;
            config.summarizer.kind = BackendKind::Fixture;
            if let Some(dir) = fixtures {
                config.transcription.fixture_path = Some(dir.join(TRANSCRIPTS_FILE));
                config.summarizer.fixture_path = Some(dir.join(SUMMARIES_FILE));
            }
        }
        Backend::Remote => {
            config.transcription.kind = BackendKind::RemoteApi;
            config.summarizer.kind = BackendKind::RemoteApi;
        }
    }
    config.validate().map_err(|e| failed(e.to_string()))?;
    let pipeline = Pipeline::from_config(&config).map_err(|e| failed(e.to_string()))?;

    let policy = config.quality_policy;
    let (clip, _) = tokio::task::spawn_blocking(move || ingest(&file, &policy))
        .await
        .expect("ingest task panicked")
        .map_err(|e| failed(format!("stage ingest: {e}")))?;
    let record = run_clip(&pipeline, &clip).await;

    write_artifacts(out, &record).map_err(|e| failed(e.to_string()))?;
    if let Some(f) = &record.failure {
        return Err(failed(format!("stage {}: {}: {}", f.stage, f.error_code, f.message)));
    }
    let plan = record.fill_plan.as_ref().expect("plan_ready record has a plan");
    println!(
        "plan_ready: {} entries, {} warning(s), {:.3} s",
        plan.entries.len(),
        plan.warnings.len(),
        record.timings.total_s
    );
    for w in &plan.warnings {
        println!("warning: {w}");
    }
    println!("artifacts: {}", out.display());
    Ok(())
}

async fn run_clip(pipeline: &Pipeline, clip: &AudioClip) -> SessionRecord {
    let mut record = SessionRecord::with_audio(clip);
    pipeline.run_to_end(&mut record, Some(clip)).await;
    record
}

fn validate_mapping(path: &Path) -> Result<(), Failure> {
    if !path.is_file() {
        return Err(usage(format!("mapping file {} does not exist", path.display())));
    }
    let text = std::fs::read_to_string(path).map_err(|e| failed(format!("{}: {e}", path.display())))?;
    let mapping = load_mapping(&text).map_err(|e| failed(format!("{e:?}: {e}")))?;
    println!("{} entries", mapping.len());
    Ok(())
}

/// Named recordings plus fixture backends that know them.
type BenchInputs = (Vec<(String, RawAudioFile)>, FixtureTranscriber, FixtureChat);

fn bench_inputs(fixtures: Option<&Path>) -> Result<BenchInputs, Failure> {
    match fixtures {
        None => {
            let (transcripts, summaries) = scenario::fixture_backends();
            let files = scenario::SCENARIOS
                .iter()
                .map(|s| {
                    let file = RawAudioFile::from_named_bytes(s.recording().to_wav(), format!("{}.wav", s.name))
                        .expect("synthesized WAV is well formed");
                    (s.name.to_string(), file)
                })
                .collect();
            Ok((files, transcripts, summaries))
        }
        Some(dir) => {
            let transcripts =
                FixtureTranscriber::load(&dir.join(TRANSCRIPTS_FILE)).map_err(|e| failed(e.to_string()))?;
            let summaries = FixtureChat::load(&dir.join(SUMMARIES_FILE)).map_err(|e| failed(e.to_string()))?;
            let mut paths: Vec<_> = std::fs::read_dir(dir)
                .map_err(|e| failed(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(failed(format!("no .wav recordings in {}", dir.display())));
            }
            let files = paths
                .iter()
                .map(|p| read_audio(p).map(|f| (p.display().to_string(), f)))
                .collect::<Result<_, _>>()?;
            Ok((files, transcripts, summaries))
        }
    }
}

async fn bench(runs: u32, fixtures: Option<&Path>) -> Result<(), Failure> {
    if runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    if let Some(dir) = fixtures.filter(|d| !d.is_dir()) {
        return Err(usage(format!("fixture directory {} does not exist", dir.display())));
    }
    let (files, transcripts, summaries) = bench_inputs(fixtures)?;
    let pipeline = Pipeline::new(
        Transcriber::with_backend(TranscriptionBackendDescriptor::fixture(None), Arc::new(transcripts)),
        Summarizer::with_backend(
            SummarizerBackendDescriptor::fixture(None),
            PromptConfig::default(),
            Arc::new(summaries),
        ),
        FieldMapping::default_mapping(),
        PriceConfig::default(),
    );

    let policy = QualityPolicy::default();
    let mut clips = Vec::new();
    for (name, file) in &files {
        let (clip, _) = ingest(file, &policy).map_err(|e| failed(format!("{name}: stage ingest: {e}")))?;
        clips.push((name, clip));
    }

    let mut all = Vec::new();
    for _ in 0..runs {
        for (name, clip) in &clips {
            let record = run_clip(&pipeline, clip).await;
            if let Some(f) = &record.failure {
                return Err(failed(format!(
                    "{name}: stage {}: {}: {}",
                    f.stage, f.error_code, f.message
                )));
            }
            all.push(record.timings);
        }
    }
    print!("{}", bench_report(runs, clips.len(), &all));
    Ok(())
}

type Column = fn(&StageTimings) -> f64;

fn bench_report(runs: u32, recordings: usize, timings: &[StageTimings]) -> String {
    let n = timings.len() as f64;
    let column = |f: Column| {
        let mean = timings.iter().map(f).sum::<f64>() / n;
        let max = timings.iter().map(f).fold(0.0, f64::max);
        (mean, max)
    };
    let rows: [(&str, Column); 4] = [
        ("transcription", |t| t.transcribe_s),
        ("summarization", |t| t.summarize_s),
        ("form_population", |t| t.fill_s),
        ("total", |t| t.total_s),
    ];
    let mut out = format!("runs: {} ({runs} x {recordings} recording(s))\n", timings.len());
    out.push_str(&format!("{:<16} {:>12} {:>12}\n", "stage", "mean_s", "max_s"));
    for (name, f) in rows {
        let (mean, max) = column(f);
        out.push_str(&format!("{name:<16} {mean:>12.6} {max:>12.6}\n"));
    }
    out
}

async fn serve(config: Option<&Path>, bind: SocketAddr) -> Result<(), Failure> {
    let config = load_config(config)?;
    let orchestrator = Orchestrator::from_config(&config).map_err(|e| failed(e.to_string()))?;
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| failed(format!("cannot bind {bind}: {e}")))?;
    eprintln!(
        "listening on http://{}",
        listener.local_addr().map_err(|e| failed(e.to_string()))?
    );
    anamnesa_service::serve(listener, Arc::new(orchestrator))
        .await
        .map_err(|e| failed(format!("service stopped: {e}")))
}
