use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::warn;

use ctc_wfst::boost::{load_boost_table, BoostTable};
use ctc_wfst::decoder::{
    decode_batch_with_boost, DecoderConfig, DecodingGraph, DEFAULT_BEAM, DEFAULT_MAX_ACTIVE,
};
use ctc_wfst::logits::LogLikelihoods;
use ctc_wfst::queueing::{md1_latency, rtfx, simulate_md1, Md1Params};
use ctc_wfst::streaming::{
    simulate_streams, BatcherConfig, PoolConfig, ServiceTime, SimStream, StreamSimConfig,
};
use ctc_wfst::topology::{
    build_g_arpa, build_l, build_t, build_tlg, read_lexicon, ArpaModel, Topology, UnitInventory,
};
use ctc_wfst::wfst::{read_fst_text, write_fst_text, SymbolTable, Wfst};

#[derive(Parser)]
#[command(
    name = "ctc-wfst",
    version,
    about = "Build CTC decoding graphs and decode log-likelihoods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the token topology T.
    BuildT {
        #[arg(long)]
        units: PathBuf,
        #[arg(long)]
        blank: String,
        /// `normal` or `compact`.
        #[arg(long)]
        topology: Topology,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the lexicon transducer L.
    BuildL {
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        units: PathBuf,
        #[arg(long)]
        words: PathBuf,
        #[arg(long, default_value = "<blk>")]
        blank: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the grammar acceptor G from an ARPA model.
    BuildG {
        #[arg(long)]
        arpa: PathBuf,
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compose T, L and G into the decoding graph.
    ComposeTlg {
        #[arg(long)]
        t: PathBuf,
        #[arg(long)]
        l: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode every .logf file in a directory.
    Decode {
        #[command(flatten)]
        input: DecodeInput,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Transcript file; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate chunked streams served by the dynamic batcher.
    StreamSim {
        #[command(flatten)]
        input: DecodeInput,
        #[arg(long, default_value_t = 60)]
        chunk_frames: usize,
        /// Number of streams; files are reused when there are fewer.
        #[arg(long)]
        streams: Option<usize>,
        /// Chunks per second per stream.
        #[arg(long, default_value_t = 2.5)]
        rate: f64,
        #[arg(long, default_value_t = 256)]
        max_batch: usize,
        #[arg(long, default_value_t = 10.0)]
        max_wait_ms: f64,
        /// Fixed service time per step instead of the measured one.
        #[arg(long)]
        service_ms: Option<f64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Queueing model and simulator.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Args)]
struct DecodeInput {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    words: PathBuf,
    #[arg(long)]
    logits_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BEAM)]
    beam: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ACTIVE)]
    max_active: usize,
    #[arg(long, default_value_t = 1.0)]
    acoustic_scale: f64,
    /// Word boost file, `word<TAB>magnitude` per line.
    #[arg(long)]
    boost: Option<PathBuf>,
    /// Audio duration of one frame.
    #[arg(long, default_value_t = 10.0)]
    frame_shift_ms: f64,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Closed-form M/D/1 latency.
    Md1 {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
    },
    /// Discrete-event single-server simulation.
    Sim {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        service_ms: f64,
        #[arg(long, default_value_t = 200_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_fst(path: &Path) -> Result<Wfst> {
    read_fst_text(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_symbols(path: &Path) -> Result<SymbolTable> {
    SymbolTable::read_text(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn inventory(units: &Path, blank: &str) -> Result<UnitInventory> {
    UnitInventory::new(read_symbols(units)?, blank).context("building unit inventory")
}

/// (utterance id, frames) for every `.logf` file, sorted by file name.
fn read_logits_dir(dir: &Path) -> Result<Vec<(String, LogLikelihoods)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    paths.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "logf"));
    paths.sort();
    if paths.is_empty() {
        bail!("no .logf files in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let id = p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            let file = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let frames = LogLikelihoods::read_from(io::BufReader::new(file))
                .with_context(|| format!("reading {}", p.display()))?;
            Ok((id, frames))
        })
        .collect()
}

struct Loaded {
    graph: Arc<DecodingGraph>,
    words: SymbolTable,
    utterances: Vec<(String, LogLikelihoods)>,
    config: DecoderConfig,
    boost: Option<Arc<BoostTable>>,
}

fn load(input: &DecodeInput) -> Result<Loaded> {
    let config = DecoderConfig {
        beam: input.beam,
        max_active: input.max_active,
        acoustic_scale: input.acoustic_scale,
        ..DecoderConfig::default()
    };
    config.validate()?;
    let graph = Arc::new(DecodingGraph::new(read_fst(&input.graph)?)?);
    let words = read_symbols(&input.words)?;
    let boost = match &input.boost {
        Some(path) => {
            let (table, skipped) = load_boost_table(&read(path)?, &words)
                .with_context(|| format!("parsing {}", path.display()))?;
            if skipped.count() > 0 {
                warn!(
                    "{} boost words not in the word table: {}",
                    skipped.count(),
                    skipped.words.join(" ")
                );
            }
            if table.max_magnitude() > config.beam / 2.0 {
                warn!(
                    "boost magnitude {} exceeds beam/2 = {}; expect repeated-word output",
                    table.max_magnitude(),
                    config.beam / 2.0
                );
            }
            Some(Arc::new(table))
        }
        None => None,
    };
    eprintln!(
        "beam={:.1} max-active={} acoustic-scale={} boost-words={}",
        config.beam,
        config.max_active,
        config.acoustic_scale,
        boost.as_ref().map_or(0, |b| b.len())
    );
    let utterances = read_logits_dir(&input.logits_dir)?;
    Ok(Loaded {
        graph,
        words,
        utterances,
        config,
        boost,
    })
}

fn decode(input: &DecodeInput, workers: usize, out: Option<&Path>) -> Result<bool> {
    let loaded = load(input)?;
    let frames: Vec<LogLikelihoods> = loaded.utterances.iter().map(|(_, f)| f.clone()).collect();
    let started = Instant::now();
    let results = decode_batch_with_boost(
        &loaded.graph,
        &loaded.config,
        loaded.boost.as_ref(),
        &frames,
        workers,
    )?;
    let wall = started.elapsed().as_secs_f64();

    let mut text = String::new();
    let mut ok = true;
    for ((id, _), result) in loaded.utterances.iter().zip(&results) {
        match result {
            Ok(hyp) => {
                text += &format!("{id}\t{}\t{:.6}\n", hyp.text(&loaded.words), hyp.total_cost)
            }
            Err(e) => {
                ok = false;
                eprintln!("error: {id}: {e}");
            }
        }
    }
    write_output(out, &text)?;

    let total_frames: usize = frames.iter().map(LogLikelihoods::num_frames).sum();
    let audio = total_frames as f64 * input.frame_shift_ms / 1e3;
    let speed = rtfx(audio, wall.max(1e-9))?;
    eprintln!(
        "decoded {} utterances, {total_frames} frames, {audio:.2}s audio in {wall:.3}s, RTFx {speed:.1}",
        results.len()
    );
    Ok(ok)
}

#[allow(clippy::too_many_arguments)]
fn stream_sim(
    input: &DecodeInput,
    chunk_frames: usize,
    streams: Option<usize>,
    rate: f64,
    max_batch: usize,
    max_wait_ms: f64,
    service_ms: Option<f64>,
    workers: usize,
    out_dir: &Path,
) -> Result<bool> {
    if !(max_wait_ms >= 0.0 && max_wait_ms.is_finite()) {
        bail!("--max-wait-ms must be non-negative");
    }
    let loaded = load(input)?;
    let n = streams.unwrap_or(loaded.utterances.len());
    let files = loaded.utterances.len();
    let sim_streams: Vec<SimStream> = (0..n)
        .map(|i| {
            let (id, frames) = &loaded.utterances[i % files];
            let name = if i < files {
                id.clone()
            } else {
                format!("{id}-{}", i / files)
            };
            SimStream {
                name,
                frames: frames.clone(),
                boost: loaded.boost.clone(),
            }
        })
        .collect();
    let config = StreamSimConfig {
        pool: PoolConfig {
            decoder: loaded.config,
            batcher: BatcherConfig {
                max_batch,
                max_wait: Duration::from_secs_f64(max_wait_ms / 1e3),
            },
            max_streams: n,
            workers,
        },
        chunk_frames,
        rate,
        frame_shift_ms: input.frame_shift_ms,
        service: service_ms.map_or(ServiceTime::Measured, |ms| ServiceTime::Fixed(ms / 1e3)),
    };
    let report = simulate_streams(loaded.graph.clone(), &config, &sim_streams)?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut ok = true;
    for t in &report.transcripts {
        let line = match &t.result {
            Ok(hyp) => format!("{}\t{:.6}\n", hyp.text(&loaded.words), hyp.total_cost),
            Err(e) => {
                ok = false;
                eprintln!("error: {}: {e}", t.name);
                continue;
            }
        };
        let path = out_dir.join(format!("{}.txt", t.name));
        fs::write(&path, line).with_context(|| format!("writing {}", path.display()))?;
    }
    let json = serde_json::to_string_pretty(&report.stats)? + "\n";
    let path = out_dir.join("latency.json");
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    eprintln!(
        "{n} streams, {} chunks in {} steps: avg total {:.2} ms, P99 {:.2} ms, RTFx {:.1}",
        report.samples.len(),
        report.steps,
        report.stats.avg_total_ms,
        report.stats.p99_total_ms,
        report.stats.rtfx
    );
    Ok(ok)
}

fn bench(command: &BenchCommand) -> Result<()> {
    match *command {
        BenchCommand::Md1 { lambda, mu } => {
            let p = Md1Params { lambda, mu };
            let l = md1_latency(p)?;
            let json = serde_json::json!({
                "lambda": lambda,
                "mu": mu,
                "utilization": p.utilization(),
                "avg_compute_ms": l.compute * 1e3,
                "avg_queue_ms": l.queue * 1e3,
                "avg_total_ms": l.total * 1e3,
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
        }
        BenchCommand::Sim {
            lambda,
            service_ms,
            n,
            seed,
        } => {
            let report = simulate_md1(lambda, service_ms / 1e3, n, seed)?;
            if report.unstable {
                warn!(
                    "unstable queue: lambda * D = {:.3} >= 1, queue wait grows with n (window means {:?})",
                    lambda * service_ms / 1e3,
                    report.queue_trend_ms
                );
            }
            println!("{}", serde_json::to_string_pretty(&report.stats)?);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::BuildT {
            units,
            blank,
            topology,
            out,
        } => {
            let inv = inventory(&units, &blank)?;
            write_output(out.as_deref(), &write_fst_text(&build_t(&inv, topology)))?;
        }
        Command::BuildL {
            lexicon,
            units,
            words,
            blank,
            out,
        } => {
            let inv = inventory(&units, &blank)?;
            let words = read_symbols(&words)?;
            let entries = read_lexicon(&read(&lexicon)?, &inv)
                .with_context(|| format!("parsing {}", lexicon.display()))?;
            write_output(
                out.as_deref(),
                &write_fst_text(&build_l(&entries, &inv, &words)?),
            )?;
        }
        Command::BuildG { arpa, words, out } => {
            let words = read_symbols(&words)?;
            let model = ArpaModel::parse(&read(&arpa)?)
                .with_context(|| format!("parsing {}", arpa.display()))?;
            let grammar = build_g_arpa(&model, &words)?;
            if grammar.dropped_ngrams > 0 {
                warn!(
                    "dropped {} n-grams with out-of-vocabulary words",
                    grammar.dropped_ngrams
                );
            }
            write_output(out.as_deref(), &write_fst_text(&grammar.fst))?;
        }
        Command::ComposeTlg { t, l, g, out } => {
            let tlg = build_tlg(&read_fst(&t)?, &read_fst(&l)?, &read_fst(&g)?)?;
            write_output(out.as_deref(), &write_fst_text(&tlg))?;
        }
        Command::Decode {
            input,
            workers,
            out,
        } => return decode(&input, workers, out.as_deref()),
        Command::StreamSim {
            input,
            chunk_frames,
            streams,
            rate,
            max_batch,
            max_wait_ms,
            service_ms,
            workers,
            out_dir,
        } => {
            return stream_sim(
                &input,
                chunk_frames,
                streams,
                rate,
                max_batch,
                max_wait_ms,
                service_ms,
                workers,
                &out_dir,
            )
        }
        Command::Bench { command } => bench(&command)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
