use clap::{Parser, Subcommand};
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use tts_frontend::error::Result;
use tts_frontend::pipeline::{
    apply_train_overrides, eval_task, g2p_ablation, rows_to_tsv, train_task, Frontend,
    PipelineConfig,
};

fn default_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/config/toy.toml")
}

/// English TTS front-end: text normalization, prosody prediction and
/// grapheme-to-phoneme conversion.
#[derive(Parser)]
#[command(name = "tts-frontend", version)]
struct Cli {
    /// Pipeline configuration (defaults to the bundled toy config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all randomness (overrides the config's training seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: raw text lines to normative phoneme-level TSV rows.
    Frontend {
        /// Input file (default: standard input), one sentence per line.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file (default: standard output).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Beam size for OOV phonemization (overrides the config).
        #[arg(long)]
        beam: Option<usize>,
        /// Directory holding {tn,pwpp,pos,polyphone,g2poov}.bin checkpoints.
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Text normalization only: raw lines to normalized lines.
    Normalize {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Grapheme-to-phoneme on normalized text: per-word phoneme rows.
    G2p {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Train one task head (tn, pwpp, pos, polyphone or g2poov).
    Train {
        task: String,
        #[arg(long)]
        corpus: PathBuf,
        /// Where to write the checkpoint.
        #[arg(long)]
        out: PathBuf,
        /// Continue from an existing checkpoint.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Evaluate a checkpoint: tn -> SER, pwpp -> per-level F1, g2poov ->
    /// WER (--sweep reports beam sizes 1/2/3/5/10), g2p -> staged ablation.
    Eval {
        task: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// For g2poov: report WER per beam size.
        #[arg(long)]
        sweep: bool,
        #[arg(long)]
        beam: Option<usize>,
        /// For g2p: directory with the task checkpoints.
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

fn read_lines(input: &Option<PathBuf>) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    match input {
        Some(path) => {
            for line in std::io::BufReader::new(std::fs::File::open(path)?).lines() {
                lines.push(line?);
            }
        }
        None => {
            for line in std::io::stdin().lock().lines() {
                lines.push(line?);
            }
        }
    }
    Ok(lines)
}

fn write_output(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(text.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn load_frontend(cfg: &PipelineConfig, models: &Option<PathBuf>) -> Result<Frontend> {
    let mut frontend = Frontend::from_config(cfg)?;
    if let Some(dir) = models {
        frontend.load_models_dir(dir)?;
    }
    Ok(frontend)
}

fn run(cli: Cli) -> Result<()> {
    let config_path = cli.config.clone().unwrap_or_else(default_config);
    let mut cfg = PipelineConfig::load(&config_path)?;
    if let Some(seed) = cli.seed {
        cfg.train.seed = seed;
    }
    match cli.command {
        Command::Frontend {
            input,
            output,
            beam,
            models,
        } => {
            let mut frontend = load_frontend(&cfg, &models)?;
            if let Some(k) = beam {
                frontend.beam = k;
            }
            let lines = read_lines(&input)?;
            let mut blocks = Vec::new();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match frontend.frontend_line(line) {
                    Ok((rows, diagnostics)) => {
                        for d in diagnostics {
                            eprintln!("line {}: {d}", i + 1);
                        }
                        blocks.push(rows);
                    }
                    Err(e) => eprintln!("line {}: skipped: {e}", i + 1),
                }
            }
            if !blocks.is_empty() {
                write_output(&output, &rows_to_tsv(&blocks))?;
            } else {
                write_output(&output, "")?;
            }
        }
        Command::Normalize {
            input,
            output,
            models,
        } => {
            let frontend = load_frontend(&cfg, &models)?;
            let lines = read_lines(&input)?;
            let mut out = String::new();
            for (i, line) in lines.iter().enumerate() {
                match frontend.normalize_line(line) {
                    Ok(outcome) => {
                        for d in &outcome.diagnostics {
                            eprintln!("line {}: {d}", i + 1);
                        }
                        out.push_str(&outcome.text());
                        out.push('\n');
                    }
                    Err(e) => eprintln!("line {}: skipped: {e}", i + 1),
                }
            }
            write_output(&output, &out)?;
        }
        Command::G2p {
            input,
            output,
            beam,
            models,
        } => {
            let mut frontend = load_frontend(&cfg, &models)?;
            if let Some(k) = beam {
                frontend.beam = k;
            }
            let lines = read_lines(&input)?;
            let mut out = String::from("word\tphonemes\tprovenance\n");
            for (i, line) in lines.iter().enumerate() {
                let words: Vec<String> = line
                    .split_whitespace()
                    .map(|w| w.to_lowercase())
                    .collect();
                if words.is_empty() {
                    continue;
                }
                match frontend.g2p_words(&words) {
                    Ok((resolved, diagnostics)) => {
                        for d in diagnostics {
                            eprintln!("line {}: {d}", i + 1);
                        }
                        if i > 0 {
                            out.push('\n');
                        }
                        for w in resolved {
                            out.push_str(&format!(
                                "{}\t{}\t{}\n",
                                w.word,
                                w.phonemes.join(" "),
                                w.provenance
                            ));
                        }
                    }
                    Err(e) => eprintln!("line {}: skipped: {e}", i + 1),
                }
            }
            write_output(&output, &out)?;
        }
        Command::Train {
            task,
            corpus,
            out,
            init,
            epochs,
            lr,
            batch,
        } => {
            apply_train_overrides(&mut cfg, cli.seed, epochs, lr, batch);
            let (checkpoint, history) = train_task(&task, &corpus, &cfg, init.as_deref())?;
            checkpoint.save(&out)?;
            eprintln!(
                "trained `{task}` for {} epochs (final loss {:.6}); checkpoint: {}",
                history.len(),
                history.last().copied().unwrap_or(f64::NAN),
                out.display()
            );
            let mut log = String::new();
            for (epoch, loss) in history.iter().enumerate() {
                log.push_str(&format!("{epoch}\t{loss}\n"));
            }
            std::fs::write(out.with_extension("loss.tsv"), log)?;
        }
        Command::Eval {
            task,
            corpus,
            checkpoint,
            sweep,
            beam,
            models,
        } => {
            let beam = beam.unwrap_or(cfg.beam);
            let rows = if task == "g2p" {
                let frontend = load_frontend(&cfg, &models)?;
                let eval =
                    tts_frontend::pipeline::load_ablation_corpus(&cfg, &corpus)?;
                g2p_ablation(
                    &frontend.lexicon,
                    &frontend.homographs,
                    frontend.g2poov.as_ref(),
                    frontend.pos.as_ref(),
                    frontend.polyphone.as_ref(),
                    beam,
                    &eval,
                )?
            } else {
                eval_task(&task, &corpus, checkpoint.as_deref(), &cfg, sweep, beam)?
            };
            let mut out = String::from("metric\tvalue\n");
            for row in rows {
                out.push_str(&format!("{}\t{:.6}\n", row.name, row.value));
            }
            write_output(&None, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
