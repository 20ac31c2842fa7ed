use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use filler_gap_cli::backends::{default_threads, BackendSpec};
use filler_gap_cli::commands::{self, Failure, RunOptions};

#[derive(Parser)]
#[command(
    name = "filler-gap",
    version,
    about = "Filler-gap dependency experiments on word-level language model surprisal"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an interpolated modified Kneser-Ney model and write it as ARPA.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        order: usize,
        /// Tokens seen fewer times become <unk>.
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every condition sentence of an experiment into a surprisal archive.
    Run {
        #[arg(long)]
        experiment: PathBuf,
        /// ngram:PATH, uniform:V, oracle:PATH or exec:CMD
        #[arg(long)]
        backend: BackendSpec,
        /// Archive path; defaults to `<experiment stem>.tsv.gz`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        allow_nondeterministic: bool,
    },
    /// Run analyses on an archive, writing TSV tables and SVG figures.
    Analyze {
        #[arg(long)]
        archive: PathBuf,
        /// Analysis name; repeat for several. All declared analyses by default.
        #[arg(long)]
        analysis: Vec<String>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Analyze even if inputs changed since the run.
        #[arg(long)]
        force: bool,
    },
    /// Run all analyses and write a markdown report with figures.
    Report {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Score sentences (one per line, whitespace-tokenized) and print word surprisals.
    Score {
        #[arg(long)]
        backend: BackendSpec,
        /// Input file; standard input when omitted.
        input: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Serve a backend over the adapter protocol on stdin/stdout.
    Serve {
        #[arg(long)]
        backend: BackendSpec,
    },
}

fn default_archive(experiment: &Path) -> PathBuf {
    let stem = experiment.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or("run".into());
    PathBuf::from(format!("{stem}.tsv.gz"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<Failure>()) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train { corpus, order, min_count, out } => {
            let s = commands::train(&corpus, order, min_count, &out)?;
            println!("vocabulary: {}", s.vocab_size);
            for (k, n) in s.ngram_counts.iter().enumerate() {
                println!("{}-grams: {n}", k + 1);
            }
            println!("wrote {}", out.display());
        }
        Command::Run { experiment, backend, out, threads, allow_nondeterministic } => {
            let archive = out.unwrap_or_else(|| default_archive(&experiment));
            let options = RunOptions { threads: threads.unwrap_or_else(default_threads), allow_nondeterministic };
            let m = commands::run(&experiment, &backend, &archive, &options)?;
            println!("{}: scored with {} ({})", m.experiment, m.backend, m.backend_name);
            println!("wrote {}", archive.display());
        }
        Command::Analyze { archive, analysis, out, force } => {
            let run = commands::load_run(&archive, force)?;
            for a in commands::analyze(&run, &analysis, &out)? {
                println!("## {}", a.name);
                print!("{}", a.summary);
                println!("wrote {} files to {}", a.files.len(), a.dir.display());
            }
        }
        Command::Report { archive, out, force } => {
            let run = commands::load_run(&archive, force)?;
            let path = commands::report(&run, &archive, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Score { backend, input, threads } => {
            let threads = threads.unwrap_or_else(default_threads);
            let stdout = std::io::stdout().lock();
            match input {
                Some(p) => {
                    let f = std::fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
                    commands::score(&backend, BufReader::new(f), stdout, threads)?;
                }
                None => commands::score(&backend, std::io::stdin().lock(), stdout, threads)?,
            }
        }
        Command::Serve { backend } => {
            let mut stdout = std::io::stdout().lock();
            commands::serve(&backend, std::io::stdin().lock(), &mut stdout)?;
            stdout.flush()?;
        }
    }
    Ok(())
}
