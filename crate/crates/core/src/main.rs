use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use marginal_risk::pipeline::{
    emit_report, run_games_only, run_pipeline, write_outputs, Format, ReportBundle, RunConfig,
};
use marginal_risk::Result;

#[derive(Parser)]
#[command(name = "mrisk", version, about = "Compare a new system against an accepted baseline without ground-truth labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Overrides {
    /// Replace the configured run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for trials and matches (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every selected phase and write the report, trials and transcripts.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-render a finished run's report.
    Report {
        run_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Human)]
        format: FormatArg,
    },
    /// Play the configured games on the divergence hot-list only.
    Games {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config and its referenced files without running trials.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Machine,
    Human,
}

fn load(path: &Path, o: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = o.seed {
        cfg.run.seed = s;
    }
    if let Some(w) = o.workers {
        cfg.run.workers = w;
    }
    if let Some(out) = &o.out {
        cfg.run.out = Some(out.clone());
    }
    Ok(cfg)
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let out = run_pipeline(&cfg)?;
            let dir = cfg.out_dir();
            write_outputs(&out, &dir)?;
            let a = &out.bundle.audit.totals;
            println!(
                "{}: {} metrics selected, {} reported, {} skipped ({} excluded); report in {}",
                out.bundle.run_name,
                a.selected,
                a.reported,
                a.skipped,
                a.excluded,
                dir.display()
            );
        }
        Command::Report { run_dir, format } => {
            let bundle = ReportBundle::read(&run_dir.join("report.json"))?;
            match format {
                FormatArg::Machine => emit(&bundle.render(Format::Machine)?),
                FormatArg::Human => {
                    let p = emit_report(&bundle, Format::Human, &run_dir)?;
                    emit(&bundle.render(Format::Human)?);
                    eprintln!("wrote {}", p.display());
                }
            }
        }
        Command::Games { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let (hot, games) = run_games_only(&cfg)?;
            let dir = cfg.out_dir();
            let bundle_dir = dir.join("matches");
            std::fs::create_dir_all(&bundle_dir).map_err(|e| marginal_risk::Error::io(&bundle_dir, e))?;
            for (spec, t) in &games.tournaments {
                for m in &t.matches {
                    marginal_risk::games::write_match(&bundle_dir.join(spec.kind.as_str()), m)?;
                }
            }
            games.section.combined.write_csv(&bundle_dir)?;
            let summary = serde_json::json!({ "hotlist": hot, "games": games.section });
            let p = dir.join("games.json");
            std::fs::write(&p, serde_json::to_string_pretty(&summary)?).map_err(|e| marginal_risk::Error::io(&p, e))?;
            let copeland = &games.section.copeland.scores;
            for (sys, s) in copeland {
                println!("{sys}\tcopeland {s}");
            }
            println!("transcripts in {}", bundle_dir.display());
        }
        Command::Validate { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            cfg.validate()?;
            cfg.build_systems()?;
            marginal_risk::pipeline::load_dataset(&cfg.resolve(&cfg.dataset.path))?;
            println!("{}: config ok", config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage mistakes are configuration errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
