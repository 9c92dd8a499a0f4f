use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use uwdg::study::{
    self, diagnose_cmd, run_convergence_study, run_energy_study, run_paper_tables, run_projection_study,
    run_soliton, Format, StudyConfig, StudyKind,
};
use uwdg::Error;

#[derive(Parser)]
#[command(
    name = "uwdg",
    version,
    about = "Ultra-weak DG studies for the nonlinear Schrodinger equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Study config file
    #[arg(long)]
    config: PathBuf,
    /// Output file (defaults to the config's `out`, else stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Projection error table
    Project(Common),
    /// Scheme error table against an exact solution
    Converge(Common),
    /// Energy history
    Energy(Common),
    /// Soliton run with snapshots
    Soliton(Common),
    /// Projection case, eigenvalues, existence and predicted order
    Diagnose(Common),
    /// Reproduce the bundled tables and compare with their reference values
    PaperTables {
        /// Table name prefixes, e.g. table05 (repeatable)
        #[arg(long)]
        only: Vec<String>,
        /// Skip meshes with more cells than this
        #[arg(long)]
        max_n: Option<usize>,
        /// Run a bundled config file instead of the built-in copy
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn set_jobs(jobs: Option<usize>) -> Result<(), Error> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(())
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json<T: serde::Serialize>(v: &T, w: &mut dyn Write) -> Result<(), Error> {
    serde_json::to_writer_pretty(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

fn load(c: &Common, expect: StudyKind) -> Result<(StudyConfig, Format, Option<PathBuf>), Error> {
    let cfg = StudyConfig::from_path(&c.config)?;
    if cfg.kind != expect {
        return Err(Error::Config(format!(
            "{} holds a {} study, not {}",
            c.config.display(),
            cfg.kind.as_str(),
            expect.as_str()
        )));
    }
    cfg.validate()?;
    let format = match c.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => cfg.format,
    };
    let out = c.out.clone().or_else(|| cfg.out.clone());
    set_jobs(c.jobs)?;
    Ok((cfg, format, out))
}

fn table_cmd(c: &Common, kind: StudyKind) -> Result<(), Error> {
    let (cfg, format, out) = load(c, kind)?;
    let table = if kind == StudyKind::Projection {
        run_projection_study(&cfg)?
    } else {
        run_convergence_study(&cfg)?
    };
    if out.is_some() {
        print!("{}", table.to_text());
    }
    let mut w = sink(out.as_deref())?;
    match format {
        Format::Csv => table.write_csv(&mut w)?,
        Format::Json => write_json(&table, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Project(c) => table_cmd(&c, StudyKind::Projection)?,
        Command::Converge(c) => table_cmd(&c, StudyKind::Convergence)?,
        Command::Energy(c) => {
            let (cfg, format, out) = load(&c, StudyKind::Energy)?;
            let e = run_energy_study(&cfg)?;
            eprint!("{}", e.summary());
            let mut w = sink(out.as_deref())?;
            match format {
                Format::Csv => e.write_csv(&mut w, cfg.sample_every)?,
                Format::Json => write_json(&e.thinned(cfg.sample_every), &mut w)?,
            }
            w.flush()?;
        }
        Command::Soliton(c) => {
            let (cfg, format, out) = load(&c, StudyKind::Soliton)?;
            let r = run_soliton(&cfg)?;
            eprint!("{}", r.summary());
            if let Some(p) = &out {
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("soliton");
                for (i, snap) in r.snapshots.iter().enumerate() {
                    let name = p.with_file_name(format!("{stem}_t{}.csv", snap.t));
                    r.write_snapshot_csv(i, BufWriter::new(File::create(&name)?))?;
                    eprintln!("wrote {}", name.display());
                }
            }
            let mut w = sink(out.as_deref())?;
            match format {
                Format::Csv => r.write_summary_csv(&mut w)?,
                Format::Json => write_json(&r, &mut w)?,
            }
            w.flush()?;
        }
        Command::Diagnose(c) => {
            let (cfg, format, out) = load(&c, StudyKind::Diagnose)?;
            let reps = diagnose_cmd(&cfg)?;
            let mut w = sink(out.as_deref())?;
            match format {
                // the report is JSON unless CSV is asked for explicitly
                Format::Csv if c.format.is_some() => study::run::write_diagnose_csv(&reps, &mut w)?,
                _ => write_json(&reps, &mut w)?,
            }
            w.flush()?;
        }
        Command::PaperTables {
            only,
            max_n,
            config,
            out,
            format,
            jobs,
        } => {
            set_jobs(jobs)?;
            let report = match config {
                Some(path) => {
                    let mut cfg = StudyConfig::from_path(&path)?;
                    let name = path
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or("config")
                        .to_string();
                    if let Some(m) = max_n {
                        study::paper::restrict(&mut cfg, m);
                    }
                    let t = match cfg.kind {
                        StudyKind::Projection => run_projection_study(&cfg)?,
                        StudyKind::Convergence => run_convergence_study(&cfg)?,
                        _ => {
                            return Err(Error::Config(
                                "paper-tables --config takes a projection or convergence study".into(),
                            ))
                        }
                    };
                    study::SuiteReport {
                        checks: study::check_table(&name, &t),
                        tables: vec![(name, t)],
                        notes: Vec::new(),
                    }
                }
                None => run_paper_tables(&only, max_n)?,
            };
            print!("{}", report.to_text());
            if let Some(p) = &out {
                let mut w = sink(Some(p))?;
                match format {
                    Some(FormatArg::Json) => write_json(&report, &mut w)?,
                    _ => report.write_csv(&mut w)?,
                }
                w.flush()?;
            }
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
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
