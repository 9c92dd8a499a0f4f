//! Parses a study config, runs it and prints the table; the same path the
//! command-line tool takes.
//!
//! ```text
//! cargo run --release --example run_config -- configs/table05_case15.cfg
//! ```

use uwdg::study::{run_convergence_study, run_projection_study, StudyConfig, StudyKind};

fn main() -> uwdg::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => StudyConfig::from_path(path.as_ref())?,
        None => uwdg::study::paper::bundled("table08")?,
    };
    cfg.validate()?;
    let table = match cfg.kind {
        StudyKind::Projection => run_projection_study(&cfg)?,
        StudyKind::Convergence => run_convergence_study(&cfg)?,
        other => {
            eprintln!("{} studies are run by the uwdg binary", other.as_str());
            return Ok(());
        }
    };
    print!("{}", table.to_text());
    table.write_csv(std::io::stdout())?;
    Ok(())
}
