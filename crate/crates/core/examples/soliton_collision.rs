//! Two solitons colliding on `[-25, 25]`; prints the humps of `|u|` at a few
//! times and writes the profiles to `soliton_t*.csv` in the temp directory.

use std::fs::File;

use uwdg::study::run::find_humps;
use uwdg::{assemble_linear, l2_project, BuiltinProblem, FluxParams, IMEXTableau, Integrator, Mesh1D};

fn main() -> uwdg::Result<()> {
    let prob = BuiltinProblem::double_soliton();
    let (a, b) = prob.domain;
    let mesh = std::sync::Arc::new(Mesh1D::uniform(a, b, 250)?);
    let u0 = l2_project(&prob.initial(), &mesh, 2)?;
    let op = assemble_linear(&FluxParams::central(), &mesh, 2)?;
    let mut integ = Integrator::new(&op, prob.nonlinear_term(), IMEXTableau::ars343())?;
    let (rec, _) = integ.evolve(&u0, 5.0, 1e-3, &[0.0, 2.5, 5.0])?;
    let dir = std::env::temp_dir();
    for (t, f) in &rec.snapshots {
        let prof = f.sample(8);
        let humps = find_humps(&prof, 0.5, 2.0);
        let desc: Vec<String> = humps
            .iter()
            .map(|h| format!("{:.3} at {:.2}", h.height, h.center))
            .collect();
        println!("t = {t:<4} {}", desc.join(", "));
        let path = dir.join(format!("soliton_t{t}.csv"));
        uwdg::imex::write_snapshot_csv(f, 8, File::create(&path)?)?;
    }
    println!(
        "energy drift {:.2e} (profiles in {})",
        rec.energy_change(),
        dir.display()
    );
    Ok(())
}
