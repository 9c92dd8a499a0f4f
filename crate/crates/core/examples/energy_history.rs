//! Energy of the linear equation under a conservative and a dissipative
//! flux, written as CSV to stdout.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use uwdg::{assemble_linear, evolve, l2_project, BuiltinProblem, FluxParams, IMEXTableau, Mesh1D};

fn main() -> uwdg::Result<()> {
    let prob = BuiltinProblem::linear_plane_wave();
    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 40)?);
    let u0 = l2_project(&prob.initial(), &mesh, 2)?;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let sets = [
        ("real", FluxParams::real(0.25, 1.0, 1.0)),
        (
            "imag",
            FluxParams::new(c(0.25, 0.0), c(-0.25, 0.0), c(1.0, -1.0), c(1.0, 1.0)),
        ),
    ];
    for (name, p) in sets {
        let op = assemble_linear(&p, &mesh, 2)?;
        let (rec, _) = evolve(
            &u0,
            2.0,
            1e-3,
            &op,
            &prob.nonlinear_term(),
            &IMEXTableau::ars343(),
            &[],
        )?;
        eprintln!("{name}: |E(0) - E(T)| = {:.3e}", rec.energy_change());
        println!("# {name}");
        rec.write_energy_csv(std::io::stdout(), 200)?;
    }
    Ok(())
}
