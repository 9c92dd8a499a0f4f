//! Global projection on a Case 1 family whose eigenvalues approach one,
//! with the structured solve checked against a dense one on a small mesh.

use std::f64::consts::PI;
use std::sync::Arc;

use uwdg::projection::{assemble_global_system, dense_oracle, solve_structured};
use uwdg::{diagnose_mesh, measure_error, project_star, FluxFamily, Mesh1D, SmoothFunction};

fn main() -> uwdg::Result<()> {
    let u = SmoothFunction::exp_cos();
    // alpha1 = 0.25, beta1 = 1.75/h, beta2 = h^3 with k = 2: the order drops to 1
    let fam = FluxFamily::scaled(0.25, 1.75, -1.0, 1.0, 3.0);
    let k = 2;

    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 24)?);
    let p = fam.at(mesh.h());
    let d = diagnose_mesh(&p, k, &mesh)?;
    let sys = assemble_global_system(&u, &p, &mesh, k)?;
    let fast = solve_structured(&sys.a, &sys.b, sys.n, &sys.rhs, &d)?;
    let slow = dense_oracle(&sys.a, &sys.b, sys.n, &sys.rhs)?;
    let diff = fast
        .iter()
        .zip(&slow)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    println!(
        "{} on N = 24: structured vs dense max difference {diff:.2e}",
        d.case
    );

    let mut prev: Option<f64> = None;
    for n in [640, 1280, 2560, 5120] {
        let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n)?);
        let e = measure_error(&project_star(&u, &fam.at(mesh.h()), &mesh, k)?, &u).l2;
        match prev {
            Some(p) => println!("N = {n:5}  L2 = {e:.3e}  order {:.2}", (p / e).log2()),
            None => println!("N = {n:5}  L2 = {e:.3e}"),
        }
        prev = Some(e);
    }
    Ok(())
}
