//! The implicit stage solve `(I - mu L) x = b` and one IMEX step.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use uwdg::{assemble_linear, FluxParams, IMEXTableau, Mesh1D, NonlinearTerm, ShiftedSolver, SmoothFunction};

fn main() -> uwdg::Result<()> {
    let tab = IMEXTableau::ars343();
    println!(
        "{}: {} stages, order {}, defect {:.1e}",
        tab.name(),
        tab.stages(),
        tab.order(),
        tab.order_defect()
    );

    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 200)?);
    let op = assemble_linear(&FluxParams::alternating(1.0), &mesh, 2)?;
    let b: Vec<Complex64> = (0..op.dim())
        .map(|i| Complex64::new((i as f64).sin(), 0.0))
        .collect();
    let mut solver = ShiftedSolver::new(&op);
    let mu = Complex64::new(tab.implicit()[1][1] * 1e-2, 0.0);
    let x = solver.solve(mu, &b)?;
    let lx = op.apply(&x);
    let res = x
        .iter()
        .zip(&lx)
        .zip(&b)
        .map(|((x, lx), b)| (x - mu * lx - b).norm())
        .fold(0.0, f64::max);
    println!("dim {} residual {res:.2e}", op.dim());

    let u0 = uwdg::l2_project(&SmoothFunction::plane_wave(1.0), &mesh, 2)?;
    let u1 = uwdg::step(&u0, 1e-2, &op, &NonlinearTerm::zero(), &tab)?;
    let exact = Complex64::new(0.0, 0.5 - 1e-2).exp();
    println!("u(0.5, 0.01) = {:.8}  exact {:.8}", u1.evaluate(0.5)?, exact);
    Ok(())
}
