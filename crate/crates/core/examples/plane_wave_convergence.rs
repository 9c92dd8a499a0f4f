//! Spatial convergence of the scheme for `i u_t + u_xx + (|u|^2 + |u|^4) u = 0`
//! with a plane-wave solution, central flux, up to `T = 0.1`.

use std::f64::consts::PI;
use std::sync::Arc;

use uwdg::{
    assemble_linear, l2_project, measure_error, project_star, BuiltinProblem, FluxParams, IMEXTableau,
    Integrator, Mesh1D,
};

fn main() -> uwdg::Result<()> {
    let prob = BuiltinProblem::nls_plane_wave();
    let (t_end, dt) = (0.1, 1e-3);
    let p = FluxParams::central();
    let exact = prob.exact(t_end).expect("plane wave is exact");
    for k in [2, 3] {
        let mut prev: Option<f64> = None;
        for n in [10, 20, 40, 80] {
            let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n)?);
            let u0 = project_star(&prob.initial(), &p, &mesh, k)
                .or_else(|_| l2_project(&prob.initial(), &mesh, k))?;
            let op = assemble_linear(&p, &mesh, k)?;
            let mut integ = Integrator::new(&op, prob.nonlinear_term(), IMEXTableau::ars343())?;
            let (_, u) = integ.evolve(&u0, t_end, dt, &[])?;
            let e = measure_error(&u, &exact).l2 / (2.0 * PI).sqrt();
            let order = prev.map_or(String::new(), |p| format!("  order {:.2}", (p / e).log2()));
            println!("k={k} N={n:3}  L2 = {e:.3e}{order}");
            prev = Some(e);
        }
    }
    Ok(())
}
