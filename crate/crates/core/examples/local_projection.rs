//! Error of the flux-adapted projection of `cos x` for a local parameter set
//! (`alpha1^2 + beta1 beta2 = 1/4`) and a few meshes.
//!
//! ```text
//! cargo run --release --example local_projection
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use uwdg::{measure_error, measure_order, project_star, FluxParams, Mesh1D, SmoothFunction};

fn main() -> uwdg::Result<()> {
    let u = SmoothFunction::cos();
    for k in 1..=3 {
        let mut runs = Vec::new();
        for n in [40, 80, 160, 320] {
            let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n)?);
            // beta1 = 0.4/h, beta2 = 0.4h keeps the product fixed at 0.16
            let h = mesh.h();
            let p = FluxParams::real(0.3, 0.4 / h, 0.4 * h);
            let ph = project_star(&u, &p, &mesh, k)?;
            runs.push((h, measure_error(&ph, &u)));
        }
        let orders = measure_order(&runs);
        println!("P{k}");
        for (i, (h, e)) in runs.iter().enumerate() {
            let o = if i == 0 {
                "-".to_string()
            } else {
                format!("{:.2}", orders[i - 1].l2)
            };
            println!("  h = {h:.4e}  L2 = {:.3e}  order {o}", e.l2);
        }
    }
    Ok(())
}
