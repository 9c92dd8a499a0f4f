//! Stability classes of a few parameter sets and the sign of the discrete
//! energy form `Re <M L c, c>` on random data.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use uwdg::{assemble_linear, check_stability, FluxParams, Mesh1D};

fn main() -> uwdg::Result<()> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let sets = [
        ("central", FluxParams::central()),
        ("real (0.25, 1, 1)", FluxParams::real(0.25, 1.0, 1.0)),
        (
            "complex (1-i, 1+i)",
            FluxParams::new(c(0.25, 0.0), c(-0.25, 0.0), c(1.0, -1.0), c(1.0, 1.0)),
        ),
        (
            "complex (1+i, 1-i)",
            FluxParams::new(c(0.25, 0.0), c(-0.25, 0.0), c(1.0, 1.0), c(1.0, -1.0)),
        ),
    ];
    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 20)?);
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for (name, p) in sets {
        let s = check_stability(&p);
        let op = assemble_linear(&p, &mesh, 2)?;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..50 {
            let v: Vec<Complex64> = (0..op.dim())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            worst = worst.max(op.energy_form(&v));
        }
        println!("{name:<20} {:?}  max Re<ML c, c> = {worst:.3e}", s.label);
    }
    Ok(())
}
