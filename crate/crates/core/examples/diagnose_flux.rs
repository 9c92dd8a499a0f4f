//! Case, eigenvalues, existence and predicted order for a few named flux
//! choices.

use std::f64::consts::PI;

use uwdg::{diagnose, predict_order, BetaLaw, FluxFamily, FluxParams};

fn main() -> uwdg::Result<()> {
    // central flux with k = 1: Case 2, the projection exists only for odd N
    for n in [100, 101] {
        let h = 2.0 * PI / n as f64;
        let d = diagnose(&FluxParams::central(), 1, h, n)?;
        println!(
            "central k=1 N={n}: {} Gamma={:.3} Lambda={:.3} exists={}",
            d.case, d.gamma, d.lambda, d.exists
        );
    }

    let families = [
        (
            "beta1 = 1/(2h), beta2 = h",
            FluxFamily::scaled(0.0, 0.5, -1.0, 1.0, 1.0),
        ),
        (
            "IPDG beta1 = 2/h",
            FluxFamily::real(0.0, BetaLaw::power(2.0, -1.0), BetaLaw::constant(0.0)),
        ),
        (
            "Case 1.6.1, A2 = 3",
            FluxFamily::scaled(0.25, 1.75, -1.0, 1.0, 3.0),
        ),
        (
            "beta1 = h^-3, beta2 = h/12",
            FluxFamily::scaled(0.25, 1.0, -3.0, 1.0 / 12.0, 1.0),
        ),
    ];
    for (name, fam) in families {
        for k in 1..=3 {
            let p = predict_order(&fam, k)?;
            println!(
                "{name:<24} k={k}: order {:.2}  ({})",
                p.predicted_order, p.rationale
            );
        }
    }
    Ok(())
}
