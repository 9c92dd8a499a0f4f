//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use uwdg::study::paper::{bundled, restrict, ORDER_TOL};
use uwdg::study::{
    check_table, run_convergence_study, run_energy_study, run_projection_study, run_soliton, Check,
};
use uwdg::*;

// written to the stderr handle so the line shows without --nocapture
fn verdict(id: u32, what: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {id}: {} {what} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn orders_of(name: &str) -> (Vec<Check>, f64) {
    let cfg = bundled(name).unwrap();
    let t0 = Instant::now();
    let table = run_projection_study(&cfg).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let checks = check_table(name, &table)
        .into_iter()
        .filter(|c| c.what == "order_l2")
        .collect();
    (checks, secs)
}

fn order_criterion(id: u32, what: &str, tables: &[&str], max_secs: Option<f64>) {
    let mut failed = Vec::new();
    let mut total = 0;
    let mut slowest: f64 = 0.0;
    for t in tables {
        let (checks, secs) = orders_of(t);
        slowest = slowest.max(secs);
        if max_secs.is_some_and(|m| secs > m) {
            failed.push(format!("{t} took {secs:.1} s"));
        }
        total += checks.len();
        for c in checks.iter().filter(|c| !c.pass) {
            failed.push(c.line());
        }
    }
    let pass = failed.is_empty() && total > 0;
    verdict(
        id,
        what,
        pass,
        &format!("{total} orders within {ORDER_TOL}, slowest table {slowest:.2} s"),
    );
    assert!(pass, "{}", failed.join("\n"));
}

#[test]
fn criterion_1_local_and_central_projection_orders() {
    order_criterion(
        1,
        "local, scaled-local and central projection orders",
        &["table01", "table02", "table04", "table05", "table08", "table09"],
        Some(60.0),
    );
}

#[test]
fn criterion_2_global_projection_orders() {
    order_criterion(
        2,
        "global projection orders",
        &["table06", "table07", "table10", "table11", "table12"],
        None,
    );
}

/// Dense matrix of the defining relations of `P*` in Legendre modes:
/// flux value and flux derivative at every interface, and the moments
/// `l <= k - 2` fixed to those of the L2 projection.
fn defining_system(p: &FluxParams, mesh: &Mesh1D, k: usize) -> DMatrix<f64> {
    let n = mesh.n_cells();
    let m = k + 1;
    let h = mesh.h();
    let (a1, a2, b1, b2) = (p.alpha1.re, p.alpha2.re, p.beta1.re, p.beta2.re);
    let val = |l: usize, s: f64| if s > 0.0 { 1.0 } else { (-1.0f64).powi(l as i32) };
    let der = |l: usize, s: f64| {
        let sign = if s > 0.0 {
            1.0
        } else {
            (-1.0f64).powi(l as i32 + 1)
        };
        sign * (l * (l + 1)) as f64 / h
    };
    let mut a = DMatrix::zeros(n * m, n * m);
    let mut row = 0;
    for i in 0..n {
        let (left, right) = ((i + n - 1) % n, i);
        for l in 0..m {
            // weights of u-, u+, ux-, ux+ in each relation
            let (um, up, uxm, uxp) = (val(l, 1.0), val(l, -1.0), der(l, 1.0), der(l, -1.0));
            a[(row, left * m + l)] += 0.5 * um - a2 * um - b2 * uxm;
            a[(row, right * m + l)] += 0.5 * up + a2 * up + b2 * uxp;
            a[(row + 1, left * m + l)] += 0.5 * uxm - a1 * uxm - b1 * um;
            a[(row + 1, right * m + l)] += 0.5 * uxp + a1 * uxp + b1 * up;
        }
        row += 2;
    }
    for j in 0..n {
        for l in 0..k.saturating_sub(1) {
            a[(row, j * m + l)] = 1.0;
            row += 1;
        }
    }
    a
}

fn defining_rhs(u: &SmoothFunction, mesh: &Arc<Mesh1D>, k: usize) -> DVector<C> {
    let n = mesh.n_cells();
    let m = k + 1;
    let l2 = l2_project(u, mesh, k).unwrap();
    let mut b = DVector::zeros(n * m);
    let mut row = 0;
    for i in 0..n {
        let x = mesh.left(i);
        b[row] = u.value(x);
        b[row + 1] = u.derivative(x);
        row += 2;
    }
    for j in 0..n {
        for l in 0..k.saturating_sub(1) {
            b[row] = l2.coeffs()[j * m + l];
            row += 1;
        }
    }
    b
}

#[test]
fn criterion_3_structured_solve_matches_dense_oracle() {
    let u = SmoothFunction::exp_cos();
    let names = [
        "table01", "table02", "table04", "table05", "table06", "table07", "table08", "table09", "table10",
        "table11", "table12",
    ];
    let mut combos = 0;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut cases = std::collections::BTreeSet::new();
    for name in names {
        let cfg = bundled(name).unwrap();
        for s in &cfg.series {
            for n in [7usize, 8, 15, 16, 31, 32, 63, 64] {
                let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n).unwrap());
                let p = s.family.at(mesh.h());
                let d = diagnose_mesh(&p, s.k, &mesh).unwrap();
                let a = defining_system(&p, &mesh, s.k);
                let sv = a.clone().singular_values();
                let dense_singular = sv.min() / sv.max() < 1e-12;
                combos += 1;
                cases.insert(d.case.to_string());
                if dense_singular == d.exists {
                    failures.push(format!(
                        "{name} {} N={n}: verdict {} but smallest/largest singular value {:.2e}",
                        s.name,
                        d.exists,
                        sv.min() / sv.max()
                    ));
                    continue;
                }
                if !d.exists {
                    assert!(matches!(
                        project_star(&u, &p, &mesh, s.k),
                        Err(Error::NonExistent(_))
                    ));
                    continue;
                }
                let dense = a
                    .map(|x| C::new(x, 0.0))
                    .lu()
                    .solve(&defining_rhs(&u, &mesh, s.k))
                    .unwrap();
                let fast = project_star(&u, &p, &mesh, s.k).unwrap();
                let scale = dense.iter().map(|z| z.norm()).fold(0.0, f64::max);
                let diff = fast
                    .coeffs()
                    .iter()
                    .zip(dense.iter())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max)
                    / scale;
                worst = worst.max(diff);
                if diff > 1e-10 {
                    failures.push(format!(
                        "{name} {} N={n} {}: relative difference {diff:.2e}",
                        s.name, d.case
                    ));
                }
            }
        }
    }
    let all_cases = ["Local", "Case1", "Case2", "Case3"]
        .iter()
        .all(|c| cases.contains(*c));
    let pass = failures.is_empty() && combos >= 50 && all_cases;
    verdict(
        3,
        "structured P* solve against a dense solve of the defining relations",
        pass,
        &format!("{combos} combinations over {cases:?}, worst relative difference {worst:.1e}"),
    );
    assert!(pass, "{}", failures.join("\n"));
}

fn trig_polynomial(coefs: Vec<(f64, f64)>) -> SmoothFunction {
    let c: Vec<C> = coefs.iter().map(|&(a, b)| C::new(a, b)).collect();
    let d = c.clone();
    SmoothFunction::new(
        move |x| {
            c.iter()
                .enumerate()
                .map(|(m, a)| a * C::new(0.0, m as f64 * x).exp())
                .sum()
        },
        move |x| {
            d.iter()
                .enumerate()
                .map(|(m, a)| a * C::new(0.0, m as f64) * C::new(0.0, m as f64 * x).exp())
                .sum()
        },
    )
}

fn flux_strategy() -> impl Strategy<Value = FluxFamily> {
    prop_oneof![
        Just(FluxFamily::fixed(FluxParams::central())),
        Just(FluxFamily::fixed(FluxParams::alternating(1.0))),
        Just(FluxFamily::fixed(FluxParams::real(0.3, 0.4, 0.4))),
        Just(FluxFamily::scaled(0.3, 0.4, -1.0, 0.4, 1.0)),
        Just(FluxFamily::scaled(0.25, 1.75, -1.0, 1.0, 2.0)),
        Just(FluxFamily::scaled(0.0, -1.0, -3.0, 1.0 / 12.0, 1.0)),
        (-1.0f64..1.0, -2.0f64..2.0, -2.0f64..2.0)
            .prop_map(|(a, b1, b2)| FluxFamily::fixed(FluxParams::real(a, b1, b2))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn criterion_4_defining_residuals(
        coefs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5),
        fam in flux_strategy(),
        k in 1usize..=3,
        n in 5usize..48,
    ) {
        let u = trig_polynomial(coefs);
        let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n).unwrap());
        let p = fam.at(mesh.h());
        let d = diagnose_mesh(&p, k, &mesh).unwrap();
        prop_assume!(d.exists);
        let f = project_star(&u, &p, &mesh, k).unwrap();
        let r = projection::defining_residuals(&f, &u, &p).unwrap();
        let ok = r.relative() <= 1e-9 && r.moments <= 1e-9 * r.scale;
        if !ok {
            verdict(4, "defining relations of P*", false, &format!("{} k={k} N={n}: {r:?}", d.case));
        }
        prop_assert!(ok, "{:?}", r);
    }
}

#[test]
fn criterion_4_summary() {
    // the property test above carries the assertion; this reruns a fixed
    // sample so that the criterion gets its one-line verdict
    let mut rng = rand::rngs::StdRng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..60 {
        let coefs: Vec<(f64, f64)> = (0..4)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let u = trig_polynomial(coefs);
        let k = rng.gen_range(1..=3);
        let n = rng.gen_range(5..48);
        let p = FluxParams::real(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, n).unwrap());
        let Ok(f) = project_star(&u, &p, &mesh, k) else {
            continue;
        };
        let r = projection::defining_residuals(&f, &u, &p).unwrap();
        worst = worst.max(r.relative()).max(r.moments / r.scale);
        count += 1;
    }
    let pass = worst <= 1e-9 && count > 30;
    verdict(
        4,
        "defining relations of P*",
        pass,
        &format!("{count} random cases, worst relative residual {worst:.1e}"),
    );
    assert!(pass);
}

fn random_field(dim: usize, rng: &mut impl Rng) -> Vec<C> {
    (0..dim)
        .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn criterion_5_energy_form_sign() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let k = 2;
    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 24).unwrap());
    let conservative = [
        FluxParams::central(),
        FluxParams::alternating(1.0),
        FluxParams::real(0.25, 1.0, 1.0),
        FluxParams::real(0.3, 0.4, 0.4),
        FluxParams::real(-0.7, -2.0, 0.1),
    ];
    let dissipative = FluxParams::new(
        C::new(0.25, 0.0),
        C::new(-0.25, 0.0),
        C::new(1.0, -1.0),
        C::new(1.0, 1.0),
    );
    let mut worst_cons: f64 = 0.0;
    let mut worst_diss = f64::NEG_INFINITY;
    let ops: Vec<_> = conservative
        .iter()
        .map(|p| assemble_linear(p, &mesh, k).unwrap())
        .collect();
    let diss = assemble_linear(&dissipative, &mesh, k).unwrap();
    for i in 0..100 {
        let c = random_field(diss.dim(), &mut rng);
        let op = &ops[i % ops.len()];
        let lc = op.apply(&c);
        let scale = mass_inner(&mesh, k, &lc, &lc).re.sqrt() * mass_inner(&mesh, k, &c, &c).re.sqrt();
        worst_cons = worst_cons.max(op.energy_form(&c).abs() / scale);
        worst_diss = worst_diss.max(diss.energy_form(&c));
    }
    let pass = worst_cons <= 1e-11 && worst_diss <= 0.0;
    verdict(
        5,
        "sign of Re<M L c, c>",
        pass,
        &format!("conservative max relative {worst_cons:.1e}, dissipative max {worst_diss:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_energy_history() {
    let cfg = bundled("energy_linear").unwrap();
    let e = run_energy_study(&cfg).unwrap();
    let real = e.series.iter().find(|s| s.series == "real").unwrap();
    let imag = e.series.iter().find(|s| s.series == "imag").unwrap();
    let reference = 5.7e-4;
    let pass = real.energy_change <= 1e-7
        && imag.energy_change <= 3.0 * reference
        && imag.energy_change >= reference / 3.0;
    verdict(
        6,
        "energy change over T = 100",
        pass,
        &format!(
            "real |dE| {:.2e} (norm change {:.2e}), complex |dE| {:.2e} (norm change {:.2e})",
            real.energy_change, real.norm_change, imag.energy_change, imag.norm_change
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_scheme_tables() {
    let mut failed = Vec::new();
    let mut total = 0;
    for name in ["table13", "table14", "table15", "table16", "table17", "table18"] {
        let mut cfg = bundled(name).unwrap();
        restrict(&mut cfg, 320);
        let table = run_convergence_study(&cfg).unwrap();
        let checks = check_table(name, &table);
        total += checks.len();
        failed.extend(checks.iter().filter(|c| !c.pass).map(Check::line));
    }
    let pass = failed.is_empty() && total > 0;
    verdict(
        7,
        "scheme orders and L2 errors up to N = 320",
        pass,
        &format!("{}/{total} checks within tolerance", total - failed.len()),
    );
    assert!(pass, "{}", failed.join("\n"));
}

fn temporal_slopes(sign: f64, amp: f64, phase: f64) -> (f64, f64) {
    let mesh = Arc::new(Mesh1D::uniform(0.0, 2.0 * PI, 40).unwrap());
    let k = 2;
    let p = FluxParams::alternating(sign);
    let op = assemble_linear(&p, &mesh, k).unwrap();
    let nt = BuiltinProblem::nls_plane_wave().nonlinear_term();
    let u = SmoothFunction::new(
        move |x| amp * C::new(0.0, x + phase).exp(),
        move |x| amp * C::new(0.0, 1.0) * C::new(0.0, x + phase).exp(),
    );
    let u0 = project_star(&u, &p, &mesh, k).unwrap();
    let t_end = 0.4;
    let tab = IMEXTableau::ars343();
    let reference = evolve(&u0, t_end, 1e-4, &op, &nt, &tab, &[]).unwrap().1;
    let errs: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            let v = evolve(&u0, t_end, dt, &op, &nt, &tab, &[]).unwrap().1;
            let d: Vec<C> = v
                .coeffs()
                .iter()
                .zip(reference.coeffs())
                .map(|(a, b)| a - b)
                .collect();
            mass_inner(&mesh, k, &d, &d).re.sqrt()
        })
        .collect();
    ((errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn criterion_8_temporal_order_property(
        sign in prop_oneof![Just(1.0), Just(-1.0)],
        // for |A| < 1 the frequency 1 - A^2 - A^4 is small and the time
        // error drops below the stiff-mode floor of the reference run
        amp in 1.0f64..1.5,
        phase in 0.0f64..(2.0 * PI),
    ) {
        let (s1, s2) = temporal_slopes(sign, amp, phase);
        prop_assert!((s1 - 3.0).abs() <= 0.2 && (s2 - 3.0).abs() <= 0.2, "slopes {} {}", s1, s2);
    }
}

#[test]
fn criterion_8_temporal_order() {
    let (s1, s2) = temporal_slopes(1.0, 1.0, 0.0);
    let pass = (s1 - 3.0).abs() <= 0.2 && (s2 - 3.0).abs() <= 0.2;
    verdict(
        8,
        "temporal order of ARS(3,4,3)",
        pass,
        &format!("observed slopes {s1:.3}, {s2:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_9_soliton_collision() {
    let cfg = bundled("figure2_soliton").unwrap();
    let r = run_soliton(&cfg).unwrap();
    let at = |t: f64| r.snapshots.iter().find(|s| (s.t - t).abs() < 1e-12).unwrap();
    let start = at(0.0);
    let mid = at(2.5);
    let end = at(5.0);
    let separated = |s: &uwdg::study::Snapshot| {
        s.humps.len() == 2
            && s.humps[0].center < 0.0
            && s.humps[1].center > 0.0
            && s.humps.iter().all(|h| (0.9..=1.1).contains(&h.height))
    };
    let start_ok = separated(start)
        && (start.humps[0].center + 10.0).abs() <= 0.2
        && (start.humps[1].center - 10.0).abs() <= 0.2;
    let pass = start_ok && mid.max_abs > 1.9 && separated(end) && r.relative_energy_drift <= 0.01;
    let humps = |s: &uwdg::study::Snapshot| {
        s.humps
            .iter()
            .map(|h| format!("{:.2}@{:.2}", h.height, h.center))
            .collect::<Vec<_>>()
            .join(" ")
    };
    verdict(
        9,
        "two-soliton collision",
        pass,
        &format!(
            "t=0 [{}], t=2.5 max {:.3}, t=5 [{}], energy drift {:.1e}",
            humps(start),
            mid.max_abs,
            humps(end),
            r.relative_energy_drift
        ),
    );
    assert!(pass);
}
