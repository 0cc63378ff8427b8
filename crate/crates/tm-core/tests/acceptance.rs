//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them for green tests; failing
//! tests print them in the failure report).
//!
//! Criteria 3 and 5 are implemented exactly as stated and are expected
//! red: their stated tolerances sit below the next-order terms of the
//! asymptotic formulas they probe, so no correct implementation can meet
//! them. Each prints the deviation, identifies the blocking term, and
//! verifies the same constant in an arithmetically consistent form. The
//! other nine criteria pass.

use std::f64::consts::{E, LN_2, PI};
use std::sync::LazyLock;
use std::time::Instant;

use tm_core::sobolev::{bessel_g, mu_series_poly, solve_mu};
use tm_core::soliton::{
    basis_moment_integral, eval_basis, zeta_integral, SolitonFrame,
};
use tm_core::special::{euler_gamma, integrate, log_log_slope, ConstantTable};
use tm_core::threshold::{
    build_trial, classify, ratio, ClassifyParams, GridSpec, Nonlinearity, Outcome,
};
use tm_core::variational::{
    compute_sweep_fits, direct_maximize, shoot, sweep_row, Precision, SolverConfig, SweepRow,
};
use tm_core::Geometry;

fn report(criterion: &str, pass: bool, detail: &str, t0: Instant) -> bool {
    println!(
        "[{}] criterion {criterion}: {detail} ({:.2?})",
        if pass { "PASS" } else { "FAIL" },
        t0.elapsed()
    );
    pass
}

#[test]
fn acceptance_01_basis_moment_table() {
    let t0 = Instant::now();
    let frame = SolitonFrame::new(0.158, 40.0, 6.3, Geometry::PlaneCritical).unwrap();
    let mut worst = 0.0f64;
    for k in 1..=2u32 {
        for j in 0..=4u32 {
            let f = |t: f64| {
                let b = eval_basis(&frame, t);
                b.dw0 * b.w0_minus_two.powi(k as i32 - 1) * b.v_plus.powi(j as i32)
            };
            let left = integrate(f, 0.0, 40.0, 2e-12).unwrap();
            let right = integrate(f, 40.0, 80.0, 2e-12).unwrap();
            let dev = (left.value + right.value - basis_moment_integral(k, j)).abs();
            worst = worst.max(dev);
        }
    }
    let pass = worst <= 1e-10;
    assert!(
        report(
            "1 (closed-form integral table, k in 1..2, j in 0..4)",
            pass,
            &format!("max |quadrature - closed form| = {worst:.3e} vs 1e-10"),
            t0
        ),
        "criterion 1 failed"
    );
}

#[test]
fn acceptance_02_zeta_integral_table() {
    let t0 = Instant::now();
    let frame = SolitonFrame::new(0.158, 40.0, 6.3, Geometry::PlaneCritical).unwrap();
    let mut worst = 0.0f64;
    let mut hard = f64::NAN;
    for j in 1..=3u32 {
        for k in 1..=3u32 {
            let f = |t: f64| {
                let b = eval_basis(&frame, t);
                (-b.w0_minus_two).powi(j as i32) * b.v_plus.abs().powf(k as f64)
            };
            let left = integrate(f, -20.0, 40.0, 2e-12).unwrap();
            let right = integrate(f, 40.0, 100.0, 2e-12).unwrap();
            let got = left.value + right.value;
            let want = zeta_integral(j, k as f64).unwrap();
            worst = worst.max((got / want - 1.0).abs());
            if j == 2 && k == 2 {
                hard = got;
            }
        }
    }
    let c = ConstantTable::get();
    let hard_ok = (hard / (4.0 * (c.zeta3 - 1.0)) - 1.0).abs() <= 1e-9
        && (hard / 16.0 - (c.zeta3 - 1.0) / 4.0).abs() <= 1e-9;
    let pass = worst <= 1e-9 && hard_ok;
    assert!(
        report(
            "2 (zeta-integral formula, j in 1..3, k in 1..3)",
            pass,
            &format!(
                "max rel dev = {worst:.3e} vs 1e-9; (2,2) = {hard:.10} vs 4(zeta(3)-1) = {:.10}",
                4.0 * (c.zeta3 - 1.0)
            ),
            t0
        ),
        "criterion 2 failed"
    );
}

#[test]
fn acceptance_03_bessel_potential() {
    let t0 = Instant::now();
    let gamma = euler_gamma();

    // (a) mass: 2 pi int G r dr = 1
    let mass = integrate(|r| 2.0 * PI * bessel_g(r).unwrap().g * r, 0.0, 40.0, 1e-10)
        .unwrap()
        .value;
    let a_ok = (mass - 1.0).abs() <= 1e-8;

    // (b) as stated: sqrt(r) e^r G(30) = 0.1994711 +- 2e-4
    let g30 = bessel_g(30.0).unwrap().g;
    let v30 = 30f64.sqrt() * 30f64.exp() * g30;
    let b_ok = (v30 - 0.199_471_1).abs() <= 2e-4;
    // the same limit constant tested where its 1/(8r) correction fits the
    // stated window
    let g300 = bessel_g(300.0).unwrap().g;
    let v300 = 300f64.sqrt() * 300f64.exp() * g300;
    let b_support = (v300 - 0.199_471_1).abs() <= 2e-4;

    // (c) as stated: 2 pi e^r G + ln r at r = 1e-3 equals ln2 - gamma +- 1e-3
    let r = 1e-3;
    let gc = bessel_g(r).unwrap().g;
    let vc = 2.0 * PI * r.exp() * gc + r.ln();
    let c_ok = (vc - (LN_2 - gamma)).abs() <= 1e-3;
    // the e^r-free identity carries only an O(r^2 ln r) remainder
    let vc_free = 2.0 * PI * gc + r.ln();
    let c_support = (vc_free - (LN_2 - gamma)).abs() <= 1e-3;

    let pass = a_ok && b_ok && c_ok;
    report(
        "3 (Bessel potential)",
        pass,
        &format!(
            "mass = {mass:.10} ({}); sqrt(r)e^r G(30) = {v30:.7} vs 0.1994711 +- 2e-4 ({}: \
             the asymptotic series' 1/(8r) term alone is 8.2e-4 at r=30 - at r=300 the same \
             constant reads {v300:.7}, {}); 2 pi e^r G + ln r |_(r=1e-3) = {vc:.7} vs {:.7} \
             +- 1e-3 ({}: the formula's own O(r ln r) term is 7.0e-3 there - without the e^r \
             factor it reads {vc_free:.7}, {})",
            if a_ok { "PASS" } else { "FAIL" },
            if b_ok { "PASS" } else { "FAIL" },
            if b_support { "PASS" } else { "FAIL" },
            LN_2 - gamma,
            if c_ok { "PASS" } else { "FAIL" },
            if c_support { "PASS" } else { "FAIL" },
        ),
        t0,
    );
    assert!(a_ok, "criterion 3 mass clause failed");
    assert!(b_support && c_support, "criterion 3 supporting checks failed");
    assert!(
        pass,
        "criterion 3 is red as stated: clauses (b) and (c) pin finite-r values to asymptotic \
         limit constants inside windows smaller than the formulas' own next-order terms"
    );
}

#[test]
fn acceptance_04_mu_small_j_and_monotone() {
    let t0 = Instant::now();
    let mp = solve_mu(0.05, 1e-11).unwrap();
    let small_ok = (16.0 * mp.mu / (0.05 * 0.05) - 1.0).abs() <= 0.05;
    let mut mono_ok = true;
    let mut prev = f64::NEG_INFINITY;
    for &j in &[1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
        let m = solve_mu(j, 1e-12).unwrap();
        if m.log_mu <= prev {
            mono_ok = false;
        }
        prev = m.log_mu;
    }
    let pass = small_ok && mono_ok;
    assert!(
        report(
            "4 (small-j behavior and monotonicity of mu)",
            pass,
            &format!(
                "16 mu(0.05)/0.05^2 - 1 = {:+.4e} (|.| <= 0.05); monotone on {{1,2,5,10,20,40}}: {mono_ok}",
                16.0 * mp.mu / (0.05 * 0.05) - 1.0
            ),
            t0
        ),
        "criterion 4 failed"
    );
}

#[test]
fn acceptance_05_mu_series_remainder_slope() {
    let t0 = Instant::now();
    let gamma = euler_gamma();
    let js = [15.0, 20.0, 25.0, 30.0, 40.0, 50.0];
    let mut pts = Vec::new();
    let mut lines = String::new();
    for &j in &js {
        let mp = solve_mu(j, 1e-13).unwrap();
        let rho = (j - 1.0 + 2.0 * gamma - (4.0 * j).ln() - mp.log_mu).exp();
        let dev = (rho - mu_series_poly(j, 5)).abs();
        lines += &format!(" j={j}: |rho - P5| = {dev:.3e};");
        pts.push((j, dev));
    }
    let slope = log_log_slope(&pts);
    let pass = (slope + 6.0).abs() <= 1.0;
    let sub_slope = log_log_slope(&pts[2..]);
    report(
        "5 (series remainder decay)",
        pass,
        &format!(
            "fitted slope over j in {{15..50}} = {slope:.3} vs -6 +- 1;{lines} the j <= 20 \
             deviations are dominated by O(j^2 e^-j) terms that exceed j^-6 until j ~ 45, \
             steepening the fit; over the uncontaminated sub-grid {{25,30,40,50}} the slope \
             is {sub_slope:.3} ({})",
            if (sub_slope + 6.0).abs() <= 1.0 { "inside the window" } else { "outside" },
        ),
        t0,
    );
    assert!(
        (sub_slope + 6.0).abs() <= 1.0,
        "criterion 5 supporting sub-grid slope failed"
    );
    assert!(
        pass,
        "criterion 5 is red as stated: the grid includes points where exponentially small \
         corrections still dominate the j^-6 remainder"
    );
}

static PLANE_SWEEP: LazyLock<Vec<SweepRow>> = LazyLock::new(|| {
    let cfg = SolverConfig {
        precision: Precision::Extended,
        ..SolverConfig::default()
    };
    [6.0, 8.0, 10.0, 12.0]
        .iter()
        .map(|&h| sweep_row(Geometry::PlaneCritical, h, &cfg).unwrap())
        .collect()
});

static DISK_SWEEP: LazyLock<Vec<SweepRow>> = LazyLock::new(|| {
    let cfg = SolverConfig {
        precision: Precision::Extended,
        ..SolverConfig::default()
    };
    [6.0, 8.0, 10.0, 12.0]
        .iter()
        .map(|&h| sweep_row(Geometry::DiskCritical, h, &cfg).unwrap())
        .collect()
});

#[test]
fn acceptance_06_plane_fourth_order_coefficient() {
    let t0 = Instant::now();
    let (fits, _) = compute_sweep_fits(Geometry::PlaneCritical, &PLANE_SWEEP).unwrap();
    let pass = fits.c8_over_8 >= -0.135 && fits.c8_over_8 <= -0.115;
    assert!(
        report(
            "6 (plane fourth-order coefficient)",
            pass,
            &format!(
                "fitted a^4 coefficient of 8 S0/e - 1 - a^2/2 = {:.6} vs [-0.135, -0.115] \
                 (extended precision; a^2 coefficient fit = {:.6})",
                fits.c8_over_8, fits.a2_coeff
            ),
            t0
        ),
        "criterion 6 failed"
    );
}

#[test]
fn acceptance_07_disk_fourth_order_coefficient() {
    let t0 = Instant::now();
    let (fits, _) = compute_sweep_fits(Geometry::DiskCritical, &DISK_SWEEP).unwrap();
    let c8_ok = fits.c8_over_8 >= -0.02 && fits.c8_over_8 <= 0.02;
    let a2_ok = fits.a2_coeff >= -0.02 && fits.a2_coeff <= 0.02;
    let pass = c8_ok && a2_ok;
    assert!(
        report(
            "7 (disk fourth-order coefficient vanishes)",
            pass,
            &format!(
                "fitted a^4 coefficient of 2 int e^psi / e - 1 = {:.6} vs [-0.02, 0.02]; \
                 a^2 coefficient = {:.6} vs [-0.02, 0.02]",
                fits.c8_over_8, fits.a2_coeff
            ),
            t0
        ),
        "criterion 7 failed"
    );
}

#[test]
fn acceptance_08_concentration_limits() {
    let t0 = Instant::now();
    let cfg = SolverConfig::default();
    let c = ConstantTable::get();

    let mut plane_pts = Vec::new();
    let mut disk_pts = Vec::new();
    let mut plane_10 = f64::NAN;
    let mut disk_10 = f64::NAN;
    for &h in &[6.0, 8.0, 10.0, 12.0, 14.0] {
        let p = sweep_row(Geometry::PlaneCritical, h, &cfg).unwrap();
        let d = sweep_row(Geometry::DiskCritical, h, &cfg).unwrap();
        plane_pts.push((h, (p.s_critical - c.s_inf_plane).abs()));
        disk_pts.push((h, (d.s_critical - c.s_inf_disk).abs()));
        if h == 10.0 {
            plane_10 = p.s_critical;
            disk_10 = d.s_critical;
        }
    }
    let plane_ok = (plane_10 - 2.32930).abs() <= 1e-3
        && (plane_10 - c.s_inf_plane).abs() <= 1e-3;
    let disk_ok = (disk_10 - E).abs() <= 1e-3;
    let plane_slope = log_log_slope(&plane_pts);
    let disk_slope = log_log_slope(&disk_pts);
    let slope_ok = plane_slope <= -5.0 && disk_slope <= -5.0;
    let pass = plane_ok && disk_ok && slope_ok;
    assert!(
        report(
            "8 (concentration limits and remainder order)",
            pass,
            &format!(
                "s_critical(plane, 10) = {plane_10:.6} vs e^(2-2 gamma) = {:.6} +- 1e-3; \
                 s_critical(disk, 10) = {disk_10:.6} vs e +- 1e-3; remainder slopes over \
                 H in {{6..14}}: plane {plane_slope:.2}, disk {disk_slope:.2} (<= -5)",
                c.s_inf_plane
            ),
            t0
        ),
        "criterion 8 failed"
    );
}

#[test]
fn acceptance_09_slope_coefficient_adjudication() {
    let t0 = Instant::now();
    let (plane_fits, _) = compute_sweep_fits(Geometry::PlaneCritical, &PLANE_SWEEP).unwrap();
    let (disk_fits, _) = compute_sweep_fits(Geometry::DiskCritical, &DISK_SWEEP).unwrap();
    let plane_ok = plane_fits.a_h3_coeff >= 0.4 && plane_fits.a_h3_coeff <= 0.6;
    let disk_ok = disk_fits.a_h3_coeff >= -0.1 && disk_fits.a_h3_coeff <= 0.1;
    let pass = plane_ok && disk_ok;
    assert!(
        report(
            "9 (H^-3 coefficient of the initial slope)",
            pass,
            &format!(
                "plane fit = {:.5} vs [0.4, 0.6] (adjudicates the coefficient 1/2); \
                 disk fit = {:.5} vs [-0.1, 0.1]",
                plane_fits.a_h3_coeff, disk_fits.a_h3_coeff
            ),
            t0
        ),
        "criterion 9 failed"
    );
}

#[test]
fn acceptance_10_euler_lagrange_necessary_conditions() {
    let t0 = Instant::now();
    let cfg = SolverConfig::default();
    let mut worst_resid = 0.0f64;
    let mut worst_kin = 0.0f64;
    let mut shape_ok = true;
    for (geom, h) in [
        (Geometry::PlaneCritical, 6.0),
        (Geometry::PlaneCritical, 10.0),
        (Geometry::DiskCritical, 8.0),
    ] {
        let sol = shoot(geom, h, &cfg).unwrap();
        worst_resid = worst_resid.max(sol.residuals.iter().fold(0.0f64, |a, &b| a.max(b)));
        worst_kin = worst_kin.max((sol.kinetic - 1.0).abs());
        // Monotonicity and concavity hold strictly through the core; in
        // the far tail the slope scale e^{-2 t_a} sits below both one ulp
        // of v and the shooting residual floor (the tail condition is the
        // one-sided v'(T_max) <= 1e-12 a), so the checks there allow that
        // noise level.
        let eps = 1e-12 * sol.a;
        shape_ok &= sol.v.windows(2).all(|w| w[1] >= w[0] - eps);
        shape_ok &= sol.v_dot.windows(2).all(|w| w[1] <= w[0]);
        shape_ok &= sol.v_dot.iter().zip(&sol.t_grid).all(|(&w, &t)| {
            if t <= sol.t_a + 12.0 {
                w > 0.0
            } else {
                w > -eps
            }
        });
        for (i, w) in sol.v.windows(2).enumerate() {
            if sol.t_grid[i] <= sol.t_a + 10.0 {
                shape_ok &= w[1] > w[0];
            }
        }
        for (i, w) in sol.v_dot.windows(2).enumerate() {
            if (sol.t_grid[i] - sol.t_a).abs() <= 10.0 {
                shape_ok &= w[1] < w[0];
            }
        }
        shape_ok &= sol.schwarz_violation() <= 1e-8;
    }
    let d = direct_maximize(Geometry::PlaneCritical, 8.0, &cfg).unwrap();
    let s = shoot(Geometry::PlaneCritical, 8.0, &cfg).unwrap();
    let gap = (d.s0 - s.s0).abs();
    let pass = worst_resid <= 1e-6 && worst_kin <= 1e-9 && shape_ok && gap <= 1e-8;
    assert!(
        report(
            "10 (Euler-Lagrange necessary conditions)",
            pass,
            &format!(
                "max identity residual = {worst_resid:.3e} (<= 1e-6); kinetic deviation = \
                 {worst_kin:.3e} (<= 1e-9); monotone increasing and concave: {shape_ok}; \
                 |S0_shoot - S0_direct| at H=8: {gap:.3e} (<= 1e-8)"
            ),
            t0
        ),
        "criterion 10 failed"
    );
}

#[test]
fn acceptance_11_classifier_regression() {
    let t0 = Instant::now();
    let grid = GridSpec {
        s_min: 1.0,
        s_max: 9000.0,
        n: 1200,
    };
    let base = ClassifyParams {
        p: 1.0,
        q: 2.0,
        a: 1.0,
        b: 0.0,
        l: 30.0,
        c_star: None,
        l_large_asserted: false,
    };

    let g_exist = Nonlinearity::parse("cutoff(30, exp(s)) * (1 - cE/s^2 + 1/s) / s").unwrap();
    let v1 = classify(&g_exist, Geometry::PlaneCritical, &base, &grid).unwrap();

    let g_non = Nonlinearity::parse("cutoff(30, exp(s)) * (1 - cE/s^2 - 1/s) / s").unwrap();
    let non_params = ClassifyParams {
        l_large_asserted: true,
        ..base
    };
    let v2 = classify(&g_non, Geometry::PlaneCritical, &non_params, &grid).unwrap();

    let g_crit = Nonlinearity::parse("s * exp(s) / (cE + s^2)").unwrap();
    let crit_params = ClassifyParams {
        p: 3.0,
        q: 4.0,
        l: 5.0,
        ..base
    };
    let crit_grid = GridSpec {
        s_min: 0.5,
        s_max: 300.0,
        n: 1500,
    };
    let v3 = classify(&g_crit, Geometry::PlaneCritical, &crit_params, &crit_grid).unwrap();

    let verdicts_ok = v1.outcome == Outcome::Existence
        && v2.outcome == Outcome::NonExistence
        && v3.outcome == Outcome::Inconclusive;

    // bit-stable certificates on a fixed grid
    let v1b = classify(&g_exist, Geometry::PlaneCritical, &base, &grid).unwrap();
    let stable = v1
        .certificate
        .iter()
        .zip(&v1b.certificate)
        .all(|(a, b)| {
            a.s.to_bits() == b.s.to_bits()
                && a.ln_abs_g.to_bits() == b.ln_abs_g.to_bits()
                && a.rel_margin.to_bits() == b.rel_margin.to_bits()
        });

    // trial-profile margins at H = 10 (L = 5 witnesses so the trial's
    // height range lies above the cutoff)
    let cfg = SolverConfig::default();
    let trial = build_trial(Geometry::PlaneCritical, 10.0, &cfg).unwrap();
    let s_inf = ConstantTable::get().s_inf_plane;
    let gp = Nonlinearity::parse("cutoff(5, exp(s)) * (1 - cE/s^2 + 1/s) / s").unwrap();
    let gm = Nonlinearity::parse("cutoff(5, exp(s)) * (1 - cE/s^2 - 1/s) / s").unwrap();
    let margin_plus = ratio(&gp, &trial).unwrap() - s_inf;
    let margin_minus = ratio(&gm, &trial).unwrap() - s_inf;
    let margins_ok = margin_plus > 0.0 && margin_minus < 0.0;

    let pass = verdicts_ok && stable && margins_ok;
    assert!(
        report(
            "11 (classifier regression)",
            pass,
            &format!(
                "verdicts: {:?}/{:?}/{:?}; certificates bit-stable: {stable}; trial margins \
                 at H=10: existence witness {margin_plus:+.3e}, non-existence witness \
                 {margin_minus:+.3e}",
                v1.outcome, v2.outcome, v3.outcome
            ),
            t0
        ),
        "criterion 11 failed"
    );
}
