//! Two-point shooting for the Euler-Lagrange equation
//! `v'' = -(1/lambda) psi_v e^psi`, `v(0) = 0`.
//!
//! Unknowns are the initial slope `a` and the multiplier `lambda`;
//! conditions are a dead slope at the far end of the truncated domain and
//! the unit kinetic energy. Damped Newton with a central-difference
//! Jacobian closes the 2x2 system. Past the transition the slope decays
//! like `e^{-2(t - T_a)}`, so the `t_pad`-unit padding puts the truncation
//! error near 1e-35 of the slope scale.

use super::{psi, psi_dd, Precision, ProfileSolution, SolverConfig};
use crate::error::{CoreError, Result};
use crate::special::dd::Dd;
use crate::Geometry;

/// Piecewise-uniform grid with even-count segments (Simpson-ready).
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub t: Vec<f64>,
    /// (start index, end index inclusive, step) per uniform segment.
    pub segs: Vec<(usize, usize, f64)>,
}

pub(crate) fn build_grid(h: f64, cfg: &SolverConfig) -> Grid {
    let t_a_est = h * h + 0.5;
    let (core, tail) = cfg.steps();
    let t_max = t_a_est + cfg.t_pad;
    let marks = [
        (0.0, (t_a_est - 10.0).max(0.0), tail),
        ((t_a_est - 10.0).max(0.0), (t_a_est + 10.0).min(t_max), core),
        ((t_a_est + 10.0).min(t_max), t_max, tail),
    ];
    let mut t = vec![0.0f64];
    let mut segs = Vec::new();
    for &(lo, hi, step) in &marks {
        if hi <= lo {
            continue;
        }
        let mut n = ((hi - lo) / step).ceil() as usize;
        if n % 2 == 1 {
            n += 1;
        }
        let n = n.max(2);
        let start = t.len() - 1;
        let hstep = (hi - lo) / n as f64;
        for i in 1..=n {
            t.push(lo + hstep * i as f64);
        }
        segs.push((start, start + n, hstep));
    }
    Grid { t, segs }
}

/// Composite Simpson over the segment structure.
pub(crate) fn simpson<F: Fn(usize) -> f64>(grid: &Grid, f: F) -> f64 {
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    for &(i0, i1, h) in &grid.segs {
        let mut acc = f(i0) + f(i1);
        let mut k = i0 + 1;
        while k < i1 {
            acc += if (k - i0) % 2 == 1 { 4.0 } else { 2.0 } * f(k);
            k += 1;
        }
        let term = acc * h / 3.0;
        let y = term - comp;
        let t2 = total + y;
        comp = (t2 - total) - y;
        total = t2;
    }
    total
}

/// Simpson with double-double accumulation.
pub(crate) fn simpson_dd<F: Fn(usize) -> Dd>(grid: &Grid, f: F) -> Dd {
    let mut total = Dd::ZERO;
    for &(i0, i1, h) in &grid.segs {
        let mut acc = f(i0).add(f(i1));
        let mut k = i0 + 1;
        while k < i1 {
            let w = if (k - i0) % 2 == 1 { 4.0 } else { 2.0 };
            acc = acc.add(f(k).scale(w));
            k += 1;
        }
        total = total.add(acc.scale(h / 3.0));
    }
    total
}

/// Acceleration `-(1/lambda) psi_v e^psi`, evaluated through the log of the
/// force so huge trial phases cannot overflow, with guards for trajectories
/// that have crashed (`u` far below the height floor).
fn accel(geometry: Geometry, h: f64, ln_lambda: f64, v: f64, t: f64) -> f64 {
    let u = h + v;
    if u < 0.05 * h {
        return 0.0;
    }
    let p = psi(geometry, h, v, t);
    let phase = p.psi + p.psi_v.ln() - ln_lambda;
    -phase.min(45.0).exp()
}

pub(crate) struct Trajectory {
    pub v: Vec<f64>,
    pub v_dot: Vec<f64>,
}

/// Classical fixed-step RK4 on the stored grid.
pub(crate) fn integrate_ode(
    geometry: Geometry,
    h: f64,
    a: f64,
    lambda: f64,
    grid: &Grid,
) -> Trajectory {
    let ln_lambda = lambda.ln();
    let n = grid.t.len();
    let mut v = Vec::with_capacity(n);
    let mut v_dot = Vec::with_capacity(n);
    let mut y = 0.0f64;
    let mut w = a;
    v.push(y);
    v_dot.push(w);
    for i in 1..n {
        let t0 = grid.t[i - 1];
        let dt = grid.t[i] - t0;
        let k1v = w;
        let k1w = accel(geometry, h, ln_lambda, y, t0);
        let k2v = w + 0.5 * dt * k1w;
        let k2w = accel(geometry, h, ln_lambda, y + 0.5 * dt * k1v, t0 + 0.5 * dt);
        let k3v = w + 0.5 * dt * k2w;
        let k3w = accel(geometry, h, ln_lambda, y + 0.5 * dt * k2v, t0 + 0.5 * dt);
        let k4v = w + dt * k3w;
        let k4w = accel(geometry, h, ln_lambda, y + dt * k3v, t0 + dt);
        y += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        if !y.is_finite() || !w.is_finite() {
            // freeze a crashed trajectory; the residual signals the failure
            y = v[i - 1];
            w = -1.0;
        }
        v.push(y);
        v_dot.push(w);
    }
    Trajectory { v, v_dot }
}

fn residuals(geometry: Geometry, h: f64, a: f64, lambda: f64, grid: &Grid) -> (f64, f64, Trajectory) {
    let traj = integrate_ode(geometry, h, a, lambda, grid);
    let kin = simpson(grid, |i| traj.v_dot[i] * traj.v_dot[i]);
    let w_end = *traj.v_dot.last().unwrap();
    // analytic closure of the kinetic tail for the truncated domain
    let kin_total = kin + 0.5 * w_end * w_end;
    (w_end / a, kin_total - 1.0, traj)
}

/// Solve the two-point problem at height `h >= 4`.
pub fn shoot(geometry: Geometry, h: f64, cfg: &SolverConfig) -> Result<ProfileSolution> {
    cfg.validate()?;
    if !(h >= 4.0) {
        return Err(CoreError::Domain(format!(
            "shooting requires H >= 4 (concentration regime), got {h}"
        )));
    }
    let grid = build_grid(h, cfg);
    let mut a = match geometry {
        Geometry::PlaneCritical => 1.0 / h + 1.0 / (2.0 * h * h * h),
        Geometry::DiskCritical => 1.0 / h,
    };
    let mut lambda = match geometry {
        Geometry::PlaneCritical => 0.5 * std::f64::consts::E * h * h,
        Geometry::DiskCritical => 2.0 * std::f64::consts::E * h * h,
    };

    let tail_tol = 1e-12f64.max(cfg.newton_tol);
    let mut converged = false;
    let mut last = (f64::INFINITY, f64::INFINITY);
    for _ in 0..60 {
        let (r1, r2, _) = residuals(geometry, h, a, lambda, &grid);
        last = (r1, r2);
        if r1.abs() <= tail_tol && r2.abs() <= cfg.newton_tol {
            converged = true;
            break;
        }
        // central-difference Jacobian, relative step 1e-6
        let da = 1e-6 * a;
        let dl = 1e-6 * lambda;
        let (r1ap, r2ap, _) = residuals(geometry, h, a + da, lambda, &grid);
        let (r1am, r2am, _) = residuals(geometry, h, a - da, lambda, &grid);
        let (r1lp, r2lp, _) = residuals(geometry, h, a, lambda + dl, &grid);
        let (r1lm, r2lm, _) = residuals(geometry, h, a, lambda - dl, &grid);
        let j11 = (r1ap - r1am) / (2.0 * da);
        let j12 = (r1lp - r1lm) / (2.0 * dl);
        let j21 = (r2ap - r2am) / (2.0 * da);
        let j22 = (r2lp - r2lm) / (2.0 * dl);
        let det = j11 * j22 - j12 * j21;
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(CoreError::NewtonDiverged {
                residuals: vec![r1, r2],
                iters: 0,
            });
        }
        let mut step_a = -(j22 * r1 - j12 * r2) / det;
        let mut step_l = -(-j21 * r1 + j11 * r2) / det;
        // damping: at most 10% relative change per iteration
        let cap_a = 0.1 * a;
        let cap_l = 0.1 * lambda;
        if step_a.abs() > cap_a {
            step_a = cap_a * step_a.signum();
        }
        if step_l.abs() > cap_l {
            step_l = cap_l * step_l.signum();
        }
        a += step_a;
        lambda += step_l;
        if !(a > 0.0 && lambda > 0.0) {
            return Err(CoreError::NewtonDiverged {
                residuals: vec![r1, r2],
                iters: 0,
            });
        }
    }
    if !converged {
        return Err(CoreError::NewtonDiverged {
            residuals: vec![last.0, last.1],
            iters: 60,
        });
    }

    let (_, _, traj) = residuals(geometry, h, a, lambda, &grid);
    Ok(populate(geometry, h, a, lambda, grid, traj, cfg, false, 0))
}

/// Assemble a `ProfileSolution` from a solved trajectory. Shared with the
/// direct maximizer.
#[allow(clippy::too_many_arguments)]
pub(crate) fn populate(
    geometry: Geometry,
    h: f64,
    a: f64,
    lambda: f64,
    grid: Grid,
    traj: Trajectory,
    cfg: &SolverConfig,
    stagnation_warning: bool,
    iterations: usize,
) -> ProfileSolution {
    let n = grid.t.len();
    let extended = cfg.precision == Precision::Extended;

    // functional sums over the grid
    let (i0, i1, i2, f_dv, f_vdv, kin) = if extended {
        let epsi = |i: usize| {
            let (p, _) = psi_dd(geometry, h, traj.v[i], grid.t[i]);
            p.exp()
        };
        let i0 = simpson_dd(&grid, epsi);
        let i1 = simpson_dd(&grid, |i| {
            epsi(i).mul(Dd::from(traj.v[i]).sub(Dd::from(h)))
        });
        let i2 = simpson_dd(&grid, |i| {
            epsi(i).mul(Dd::from(traj.v[i]).sub(Dd::from(h)).sqr())
        });
        let f_dv = simpson_dd(&grid, |i| {
            let (p, pv) = psi_dd(geometry, h, traj.v[i], grid.t[i]);
            p.exp().mul(pv)
        });
        let f_vdv = simpson_dd(&grid, |i| {
            let (p, pv) = psi_dd(geometry, h, traj.v[i], grid.t[i]);
            p.exp().mul(pv).mul(Dd::from(traj.v[i]))
        });
        let kin = simpson_dd(&grid, |i| Dd::from(traj.v_dot[i]).sqr());
        (
            i0.to_f64(),
            i1.to_f64(),
            i2.to_f64(),
            f_dv.to_f64(),
            f_vdv.to_f64(),
            kin.to_f64(),
        )
    } else {
        let epsi = |i: usize| psi(geometry, h, traj.v[i], grid.t[i]).psi.exp();
        let i0 = simpson(&grid, epsi);
        let i1 = simpson(&grid, |i| epsi(i) * (traj.v[i] - h));
        let i2 = simpson(&grid, |i| epsi(i) * (traj.v[i] - h) * (traj.v[i] - h));
        let f_dv = simpson(&grid, |i| {
            let p = psi(geometry, h, traj.v[i], grid.t[i]);
            p.psi.exp() * p.psi_v
        });
        let f_vdv = simpson(&grid, |i| {
            let p = psi(geometry, h, traj.v[i], grid.t[i]);
            p.psi.exp() * p.psi_v * traj.v[i]
        });
        let kin = simpson(&grid, |i| traj.v_dot[i] * traj.v_dot[i]);
        (i0, i1, i2, f_dv, f_vdv, kin)
    };

    let w_end = traj.v_dot[n - 1];
    let kinetic = kin + 0.5 * w_end * w_end;
    let epsi0 = psi(geometry, h, 0.0, 0.0).psi.exp();

    // Euler-Lagrange integral identities, as relative residuals
    let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);
    let residuals = [
        rel(lambda * a * a / 2.0, 2.0 * i0 - epsi0),
        rel(lambda * a, f_dv),
        rel(lambda * kinetic, f_vdv),
    ];

    // transition time: cubic Hermite root of v'(t) = a/2 on the bracketing
    // interval, using the known acceleration at the nodes
    let half = a / 2.0;
    let ln_lambda = lambda.ln();
    let mut t_a = f64::NAN;
    for i in 1..n {
        if traj.v_dot[i] <= half && traj.v_dot[i - 1] > half {
            let (t0, t1) = (grid.t[i - 1], grid.t[i]);
            let (w0, w1) = (traj.v_dot[i - 1], traj.v_dot[i]);
            let a0 = accel(geometry, h, ln_lambda, traj.v[i - 1], t0);
            let a1 = accel(geometry, h, ln_lambda, traj.v[i], t1);
            let dt = t1 - t0;
            // Hermite cubic for v' on [t0, t1], Newton from the midpoint
            let mut s = 0.5f64;
            for _ in 0..30 {
                let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
                let h10 = s * s * s - 2.0 * s * s + s;
                let h01 = -2.0 * s * s * s + 3.0 * s * s;
                let h11 = s * s * s - s * s;
                let val = h00 * w0 + h10 * dt * a0 + h01 * w1 + h11 * dt * a1 - half;
                let d00 = 6.0 * s * s - 6.0 * s;
                let d10 = 3.0 * s * s - 4.0 * s + 1.0;
                let d01 = -6.0 * s * s + 6.0 * s;
                let d11 = 3.0 * s * s - 2.0 * s;
                let der = d00 * w0 + d10 * dt * a0 + d01 * w1 + d11 * dt * a1;
                if der == 0.0 {
                    break;
                }
                let s_new = (s - val / der).clamp(0.0, 1.0);
                if (s_new - s).abs() < 1e-14 {
                    s = s_new;
                    break;
                }
                s = s_new;
            }
            t_a = t0 + s * dt;
            break;
        }
    }

    let v_end = traj.v[n - 1];
    let v_inf = v_end + 0.5 * w_end;
    let s0 = match geometry {
        Geometry::PlaneCritical => i0 + 0.5 * epsi_end(geometry, h, &traj, &grid),
        Geometry::DiskCritical => 2.0 * (i0 + 0.5 * epsi_end(geometry, h, &traj, &grid)),
    };

    ProfileSolution {
        geometry,
        h,
        a,
        lagrange: lambda,
        t_grid: grid.t,
        v: traj.v,
        v_dot: traj.v_dot,
        s0,
        t_a,
        v_inf,
        moments: [i0, i1, i2],
        residuals,
        kinetic,
        stagnation_warning,
        iterations,
    }
}

/// Analytic tail of `int e^psi` past the truncated domain (the phase decays
/// like `e^{-2t}` there).
fn epsi_end(geometry: Geometry, h: f64, traj: &Trajectory, grid: &Grid) -> f64 {
    let n = grid.t.len();
    psi(geometry, h, traj.v[n - 1], grid.t[n - 1]).psi.exp()
}
