use log::{debug, trace};

use super::compiled::{Affine, Compiled, SymBlock};
use super::problem::{LmiProblem, Relation, SolveOptions, SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

const ARMIJO_ALPHA: f64 = 0.3;
const ARMIJO_BETA: f64 = 0.8;
const STALL_RATIO: f64 = 0.5;
const STALL_LIMIT: usize = 4;
const MIN_STEP: f64 = 1e-10;
/// Newton decrement (standard scaling) below which the full step is
/// taken without a sufficient-decrease test.
const PURE_NEWTON_DECREMENT: f64 = 0.25;
const DAMPING_BASE: f64 = 1e-12;
const DAMPING_CAP: f64 = 1e6;
const PHASE1_GAP_TOL: f64 = 1e-10;
const EQUALITY_TOL: f64 = 1e-10;
/// Half-width of the phase I box relative to the starting point.
const PHASE1_BOX: f64 = 1e4;

pub(crate) fn compile(problem: &LmiProblem) -> (Compiled, Vec<Affine>) {
    let n = problem.layout.n_params();
    let mut lin = vec![0.0; n];
    for &(p, a) in &problem.objective.linear.coeffs {
        lin[p] += a;
    }
    let logs = problem
        .objective
        .logs
        .iter()
        .map(|(w, e)| (*w, Affine::from_expr(e, n)))
        .collect();
    let logdets = problem
        .objective
        .logdets
        .iter()
        .map(|(w, e)| {
            let (b, bw) = SymBlock::from_expr(e, n);
            (w * bw, b)
        })
        .collect();
    let cones = problem
        .all_lmis()
        .iter()
        .map(|e| {
            let (b, bw) = SymBlock::from_expr(e, n);
            (bw, b)
        })
        .collect();
    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();
    for (e, rel) in problem.all_linear() {
        match rel {
            Relation::NonNeg => ineqs.push(Affine::from_expr(&e, n)),
            Relation::Zero => eqs.push(Affine::from_expr(&e, n)),
        }
    }
    (
        Compiled {
            n,
            lin,
            lin_c: problem.objective.linear.constant,
            logs,
            logdets,
            cones,
            ineqs,
        },
        eqs,
    )
}

/// Barrier value `φ_t(x) = -f0(x) - (1/t)·(Σ w ln det G + Σ ln s)` over the
/// full parameter vector (equalities ignored).
pub fn barrier_value(problem: &LmiProblem, x: &[f64], t: f64) -> Option<f64> {
    compile(problem).0.phi(x, t)
}

/// Analytic gradient of [`barrier_value`].
pub fn barrier_gradient(problem: &LmiProblem, x: &[f64], t: f64) -> Option<Vec<f64>> {
    compile(problem).0.eval(x, t, false).map(|e| e.grad)
}

/// Particular solution and orthonormal null-space basis of `A x + c = 0`.
fn eliminate_equalities(eqs: &[Affine], n: usize) -> Result<Option<(Vec<f64>, Vec<Vec<f64>>)>> {
    let m = eqs.len();
    let mut a: Vec<Vec<f64>> = eqs
        .iter()
        .map(|e| {
            let mut row = vec![0.0; n + 1];
            for &(p, v) in &e.a {
                row[p] += v;
            }
            row[n] = -e.c;
            row
        })
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == m {
            break;
        }
        let (best, val) = (row..m)
            .map(|r| (r, a[r][col].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= 1e-12 * scale {
            continue;
        }
        a.swap(row, best);
        let piv = a[row][col];
        for v in a[row].iter_mut() {
            *v /= piv;
        }
        for r in 0..m {
            if r != row && a[r][col] != 0.0 {
                let f = a[r][col];
                for k in 0..=n {
                    a[r][k] -= f * a[row][k];
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if a[row..].iter().any(|r| r[n].abs() > EQUALITY_TOL * scale) {
        return Ok(None);
    }
    let mut x0 = vec![0.0; n];
    for (r, &c) in pivots.iter().enumerate() {
        x0[c] = a[r][n];
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut basis: Vec<Vec<f64>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![0.0; n];
            v[f] = 1.0;
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = -a[r][f];
            }
            v
        })
        .collect();
    // Modified Gram–Schmidt so that z = N^T (x - x0) recovers coordinates.
    for i in 0..basis.len() {
        for j in 0..i {
            let d: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
            let bj = basis[j].clone();
            for (v, b) in basis[i].iter_mut().zip(&bj) {
                *v -= d * b;
            }
        }
        let nrm = basis[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(Error::Solver("degenerate equality null-space".into()));
        }
        for v in basis[i].iter_mut() {
            *v /= nrm;
        }
    }
    Ok(Some((x0, basis)))
}

#[derive(Debug, PartialEq, Eq)]
enum Exit {
    Converged,
    Stopped,
    IterationLimit,
}

struct Outcome {
    z: Vec<f64>,
    t: f64,
    iters: usize,
    stages: Vec<f64>,
    exit: Exit,
}

struct Hooks<'a> {
    /// Ends the whole barrier run early.
    stop: &'a dyn Fn(&[f64]) -> bool,
    /// Largest admissible step length along a Newton direction.
    step_cap: &'a dyn Fn(&[f64], &[f64]) -> f64,
}

/// Damped Newton direction for `H d = -g`.
fn newton_direction(h: &RealMatrix, g: &[f64]) -> Result<Vec<f64>> {
    let n = h.dim();
    let scale = h.max_abs_diag().max(1.0);
    let mut mu = 0.0;
    loop {
        let mut hd = h.clone();
        if mu > 0.0 {
            for i in 0..n {
                hd.add_to(i, i, mu * scale);
            }
        }
        if let Ok(c) = hd.cholesky() {
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            return Ok(c.solve(&rhs));
        }
        mu = if mu == 0.0 { DAMPING_BASE } else { mu * 10.0 };
        if mu > DAMPING_CAP {
            return Err(Error::Solver("Newton system could not be factorised".into()));
        }
    }
}

/// Minimises `φ_t` at fixed `t` starting from a strictly feasible `z`.
fn center(
    comp: &Compiled,
    z: &mut Vec<f64>,
    t: f64,
    opts: &SolveOptions,
    hooks: &Hooks,
    iters: &mut usize,
) -> Result<Exit> {
    let mut best_dec2 = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..opts.max_inner {
        let ev = comp
            .eval(z, t, true)
            .ok_or_else(|| Error::Solver("iterate left the barrier domain".into()))?;
        let h = ev.hess.expect("Hessian requested");
        let dz = newton_direction(&h, &ev.grad)?;
        let slope: f64 = ev.grad.iter().zip(&dz).map(|(a, b)| a * b).sum();
        // Decrement of the standard-form function t·φ_t.
        let dec2 = -slope * t;
        trace!("t={t:e} phi={:.15e} decrement²={dec2:e}", ev.phi);
        if dec2 / 2.0 <= opts.newton_tol {
            return Ok(Exit::Converged);
        }
        let pure = dec2.max(0.0).sqrt() < PURE_NEWTON_DECREMENT;
        // Inside the quadratic region Newton halves the decrement at least;
        // when round-off stops that, the point is as centred as it gets.
        if pure && dec2 > STALL_RATIO * best_dec2 {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                return Ok(Exit::Converged);
            }
        } else {
            stalled = 0;
        }
        best_dec2 = best_dec2.min(dec2);
        *iters += 1;
        let mut s = (hooks.step_cap)(z, &dz).min(1.0);
        let mut trial: Vec<f64>;
        loop {
            trial = z.iter().zip(&dz).map(|(a, b)| a + s * b).collect();
            match comp.phi(&trial, t) {
                Some(p) if pure || p <= ev.phi + ARMIJO_ALPHA * s * slope => break,
                _ => {}
            }
            s *= ARMIJO_BETA;
            if s < MIN_STEP {
                // No representable decrease left at this precision.
                return Ok(Exit::Converged);
            }
        }
        *z = trial;
        if (hooks.stop)(z) {
            return Ok(Exit::Stopped);
        }
    }
    Ok(Exit::IterationLimit)
}

fn barrier_loop(
    comp: &Compiled,
    mut z: Vec<f64>,
    opts: &SolveOptions,
    gap_tol: f64,
    hooks: &Hooks,
) -> Result<Outcome> {
    let degree = comp.degree();
    let mut t = opts.t0;
    let mut iters = 0;
    let mut stages = Vec::new();
    for stage in 0..opts.max_outer {
        let exit = center(comp, &mut z, t, opts, hooks, &mut iters)?;
        let f = comp.objective(&z).unwrap_or(f64::NAN);
        stages.push(f);
        debug!("stage {stage}: t={t:e} objective={f:.12e} newton={iters}");
        match exit {
            Exit::Converged => {}
            other => {
                return Ok(Outcome {
                    z,
                    t,
                    iters,
                    stages,
                    exit: other,
                })
            }
        }
        if degree / t <= gap_tol {
            return Ok(Outcome {
                z,
                t,
                iters,
                stages,
                exit: Exit::Converged,
            });
        }
        t *= opts.t_factor;
    }
    Ok(Outcome {
        z,
        t,
        iters,
        stages,
        exit: Exit::IterationLimit,
    })
}

enum PhaseOne {
    Feasible(Vec<f64>, f64),
    Infeasible(Vec<f64>, f64),
    IterationLimit(Vec<f64>, f64),
}

fn phase_one(comp: &Compiled, z0: &[f64], opts: &SolveOptions) -> Result<PhaseOne> {
    let bound = PHASE1_BOX * z0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let p1 = comp.phase_one(bound);
    let n = comp.n;
    let mut start = z0.to_vec();
    start.push(comp.phase_one_start(z0));
    let margin = opts.phase1_margin;
    let stop = move |w: &[f64]| w[n] <= -margin;
    // Phase I is often unbounded below; never overshoot past slack -1.
    let step_cap = move |w: &[f64], d: &[f64]| {
        if d[n] < 0.0 && w[n] + d[n] < -1.0 {
            ((w[n] + 1.0) / -d[n]).max(0.0)
        } else {
            1.0
        }
    };
    let hooks = Hooks {
        stop: &stop,
        step_cap: &step_cap,
    };
    let out = barrier_loop(&p1, start, opts, PHASE1_GAP_TOL, &hooks)?;
    let s = out.z[n];
    let z = out.z[..n].to_vec();
    debug!("phase I: slack {s:e} after {} Newton steps", out.iters);
    Ok(match out.exit {
        Exit::Stopped => PhaseOne::Feasible(z, s),
        _ if s < 0.0 => PhaseOne::Feasible(z, s),
        Exit::Converged if s > opts.infeasible_tol => PhaseOne::Infeasible(z, s),
        Exit::Converged => {
            return Err(Error::Solver(format!(
                "feasible set has no interior (phase I slack {s:e})"
            )))
        }
        Exit::IterationLimit => PhaseOne::IterationLimit(z, s),
    })
}

/// Finds a strictly feasible point or certifies infeasibility.
pub fn phase_one_point(problem: &LmiProblem) -> Result<SolveResult> {
    solve_impl(problem, &SolveOptions::default(), true)
}

/// Maximises the problem's objective with a primal barrier method.
pub fn solve(problem: &LmiProblem, opts: &SolveOptions) -> Result<SolveResult> {
    solve_impl(problem, opts, false)
}

fn solve_impl(problem: &LmiProblem, opts: &SolveOptions, feasibility_only: bool) -> Result<SolveResult> {
    problem.validate()?;
    let layout = problem.layout.clone();
    let n = layout.n_params();
    let (full, eqs) = compile(problem);

    let (x0, basis) = if eqs.is_empty() {
        (vec![0.0; n], None)
    } else {
        match eliminate_equalities(&eqs, n)? {
            Some((x0, basis)) => (x0, Some(basis)),
            None => {
                return Ok(SolveResult::new(
                    SolveStatus::Infeasible,
                    vec![0.0; n],
                    f64::NAN,
                    0.0,
                    0,
                    Vec::new(),
                    None,
                    layout,
                ))
            }
        }
    };
    let comp = match &basis {
        Some(b) => full.substitute(&x0, b),
        None => full,
    };
    let to_z = |x: &[f64]| -> Vec<f64> {
        match &basis {
            Some(b) => b
                .iter()
                .map(|col| col.iter().zip(x.iter().zip(&x0)).map(|(c, (a, o))| c * (a - o)).sum())
                .collect(),
            None => x.to_vec(),
        }
    };
    let to_x = |z: &[f64]| -> Vec<f64> {
        match &basis {
            Some(b) => {
                let mut x = x0.clone();
                for (zk, col) in z.iter().zip(b) {
                    for (xi, c) in x.iter_mut().zip(col) {
                        *xi += zk * c;
                    }
                }
                x
            }
            None => z.to_vec(),
        }
    };

    let user_start = match &opts.initial {
        Some(x) if x.len() == n => Some(to_z(x)),
        Some(x) => {
            return Err(Error::Problem(format!(
                "initial point has {} entries, layout has {n}",
                x.len()
            )))
        }
        None => None,
    };
    let strictly_feasible = |z: &[f64]| comp.phi(z, 1.0).is_some();

    let mut phase1_slack = None;
    let z_start = match user_start {
        Some(z) if !feasibility_only && strictly_feasible(&z) => z,
        other => {
            let z0 = other.unwrap_or_else(|| vec![0.0; comp.n]);
            match phase_one(&comp, &z0, opts)? {
                PhaseOne::Feasible(z, s) => {
                    phase1_slack = Some(s);
                    z
                }
                PhaseOne::Infeasible(z, s) => {
                    return Ok(SolveResult::new(
                        SolveStatus::Infeasible,
                        to_x(&z),
                        f64::NAN,
                        0.0,
                        0,
                        Vec::new(),
                        Some(s),
                        layout,
                    ))
                }
                PhaseOne::IterationLimit(z, s) => {
                    return Ok(SolveResult::new(
                        SolveStatus::IterationLimit,
                        to_x(&z),
                        f64::NAN,
                        0.0,
                        0,
                        Vec::new(),
                        Some(s),
                        layout,
                    ))
                }
            }
        }
    };
    if feasibility_only {
        let obj = comp.objective(&z_start).unwrap_or(f64::NAN);
        return Ok(SolveResult::new(
            SolveStatus::Optimal,
            to_x(&z_start),
            obj,
            0.0,
            0,
            Vec::new(),
            phase1_slack,
            layout,
        ));
    }

    let hooks = Hooks {
        stop: &|_| false,
        step_cap: &|_, _| 1.0,
    };
    let out = barrier_loop(&comp, z_start, opts, opts.gap_tol, &hooks)?;
    let status = match out.exit {
        Exit::Converged => SolveStatus::Optimal,
        _ => SolveStatus::IterationLimit,
    };
    let objective = comp.objective(&out.z).unwrap_or(f64::NAN);
    Ok(SolveResult::new(
        status,
        to_x(&out.z),
        objective,
        out.t,
        out.iters,
        out.stages,
        phase1_slack,
        layout,
    ))
}
