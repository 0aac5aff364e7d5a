use super::*;
use crate::linalg::{embed_real, ComplexMatrix, HermitianMatrix, RealMatrix, C64};
use crate::test_support::{rand_complex, rand_hermitian, rand_pd, rng};

fn real_to_complex(r: &RealMatrix) -> ComplexMatrix {
    let n = r.dim();
    ComplexMatrix::from_fn(n, n, |i, j| C64::new(r.get(i, j), 0.0))
}

fn lambda_max_sdp(a: &HermitianMatrix) -> f64 {
    let n = a.dim();
    let mut layout = VariableLayout::new();
    let t = layout.add("t", VarKind::Free);
    let mut p = LmiProblem::new(layout);
    p.maximize_linear(ScalarExpr::constant(0.0).plus_var(t, -1.0));
    p.add_lmi(
        MatrixExpr::new(n)
            .plus_scalar_identity(t, 1.0)
            .plus_constant(&(-a.as_matrix())),
    );
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert!(r.is_optimal());
    r.scalar(t)
}

#[test]
fn logdet_minus_trace_maximiser_is_identity() {
    let mut layout = VariableLayout::new();
    let w = layout.add("w", VarKind::HermitianPsd(2));
    let mut p = LmiProblem::new(layout);
    p.add_logdet(1.0, MatrixExpr::new(2).plus_var_block(w, 0, 1.0));
    p.maximize_linear(ScalarExpr::constant(0.0).plus_trace(w, -1.0));
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let diff = &r.hermitian(w).into_matrix() - &ComplexMatrix::identity(2);
    assert!(diff.max_abs() < 1e-6, "{:?}", r.hermitian(w));
    assert!((r.objective + 2.0).abs() < 1e-6);
}

#[test]
fn lambda_max_of_diagonal() {
    let t = lambda_max_sdp(&HermitianMatrix::real_diag(&[1.0, 2.0]));
    assert!((t - 2.0).abs() < 1e-6, "{t}");
}

#[test]
fn lambda_max_matches_eigensolver() {
    let mut g = rng(11);
    for k in 0..40 {
        let n = 1 + k % 6;
        let a = rand_hermitian(&mut g, n);
        let want = a.max_eigenvalue().unwrap();
        let got = lambda_max_sdp(&a);
        assert!((got - want).abs() < 1e-6, "n={n}: {got} vs {want}");
    }
}

#[test]
fn phase_one_accepts_psd_cone() {
    let mut layout = VariableLayout::new();
    let w = layout.add("w", VarKind::HermitianPsd(2));
    let p = LmiProblem::new(layout);
    let r = phase_one_point(&p).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(r.hermitian(w).min_eigenvalue().unwrap() >= 1e-6);
}

#[test]
fn phase_one_detects_contradiction() {
    let mut layout = VariableLayout::new();
    let x = layout.add("x", VarKind::Free);
    let mut p = LmiProblem::new(layout);
    p.add_nonneg(ScalarExpr::var(x).plus_constant(-1.0));
    p.add_nonneg(ScalarExpr::constant(0.0).plus_var(x, -1.0));
    let r = phase_one_point(&p).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    assert!(r.phase1_slack.unwrap() > 1e-9);
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
}

#[test]
fn phase_one_finds_interior_of_random_lmi_set() {
    let mut g = rng(5);
    for _ in 0..10 {
        // LMIs C_k + Σ x_i A_ki ⪰ 0 with C_k chosen so a hidden x* is interior.
        let mut layout = VariableLayout::new();
        let xs: Vec<Var> = (0..3).map(|i| layout.add(&format!("x{i}"), VarKind::Free)).collect();
        let hidden = [2.0, -1.0, 0.5];
        let mut p = LmiProblem::new(layout);
        for _ in 0..3 {
            let n = 3;
            let mats: Vec<HermitianMatrix> = (0..3).map(|_| rand_hermitian(&mut g, n)).collect();
            let mut c = rand_pd(&mut g, n).into_matrix();
            for (m, h) in mats.iter().zip(hidden) {
                c -= &m.as_matrix().scale_real(h);
            }
            let mut e = MatrixExpr::new(n).plus_constant(&c);
            for (m, &v) in mats.iter().zip(&xs) {
                e = e.plus_scalar(v, m.as_matrix());
            }
            p.add_lmi(e);
        }
        let r = phase_one_point(&p).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        for m in p.lmis() {
            assert!(m.eval_hermitian(&r.x).min_eigenvalue().unwrap() >= 1e-6);
        }
    }
}

/// Random problem with a Hermitian PSD variable, a free scalar and a
/// nonnegative scalar; returns it with a strictly feasible point.
fn random_problem(seed: u64) -> (LmiProblem, Vec<f64>) {
    let mut g = rng(seed);
    let mut layout = VariableLayout::new();
    let x = layout.add("x", VarKind::HermitianPsd(2));
    let y = layout.add("y", VarKind::Free);
    let z = layout.add("z", VarKind::NonNeg);
    let mut point = vec![0.0; layout.n_params()];
    let x0 = rand_pd(&mut g, 2);
    layout.set_hermitian(&mut point, x, &x0);
    layout.set_scalar(&mut point, y, 0.3);
    layout.set_scalar(&mut point, z, 0.7);

    let mut p = LmiProblem::new(layout);
    let h = rand_hermitian(&mut g, 3);
    let v = rand_complex(&mut g, 2, 1);
    let a = rand_complex(&mut g, 3, 2);
    // logdet(I + A X A^H) + log(1 + y + z) - tr(H'X) - y - 2z
    p.add_logdet(
        1.0,
        MatrixExpr::new(3)
            .plus_identity(1.0)
            .plus_map(x, |b| a.matmul(b).matmul(&a.adjoint())),
    );
    p.add_log(0.5, ScalarExpr::constant(1.0).plus_var(y, 1.0).plus_var(z, 1.0));
    p.maximize_linear(
        ScalarExpr::constant(0.0)
            .plus_trace(x, -1.0)
            .plus_quad(x, &v, -0.1)
            .plus_var(y, -1.0)
            .plus_var(z, -2.0),
    );
    // (c + y) I - H - X-coupled block ⪰ 0 with c large enough at the point.
    let shift = h.max_eigenvalue().unwrap() + 2.0 * x0.max_eigenvalue().unwrap() + 1.0;
    p.add_lmi(
        MatrixExpr::new(3)
            .plus_identity(shift)
            .plus_constant(&(-h.as_matrix()))
            .plus_scalar_identity(y, 1.0)
            .plus_map(x, |b| {
                let mut m = ComplexMatrix::zeros(3, 3);
                m.set_block(0, 0, &b.scale_real(-1.0));
                m
            }),
    );
    p.add_nonneg(ScalarExpr::constant(10.0).plus_trace(x, -1.0).plus_var(z, -1.0));
    (p, point)
}

#[test]
fn barrier_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let (p, x) = random_problem(seed);
        for &t in &[1.0, 37.0] {
            let g = barrier_gradient(&p, &x, t).expect("point is strictly feasible");
            for k in 0..x.len() {
                let step = 1e-6 * x[k].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += step;
                xm[k] -= step;
                let fd = (barrier_value(&p, &xp, t).unwrap() - barrier_value(&p, &xm, t).unwrap()) / (2.0 * step);
                let rel = (fd - g[k]).abs() / g[k].abs().max(1.0);
                assert!(rel <= 1e-5, "seed {seed} param {k}: {} vs {fd}", g[k]);
            }
        }
    }
}

#[test]
fn stage_objectives_are_monotone() {
    for seed in 0..10 {
        let (p, _) = random_problem(seed);
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        for w in r.stage_objectives.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "seed {seed}: {:?}", r.stage_objectives);
        }
        assert!(p.max_violation(&r.x).unwrap() <= 1e-8);
    }
}

#[test]
fn different_starting_points_agree() {
    for seed in 0..10 {
        let (p, x) = random_problem(seed);
        let a = solve(&p, &SolveOptions::default()).unwrap();
        let b = solve(
            &p,
            &SolveOptions {
                initial: Some(x),
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!(b.phase1_slack.is_none());
        assert!((a.objective - b.objective).abs() <= 1e-6, "{} vs {}", a.objective, b.objective);
    }
}

#[test]
fn complex_and_embedded_real_problems_agree() {
    let mut g = rng(21);
    for _ in 0..5 {
        let n = 3;
        let c = rand_pd(&mut g, n);
        let build = |real: bool| {
            let mut layout = VariableLayout::new();
            let w = layout.add("w", VarKind::HermitianFree(n));
            let mut p = LmiProblem::new(layout);
            let embed = |m: &ComplexMatrix| real_to_complex(&embed_real(&HermitianMatrix::symmetrize(m)));
            let block = |sign: f64, constant: Option<&HermitianMatrix>| {
                let mut e = if real { MatrixExpr::real(2 * n) } else { MatrixExpr::new(n) };
                if let Some(c) = constant {
                    e = e.plus_constant(&if real { embed(c.as_matrix()) } else { c.as_matrix().clone() });
                }
                e.plus_map(w, |b| {
                    let m = b.scale_real(sign);
                    if real {
                        embed(&m)
                    } else {
                        m
                    }
                })
            };
            // maximise logdet(W) - tr(W) subject to C - W ⪰ 0
            p.add_logdet(if real { 0.5 } else { 1.0 }, block(1.0, None));
            p.maximize_linear(ScalarExpr::constant(0.0).plus_trace(w, -1.0));
            p.add_lmi(block(-1.0, Some(&c)));
            solve(&p, &SolveOptions::default()).unwrap()
        };
        let a = build(false);
        let b = build(true);
        assert!(a.is_optimal() && b.is_optimal());
        assert!((a.objective - b.objective).abs() <= 1e-7, "{} vs {}", a.objective, b.objective);
    }
}

#[test]
fn equality_constraints_are_eliminated() {
    let mut layout = VariableLayout::new();
    let x = layout.add("x", VarKind::NonNeg);
    let y = layout.add("y", VarKind::NonNeg);
    let mut p = LmiProblem::new(layout);
    p.add_log(1.0, ScalarExpr::var(x));
    p.add_log(1.0, ScalarExpr::var(y));
    p.add_zero(ScalarExpr::constant(-2.0).plus_var(x, 1.0).plus_var(y, 1.0));
    let r = solve(&p, &SolveOptions::default()).unwrap();
    assert!(r.is_optimal());
    assert!((r.scalar(x) - 1.0).abs() < 1e-6 && (r.scalar(y) - 1.0).abs() < 1e-6);
    assert!(r.objective.abs() < 1e-6);

    let mut p2 = p.clone();
    p2.add_zero(ScalarExpr::constant(-3.0).plus_var(x, 1.0).plus_var(y, 1.0));
    assert_eq!(solve(&p2, &SolveOptions::default()).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn foreign_parameter_is_rejected() {
    let mut layout = VariableLayout::new();
    layout.add("x", VarKind::Free);
    let mut other = VariableLayout::new();
    other.add("a", VarKind::Free);
    let stranger = other.add("b", VarKind::Free);
    let mut p = LmiProblem::new(layout);
    p.add_nonneg(ScalarExpr::var(stranger));
    assert!(matches!(solve(&p, &SolveOptions::default()), Err(crate::Error::Problem(_))));
}

#[test]
fn non_positive_weight_is_rejected() {
    let mut layout = VariableLayout::new();
    let x = layout.add("x", VarKind::NonNeg);
    let mut p = LmiProblem::new(layout);
    p.add_log(-1.0, ScalarExpr::var(x));
    assert!(solve(&p, &SolveOptions::default()).is_err());
}

#[test]
fn hermitian_params_roundtrip() {
    let mut g = rng(2);
    let h = rand_hermitian(&mut g, 4);
    let mut p = vec![0.0; 16];
    hermitian_to_params(&h, &mut p);
    assert_eq!(hermitian_from_params(&p, 4), h);
    let basis = hermitian_basis(4);
    let mut acc = ComplexMatrix::zeros(4, 4);
    for (b, v) in basis.iter().zip(&p) {
        acc += &b.scale_real(*v);
    }
    assert!((&acc - h.as_matrix()).max_abs() < 1e-14);
}
