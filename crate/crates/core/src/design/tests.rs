use super::*;
use crate::channel::{sample_ball, sample_channels, ChannelSet, SystemConfig};
use crate::linalg::{kronecker, vec, ComplexMatrix, HermitianMatrix, C64};
use crate::solver::{solve, SolveOptions};
use crate::test_support::{rand_complex, rand_pd, rng};
use proptest::prelude::*;

fn zero_aux(ne: usize) -> AuxiliaryBlock {
    AuxiliaryBlock {
        a1: 1.0,
        a2: 1.0,
        w_e: HermitianMatrix::identity(ne),
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
        m: HermitianMatrix::zeros(ne),
        lambda_beta: 0.0,
        lambda_gamma: 0.0,
        lambda_m: 0.0,
    }
}

fn zero_channels(config: &SystemConfig) -> ChannelSet {
    let mut ch = sample_channels(config, 1).unwrap();
    ch.g = C64::new(0.0, 0.0);
    ch.g_b = ComplexMatrix::zeros(config.n_r, 1);
    ch
}

#[test]
fn f_at_zero_point() {
    let config = SystemConfig::default();
    let ch = zero_channels(&config);
    let z = HermitianMatrix::zeros(config.n_t);
    let f = evaluate_f(&z, &z, &zero_aux(config.n_e), &ch, &config).unwrap();
    // The two +1 constants cancel against -a1 and -a2; only -tr(I) survives.
    assert!((f + config.n_e as f64).abs() < 1e-14, "{f}");
}

#[test]
fn f_is_linear_in_beta() {
    let config = SystemConfig::default();
    let ch = sample_channels(&config, 3).unwrap();
    let mut r = rng(4);
    let q = rand_pd(&mut r, 3);
    let omega = rand_pd(&mut r, 3);
    let mut aux = zero_aux(2);
    aux.beta = 0.7;
    let f1 = evaluate_f(&q, &omega, &aux, &ch, &config).unwrap();
    aux.beta = 1.4;
    let f2 = evaluate_f(&q, &omega, &aux, &ch, &config).unwrap();
    assert!((f1 - f2 - 0.7).abs() < 1e-12);
}

#[test]
fn f_rejects_singular_i_plus_m() {
    let config = SystemConfig::default();
    let ch = sample_channels(&config, 3).unwrap();
    let z = HermitianMatrix::zeros(3);
    let mut aux = zero_aux(2);
    aux.m = HermitianMatrix::scaled_identity(2, -1.0);
    assert!(matches!(evaluate_f(&z, &z, &aux, &ch, &config), Err(Error::Domain(_))));
}

/// Straight transcription using explicit products and eigenvalues.
fn f_reference(q: &HermitianMatrix, omega: &HermitianMatrix, aux: &AuxiliaryBlock, ch: &ChannelSet, pt: f64) -> f64 {
    let h = &ch.h_b;
    let hh = h.adjoint();
    let s = q.as_matrix() + omega.as_matrix();
    let hsh = hh.matmul(&s).matmul(h)[(0, 0)].re;
    let hoh = hh.matmul(omega.as_matrix()).matmul(h)[(0, 0)].re;
    let g2 = ch.g.re * ch.g.re + ch.g.im * ch.g.im;
    let gb2: f64 = (0..ch.g_b.rows()).map(|i| ch.g_b[(i, 0)].norm_sqr()).sum();
    let ld = |m: &HermitianMatrix| m.eig().unwrap().values.iter().map(|x| x.ln()).sum::<f64>();
    let ne = aux.m.dim();
    let ipm = HermitianMatrix::symmetrize(&(&ComplexMatrix::identity(ne) + aux.m.as_matrix()));
    let tr_w: f64 = (0..ne).map(|i| aux.w_e[(i, i)].re).sum();
    let mut f = (1.0 + pt * g2 + hsh).ln();
    f += -aux.a1 * (pt * g2 + hoh + 1.0) + aux.a1.ln() + 1.0;
    f += -aux.a2 * (1.0 + aux.alpha) + aux.a2.ln() + 1.0;
    f += (1.0 + pt * gb2 + aux.alpha).ln();
    f += ld(&aux.w_e) - tr_w - aux.beta - pt * aux.gamma + ld(&ipm);
    f
}

#[test]
fn f_matches_reference() {
    let config = SystemConfig::default();
    for seed in 0..10 {
        let ch = sample_channels(&config, seed).unwrap();
        let mut r = rng(100 + seed);
        let aux = AuxiliaryBlock {
            a1: 0.3,
            a2: 0.8,
            w_e: rand_pd(&mut r, 2),
            alpha: 0.2,
            beta: 1.3,
            gamma: 0.01,
            m: rand_pd(&mut r, 2).scale(0.1),
            lambda_beta: 0.0,
            lambda_gamma: 0.0,
            lambda_m: 0.0,
        };
        let q = rand_pd(&mut r, 3);
        let omega = rand_pd(&mut r, 3);
        let a = evaluate_f(&q, &omega, &aux, &ch, &config).unwrap();
        let b = f_reference(&q, &omega, &aux, &ch, config.p_t());
        assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} vs {b}");
    }
}

fn block1_solution(config: &SystemConfig, seed: u64) -> (ChannelSet, HermitianMatrix, HermitianMatrix, AuxiliaryBlock) {
    let ch = sample_channels(config, seed).unwrap();
    let mut r = rng(seed + 7);
    let w = rand_pd(&mut r, config.n_e);
    let b = build_block1_problem(0.5, 0.9, &w, &ch, config).unwrap();
    let res = solve(&b.problem, &SolveOptions::default()).unwrap();
    assert!(res.is_optimal(), "{:?} slack {:?} t {} it {} stages {:?}", res.status, res.phase1_slack, res.t, res.newton_iters, res.stage_objectives);
    let mut fixed = zero_aux(config.n_e);
    fixed.a1 = 0.5;
    fixed.a2 = 0.9;
    fixed.w_e = w;
    let (q, omega, aux) = b.read(&res, &fixed);
    let f = evaluate_f(&q, &omega, &aux, &ch, config).unwrap();
    assert!((f - res.objective).abs() < 1e-8 * f.abs().max(1.0), "{f} vs {}", res.objective);
    (ch, q, omega, aux)
}

#[test]
fn block1_zero_radius_beta_bound() {
    let config = SystemConfig {
        delta_hl: 0.0,
        delta_he: 0.0,
        delta_ge: 0.0,
        ..SystemConfig::default()
    };
    let (ch, q, omega, aux) = block1_solution(&config, 5);
    assert!(aux.alpha >= 0.0);
    let s = q.add(&omega);
    let hs = ch.h_e_bar.matmul(s.as_matrix()).matmul(&ch.h_e_bar.adjoint());
    let rhs = aux.w_e.as_matrix().matmul(&hs).trace().re;
    let x0 = vec(&ch.h_e_bar);
    let via_kron = kronecker(&s.transpose(), aux.w_e.as_matrix()).quad_form(&x0).re;
    assert!((rhs - via_kron).abs() < 1e-9 * rhs.abs().max(1.0));
    assert!(aux.beta >= rhs - 1e-6);
    // At the optimum the bound is active.
    assert!(aux.beta - rhs < 1e-5, "{} vs {rhs}", aux.beta);
}

#[test]
fn block1_robust_constraints_hold_on_samples() {
    let config = SystemConfig::default().with_epsilon(0.1);
    let (ch, q, omega, aux) = block1_solution(&config, 11);
    let s = q.add(&omega);
    let w = aux.w_e.as_matrix();
    let lm = s.max_eigenvalue().unwrap();
    assert!(aux.alpha >= config.delta_hl.powi(2) * lm - 1e-8);
    let ld_m = HermitianMatrix::identity(2).add(&aux.m).logdet().unwrap();
    let mut r = rng(99);
    for _ in 0..1000 {
        let dh = sample_ball(&mut r, 2, 3, config.delta_he);
        let dg = sample_ball(&mut r, 2, 1, config.delta_ge);
        let he = &ch.h_e_bar + &dh;
        let ge = &ch.g_e_bar + &dg;
        let tr = w.matmul(&s.congruence(&he)).trace().re;
        assert!(aux.beta >= tr - 1e-6, "beta {} < {tr}", aux.beta);
        assert!(aux.gamma >= w.quad_form(&ge).re - 1e-6);
        let eve = HermitianMatrix::identity(2).add(&omega.congruence(&he));
        assert!(ld_m <= eve.logdet().unwrap() + 1e-6);
    }
}

#[test]
fn block2_examples() {
    let config = SystemConfig {
        delta_hl: 0.0,
        delta_he: 0.0,
        delta_ge: 0.0,
        ..SystemConfig::default()
    };
    let mut ch = zero_channels(&config);
    ch.g_e_bar = ComplexMatrix::zeros(2, 1);
    let z = HermitianMatrix::zeros(3);
    let b = solve_block2(&z, &z, 0.0, None, &ch, &config, &SolveOptions::default()).unwrap();
    assert_eq!(b.a2, 1.0);
    assert_eq!(b.a1, 1.0);
    let diff = b.w_e.sub(&HermitianMatrix::identity(2)).max_abs();
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn block2_matches_nominal_closed_form() {
    // With point balls the optimal W is (I + H S H^H + P_t g g^H)^{-1}.
    let config = SystemConfig {
        delta_hl: 0.0,
        delta_he: 0.0,
        delta_ge: 0.0,
        ..SystemConfig::default()
    };
    let ch = sample_channels(&config, 21).unwrap();
    let mut r = rng(22);
    let q = rand_pd(&mut r, 3);
    let omega = rand_pd(&mut r, 3);
    let b = solve_block2(&q, &omega, 0.3, None, &ch, &config, &SolveOptions::default()).unwrap();
    let s = q.add(&omega);
    let expect = HermitianMatrix::identity(2)
        .add(&s.congruence(&ch.h_e_bar))
        .add(&HermitianMatrix::outer(&ch.g_e_bar).scale(config.p_t()))
        .inverse()
        .unwrap();
    let diff = b.w_e.sub(&expect).max_abs();
    assert!(diff < 1e-6, "{diff}");
    assert!((b.a2 - 1.0 / 1.3).abs() < 1e-15);
}

#[test]
fn extraction_examples() {
    let h = ComplexMatrix::from_real_rows(&[&[0.6], &[0.8]]).unwrap();
    let q = HermitianMatrix::outer(&h);
    let r = extract_rank1(&q, &h).unwrap();
    assert!(r.q_hat.sub(&q).max_abs() < 1e-14);
    assert!((&r.v - &h).max_abs() < 1e-14);

    let e1 = ComplexMatrix::from_real_rows(&[&[1.0], &[0.0]]).unwrap();
    let r = extract_rank1(&HermitianMatrix::identity(2), &e1).unwrap();
    assert!(r.q_hat.sub(&HermitianMatrix::real_diag(&[1.0, 0.0])).max_abs() < 1e-15);
    assert!((&r.v - &e1).max_abs() < 1e-15);

    let r = extract_rank1(&HermitianMatrix::zeros(2), &e1).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.v.max_abs(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn extraction_dominance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = rand_pd(&mut r, 4);
        let h = rand_complex(&mut r, 4, 1);
        let out = extract_rank1(&q, &h).unwrap();
        let scale = q.max_eigenvalue().unwrap();
        prop_assert!(q.sub(&out.q_hat).min_eigenvalue().unwrap() >= -1e-10 * scale);
        prop_assert!((out.q_hat.quad(&h) - q.quad(&h)).abs() <= 1e-10 * q.quad(&h));
        prop_assert!(out.q_hat.trace_re() <= q.trace_re() * (1.0 + 1e-12));
        let vv = HermitianMatrix::outer(&out.v);
        prop_assert!(vv.sub(&out.q_hat).max_abs() <= 1e-12 * scale);
        let first = (0..4).map(|i| out.v[(i, 0)]).find(|z| z.norm() > 1e-12).unwrap();
        prop_assert!(first.im.abs() < 1e-12 && first.re > 0.0);
        // Rank one: the second eigenvalue vanishes.
        let ev = out.q_hat.eig().unwrap().values;
        prop_assert!(ev[2].abs() <= 1e-10 * scale);
    }
}

#[test]
fn bcd_trace_is_monotone_and_feasible() {
    let config = SystemConfig::default();
    let ch = sample_channels(&config, 2024).unwrap();
    let res = bcd_optimize(&ch, &config, &BcdOptions::default()).unwrap();
    assert!(res.converged(), "{:?}", res.status);
    assert!(res.trace.max_decrease() <= 1e-6);
    res.design.check(config.p_tot()).unwrap();
    assert!((res.final_f() - evaluate_f(&res.design.q, &res.design.omega, &res.aux, &ch, &config).unwrap()).abs() < 1e-12);
}

#[test]
fn bcd_first_value_is_initial_point() {
    let config = SystemConfig::default();
    let ch = sample_channels(&config, 8).unwrap();
    let res = bcd_optimize(
        &ch,
        &config,
        &BcdOptions {
            max_iters: 1,
            ..BcdOptions::default()
        },
    )
    .unwrap();
    let h = &ch.h_b;
    let p = config.p_tot() / 2.0;
    let q0 = HermitianMatrix::outer(h).scale(p / h.norm().powi(2));
    let o0 = HermitianMatrix::scaled_identity(3, p / 3.0);
    let alpha0 = config.delta_hl.powi(2) * q0.add(&o0).max_eigenvalue().unwrap();
    let b = solve_block2(&q0, &o0, alpha0, None, &ch, &config, &SolveOptions::default()).unwrap();
    let aux = AuxiliaryBlock {
        a1: b.a1,
        a2: b.a2,
        w_e: b.w_e,
        alpha: alpha0,
        beta: b.beta,
        gamma: b.gamma,
        m: HermitianMatrix::zeros(2),
        lambda_beta: 0.0,
        lambda_gamma: 0.0,
        lambda_m: 0.0,
    };
    let f0 = evaluate_f(&q0, &o0, &aux, &ch, &config).unwrap();
    assert!((res.trace.steps[0].f - f0).abs() < 1e-12);
    assert_eq!(res.trace.iterations(), 1);
}

#[test]
fn more_power_never_lowers_f() {
    let config = SystemConfig::default();
    let ch = sample_channels(&config, 31).unwrap();
    let doubled = SystemConfig {
        p_tot_dbm: config.p_tot_dbm + 10.0 * 2f64.log10(),
        ..config.clone()
    };
    let a = bcd_optimize(&ch, &config, &BcdOptions::default()).unwrap();
    let b = bcd_optimize(&ch, &doubled, &BcdOptions::default()).unwrap();
    assert!(b.final_f() >= a.final_f() - 1e-4, "{} < {}", b.final_f(), a.final_f());
}
