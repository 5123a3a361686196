use proptest::prelude::*;

use schurlab::ddm::{build_decomposition, build_jump_operators, feti_operator, Method};
use schurlab::dense::vector::norm2;
use schurlab::dense::{constrained_min, null_basis, pseudoinverse, rank, sym_eig, Cholesky, DenseMatrix};
use schurlab::krylov::{cg, richardson, AlmSolver, KrylovOptions};
use schurlab::mixedfem::{assemble_darcy, assemble_stokes, build_mesh, rt0_interpolate};
use schurlab::saddle::random::{gaussian_matrix, gaussian_vec, random_semispd_system, random_spd_system, rng};
use schurlab::saddle::{back_substitute, projected_schur, schur, solve_direct, DEFAULT_RANK_TOL};
use schurlab::spectra::{
    bounds_cor_schur, canonical_right_inverse, eigs_projected_schur, eigs_right_inverse_preconditioner, eigs_schur,
    eigs_schur_preconditioned, projected_preconditioned_routes, projected_right_inverse_preconditioner,
};

fn symmetric(n: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-10.0..10.0f64, n * n).prop_map(move |v| {
        DenseMatrix::from_row_major(n, n, v).unwrap().symmetrize()
    })
}

/// Random PSD matrix `R^t R` with `R` of `r` rows.
fn psd(seed: u64, n: usize, r: usize) -> DenseMatrix {
    let mut g = rng(seed);
    let r = gaussian_matrix(&mut g, r, n);
    r.t_matmul(&r).symmetrize()
}

fn rel_max_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1e-300_f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(a in (1usize..=12).prop_flat_map(symmetric)) {
        let n = a.rows() as f64;
        let eig = sym_eig(&a).unwrap();
        let (recon, orth) = eig.defects(&a);
        prop_assert!(orth <= 1e-10 * n);
        prop_assert!(recon <= 1e-10 * a.frobenius_norm().max(1.0));
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn pseudoinverse_is_moore_penrose(seed in any::<u64>(), n in 2usize..=12, deficit in 0usize..=3) {
        let a = psd(seed, n, n.saturating_sub(deficit).max(1));
        let x = pseudoinverse(&a, DEFAULT_RANK_TOL).unwrap();
        let scale = a.frobenius_norm() * x.frobenius_norm();
        let axa = a.matmul(&x).matmul(&a);
        let xax = x.matmul(&a).matmul(&x);
        prop_assert!(axa.sub(&a).frobenius_norm() <= 1e-9 * a.frobenius_norm() * scale.max(1.0));
        prop_assert!(xax.sub(&x).frobenius_norm() <= 1e-9 * x.frobenius_norm() * scale.max(1.0));
        prop_assert!(a.matmul(&x).asymmetry() <= 1e-9 * scale.max(1.0));
        prop_assert!(x.matmul(&a).asymmetry() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn rank_and_nullity_add_up(seed in any::<u64>(), n in 1usize..=12, r in 1usize..=12) {
        let a = psd(seed, n, r.min(n));
        let rk = rank(&a, DEFAULT_RANK_TOL).unwrap();
        let nb = null_basis(&a, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(rk + nb.cols(), n);
        prop_assert_eq!(rk, r.min(n));
    }

    #[test]
    fn constrained_minimum_is_inverse_schur_form(seed in any::<u64>()) {
        let sys = random_spd_system(seed).unwrap();
        let s = schur(&sys).unwrap().s;
        let q = gaussian_vec(&mut rng(seed ^ 0x5eed), sys.m());
        let (v, value) = constrained_min(sys.a(), sys.b(), &q).unwrap();
        let expected: f64 = Cholesky::new(&s).unwrap().solve_vec(&q).iter().zip(&q).map(|(a, b)| a * b).sum();
        prop_assert!((value - expected).abs() <= 1e-9 * expected);
        prop_assert!(rel_max_diff(&sys.b().matvec(&v), &q) <= 1e-9);
    }

    #[test]
    fn schur_cg_matches_direct(seed in any::<u64>()) {
        let sys = random_spd_system(seed).unwrap();
        let red = schur(&sys).unwrap();
        let op = |x: &[f64]| red.s.matvec(x);
        let opts = KrylovOptions { tol: 1e-13, max_iter: 200, ..Default::default() };
        let (p, trace) = cg(&op, &red.d, &opts);
        prop_assert!(trace.converged);
        let sol = back_substitute(&sys, &red, &p).unwrap();
        let direct = solve_direct(&sys).unwrap();
        prop_assert!(rel_max_diff(&sol.u, &direct.u) <= 1e-7);
        prop_assert!(rel_max_diff(&sol.p, &direct.p) <= 1e-7);
    }

    #[test]
    fn projected_schur_matches_direct(seed in any::<u64>()) {
        let sys = random_semispd_system(seed).unwrap();
        let red = projected_schur(&sys, DEFAULT_RANK_TOL).unwrap();
        let dual = Cholesky::new(&red.s).unwrap().solve_vec(&red.d);
        let sol = back_substitute(&sys, &red, &dual).unwrap();
        let direct = solve_direct(&sys).unwrap();
        prop_assert!(rel_max_diff(&sol.u, &direct.u) <= 1e-7);
        prop_assert!(rel_max_diff(&sol.p, &direct.p) <= 1e-7);

        let p = &red.projector;
        let bn = sys.b().matmul(&red.null_basis);
        prop_assert!(p.matmul(&bn).frobenius_norm() <= 1e-10 * bn.frobenius_norm().max(1.0));
        prop_assert!(p.matmul(p).sub(p).frobenius_norm() <= 1e-10);
    }

    #[test]
    fn spectral_routes_agree_and_floors_hold(seed in any::<u64>()) {
        let spd = random_spd_system(seed).unwrap();
        let (d, v) = eigs_schur(&spd).unwrap();
        prop_assert!(d.relative_gap(&v) <= 1e-8);
        let (lo, hi) = bounds_cor_schur(&spd).unwrap();
        prop_assert!(lo <= d.lambda_min * (1.0 + 1e-10) && d.lambda_max <= hi * (1.0 + 1e-10));
        let bbar = canonical_right_inverse(spd.b()).unwrap();
        let l = bbar.matmul(spd.a()).matmul_t(&bbar).symmetrize();
        let (d, v) = eigs_schur_preconditioned(&spd, &l).unwrap();
        prop_assert!(d.relative_gap(&v) <= 1e-8);
        prop_assert!(eigs_right_inverse_preconditioner(&spd, &bbar).unwrap().lambda_min >= 1.0 - 1e-9);

        let semi = random_semispd_system(seed).unwrap();
        let (d, v) = eigs_projected_schur(&semi).unwrap();
        prop_assert!(d.relative_gap(&v) <= 1e-8);
        let red = projected_schur(&semi, DEFAULT_RANK_TOL).unwrap();
        let bbar = canonical_right_inverse(semi.b()).unwrap();
        let l = projected_right_inverse_preconditioner(&semi, &red, &bbar).unwrap();
        let (d, v) = projected_preconditioned_routes(&semi, &l, Some(&bbar)).unwrap();
        prop_assert!(d.relative_gap(&v) <= 1e-8);
        prop_assert!(d.lambda_min >= 1.0 - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn alm_is_richardson_on_augmented_schur(seed in any::<u64>(), log_eps in -3.0..2.0f64, steps in 1usize..=25) {
        let sys = random_spd_system(seed).unwrap();
        let eps = 10f64.powf(log_eps);
        let solver = AlmSolver::new(&sys, eps).unwrap();
        let p0 = gaussian_vec(&mut rng(seed.wrapping_add(1)), sys.m());
        let mut p = p0.clone();
        for _ in 0..steps {
            p = solver.step(&p).1;
        }
        let s_eps = solver.schur();
        let op = |x: &[f64]| s_eps.matvec(x);
        let (q, _) = richardson(&op, &solver.rhs(), 1.0 / eps, &p0, 0.0, steps, None);
        prop_assert!(rel_max_diff(&p, &q) <= 1e-9);
    }

    #[test]
    fn alm_error_contracts_by_the_predicted_factor(seed in any::<u64>(), log_eps in -3.0..2.0f64) {
        let sys = random_spd_system(seed).unwrap();
        let eps = 10f64.powf(log_eps);
        let solver = AlmSolver::new(&sys, eps).unwrap();
        let s = schur(&sys).unwrap().s;
        let lmin = sym_eig(&s).unwrap().lambda_min();
        let predicted = eps / (eps + lmin);
        let measured = solver.measured_contraction().unwrap();
        prop_assert!((measured - predicted).abs() <= 1e-6);

        let e = solver.error_propagation(&vec![0.0; sys.m()]);
        let mut g = rng(seed ^ 0xe220);
        let worst = (0..100)
            .map(|_| {
                let x = gaussian_vec(&mut g, sys.m());
                norm2(&e.matvec(&x)) / norm2(&x)
            })
            .fold(0.0, f64::max);
        prop_assert!(worst <= predicted + 1e-9);
    }

    #[test]
    fn augmented_kappa_tends_to_one(seed in any::<u64>()) {
        let sys = random_spd_system(seed).unwrap();
        let lmin = sym_eig(&schur(&sys).unwrap().s).unwrap().lambda_min();
        let mut last = 0.0;
        for eps in [1e-6, 1e-4, 1e-2, 1.0, 1e2] {
            let s = AlmSolver::new(&sys, eps).unwrap().schur();
            let ev = sym_eig(&s).unwrap();
            let kappa = ev.lambda_max() / ev.lambda_min();
            prop_assert!(kappa >= last * (1.0 - 1e-12));
            // kappa(S_eps) - 1 = eps (lmax - lmin) / (lmin (eps + lmax)) < eps / lmin
            prop_assert!(kappa - 1.0 <= eps / lmin * (1.0 + 1e-6));
            last = kappa;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn darcy_divergence_is_exact(n in 2usize..=8, cx in -3.0..3.0f64, cy in -3.0..3.0f64) {
        let mesh = build_mesh(n);
        let disc = assemble_darcy(&mesh, |_, _| 1.0).unwrap();
        prop_assert!(disc.divergence_defect() <= 1e-12);
        prop_assert!(disc.sys.a().asymmetry() <= 1e-12);
        let v = rt0_interpolate(&mesh, |_, _| [cx, cy]);
        prop_assert!(disc.div.matvec(&v).iter().all(|d| d.abs() <= 1e-12));
        let (lo, hi) = disc.mass_rayleigh_range();
        prop_assert!(lo > 0.0 && hi / lo <= 20.0);
    }

    #[test]
    fn stokes_blocks_are_consistent(n in 2usize..=5) {
        let mesh = build_mesh(n);
        let disc = assemble_stokes(&mesh, |_, _| [1.0, 0.0]).unwrap();
        prop_assert!(disc.divergence_defect() <= 1e-12);
        prop_assert!(disc.sys.a().asymmetry() <= 1e-12);
        Cholesky::new(disc.sys.a()).unwrap();
        let (lo, hi) = disc.mass_rayleigh_range();
        prop_assert!(lo > 0.0 && hi / lo <= 20.0);
    }

    #[test]
    fn subdomain_operators(m in 2usize..=4, n in 2usize..=6) {
        let dec = build_decomposition(m, n).unwrap();
        for sub in &dec.subdomains {
            let s = &sub.schur;
            prop_assert!(s.asymmetry() <= 1e-10 * s.max_abs());
            if sub.floating {
                let ones = vec![1.0; s.rows()];
                prop_assert!(norm2(&s.matvec(&ones)) <= 1e-10 * s.max_abs());
            }
        }
        let (b, _) = build_jump_operators(&dec, Method::Feti).unwrap();
        prop_assert_eq!(rank(&b.matmul_t(&b).symmetrize(), 1e-12).unwrap(), b.rows());
        let (b, _) = build_jump_operators(&dec, Method::FetiDp).unwrap();
        prop_assert_eq!(b.matmul_t(&b), DenseMatrix::identity(b.rows()).scale(2.0));

        let problem = feti_operator(&dec).unwrap();
        let red = &problem.reduction;
        let bn = problem.sys.b().matmul(&red.null_basis);
        prop_assert_eq!(red.null_basis.cols(), dec.floating_count());
        prop_assert!(red.projector.matmul(&bn).frobenius_norm() <= 1e-10 * bn.frobenius_norm().max(1.0));
    }
}
