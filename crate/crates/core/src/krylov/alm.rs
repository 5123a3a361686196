use crate::dense::vector::{axpy, norm2, sub};
use crate::dense::{sym_eigenvalues, Cholesky, DenseMatrix};
use crate::error::{Error, Result};
use crate::saddle::{schur, SaddleSolution, SaddleSystem, SystemKind};

use super::{IterationTrace, Operator};

/// Absolute residual floor, relative to the system scale, below which an
/// iteration counts as converged regardless of its starting residual.
const ABS_FLOOR: f64 = 1e-14;

/// Relative tolerance on `S_eps^-1 = S^-1 + eps^-1 I`.
pub const IDENTITY_TOL: f64 = 1e-8;

fn require_spd(sys: &SaddleSystem) -> Result<()> {
    if sys.kind() != SystemKind::Spd {
        return Err(Error::WrongKind { expected: "SPD" });
    }
    Ok(())
}

/// One augmented Lagrangian step
/// `u = (A + B^t B / eps)^-1 (f + B^t g / eps - B^t p)`, `p <- p + (B u - g) / eps`.
pub struct AlmSolver<'a> {
    sys: &'a SaddleSystem,
    epsilon: f64,
    chol: Cholesky,
    rhs_base: Vec<f64>,
}

impl<'a> AlmSolver<'a> {
    pub fn new(sys: &'a SaddleSystem, epsilon: f64) -> Result<Self> {
        require_spd(sys)?;
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        let b = sys.b();
        let a_eps = sys.a().add(&b.t_matmul(b).scale(1.0 / epsilon)).symmetrize();
        let chol = Cholesky::new(&a_eps)?;
        let mut rhs_base = sys.f().to_vec();
        axpy(1.0 / epsilon, &b.t_matvec(sys.g()), &mut rhs_base);
        Ok(AlmSolver {
            sys,
            epsilon,
            chol,
            rhs_base,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Primal update for a given multiplier.
    pub fn primal(&self, p: &[f64]) -> Vec<f64> {
        let rhs = sub(&self.rhs_base, &self.sys.b().t_matvec(p));
        self.chol.solve_vec(&rhs)
    }

    /// `(u, p_next, |B u - g|)`.
    pub fn step(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let u = self.primal(p);
        let r = sub(&self.sys.b().matvec(&u), self.sys.g());
        let mut next = p.to_vec();
        axpy(1.0 / self.epsilon, &r, &mut next);
        (u, next, norm2(&r))
    }

    /// `S_eps = B (A + B^t B / eps)^-1 B^t`.
    pub fn schur(&self) -> DenseMatrix {
        let b = self.sys.b();
        b.matmul(&self.chol.solve(&b.transpose())).symmetrize()
    }

    /// `d_eps = B (A + B^t B / eps)^-1 (f + B^t g / eps) - g`.
    pub fn rhs(&self) -> Vec<f64> {
        sub(&self.sys.b().matvec(&self.chol.solve_vec(&self.rhs_base)), self.sys.g())
    }

    /// Error propagation matrix of one step, column `i` being the change of
    /// `p_next` under a unit perturbation `e_i` of `p`.
    pub fn error_propagation(&self, p_star: &[f64]) -> DenseMatrix {
        let m = p_star.len();
        let (_, base, _) = self.step(p_star);
        let cols: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut p = p_star.to_vec();
                p[i] += 1.0;
                sub(&self.step(&p).1, &base)
            })
            .collect();
        DenseMatrix::from_columns(m, &cols)
    }

    /// Measured per-step contraction: the spectral norm of the (symmetric)
    /// error propagation matrix.
    pub fn measured_contraction(&self) -> Result<f64> {
        let e = self.error_propagation(&vec![0.0; self.sys.m()]).symmetrize();
        let ev = sym_eigenvalues(&e)?;
        Ok(ev[0].abs().max(ev[ev.len() - 1].abs()))
    }
}

/// Runs the augmented Lagrangian iteration from `p0` (zero when `None`).
///
/// The residual is `|B u^k - g|`; convergence is relative to the first
/// residual. With `p_star` the trace also records `|p^k - p_star|`.
pub fn alm_iterate(
    sys: &SaddleSystem,
    epsilon: f64,
    p0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    p_star: Option<&[f64]>,
) -> Result<(SaddleSolution, IterationTrace)> {
    let solver = AlmSolver::new(sys, epsilon)?;
    let mut p = p0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; sys.m()]);
    let (mut u, mut next, r0) = solver.step(&p);
    let mut trace = IterationTrace::start(tol, r0, ABS_FLOOR * sys.scale(), p_star.is_some());
    let err = |p: &[f64]| p_star.map(|ps| norm2(&sub(p, ps)));
    if let Some(e) = err(&p) {
        trace.push_error(e);
    }
    loop {
        if trace.is_small(trace.final_residual()) {
            trace.converged = true;
            break;
        }
        if trace.iterations >= max_iter {
            break;
        }
        p = next;
        let (u_new, p_new, r) = solver.step(&p);
        u = u_new;
        next = p_new;
        trace.push(r);
        if let Some(e) = err(&p) {
            trace.push_error(e);
        }
    }
    Ok((SaddleSolution::new(sys, u, p), trace))
}

/// Richardson iteration `x <- x + step (rhs - M x)`.
///
/// Records `|rhs - M x^k|` and, with `reference`, `|x^k - reference|`.
pub fn richardson(
    op: Operator<'_>,
    rhs: &[f64],
    step: f64,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    reference: Option<&[f64]>,
) -> (Vec<f64>, IterationTrace) {
    let mut x = x0.to_vec();
    let mut r = sub(rhs, &op(&x));
    let mut trace = IterationTrace::start(tol, norm2(&r), ABS_FLOOR * norm2(rhs).max(1.0), reference.is_some());
    let err = |x: &[f64]| reference.map(|xs| norm2(&sub(x, xs)));
    if let Some(e) = err(&x) {
        trace.push_error(e);
    }
    loop {
        if trace.is_small(trace.final_residual()) {
            trace.converged = true;
            break;
        }
        if trace.iterations >= max_iter {
            break;
        }
        axpy(step, &r, &mut x);
        r = sub(rhs, &op(&x));
        trace.push(norm2(&r));
        if let Some(e) = err(&x) {
            trace.push_error(e);
        }
    }
    (x, trace)
}

/// Uzawa iteration: Richardson with the given step on `S p = d`, with the
/// primal variable recovered from each multiplier.
pub fn uzawa_iterate(
    sys: &SaddleSystem,
    step: f64,
    p0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    p_star: Option<&[f64]>,
) -> Result<(SaddleSolution, IterationTrace)> {
    require_spd(sys)?;
    let red = schur(sys)?;
    let lmax = *sym_eigenvalues(&red.s)?.last().unwrap();
    let limit = 2.0 / lmax;
    if !(step > 0.0) || step >= limit {
        return Err(Error::DivergentStep { step, limit });
    }
    let chol = Cholesky::new(sys.a())?;
    let b = sys.b();
    let primal = |p: &[f64]| chol.solve_vec(&sub(sys.f(), &b.t_matvec(p)));
    // S p - d = -(B u(p) - g), so the Richardson residual is B u - g
    let op = |p: &[f64]| {
        let mut r = sub(&b.matvec(&primal(p)), sys.g());
        r.iter_mut().for_each(|x| *x = -*x);
        r
    };
    let zero = vec![0.0; sys.m()];
    let p_init = p0.unwrap_or(&zero);
    let (p, trace) = richardson(&op, &zero, step, p_init, tol, max_iter, p_star);
    let u = primal(&p);
    Ok((SaddleSolution::new(sys, u, p), trace))
}

/// Measured augmented Lagrangian spectra and the contraction of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct AlmDiagnostics {
    pub epsilon: f64,
    pub lambda_min_s: f64,
    pub lambda_max_s: f64,
    pub lambda_min_seps: f64,
    pub lambda_max_seps: f64,
    /// `1 - lambda_min(S_eps) / eps`, the norm of `I - S_eps / eps`.
    pub contraction: f64,
    pub kappa_seps: f64,
    /// `|S_eps^-1 - S^-1 - I / eps|_F / |S_eps^-1|_F`.
    pub identity_defect: f64,
}

/// `kappa(S_eps) = kappa(S) (eps + lambda_min) / (eps + lambda_max)`.
pub fn alm_kappa_formula(lambda_min: f64, lambda_max: f64, epsilon: f64) -> f64 {
    (lambda_max / lambda_min) * (epsilon + lambda_min) / (epsilon + lambda_max)
}

/// Assembles `S` and `S_eps`, verifies `S_eps^-1 = S^-1 + I / eps` and reports
/// the measured spectra.
pub fn alm_diagnostics(sys: &SaddleSystem, epsilon: f64) -> Result<AlmDiagnostics> {
    let solver = AlmSolver::new(sys, epsilon)?;
    let s = schur(sys)?.s;
    let s_eps = solver.schur();
    let s_inv = Cholesky::new(&s)?.inverse();
    let s_eps_inv = Cholesky::new(&s_eps)?.inverse();
    let defect_m = s_eps_inv.sub(&s_inv.shift_diag(1.0 / epsilon));
    let identity_defect = defect_m.frobenius_norm() / s_eps_inv.frobenius_norm();
    if identity_defect > IDENTITY_TOL {
        return Err(Error::Verification(format!(
            "S_eps^-1 - S^-1 - I/eps has relative size {identity_defect:e} at eps = {epsilon:e}"
        )));
    }
    let ev_s = sym_eigenvalues(&s)?;
    let ev_e = sym_eigenvalues(&s_eps)?;
    let (lmin_e, lmax_e) = (ev_e[0], ev_e[ev_e.len() - 1]);
    Ok(AlmDiagnostics {
        epsilon,
        lambda_min_s: ev_s[0],
        lambda_max_s: ev_s[ev_s.len() - 1],
        lambda_min_seps: lmin_e,
        lambda_max_seps: lmax_e,
        contraction: 1.0 - lmin_e / epsilon,
        kappa_seps: lmax_e / lmin_e,
        identity_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::validate;

    fn unit_system() -> SaddleSystem {
        validate(DenseMatrix::identity(1), DenseMatrix::identity(1), vec![1.0], vec![3.0]).unwrap()
    }

    #[test]
    fn unit_system_contracts_by_half() {
        let s = unit_system();
        // exact solution u = 3, p = -2
        let (sol, t) = alm_iterate(&s, 1.0, None, 1e-12, 100, Some(&[-2.0])).unwrap();
        assert!(t.converged);
        assert!((sol.u[0] - 3.0).abs() < 1e-11 && (sol.p[0] + 2.0).abs() < 1e-11);
        let e = t.error_norms.unwrap();
        for w in e.windows(2).take(5) {
            assert!((w[1] / w[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn small_epsilon_ratio() {
        let s = unit_system();
        let solver = AlmSolver::new(&s, 1e-3).unwrap();
        let e = solver.error_propagation(&[-2.0]);
        assert!((e[(0, 0)] - 1e-3 / (1e-3 + 1.0)).abs() < 1e-12);
        assert!((solver.measured_contraction().unwrap() - 1e-3 / (1e-3 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn exact_start_converges_immediately() {
        let s = unit_system();
        let (_, t) = alm_iterate(&s, 1.0, Some(&[-2.0]), 1e-10, 100, None).unwrap();
        assert!(t.converged && t.iterations == 0);
    }

    #[test]
    fn diagnostics_examples() {
        // S = [2]
        let s = validate(DenseMatrix::from_diag(&[0.5]), DenseMatrix::identity(1), vec![0.0], vec![0.0])
            .unwrap();
        let d = alm_diagnostics(&s, 2.0).unwrap();
        assert!((d.lambda_min_seps - 1.0).abs() < 1e-14);

        // S = diag(1, 4)
        let s = validate(
            DenseMatrix::from_diag(&[1.0, 0.25]),
            DenseMatrix::identity(2),
            vec![0.0; 2],
            vec![0.0; 2],
        )
        .unwrap();
        let d = alm_diagnostics(&s, 0.01).unwrap();
        assert!((d.kappa_seps - 4.0 * 1.01 / 4.01).abs() < 1e-9);
        assert!((alm_kappa_formula(1.0, 4.0, 0.01) - 1.007_481).abs() < 1e-6);
        let d = alm_diagnostics(&s, 1e8).unwrap();
        assert!((d.kappa_seps - 4.0).abs() < 1e-6);
    }

    #[test]
    fn uzawa_examples() {
        let s = unit_system();
        let (sol, t) = uzawa_iterate(&s, 1.0, None, 1e-12, 10, None).unwrap();
        assert!(t.converged && t.iterations == 1);
        assert!((sol.p[0] + 2.0).abs() < 1e-14);

        let s = validate(
            DenseMatrix::from_diag(&[1.0, 0.25]),
            DenseMatrix::identity(2),
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!(matches!(
            uzawa_iterate(&s, 1.0, None, 1e-10, 10, None),
            Err(Error::DivergentStep { .. })
        ));
        let p_star = solve_p(&s);
        let (_, t) = uzawa_iterate(&s, 0.4, None, 1e-12, 200, Some(&p_star)).unwrap();
        let e = t.error_norms.unwrap();
        let ratio = e[30] / e[29];
        assert!((ratio - 0.6).abs() < 1e-8);
    }

    fn solve_p(s: &SaddleSystem) -> Vec<f64> {
        crate::saddle::solve_direct(s).unwrap().p
    }
}
