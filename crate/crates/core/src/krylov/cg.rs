use crate::dense::vector::{axpy, dot, norm2, sub};

use super::{KrylovOptions, Operator, IterationTrace};

/// Preconditioned conjugate gradients.
///
/// Stops when the preconditioned residual `sqrt(r^t z)` falls below
/// `tol` times its initial value. A run that hits `max_iter` returns
/// `converged = false`.
pub fn cg(op: Operator<'_>, rhs: &[f64], opts: &KrylovOptions<'_>) -> (Vec<f64>, IterationTrace) {
    let n = rhs.len();
    let precond = |r: &[f64]| match opts.precond {
        Some(p) => p(r),
        None => r.to_vec(),
    };
    let mut x = opts.x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mut r = match opts.x0 {
        Some(_) => sub(rhs, &op(&x)),
        None => rhs.to_vec(),
    };
    let mut z = precond(&r);
    let mut rz = dot(&r, &z);
    let mut trace = IterationTrace::start(opts.tol, rz.max(0.0).sqrt(), 0.0, opts.reference.is_some());
    let err = |x: &[f64]| opts.reference.map(|xs| norm2(&sub(x, xs)));
    if let Some(e) = err(&x) {
        trace.push_error(e);
    }
    if rz <= 0.0 {
        trace.converged = true;
        return (x, trace);
    }
    let mut p = z.clone();
    while trace.iterations < opts.max_iter {
        let ap = op(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let res = rz_new.max(0.0).sqrt();
        trace.push(res);
        if let Some(e) = err(&x) {
            trace.push_error(e);
        }
        if trace.is_small(res) {
            trace.converged = true;
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    (x, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;

    #[test]
    fn identity_converges_in_one_step() {
        let op = |x: &[f64]| x.to_vec();
        let (x, t) = cg(&op, &[1.0, 2.0, 3.0], &KrylovOptions::default());
        assert!(t.converged && t.iterations == 1);
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_eigenvalues_two_steps() {
        let m = DenseMatrix::from_diag(&[1.0, 4.0]);
        let op = |x: &[f64]| m.matvec(x);
        let (x, t) = cg(&op, &[1.0, 1.0], &KrylovOptions::default());
        assert!(t.converged && t.iterations <= 2);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let op = |x: &[f64]| x.to_vec();
        let (x, t) = cg(&op, &[0.0, 0.0], &KrylovOptions::default());
        assert!(t.converged && t.iterations == 0 && x == vec![0.0, 0.0]);
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let m = DenseMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0]);
        let op = |x: &[f64]| m.matvec(x);
        let opts = KrylovOptions {
            max_iter: 2,
            ..KrylovOptions::default()
        };
        let (_, t) = cg(&op, &[1.0; 4], &opts);
        assert!(!t.converged && t.require_converged().is_err());
    }
}
