//! Conjugate gradients for shifted sparse systems `(a·I + b·M) X = B`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::CsrMatrix;

/// Relative residual tolerance used by every linear solve in the crate.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Per-column solution report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Symmetric operator `x ↦ shift·x + scale·M x`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedOperator<'a> {
    pub matrix: &'a CsrMatrix,
    pub shift: f64,
    pub scale: f64,
}

impl ShiftedOperator<'_> {
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mx = self.matrix.mul_vec(x).expect("square operator");
        &x * self.shift + mx * self.scale
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
///
/// Stops when `‖b − A x‖ ≤ tol · max(‖b‖, 1)`; fails after `max_iter`
/// iterations with the last residual.
pub fn conjugate_gradient(
    op: &ShiftedOperator<'_>,
    b: ArrayView1<f64>,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<(Array1<f64>, CgStats), CgStats> {
    let threshold = tol * b.dot(&b).sqrt().max(1.0);
    let mut x = Array1::<f64>::zeros(b.len());
    let mut r = b.to_owned();
    let mut rr = r.dot(&r);
    if rr.sqrt() <= threshold {
        return Ok((x, CgStats { iterations: 0, residual: rr.sqrt() }));
    }
    let mut p = r.clone();
    for it in 1..=max_iter {
        let ap = op.apply(p.view());
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(CgStats { iterations: it, residual: rr.sqrt() });
        }
        let alpha = rr / pap;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &ap);
        let rr_next = r.dot(&r);
        if rr_next.sqrt() <= threshold {
            // confirm against the true residual, not the recurrence
            let true_r = &b - &op.apply(x.view());
            let res = true_r.dot(&true_r).sqrt();
            if res <= threshold {
                return Ok((x, CgStats { iterations: it, residual: res }));
            }
            r = true_r;
            rr = r.dot(&r);
            p = r.clone();
            continue;
        }
        p = &r + &(p * (rr_next / rr));
        rr = rr_next;
    }
    Err(CgStats { iterations: max_iter, residual: rr.sqrt() })
}

/// Column-by-column CG solve of `(shift·I + scale·M) X = rhs` with the
/// crate tolerance and an iteration cap of `10·N`.
pub fn solve_shifted(matrix: &CsrMatrix, shift: f64, scale: f64, rhs: ArrayView2<f64>) -> Result<Array2<f64>> {
    if rhs.nrows() != matrix.rows() {
        return Err(Error::ShapeMismatch {
            context: "linear solve right-hand side",
            expected: (matrix.rows(), rhs.ncols()),
            found: rhs.dim(),
        });
    }
    let op = ShiftedOperator { matrix, shift, scale };
    let max_iter = 10 * matrix.rows();
    let mut out = Array2::<f64>::zeros(rhs.dim());
    for (col, b) in rhs.columns().into_iter().enumerate() {
        let (x, _) = conjugate_gradient(&op, b, CG_TOLERANCE, max_iter).map_err(|stats| Error::SolverDiverged {
            iterations: stats.iterations,
            residual: stats.residual,
            column: col,
        })?;
        out.column_mut(col).assign(&x);
    }
    Ok(out)
}
