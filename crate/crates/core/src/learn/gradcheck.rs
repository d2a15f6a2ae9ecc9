use ndarray::Array2;

use super::tape::{Tape, Var};
use crate::error::Result;

/// Worst relative error of reverse-mode gradients against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)` per input.
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
}

/// Differentiates the scalar built by `f` with respect to every input, both
/// through [`Tape::backward`] and by central differences with step `h`.
pub fn check_gradients<F>(inputs: &[Array2<f64>], h: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Array2<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|v| tape.leaf(v.clone())).collect();
        let out = f(&mut tape, &vars)?;
        tape.scalar(out)
    };
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|v| tape.leaf(v.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut relative_errors = Vec::with_capacity(inputs.len());
    let mut work = inputs.to_vec();
    for (k, &v) in vars.iter().enumerate() {
        let analytic = grads.get_or_zeros(v, inputs[k].dim());
        let mut numeric = Array2::zeros(inputs[k].dim());
        for idx in ndarray::indices(inputs[k].dim()) {
            let x0 = work[k][idx];
            work[k][idx] = x0 + h;
            let plus = eval(&work)?;
            work[k][idx] = x0 - h;
            let minus = eval(&work)?;
            work[k][idx] = x0;
            numeric[idx] = (plus - minus) / (2.0 * h);
        }
        let norm = |a: &Array2<f64>| a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = norm(&(&analytic - &numeric));
        let scale = norm(&analytic).max(norm(&numeric));
        relative_errors.push(if scale == 0.0 { diff } else { diff / scale });
    }
    let max_relative_error = relative_errors.iter().copied().fold(0.0, f64::max);
    Ok(GradCheck {
        relative_errors,
        max_relative_error,
    })
}
