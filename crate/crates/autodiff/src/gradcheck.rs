//! Central finite-difference oracle for checking analytic gradients.
//!
//! Independent of the graph: it only re-evaluates a scalar function of the
//! parameters at perturbed points.

use crate::{Gradients, ParamSet};

/// `(f(p + h e_k) - f(p - h e_k)) / 2h` for every scalar entry of every parameter.
pub fn finite_difference<F>(params: &ParamSet, h: f64, f: F) -> Gradients
where
    F: Fn(&ParamSet) -> f64,
{
    let mut work = params.clone();
    let mut out = Gradients::for_params(params);
    for id in params.ids() {
        let n = params.get(id).len();
        let mut d = vec![0.0; n];
        for (k, slot) in d.iter_mut().enumerate() {
            let orig = work.get(id).data()[k];
            work.get_mut(id).data_mut()[k] = orig + h;
            let plus = f(&work);
            work.get_mut(id).data_mut()[k] = orig - h;
            let minus = f(&work);
            work.get_mut(id).data_mut()[k] = orig;
            *slot = (plus - minus) / (2.0 * h);
        }
        out.set(id, crate::Array::new(params.get(id).shape().to_vec(), d));
    }
    out
}

/// `‖analytic − numeric‖₂ / (‖numeric‖₂ + 1e-12)` over all parameters;
/// missing analytic entries count as zero.
pub fn relative_error(params: &ParamSet, analytic: &Gradients, numeric: &Gradients) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for id in params.ids() {
        let n = params.get(id).len();
        let zeros = vec![0.0; n];
        let a = analytic.get(id).map(|g| g.data()).unwrap_or(&zeros);
        let b = numeric.get(id).map(|g| g.data()).unwrap_or(&zeros);
        for (x, y) in a.iter().zip(b) {
            diff += (x - y) * (x - y);
            norm += y * y;
        }
    }
    diff.sqrt() / (norm.sqrt() + 1e-12)
}
