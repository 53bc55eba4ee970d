//! Central finite-difference verification of tape gradients.

use crate::compute::{Gradients, ParamId, ParamSet, Tape, Var};
use crate::error::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

/// Relative error with the denominator guarded by `1e-8`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Builds the loss on a fresh tape and returns its scalar value.
pub fn eval_loss<F>(params: &ParamSet, loss: &F) -> Result<f64>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let mut tape = Tape::new(params);
    let l = loss(&mut tape)?;
    tape.scalar(l)
}

/// Value and reverse-mode gradients of `loss`.
pub fn value_and_grad<F>(params: &ParamSet, loss: &F) -> Result<(f64, Gradients)>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let mut tape = Tape::new(params);
    let l = loss(&mut tape)?;
    let value = tape.scalar(l)?;
    Ok((value, tape.backward(l)?))
}

/// Compares the tape gradient of `loss` against central differences over
/// every parameter coordinate.
pub fn grad_check<F>(params: &ParamSet, eps: f64, loss: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let (_, analytic) = value_and_grad(params, &loss)?;
    grad_check_against(params, eps, &analytic, loss)
}

/// Same as [`grad_check`] but against a caller-supplied analytic gradient.
pub fn grad_check_against<F>(
    params: &ParamSet,
    eps: f64,
    analytic: &Gradients,
    loss: F,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    if !(eps > 0.0) {
        return Err(Error::Contract(format!("finite-difference step must be positive, got {eps}")));
    }
    let first = eval_loss(params, &loss)?;
    let second = eval_loss(params, &loss)?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::Contract(format!(
            "loss is not deterministic: {first} then {second}"
        )));
    }

    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        coordinates: 0,
    };
    for k in 0..params.len() {
        let id = ParamId(k);
        let n = params.get(id).value.len();
        for i in 0..n {
            let orig = params.get(id).value.data()[i];
            work.get_mut(id).value.data_mut()[i] = orig + eps;
            let plus = eval_loss(&work, &loss)?;
            work.get_mut(id).value.data_mut()[i] = orig - eps;
            let minus = eval_loss(&work, &loss)?;
            work.get_mut(id).value.data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(analytic.get(id)[i], numeric);
            report.coordinates += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((params.get(id).name.clone(), i));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::compute::Tensor;

    fn scalar_set(w: f64) -> (ParamSet, ParamId) {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::vector(vec![w]).unwrap()).unwrap();
        (ps, id)
    }

    #[test]
    fn quadratic_passes() {
        let (ps, id) = scalar_set(3.0);
        let rep = grad_check(&ps, DEFAULT_EPS, |t| {
            let w = t.param(id);
            let sq = t.mul(w, w)?;
            t.sum(sq)
        })
        .unwrap();
        assert!(rep.max_relative_error < 1e-8, "{rep:?}");
        let (_, g) = value_and_grad(&ps, &|t: &mut Tape<'_>| {
            let w = t.param(id);
            let sq = t.mul(w, w)?;
            t.sum(sq)
        })
        .unwrap();
        assert!((g.get(id)[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let (ps, id) = scalar_set(3.0);
        let rep = grad_check(&ps, DEFAULT_EPS, |t| {
            let _ = t.param(id);
            let c = t.input(&[4.0])?;
            t.sum(c)
        })
        .unwrap();
        assert_eq!(rep.max_relative_error, 0.0);
    }

    #[test]
    fn doubled_gradient_is_flagged() {
        let (ps, id) = scalar_set(3.0);
        let loss = |t: &mut Tape<'_>| {
            let w = t.param(id);
            let sq = t.mul(w, w)?;
            t.sum(sq)
        };
        let (_, mut g) = value_and_grad(&ps, &loss).unwrap();
        g.scale(2.0);
        let rep = grad_check_against(&ps, DEFAULT_EPS, &g, loss).unwrap();
        // |12 - 6| / 12
        assert!((rep.max_relative_error - 0.5).abs() < 1e-6, "{rep:?}");
    }

    #[test]
    fn nondeterministic_loss_is_rejected() {
        let (ps, id) = scalar_set(1.0);
        let calls = Cell::new(0.0);
        let err = grad_check(&ps, DEFAULT_EPS, |t| {
            calls.set(calls.get() + 1.0);
            let w = t.param(id);
            let c = t.input(&[calls.get()])?;
            let s = t.add(w, c)?;
            t.sum(s)
        })
        .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn two_layer_net_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ps = ParamSet::new();
        let w1 = ps.add_uniform("w1", &[5, 3], 3, &mut rng).unwrap();
        let b1 = ps.add_uniform("b1", &[5], 3, &mut rng).unwrap();
        let w2 = ps.add_uniform("w2", &[2, 5], 5, &mut rng).unwrap();
        let b2 = ps.add_uniform("b2", &[2], 5, &mut rng).unwrap();
        let unused = ps.add_uniform("unused", &[4], 4, &mut rng).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let loss = |t: &mut Tape<'_>| {
            let xv = t.input(&x)?;
            let (w1, b1, w2, b2) = (t.param(w1), t.param(b1), t.param(w2), t.param(b2));
            let h = t.affine(w1, xv, Some(b1))?;
            let h = t.tanh(h)?;
            let h2 = t.sigmoid(h)?;
            let h = t.mul(h, h2)?;
            let z = t.affine(w2, h, Some(b2))?;
            t.cross_entropy(z, 1)
        };
        let rep = grad_check(&ps, DEFAULT_EPS, loss).unwrap();
        assert!(rep.max_relative_error < 1e-4, "{rep:?}");
        let (_, g) = value_and_grad(&ps, &loss).unwrap();
        assert!(g.get(unused).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_are_linear_in_the_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ps = ParamSet::new();
        let w = ps.add_uniform("w", &[3, 4], 4, &mut rng).unwrap();
        let x = [0.3, -0.7, 1.1, 0.2];
        let part_a = |t: &mut Tape<'_>| {
            let (wv, xv) = (t.param(w), t.input(&x)?);
            let y = t.affine(wv, xv, None)?;
            let y = t.tanh(y)?;
            t.sum(y)
        };
        let part_b = |t: &mut Tape<'_>| {
            let (wv, xv) = (t.param(w), t.input(&x)?);
            let y = t.affine(wv, xv, None)?;
            let s = t.softmax(y)?;
            t.cross_entropy(s, 2)
        };
        let (_, ga) = value_and_grad(&ps, &part_a).unwrap();
        let (_, gb) = value_and_grad(&ps, &part_b).unwrap();
        let (_, gab) = value_and_grad(&ps, &|t: &mut Tape<'_>| {
            let a = part_a(t)?;
            let b = part_b(t)?;
            t.add(a, b)
        })
        .unwrap();
        let mut sum = ga.clone();
        sum.add_assign(&gb);
        assert!(sum.max_abs_diff(&gab) < 1e-14);
    }
}
