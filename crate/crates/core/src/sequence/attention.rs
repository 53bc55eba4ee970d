use rand::Rng;

use crate::compute::{ParamId, ParamSet, Tape, Var};
use crate::error::{Error, Result};

/// Location-based global attention: one scalar score per step from a
/// learned vector, softmax across time, attention-weighted sum as context.
#[derive(Clone, Debug)]
pub struct Attention {
    pub score: ParamId,
    pub width: usize,
}

impl Attention {
    pub fn new<R: Rng>(params: &mut ParamSet, name: &str, width: usize, rng: &mut R) -> Result<Self> {
        let score = params.add_uniform(format!("{name}.score"), &[1, width], width, rng)?;
        Ok(Attention { score, width })
    }

    /// Returns `(weights over time, context vector)`.
    pub fn forward(&self, tape: &mut Tape<'_>, hs: &[Var]) -> Result<(Var, Var)> {
        if hs.is_empty() {
            return Err(Error::Domain("attention over an empty sequence".into()));
        }
        let w = tape.param(self.score);
        let scores = hs
            .iter()
            .map(|&h| tape.affine(w, h, None))
            .collect::<Result<Vec<_>>>()?;
        let scores = tape.concat(&scores)?;
        let weights = tape.softmax(scores)?;
        let context = tape.weighted_sum(weights, hs)?;
        Ok((weights, context))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::compute::Tensor;

    #[test]
    fn identical_states_get_uniform_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = ParamSet::new();
        let att = Attention::new(&mut ps, "att", 4, &mut rng).unwrap();
        let mut tape = Tape::new(&ps);
        let hs: Vec<Var> = (0..5).map(|_| tape.input(&[0.1, 0.2, -0.3, 0.9]).unwrap()).collect();
        let (a, ctx) = att.forward(&mut tape, &hs).unwrap();
        for &w in tape.value(a) {
            assert!((w - 0.2).abs() < 1e-15);
        }
        for (c, h) in tape.value(ctx).iter().zip([0.1, 0.2, -0.3, 0.9]) {
            assert!((c - h).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_are_a_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamSet::new();
        let att = Attention::new(&mut ps, "att", 3, &mut rng).unwrap();
        let mut tape = Tape::new(&ps);
        let hs: Vec<Var> = (0..9)
            .map(|_| {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
                tape.input(&v).unwrap()
            })
            .collect();
        let (a, _) = att.forward(&mut tape, &hs).unwrap();
        let w = tape.value(a);
        assert!(w.iter().all(|&x| x >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dominant_score_saturates_context() {
        let mut ps = ParamSet::new();
        let score = ps.add("att.score", Tensor::matrix(1, 2, vec![1.0, 0.0]).unwrap()).unwrap();
        let att = Attention { score, width: 2 };
        let mut tape = Tape::new(&ps);
        // scores 0, 0, 20, 0
        let steps = [[0.0, 1.0], [0.0, -1.0], [20.0, 3.0], [0.0, 2.0]];
        let hs: Vec<Var> = steps.iter().map(|h| tape.input(h).unwrap()).collect();
        let (_, ctx) = att.forward(&mut tape, &hs).unwrap();
        for (c, h) in tape.value(ctx).iter().zip(steps[2]) {
            assert!((c - h).abs() < 1e-6, "{c} vs {h}");
        }
    }
}
