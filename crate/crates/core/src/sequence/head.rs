use rand::Rng;

use crate::compute::{ParamId, ParamSet, Tape, Var};
use crate::error::{Error, Result};

/// Hidden affine layer with tanh followed by an output affine to class
/// logits.
#[derive(Clone, Debug)]
pub struct ClassifierHead {
    pub hidden: Option<(ParamId, ParamId)>,
    pub output: (ParamId, ParamId),
    pub input_dim: usize,
    pub classes: usize,
}

impl ClassifierHead {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        name: &str,
        input_dim: usize,
        hidden_dim: usize,
        classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {classes}")));
        }
        let (hidden, out_in) = if hidden_dim > 0 {
            let w = params.add_uniform(format!("{name}.hidden.weight"), &[hidden_dim, input_dim], input_dim, rng)?;
            let b = params.add_uniform(format!("{name}.hidden.bias"), &[hidden_dim], input_dim, rng)?;
            (Some((w, b)), hidden_dim)
        } else {
            (None, input_dim)
        };
        let w = params.add_uniform(format!("{name}.out.weight"), &[classes, out_in], out_in, rng)?;
        let b = params.add_uniform(format!("{name}.out.bias"), &[classes], out_in, rng)?;
        Ok(ClassifierHead { hidden, output: (w, b), input_dim, classes })
    }

    pub fn logits(&self, tape: &mut Tape<'_>, context: Var) -> Result<Var> {
        if tape.len_of(context) != self.input_dim {
            return Err(Error::dim(
                "classifier input",
                format!("[{}]", self.input_dim),
                format!("[{}]", tape.len_of(context)),
            ));
        }
        let mut x = context;
        if let Some((w, b)) = self.hidden {
            let (w, b) = (tape.param(w), tape.param(b));
            x = tape.affine(w, x, Some(b))?;
            x = tape.tanh(x)?;
        }
        let (w, b) = (tape.param(self.output.0), tape.param(self.output.1));
        tape.affine(w, x, Some(b))
    }

    pub fn classify(&self, tape: &mut Tape<'_>, context: Var) -> Result<Var> {
        let z = self.logits(tape, context)?;
        tape.softmax(z)
    }
}

/// Index of the largest probability; ties go to the lower class index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::compute::Tensor;

    #[test]
    fn probabilities_normalise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ps = ParamSet::new();
        let head = ClassifierHead::new(&mut ps, "head", 6, 4, 3, &mut rng).unwrap();
        let mut tape = Tape::new(&ps);
        let ctx = tape.input(&[0.5, -1.0, 2.0, 0.0, 0.1, 0.3]).unwrap();
        let p = head.classify(&mut tape, ctx).unwrap();
        assert!((tape.value(p).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let short = tape.input(&[1.0]).unwrap();
        assert!(matches!(head.classify(&mut tape, short), Err(Error::Dimension { .. })));
    }

    #[test]
    fn binary_head_softmax_oracle() {
        let mut ps = ParamSet::new();
        let w = ps.add("w", Tensor::matrix(2, 1, vec![0.0, 0.0]).unwrap()).unwrap();
        let b = ps.add("b", Tensor::vector(vec![0.0, 3f64.ln()]).unwrap()).unwrap();
        let head = ClassifierHead { hidden: None, output: (w, b), input_dim: 1, classes: 2 };
        let mut tape = Tape::new(&ps);
        let ctx = tape.input(&[1.0]).unwrap();
        let p = head.classify(&mut tape, ctx).unwrap();
        let p = tape.value(p);
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn argmax_is_shift_invariant() {
        let logits = [0.3, 2.5, -1.0, 2.4];
        let shifted: Vec<f64> = logits.iter().map(|v| v + 17.0).collect();
        assert_eq!(argmax(&logits), 1);
        assert_eq!(argmax(&shifted), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
    }
}
