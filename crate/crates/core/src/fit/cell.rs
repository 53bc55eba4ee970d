use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compute::{ParamId, ParamSet, Tape, Var};
use crate::error::{Error, Result};
use crate::fit::SIGNAL_VECTOR_LEN;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Identity,
    Tanh,
}

/// Per-signal affine map from the signal's own vector followed by its
/// support vectors to a `repr`-wide representation.
#[derive(Clone, Debug)]
pub struct MemoryCell {
    pub weight: ParamId,
    pub bias: ParamId,
    pub supports: usize,
    pub repr: usize,
    pub activation: Activation,
}

impl MemoryCell {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        name: &str,
        supports: usize,
        repr: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let fan_in = SIGNAL_VECTOR_LEN * (1 + supports);
        let weight = params.add_uniform(format!("{name}.weight"), &[repr, fan_in], fan_in, rng)?;
        let bias = params.add_uniform(format!("{name}.bias"), &[repr], fan_in, rng)?;
        Ok(MemoryCell { weight, bias, supports, repr, activation })
    }

    pub fn input_len(&self) -> usize {
        SIGNAL_VECTOR_LEN * (1 + self.supports)
    }

    pub fn forward(
        &self,
        tape: &mut Tape<'_>,
        own: &[f64; SIGNAL_VECTOR_LEN],
        supports: &[[f64; SIGNAL_VECTOR_LEN]],
    ) -> Result<Var> {
        if supports.len() != self.supports {
            return Err(Error::dim(
                "memory cell supports",
                self.supports,
                supports.len(),
            ));
        }
        let mut input = Vec::with_capacity(self.input_len());
        input.extend_from_slice(own);
        for s in supports {
            input.extend_from_slice(s);
        }
        let x = tape.input(&input)?;
        let (w, b) = (tape.param(self.weight), tape.param(self.bias));
        let r = tape.affine(w, x, Some(b))?;
        match self.activation {
            Activation::Identity => Ok(r),
            Activation::Tanh => tape.tanh(r),
        }
    }
}

/// Joins per-signal representations in the order given (ascending signal
/// index by convention).
pub fn concat_representations(tape: &mut Tape<'_>, reprs: &[Var]) -> Result<Var> {
    let width = reprs
        .first()
        .map(|&r| tape.len_of(r))
        .ok_or_else(|| Error::Domain("no signal representations to concatenate".into()))?;
    if let Some(&bad) = reprs.iter().find(|&&r| tape.len_of(r) != width) {
        return Err(Error::dim("concat_representations", width, tape.len_of(bad)));
    }
    tape.concat(reprs)
}
