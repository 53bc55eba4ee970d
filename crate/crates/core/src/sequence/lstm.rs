use rand::Rng;

use crate::compute::{ParamId, ParamSet, Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Standard LSTM cell with the four gates stacked into one weight matrix of
/// shape `[4·hidden, input + hidden]`, rows ordered input, forget,
/// candidate, output.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input_dim: usize,
    pub hidden: usize,
}

pub const FORGET_BIAS_INIT: f64 = 1.0;

impl LstmCell {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        name: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::Config(format!(
                "LSTM `{name}` needs positive widths, got input {input_dim} hidden {hidden}"
            )));
        }
        let fan_in = input_dim + hidden;
        let weight = params.add_uniform(format!("{name}.weight"), &[4 * hidden, fan_in], fan_in, rng)?;
        let bound = 1.0 / (fan_in as f64).sqrt();
        let bias_data = (0..4 * hidden)
            .map(|k| {
                if (hidden..2 * hidden).contains(&k) {
                    FORGET_BIAS_INIT
                } else {
                    rng.random_range(-bound..=bound)
                }
            })
            .collect();
        let bias = params.add(format!("{name}.bias"), Tensor::vector(bias_data)?)?;
        Ok(LstmCell { weight, bias, input_dim, hidden })
    }

    pub fn zero_state(&self, tape: &mut Tape<'_>) -> Result<(Var, Var)> {
        let zeros = vec![0.0; self.hidden];
        Ok((tape.input(&zeros)?, tape.input(&zeros)?))
    }

    /// One recurrence step; returns `(h, c)`.
    pub fn step(&self, tape: &mut Tape<'_>, x: Var, h_prev: Var, c_prev: Var) -> Result<(Var, Var)> {
        let d = self.hidden;
        if tape.len_of(x) != self.input_dim {
            return Err(Error::dim("lstm input", format!("[{}]", self.input_dim), format!("[{}]", tape.len_of(x))));
        }
        if tape.len_of(h_prev) != d || tape.len_of(c_prev) != d {
            return Err(Error::dim(
                "lstm state",
                format!("[{d}]"),
                format!("[{}]/[{}]", tape.len_of(h_prev), tape.len_of(c_prev)),
            ));
        }
        let xh = tape.concat(&[x, h_prev])?;
        let (w, b) = (tape.param(self.weight), tape.param(self.bias));
        let z = tape.affine(w, xh, Some(b))?;
        let i = tape.slice(z, 0, d)?;
        let i = tape.sigmoid(i)?;
        let f = tape.slice(z, d, d)?;
        let f = tape.sigmoid(f)?;
        let g = tape.slice(z, 2 * d, d)?;
        let g = tape.tanh(g)?;
        let o = tape.slice(z, 3 * d, d)?;
        let o = tape.sigmoid(o)?;
        let keep = tape.mul(f, c_prev)?;
        let write = tape.mul(i, g)?;
        let c = tape.add(keep, write)?;
        let squashed = tape.tanh(c)?;
        let h = tape.mul(o, squashed)?;
        Ok((h, c))
    }

    /// Runs the cell over `xs` in the given order and returns each hidden state.
    pub fn scan(&self, tape: &mut Tape<'_>, xs: impl Iterator<Item = Var>) -> Result<Vec<Var>> {
        let (mut h, mut c) = self.zero_state(tape)?;
        let mut out = Vec::new();
        for x in xs {
            (h, c) = self.step(tape, x, h, c)?;
            out.push(h);
        }
        Ok(out)
    }
}

/// Forward and backward LSTM over the same sequence with concatenated
/// outputs of width `2·hidden`.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl BiLstm {
    pub fn new<R: Rng>(params: &mut ParamSet, name: &str, input_dim: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        Ok(BiLstm {
            forward: LstmCell::new(params, &format!("{name}.fwd"), input_dim, hidden, rng)?,
            backward: LstmCell::new(params, &format!("{name}.bwd"), input_dim, hidden, rng)?,
        })
    }

    pub fn output_dim(&self) -> usize {
        2 * self.forward.hidden
    }

    pub fn forward(&self, tape: &mut Tape<'_>, xs: &[Var]) -> Result<Vec<Var>> {
        if xs.is_empty() {
            return Err(Error::Domain("bidirectional LSTM over an empty sequence".into()));
        }
        let fwd = self.forward.scan(tape, xs.iter().copied())?;
        let mut bwd = self.backward.scan(tape, xs.iter().rev().copied())?;
        bwd.reverse();
        fwd.into_iter()
            .zip(bwd)
            .map(|(f, b)| tape.concat(&[f, b]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn set_cell(params: &mut ParamSet, cell: &LstmCell, w: f64, bias: &[f64]) {
        let wp = params.get_mut(cell.weight);
        wp.value = Tensor::new(wp.value.shape().to_vec(), vec![w; wp.value.len()]).unwrap();
        params.get_mut(cell.bias).value = Tensor::vector(bias.to_vec()).unwrap();
    }

    #[test]
    fn zero_parameters_give_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ps = ParamSet::new();
        let cell = LstmCell::new(&mut ps, "c", 3, 2, &mut rng).unwrap();
        set_cell(&mut ps, &cell, 0.0, &[0.0; 8]);
        let mut tape = Tape::new(&ps);
        let x = tape.input(&[0.4, -1.0, 2.0]).unwrap();
        let (h0, c0) = cell.zero_state(&mut tape).unwrap();
        let (h, c) = cell.step(&mut tape, x, h0, c0).unwrap();
        assert_eq!(tape.value(h), &[0.0, 0.0]);
        assert_eq!(tape.value(c), &[0.0, 0.0]);
    }

    #[test]
    fn saturated_forget_gate_accumulates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ps = ParamSet::new();
        let cell = LstmCell::new(&mut ps, "c", 2, 2, &mut rng).unwrap();
        // forget gate bias 40, input gate bias 0 (i = 0.5), candidate bias atanh(0.6)
        let g = 0.6f64.atanh();
        set_cell(&mut ps, &cell, 0.0, &[0.0, 0.0, 40.0, 40.0, g, g, 0.0, 0.0]);
        let mut tape = Tape::new(&ps);
        let x = tape.input(&[1.0, 1.0]).unwrap();
        let h0 = tape.input(&[0.0, 0.0]).unwrap();
        let c0 = tape.input(&[0.25, -2.0]).unwrap();
        let (_, c) = cell.step(&mut tape, x, h0, c0).unwrap();
        let expected = [0.25 + 0.5 * 0.6, -2.0 + 0.5 * 0.6];
        for (a, b) in tape.value(c).iter().zip(expected) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn shapes_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ps = ParamSet::new();
        let bi = BiLstm::new(&mut ps, "bi", 3, 4, &mut rng).unwrap();
        assert_eq!(ps.get(bi.forward.bias).value.data()[4..8], [1.0; 4]);
        let mut tape = Tape::new(&ps);
        let xs: Vec<Var> = (0..5)
            .map(|t| tape.input(&[t as f64, 0.5, -0.5]).unwrap())
            .collect();
        let hs = bi.forward(&mut tape, &xs).unwrap();
        assert_eq!(hs.len(), 5);
        assert!(hs.iter().all(|&h| tape.len_of(h) == 8));
        assert!(matches!(bi.forward(&mut tape, &[]), Err(Error::Domain(_))));
        let bad = tape.input(&[1.0]).unwrap();
        assert!(matches!(bi.forward(&mut tape, &[bad]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn single_step_is_two_independent_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ps = ParamSet::new();
        let bi = BiLstm::new(&mut ps, "bi", 2, 3, &mut rng).unwrap();
        let mut tape = Tape::new(&ps);
        let x = tape.input(&[0.7, -0.2]).unwrap();
        let hs = bi.forward(&mut tape, &[x]).unwrap();
        let (h0, c0) = bi.forward.zero_state(&mut tape).unwrap();
        let (hf, _) = bi.forward.step(&mut tape, x, h0, c0).unwrap();
        let (hb, _) = bi.backward.step(&mut tape, x, h0, c0).unwrap();
        let mut expected = tape.value(hf).to_vec();
        expected.extend_from_slice(tape.value(hb));
        assert_eq!(tape.value(hs[0]), expected.as_slice());
    }

    #[test]
    fn reversal_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ps = ParamSet::new();
        let bi = BiLstm::new(&mut ps, "bi", 2, 3, &mut rng).unwrap();
        let swapped = BiLstm {
            forward: bi.backward.clone(),
            backward: bi.forward.clone(),
        };
        let seq: Vec<[f64; 2]> = (0..6).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let mut tape = Tape::new(&ps);
        let xs: Vec<Var> = seq.iter().map(|x| tape.input(x).unwrap()).collect();
        let rev: Vec<Var> = seq.iter().rev().map(|x| tape.input(x).unwrap()).collect();
        let h = bi.forward(&mut tape, &xs).unwrap();
        let hr = swapped.forward(&mut tape, &rev).unwrap();
        for t in 0..6 {
            let a = tape.value(h[t]);
            let b = tape.value(hr[5 - t]);
            let swapped_b: Vec<f64> = b[3..].iter().chain(&b[..3]).copied().collect();
            for (x, y) in a.iter().zip(&swapped_b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
