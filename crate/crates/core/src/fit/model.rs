use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compute::{NamedTensor, ParamId, ParamSet, Tape, Var};
use crate::error::{Error, Result};
use crate::fit::signal::scaled_vectors;
use crate::fit::{concat_representations, Activation, Branch, BranchAssignment, MemoryCell, SupportMap};
use crate::pipeline::{FitFeatures, Scaling};
use crate::sequence::{Attention, BaMeanNet, BiLstm, ClassifierHead};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "ba-mean")]
    BaMean,
    #[serde(rename = "fit")]
    Fit,
    #[serde(rename = "fit-v")]
    FitV,
    #[serde(rename = "multi-fit")]
    MultiFit,
    #[serde(rename = "multi-fit-v")]
    MultiFitV,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::BaMean,
        ModelKind::Fit,
        ModelKind::FitV,
        ModelKind::MultiFit,
        ModelKind::MultiFitV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::BaMean => "ba-mean",
            ModelKind::Fit => "fit",
            ModelKind::FitV => "fit-v",
            ModelKind::MultiFit => "multi-fit",
            ModelKind::MultiFitV => "multi-fit-v",
        }
    }

    pub fn uses_supports(self) -> bool {
        matches!(self, ModelKind::FitV | ModelKind::MultiFitV)
    }

    pub fn is_multi_resolution(self) -> bool {
        matches!(self, ModelKind::MultiFit | ModelKind::MultiFitV)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelDims {
    /// LSTM hidden width per direction.
    pub hidden: usize,
    /// Memory-cell output width per signal.
    pub repr: usize,
    /// Width of the classifier's hidden layer (0 for a single affine).
    pub head_hidden: usize,
    pub memory_activation: Activation,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            hidden: 32,
            repr: 8,
            head_hidden: 32,
            memory_activation: Activation::Identity,
        }
    }
}

/// Everything needed to rebuild a model's structure deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dims: ModelDims,
    pub signals: usize,
    pub classes: usize,
    pub supports: SupportMap,
    pub assignment: Option<BranchAssignment>,
    pub scaling: Scaling,
    pub init_seed: u64,
}

/// Memory cells over a subset of signals followed by BiLSTM and attention.
#[derive(Clone, Debug)]
pub struct FitBranch {
    pub signals: Vec<usize>,
    pub cells: Vec<MemoryCell>,
    pub supports: Vec<Vec<usize>>,
    pub bilstm: BiLstm,
    pub attention: Attention,
}

impl FitBranch {
    fn new(
        params: &mut ParamSet,
        name: &str,
        signals: Vec<usize>,
        supports: &SupportMap,
        dims: &ModelDims,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(signals.len());
        let mut sup = Vec::with_capacity(signals.len());
        for &s in &signals {
            let list = supports.of(s).to_vec();
            cells.push(MemoryCell::new(
                params,
                &format!("{name}.cell{s}"),
                list.len(),
                dims.repr,
                dims.memory_activation,
                rng,
            )?);
            sup.push(list);
        }
        let width = signals.len() * dims.repr;
        let bilstm = BiLstm::new(params, &format!("{name}.bilstm"), width, dims.hidden, rng)?;
        let attention = Attention::new(params, &format!("{name}.attention"), 2 * dims.hidden, rng)?;
        Ok(FitBranch { signals, cells, supports: sup, bilstm, attention })
    }

    pub fn context_dim(&self) -> usize {
        self.bilstm.output_dim()
    }

    /// Builds the per-step representations `R_t` for this branch.
    pub fn representations(&self, tape: &mut Tape<'_>, features: &FitFeatures, scaling: &Scaling) -> Result<Vec<Var>> {
        let m = features.signals();
        if let Some(&bad) = self.signals.iter().chain(self.supports.iter().flatten()).find(|&&s| s >= m) {
            return Err(Error::Config(format!("branch references signal {bad}, features have {m}")));
        }
        let vectors = scaled_vectors(features, scaling);
        let mut steps = Vec::with_capacity(features.steps());
        let mut support_buf = Vec::new();
        let mut reprs = Vec::with_capacity(self.cells.len());
        for t in 0..features.steps() {
            reprs.clear();
            for ((&s, cell), sup) in self.signals.iter().zip(&self.cells).zip(&self.supports) {
                support_buf.clear();
                support_buf.extend(sup.iter().map(|&j| vectors[t * m + j]));
                reprs.push(cell.forward(tape, &vectors[t * m + s], &support_buf)?);
            }
            steps.push(concat_representations(tape, &reprs)?);
        }
        Ok(steps)
    }

    /// Attention-pooled context vector for the branch.
    pub fn context(&self, tape: &mut Tape<'_>, features: &FitFeatures, scaling: &Scaling) -> Result<Var> {
        let rs = self.representations(tape, features, scaling)?;
        let hs = self.bilstm.forward(tape, &rs)?;
        let (_, context) = self.attention.forward(tape, &hs)?;
        Ok(context)
    }
}

#[derive(Clone, Debug)]
pub enum Network {
    BaMean(BaMeanNet),
    Single {
        branch: FitBranch,
        head: ClassifierHead,
    },
    Multi {
        fast: FitBranch,
        slow: FitBranch,
        fusion: (ParamId, ParamId),
        head: ClassifierHead,
    },
}

/// A model of any kind together with its trainable parameters.
#[derive(Clone, Debug)]
pub struct FitModel {
    pub spec: ModelSpec,
    pub params: ParamSet,
    pub network: Network,
}

/// Serializable form of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub spec: ModelSpec,
    pub params: Vec<NamedTensor>,
}

impl FitModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let dims = &spec.dims;
        if dims.hidden == 0 || dims.repr == 0 {
            return Err(Error::Config("hidden and repr widths must be positive".into()));
        }
        if spec.scaling.stats.signals() != spec.signals {
            return Err(Error::Config("normalization statistics do not match the signal count".into()));
        }
        spec.supports.validate(spec.signals)?;
        if !spec.kind.uses_supports() && !spec.supports.is_all_empty() {
            return Err(Error::Config(format!("{} does not take support signals", spec.kind)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.init_seed);
        let mut params = ParamSet::new();
        let network = match spec.kind {
            ModelKind::BaMean => Network::BaMean(BaMeanNet::new(
                &mut params,
                spec.signals,
                dims.hidden,
                dims.head_hidden,
                spec.classes,
                &mut rng,
            )?),
            ModelKind::Fit | ModelKind::FitV => {
                let signals = (0..spec.signals).collect();
                let branch = FitBranch::new(&mut params, "fit", signals, &spec.supports, dims, &mut rng)?;
                let head = ClassifierHead::new(
                    &mut params,
                    "head",
                    branch.context_dim(),
                    dims.head_hidden,
                    spec.classes,
                    &mut rng,
                )?;
                Network::Single { branch, head }
            }
            ModelKind::MultiFit | ModelKind::MultiFitV => {
                let assignment = spec
                    .assignment
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("{} needs a fast/slow assignment", spec.kind)))?;
                if assignment.branches.len() != spec.signals {
                    return Err(Error::Config("branch assignment does not cover every signal".into()));
                }
                let fast_signals = assignment.members(Branch::Fast);
                let slow_signals = assignment.members(Branch::Slow);
                if fast_signals.is_empty() || slow_signals.is_empty() {
                    return Err(Error::Config(format!(
                        "{} needs signals in both branches (fast {}, slow {}); use the single-branch model instead",
                        spec.kind,
                        fast_signals.len(),
                        slow_signals.len()
                    )));
                }
                for (s, list) in spec.supports.0.iter().enumerate() {
                    if list.iter().any(|&j| assignment.branches[j] != assignment.branches[s]) {
                        return Err(Error::Config(format!("signal {s} has a support outside its branch")));
                    }
                }
                let fast = FitBranch::new(&mut params, "fast", fast_signals, &spec.supports, dims, &mut rng)?;
                let slow = FitBranch::new(&mut params, "slow", slow_signals, &spec.supports, dims, &mut rng)?;
                let fused_in = fast.context_dim() + slow.context_dim();
                let fused_out = 2 * dims.hidden;
                let fusion = (
                    params.add_uniform("fusion.weight", &[fused_out, fused_in], fused_in, &mut rng)?,
                    params.add_uniform("fusion.bias", &[fused_out], fused_in, &mut rng)?,
                );
                let head =
                    ClassifierHead::new(&mut params, "head", fused_out, dims.head_hidden, spec.classes, &mut rng)?;
                Network::Multi { fast, slow, fusion, head }
            }
        };
        Ok(FitModel { spec, params, network })
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn to_saved(&self) -> SavedModel {
        SavedModel {
            spec: self.spec.clone(),
            params: self.params.snapshot(),
        }
    }

    pub fn from_saved(saved: &SavedModel) -> Result<Self> {
        let mut model = FitModel::new(saved.spec.clone())?;
        model.params.load_snapshot(&saved.params)?;
        Ok(model)
    }

    /// Class logits for one record. `slow` is only read by multi-resolution
    /// kinds. Parameters are taken from the tape, so callers may evaluate
    /// against a perturbed copy of `self.params`.
    pub fn logits(&self, tape: &mut Tape<'_>, fast: &FitFeatures, slow: &FitFeatures) -> Result<Var> {
        if fast.signals() != self.spec.signals {
            return Err(Error::Config(format!(
                "model expects {} signals, record has {}",
                self.spec.signals,
                fast.signals()
            )));
        }
        let scaling = &self.spec.scaling;
        match &self.network {
            Network::BaMean(net) => net.logits(tape, fast, scaling),
            Network::Single { branch, head } => {
                let ctx = branch.context(tape, fast, scaling)?;
                head.logits(tape, ctx)
            }
            Network::Multi { fast: fb, slow: sb, fusion, head } => {
                let cf = fb.context(tape, fast, scaling)?;
                let cs = sb.context(tape, slow, scaling)?;
                let joined = tape.concat(&[cf, cs])?;
                let (w, b) = (tape.param(fusion.0), tape.param(fusion.1));
                let fused = tape.affine(w, joined, Some(b))?;
                let fused = tape.tanh(fused)?;
                head.logits(tape, fused)
            }
        }
    }

    pub fn probabilities(&self, tape: &mut Tape<'_>, fast: &FitFeatures, slow: &FitFeatures) -> Result<Var> {
        let z = self.logits(tape, fast, slow)?;
        tape.softmax(z)
    }

    /// Cross-entropy of the record's label.
    pub fn loss(&self, tape: &mut Tape<'_>, fast: &FitFeatures, slow: &FitFeatures, label: usize) -> Result<Var> {
        let z = self.logits(tape, fast, slow)?;
        tape.cross_entropy(z, label)
    }

    pub fn predict_proba(&self, fast: &FitFeatures, slow: &FitFeatures) -> Result<Vec<f64>> {
        let mut tape = Tape::new(&self.params);
        let p = self.probabilities(&mut tape, fast, slow)?;
        Ok(tape.value(p).to_vec())
    }
}

/// Probabilities from a single-branch FIT or FIT-V model.
pub fn fit_forward(tape: &mut Tape<'_>, features: &FitFeatures, model: &FitModel) -> Result<Var> {
    if !matches!(model.kind(), ModelKind::Fit | ModelKind::FitV) {
        return Err(Error::Config(format!("fit_forward called on a {} model", model.kind())));
    }
    model.probabilities(tape, features, features)
}

/// Probabilities from a two-branch Multi-FIT or Multi-FIT-V model.
pub fn multifit_forward(tape: &mut Tape<'_>, fast: &FitFeatures, slow: &FitFeatures, model: &FitModel) -> Result<Var> {
    if !model.kind().is_multi_resolution() {
        return Err(Error::Config(format!("multifit_forward called on a {} model", model.kind())));
    }
    model.probabilities(tape, fast, slow)
}

/// Probabilities from the mean-imputation baseline.
pub fn ba_mean_forward(tape: &mut Tape<'_>, features: &FitFeatures, model: &FitModel) -> Result<Var> {
    if model.kind() != ModelKind::BaMean {
        return Err(Error::Config(format!("ba_mean_forward called on a {} model", model.kind())));
    }
    model.probabilities(tape, features, features)
}
