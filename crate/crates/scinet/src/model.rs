//! The SciNet model: probabilistic encoder, Gaussian latent with the
//! reparameterization trick, question-conditioned decoder, beta-VAE loss,
//! and the recurrent constant-shift time-evolution variant.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Mlp, MlpLeaves, NodeId, Tape};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Clamp bound on `log_sigma` before exponentiation.
pub const LOG_SIGMA_CLAMP: f64 = 10.0;

const MAGIC: &[u8; 7] = b"SCIMOD1";
const ELU_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrentSpec {
    pub n_steps: usize,
}

/// Network structure: input/question/latent/output sizes and hidden layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SciNetSpec {
    pub obs_dim: usize,
    pub question_dim: usize,
    pub latent_dim: usize,
    pub answer_dim: usize,
    pub encoder_layers: Vec<usize>,
    pub decoder_layers: Vec<usize>,
    #[serde(default)]
    pub recurrent: Option<RecurrentSpec>,
}

impl SciNetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 || self.answer_dim == 0 {
            return Err(Error::config("obs_dim and answer_dim must be positive"));
        }
        if self.latent_dim + self.question_dim == 0 {
            return Err(Error::config(
                "decoder needs at least one latent or question input",
            ));
        }
        if let Some(rec) = &self.recurrent {
            if self.question_dim != 0 {
                return Err(Error::config(
                    "recurrent models use an implicit question (question_dim must be 0)",
                ));
            }
            if self.latent_dim == 0 {
                return Err(Error::config("recurrent models need latent_dim >= 1"));
            }
            if rec.n_steps < 1 {
                return Err(Error::config("recurrent n_steps must be >= 1"));
            }
        }
        Ok(())
    }

    fn encoder_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.obs_dim];
        sizes.extend_from_slice(&self.encoder_layers);
        sizes.push(2 * self.latent_dim);
        sizes
    }

    fn decoder_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.latent_dim + self.question_dim];
        sizes.extend_from_slice(&self.decoder_layers);
        sizes.push(self.answer_dim);
        sizes
    }
}

/// Gaussian latent for one observation: `z = mu + exp(log_sigma) * eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub mu: Array1<f64>,
    pub log_sigma: Array1<f64>,
    pub z: Array1<f64>,
}

impl LatentState {
    pub fn empty() -> Self {
        LatentState {
            mu: Array1::zeros(0),
            log_sigma: Array1::zeros(0),
            z: Array1::zeros(0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SciNetModel {
    pub spec: SciNetSpec,
    pub seed: u64,
    /// Free-form training provenance, persisted in the model file header.
    pub provenance: serde_json::Value,
    encoder: Option<Mlp>,
    decoder: Mlp,
    /// Constant time-evolution shift, present iff the spec is recurrent.
    shift: Option<Array2<f64>>,
}

impl SciNetModel {
    /// Fresh model with randomly initialized parameters; deterministic in `seed`.
    pub fn new(spec: SciNetSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let encoder = if spec.latent_dim > 0 {
            Some(Mlp::init(&spec.encoder_sizes(), ELU_ALPHA, substream(seed, 1))?)
        } else {
            None
        };
        let decoder = Mlp::init(&spec.decoder_sizes(), ELU_ALPHA, substream(seed, 2))?;
        let shift = spec
            .recurrent
            .as_ref()
            .map(|_| Array2::zeros((1, spec.latent_dim)));
        Ok(SciNetModel {
            spec,
            seed,
            provenance: serde_json::Value::Null,
            encoder,
            decoder,
            shift,
        })
    }

    pub fn encoder(&self) -> Option<&Mlp> {
        self.encoder.as_ref()
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }

    pub fn shift(&self) -> Option<&Array2<f64>> {
        self.shift.as_ref()
    }

    /// Deterministic encoder pass; `z` is set to `mu`.
    pub fn encode(&self, observation: &Array1<f64>) -> Result<LatentState> {
        if observation.len() != self.spec.obs_dim {
            return Err(Error::dim("encode", self.spec.obs_dim, observation.len()));
        }
        let Some(encoder) = &self.encoder else {
            return Ok(LatentState::empty());
        };
        let head = encoder.eval(observation)?;
        let d = self.spec.latent_dim;
        let mu = head.slice(ndarray::s![..d]).to_owned();
        let log_sigma = head.slice(ndarray::s![d..]).to_owned();
        Ok(LatentState {
            z: mu.clone(),
            mu,
            log_sigma,
        })
    }

    /// Decoder pass on a given latent vector and question.
    pub fn decode(&self, z: &Array1<f64>, question: &Array1<f64>) -> Result<Array1<f64>> {
        if z.len() != self.spec.latent_dim {
            return Err(Error::dim("decode latent", self.spec.latent_dim, z.len()));
        }
        if question.len() != self.spec.question_dim {
            return Err(Error::dim(
                "decode question",
                self.spec.question_dim,
                question.len(),
            ));
        }
        let mut input = Array1::zeros(z.len() + question.len());
        input.slice_mut(ndarray::s![..z.len()]).assign(z);
        input.slice_mut(ndarray::s![z.len()..]).assign(question);
        self.decoder.eval(&input)
    }

    /// Full pipeline. `eps = None` is evaluation mode (`z = mu`).
    pub fn forward_answer(
        &self,
        observation: &Array1<f64>,
        question: &Array1<f64>,
        eps: Option<&Array1<f64>>,
    ) -> Result<(Array1<f64>, LatentState)> {
        let mut state = self.encode(observation)?;
        if let Some(eps) = eps {
            state.z = sample_latent(&state, eps)?;
        }
        let answer = self.decode(&state.z, question)?;
        Ok((answer, state))
    }

    /// Recurrent rollout: decode, shift, decode, ... for `n_steps` steps.
    pub fn forward_recurrent(
        &self,
        observation: &Array1<f64>,
        n_steps: usize,
        eps: Option<&Array1<f64>>,
    ) -> Result<Vec<Array1<f64>>> {
        let shift = self
            .shift
            .as_ref()
            .ok_or_else(|| Error::Contract("forward_recurrent on a non-recurrent model".into()))?;
        if n_steps < 1 {
            return Err(Error::config("n_steps must be >= 1"));
        }
        let mut state = self.encode(observation)?;
        if let Some(eps) = eps {
            state.z = sample_latent(&state, eps)?;
        }
        let question = Array1::zeros(0);
        let mut r = state.z;
        let mut answers = Vec::with_capacity(n_steps);
        for step in 0..n_steps {
            answers.push(self.decode(&r, &question)?);
            if step + 1 < n_steps {
                r += &shift.row(0);
            }
        }
        Ok(answers)
    }

    /// Stage all parameters on a tape for a recorded forward pass.
    pub fn stage(&self, tape: &mut Tape) -> StagedModel {
        StagedModel {
            encoder: self.encoder.as_ref().map(|e| e.stage(tape)),
            decoder: self.decoder.stage(tape),
            shift: self.shift.as_ref().map(|s| tape.leaf(s.clone())),
        }
    }

    /// Recorded batched forward pass. Rows of `observations`/`questions`/`eps`
    /// are samples. Produces one answer node per step (one for feed-forward
    /// models) plus the latent statistics when a latent exists.
    pub fn forward_batch(
        &self,
        tape: &mut Tape,
        staged: &StagedModel,
        observations: &Array2<f64>,
        questions: &Array2<f64>,
        eps: &Array2<f64>,
        n_steps: usize,
    ) -> Result<BatchOutput> {
        let d = self.spec.latent_dim;
        let latent = if d > 0 {
            let enc = staged
                .encoder
                .as_ref()
                .expect("encoder staged when latent_dim > 0");
            let obs = tape.leaf(observations.clone());
            let head = self
                .encoder
                .as_ref()
                .expect("latent_dim > 0")
                .forward_staged(tape, enc, obs)?;
            let mu = tape.slice_cols(head, 0, d)?;
            let ls_raw = tape.slice_cols(head, d, 2 * d)?;
            let log_sigma = tape.clamp(ls_raw, -LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP);
            let sigma = tape.exp(log_sigma);
            let eps_leaf = tape.leaf(eps.clone());
            let noise = tape.mul(sigma, eps_leaf)?;
            let z = tape.add(mu, noise)?;
            Some((mu, log_sigma, z))
        } else {
            None
        };

        let mut answers = Vec::with_capacity(n_steps);
        if self.spec.recurrent.is_some() {
            let shift = staged.shift.expect("shift staged for recurrent models");
            let (_, _, z) = latent.expect("recurrent models have a latent");
            let mut r = z;
            for step in 0..n_steps {
                answers.push(self.decoder.forward_staged(tape, &staged.decoder, r)?);
                if step + 1 < n_steps {
                    r = tape.add_row(r, shift)?;
                }
            }
        } else {
            if n_steps != 1 {
                return Err(Error::config("feed-forward models decode a single step"));
            }
            let dec_in = match latent {
                Some((_, _, z)) if self.spec.question_dim > 0 => {
                    let q = tape.leaf(questions.clone());
                    tape.concat_cols(z, q)?
                }
                Some((_, _, z)) => z,
                None => tape.leaf(questions.clone()),
            };
            answers.push(self.decoder.forward_staged(tape, &staged.decoder, dec_in)?);
        }

        Ok(BatchOutput {
            answers,
            mu: latent.map(|(mu, _, _)| mu),
            log_sigma: latent.map(|(_, ls, _)| ls),
        })
    }

    /// Parameter tensors in serialization order: encoder, decoder, shift.
    pub fn param_tensors(&self) -> Vec<&Array2<f64>> {
        let mut tensors = Vec::new();
        if let Some(enc) = &self.encoder {
            tensors.extend(enc.tensors());
        }
        tensors.extend(self.decoder.tensors());
        if let Some(shift) = &self.shift {
            tensors.push(shift);
        }
        tensors
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut tensors = Vec::new();
        if let Some(enc) = &mut self.encoder {
            tensors.extend(enc.tensors_mut());
        }
        tensors.extend(self.decoder.tensors_mut());
        if let Some(shift) = &mut self.shift {
            tensors.push(shift);
        }
        tensors
    }

    /// Serialize as magic + JSON header + little-endian f32 parameter blocks.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = ModelHeader {
            version: 1,
            spec: self.spec.clone(),
            seed: self.seed,
            provenance: self.provenance.clone(),
        };
        let header_json = serde_json::to_vec(&header)?;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&header_json);
        for tensor in self.param_tensors() {
            for &v in tensor.iter() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Format("bad magic, not a SCIMOD1 file".into()));
        }
        let mut offset = MAGIC.len();
        let header_len =
            u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes")) as usize;
        offset += 4;
        if bytes.len() < offset + header_len {
            return Err(Error::Format("truncated header".into()));
        }
        let header: ModelHeader = serde_json::from_slice(&bytes[offset..offset + header_len])?;
        offset += header_len;
        let mut model = SciNetModel::new(header.spec, header.seed)?;
        model.provenance = header.provenance;
        let expected = model.param_tensors().iter().map(|t| t.len()).sum::<usize>();
        let payload = &bytes[offset..];
        if payload.len() != expected * 4 {
            return Err(Error::dim("model parameter block", expected * 4, payload.len()));
        }
        let mut cursor = 0;
        for tensor in model.param_tensors_mut() {
            for v in tensor.iter_mut() {
                let raw = f32::from_le_bytes(
                    payload[cursor..cursor + 4].try_into().expect("4 bytes"),
                );
                *v = raw as f64;
                cursor += 4;
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        SciNetModel::from_bytes(&std::fs::read(path)?)
    }
}

/// Tape leaves for one staged model.
pub struct StagedModel {
    pub encoder: Option<MlpLeaves>,
    pub decoder: MlpLeaves,
    pub shift: Option<NodeId>,
}

impl StagedModel {
    /// Leaf ids aligned with [`SciNetModel::param_tensors`].
    pub fn param_ids(&self) -> Vec<NodeId> {
        let mut ids = Vec::new();
        if let Some(enc) = &self.encoder {
            for &(w, b) in &enc.layers {
                ids.push(w);
                ids.push(b);
            }
        }
        for &(w, b) in &self.decoder.layers {
            ids.push(w);
            ids.push(b);
        }
        if let Some(shift) = self.shift {
            ids.push(shift);
        }
        ids
    }
}

/// One recorded batched forward pass.
pub struct BatchOutput {
    pub answers: Vec<NodeId>,
    pub mu: Option<NodeId>,
    pub log_sigma: Option<NodeId>,
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    version: u32,
    spec: SciNetSpec,
    seed: u64,
    provenance: serde_json::Value,
}

/// Reparameterized sample `z = mu + exp(log_sigma) * eps` (elementwise).
pub fn sample_latent(state: &LatentState, eps: &Array1<f64>) -> Result<Array1<f64>> {
    if eps.len() != state.mu.len() {
        return Err(Error::dim("sample_latent", state.mu.len(), eps.len()));
    }
    let sigma = state
        .log_sigma
        .mapv(|ls| ls.clamp(-LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP).exp());
    Ok(&state.mu + &(&sigma * eps))
}

/// Beta-VAE cost: squared reconstruction error plus the Gaussian regularizer
/// `-(beta/2) * sum(log sigma^2 - mu^2 - sigma^2)`; the additive constant is
/// dropped.
pub fn loss_beta_vae(
    answer_pred: &Array1<f64>,
    answer_true: &Array1<f64>,
    state: &LatentState,
    beta: f64,
) -> Result<f64> {
    if beta < 0.0 {
        return Err(Error::config(format!("beta must be >= 0, got {beta}")));
    }
    if answer_pred.len() != answer_true.len() {
        return Err(Error::dim("loss answers", answer_true.len(), answer_pred.len()));
    }
    if state.mu.len() != state.log_sigma.len() {
        return Err(Error::dim("loss latent", state.mu.len(), state.log_sigma.len()));
    }
    let recon = answer_pred
        .iter()
        .zip(answer_true)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>();
    let reg = state
        .mu
        .iter()
        .zip(&state.log_sigma)
        .map(|(&mu, &ls)| 2.0 * ls - mu * mu - (2.0 * ls).exp())
        .sum::<f64>();
    Ok(recon - beta / 2.0 * reg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small_spec() -> SciNetSpec {
        SciNetSpec {
            obs_dim: 4,
            question_dim: 1,
            latent_dim: 2,
            answer_dim: 1,
            encoder_layers: vec![8],
            decoder_layers: vec![8],
            recurrent: None,
        }
    }

    #[test]
    fn encode_is_deterministic_with_right_shapes() {
        let model = SciNetModel::new(small_spec(), 3).unwrap();
        let obs = array![0.1, 0.2, 0.3, 0.4];
        let a = model.encode(&obs).unwrap();
        let b = model.encode(&obs).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mu.len(), 2);
        assert_eq!(a.log_sigma.len(), 2);
        assert_eq!(a.mu.len() + a.log_sigma.len(), 2 * model.spec.latent_dim);
    }

    #[test]
    fn encode_latent_zero_is_empty() {
        let spec = SciNetSpec {
            latent_dim: 0,
            ..small_spec()
        };
        let model = SciNetModel::new(spec, 3).unwrap();
        let state = model.encode(&array![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(state.mu.len(), 0);
        assert!(model.encoder().is_none());
    }

    #[test]
    fn encode_dimension_mismatch() {
        let model = SciNetModel::new(small_spec(), 3).unwrap();
        assert!(model.encode(&array![0.1]).is_err());
    }

    #[test]
    fn sample_latent_cases() {
        let state = LatentState {
            mu: array![0.3, -0.4],
            log_sigma: array![0.7, 0.2],
            z: array![0.0, 0.0],
        };
        let z = sample_latent(&state, &array![0.0, 0.0]).unwrap();
        assert_eq!(z, state.mu);

        let tiny = LatentState {
            mu: array![0.3],
            log_sigma: array![-30.0],
            z: array![0.0],
        };
        // log_sigma is clamped at -10, so sigma*eps stays ~2e-4
        let z = sample_latent(&tiny, &array![5.0]).unwrap();
        assert!((z[0] - 0.3).abs() < 1e-3);

        let unit = LatentState {
            mu: array![0.0],
            log_sigma: array![0.0],
            z: array![0.0],
        };
        let z = sample_latent(&unit, &array![0.5]).unwrap();
        assert_eq!(z[0], 0.5);
    }

    #[test]
    fn decode_shapes() {
        let model = SciNetModel::new(small_spec(), 3).unwrap();
        let out = model.decode(&array![0.1, 0.2], &array![0.5]).unwrap();
        assert_eq!(out.len(), 1);
        assert!(model.decode(&array![0.1], &array![0.5]).is_err());
        assert!(model.decode(&array![0.1, 0.2], &array![]).is_err());
    }

    #[test]
    fn loss_beta_vae_hand_values() {
        // beta=0, pred=true -> 0
        let state = LatentState {
            mu: array![0.7],
            log_sigma: array![0.3],
            z: array![0.0],
        };
        let v = loss_beta_vae(&array![1.0], &array![1.0], &state, 0.0).unwrap();
        assert_eq!(v, 0.0);

        // latent 1, mu=0, sigma=1, pred=true, beta=2 -> 1
        let s1 = LatentState {
            mu: array![0.0],
            log_sigma: array![0.0],
            z: array![0.0],
        };
        let v = loss_beta_vae(&array![2.0], &array![2.0], &s1, 2.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        // latent 1, mu=1, sigma=1, pred=true, beta=2 -> 2
        let s2 = LatentState {
            mu: array![1.0],
            log_sigma: array![0.0],
            z: array![0.0],
        };
        let v = loss_beta_vae(&array![2.0], &array![2.0], &s2, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn loss_rejects_negative_beta() {
        let state = LatentState::empty();
        assert!(loss_beta_vae(&array![1.0], &array![1.0], &state, -0.1).is_err());
    }

    #[test]
    fn forward_answer_eval_mode_uses_mu() {
        let model = SciNetModel::new(small_spec(), 9).unwrap();
        let obs = array![0.4, -0.2, 0.9, 0.0];
        let q = array![0.3];
        let (answer, state) = model.forward_answer(&obs, &q, None).unwrap();
        let direct = model.decode(&state.mu, &q).unwrap();
        assert_eq!(answer, direct);

        let eps = array![0.3, -0.8];
        let (a1, _) = model.forward_answer(&obs, &q, Some(&eps)).unwrap();
        let (a2, _) = model.forward_answer(&obs, &q, Some(&eps)).unwrap();
        assert_eq!(a1, a2);
        assert_ne!(a1, answer, "noise injection should change the output");
    }

    #[test]
    fn recurrent_contracts() {
        let spec = SciNetSpec {
            obs_dim: 2,
            question_dim: 0,
            latent_dim: 2,
            answer_dim: 2,
            encoder_layers: vec![8],
            decoder_layers: vec![8],
            recurrent: Some(RecurrentSpec { n_steps: 4 }),
        };
        let mut model = SciNetModel::new(spec, 5).unwrap();
        let obs = array![0.2, 0.8];

        // shift = 0 -> all answers identical
        let answers = model.forward_recurrent(&obs, 4, None).unwrap();
        assert_eq!(answers.len(), 4);
        for a in &answers[1..] {
            assert_eq!(a, &answers[0]);
        }

        // n_steps = 1 equals the plain decoded latent
        let single = model.forward_recurrent(&obs, 1, None).unwrap();
        let state = model.encode(&obs).unwrap();
        let direct = model.decode(&state.mu, &Array1::zeros(0)).unwrap();
        assert_eq!(single[0], direct);

        // step k with shift b equals step 2k with shift b/2
        model.shift = Some(array![[0.3, -0.2]]);
        let coarse = model.forward_recurrent(&obs, 3, None).unwrap();
        model.shift = Some(array![[0.15, -0.1]]);
        let fine = model.forward_recurrent(&obs, 5, None).unwrap();
        for (k, a) in coarse.iter().enumerate() {
            for j in 0..2 {
                assert!((a[j] - fine[2 * k][j]).abs() < 1e-12);
            }
        }

        assert!(model.forward_recurrent(&obs, 0, None).is_err());
    }

    #[test]
    fn recurrent_spec_requires_implicit_question() {
        let spec = SciNetSpec {
            obs_dim: 2,
            question_dim: 1,
            latent_dim: 2,
            answer_dim: 2,
            encoder_layers: vec![4],
            decoder_layers: vec![4],
            recurrent: Some(RecurrentSpec { n_steps: 2 }),
        };
        assert!(SciNetModel::new(spec, 0).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let model = SciNetModel::new(small_spec(), 21).unwrap();
        let bytes = model.to_bytes().unwrap();
        let restored = SciNetModel::from_bytes(&bytes).unwrap();
        assert_eq!(restored.to_bytes().unwrap(), bytes);

        // round-trip reproduces eval outputs at stored (f32) precision
        let obs = array![0.5, 0.1, -0.3, 0.8];
        let q = array![0.2];
        let again = SciNetModel::from_bytes(&restored.to_bytes().unwrap()).unwrap();
        let (a, _) = restored.forward_answer(&obs, &q, None).unwrap();
        let (b, _) = again.forward_answer(&obs, &q, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn serialization_rejects_corruption() {
        let model = SciNetModel::new(small_spec(), 21).unwrap();
        let mut bytes = model.to_bytes().unwrap();

        let mut corrupt = bytes.clone();
        corrupt[0] = b'X';
        assert!(matches!(
            SciNetModel::from_bytes(&corrupt),
            Err(Error::Format(_))
        ));

        bytes.truncate(bytes.len() - 3);
        assert!(matches!(
            SciNetModel::from_bytes(&bytes),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn batch_forward_matches_eval() {
        let model = SciNetModel::new(small_spec(), 13).unwrap();
        let obs = array![[0.4, -0.2, 0.9, 0.0], [0.1, 0.3, -0.5, 0.7]];
        let q = array![[0.3], [0.6]];
        let eps = Array2::zeros((2, 2));
        let mut tape = Tape::new();
        let staged = model.stage(&mut tape);
        let out = model
            .forward_batch(&mut tape, &staged, &obs, &q, &eps, 1)
            .unwrap();
        let batch_answers = tape.value(out.answers[0]).clone();
        for row in 0..2 {
            let (single, _) = model
                .forward_answer(&obs.row(row).to_owned(), &q.row(row).to_owned(), None)
                .unwrap();
            assert!((single[0] - batch_answers[(row, 0)]).abs() < 1e-12);
        }
    }
}
