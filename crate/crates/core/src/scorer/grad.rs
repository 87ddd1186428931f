use crate::dataset::{FrequencyTable, PreferenceExample};
use crate::embeddings::EmbeddingStore;

use super::loss::{log_sum_exp, neg_entropy};
use super::model::{dot, Projected};
use super::{Objective, ScorerError, ScoringModel, Weighting};

/// Gradient of the batch loss with respect to every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_txt: Vec<f64>,
    pub w_img: Vec<f64>,
    pub log_t: f64,
}

impl Gradients {
    fn zeros(model: &ScoringModel) -> Self {
        Self {
            w_txt: vec![0.0; model.w_txt.len()],
            w_img: vec![0.0; model.w_img.len()],
            log_t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.log_t.is_finite() && self.w_txt.iter().chain(&self.w_img).all(|g| g.is_finite())
    }

    /// All entries in a fixed order: `w_txt`, `w_img`, `log_t`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.w_txt.len() + self.w_img.len() + 1);
        out.extend_from_slice(&self.w_txt);
        out.extend_from_slice(&self.w_img);
        out.push(self.log_t);
        out
    }
}

/// Weighted mean preference loss over the batch.
pub fn batch_loss(
    model: &ScoringModel,
    batch: &[PreferenceExample],
    store: &EmbeddingStore,
    freqs: &FrequencyTable,
    objective: Objective,
    weighting: Weighting,
) -> Result<f64, ScorerError> {
    Ok(BatchPass::forward(model, batch, store, freqs, objective, weighting)?.loss)
}

/// Analytic gradient of [`batch_loss`].
pub fn gradients(
    model: &ScoringModel,
    batch: &[PreferenceExample],
    store: &EmbeddingStore,
    freqs: &FrequencyTable,
    objective: Objective,
    weighting: Weighting,
) -> Result<Gradients, ScorerError> {
    Ok(loss_and_gradients(model, batch, store, freqs, objective, weighting)?.1)
}

pub fn loss_and_gradients(
    model: &ScoringModel,
    batch: &[PreferenceExample],
    store: &EmbeddingStore,
    freqs: &FrequencyTable,
    objective: Objective,
    weighting: Weighting,
) -> Result<(f64, Gradients), ScorerError> {
    let pass = BatchPass::forward(model, batch, store, freqs, objective, weighting)?;
    let grads = pass.backward(model);
    if !grads.is_finite() {
        return Err(ScorerError::NonFinite("gradients".into()));
    }
    Ok((pass.loss, grads))
}

/// One example's logits and the upstream gradient on each of them.
struct ExampleTerm {
    /// Indices into `BatchPass::images` that enter this example's softmax.
    candidates: Vec<usize>,
    logits: Vec<f64>,
    dlogits: Vec<f64>,
}

/// Cached forward state for one batch.
struct BatchPass<'a> {
    prompt_inputs: Vec<&'a [f64]>,
    prompts: Vec<Projected>,
    image_inputs: Vec<&'a [f64]>,
    images: Vec<Projected>,
    terms: Vec<ExampleTerm>,
    loss: f64,
}

impl<'a> BatchPass<'a> {
    fn forward(
        model: &ScoringModel,
        batch: &'a [PreferenceExample],
        store: &'a EmbeddingStore,
        freqs: &FrequencyTable,
        objective: Objective,
        weighting: Weighting,
    ) -> Result<Self, ScorerError> {
        if batch.is_empty() {
            return Err(ScorerError::EmptyBatch);
        }
        model.check_finite()?;

        let weights = batch
            .iter()
            .map(|e| match weighting {
                Weighting::Uniform => Ok(1.0),
                Weighting::Frequency => freqs
                    .get(&e.prompt_id)
                    .map(|c| 1.0 / c as f64)
                    .ok_or_else(|| ScorerError::MissingFrequency(e.prompt_id.clone())),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let weight_sum: f64 = weights.iter().sum();

        let mut prompt_inputs = Vec::with_capacity(batch.len());
        let mut prompts = Vec::with_capacity(batch.len());
        let mut image_inputs = Vec::with_capacity(2 * batch.len());
        let mut images = Vec::with_capacity(2 * batch.len());
        for example in batch {
            let x = store.prompt(&example.prompt_id)?;
            prompts.push(model.project_text(x)?);
            prompt_inputs.push(x);
            for id in [&example.item_a, &example.item_b] {
                let y = store.item(id)?;
                images.push(model.project_image(y)?);
                image_inputs.push(y);
            }
        }

        let temperature = model.temperature();
        let mut loss = 0.0;
        let mut terms = Vec::with_capacity(batch.len());
        for (k, example) in batch.iter().enumerate() {
            let candidates: Vec<usize> = match objective {
                Objective::PairwiseKl => vec![2 * k, 2 * k + 1],
                Objective::InBatch => (0..images.len()).collect(),
            };
            let logits: Vec<f64> = candidates
                .iter()
                .map(|&c| temperature * dot(&prompts[k].unit, &images[c].unit))
                .collect();
            if logits.iter().any(|l| !l.is_finite()) {
                return Err(ScorerError::NonFinite("scores".into()));
            }
            let lse = log_sum_exp(&logits);
            let own = [
                candidates.iter().position(|&c| c == 2 * k).unwrap(),
                candidates.iter().position(|&c| c == 2 * k + 1).unwrap(),
            ];
            let p = example.label.probs();
            let example_loss = neg_entropy(p) - (p[0] * (logits[own[0]] - lse) + p[1] * (logits[own[1]] - lse));

            let scale = weights[k] / weight_sum;
            loss += scale * example_loss;

            let mut dlogits: Vec<f64> = logits.iter().map(|l| scale * (l - lse).exp()).collect();
            dlogits[own[0]] -= scale * p[0];
            dlogits[own[1]] -= scale * p[1];
            terms.push(ExampleTerm {
                candidates,
                logits,
                dlogits,
            });
        }
        if !loss.is_finite() {
            return Err(ScorerError::NonFinite("loss".into()));
        }

        Ok(Self {
            prompt_inputs,
            prompts,
            image_inputs,
            images,
            terms,
            loss,
        })
    }

    fn backward(&self, model: &ScoringModel) -> Gradients {
        let d = model.d;
        let temperature = model.temperature();
        let mut grads = Gradients::zeros(model);

        let mut d_prompt_unit = vec![vec![0.0; d]; self.prompts.len()];
        let mut d_image_unit = vec![vec![0.0; d]; self.images.len()];
        for (k, term) in self.terms.iter().enumerate() {
            let u = &self.prompts[k].unit;
            for ((&c, &logit), &g) in term.candidates.iter().zip(&term.logits).zip(&term.dlogits) {
                // logit = T * <u, v>, and dT/dlog_t = T.
                grads.log_t += g * logit;
                let v = &self.images[c].unit;
                for j in 0..d {
                    d_prompt_unit[k][j] += g * temperature * v[j];
                    d_image_unit[c][j] += g * temperature * u[j];
                }
            }
        }

        accumulate(&mut grads.w_txt, d, &self.prompt_inputs, &self.prompts, &d_prompt_unit);
        accumulate(&mut grads.w_img, d, &self.image_inputs, &self.images, &d_image_unit);
        grads
    }
}

/// Pulls gradients on unit vectors back through the normalization and the
/// linear head: `dz = (I - z z^T) dz_unit / |z|`, `dW += x^T dz`.
fn accumulate(dw: &mut [f64], d: usize, inputs: &[&[f64]], projected: &[Projected], d_unit: &[Vec<f64>]) {
    for ((x, proj), du) in inputs.iter().zip(projected).zip(d_unit) {
        let radial = dot(du, &proj.unit);
        let dz: Vec<f64> = du
            .iter()
            .zip(&proj.unit)
            .map(|(g, z)| (g - radial * z) / proj.norm)
            .collect();
        for (xi, row) in x.iter().zip(dw.chunks_exact_mut(d)) {
            for (w, g) in row.iter_mut().zip(&dz) {
                *w += xi * g;
            }
        }
    }
}
