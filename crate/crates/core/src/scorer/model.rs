use rand::Rng;

use super::ScorerError;

/// Linear text and image projection heads over frozen features plus a
/// learned log-temperature.
///
/// `score(x, y) = exp(log_t) * <normalize(x W_txt), normalize(y W_img)>`
///
/// Both matrices are `d_in x d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringModel {
    pub(crate) d_in: usize,
    pub(crate) d: usize,
    pub(crate) w_txt: Vec<f64>,
    pub(crate) w_img: Vec<f64>,
    pub(crate) log_t: f64,
}

impl ScoringModel {
    pub fn from_parts(
        d_in: usize,
        d: usize,
        w_txt: Vec<f64>,
        w_img: Vec<f64>,
        log_t: f64,
    ) -> Result<Self, ScorerError> {
        if d_in == 0 || d == 0 {
            return Err(ScorerError::Shape(format!(
                "dimensions must be positive, got {d_in}x{d}"
            )));
        }
        for (name, w) in [("w_txt", &w_txt), ("w_img", &w_img)] {
            if w.len() != d_in * d {
                return Err(ScorerError::Shape(format!(
                    "{name} has {} entries, expected {d_in}x{d}",
                    w.len()
                )));
            }
        }
        let model = Self {
            d_in,
            d,
            w_txt,
            w_img,
            log_t,
        };
        model.check_finite()?;
        Ok(model)
    }

    /// Uniform(-1/sqrt(d_in), 1/sqrt(d_in)) projections and `log_t = ln 10`.
    pub fn init<R: Rng + ?Sized>(d_in: usize, d: usize, rng: &mut R) -> Result<Self, ScorerError> {
        let bound = 1.0 / (d_in as f64).sqrt();
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-bound..=bound)).collect() };
        let w_txt = draw(d_in * d);
        let w_img = draw(d_in * d);
        Self::from_parts(d_in, d, w_txt, w_img, 10f64.ln())
    }

    /// Identity projections (`d = d_in`).
    pub fn identity(dim: usize, log_t: f64) -> Result<Self, ScorerError> {
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        Self::from_parts(dim, dim, eye.clone(), eye, log_t)
    }

    pub fn input_dim(&self) -> usize {
        self.d_in
    }

    pub fn proj_dim(&self) -> usize {
        self.d
    }

    pub fn log_temperature(&self) -> f64 {
        self.log_t
    }

    pub fn temperature(&self) -> f64 {
        self.log_t.exp()
    }

    pub fn text_projection(&self) -> &[f64] {
        &self.w_txt
    }

    pub fn image_projection(&self) -> &[f64] {
        &self.w_img
    }

    pub(crate) fn check_finite(&self) -> Result<(), ScorerError> {
        let finite = self.log_t.is_finite() && self.w_txt.iter().chain(&self.w_img).all(|x| x.is_finite());
        if finite {
            Ok(())
        } else {
            Err(ScorerError::NonFinite("model parameters".into()))
        }
    }

    pub(crate) fn check_input(&self, v: &[f64]) -> Result<(), ScorerError> {
        if v.len() != self.d_in {
            return Err(ScorerError::Shape(format!(
                "input vector has length {}, model expects {}",
                v.len(),
                self.d_in
            )));
        }
        Ok(())
    }

    pub(crate) fn project_text(&self, x: &[f64]) -> Result<Projected, ScorerError> {
        self.check_input(x)?;
        Projected::new(project(&self.w_txt, self.d, x))
    }

    pub(crate) fn project_image(&self, y: &[f64]) -> Result<Projected, ScorerError> {
        self.check_input(y)?;
        Projected::new(project(&self.w_img, self.d, y))
    }

    /// Scalar preference score of an item for a prompt.
    pub fn score(&self, prompt_vec: &[f64], item_vec: &[f64]) -> Result<f64, ScorerError> {
        let u = self.project_text(prompt_vec)?;
        let v = self.project_image(item_vec)?;
        let s = self.temperature() * dot(&u.unit, &v.unit);
        if !s.is_finite() {
            return Err(ScorerError::NonFinite("score".into()));
        }
        Ok(s)
    }
}

/// `x W` for a row-major `x.len() x d` matrix.
fn project(w: &[f64], d: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for (xi, row) in x.iter().zip(w.chunks_exact(d)) {
        for (o, wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A projected vector together with its norm and unit direction.
#[derive(Debug, Clone)]
pub(crate) struct Projected {
    pub norm: f64,
    pub unit: Vec<f64>,
}

impl Projected {
    fn new(raw: Vec<f64>) -> Result<Self, ScorerError> {
        let norm = dot(&raw, &raw).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(ScorerError::NonFinite(
                "projected vector has zero or non-finite norm".into(),
            ));
        }
        let unit = raw.into_iter().map(|x| x / norm).collect();
        Ok(Self { norm, unit })
    }
}
