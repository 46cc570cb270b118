//! Gaussian-mixture data model in the (already diagonalized) feature space.
//!
//! Every class shares one diagonal covariance and the priors are uniform,
//! so a model is fully described by its class centroids and the per-dimension
//! variances. Classes and features are indexed from zero.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::KvFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmModel {
    centroids: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

/// One draw from the model: the full feature vector and its true class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl GmModel {
    pub fn new(centroids: Vec<Vec<f64>>, variances: Vec<f64>) -> Result<Self> {
        if centroids.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 classes, got {}",
                centroids.len()
            )));
        }
        let dim = variances.len();
        if dim == 0 {
            return Err(Error::InvalidModel("feature dimension must be at least 1".into()));
        }
        if let Some((n, v)) = variances
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidModel(format!("variance {n} is {v}, must be positive")));
        }
        for (l, c) in centroids.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::InvalidModel(format!(
                    "centroid {l} has length {}, expected {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidModel(format!("centroid {l} is not finite")));
            }
        }
        Ok(GmModel { centroids, variances })
    }

    /// Builds a model whose average per-dimension discriminant gain equals
    /// `gain_profile` exactly.
    ///
    /// Variances are fixed to 1. For two classes the centroids are placed at
    /// `-sqrt(g)/2` and `+sqrt(g)/2`, and `rng` is not touched. For more
    /// classes each dimension gets random centroid offsets that are rescaled
    /// so the mean pairwise squared separation is `g`.
    pub fn synthesize<R: Rng + ?Sized>(
        classes: usize,
        gain_profile: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        if let Some((index, &value)) = gain_profile
            .iter()
            .enumerate()
            .find(|(_, g)| !(g.is_finite() && **g >= 0.0))
        {
            return Err(Error::NegativeGain { index, value });
        }
        let dim = gain_profile.len();
        let mut centroids = vec![vec![0.0; dim]; classes];
        for (n, &g) in gain_profile.iter().enumerate() {
            if classes == 2 {
                let half = g.sqrt() / 2.0;
                centroids[0][n] = -half;
                centroids[1][n] = half;
                continue;
            }
            let offsets = loop {
                let u: Vec<f64> = (0..classes).map(|_| rng.sample(StandardNormal)).collect();
                if mean_pairwise_sq(&u) > 1e-6 {
                    break u;
                }
            };
            let scale = (g / mean_pairwise_sq(&offsets)).sqrt();
            for (l, u) in offsets.iter().enumerate() {
                centroids[l][n] = scale * u;
            }
        }
        GmModel::new(centroids, vec![1.0; dim])
    }

    pub fn classes(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    pub fn centroid(&self, class: usize) -> &[f64] {
        &self.centroids[class]
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Draws a label (uniform unless forced) and then each feature
    /// independently from `N(mu_label(n), C_nn)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, forced_label: Option<usize>) -> Result<Sample> {
        let label = match forced_label {
            Some(l) if l >= self.classes() => {
                return Err(Error::ClassOutOfRange {
                    index: l,
                    classes: self.classes(),
                })
            }
            Some(l) => l,
            None => rng.random_range(0..self.classes()),
        };
        let mu = &self.centroids[label];
        let features = mu
            .iter()
            .zip(&self.variances)
            .map(|(m, v)| {
                let z: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * z
            })
            .collect();
        Ok(Sample { features, label })
    }

    /// Serializes to the flat model file format:
    ///
    /// ```text
    /// L = 2
    /// N = 3
    /// centroids = <L*N values, row-major, comma separated>
    /// variances = <N values>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &mut dyn Iterator<Item = &f64>| {
            v.map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
        };
        let _ = writeln!(out, "# Gaussian-mixture model, shared diagonal covariance");
        let _ = writeln!(out, "L = {}", self.classes());
        let _ = writeln!(out, "N = {}", self.dim());
        let _ = writeln!(out, "centroids = {}", join(&mut self.centroids.iter().flatten()));
        let _ = writeln!(out, "variances = {}", join(&mut self.variances.iter()));
        out
    }

    pub fn from_text(origin: &str, text: &str) -> Result<Self> {
        let kv = KvFile::parse(origin, text)?;
        Self::from_kv(&kv)
    }

    pub(crate) fn from_kv(kv: &KvFile) -> Result<Self> {
        kv.reject_unknown(&["L", "N", "centroids", "variances"])?;
        let l_entry = kv.require("L")?;
        let n_entry = kv.require("N")?;
        let classes: usize = kv.parse_value(l_entry)?;
        let dim: usize = kv.parse_value(n_entry)?;
        let c_entry = kv.require("centroids")?;
        let flat = kv.parse_list(c_entry)?;
        if flat.len() != classes * dim {
            return Err(kv.error(
                c_entry,
                format!("expected {} centroid values (L*N), got {}", classes * dim, flat.len()),
            ));
        }
        let v_entry = kv.require("variances")?;
        let variances = kv.parse_list(v_entry)?;
        if variances.len() != dim {
            return Err(kv.error(
                v_entry,
                format!("expected {dim} variances, got {}", variances.len()),
            ));
        }
        let centroids = flat.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        GmModel::new(centroids, variances)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = KvFile::read(path)?;
        Self::from_kv(&kv)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// `a * r^n` for `n = 0..dim`.
pub fn geometric_profile(first: f64, ratio: f64, dim: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(dim);
    let mut cur = first;
    for _ in 0..dim {
        g.push(cur);
        cur *= ratio;
    }
    g
}

/// Gain profile used when none is configured: `1.25 * 0.95^n` over 40
/// dimensions. Total gain is about 21.8, enough for roughly 99% accuracy
/// when every feature is delivered.
pub fn default_profile() -> Vec<f64> {
    geometric_profile(DEFAULT_PROFILE_FIRST, DEFAULT_PROFILE_RATIO, DEFAULT_DIM)
}

pub const DEFAULT_PROFILE_FIRST: f64 = 1.25;
pub const DEFAULT_PROFILE_RATIO: f64 = 0.95;
pub const DEFAULT_DIM: usize = 40;

fn mean_pairwise_sq(u: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            sum += (u[i] - u[j]).powi(2);
            pairs += 1;
        }
    }
    sum / pairs as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_models() {
        assert!(GmModel::new(vec![vec![0.0]], vec![1.0]).is_err());
        assert!(GmModel::new(vec![vec![0.0], vec![1.0]], vec![0.0]).is_err());
        assert!(GmModel::new(vec![vec![0.0, 1.0], vec![1.0]], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn synth_binary_gain_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = GmModel::synthesize(2, &[4.0], &mut rng).unwrap();
        assert_eq!(m.centroid(0), &[-1.0]);
        assert_eq!(m.centroid(1), &[1.0]);
        assert_eq!(m.variances(), &[1.0]);
    }

    #[test]
    fn synth_rejects_negative_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = GmModel::synthesize(2, &[1.0, -0.5], &mut rng).unwrap_err();
        assert!(matches!(err, Error::NegativeGain { index: 1, .. }));
    }

    #[test]
    fn forced_label_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = GmModel::synthesize(2, &[1.0], &mut rng).unwrap();
        assert!(m.sample(&mut rng, Some(2)).is_err());
    }

    #[test]
    fn vanishing_variance_hits_centroid() {
        let m = GmModel::new(vec![vec![0.3, -2.0], vec![1.0, 1.0]], vec![1e-12, 1e-12]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = m.sample(&mut rng, Some(0)).unwrap();
        assert_eq!(s.label, 0);
        for (x, mu) in s.features.iter().zip(m.centroid(0)) {
            assert!((x - mu).abs() < 1e-4);
        }
    }

    #[test]
    fn model_text_round_trip() {
        let m = GmModel::new(vec![vec![0.1, -0.2], vec![3.0, 1.0 / 3.0]], vec![1.0, 0.7]).unwrap();
        let back = GmModel::from_text("m", &m.to_text()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn model_text_errors_point_at_keys() {
        let err = GmModel::from_text("m", "L = 2\nN = 2\ncentroids = 1,2,3\nvariances = 1,1\n")
            .unwrap_err();
        assert!(err.to_string().starts_with("m:3:"), "{err}");
        let err = GmModel::from_text("m", "L = 2\nN = 1\ncentroids = 1,2\nvariances = 1\nfoo = 1\n")
            .unwrap_err();
        assert!(err.to_string().contains("unknown key `foo`"), "{err}");
    }
}
