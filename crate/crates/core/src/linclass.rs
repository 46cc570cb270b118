//! Linear (ML/MAP) classification on partially received feature vectors.
//!
//! With uniform priors and a shared diagonal covariance the log-likelihood of
//! class `l` is `-z_l` up to a constant, where `z_l` is the half squared
//! Mahalanobis distance restricted to the received dimensions. Everything
//! here is expressed through those distances. Entropies are in nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statmodel::GmModel;

/// Features received so far. Unreceived coordinates read as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialFeatureVector {
    values: Vec<f64>,
    mask: Vec<bool>,
    order: Vec<usize>,
}

impl PartialFeatureVector {
    pub fn empty(dim: usize) -> Self {
        PartialFeatureVector {
            values: vec![0.0; dim],
            mask: vec![false; dim],
            order: Vec::new(),
        }
    }

    /// Keeps `full` only on `indices`.
    pub fn from_subset(full: &[f64], indices: &[usize]) -> Result<Self> {
        let mut pfv = Self::empty(full.len());
        let increment: Vec<f64> = indices
            .iter()
            .map(|&n| {
                full.get(n).copied().ok_or(Error::FeatureOutOfRange {
                    index: n,
                    dim: full.len(),
                })
            })
            .collect::<Result<_>>()?;
        pfv.place(indices, &increment)?;
        Ok(pfv)
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.order.len() == self.mask.len()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.mask.get(n).copied().unwrap_or(false)
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.contains(n).then(|| self.values[n])
    }

    /// Received indices in arrival order.
    pub fn received(&self) -> &[usize] {
        &self.order
    }

    /// Membership mask over all `dim` indices.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Zero-filled dense view.
    pub fn dense(&self) -> &[f64] {
        &self.values
    }

    /// Placement update: coordinate `indices[j]` receives `increment[j]`.
    ///
    /// Fails without modifying `self` if an index is out of range, already
    /// received, or repeated.
    pub fn place(&mut self, indices: &[usize], increment: &[f64]) -> Result<()> {
        assert_eq!(indices.len(), increment.len(), "increment length mismatch");
        let dim = self.dim();
        for (j, &n) in indices.iter().enumerate() {
            if n >= dim {
                return Err(Error::FeatureOutOfRange { index: n, dim });
            }
            if self.mask[n] || indices[..j].contains(&n) {
                return Err(Error::InvalidModel(format!("feature {n} delivered twice")));
            }
        }
        for (&n, &x) in indices.iter().zip(increment) {
            self.values[n] += x;
            self.mask[n] = true;
            self.order.push(n);
        }
        Ok(())
    }
}

/// Class posteriors for a partial vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorVector {
    pub probs: Vec<f64>,
}

fn check_dim(pfv: &PartialFeatureVector, model: &GmModel) -> Result<()> {
    if pfv.dim() != model.dim() {
        return Err(Error::FeatureOutOfRange {
            index: pfv.dim().saturating_sub(1),
            dim: model.dim(),
        });
    }
    Ok(())
}

fn check_class(model: &GmModel, class: usize) -> Result<()> {
    if class >= model.classes() {
        return Err(Error::ClassOutOfRange {
            index: class,
            classes: model.classes(),
        });
    }
    Ok(())
}

/// `z_l = 1/2 * sum_{n in W} (x(n) - mu_l(n))^2 / C_nn`; zero on an empty set.
pub fn half_mahalanobis(pfv: &PartialFeatureVector, model: &GmModel, class: usize) -> Result<f64> {
    check_dim(pfv, model)?;
    check_class(model, class)?;
    Ok(half_mahalanobis_unchecked(pfv, model, class))
}

fn half_mahalanobis_unchecked(pfv: &PartialFeatureVector, model: &GmModel, class: usize) -> f64 {
    let mu = model.centroid(class);
    let var = model.variances();
    0.5 * pfv
        .received()
        .iter()
        .map(|&n| (pfv.values[n] - mu[n]).powi(2) / var[n])
        .sum::<f64>()
}

/// All `z_l`, in class order.
pub fn distances(pfv: &PartialFeatureVector, model: &GmModel) -> Result<Vec<f64>> {
    check_dim(pfv, model)?;
    Ok((0..model.classes())
        .map(|l| half_mahalanobis_unchecked(pfv, model, l))
        .collect())
}

/// `argmin_l z_l`, ties to the lowest class index.
pub fn classify(pfv: &PartialFeatureVector, model: &GmModel) -> Result<usize> {
    Ok(argmin(&distances(pfv, model)?))
}

pub(crate) fn argmin(z: &[f64]) -> usize {
    let mut best = 0;
    for (l, &v) in z.iter().enumerate().skip(1) {
        if v < z[best] {
            best = l;
        }
    }
    best
}

pub fn posteriors(pfv: &PartialFeatureVector, model: &GmModel) -> Result<PosteriorVector> {
    Ok(softmin(&distances(pfv, model)?))
}

/// `p_l = exp(-z_l) / sum exp(-z)`, shifted by the minimum distance.
pub fn softmin(z: &[f64]) -> PosteriorVector {
    let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = z.iter().map(|&v| (zmin - v).exp()).collect();
    let total: f64 = w.iter().sum();
    PosteriorVector {
        probs: w.into_iter().map(|v| v / total).collect(),
    }
}

/// Shannon entropy of the class posteriors, in nats.
pub fn entropy(pfv: &PartialFeatureVector, model: &GmModel) -> Result<f64> {
    Ok(entropy_of(&distances(pfv, model)?))
}

pub(crate) fn entropy_of(z: &[f64]) -> f64 {
    softmin(z)
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// `z_a - z_b`.
pub fn differential_distance(
    pfv: &PartialFeatureVector,
    model: &GmModel,
    pair: (usize, usize),
) -> Result<f64> {
    let (a, b) = pair;
    if a == b {
        return Err(Error::SameClassPair(a));
    }
    check_dim(pfv, model)?;
    check_class(model, a)?;
    check_class(model, b)?;
    Ok(half_mahalanobis_unchecked(pfv, model, a) - half_mahalanobis_unchecked(pfv, model, b))
}

/// Entropy of a two-class posterior with differential distance `delta`:
/// `log(1 + e^-d) + d / (e^d + 1)`, evaluated at `|delta|` (the function is
/// even) so neither exponential can overflow.
pub fn binary_entropy(delta: f64) -> f64 {
    let a = delta.abs();
    let e = (-a).exp();
    e.ln_1p() + a * e / (1.0 + e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_unit() -> GmModel {
        GmModel::new(vec![vec![-1.0], vec![1.0]], vec![1.0]).unwrap()
    }

    #[test]
    fn empty_set_distances_are_zero() {
        let m = binary_unit();
        let pfv = PartialFeatureVector::empty(1);
        assert_eq!(half_mahalanobis(&pfv, &m, 0).unwrap(), 0.0);
        assert_eq!(half_mahalanobis(&pfv, &m, 1).unwrap(), 0.0);
        assert_eq!(classify(&pfv, &m).unwrap(), 0);
        assert_eq!(posteriors(&pfv, &m).unwrap().probs, vec![0.5, 0.5]);
        assert!((entropy(&pfv, &m).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_distance() {
        let m = GmModel::new(vec![vec![0.0, 0.0], vec![5.0, 5.0]], vec![1.0, 4.0]).unwrap();
        let pfv = PartialFeatureVector::from_subset(&[1.0, 1.0], &[0, 1]).unwrap();
        assert!((half_mahalanobis(&pfv, &m, 0).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn own_centroid_is_zero_distance() {
        let m = GmModel::new(vec![vec![0.5, -1.0, 2.0], vec![0.0; 3]], vec![1.0, 2.0, 0.5]).unwrap();
        let pfv = PartialFeatureVector::from_subset(m.centroid(0), &[0, 2]).unwrap();
        assert_eq!(half_mahalanobis(&pfv, &m, 0).unwrap(), 0.0);
    }

    #[test]
    fn classify_point_two_tenths() {
        let m = binary_unit();
        let pfv = PartialFeatureVector::from_subset(&[0.2], &[0]).unwrap();
        let z = distances(&pfv, &m).unwrap();
        assert!((z[0] - 0.72).abs() < 1e-14);
        assert!((z[1] - 0.32).abs() < 1e-14);
        assert_eq!(classify(&pfv, &m).unwrap(), 1);
        let d = differential_distance(&pfv, &m, (0, 1)).unwrap();
        assert!((d - 0.4).abs() < 1e-14);
        assert_eq!(differential_distance(&pfv, &m, (1, 0)).unwrap(), -d);
    }

    #[test]
    fn classify_centroid_member() {
        let m = GmModel::new(vec![vec![0.0, 0.0], vec![4.0, -4.0], vec![-4.0, 4.0]], vec![1.0; 2]).unwrap();
        let pfv = PartialFeatureVector::from_subset(m.centroid(1), &[0, 1]).unwrap();
        assert_eq!(classify(&pfv, &m).unwrap(), 1);
    }

    #[test]
    fn same_pair_is_an_error() {
        let m = binary_unit();
        let pfv = PartialFeatureVector::empty(1);
        assert!(matches!(
            differential_distance(&pfv, &m, (1, 1)),
            Err(Error::SameClassPair(1))
        ));
    }

    #[test]
    fn posterior_at_delta_two() {
        // z = (2, 0): p_0 = 1 / (1 + e^2)
        let p = softmin(&[2.0, 0.0]).probs;
        assert!((p[0] - 0.119_202_922_022_117_6).abs() < 1e-12);
        assert!((p[1] - 0.880_797_077_977_882_4).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_values() {
        assert!((binary_entropy(0.0) - 2f64.ln()).abs() < 1e-15);
        // log(1 + e^-5) + 5 / (e^5 + 1), evaluated with mpmath
        assert!((binary_entropy(5.0) - 0.040_179_603_110_542_35).abs() < 1e-12);
        for d in [0.5, 1.0, 3.0] {
            assert!((binary_entropy(d) - binary_entropy(-d)).abs() < 1e-14);
        }
        assert!(binary_entropy(800.0) >= 0.0);
    }

    #[test]
    fn rejects_duplicate_placement() {
        let mut pfv = PartialFeatureVector::empty(3);
        pfv.place(&[1], &[0.5]).unwrap();
        assert!(pfv.place(&[1], &[0.5]).is_err());
        assert!(pfv.place(&[0, 0], &[0.5, 0.5]).is_err());
        assert!(pfv.place(&[3], &[0.5]).is_err());
        assert_eq!(pfv.received(), &[1]);
    }
}
