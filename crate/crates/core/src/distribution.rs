//! Categorical distributions over a fixed, ordered category set.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of the total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Probability mass over an ordered set of category labels.
///
/// Both the results distribution of a ranking and every target distribution
/// are values of this type. Two distributions can only be compared when their
/// category lists are identical, order included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalDistribution {
    categories: Vec<String>,
    mass: Vec<f64>,
}

impl CategoricalDistribution {
    pub fn new(categories: Vec<String>, mass: Vec<f64>) -> Result<Self> {
        check_categories(&categories)?;
        if mass.len() != categories.len() {
            return Err(Error::InvalidMass(format!(
                "{} probabilities for {} categories",
                mass.len(),
                categories.len()
            )));
        }
        for &p in &mass {
            if !p.is_finite() {
                return Err(Error::NonFinite(p));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfUnitRange(p));
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMass(format!("total mass {total} is not 1")));
        }
        Ok(Self { categories, mass })
    }

    pub fn uniform(categories: Vec<String>) -> Result<Self> {
        check_categories(&categories)?;
        let p = 1.0 / categories.len() as f64;
        let mass = vec![p; categories.len()];
        Ok(Self { categories, mass })
    }

    /// Relative frequencies without smoothing. Fails when every count is zero.
    pub fn from_counts(categories: Vec<String>, counts: &[u64]) -> Result<Self> {
        check_categories(&categories)?;
        check_len(&categories, counts)?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidMass("all counts are zero".into()));
        }
        let mass = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { categories, mass })
    }

    /// Add-one smoothed estimate from counts parallel to `categories`.
    pub fn smoothed(categories: Vec<String>, counts: &[u64]) -> Result<Self> {
        check_categories(&categories)?;
        check_len(&categories, counts)?;
        let denom = counts.iter().sum::<u64>() as f64 + categories.len() as f64;
        let mass = counts.iter().map(|&c| (c as f64 + 1.0) / denom).collect();
        Ok(Self { categories, mass })
    }

    /// Builds a distribution from non-negative weights, dividing by their sum.
    pub fn from_weights(categories: Vec<String>, weights: &[f64]) -> Result<Self> {
        check_categories(&categories)?;
        if weights.len() != categories.len() {
            return Err(Error::InvalidMass(format!(
                "{} weights for {} categories",
                weights.len(),
                categories.len()
            )));
        }
        let mut total = 0.0;
        for &w in weights {
            if !w.is_finite() {
                return Err(Error::NonFinite(w));
            }
            if w < 0.0 {
                return Err(Error::InvalidMass(format!("negative weight {w}")));
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidMass("weights sum to zero".into()));
        }
        let mass = weights.iter().map(|w| w / total).collect();
        Ok(Self { categories, mass })
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn probability(&self, category: &str) -> Option<f64> {
        self.categories
            .iter()
            .position(|c| c == category)
            .map(|i| self.mass[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.categories
            .iter()
            .map(String::as_str)
            .zip(self.mass.iter().copied())
    }
}

/// A category set must be non-empty and free of duplicates.
pub fn check_categories(categories: &[String]) -> Result<()> {
    if categories.is_empty() {
        return Err(Error::EmptyCategorySet);
    }
    let mut seen = BTreeSet::new();
    for c in categories {
        if !seen.insert(c.as_str()) {
            return Err(Error::DuplicateCategory(c.clone()));
        }
    }
    Ok(())
}

fn check_len(categories: &[String], counts: &[u64]) -> Result<()> {
    if counts.len() != categories.len() {
        return Err(Error::InvalidMass(format!(
            "{} counts for {} categories",
            counts.len(),
            categories.len()
        )));
    }
    Ok(())
}

/// Add-one (Laplace) smoothing: `p_i = (count_i + 1) / (total + |C|)`.
///
/// Categories absent from `counts` count as zero. A key outside the category
/// set is an error.
pub fn laplace_smooth<K, I>(counts: I, categories: &[String]) -> Result<CategoricalDistribution>
where
    K: AsRef<str>,
    I: IntoIterator<Item = (K, u64)>,
{
    check_categories(categories)?;
    let mut dense = vec![0u64; categories.len()];
    for (key, count) in counts {
        let key = key.as_ref();
        let i = categories
            .iter()
            .position(|c| c == key)
            .ok_or_else(|| Error::UnknownCategory(key.into()))?;
        dense[i] += count;
    }
    CategoricalDistribution::smoothed(categories.to_vec(), &dense)
}

/// `KL(p || q) = sum_i p_i ln(p_i / q_i)` in nats, with `0 ln(0/q) = 0`.
pub fn kl_divergence(p: &CategoricalDistribution, q: &CategoricalDistribution) -> Result<f64> {
    if p.categories != q.categories {
        return Err(Error::CategoryMismatch);
    }
    let mut kl = 0.0;
    for ((cat, &pi), &qi) in p.categories.iter().zip(&p.mass).zip(&q.mass) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::InfiniteDivergence(cat.clone()));
        }
        kl += pi * libm::log(pi / qi);
    }
    // Rounding can leave a tiny negative sum when p and q nearly coincide.
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use approx::assert_abs_diff_eq;

    fn cats(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn smoothing_hand_values() {
        let c = cats(4);
        let d = laplace_smooth([("0", 3), ("1", 1)], &c).unwrap();
        assert_eq!(d.mass(), &[0.5, 0.25, 0.125, 0.125]);

        let d = laplace_smooth::<&str, _>([], &cats(2)).unwrap();
        assert_eq!(d.mass(), &[0.5, 0.5]);

        let d = laplace_smooth([("0", 7), ("1", 1)], &cats(2)).unwrap();
        assert_abs_diff_eq!(d.mass()[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(d.mass()[1], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn smoothing_rejects_bad_sets() {
        assert_eq!(
            laplace_smooth::<&str, _>([], &[]).unwrap_err(),
            Error::EmptyCategorySet
        );
        assert_eq!(
            laplace_smooth([("z", 1)], &cats(2)).unwrap_err(),
            Error::UnknownCategory("z".into())
        );
        let dup = alloc::vec!["a".to_string(), "a".to_string()];
        assert_eq!(
            CategoricalDistribution::uniform(dup).unwrap_err(),
            Error::DuplicateCategory("a".into())
        );
    }

    #[test]
    fn kl_hand_values() {
        let u = CategoricalDistribution::uniform(cats(4)).unwrap();
        assert_eq!(kl_divergence(&u, &u).unwrap(), 0.0);

        let p = CategoricalDistribution::new(cats(2), alloc::vec![0.5, 0.5]).unwrap();
        let q = CategoricalDistribution::new(cats(2), alloc::vec![0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), 0.143841, epsilon = 1e-6);

        let p = CategoricalDistribution::new(cats(2), alloc::vec![1.0, 0.0]).unwrap();
        let q = CategoricalDistribution::uniform(cats(2)).unwrap();
        assert_abs_diff_eq!(
            kl_divergence(&p, &q).unwrap(),
            core::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kl_errors() {
        let p = CategoricalDistribution::uniform(cats(2)).unwrap();
        let q = CategoricalDistribution::uniform(cats(3)).unwrap();
        assert_eq!(kl_divergence(&p, &q).unwrap_err(), Error::CategoryMismatch);

        let q = CategoricalDistribution::new(cats(2), alloc::vec![1.0, 0.0]).unwrap();
        assert_eq!(
            kl_divergence(&p, &q).unwrap_err(),
            Error::InfiniteDivergence("1".into())
        );
    }

    #[test]
    fn new_validates_mass() {
        assert!(CategoricalDistribution::new(cats(2), alloc::vec![0.5, 0.6]).is_err());
        assert!(CategoricalDistribution::new(cats(2), alloc::vec![1.5, -0.5]).is_err());
        assert!(CategoricalDistribution::new(cats(2), alloc::vec![1.0]).is_err());
        assert!(CategoricalDistribution::from_counts(cats(2), &[0, 0]).is_err());
    }
}
