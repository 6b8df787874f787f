use super::maps::LabelMap;
use crate::error::{Axis, Error, Result};

/// Median-frequency class weights `tau_c = median_f / f(c)`.
///
/// `f(c)` is the pixel count of class `c` divided by the total pixel count of
/// the images in which `c` occurs. Classes that never occur have no frequency,
/// weight 0, and are left out of the median.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub frequencies: Vec<Option<f64>>,
    pub median: f64,
    pub weights: Vec<f64>,
}

impl ClassWeights {
    pub fn from_frequencies(frequencies: Vec<Option<f64>>) -> Self {
        let mut present: Vec<f64> = frequencies.iter().flatten().copied().collect();
        present.sort_by(f64::total_cmp);
        let median = match present.len() {
            0 => 0.0,
            n if n % 2 == 1 => present[n / 2],
            n => (present[n / 2 - 1] + present[n / 2]) / 2.0,
        };
        let weights = frequencies
            .iter()
            .map(|f| match f {
                Some(f) if *f > 0.0 => median / f,
                _ => 0.0,
            })
            .collect();
        ClassWeights {
            frequencies,
            median,
            weights,
        }
    }

    /// Weight 1 for every class.
    pub fn uniform(n_classes: usize) -> Self {
        ClassWeights {
            frequencies: vec![None; n_classes],
            median: 1.0,
            weights: vec![1.0; n_classes],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, class: usize) -> f64 {
        self.weights[class]
    }
}

/// Median-frequency weights over a dataset of label maps.
pub fn class_balance_weights(dataset: &[LabelMap]) -> Result<ClassWeights> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::Degenerate("class balancing needs at least one label map".into()))?;
    let n = first.n_classes();
    let mut counts = vec![0u64; n];
    let mut exposure = vec![0u64; n];
    for map in dataset {
        Error::check(Axis::Classes, n, map.n_classes())?;
        let mut local = vec![0u64; n];
        for &id in map.ids() {
            local[id as usize] += 1;
        }
        for c in 0..n {
            if local[c] > 0 {
                counts[c] += local[c];
                exposure[c] += map.len() as u64;
            }
        }
    }
    let freqs = (0..n)
        .map(|c| (exposure[c] > 0).then(|| counts[c] as f64 / exposure[c] as f64))
        .collect();
    Ok(ClassWeights::from_frequencies(freqs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn odd_median_example() {
        let w = ClassWeights::from_frequencies(vec![Some(0.2), Some(0.5), Some(0.8)]);
        assert_eq!(w.median, 0.5);
        assert_eq!(w.weights, vec![2.5, 1.0, 0.625]);
    }

    #[test]
    fn even_median_and_absent_class() {
        let w =
            ClassWeights::from_frequencies(vec![Some(0.1), None, Some(0.3), Some(0.5), Some(0.7)]);
        assert!((w.median - 0.4).abs() < 1e-15);
        assert_eq!(w.weights[1], 0.0);
    }

    #[test]
    fn single_class_gets_unit_weight() {
        let maps = vec![LabelMap::filled(4, 4, 1, 0).unwrap(); 3];
        let w = class_balance_weights(&maps).unwrap();
        assert_eq!(w.weights, vec![1.0]);
    }

    #[test]
    fn empty_dataset_and_mismatched_classes() {
        assert!(class_balance_weights(&[]).is_err());
        let maps = [
            LabelMap::filled(1, 1, 2, 0).unwrap(),
            LabelMap::filled(1, 1, 3, 0).unwrap(),
        ];
        assert!(class_balance_weights(&maps).is_err());
    }

    #[test]
    fn matches_independent_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let maps: Vec<LabelMap> = (0..12)
            .map(|_| {
                let (w, h) = (rng.random_range(2..9), rng.random_range(2..9));
                // Restrict some images to a subset of classes so exposure differs per class.
                let top = rng.random_range(1..=5u8);
                let ids = (0..w * h).map(|_| rng.random_range(0..top)).collect();
                LabelMap::new(w, h, 6, ids).unwrap()
            })
            .collect();
        let w = class_balance_weights(&maps).unwrap();

        // Recount per class by scanning images independently.
        let mut freqs = Vec::new();
        for c in 0..6u8 {
            let mut pix = 0usize;
            let mut total = 0usize;
            for m in &maps {
                let k = m.ids().iter().filter(|&&id| id == c).count();
                if k > 0 {
                    pix += k;
                    total += m.ids().len();
                }
            }
            freqs.push(if total > 0 {
                Some(pix as f64 / total as f64)
            } else {
                None
            });
        }
        let mut sorted: Vec<f64> = freqs.iter().flatten().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = if sorted.len() % 2 == 1 {
            sorted[sorted.len() / 2]
        } else {
            0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
        };
        assert_eq!(w.frequencies, freqs);
        assert_eq!(w.weights[5], 0.0);
        for c in 0..6 {
            if let Some(f) = freqs[c] {
                assert!((w.weights[c] - med / f).abs() < 1e-12);
            }
        }
    }
}
