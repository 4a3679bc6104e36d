use super::{check_dims, BaselineError};
use crate::ingest::Label;

/// Brute-force nearest-neighbour index.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    points: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnVote {
    pub label: Label,
    /// Fraction of the k neighbours labeled affected.
    pub score: f64,
}

impl KnnIndex {
    pub fn new<F: AsRef<[f64]>>(data: &[(F, Label)]) -> Result<KnnIndex, BaselineError> {
        if data.is_empty() {
            return Err(BaselineError::EmptyIndex);
        }
        check_dims(data)?;
        Ok(KnnIndex {
            points: data.iter().map(|(f, _)| f.as_ref().to_vec()).collect(),
            labels: data.iter().map(|(_, l)| *l).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of the k nearest points by Euclidean distance, distance ties
    /// broken by lower index.
    pub fn neighbours(&self, query: &[f64], k: usize) -> Result<Vec<usize>, BaselineError> {
        if k == 0 || k % 2 == 0 {
            return Err(BaselineError::InvalidK(k));
        }
        if k > self.points.len() {
            return Err(BaselineError::KTooLarge {
                k,
                n: self.points.len(),
            });
        }
        if query.len() != self.points[0].len() {
            return Err(BaselineError::Dimension {
                expected: self.points[0].len(),
                found: query.len(),
            });
        }
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        // partial selection keeps this O(n) on average
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut nearest: Vec<(f64, usize)> = dist[..k].to_vec();
        nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(nearest.into_iter().map(|(_, i)| i).collect())
    }

    pub fn predict(&self, query: &[f64], k: usize) -> Result<KnnVote, BaselineError> {
        let nn = self.neighbours(query, k)?;
        let affected = nn.iter().filter(|&&i| self.labels[i].is_affected()).count();
        let label = if 2 * affected > k { Label::Affected } else { Label::Unaffected };
        Ok(KnnVote {
            label,
            score: affected as f64 / k as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use Label::{Affected as A, Unaffected as U};

    #[test]
    fn exact_match_with_k1() {
        let data = vec![(vec![0.0, 0.0], A), (vec![1.0, 1.0], U), (vec![2.0, 0.0], A)];
        let index = KnnIndex::new(&data).unwrap();
        for (p, l) in &data {
            assert_eq!(index.predict(p, 1).unwrap().label, *l);
        }
    }

    #[test]
    fn k_equal_to_size_is_global_majority() {
        let data = vec![(vec![0.0], A), (vec![10.0], U), (vec![20.0], U), (vec![30.0], A), (vec![40.0], U)];
        let index = KnnIndex::new(&data).unwrap();
        let v = index.predict(&[0.0], 5).unwrap();
        assert_eq!(v.label, U);
        assert_eq!(v.score, 0.4);
    }

    #[test]
    fn errors() {
        let empty: Vec<(Vec<f64>, Label)> = vec![];
        assert!(matches!(KnnIndex::new(&empty), Err(BaselineError::EmptyIndex)));
        let index = KnnIndex::new(&[(vec![0.0], A)]).unwrap();
        assert!(matches!(index.predict(&[0.0], 3), Err(BaselineError::KTooLarge { k: 3, n: 1 })));
        assert!(matches!(index.predict(&[0.0], 2), Err(BaselineError::InvalidK(2))));
        assert!(matches!(index.predict(&[0.0, 1.0], 1), Err(BaselineError::Dimension { .. })));
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let data = vec![(vec![1.0], U), (vec![-1.0], A), (vec![1.0], A)];
        let index = KnnIndex::new(&data).unwrap();
        assert_eq!(index.neighbours(&[0.0], 1).unwrap(), vec![0]);
        assert_eq!(index.neighbours(&[0.0], 3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn matches_full_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<(Vec<f64>, Label)> = (0..60)
            .map(|_| {
                let p: Vec<f64> = (0..3).map(|_| (rng.random_range(0..4) as f64) / 2.0).collect();
                (p, if rng.random_bool(0.5) { A } else { U })
            })
            .collect();
        let index = KnnIndex::new(&data).unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
            let mut all: Vec<(f64, usize)> = data
                .iter()
                .enumerate()
                .map(|(i, (p, _))| (p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum(), i))
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let expected: Vec<usize> = all[..7].iter().map(|x| x.1).collect();
            assert_eq!(index.neighbours(&q, 7).unwrap(), expected);
        }
    }
}
