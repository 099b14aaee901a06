use rand::seq::SliceRandom;

use super::rng;

/// Binary-labelled samples split 80/20 into train and held-out sets.
/// Labels are 0 or 1; features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    dim: usize,
    train_x: Vec<f64>,
    train_y: Vec<u8>,
    test_x: Vec<f64>,
    test_y: Vec<u8>,
}

impl LabeledData {
    /// Stratified split: within each class, a seeded shuffle sends the
    /// first 80% to training.
    pub fn split(dim: usize, rows: Vec<Vec<f64>>, labels: Vec<u8>, seed: u64) -> Self {
        assert_eq!(rows.len(), labels.len());
        let mut out = Self { dim, train_x: Vec::new(), train_y: Vec::new(), test_x: Vec::new(), test_y: Vec::new() };
        let mut r = rng(seed, 17);
        for class in [0u8, 1] {
            let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == class).collect();
            idx.shuffle(&mut r);
            let n_train = (idx.len() * 4).div_ceil(5);
            for (j, &i) in idx.iter().enumerate() {
                assert_eq!(rows[i].len(), dim);
                let (x, y) =
                    if j < n_train { (&mut out.train_x, &mut out.train_y) } else { (&mut out.test_x, &mut out.test_y) };
                x.extend_from_slice(&rows[i]);
                y.push(class);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn train_len(&self) -> usize {
        self.train_y.len()
    }

    pub fn test_len(&self) -> usize {
        self.test_y.len()
    }

    pub fn train(&self, i: usize) -> (&[f64], u8) {
        (&self.train_x[i * self.dim..(i + 1) * self.dim], self.train_y[i])
    }

    pub fn test(&self, i: usize) -> (&[f64], u8) {
        (&self.test_x[i * self.dim..(i + 1) * self.dim], self.test_y[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_complete() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..50).map(|i| (i % 2) as u8).collect();
        let d = LabeledData::split(1, rows, labels, 3);
        assert_eq!((d.train_len(), d.test_len()), (40, 10));
        let ones = (0..d.test_len()).filter(|&i| d.test(i).1 == 1).count();
        assert_eq!(ones, 5);
        let mut all: Vec<f64> = (0..40).map(|i| d.train(i).0[0]).chain((0..10).map(|i| d.test(i).0[0])).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..50).map(|i| i as f64).collect::<Vec<_>>());
    }
}
