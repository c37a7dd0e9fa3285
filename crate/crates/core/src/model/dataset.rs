use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: usize,
}

/// A classification task with a train and a test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    train: Vec<Sample>,
    test: Vec<Sample>,
    n_classes: usize,
    dim: usize,
}

impl Dataset {
    pub fn new(train: Vec<Sample>, test: Vec<Sample>, n_classes: usize) -> Result<Self> {
        if train.is_empty() || test.is_empty() {
            return Err(Error::InvalidDataset("both splits must be nonempty".into()));
        }
        if n_classes < 2 {
            return Err(Error::InvalidDataset("need at least two classes".into()));
        }
        let dim = train[0].x.len();
        for s in train.iter().chain(&test) {
            if s.x.len() != dim {
                return Err(Error::InvalidDataset(format!(
                    "sample has {} features, expected {dim}",
                    s.x.len()
                )));
            }
            if s.y >= n_classes {
                return Err(Error::InvalidDataset(format!(
                    "label {} outside 0..{n_classes}",
                    s.y
                )));
            }
        }
        Ok(Dataset {
            train,
            test,
            n_classes,
            dim,
        })
    }

    pub fn train(&self) -> &[Sample] {
        &self.train
    }
    pub fn test(&self) -> &[Sample] {
        &self.test
    }
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Training samples of one class, in dataset order.
    pub fn train_class(&self, class: usize) -> impl Iterator<Item = &Sample> {
        self.train.iter().filter(move |s| s.y == class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &[f64], y: usize) -> Sample {
        Sample { x: x.to_vec(), y }
    }

    #[test]
    fn validation() {
        assert!(Dataset::new(vec![s(&[0.0], 0)], vec![s(&[1.0], 1)], 2).is_ok());
        assert!(Dataset::new(vec![], vec![s(&[1.0], 1)], 2).is_err());
        assert!(Dataset::new(vec![s(&[0.0], 0)], vec![s(&[1.0, 2.0], 1)], 2).is_err());
        assert!(Dataset::new(vec![s(&[0.0], 2)], vec![s(&[1.0], 1)], 2).is_err());
    }
}
