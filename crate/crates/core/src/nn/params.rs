use super::Tensor;
use crate::error::{Error, Result};

/// An ordered, named collection of trainable tensors.
///
/// The order returned by `tensors` and `tensors_mut` must agree; gradient
/// sets and optimizer moments are aligned to it by position.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&Tensor>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;
    fn names(&self) -> Vec<String>;

    fn zero_grads(&self) -> GradientSet {
        GradientSet {
            tensors: self
                .tensors()
                .into_iter()
                .map(|t| Tensor::zeros(t.shape()))
                .collect(),
        }
    }

    fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// One gradient tensor per parameter tensor, in `ParamSet` order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub tensors: Vec<Tensor>,
}

impl GradientSet {
    pub fn check_mirrors<P: ParamSet + ?Sized>(&self, params: &P) -> Result<()> {
        let ps = params.tensors();
        if ps.len() != self.tensors.len() {
            return Err(Error::invalid(format!(
                "gradient set has {} tensors, parameters have {}",
                self.tensors.len(),
                ps.len()
            )));
        }
        for (g, p) in self.tensors.iter().zip(ps) {
            g.ensure_same_shape(p, "gradient")?;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_scaled(b, 1.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }
}

impl ParamSet for Tensor {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![self]
    }
    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![self]
    }
    fn names(&self) -> Vec<String> {
        vec!["tensor".into()]
    }
}

impl ParamSet for Vec<Tensor> {
    fn tensors(&self) -> Vec<&Tensor> {
        self.iter().collect()
    }
    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.iter_mut().collect()
    }
    fn names(&self) -> Vec<String> {
        (0..self.len()).map(|i| format!("tensor{i}")).collect()
    }
}
