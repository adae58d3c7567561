use super::{ParamSet, Tensor};
use crate::error::{Error, Result};

/// Affine map `W x + b` with `W: [out_dim, in_dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weights: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseParams {
    pub fn new(weights: Tensor, bias: Tensor) -> Result<Self> {
        if weights.rank() != 2 || bias.shape() != [weights.dim(0)] {
            return Err(Error::invalid(format!(
                "dense weights {:?} and bias {:?} are inconsistent",
                weights.shape(),
                bias.shape()
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            weights: Tensor::zeros(&[out_dim, in_dim]),
            bias: Tensor::zeros(&[out_dim]),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.weights.dim(0)
    }

    pub fn in_dim(&self) -> usize {
        self.weights.dim(1)
    }

    pub fn zero_grad(&self) -> DenseGrad {
        DenseGrad {
            weights: Tensor::zeros(self.weights.shape()),
            bias: Tensor::zeros(self.bias.shape()),
        }
    }

    pub(crate) fn forward_slice(&self, x: &[f64], out: &mut [f64]) {
        let n_in = self.in_dim();
        let w = self.weights.data();
        for (o, (row, b)) in out
            .iter_mut()
            .zip(w.chunks_exact(n_in).zip(self.bias.data()))
        {
            *o = b + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Accumulates parameter gradients and input gradients.
    pub(crate) fn backward_slice(
        &self,
        x: &[f64],
        upstream: &[f64],
        grad_x: &mut [f64],
        grad: &mut DenseGrad,
    ) {
        let n_in = self.in_dim();
        let w = self.weights.data();
        let gw = grad.weights.data_mut();
        for (r, &g) in upstream.iter().enumerate() {
            grad.bias.data_mut()[r] += g;
            for j in 0..n_in {
                gw[r * n_in + j] += g * x[j];
                grad_x[j] += g * w[r * n_in + j];
            }
        }
    }
}

impl DenseGrad {
    pub fn add_assign(&mut self, other: &DenseGrad) {
        self.weights.add_scaled(&other.weights, 1.0);
        self.bias.add_scaled(&other.bias, 1.0);
    }
}

fn check_input(input: &Tensor, params: &DenseParams) -> Result<()> {
    if input.shape() != [params.in_dim()] {
        return Err(Error::invalid(format!(
            "dense input shape {:?}, expected [{}]",
            input.shape(),
            params.in_dim()
        )));
    }
    Ok(())
}

pub fn dense(input: &Tensor, params: &DenseParams) -> Result<Tensor> {
    check_input(input, params)?;
    let mut out = Tensor::zeros(&[params.out_dim()]);
    params.forward_slice(input.data(), out.data_mut());
    Ok(out)
}

pub fn dense_backward(
    input: &Tensor,
    params: &DenseParams,
    upstream: &Tensor,
) -> Result<(Tensor, DenseGrad)> {
    check_input(input, params)?;
    if upstream.shape() != [params.out_dim()] {
        return Err(Error::invalid(format!(
            "dense upstream shape {:?}, expected [{}]",
            upstream.shape(),
            params.out_dim()
        )));
    }
    let mut gx = Tensor::zeros(input.shape());
    let mut grad = params.zero_grad();
    params.backward_slice(input.data(), upstream.data(), gx.data_mut(), &mut grad);
    Ok((gx, grad))
}

impl ParamSet for DenseParams {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.weights, &self.bias]
    }
    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weights, &mut self.bias]
    }
    fn names(&self) -> Vec<String> {
        vec!["weight".into(), "bias".into()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_sum() {
        let eye = DenseParams::new(
            Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Tensor::zeros(&[2]),
        )
        .unwrap();
        let x = Tensor::from_vec(&[2], vec![2.0, 3.0]).unwrap();
        assert_eq!(dense(&x, &eye).unwrap(), x);

        let sum = DenseParams::new(
            Tensor::from_vec(&[1, 2], vec![1.0, 1.0]).unwrap(),
            Tensor::from_vec(&[1], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(dense(&x, &sum).unwrap().data(), &[6.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let p = DenseParams::zeros(1, 3);
        assert!(dense(&Tensor::zeros(&[2]), &p).is_err());
        assert!(dense_backward(&Tensor::zeros(&[3]), &p, &Tensor::zeros(&[2])).is_err());
    }
}
