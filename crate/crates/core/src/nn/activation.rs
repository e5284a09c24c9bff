use super::{NnError, Result, Tensor};

pub fn relu_forward(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    y.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    y
}

/// Gradient through a ReLU given its output.
pub fn relu_backward(y: &Tensor, g: &Tensor) -> Result<Tensor> {
    if y.shape() != g.shape() {
        return Err(NnError::ShapeMismatch { op: "relu backward", expected: y.shape().to_vec(), got: g.shape().to_vec() });
    }
    let mut dx = g.clone();
    for (d, &o) in dx.data_mut().iter_mut().zip(y.data()) {
        if o <= 0.0 {
            *d = 0.0;
        }
    }
    Ok(dx)
}
