use super::{NnError, Result, Tensor};

/// Non-overlapping max pooling along time; the trailing remainder is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool1d {
    pub pool: usize,
}

impl MaxPool1d {
    pub fn out_len(&self, len: usize) -> usize {
        len / self.pool
    }

    /// Returns the pooled tensor and the flat input index of each maximum.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
        let (b, c, l) = x.dims3("maxpool1d")?;
        let lo = self.out_len(l);
        if lo == 0 {
            return Err(NnError::ShapeMismatch { op: "maxpool1d", expected: vec![self.pool], got: vec![l] });
        }
        let xs = x.data();
        let mut y = Vec::with_capacity(b * c * lo);
        let mut arg = Vec::with_capacity(b * c * lo);
        for row in 0..b * c {
            for t in 0..lo {
                let start = row * l + t * self.pool;
                let mut best = start;
                for i in start + 1..start + self.pool {
                    if xs[i] > xs[best] {
                        best = i;
                    }
                }
                y.push(xs[best]);
                arg.push(best);
            }
        }
        Ok((Tensor::new(vec![b, c, lo], y)?, arg))
    }

    pub fn backward(input_shape: &[usize], argmax: &[usize], g: &Tensor) -> Result<Tensor> {
        if g.len() != argmax.len() {
            return Err(NnError::ShapeMismatch { op: "maxpool1d backward", expected: vec![argmax.len()], got: g.shape().to_vec() });
        }
        let mut dx = Tensor::zeros(input_shape);
        let d = dx.data_mut();
        for (&i, v) in argmax.iter().zip(g.data()) {
            d[i] += v;
        }
        Ok(dx)
    }
}

/// Mean over the time axis: `[batch, ch, len] -> [batch, ch]`.
pub fn global_avg_pool(x: &Tensor) -> Result<Tensor> {
    let (b, c, l) = x.dims3("global_avg_pool")?;
    let y = x.data().chunks(l).map(|r| r.iter().sum::<f64>() / l as f64).collect();
    Tensor::new(vec![b, c], y)
}

pub fn global_avg_pool_backward(input_shape: &[usize], g: &Tensor) -> Result<Tensor> {
    let l = input_shape[2];
    if g.shape() != &input_shape[..2] {
        return Err(NnError::ShapeMismatch { op: "global_avg_pool backward", expected: input_shape[..2].to_vec(), got: g.shape().to_vec() });
    }
    let mut dx = Vec::with_capacity(g.len() * l);
    for v in g.data() {
        dx.extend(std::iter::repeat_n(v / l as f64, l));
    }
    Tensor::new(input_shape.to_vec(), dx)
}
