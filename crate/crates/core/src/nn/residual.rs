use super::layer::{Cache, Layer};
use super::{relu_backward, relu_forward, Ctx, NnError, Result, Tensor};

/// `relu(body(x) + shortcut(x))`; an empty shortcut is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub body: Vec<Layer>,
    pub shortcut: Vec<Layer>,
}

#[derive(Debug, Clone)]
pub struct ResidualCache {
    body: Vec<Cache>,
    shortcut: Vec<Cache>,
    out: Tensor,
}

pub(crate) fn run(layers: &[Layer], x: &Tensor, ctx: &mut Ctx) -> Result<(Tensor, Vec<Cache>)> {
    let mut caches = Vec::with_capacity(layers.len());
    let mut h = x.clone();
    for l in layers {
        let (y, c) = l.forward(&h, ctx)?;
        caches.push(c);
        h = y;
    }
    Ok((h, caches))
}

pub(crate) fn run_backward(layers: &mut [Layer], caches: Vec<Cache>, g: &Tensor) -> Result<Tensor> {
    let mut g = g.clone();
    for (l, c) in layers.iter_mut().zip(caches).rev() {
        g = l.backward(c, &g)?;
    }
    Ok(g)
}

impl Residual {
    pub fn forward(&self, x: &Tensor, ctx: &mut Ctx) -> Result<(Tensor, ResidualCache)> {
        let (b, body) = run(&self.body, x, ctx)?;
        let (s, shortcut) = run(&self.shortcut, x, ctx)?;
        if b.shape() != s.shape() {
            return Err(NnError::ShapeMismatch { op: "residual add", expected: b.shape().to_vec(), got: s.shape().to_vec() });
        }
        let mut sum = b;
        sum.data_mut().iter_mut().zip(s.data()).for_each(|(a, v)| *a += v);
        let out = relu_forward(&sum);
        Ok((out.clone(), ResidualCache { body, shortcut, out }))
    }

    pub fn backward(&mut self, cache: ResidualCache, g: &Tensor) -> Result<Tensor> {
        let g = relu_backward(&cache.out, g)?;
        let mut dx = run_backward(&mut self.body, cache.body, &g)?;
        let ds = run_backward(&mut self.shortcut, cache.shortcut, &g)?;
        dx.data_mut().iter_mut().zip(ds.data()).for_each(|(a, v)| *a += v);
        Ok(dx)
    }

    pub fn commit(&mut self, cache: &ResidualCache) {
        for (l, c) in self.body.iter_mut().zip(&cache.body) {
            l.commit(c);
        }
        for (l, c) in self.shortcut.iter_mut().zip(&cache.shortcut) {
            l.commit(c);
        }
    }
}
