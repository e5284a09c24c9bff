use rand::Rng as _;

use super::gemm::gemm;
use super::{NnError, Param, Result, Tensor};
use crate::rng::Rng;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Single LSTM layer over `[batch, len, in]` with gate order input, forget,
/// candidate, output. Emits the full hidden sequence or only `h_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// `[in, 4u]`
    pub w_x: Param,
    /// `[u, 4u]`
    pub w_h: Param,
    /// `[4u]`
    pub bias: Param,
    pub return_sequences: bool,
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Tensor,
    /// Activated gates per step, `[len][batch, 4u]`.
    gates: Vec<Vec<f64>>,
    /// Cell states `c_0..c_T`.
    cells: Vec<Vec<f64>>,
    /// Hidden states `h_0..h_T`.
    hidden: Vec<Vec<f64>>,
}

impl Lstm {
    /// Uniform in `±1/sqrt(u)`, forget-gate bias 1.
    pub fn new(inp: usize, units: usize, return_sequences: bool, rng: &mut Rng) -> Self {
        let bound = 1.0 / (units as f64).sqrt();
        let mut draw = |n: usize| (0..n).map(|_| rng.random_range(-bound..bound)).collect::<Vec<_>>();
        let w_x = Param::new(&[inp, 4 * units], draw(inp * 4 * units));
        let w_h = Param::new(&[units, 4 * units], draw(units * 4 * units));
        let mut b = vec![0.0; 4 * units];
        b[units..2 * units].iter_mut().for_each(|v| *v = 1.0);
        Self { w_x, w_h, bias: Param::new(&[4 * units], b), return_sequences }
    }

    pub fn units(&self) -> usize {
        self.w_h.shape[0]
    }

    pub fn in_features(&self) -> usize {
        self.w_x.shape[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, LstmCache)> {
        let (b, len, inp) = x.dims3("lstm")?;
        let u = self.units();
        if inp != self.in_features() {
            return Err(NnError::ShapeMismatch { op: "lstm", expected: vec![b, len, self.in_features()], got: x.shape().to_vec() });
        }
        let g4 = 4 * u;
        let mut xt = vec![0.0; b * inp];
        let mut gates = Vec::with_capacity(len);
        let mut cells = vec![vec![0.0; b * u]];
        let mut hidden = vec![vec![0.0; b * u]];
        for t in 0..len {
            for n in 0..b {
                let src = &x.data()[(n * len + t) * inp..(n * len + t + 1) * inp];
                xt[n * inp..(n + 1) * inp].copy_from_slice(src);
            }
            let mut z = vec![0.0; b * g4];
            for row in z.chunks_mut(g4) {
                row.copy_from_slice(&self.bias.value);
            }
            gemm(b, inp, g4, &xt, false, &self.w_x.value, false, &mut z, 1.0);
            gemm(b, u, g4, &hidden[t], false, &self.w_h.value, false, &mut z, 1.0);
            let mut c = vec![0.0; b * u];
            let mut h = vec![0.0; b * u];
            for n in 0..b {
                let row = &mut z[n * g4..(n + 1) * g4];
                for j in 0..u {
                    let i = sigmoid(row[j]);
                    let f = sigmoid(row[u + j]);
                    let g = row[2 * u + j].tanh();
                    let o = sigmoid(row[3 * u + j]);
                    row[j] = i;
                    row[u + j] = f;
                    row[2 * u + j] = g;
                    row[3 * u + j] = o;
                    let cv = f * cells[t][n * u + j] + i * g;
                    c[n * u + j] = cv;
                    h[n * u + j] = o * cv.tanh();
                }
            }
            gates.push(z);
            cells.push(c);
            hidden.push(h);
        }
        let out = if self.return_sequences {
            let mut y = vec![0.0; b * len * u];
            for t in 0..len {
                for n in 0..b {
                    y[(n * len + t) * u..(n * len + t + 1) * u].copy_from_slice(&hidden[t + 1][n * u..(n + 1) * u]);
                }
            }
            Tensor::new(vec![b, len, u], y)?
        } else {
            Tensor::new(vec![b, u], hidden[len].clone())?
        };
        Ok((out, LstmCache { x: x.clone(), gates, cells, hidden }))
    }

    /// Backpropagation through time.
    pub fn backward(&mut self, cache: &LstmCache, grad: &Tensor) -> Result<Tensor> {
        let (b, len, inp) = cache.x.dims3("lstm backward")?;
        let u = self.units();
        let g4 = 4 * u;
        let expected: Vec<usize> = if self.return_sequences { vec![b, len, u] } else { vec![b, u] };
        if grad.shape() != expected.as_slice() {
            return Err(NnError::ShapeMismatch { op: "lstm backward", expected, got: grad.shape().to_vec() });
        }
        let mut dh_next = vec![0.0; b * u];
        let mut dc_next = vec![0.0; b * u];
        let mut dz = vec![0.0; b * g4];
        let mut xt = vec![0.0; b * inp];
        let mut dxt = vec![0.0; b * inp];
        let mut dx = vec![0.0; b * len * inp];
        for t in (0..len).rev() {
            for n in 0..b {
                for j in 0..u {
                    let k = n * u + j;
                    let mut dh = dh_next[k];
                    if self.return_sequences {
                        dh += grad.data()[(n * len + t) * u + j];
                    } else if t == len - 1 {
                        dh += grad.data()[k];
                    }
                    let gr = &cache.gates[t][n * g4..(n + 1) * g4];
                    let (i, f, g, o) = (gr[j], gr[u + j], gr[2 * u + j], gr[3 * u + j]);
                    let tc = cache.cells[t + 1][k].tanh();
                    let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
                    let dzr = &mut dz[n * g4..(n + 1) * g4];
                    dzr[j] = dc * g * i * (1.0 - i);
                    dzr[u + j] = dc * cache.cells[t][k] * f * (1.0 - f);
                    dzr[2 * u + j] = dc * i * (1.0 - g * g);
                    dzr[3 * u + j] = dh * tc * o * (1.0 - o);
                    dc_next[k] = dc * f;
                }
            }
            for n in 0..b {
                let src = &cache.x.data()[(n * len + t) * inp..(n * len + t + 1) * inp];
                xt[n * inp..(n + 1) * inp].copy_from_slice(src);
            }
            gemm(inp, b, g4, &xt, true, &dz, false, &mut self.w_x.grad, 1.0);
            gemm(u, b, g4, &cache.hidden[t], true, &dz, false, &mut self.w_h.grad, 1.0);
            for row in dz.chunks(g4) {
                self.bias.grad.iter_mut().zip(row).for_each(|(d, r)| *d += r);
            }
            gemm(b, g4, inp, &dz, false, &self.w_x.value, true, &mut dxt, 0.0);
            for n in 0..b {
                dx[(n * len + t) * inp..(n * len + t + 1) * inp].copy_from_slice(&dxt[n * inp..(n + 1) * inp]);
            }
            gemm(b, g4, u, &dz, false, &self.w_h.value, true, &mut dh_next, 0.0);
        }
        Tensor::new(vec![b, len, inp], dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_zero_state() {
        let mut rng = crate::rng::stream(0, "lstm", 0);
        let mut l = Lstm::new(3, 4, false, &mut rng);
        for p in [&mut l.w_x, &mut l.w_h, &mut l.bias] {
            p.value.iter_mut().for_each(|v| *v = 0.0);
        }
        let x = Tensor::from_fn(&[2, 5, 3], |i| i as f64 - 7.0);
        assert!(l.forward(&x).unwrap().0.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_cell_by_hand() {
        let l = Lstm {
            w_x: Param::new(&[1, 4], vec![0.5, -0.3, 0.8, 0.2]),
            w_h: Param::new(&[1, 4], vec![0.1, 0.1, 0.1, 0.1]),
            bias: Param::new(&[4], vec![0.1, 1.0, -0.2, 0.0]),
            return_sequences: false,
        };
        let x = Tensor::new(vec![1, 1, 1], vec![2.0]).unwrap();
        let s = |v: f64| 1.0 / (1.0 + (-v).exp());
        let i = s(1.1);
        let g = (1.4f64).tanh();
        let o = s(0.4);
        let want = o * (i * g).tanh();
        assert!((l.forward(&x).unwrap().0.data()[0] - want).abs() < 1e-12);
    }

    #[test]
    fn duplicated_rows_duplicate_outputs() {
        let mut rng = crate::rng::stream(1, "lstm", 0);
        let l = Lstm::new(2, 3, false, &mut rng);
        let one = Tensor::from_fn(&[1, 4, 2], |i| (i as f64 * 0.37).sin());
        let mut two = one.data().to_vec();
        two.extend_from_slice(one.data());
        let two = Tensor::new(vec![2, 4, 2], two).unwrap();
        let a = l.forward(&one).unwrap().0;
        let b = l.forward(&two).unwrap().0;
        assert_eq!(&b.data()[..3], a.data());
        assert_eq!(&b.data()[3..], a.data());
    }

    #[test]
    fn param_count() {
        let mut rng = crate::rng::stream(1, "lstm", 0);
        let l = Lstm::new(6, 8, false, &mut rng);
        assert_eq!(l.w_x.len() + l.w_h.len() + l.bias.len(), 4 * (6 * 8 + 8 * 8 + 8));
    }
}
