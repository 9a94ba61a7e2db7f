//! Fully connected ReLU trunk with linear output heads, trained by Adam.

use std::io::{self, Read, Write};

use rand::Rng;

/// Trunk of `trunk.len() - 1` FC+ReLU blocks followed by one linear layer
/// per head. Parameters live in one flat vector: each layer stores its
/// weights row-major (`out × in`) followed by its biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub trunk: Vec<usize>,
    pub heads: Vec<usize>,
    pub params: Vec<f64>,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Input followed by every block's activation.
    pub acts: Vec<Vec<f64>>,
    pub heads: Vec<Vec<f64>>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(trunk: Vec<usize>, heads: Vec<usize>, rng: &mut impl Rng) -> Self {
        assert!(!trunk.is_empty(), "trunk needs an input size");
        let mut net = Mlp {
            trunk,
            heads,
            params: Vec::new(),
        };
        for (fan_in, fan_out) in net.layer_shapes() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            net.params
                .extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)));
            net.params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        net
    }

    /// `(in, out)` of every layer, trunk first.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let last = *self.trunk.last().unwrap();
        self.trunk
            .windows(2)
            .map(|w| (w[0], w[1]))
            .chain(self.heads.iter().map(|&h| (last, h)))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.layer_shapes()
            .iter()
            .map(|(i, o)| {
                let at = off;
                off += i * o + o;
                at
            })
            .collect()
    }

    fn affine(&self, off: usize, n_in: usize, n_out: usize, x: &[f64]) -> Vec<f64> {
        let w = &self.params[off..off + n_in * n_out];
        let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
        (0..n_out)
            .map(|r| {
                let row = &w[r * n_in..(r + 1) * n_in];
                b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Forward {
        assert_eq!(x.len(), self.trunk[0], "input size");
        let shapes = self.layer_shapes();
        let offs = self.offsets();
        let blocks = self.trunk.len() - 1;
        let mut acts = vec![x.to_vec()];
        for k in 0..blocks {
            let (i, o) = shapes[k];
            let mut z = self.affine(offs[k], i, o, &acts[k]);
            z.iter_mut().for_each(|v| *v = v.max(0.0));
            acts.push(z);
        }
        let heads = (0..self.heads.len())
            .map(|h| {
                let (i, o) = shapes[blocks + h];
                self.affine(offs[blocks + h], i, o, &acts[blocks])
            })
            .collect();
        Forward { acts, heads }
    }

    /// Adds `∂loss/∂params` into `grad` given `∂loss/∂head` for every head.
    pub fn backward(&self, f: &Forward, dheads: &[Vec<f64>], grad: &mut [f64]) {
        let shapes = self.layer_shapes();
        let offs = self.offsets();
        let blocks = self.trunk.len() - 1;
        let mut da = vec![0.0; *self.trunk.last().unwrap()];
        for (h, dh) in dheads.iter().enumerate() {
            let (i, o) = shapes[blocks + h];
            self.accumulate(offs[blocks + h], i, o, &f.acts[blocks], dh, grad, Some(&mut da));
        }
        for k in (0..blocks).rev() {
            let (i, o) = shapes[k];
            let dz: Vec<f64> = da
                .iter()
                .zip(&f.acts[k + 1])
                .map(|(d, a)| if *a > 0.0 { *d } else { 0.0 })
                .collect();
            let mut prev = vec![0.0; i];
            let want = if k > 0 { Some(&mut prev) } else { None };
            self.accumulate(offs[k], i, o, &f.acts[k], &dz, grad, want);
            da = prev;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        off: usize,
        n_in: usize,
        n_out: usize,
        x: &[f64],
        dz: &[f64],
        grad: &mut [f64],
        dx: Option<&mut Vec<f64>>,
    ) {
        let w = &self.params[off..off + n_in * n_out];
        for r in 0..n_out {
            if dz[r] == 0.0 {
                continue;
            }
            let g = &mut grad[off + r * n_in..off + (r + 1) * n_in];
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += dz[r] * xi;
            }
            grad[off + n_in * n_out + r] += dz[r];
        }
        if let Some(dx) = dx {
            for r in 0..n_out {
                if dz[r] == 0.0 {
                    continue;
                }
                let row = &w[r * n_in..(r + 1) * n_in];
                for (d, wi) in dx.iter_mut().zip(row) {
                    *d += dz[r] * wi;
                }
            }
        }
    }

    /// Header of little-endian u64s (trunk length, trunk sizes, head count,
    /// head sizes) followed by the parameters as little-endian f64.
    pub fn write_checkpoint(&self, w: &mut impl Write) -> io::Result<()> {
        let mut put = |v: u64| w.write_all(&v.to_le_bytes());
        put(self.trunk.len() as u64)?;
        for &d in &self.trunk {
            put(d as u64)?;
        }
        put(self.heads.len() as u64)?;
        for &d in &self.heads {
            put(d as u64)?;
        }
        for p in &self.params {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint(r: &mut impl Read) -> io::Result<Self> {
        let mut buf = [0u8; 8];
        let mut get = |r: &mut dyn Read| -> io::Result<u64> {
            r.read_exact(&mut buf)?;
            Ok(u64::from_le_bytes(buf))
        };
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let n = get(r)? as usize;
        if n == 0 || n > 64 {
            return Err(bad("bad trunk length"));
        }
        let trunk = (0..n).map(|_| get(r).map(|v| v as usize)).collect::<io::Result<Vec<_>>>()?;
        let h = get(r)? as usize;
        if h > 64 {
            return Err(bad("bad head count"));
        }
        let heads = (0..h).map(|_| get(r).map(|v| v as usize)).collect::<io::Result<Vec<_>>>()?;
        let mut net = Mlp {
            trunk,
            heads,
            params: Vec::new(),
        };
        let count = net.param_count();
        let mut bytes = vec![0u8; count * 8];
        r.read_exact(&mut bytes)?;
        net.params = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(net)
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>()
}

/// Draws an index from a categorical distribution.
pub fn sample(p: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, q) in p.iter().enumerate() {
        acc += q;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&q| q > 0.0).unwrap_or(0)
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
