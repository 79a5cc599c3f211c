//! Projection head: a small MLP with rectifier hidden layers and a linear
//! output layer.
//!
//! Parameters live in one flat buffer, layer by layer: the `out × in`
//! weight matrix (row-major) followed by the `out` biases.
//!
//! Serialised layout (little-endian):
//!
//! | field        | type                          |
//! |--------------|-------------------------------|
//! | magic        | `VDPH`                        |
//! | version      | u16 = 1                       |
//! | layer count  | u32 `L` (number of dims = L+1) |
//! | dims         | `L + 1` × u32                 |
//! | parameters   | f32, flat order above         |

use rand::Rng;

use crate::rng;
use crate::{Error, Result};

pub const HEAD_MAGIC: &[u8; 4] = b"VDPH";
pub const HEAD_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionHead {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for back-propagation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input of every layer; `inputs[0]` is the head input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of every layer.
    pre: Vec<Vec<f64>>,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl ProjectionHead {
    /// Glorot-uniform weights and zero biases drawn from `seed`.
    pub fn new(dims: &[usize], seed: u64) -> Result<ProjectionHead> {
        Self::check_dims(dims)?;
        let mut g = rng::stream(seed, &[rng::tag::INIT]);
        let mut params = Vec::with_capacity(param_count(dims));
        for w in dims.windows(2) {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| g.gen_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(ProjectionHead { dims: dims.to_vec(), params })
    }

    /// Single linear layer initialised to the identity map.
    pub fn identity(dim: usize) -> ProjectionHead {
        let mut params = vec![0.0; dim * dim + dim];
        for i in 0..dim {
            params[i * dim + i] = 1.0;
        }
        ProjectionHead { dims: vec![dim, dim], params }
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<ProjectionHead> {
        Self::check_dims(dims)?;
        if params.len() != param_count(dims) {
            return Err(Error::invalid(
                None,
                format!("{} parameters for dims {dims:?} (expected {})", params.len(), param_count(dims)),
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid(None, "head parameters are not finite"));
        }
        Ok(ProjectionHead { dims: dims.to_vec(), params })
    }

    fn check_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Config(format!("head dims {dims:?} need ≥ 2 positive sizes")));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims non-empty")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// `params -= step * grad`.
    pub fn apply_step(&mut self, grad: &[f64], step: f64) {
        debug_assert_eq!(grad.len(), self.params.len());
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= step * g;
        }
    }

    /// Zeroes the bias entries of a gradient buffer.
    pub fn mask_bias_grads(&self, grad: &mut [f64]) {
        let mut off = 0;
        for w in self.dims.windows(2) {
            off += w[0] * w[1];
            grad[off..off + w[1]].fill(0.0);
            off += w[1];
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_traced(x).0
    }

    pub fn forward_traced(&self, x: &[f64]) -> (Vec<f64>, Trace) {
        assert_eq!(x.len(), self.dims[0], "head input dimension");
        let n_layers = self.dims.len() - 1;
        let mut trace = Trace { inputs: Vec::with_capacity(n_layers), pre: Vec::with_capacity(n_layers) };
        let mut h = x.to_vec();
        let mut offset = 0;
        for l in 0..n_layers {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            let w = &self.params[offset..offset + din * dout];
            let b = &self.params[offset + din * dout..offset + din * dout + dout];
            let z: Vec<f64> = (0..dout)
                .map(|o| b[o] + w[o * din..(o + 1) * din].iter().zip(&h).map(|(wi, hi)| wi * hi).sum::<f64>())
                .collect();
            offset += din * dout + dout;
            let out = if l + 1 < n_layers { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
            trace.inputs.push(std::mem::replace(&mut h, out));
            trace.pre.push(z);
        }
        (h, trace)
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂output`; returns `∂L/∂input`.
    pub fn backward(&self, trace: &Trace, grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let n_layers = self.dims.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in 0..n_layers {
            offsets.push(off);
            off += self.dims[l] * self.dims[l + 1] + self.dims[l + 1];
        }
        let mut delta = grad_out.to_vec();
        for l in (0..n_layers).rev() {
            let (din, dout) = (self.dims[l], self.dims[l + 1]);
            if l + 1 < n_layers {
                for (d, z) in delta.iter_mut().zip(&trace.pre[l]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &trace.inputs[l];
            let base = offsets[l];
            let mut delta_in = vec![0.0; din];
            for o in 0..dout {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = base + o * din;
                for i in 0..din {
                    grad[row + i] += d * input[i];
                    delta_in[i] += d * self.params[row + i];
                }
                grad[base + din * dout + o] += d;
            }
            delta = delta_in;
        }
        delta
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(10 + 4 * (self.dims.len() + self.params.len()));
        out.extend_from_slice(HEAD_MAGIC);
        out.extend_from_slice(&HEAD_VERSION.to_le_bytes());
        out.extend_from_slice(&((self.dims.len() - 1) as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &p in &self.params {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ProjectionHead> {
        let take = |at: usize, n: usize| -> Result<&[u8]> {
            bytes.get(at..at + n).ok_or(Error::Truncated { expected: at + n, found: bytes.len() })
        };
        if take(0, 4)? != HEAD_MAGIC {
            return Err(Error::Format("bad magic, expected `VDPH`".into()));
        }
        let version = u16::from_le_bytes(take(4, 2)?.try_into().expect("2 bytes"));
        if version != HEAD_VERSION {
            return Err(Error::Format(format!("unsupported head version {version}")));
        }
        let layers = u32::from_le_bytes(take(6, 4)?.try_into().expect("4 bytes")) as usize;
        if layers == 0 || layers > 64 {
            return Err(Error::Format(format!("implausible layer count {layers}")));
        }
        let dims = (0..=layers)
            .map(|k| take(10 + 4 * k, 4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize))
            .collect::<Result<Vec<_>>>()?;
        Self::check_dims(&dims).map_err(|e| Error::Format(e.to_string()))?;
        let start = 10 + 4 * (layers + 1);
        let n = dims
            .windows(2)
            .try_fold(0usize, |acc, w| w[0].checked_mul(w[1]).and_then(|m| acc.checked_add(m + w[1])))
            .ok_or_else(|| Error::Format("head too large".into()))?;
        let expected = n.checked_mul(4).ok_or_else(|| Error::Format("head too large".into()))?;
        let payload = &bytes[start.min(bytes.len())..];
        if payload.len() != expected {
            return Err(Error::Truncated { expected, found: payload.len() });
        }
        let params =
            payload.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes")))).collect();
        ProjectionHead::from_params(&dims, params)
    }
}
