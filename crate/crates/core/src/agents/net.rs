//! Two-layer tanh network with a softmax policy head and a value head.
//!
//! Parameters live in one flat vector: W1 (input-major), b1, W2, b2, policy
//! weights, policy bias, value weights, value bias. Inputs are sparse.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::obs::Observation;

#[derive(Debug, Error, PartialEq)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden: usize,
    pub actions: usize,
}

impl Architecture {
    pub fn param_count(&self) -> usize {
        let (i, h, a) = (self.input, self.hidden, self.actions);
        i * h + h + h * h + h + h * a + a + h + 1
    }

    fn offsets(&self) -> Offsets {
        let (i, h, a) = (self.input, self.hidden, self.actions);
        let w1 = 0;
        let b1 = w1 + i * h;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let wp = b2 + h;
        let bp = wp + h * a;
        let wv = bp + a;
        let bv = wv + h;
        Offsets { w1, b1, w2, b2, wp, bp, wv, bv }
    }
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    wp: usize,
    bp: usize,
    wv: usize,
    bv: usize,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub logits: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub probs: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub architecture: Architecture,
    pub params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    architecture: Architecture,
    params: Vec<f64>,
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    logits.iter().map(|x| x - lse).collect()
}

impl Policy {
    /// Uniform fan-in/fan-out initialisation; the policy head starts near uniform.
    pub fn new<R: Rng>(architecture: Architecture, rng: &mut R) -> Policy {
        let o = architecture.offsets();
        let (i, h, a) = (architecture.input, architecture.hidden, architecture.actions);
        let mut params = vec![0.0; architecture.param_count()];
        let mut fill = |start: usize, len: usize, bound: f64| {
            for p in &mut params[start..start + len] {
                *p = rng.gen_range(-bound..=bound);
            }
        };
        fill(o.w1, i * h, (6.0 / (30.0 + h as f64)).sqrt());
        fill(o.w2, h * h, (6.0 / (2.0 * h as f64)).sqrt());
        fill(o.wp, h * a, 0.01 * (6.0 / (h + a) as f64).sqrt());
        fill(o.wv, h, (6.0 / (h + 1) as f64).sqrt());
        Policy { architecture, params }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, obs: &Observation) -> Forward {
        let Architecture { input, hidden: h, actions: a } = self.architecture;
        let o = self.architecture.offsets();
        let p = &self.params;
        let mut z1 = p[o.b1..o.b1 + h].to_vec();
        for &(idx, x) in &obs.entries {
            let idx = idx as usize;
            debug_assert!(idx < input);
            let row = &p[o.w1 + idx * h..o.w1 + (idx + 1) * h];
            for (z, w) in z1.iter_mut().zip(row) {
                *z += x * w;
            }
        }
        let h1: Vec<f64> = z1.iter().map(|z| z.tanh()).collect();
        let mut z2 = p[o.b2..o.b2 + h].to_vec();
        for (k, x) in h1.iter().enumerate() {
            let row = &p[o.w2 + k * h..o.w2 + (k + 1) * h];
            for (z, w) in z2.iter_mut().zip(row) {
                *z += x * w;
            }
        }
        let h2: Vec<f64> = z2.iter().map(|z| z.tanh()).collect();
        let mut logits = p[o.bp..o.bp + a].to_vec();
        let mut value = p[o.bv];
        for (k, x) in h2.iter().enumerate() {
            let row = &p[o.wp + k * a..o.wp + (k + 1) * a];
            for (l, w) in logits.iter_mut().zip(row) {
                *l += x * w;
            }
            value += x * p[o.wv + k];
        }
        let log_probs = log_softmax(&logits);
        let probs = log_probs.iter().map(|l| l.exp()).collect();
        Forward { h1, h2, logits, log_probs, probs, value }
    }

    /// Accumulates into `grad` the gradient of a loss whose derivatives with
    /// respect to the logits and the value are `dlogits` and `dvalue`.
    pub fn backward(&self, obs: &Observation, fwd: &Forward, dlogits: &[f64], dvalue: f64, grad: &mut [f64]) {
        let Architecture { hidden: h, actions: a, .. } = self.architecture;
        let o = self.architecture.offsets();
        let p = &self.params;
        let mut dh2 = vec![0.0; h];
        for k in 0..h {
            let row = &p[o.wp + k * a..o.wp + (k + 1) * a];
            let grow = &mut grad[o.wp + k * a..o.wp + (k + 1) * a];
            let mut acc = p[o.wv + k] * dvalue;
            for j in 0..a {
                acc += row[j] * dlogits[j];
                grow[j] += fwd.h2[k] * dlogits[j];
            }
            dh2[k] = acc;
            grad[o.wv + k] += fwd.h2[k] * dvalue;
        }
        for j in 0..a {
            grad[o.bp + j] += dlogits[j];
        }
        grad[o.bv] += dvalue;
        let dz2: Vec<f64> = dh2.iter().zip(&fwd.h2).map(|(d, y)| d * (1.0 - y * y)).collect();
        let mut dh1 = vec![0.0; h];
        for k in 0..h {
            let row = &p[o.w2 + k * h..o.w2 + (k + 1) * h];
            let grow = &mut grad[o.w2 + k * h..o.w2 + (k + 1) * h];
            let x = fwd.h1[k];
            let mut acc = 0.0;
            for j in 0..h {
                acc += row[j] * dz2[j];
                grow[j] += x * dz2[j];
            }
            dh1[k] = acc;
        }
        for j in 0..h {
            grad[o.b2 + j] += dz2[j];
        }
        let dz1: Vec<f64> = dh1.iter().zip(&fwd.h1).map(|(d, y)| d * (1.0 - y * y)).collect();
        for &(idx, x) in &obs.entries {
            let grow = &mut grad[o.w1 + idx as usize * h..o.w1 + (idx as usize + 1) * h];
            for (g, d) in grow.iter_mut().zip(&dz1) {
                *g += x * d;
            }
        }
        for j in 0..h {
            grad[o.b1 + j] += dz1[j];
        }
    }

    pub fn to_json(&self) -> String {
        let c = Checkpoint { version: 1, architecture: self.architecture, params: self.params.clone() };
        let mut s = serde_json::to_string(&c).expect("policy serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Policy, NetError> {
        let c: Checkpoint = serde_json::from_str(json).map_err(|e| NetError::Checkpoint(e.to_string()))?;
        if c.version != 1 {
            return Err(NetError::Checkpoint(format!("unsupported version {}", c.version)));
        }
        if c.params.len() != c.architecture.param_count() {
            return Err(NetError::Shape(format!("{} parameters for an architecture needing {}", c.params.len(), c.architecture.param_count())));
        }
        Ok(Policy { architecture: c.architecture, params: c.params })
    }
}

/// Adam with global gradient-norm clipping.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n: usize) -> Adam {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &mut [f64], lr: f64, max_norm: f64) {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > max_norm {
            let s = max_norm / norm;
            grad.iter_mut().for_each(|g| *g *= s);
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            if g == 0.0 && self.m[i] == 0.0 && self.v[i] == 0.0 {
                continue;
            }
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pol = Policy::new(Architecture { input: 10, hidden: 8, actions: 27 }, &mut rng);
        for _ in 0..50 {
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let f = pol.forward(&Observation::from_dense(&x));
            assert!((f.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(f.logits.iter().all(|l| l.is_finite()));
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pol = Policy::new(Architecture { input: 4, hidden: 3, actions: 27 }, &mut rng);
        let back = Policy::from_json(&pol.to_json()).unwrap();
        assert_eq!(back, pol);
        let mut bad: serde_json::Value = serde_json::from_str(&pol.to_json()).unwrap();
        bad["params"].as_array_mut().unwrap().pop();
        assert!(matches!(Policy::from_json(&bad.to_string()), Err(NetError::Shape(_))));
    }
}
