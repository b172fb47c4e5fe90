use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SflConfig;
use crate::scalar::Scalar;

/// All learnable weights of a tree, stored flat.
///
/// Layout: leaves first as `[w_0, b_0, w_1, b_1, ...]`, then interior nodes
/// layer by layer (layer 1 up to the root), each as `[omega_0..omega_k, w, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SflParams<T> {
    depth: usize,
    k: usize,
    data: Vec<T>,
}

/// One named group of parameters, as written to result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    /// 0 for leaves, `1..=depth` for interior layers.
    pub layer: usize,
    pub node: usize,
    /// `w`, `b` or `omega`.
    pub field: String,
    pub values: Vec<f64>,
}

impl<T: Scalar> SflParams<T> {
    pub fn zeros(cfg: &SflConfig) -> Self {
        Self {
            depth: cfg.depth,
            k: cfg.k(),
            data: vec![T::zero(); cfg.num_params()],
        }
    }

    /// Shape-checked wrapper around a flat vector.
    pub fn from_vec(cfg: &SflConfig, data: Vec<T>) -> Option<Self> {
        (data.len() == cfg.num_params()).then(|| Self {
            depth: cfg.depth,
            k: cfg.k(),
            data,
        })
    }

    /// `omega ~ N(0, 1)`, `w ~ N(1, 0.5)`, `b ~ N(0, 0.1)`.
    pub fn init<R: Rng + ?Sized>(cfg: &SflConfig, rng: &mut R) -> Self {
        let omega = Normal::new(0.0, 1.0).unwrap();
        let scale = Normal::new(1.0, 0.5).unwrap();
        let bias = Normal::new(0.0, 0.1).unwrap();
        let mut p = Self::zeros(cfg);
        for i in 0..cfg.num_leaves() {
            let r = p.leaf_range(i);
            p.data[r.start] = T::lit(scale.sample(rng));
            p.data[r.start + 1] = T::lit(bias.sample(rng));
        }
        for n in 1..=cfg.depth {
            for i in 0..cfg.nodes_in_layer(n) {
                let r = p.node_range(n, i);
                let k = p.k;
                for j in 0..k {
                    p.data[r.start + j] = T::lit(omega.sample(rng));
                }
                p.data[r.start + k] = T::lit(scale.sample(rng));
                p.data[r.start + k + 1] = T::lit(bias.sample(rng));
            }
        }
        p
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn fits(&self, cfg: &SflConfig) -> bool {
        self.depth == cfg.depth && self.k == cfg.k() && self.data.len() == cfg.num_params()
    }

    pub fn leaf_range(&self, i: usize) -> Range<usize> {
        2 * i..2 * i + 2
    }

    /// Offset of the first interior node of layer `n`.
    fn layer_offset(&self, n: usize) -> usize {
        let leaves = 1usize << self.depth;
        // layers 1..n-1 hold leaves/2 + leaves/4 + ... nodes
        let before: usize = (1..n).map(|l| leaves >> l).sum();
        2 * leaves + before * (self.k + 2)
    }

    /// `[omega.., w, b]` of interior node `i` in layer `n`.
    pub fn node_range(&self, n: usize, i: usize) -> Range<usize> {
        let start = self.layer_offset(n) + i * (self.k + 2);
        start..start + self.k + 2
    }

    pub fn leaf(&self, i: usize) -> (T, T) {
        let r = self.leaf_range(i);
        (self.data[r.start], self.data[r.start + 1])
    }

    pub fn set_leaf(&mut self, i: usize, w: T, b: T) {
        let r = self.leaf_range(i);
        self.data[r.start] = w;
        self.data[r.start + 1] = b;
    }

    pub fn omega(&self, n: usize, i: usize) -> &[T] {
        let r = self.node_range(n, i);
        &self.data[r.start..r.start + self.k]
    }

    pub fn omega_mut(&mut self, n: usize, i: usize) -> &mut [T] {
        let r = self.node_range(n, i);
        let k = self.k;
        &mut self.data[r.start..r.start + k]
    }

    /// Affine `(w, b)` of interior node `i` in layer `n`.
    pub fn affine(&self, n: usize, i: usize) -> (T, T) {
        let r = self.node_range(n, i);
        (self.data[r.end - 2], self.data[r.end - 1])
    }

    pub fn set_affine(&mut self, n: usize, i: usize, w: T, b: T) {
        let r = self.node_range(n, i);
        self.data[r.end - 2] = w;
        self.data[r.end - 1] = b;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Named groups `(layer, node, field)` in storage order.
    pub fn entries(&self) -> Vec<ParamEntry> {
        let entry = |layer, node, field: &str, values: &[T]| ParamEntry {
            layer,
            node,
            field: field.into(),
            values: values.iter().map(|v| v.as_f64()).collect(),
        };
        let mut out = Vec::new();
        for i in 0..(1usize << self.depth) {
            let (w, b) = self.leaf(i);
            out.push(entry(0, i, "w", &[w]));
            out.push(entry(0, i, "b", &[b]));
        }
        for n in 1..=self.depth {
            for i in 0..(1usize << (self.depth - n)) {
                let (w, b) = self.affine(n, i);
                out.push(entry(n, i, "omega", self.omega(n, i)));
                out.push(entry(n, i, "w", &[w]));
                out.push(entry(n, i, "b", &[b]));
            }
        }
        out
    }

    /// Inverse of [`SflParams::entries`].
    pub fn from_entries(cfg: &SflConfig, entries: &[ParamEntry]) -> Option<Self> {
        let flat: Vec<T> = entries
            .iter()
            .flat_map(|e| e.values.iter().map(|&v| T::lit(v)))
            .collect();
        let p = Self::from_vec(cfg, flat)?;
        (p.entries() == entries).then_some(p)
    }
}
