//! Named parameter storage with deterministic ordering, flat views for
//! finite-difference checks, and an Adam optimizer.

use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;

/// Ordered collection of named matrices. Slot order is registration order,
/// which fixes the flattened layout and makes checkpoints reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Array2<f64>>,
    index: HashMap<String, usize>,
}

impl Default for ParamSet {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamSet {
    pub fn new() -> ParamSet {
        ParamSet { names: Vec::new(), values: Vec::new(), index: HashMap::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "duplicate parameter {name}"
        );
        self.index.insert(name.clone(), self.values.len());
        self.names.push(name);
        self.values.push(value);
    }

    pub fn slot(&self, name: &str) -> usize {
        *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get(&self, name: &str) -> &Array2<f64> {
        &self.values[self.slot(name)]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Array2<f64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.values
    }

    /// Total scalar parameter count.
    pub fn param_count(&self) -> usize {
        self.values.iter().map(|v| v.len()).sum()
    }

    /// Gradient buffers shaped like this set.
    pub fn zeros_like(&self) -> Vec<Array2<f64>> {
        self.values.iter().map(|v| Array2::zeros(v.raw_dim())).collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for v in &self.values {
            out.extend(v.iter().copied());
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for v in &mut self.values {
            for x in v.iter_mut() {
                *x = flat[offset];
                offset += 1;
            }
        }
        assert_eq!(offset, flat.len());
    }
}

/// Accumulate `src` into `dst`, both aligned with one `ParamSet`.
pub fn add_grads(dst: &mut [Array2<f64>], src: &[Array2<f64>], scale: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        d.scaled_add(scale, s);
    }
}

pub fn scale_grads(grads: &mut [Array2<f64>], scale: f64) {
    for g in grads.iter_mut() {
        g.mapv_inplace(|x| x * scale);
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(ps: &ParamSet, lr: f64) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: ps.zeros_like(),
            v: ps.zeros_like(),
        }
    }

    /// One descent step along `grads` (gradients of the loss being
    /// minimized).
    pub fn step(&mut self, ps: &mut ParamSet, grads: &[Array2<f64>]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for ((value, grad), (m, v)) in ps
            .values_mut()
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            ndarray::Zip::from(value)
                .and(grad)
                .and(m)
                .and(v)
                .for_each(|value, &grad, m, v| {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * grad;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * grad * grad;
                    let mhat = *m / b1t;
                    let vhat = *v / b2t;
                    *value -= self.lr * mhat / (vhat.sqrt() + self.eps);
                });
        }
    }
}

/// Uniform Xavier/Glorot initialization.
pub fn xavier(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
}

/// Orthogonal-style initialization: Gram-Schmidt over Gaussian rows (or
/// columns for tall matrices), scaled by `gain`.
pub fn orthogonal(rng: &mut impl Rng, rows: usize, cols: usize, gain: f64) -> Array2<f64> {
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    // n <= m: orthonormalize n rows of length m.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| gaussian(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
            for (x, b) in v.iter_mut().zip(b) {
                *x -= dot * b;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        basis.push(v);
    }
    let mat = Array2::from_shape_fn((n, m), |(i, j)| gain * basis[i][j]);
    if transpose {
        mat.t().to_owned()
    } else {
        mat
    }
}

/// Small-scale uniform init for final layers.
pub fn small_uniform(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..scale))
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flatten_round_trip() {
        let mut ps = ParamSet::new();
        ps.add("a", Array2::from_elem((2, 3), 1.5));
        ps.add("b", Array2::from_elem((1, 4), -0.25));
        let flat = ps.flatten();
        assert_eq!(flat.len(), 10);
        let mut ps2 = ps.clone();
        let perturbed: Vec<f64> = flat.iter().map(|x| x + 1.0).collect();
        ps2.assign_flat(&perturbed);
        assert_eq!(ps2.get("a")[[0, 0]], 2.5);
        assert_eq!(ps2.get("b")[[0, 3]], 0.75);
    }

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = orthogonal(&mut rng, 4, 8, 1.0);
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..8).map(|k| w[[i, k]] * w[[j, k]]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn adam_descends_a_quadratic() {
        let mut ps = ParamSet::new();
        ps.add("x", Array2::from_elem((1, 1), 5.0));
        let mut opt = Adam::new(&ps, 0.1);
        for _ in 0..500 {
            let x = ps.get("x")[[0, 0]];
            let grads = vec![Array2::from_elem((1, 1), 2.0 * x)];
            opt.step(&mut ps, &grads);
        }
        assert!(ps.get("x")[[0, 0]].abs() < 1e-2);
    }
}
