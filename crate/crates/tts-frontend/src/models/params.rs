//! Named parameter tensors and the forwarding context that binds them onto
//! a tape.
//!
//! Parameters live in a `BTreeMap` so every iteration order in the crate is
//! canonical; that is what makes training and checkpoints bit-reproducible.

use crate::models::tape::{Grads, Tape, Var};
use ndarray::{Array1, Array2, ArrayD};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::cell::RefCell;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Params {
    tensors: BTreeMap<String, ArrayD<f64>>,
}

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: ArrayD<f64>) {
        self.tensors.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> &ArrayD<f64> {
        self.tensors
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
    }

    pub fn get_mut(&mut self, name: &str) -> &mut ArrayD<f64> {
        self.tensors
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ArrayD<f64>)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut ArrayD<f64>)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.tensors.values().map(|t| t.len()).sum()
    }

    /// Merge another parameter set under a name prefix.
    pub fn absorb(&mut self, prefix: &str, other: Params) {
        for (k, v) in other.tensors {
            self.tensors.insert(format!("{prefix}{k}"), v);
        }
    }
}

/// Seeded initializer used by every model constructor.
pub struct Init {
    rng: ChaCha8Rng,
}

impl Init {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        Init {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform2(&mut self, rows: usize, cols: usize, scale: f64) -> ArrayD<f64> {
        Array2::from_shape_fn((rows, cols), |_| self.rng.random_range(-scale..scale)).into_dyn()
    }

    /// Glorot-style scale for a linear map.
    pub fn xavier(&mut self, fan_in: usize, fan_out: usize) -> ArrayD<f64> {
        let scale = (6.0 / (fan_in + fan_out) as f64).sqrt();
        self.uniform2(fan_in, fan_out, scale)
    }

    pub fn zeros1(&mut self, n: usize) -> ArrayD<f64> {
        Array1::<f64>::zeros(n).into_dyn()
    }

    pub fn zeros2(&mut self, rows: usize, cols: usize) -> ArrayD<f64> {
        Array2::<f64>::zeros((rows, cols)).into_dyn()
    }

    pub fn ones1(&mut self, n: usize) -> ArrayD<f64> {
        Array1::<f64>::ones(n).into_dyn()
    }
}

/// Binds parameters onto a tape for one forward/backward pass and maps the
/// resulting node gradients back to parameter names.
pub struct Ctx<'t, 'p> {
    pub tape: &'t Tape,
    params: &'p Params,
    bound: RefCell<BTreeMap<String, Var<'t>>>,
}

impl<'t, 'p> Ctx<'t, 'p> {
    pub fn new(tape: &'t Tape, params: &'p Params) -> Self {
        Ctx {
            tape,
            params,
            bound: RefCell::new(BTreeMap::new()),
        }
    }

    /// The tape leaf for a named parameter (bound once per pass).
    pub fn p(&self, name: &str) -> Var<'t> {
        if let Some(v) = self.bound.borrow().get(name) {
            return *v;
        }
        let var = self.tape.leaf(self.params.get(name).clone());
        self.bound.borrow_mut().insert(name.to_string(), var);
        var
    }

    pub fn params(&self) -> &'p Params {
        self.params
    }

    /// Gradients of every parameter bound during this pass.
    pub fn param_grads(&self, grads: &Grads) -> BTreeMap<String, ArrayD<f64>> {
        let mut out = BTreeMap::new();
        for (name, var) in self.bound.borrow().iter() {
            if let Some(g) = grads.get(*var) {
                out.insert(name.clone(), g.clone());
            }
        }
        out
    }
}
