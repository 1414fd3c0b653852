use std::cell::RefCell;
use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Gradients, Tape, Var};
use super::tensor::Tensor;
use super::NumericsError;

pub const CHECKPOINT_VERSION: u32 = 1;

/// FNV-1a, used to give every parameter name its own RNG stream.
pub fn stream_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// RNG for a named purpose, independent of every other name under the same seed.
pub fn named_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: BTreeMap<String, Tensor>,
    seed: u64,
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        ParamStore { params: BTreeMap::new(), seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Matrix or table drawn from uniform(±1/√fan_in), fan_in being the first dimension.
    pub fn init_uniform(&mut self, name: &str, shape: &[usize]) {
        let fan_in = shape.first().copied().unwrap_or(1).max(1);
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut rng = named_rng(self.seed, name);
        let mut t = Tensor::zeros(shape);
        for x in t.data_mut() {
            *x = rng.random_range(-bound..=bound);
        }
        self.insert(name, t);
    }

    pub fn init_zeros(&mut self, name: &str, shape: &[usize]) {
        self.insert(name, Tensor::zeros(shape));
    }

    pub fn insert(&mut self, name: &str, t: Tensor) {
        self.params.insert(name.to_string(), t);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn total_numel(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    pub fn to_wire(&self) -> WireParams {
        let params = self
            .params
            .iter()
            .map(|(name, t)| {
                let bytes: Vec<u8> = t.data().iter().flat_map(|x| x.to_le_bytes()).collect();
                (name.clone(), WireTensor { shape: t.shape().to_vec(), data: STANDARD.encode(bytes) })
            })
            .collect();
        WireParams { version: CHECKPOINT_VERSION, seed: self.seed, params }
    }

    pub fn from_wire(wire: &WireParams) -> Result<Self, NumericsError> {
        if wire.version != CHECKPOINT_VERSION {
            return Err(NumericsError::Checkpoint(format!("unsupported version {}", wire.version)));
        }
        let mut store = ParamStore::new(wire.seed);
        for (name, w) in &wire.params {
            let bytes = STANDARD.decode(&w.data).map_err(|e| NumericsError::Checkpoint(format!("{name}: {e}")))?;
            if bytes.len() % 8 != 0 {
                return Err(NumericsError::Checkpoint(format!("{name}: truncated data")));
            }
            let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            let t = Tensor::new(w.shape.clone(), data).map_err(|e| NumericsError::Checkpoint(format!("{name}: {e}")))?;
            store.insert(name, t);
        }
        Ok(store)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTensor {
    pub shape: Vec<usize>,
    /// base64 of little-endian f64 values
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireParams {
    pub version: u32,
    pub seed: u64,
    pub params: BTreeMap<String, WireTensor>,
}

/// One coordinate nudged by `delta`, for finite differences.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub name: String,
    pub index: usize,
    pub delta: f64,
}

/// Parameters placed on a tape on first use.
pub struct Binding<'t> {
    tape: &'t Tape,
    store: &'t ParamStore,
    bound: RefCell<BTreeMap<String, Var<'t>>>,
    perturbation: Option<Perturbation>,
}

impl<'t> Binding<'t> {
    pub fn new(tape: &'t Tape, store: &'t ParamStore) -> Self {
        Binding { tape, store, bound: RefCell::new(BTreeMap::new()), perturbation: None }
    }

    pub fn perturbed(tape: &'t Tape, store: &'t ParamStore, p: Perturbation) -> Self {
        Binding { perturbation: Some(p), ..Binding::new(tape, store) }
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn store(&self) -> &'t ParamStore {
        self.store
    }

    pub fn get(&self, name: &str) -> Result<Var<'t>, NumericsError> {
        if let Some(v) = self.bound.borrow().get(name) {
            return Ok(*v);
        }
        let mut t = self.store.get(name).ok_or_else(|| NumericsError::MissingParameter(name.to_string()))?.clone();
        if let Some(p) = self.perturbation.as_ref().filter(|p| p.name == name) {
            t.data_mut()[p.index] += p.delta;
        }
        let v = self.tape.leaf(t);
        self.bound.borrow_mut().insert(name.to_string(), v);
        Ok(v)
    }

    /// Gradients of every parameter that was used.
    pub fn gradients(&self, grads: &Gradients) -> GradMap {
        GradMap(self.bound.borrow().iter().map(|(k, v)| (k.clone(), grads.get_or_zeros(*v))).collect())
    }
}

/// Parameter gradients by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradMap(pub BTreeMap<String, Vec<f64>>);

impl GradMap {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.0.get(name).map(Vec::as_slice)
    }

    pub fn accumulate(&mut self, other: &GradMap) {
        for (k, g) in &other.0 {
            match self.0.get_mut(k) {
                Some(d) => {
                    for (a, b) in d.iter_mut().zip(g) {
                        *a += b;
                    }
                }
                None => {
                    self.0.insert(k.clone(), g.clone());
                }
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for g in self.0.values_mut() {
            for x in g {
                *x *= c;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.values().flatten().all(|x| x.is_finite())
    }
}
