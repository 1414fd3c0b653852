use std::cell::RefCell;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::named_rng;
use super::tape::Var;
use super::NumericsError;

/// Inverted Bernoulli dropout masks from a seeded stream.
#[derive(Debug)]
pub struct Dropout {
    rng: RefCell<ChaCha8Rng>,
}

impl Dropout {
    pub fn new(seed: u64, stream: &str) -> Self {
        Dropout { rng: RefCell::new(named_rng(seed, stream)) }
    }

    pub fn apply<'t>(&self, x: Var<'t>, rate: f64) -> Result<Var<'t>, NumericsError> {
        if rate <= 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - rate;
        let mut rng = self.rng.borrow_mut();
        let mask = (0..x.numel()).map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
        x.mask(mask)
    }
}

/// Applies dropout when training (`Some`), identity otherwise.
pub fn maybe_dropout<'t>(d: Option<&Dropout>, x: Var<'t>, rate: f64) -> Result<Var<'t>, NumericsError> {
    match d {
        Some(d) => d.apply(x, rate),
        None => Ok(x),
    }
}
