use super::params::{Binding, ParamStore};
use super::tape::Var;
use super::NumericsError;

/// GRU cell with separate input and hidden projections per gate:
///
/// r = σ(x W_xr + h W_hr + b_r)
/// z = σ(x W_xz + h W_hz + b_z)
/// n = tanh(x W_xn + b_xn + r ⊙ (h W_hn + b_hn))
/// h' = (1 − z) ⊙ n + z ⊙ h
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub prefix: String,
    pub input: usize,
    pub hidden: usize,
}

const INPUT_WEIGHTS: [&str; 3] = ["w_xr", "w_xz", "w_xn"];
const HIDDEN_WEIGHTS: [&str; 3] = ["w_hr", "w_hz", "w_hn"];
const BIASES: [&str; 4] = ["b_r", "b_z", "b_xn", "b_hn"];

impl GruCell {
    pub fn new(prefix: &str, input: usize, hidden: usize) -> Self {
        GruCell { prefix: prefix.to_string(), input, hidden }
    }

    pub fn param(&self, name: &str) -> String {
        format!("{}.{}", self.prefix, name)
    }

    pub fn init(&self, store: &mut ParamStore) {
        for w in INPUT_WEIGHTS {
            store.init_uniform(&self.param(w), &[self.input, self.hidden]);
        }
        for w in HIDDEN_WEIGHTS {
            store.init_uniform(&self.param(w), &[self.hidden, self.hidden]);
        }
        for b in BIASES {
            store.init_zeros(&self.param(b), &[self.hidden]);
        }
    }

    /// `x` is `[d_in]` or `[B×d_in]`, `h` is `[d_h]` or `[B×d_h]` to match.
    pub fn forward<'t>(&self, b: &Binding<'t>, x: Var<'t>, h: Var<'t>) -> Result<Var<'t>, NumericsError> {
        let p = |name: &str| b.get(&self.param(name));
        let gate = |wx: &str, wh: &str, bias: &str| -> Result<Var<'t>, NumericsError> {
            Ok(x.matmul(p(wx)?)?.add(h.matmul(p(wh)?)?)?.add_rows(p(bias)?)?.sigmoid())
        };
        let r = gate("w_xr", "w_hr", "b_r")?;
        let z = gate("w_xz", "w_hz", "b_z")?;
        let hn = h.matmul(p("w_hn")?)?.add_rows(p("b_hn")?)?;
        let n = x.matmul(p("w_xn")?)?.add_rows(p("b_xn")?)?.add(r.mul(hn)?)?.tanh();
        n.add(z.mul(h.sub(n)?)?)
    }
}

/// `x W + b` with parameters `{prefix}.w` `[d_in×d_out]` and `{prefix}.b` `[d_out]`.
pub fn linear<'t>(b: &Binding<'t>, prefix: &str, x: Var<'t>) -> Result<Var<'t>, NumericsError> {
    x.matmul(b.get(&format!("{prefix}.w"))?)?.add_rows(b.get(&format!("{prefix}.b"))?)
}

pub fn init_linear(store: &mut ParamStore, prefix: &str, d_in: usize, d_out: usize) {
    store.init_uniform(&format!("{prefix}.w"), &[d_in, d_out]);
    store.init_zeros(&format!("{prefix}.b"), &[d_out]);
}
