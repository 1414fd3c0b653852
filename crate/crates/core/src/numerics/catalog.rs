//! Small scalar objectives exercising one primitive each, for gradient checks.

use rand::Rng;

use super::gru::GruCell;
use super::params::{named_rng, Binding, ParamStore};
use super::tape::Var;
use super::tensor::Tensor;
use super::NumericsError;

type Objective = for<'t> fn(&Binding<'t>) -> Result<Var<'t>, NumericsError>;

pub struct PrimitiveCase {
    pub name: &'static str,
    /// Input name, shape and sampling range.
    pub inputs: Vec<(&'static str, Vec<usize>, (f64, f64))>,
    pub objective: Objective,
}

impl PrimitiveCase {
    /// Random inputs plus a random `readout` matching the output shape.
    pub fn store(&self, seed: u64) -> Result<ParamStore, NumericsError> {
        let mut store = ParamStore::new(seed);
        for (name, shape, (lo, hi)) in &self.inputs {
            let mut rng = named_rng(seed, &format!("{}/{}", self.name, name));
            let data = (0..shape.iter().product()).map(|_| rng.random_range(*lo..*hi)).collect();
            store.insert(name, Tensor::new(shape.clone(), data)?);
        }
        Ok(store)
    }
}

const UNIT: (f64, f64) = (-1.0, 1.0);

fn readout<'t>(b: &Binding<'t>, out: Var<'t>) -> Result<Var<'t>, NumericsError> {
    // fixed pseudo-random weights so no output coordinate has a trivial gradient
    let w: Vec<f64> = (0..out.numel()).map(|i| ((i as f64 + 1.0) * 0.7).sin() + 0.3).collect();
    let w = b.tape().leaf(Tensor::new(out.shape(), w)?);
    Ok(out.mul(w)?.sum())
}

fn input(name: &'static str, shape: &[usize]) -> (&'static str, Vec<usize>, (f64, f64)) {
    (name, shape.to_vec(), UNIT)
}

pub fn primitive_cases() -> Vec<PrimitiveCase> {
    let case = |name, inputs, objective| PrimitiveCase { name, inputs, objective };
    vec![
        case("add", vec![input("x", &[2, 3]), input("y", &[2, 3])], |b| readout(b, b.get("x")?.add(b.get("y")?)?)),
        case("sub", vec![input("x", &[2, 3]), input("y", &[2, 3])], |b| readout(b, b.get("x")?.sub(b.get("y")?)?)),
        case("mul", vec![input("x", &[2, 3]), input("y", &[2, 3])], |b| readout(b, b.get("x")?.mul(b.get("y")?)?)),
        case("add_rows", vec![input("x", &[3, 2]), input("v", &[2])], |b| readout(b, b.get("x")?.add_rows(b.get("v")?)?)),
        case("mul_scalar", vec![input("x", &[4]), input("s", &[])], |b| readout(b, b.get("x")?.mul_scalar(b.get("s")?)?)),
        case("scale", vec![input("x", &[4])], |b| readout(b, b.get("x")?.scale(-2.5))),
        case("offset", vec![input("x", &[4])], |b| readout(b, b.get("x")?.offset(0.75))),
        case("matmul", vec![input("a", &[2, 3]), input("m", &[3, 4])], |b| readout(b, b.get("a")?.matmul(b.get("m")?)?)),
        case("matvec", vec![input("a", &[3, 2]), input("v", &[2])], |b| readout(b, b.get("a")?.matmul(b.get("v")?)?)),
        case("vecmat", vec![input("v", &[3]), input("m", &[3, 2])], |b| readout(b, b.get("v")?.matmul(b.get("m")?)?)),
        case("concat_rows", vec![input("x", &[1, 3]), input("y", &[2, 3])], |b| {
            readout(b, Var::concat(&[b.get("x")?, b.get("y")?], 0)?)
        }),
        case("concat_cols", vec![input("x", &[2, 1]), input("y", &[2, 3])], |b| {
            readout(b, Var::concat(&[b.get("x")?, b.get("y")?], 1)?)
        }),
        case("split", vec![input("x", &[2, 5])], |b| {
            let parts = b.get("x")?.split(1, &[2, 3])?;
            let left = readout(b, parts[0])?;
            left.add(readout(b, parts[1].tanh())?)
        }),
        case("reshape", vec![input("x", &[2, 3])], |b| readout(b, b.get("x")?.reshape(&[3, 2])?.tanh())),
        case("softmax_rows", vec![input("x", &[2, 4])], |b| readout(b, b.get("x")?.softmax(1)?)),
        case("softmax_cols", vec![input("x", &[3, 2])], |b| readout(b, b.get("x")?.softmax(0)?)),
        case("sigmoid", vec![input("x", &[5])], |b| readout(b, b.get("x")?.sigmoid())),
        case("tanh", vec![input("x", &[5])], |b| readout(b, b.get("x")?.tanh())),
        case("exp", vec![input("x", &[5])], |b| readout(b, b.get("x")?.exp())),
        case("ln", vec![("x", vec![5], (0.5, 2.0))], |b| readout(b, b.get("x")?.ln())),
        case("sum", vec![input("x", &[2, 3])], |b| Ok(b.get("x")?.exp().sum())),
        case("mean", vec![input("x", &[2, 3])], |b| Ok(b.get("x")?.exp().mean())),
        case("gather_rows", vec![input("x", &[4, 2])], |b| readout(b, b.get("x")?.gather_rows(&[2, 0, 2])?)),
        case("scatter_add", vec![input("x", &[4])], |b| readout(b, b.get("x")?.scatter_add(&[1, 3, 1, 0], 5)?)),
        case("minimum", vec![input("x", &[6]), input("y", &[6])], |b| readout(b, b.get("x")?.minimum(b.get("y")?)?)),
        case("clamp", vec![input("x", &[6])], |b| readout(b, b.get("x")?.clamp(-0.5, 0.5))),
        case("mask", vec![input("x", &[4])], |b| readout(b, b.get("x")?.mask(vec![2.0, 0.0, 2.0, 2.0])?)),
        case(
            "gru_cell",
            vec![
                input("x", &[2, 3]),
                input("h", &[2, 2]),
                input("g.w_xr", &[3, 2]),
                input("g.w_xz", &[3, 2]),
                input("g.w_xn", &[3, 2]),
                input("g.w_hr", &[2, 2]),
                input("g.w_hz", &[2, 2]),
                input("g.w_hn", &[2, 2]),
                input("g.b_r", &[2]),
                input("g.b_z", &[2]),
                input("g.b_xn", &[2]),
                input("g.b_hn", &[2]),
            ],
            |b| readout(b, GruCell::new("g", 3, 2).forward(b, b.get("x")?, b.get("h")?)?),
        ),
    ]
}
