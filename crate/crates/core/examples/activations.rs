//! Every supported activation and both losses on a two-sample task,
//! solved exactly.

use ising_learn::compile::{compile, PenaltyConfig};
use ising_learn::data::QuantizedDataset;
use ising_learn::model::{decode, evaluate_model, Task};
use ising_learn::poly::int;
use ising_learn::topology::{Activation, LossKind, NetworkSpec};
use ising_learn::workflow::solve_exactly;

fn main() {
    let ds = QuantizedDataset::new(vec![vec![1], vec![-1]], vec![vec![int(1)], vec![int(-1)]], 0, "two points").unwrap();
    let acts = ["sign", "relu", "leaky_relu:1/4", "prelu", "abs"];
    for act in acts {
        for loss in [LossKind::Mse, LossKind::Hinge] {
            let mut net = NetworkSpec::dense(2, 1, 1, 1, 0);
            net.activation = act.parse::<Activation>().unwrap();
            net.loss = loss;
            let c = match compile(&net, &ds, &PenaltyConfig::default()) {
                Ok(c) => c,
                Err(e) => {
                    println!("{act:<16} {loss:?}: {e}");
                    continue;
                }
            };
            let r = match solve_exactly(&c.qubo, Some((&c.registry, &c.trace))) {
                Ok(r) => r,
                Err(e) => {
                    println!("{act:<16} {loss:?}: {} bits, {e}", c.qubo.num_vars);
                    continue;
                }
            };
            let p = decode(&r.best.assignment, &c.registry, &net).unwrap();
            let e = evaluate_model(&p, &c.dataset, Task::BinaryClassification).unwrap();
            println!("{act:<16} {loss:?}: {} bits, loss {}, accuracy {:.2}", c.qubo.num_vars, r.best.rescaled, e.accuracy);
        }
    }
    println!("tanh: {}", "tanh".parse::<Activation>().unwrap_err());
}
