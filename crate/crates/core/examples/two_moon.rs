//! Two-moon classification with three sign units.
//!
//! cargo run --release --example two_moon -- [samples] [restarts]

use ising_learn::compile::{compile, PenaltyConfig};
use ising_learn::data::{two_moon, TWO_MOON_DEFAULT_NOISE};
use ising_learn::model::{decode, evaluate_model, Task};
use ising_learn::solver::{solve_sa, AnnealSchedule};
use ising_learn::topology::NetworkSpec;

fn main() {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(20, |s| s.parse().unwrap());
    let restarts = args.next().map_or(20, |s| s.parse().unwrap());
    let ds = two_moon(n, TWO_MOON_DEFAULT_NOISE, 0, 1).unwrap();
    print!("{}", ds.to_text());

    let net = NetworkSpec::dense(2, 3, 2, 1, 1);
    let c = compile(&net, &ds, &PenaltyConfig::default()).unwrap();
    println!("{} bits ({} auxiliary)", c.qubo.num_vars, c.auxiliary_bits());
    let r = solve_sa(&c.qubo, &AnnealSchedule { restarts, ..Default::default() }).unwrap();
    let accs: Vec<f64> = r
        .assignments
        .iter()
        .map(|x| evaluate_model(&decode(x, &c.registry, &net).unwrap(), &c.dataset, Task::BinaryClassification).unwrap().accuracy)
        .collect();
    let best = accs.iter().cloned().fold(0.0, f64::max);
    println!("zero-energy restarts {}/{restarts}, best training accuracy {best:.2}", r.hits);
}
