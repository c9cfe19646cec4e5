//! Anneal the MNIST instance, then solve it exactly and compare.
//!
//! cargo run --release --example anneal_mnist -- [sweeps] [restarts]

use ising_learn::compile::{compile, PenaltyConfig};
use ising_learn::data::{load_mnist, data_dir, select_training_subset};
use ising_learn::model::{canonicalize, decode, evaluate_model, Task};
use ising_learn::solver::{solve_sa, success_probability, AnnealSchedule};
use ising_learn::topology::NetworkSpec;
use ising_learn::workflow::solve_exactly;

fn main() {
    let mut args = std::env::args().skip(1);
    let sweeps = args.next().map(|s| s.parse().unwrap());
    let restarts = args.next().map_or(100, |s| s.parse().unwrap());

    let all = load_mnist(&data_dir(), &Default::default()).unwrap();
    let (train, test) = select_training_subset(&all, 2, 0).unwrap();
    let net = NetworkSpec::dense(2, 1, 4, 1, 0);
    let c = compile(&net, &train, &PenaltyConfig::default()).unwrap();

    let sa = solve_sa(&c.qubo, &AnnealSchedule { sweeps, restarts, ..Default::default() }).unwrap();
    print!("{}", sa.to_text().lines().filter(|l| !l.starts_with("restart")).map(|l| format!("{l}\n")).collect::<String>());
    println!("p_s {}", success_probability(&sa));

    let exact = solve_exactly(&c.qubo, Some((&c.registry, &c.trace))).unwrap();
    println!("exact ({}) rescaled energy {}", exact.solver, exact.best.rescaled);
    for (name, report) in [("sa", &sa), ("exact", &exact)] {
        let p = canonicalize(&decode(&report.best.assignment, &c.registry, &net).unwrap());
        let e = evaluate_model(&p, &test, Task::BinaryClassification).unwrap();
        println!("{name}: test accuracy {:.4} on {} images", e.accuracy, e.total);
        print!("{}", e.confusion_csv().unwrap());
    }
}
