//! Compile the 4-pixel MNIST 6/9 task and write its artifacts.
//!
//! cargo run --release --example compile_mnist -- [out_dir]

use ising_learn::workflow::{cmd_compile, DataSource, RunConfig};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/compile_mnist".into());
    let net = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/mnist69.net");
    let cfg = RunConfig::new(net, DataSource::Mnist { per_class: 2, seed: 0 }, &out);
    let res = cmd_compile(&cfg).unwrap();
    let c = &res.compiled;
    print!("{}", c.dataset.to_text());
    println!("original {} auxiliary {} total {}", c.original_bits, c.auxiliary_bits(), c.qubo.num_vars);
    for (kind, bits) in c.registry.bits_by_kind() {
        println!("  {:<6} {bits}", kind.tag());
    }
    println!("rho {} couplings {} max |Q| {}", c.rho, c.qubo.coefficients.len(), c.qubo.max_abs_coefficient());
    println!("artifacts in {out}");
}
