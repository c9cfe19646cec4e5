//! Permuting hidden units leaves the function unchanged; the canonical
//! form picks one representative.

use ising_learn::model::{canonicalize, forward, DecodedParameters, LayerParams};
use ising_learn::poly::int;
use ising_learn::topology::Activation;

fn main() {
    let w = |rows: &[&[i64]]| rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect::<Vec<Vec<_>>>();
    let layer = |weights, bias: &[i64]| LayerParams { weights, bias: bias.iter().map(|&b| int(b)).collect(), frozen_bias: false };
    let a = DecodedParameters {
        inputs: 2,
        activation: Activation::Sign,
        layers: vec![layer(w(&[&[1, -1], &[-1, -1], &[1, 1]]), &[0, 2, 1]), layer(w(&[&[1, 0, -1]]), &[0])],
        slopes: vec![],
    };
    let b = DecodedParameters {
        layers: vec![layer(w(&[&[1, 1], &[1, -1], &[-1, -1]]), &[1, 0, 2]), layer(w(&[&[-1, 1, 0]]), &[0])],
        ..a.clone()
    };
    for x in [[-2, 1], [0, 0], [2, -1], [1, 2]] {
        println!("x={x:?} a={} b={}", forward(&a, &x).unwrap()[0], forward(&b, &x).unwrap()[0]);
    }
    let (ca, cb) = (canonicalize(&a), canonicalize(&b));
    print!("{}", ca.to_text());
    println!("same canonical form: {}", ca == cb);
}
