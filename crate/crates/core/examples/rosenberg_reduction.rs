//! Quadratize a cubic polynomial and check that the minimum survives.

use ising_learn::compile::{reduce_order, LambdaPolicy};
use ising_learn::poly::{int, BitId, Monomial, Poly};

fn main() {
    // x0 x1 x2 + x0 x1 + x2 - 2 x0
    let mut p = Poly::zero();
    p.add_term(Monomial::from_bits([BitId(0), BitId(1), BitId(2)]), int(1));
    p.add_term(Monomial::from_bits([BitId(0), BitId(1)]), int(1));
    p.add_term(Monomial::var(BitId(2)), int(1));
    p.add_term(Monomial::var(BitId(0)), int(-2));

    let (q, trace) = reduce_order(&p, &LambdaPolicy::AutoBound, 3).unwrap();
    print!("reduction trace (u1 u2 v lambda):\n{}", trace.to_text());
    print!("{}", q.to_text());

    let orig_min = (0..8u32)
        .map(|x| p.evaluate(&[x & 1 == 1, x & 2 == 2, x & 4 == 4]).unwrap())
        .min()
        .unwrap();
    let qubo_min = (0..1u32 << q.num_vars)
        .map(|x| {
            let bits: Vec<bool> = (0..q.num_vars).map(|j| x >> j & 1 == 1).collect();
            q.rescale(q.energy(&bits))
        })
        .min()
        .unwrap();
    println!("min original {orig_min}, min QUBO {qubo_min}");
}
