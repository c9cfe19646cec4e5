//! Conv, average-pool and batchnorm equalities over encoded variables.

use ising_learn::encoding::{AffineEncoding, EncodingShape};
use ising_learn::poly::{int, rat, BitId, Poly};
use ising_learn::topology::{build_structured_layer_constraints, FeatureMap, StructuredLayer};

fn main() {
    let mut next = 0u32;
    let mut var = |bits: u32, offset: i64| {
        let e = AffineEncoding::new(BitId(next), EncodingShape { num_bits: bits, offset: int(offset), scale: int(1) });
        next += bits;
        e.poly()
    };
    let input = FeatureMap::new(3, 3, (0..9).map(|k| Poly::constant(int(k % 3 - 1))).collect()).unwrap();
    let kernel = FeatureMap::new(2, 2, (0..4).map(|_| var(1, 0)).collect()).unwrap();
    let conv_out = FeatureMap::new(2, 2, (0..4).map(|_| var(3, -4)).collect()).unwrap();
    let conv = build_structured_layer_constraints(1, StructuredLayer::Conv2d { kernel: &kernel, input: &input, bias: None, output: &conv_out }).unwrap();
    println!("conv: {} equalities, first residual polynomial:\n{}", conv.len(), conv.iter().next().unwrap().0.to_text());

    let pooled = FeatureMap::new(1, 1, vec![var(3, -4)]).unwrap();
    let pool = build_structured_layer_constraints(2, StructuredLayer::AvgPool { window: 2, input: &conv_out, output: &pooled }).unwrap();
    println!("avgpool: {} equality\n{}", pool.len(), pool.iter().next().unwrap().0.to_text());

    let normed = FeatureMap::new(1, 1, vec![var(3, -4)]).unwrap();
    let channels = [(pooled.clone(), normed)];
    let bn = build_structured_layer_constraints(3, StructuredLayer::BatchNorm { mean: &[rat(1, 2)], std: &[int(2)], channels: &channels }).unwrap();
    println!("batchnorm: {} equality\n{}", bn.len(), bn.iter().next().unwrap().0.to_text());

    let err = build_structured_layer_constraints(4, StructuredLayer::MaxPool { window: 2 }).unwrap_err();
    println!("maxpool: {err}");
}
