//! Shell sums over reduced words and their exponential decay rates.
//!
//! Uses a synthetic but exact generator quadruple (the disk-conjugated
//! Fuchsian pair as source, the bent Kleinian pair as target) so the
//! example runs without the mapping stages; the pipeline substitutes the
//! fitted generators in the same slots.
//!
//! ```bash
//! cargo run --example shell_sums --release
//! ```

use brennan::grafting::group_pair;
use brennan::moebius::CayleyDirection;
use brennan::series::{fit_decay, shell_sums, GeneratorQuadruple};

fn main() {
    let pair = group_pair();
    let source_a = pair.fuchsian_a.cayley(CayleyDirection::HalfplaneToDisk);
    let source_b = pair.fuchsian_b.cayley(CayleyDirection::HalfplaneToDisk);
    let gens =
        GeneratorQuadruple::new(source_a, source_b, pair.kleinian_a, pair.kleinian_b).unwrap();

    for p in [3.0, 4.0, 5.0, 6.0] {
        let table = shell_sums(&gens, p, 12).unwrap();
        let fit = fit_decay(&table, 6).unwrap();
        println!(
            "p = {p}: slope {:+.4}  r² {:.5}  S₁₂ = {:.6e}  (compensated vs plain: {:.2e})",
            fit.slope,
            fit.r_squared,
            table.sum(12),
            table.summation_discrepancy()
        );
    }

    println!("\nshell table at p = 4:");
    let table = shell_sums(&gens, 4.0, 12).unwrap();
    print!("{}", table.to_csv());

    // exponent cancellation: with source = target each term is |γ'(0)|²
    let trivial = GeneratorQuadruple::trivial(source_a, source_b).unwrap();
    let t3 = shell_sums(&trivial, 3.0, 10).unwrap();
    let t7 = shell_sums(&trivial, 7.0, 10).unwrap();
    let worst = (0..=10)
        .map(|n| ((t3.sum(n) - t7.sum(n)) / t3.sum(n)).abs())
        .fold(0.0f64, f64::max);
    println!("\ntrivial homomorphism: worst relative S_n^(3) vs S_n^(7) difference = {worst:.2e}");
}
