//! Möbius algebra of the grafted group: generators, commutators,
//! classification, and the half-plane/disk change of model.
//!
//! ```bash
//! cargo run --example group_algebra --release
//! ```

use brennan::grafting::{self, GraftingParams};
use brennan::moebius::{CayleyDirection, MoebiusMap, SpherePoint};
use num_complex::Complex64;

fn show(name: &str, m: &MoebiusMap) {
    println!(
        "{name} = [[{:.6} {:+.6}i, {:.6} {:+.6}i], [{:.6} {:+.6}i, {:.6} {:+.6}i]]",
        m.a.re, m.a.im, m.b.re, m.b.im, m.c.re, m.c.im, m.d.re, m.d.im
    );
    println!(
        "    det = {:.3e} + {:.3e}i   tr² = {:.6} {:+.3e}i   class = {:?}",
        m.det().re - 1.0,
        m.det().im,
        m.trace_sq().re,
        m.trace_sq().im,
        m.classify()
    );
}

fn main() {
    let params = GraftingParams::new(grafting::theta0());
    println!(
        "translation length λ = {:.12}  (cosh λ/2 = {:.12})",
        params.lambda_len,
        (params.lambda_len / 2.0).cosh()
    );
    println!("bending angle θ₀ = {:.12}\n", params.theta);

    let a = grafting::generator_a();
    let b0 = grafting::generator_b(0.0);
    let bt = grafting::generator_b(grafting::theta0());
    show("A", &a);
    show("B(0)", &b0);
    show("B(θ₀)", &bt);

    println!("\nonce-punctured-torus relator (commutators should be parabolic):");
    show("[A, B(0)]", &a.commutator(&b0));
    show("[A, B(θ₀)]", &a.commutator(&bt));

    println!("\nderivatives at 0:");
    let d0 = a.deriv_at_zero().unwrap();
    println!("A'(0)      = {:.10} {:+.10}i", d0.re, d0.im);
    println!("A(0)       = {}", a.apply(SpherePoint::Finite(Complex64::ZERO)));

    println!("\nchange of model (conjugation by η(z) = i(1+z)/(1−z)):");
    let a_disk = a.cayley(CayleyDirection::HalfplaneToDisk);
    show("η⁻¹∘A∘η", &a_disk);
    for z in [Complex64::ONE, Complex64::I, -Complex64::ONE] {
        let w = a_disk.apply(SpherePoint::Finite(z));
        match w {
            SpherePoint::Finite(w) => {
                println!("  |η⁻¹Aη({z})| = {:.12}  (unit circle preserved)", w.norm())
            }
            SpherePoint::Infinity => println!("  η⁻¹Aη({z}) = ∞"),
        }
    }

    let pair = grafting::group_pair();
    println!("\nresolved boundary seed: {:.12} {:+.12}i", pair.seed.re, pair.seed.im);
    println!("seed convention: {:?}", pair.resolution);
}
