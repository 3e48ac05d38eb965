//! Boundary-orbit polygon construction: random reduced words, Fuchsian
//! shadow sorting, separation/needle filtering.
//!
//! ```bash
//! cargo run --example boundary_polygon --release
//! ```
//! Writes `boundary_polygon.csv` and `boundary_polygon.svg`.

use brennan::grafting::group_pair;
use brennan::polygon::{build_polygon, BuildOptions};
use brennan::svg::SvgDocument;
use num_complex::Complex64;

fn main() {
    let pair = group_pair();
    let opts = BuildOptions::default();
    let poly = build_polygon(300, 12, 42, &pair, &opts).expect("polygon");

    println!("requested 300 words at length ≤ 12");
    println!(
        "kept {} vertices ({} dropped as near-duplicates, {} to restore simplicity)",
        poly.len(),
        poly.dropped_close,
        poly.dropped_crossing
    );
    println!("signed area     = {:.6}", poly.signed_area());
    println!("diameter        = {:.6}", poly.diameter());
    println!("simple          = {}", poly.is_simple());
    println!("contains origin = {}", poly.contains(Complex64::ZERO));

    let alphas = poly.angle_fractions();
    let closure: f64 = alphas.iter().map(|a| 1.0 - a).sum();
    println!("turning-angle closure Σ(1−α) = {closure:.12} (should be 2)");

    let word_lengths: Vec<usize> = poly.words.iter().map(|w| w.len()).collect();
    println!(
        "word lengths: min {} max {}",
        word_lengths.iter().min().unwrap(),
        word_lengths.iter().max().unwrap()
    );

    poly.write_csv(std::path::Path::new("boundary_polygon.csv")).unwrap();

    let mut doc = SvgDocument::new();
    doc.polyline(&poly.vertices, "#cc2200", 0.01, true);
    // unit circle for scale: the domain boundary stays outside it
    let circle: Vec<Complex64> = (0..=128)
        .map(|k| Complex64::from_polar(1.0, k as f64 / 128.0 * std::f64::consts::TAU))
        .collect();
    doc.polyline(&circle, "#bbbbbb", 0.005, false);
    std::fs::write("boundary_polygon.svg", doc.finish()).unwrap();
    println!("wrote boundary_polygon.csv, boundary_polygon.svg");
}
