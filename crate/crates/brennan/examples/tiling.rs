//! Tiled pictures of the bent group: images of the fundamental
//! quadrilateral under reduced words, in the half-plane and disk models.
//!
//! ```bash
//! cargo run --example tiling --release
//! ```
//! Writes `tiling_halfplane.svg`, `tiling_disk.svg` and `tiles.json`.

use brennan::grafting::{render_tiles, theta0, TileArc, TileModel};
use brennan::svg::SvgDocument;
use num_complex::Complex64;

fn draw(tiles: &[brennan::grafting::Tile], clip: f64) -> String {
    let mut doc = SvgDocument::new();
    for tile in tiles {
        for arc in &tile.arcs {
            match arc {
                TileArc::Arc {
                    center,
                    radius,
                    angle_start,
                    angle_end,
                } => {
                    if *radius <= clip * 2.0 {
                        doc.arc(
                            Complex64::new(center[0], center[1]),
                            *radius,
                            *angle_start,
                            *angle_end,
                            "#336699",
                            0.004,
                        );
                    }
                }
                TileArc::Segment { segment } => doc.segment(
                    Complex64::new(segment[0][0], segment[0][1]),
                    Complex64::new(segment[1][0], segment[1][1]),
                    "#336699",
                    0.004,
                ),
            }
        }
    }
    doc.finish()
}

fn main() {
    let depth = 5;
    let clip = 6.0;

    let half = render_tiles(depth, theta0(), TileModel::HalfPlane, clip);
    println!("half-plane model: {} tiles at depth ≤ {depth}", half.len());
    std::fs::write("tiling_halfplane.svg", draw(&half, clip)).unwrap();

    let disk = render_tiles(depth, theta0(), TileModel::Disk, clip);
    std::fs::write("tiling_disk.svg", draw(&disk, clip)).unwrap();

    // arc-list JSON for external plotting
    std::fs::write("tiles.json", serde_json::to_string_pretty(&disk).unwrap()).unwrap();
    println!("wrote tiling_halfplane.svg, tiling_disk.svg, tiles.json");

    // tile count sanity: 1 + Σ 4·3^(k−1)
    let expect: u64 = 1 + (1..=depth).map(brennan::words::count_exact).sum::<u64>();
    assert_eq!(half.len() as u64, expect);
}
