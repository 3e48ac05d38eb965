//! Small planar-geometry helpers shared by the polygon and grafting code.

use num_complex::Complex64;

/// Twice the signed area of the triangle (o, a, b); positive when the turn
/// o→a→b is counterclockwise.
pub fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Signed area of a closed polygon (shoelace); positive for ccw orientation.
pub fn signed_area(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        s += p.re * q.im - q.re * p.im;
    }
    s / 2.0
}

/// True when the open segments (p1, p2) and (p3, p4) cross properly
/// (shared endpoints and touching configurations do not count).
pub fn segments_cross(p1: Complex64, p2: Complex64, p3: Complex64, p4: Complex64) -> bool {
    let d1 = cross(p3, p4, p1);
    let d2 = cross(p3, p4, p2);
    let d3 = cross(p1, p2, p3);
    let d4 = cross(p1, p2, p4);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(pts: &[Complex64], p: Complex64) -> bool {
    let n = pts.len();
    let mut inside = false;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if x > p.re {
                inside = !inside;
            }
        }
    }
    inside
}

/// Largest pairwise distance between the points.
pub fn diameter(pts: &[Complex64]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            d = d.max((pts[i] - pts[j]).norm());
        }
    }
    d
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let one_sided = |xs: &[Complex64], ys: &[Complex64]| -> f64 {
        xs.iter()
            .map(|x| {
                ys.iter()
                    .map(|y| (x - y).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Center and radius of the circle through three points, or `None` when
/// they are collinear to within `tol` (relative to the spread).
pub fn circle_through(
    p: Complex64,
    q: Complex64,
    r: Complex64,
    tol: f64,
) -> Option<(Complex64, f64)> {
    let d = 2.0 * cross(p, q, r);
    let scale = (q - p).norm().max((r - q).norm()).max((p - r).norm());
    if d.abs() <= tol * scale * scale {
        return None;
    }
    let p2 = p.norm_sqr();
    let q2 = q.norm_sqr();
    let r2 = r.norm_sqr();
    let ux = (p2 * (q.im - r.im) + q2 * (r.im - p.im) + r2 * (p.im - q.im)) / d;
    let uy = (p2 * (r.re - q.re) + q2 * (p.re - r.re) + r2 * (q.re - p.re)) / d;
    let center = Complex64::new(ux, uy);
    Some((center, (p - center).norm()))
}
