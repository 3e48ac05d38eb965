//! Finite polygonal approximations of the invariant domain boundary.
//!
//! Random reduced words evaluated on the seed give boundary-orbit points;
//! the same words evaluated in the Fuchsian pair on coth(λ/4) ∈ ℝ give real
//! sort keys that linearize the cyclic boundary order. Sorting by key and
//! connecting the dots yields the polygon.

use crate::geom;
use crate::grafting::{quadrilateral_vertices, GroupPair};
use crate::moebius::SpherePoint;
use crate::words::{self, Word};
use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum PolygonError {
    #[error(transparent)]
    Sample(#[from] words::SampleError),
    #[error("sort key for word {word} is not a finite real ({value})")]
    BadSortKey { word: String, value: String },
    #[error("only {kept} vertices survive filtering; a polygon needs at least 3")]
    Degenerate { kept: usize },
    #[error("polygon still self-intersects after dropping {dropped} vertices")]
    NonSimple { dropped: usize },
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Options for [`build_polygon`].
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Minimum pairwise vertex separation; closer vertices are dropped.
    pub sep_min: f64,
    /// Remove local self-crossings by deleting the offending vertices.
    pub untangle: bool,
    /// Interior-angle floor (in units of π): vertices sharper than this,
    /// or more reflex than 2 minus this, are dropped. Needle spikes crowd
    /// their prevertices beyond double precision, so the mapping stage
    /// cannot accept them.
    pub alpha_min: f64,
    /// Give up when more than this fraction of vertices had to be dropped
    /// to restore simplicity.
    pub max_drop_fraction: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            sep_min: 1e-4,
            untangle: true,
            alpha_min: 0.15,
            max_drop_fraction: 0.15,
        }
    }
}

/// An oriented simple polygon approximating the domain boundary, with
/// per-vertex word provenance.
#[derive(Debug, Clone)]
pub struct BoundaryPolygon {
    /// Vertices in counterclockwise order.
    pub vertices: Vec<Complex64>,
    /// Reduced word that produced each vertex.
    pub words: Vec<Word>,
    /// Real Fuchsian sort key of each vertex.
    pub sort_keys: Vec<f64>,
    pub seed: u64,
    pub max_word_length: u32,
    /// Vertices dropped by the separation filter.
    pub dropped_close: usize,
    /// Vertices dropped while restoring simplicity.
    pub dropped_crossing: usize,
}

impl BoundaryPolygon {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        geom::diameter(&self.vertices)
    }

    pub fn signed_area(&self) -> f64 {
        geom::signed_area(&self.vertices)
    }

    pub fn contains(&self, p: Complex64) -> bool {
        geom::point_in_polygon(&self.vertices, p)
    }

    /// Interior angle fractions α_k ∈ (0, 2) at each vertex (angle/π).
    pub fn angle_fractions(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let prev = self.vertices[(k + n - 1) % n];
                let here = self.vertices[k];
                let next = self.vertices[(k + 1) % n];
                let u = prev - here;
                let v = next - here;
                ((u.arg() - v.arg()).rem_euclid(std::f64::consts::TAU)) / std::f64::consts::PI
            })
            .collect()
    }

    /// Indices of any properly crossing non-adjacent edge pair.
    pub fn first_crossing(&self) -> Option<(usize, usize)> {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if geom::segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_simple(&self) -> bool {
        self.first_crossing().is_none()
    }

    /// Writes the `index,word,re,im,sort_key` format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,word,re,im,sort_key\n");
        for (i, ((v, w), k)) in self
            .vertices
            .iter()
            .zip(&self.words)
            .zip(&self.sort_keys)
            .enumerate()
        {
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e},{:.17e}\n",
                i,
                w.to_string(),
                v.re,
                v.im,
                k
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, PolygonError> {
        let mut vertices = Vec::new();
        let mut words_v = Vec::new();
        let mut sort_keys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(PolygonError::Csv {
                    line: lineno + 1,
                    msg: format!("expected 5 fields, got {}", fields.len()),
                });
            }
            let word = Word::parse(fields[1]).ok_or(PolygonError::Csv {
                line: lineno + 1,
                msg: format!("bad word {:?}", fields[1]),
            })?;
            let parse = |s: &str| -> Result<f64, PolygonError> {
                s.parse().map_err(|e| PolygonError::Csv {
                    line: lineno + 1,
                    msg: format!("{e}"),
                })
            };
            vertices.push(Complex64::new(parse(fields[2])?, parse(fields[3])?));
            words_v.push(word);
            sort_keys.push(parse(fields[4])?);
        }
        if vertices.len() < 3 {
            return Err(PolygonError::Degenerate {
                kept: vertices.len(),
            });
        }
        Ok(Self {
            vertices,
            words: words_v,
            sort_keys,
            seed: 0,
            max_word_length: 0,
            dropped_close: 0,
            dropped_crossing: 0,
        })
    }

    /// Copy with one vertex removed and simplicity restored (the new chord
    /// can cross other edges, so the untangling pass runs again).
    pub fn without_vertex(&self, idx: usize, opts: &BuildOptions) -> Result<Self, PolygonError> {
        if self.len() <= 3 {
            return Err(PolygonError::Degenerate { kept: self.len() });
        }
        let mut kept: Vec<(f64, Complex64, Word)> = (0..self.len())
            .filter(|&k| k != idx)
            .map(|k| (self.sort_keys[k], self.vertices[k], self.words[k].clone()))
            .collect();
        let mut dropped = self.dropped_crossing + 1;
        let budget = dropped + ((kept.len() as f64) * opts.max_drop_fraction).ceil() as usize;
        loop {
            let verts: Vec<Complex64> = kept.iter().map(|r| r.1).collect();
            match first_crossing(&verts) {
                None => break,
                Some((i, j)) => {
                    let removed = j - i;
                    if dropped + removed > budget || kept.len() - removed < 3 {
                        return Err(PolygonError::NonSimple { dropped });
                    }
                    kept.drain(i + 1..j + 1);
                    dropped += removed;
                }
            }
        }
        Ok(Self {
            vertices: kept.iter().map(|r| r.1).collect(),
            words: kept.iter().map(|r| r.2.clone()).collect(),
            sort_keys: kept.iter().map(|r| r.0).collect(),
            seed: self.seed,
            max_word_length: self.max_word_length,
            dropped_close: self.dropped_close,
            dropped_crossing: dropped,
        })
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<(), PolygonError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &std::path::Path) -> Result<Self, PolygonError> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Draws `n` distinct reduced words of length ≤ `max_len` uniformly.
pub fn sample_words(n: usize, max_len: u32, seed: u64) -> Result<Vec<Word>, words::SampleError> {
    words::sample_words(n, max_len, seed)
}

/// Procedure-1 polygon: sample words, sort by the Fuchsian shadow of
/// coth(λ/4), evaluate the Kleinian orbit of the pair's seed, filter, and
/// orient counterclockwise.
pub fn build_polygon(
    n: usize,
    max_len: u32,
    seed: u64,
    pair: &GroupPair,
    opts: &BuildOptions,
) -> Result<BoundaryPolygon, PolygonError> {
    let sampled = words::sample_words(n, max_len, seed)?;
    let sort_base = Complex64::new(quadrilateral_vertices()[3], 0.0);

    let mut rows: Vec<(f64, Complex64, Word)> = Vec::with_capacity(sampled.len());
    for w in sampled {
        let mf = w.evaluate(&pair.fuchsian_a, &pair.fuchsian_b);
        let key = match mf.apply(SpherePoint::Finite(sort_base)) {
            SpherePoint::Finite(z) if z.im.abs() <= 1e-9 && z.re.is_finite() => z.re,
            other => {
                return Err(PolygonError::BadSortKey {
                    word: w.to_string(),
                    value: other.to_string(),
                })
            }
        };
        let mk = w.evaluate(&pair.kleinian_a, &pair.kleinian_b);
        let v = match mk.apply(SpherePoint::Finite(pair.seed)) {
            SpherePoint::Finite(z) => z,
            SpherePoint::Infinity => {
                return Err(PolygonError::BadSortKey {
                    word: w.to_string(),
                    value: "∞".into(),
                })
            }
        };
        rows.push((key, v, w));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // separation filter; words differing by a trailing power of the
    // A-generator produce identical vertices, which land here as zero
    // distances
    let mut kept: Vec<(f64, Complex64, Word)> = Vec::with_capacity(rows.len());
    let mut dropped_close = 0usize;
    for row in rows {
        if kept
            .last()
            .map(|(_, v, _)| (v - row.1).norm() >= opts.sep_min)
            .unwrap_or(true)
        {
            kept.push(row);
        } else {
            dropped_close += 1;
        }
    }
    while kept.len() > 1
        && (kept.last().unwrap().1 - kept[0].1).norm() < opts.sep_min
    {
        kept.pop();
        dropped_close += 1;
    }
    if kept.len() < 3 {
        return Err(PolygonError::Degenerate { kept: kept.len() });
    }

    let mut dropped_crossing = 0usize;
    if opts.untangle {
        let budget = ((kept.len() as f64) * opts.max_drop_fraction).ceil() as usize;
        'outer: loop {
            // crossings first: a tight crossing pair encloses a local
            // loop that the in-between chain removal unwinds; wide pairs
            // lose the single sharpest of the four involved vertices
            loop {
                let verts: Vec<Complex64> = kept.iter().map(|r| r.1).collect();
                match first_crossing(&verts) {
                    None => break,
                    Some((i, j)) => {
                        let removed = if j - i <= 5 { j - i } else { 1 };
                        if dropped_crossing + removed > budget || kept.len() - removed < 3 {
                            return Err(PolygonError::NonSimple {
                                dropped: dropped_crossing,
                            });
                        }
                        if j - i <= 5 {
                            kept.drain(i + 1..j + 1);
                        } else {
                            let n = verts.len();
                            let angle_of = |k: usize| {
                                let u = verts[(k + n - 1) % n] - verts[k];
                                let v = verts[(k + 1) % n] - verts[k];
                                let alpha = ((u.arg() - v.arg())
                                    .rem_euclid(std::f64::consts::TAU))
                                    / std::f64::consts::PI;
                                (alpha - 1.0).abs()
                            };
                            let victim = [i, (i + 1) % n, j, (j + 1) % n]
                                .into_iter()
                                .max_by(|&x, &y| {
                                    angle_of(x).partial_cmp(&angle_of(y)).unwrap()
                                })
                                .unwrap();
                            kept.remove(victim);
                        }
                        dropped_crossing += removed;
                    }
                }
            }
            // then the sharpest needle vertex, if any; removal can create
            // new crossings, so go around again until stable
            let verts: Vec<Complex64> = kept.iter().map(|r| r.1).collect();
            match worst_needle(&verts, opts.alpha_min) {
                None => break 'outer,
                Some(idx) => {
                    if dropped_crossing + 1 > budget || kept.len() - 1 < 3 {
                        return Err(PolygonError::NonSimple {
                            dropped: dropped_crossing,
                        });
                    }
                    kept.remove(idx);
                    dropped_crossing += 1;
                }
            }
        }
    }

    let mut vertices: Vec<Complex64> = kept.iter().map(|r| r.1).collect();
    let mut words_v: Vec<Word> = kept.iter().map(|r| r.2.clone()).collect();
    let mut sort_keys: Vec<f64> = kept.iter().map(|r| r.0).collect();
    if geom::signed_area(&vertices) < 0.0 {
        vertices.reverse();
        words_v.reverse();
        sort_keys.reverse();
    }

    let poly = BoundaryPolygon {
        vertices,
        words: words_v,
        sort_keys,
        seed,
        max_word_length: max_len,
        dropped_close,
        dropped_crossing,
    };
    if !poly.is_simple() {
        return Err(PolygonError::NonSimple {
            dropped: dropped_crossing,
        });
    }
    Ok(poly)
}

/// Index of the vertex whose interior angle deviates most beyond the
/// needle floor, if any.
fn worst_needle(v: &[Complex64], alpha_min: f64) -> Option<usize> {
    let n = v.len();
    let mut worst: Option<(f64, usize)> = None;
    for k in 0..n {
        let u = v[(k + n - 1) % n] - v[k];
        let w = v[(k + 1) % n] - v[k];
        let alpha = ((u.arg() - w.arg()).rem_euclid(std::f64::consts::TAU)) / std::f64::consts::PI;
        let excess = (alpha_min - alpha).max(alpha - (2.0 - alpha_min));
        if excess > 0.0 && worst.map(|(e, _)| excess > e).unwrap_or(true) {
            worst = Some((excess, k));
        }
    }
    worst.map(|(_, k)| k)
}

fn first_crossing(v: &[Complex64]) -> Option<(usize, usize)> {
    let n = v.len();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if geom::segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Some((i, j));
            }
        }
    }
    None
}
