//! Shell sums over reduced words and the critical-exponent search.
//!
//! For the homomorphism ρ̂ sending the fitted disk-model generators to the
//! target Kleinian pair, the length-n shell is
//! `S_n^{(p)} = Σ_{|γ|=n} |γ′(0)|^p |ρ̂(γ)′(0)|^{2−p}`. The full series
//! converges exactly when p lies below the critical exponent, and the sign
//! of the fitted slope of log S_n decides convergence numerically. This is
//! the hot kernel: a depth-first traversal carrying two running matrix
//! products, parallelized over depth-3 subtree prefixes with a
//! deterministic in-order merge of compensated accumulators.

use crate::grafting::GroupPair;
use crate::kahan::Compensated;
use crate::moebius::{DiskAutomorphism, MoebiusMap, MoebiusError};
use crate::words::{self, PairDfs};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::atomic::{AtomicBool, Ordering};

#[derive(Debug, thiserror::Error)]
pub enum SeriesError {
    #[error("degenerate generator estimate: partial product has d = 0")]
    PoleEncountered,
    #[error("need at least 3 usable shells from n_min, found {0}")]
    InsufficientData(usize),
    #[error("shell sum S_{0} = {1} is not positive; upstream corruption")]
    NonPositiveSum(u32, f64),
    #[error("slopes at the bracket ends do not straddle zero: slope({lo}) = {slope_lo:.4}, slope({hi}) = {slope_hi:.4}")]
    BadBracket {
        lo: f64,
        hi: f64,
        slope_lo: f64,
        slope_hi: f64,
    },
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
}

/// Source generators (fitted, disk-preserving) and their target images
/// under ρ̂.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorQuadruple {
    pub a_hat: MoebiusMap,
    pub b_hat: MoebiusMap,
    pub a_target: MoebiusMap,
    pub b_target: MoebiusMap,
}

impl GeneratorQuadruple {
    /// Checks that the hat pair preserves the unit disk.
    pub fn new(
        a_hat: MoebiusMap,
        b_hat: MoebiusMap,
        a_target: MoebiusMap,
        b_target: MoebiusMap,
    ) -> Result<Self, SeriesError> {
        a_hat.to_disk_automorphism()?;
        b_hat.to_disk_automorphism()?;
        Ok(Self {
            a_hat,
            b_hat,
            a_target,
            b_target,
        })
    }

    /// Assembles the quadruple from fitted automorphisms and the group
    /// pair, conjugating the targets by the translation that moves the
    /// conformal center to the origin (derivatives are all taken at 0).
    pub fn from_fits(
        fit_a: &DiskAutomorphism,
        fit_b: &DiskAutomorphism,
        pair: &GroupPair,
        conformal_center: Complex64,
    ) -> Result<Self, SeriesError> {
        let shift = MoebiusMap::new(
            Complex64::ONE,
            -conformal_center,
            Complex64::ZERO,
            Complex64::ONE,
        )
        .expect("translation is invertible");
        let unshift = shift.inverse();
        Self::new(
            fit_a.to_matrix(),
            fit_b.to_matrix(),
            shift * pair.kleinian_a * unshift,
            shift * pair.kleinian_b * unshift,
        )
    }

    /// The trivial homomorphism: hats equal targets; the shell sums then
    /// collapse to Σ|γ′(0)|² independent of p.
    pub fn trivial(a: MoebiusMap, b: MoebiusMap) -> Result<Self, SeriesError> {
        Self::new(a, b, a, b)
    }
}

/// One shell: word length, word count, compensated and plain sums.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShellEntry {
    pub n: u32,
    pub count: u64,
    pub sum: f64,
    /// Plain (uncompensated) accumulation of the same terms, kept for the
    /// summation-error report.
    pub plain_sum: f64,
}

/// The sequence S_n^{(p)} for one exponent.
#[derive(Debug, Clone, Serialize)]
pub struct ShellSumTable {
    pub p: f64,
    pub max_n: u32,
    pub entries: Vec<ShellEntry>,
}

impl ShellSumTable {
    pub fn sum(&self, n: u32) -> f64 {
        self.entries[n as usize].sum
    }

    /// Worst relative disagreement between compensated and plain sums.
    pub fn summation_discrepancy(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| ((e.sum - e.plain_sum) / e.sum.abs().max(f64::MIN_POSITIVE)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV in the `n,count,S_n,log_S_n` layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,count,S_n,log_S_n\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e}\n",
                e.n,
                e.count,
                e.sum,
                e.sum.ln()
            ));
        }
        out
    }
}

struct DepthAccumulators {
    comp: Vec<Compensated>,
    plain: Vec<f64>,
    counts: Vec<u64>,
}

impl DepthAccumulators {
    fn new(max_n: u32) -> Self {
        Self {
            comp: vec![Compensated::new(); max_n as usize + 1],
            plain: vec![0.0; max_n as usize + 1],
            counts: vec![0; max_n as usize + 1],
        }
    }

    #[inline]
    fn add(&mut self, depth: u32, term: f64) {
        let d = depth as usize;
        self.comp[d].add(term);
        self.plain[d] += term;
        self.counts[d] += 1;
    }

    fn merge(&mut self, other: &DepthAccumulators) {
        for d in 0..self.comp.len() {
            self.comp[d].merge(&other.comp[d]);
            self.plain[d] += other.plain[d];
            self.counts[d] += other.counts[d];
        }
    }
}

#[inline]
fn shell_term(p: f64, m_hat: &MoebiusMap, m_target: &MoebiusMap, pole: &AtomicBool) -> f64 {
    // |1/d²|^p |1/d_t²|^{2−p} = exp(−p ln|d|² − (2−p) ln|d_t|²)
    let nh = m_hat.d.norm_sqr();
    let nt = m_target.d.norm_sqr();
    if nh < 1e-300 || nt < 1e-300 {
        pole.store(true, Ordering::Relaxed);
        return 0.0;
    }
    (-p * nh.ln() - (2.0 - p) * nt.ln()).exp()
}

/// Evaluates S_0..S_max_n by exhaustive reduced-word enumeration.
pub fn shell_sums(
    gens: &GeneratorQuadruple,
    p: f64,
    max_n: u32,
) -> Result<ShellSumTable, SeriesError> {
    assert!(max_n >= 1);
    let dfs = PairDfs::new(&gens.a_hat, &gens.b_hat, &gens.a_target, &gens.b_target);
    let pole = AtomicBool::new(false);

    let split_depth = 3u32.min(max_n);
    let mut acc = DepthAccumulators::new(max_n);
    // shallow words (length ≤ split depth) in canonical order
    dfs.walk(split_depth, &mut |depth, mh, mt| {
        acc.add(depth, shell_term(p, mh, mt, &pole));
    });

    if max_n > split_depth {
        let prefixes = dfs.prefixes(split_depth);
        let subtotals: Vec<DepthAccumulators> = prefixes
            .into_par_iter()
            .map(|(word, mh, mt)| {
                let mut local = DepthAccumulators::new(max_n);
                let last = *word.0.last().expect("prefixes are nonempty");
                dfs.walk_from(mh, mt, Some(last), split_depth, max_n, &mut |depth,
                                                                            h,
                                                                            t| {
                    local.add(depth, shell_term(p, h, t, &pole));
                });
                local
            })
            .collect();
        // deterministic merge in canonical prefix order
        for sub in &subtotals {
            acc.merge(sub);
        }
    }
    if pole.load(Ordering::Relaxed) {
        return Err(SeriesError::PoleEncountered);
    }

    let mut entries = Vec::with_capacity(max_n as usize + 1);
    entries.push(ShellEntry {
        n: 0,
        count: 1,
        sum: 1.0,
        plain_sum: 1.0,
    });
    for n in 1..=max_n {
        let d = n as usize;
        debug_assert_eq!(acc.counts[d], words::count_exact(n));
        entries.push(ShellEntry {
            n,
            count: acc.counts[d],
            sum: acc.comp[d].value(),
            plain_sum: acc.plain[d],
        });
    }
    Ok(ShellSumTable {
        p,
        max_n,
        entries,
    })
}

/// Least-squares fit of log S_n against n over n ≥ n_min.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_min: u32,
}

pub fn fit_decay(table: &ShellSumTable, n_min: u32) -> Result<DecayFit, SeriesError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for e in table.entries.iter().filter(|e| e.n >= n_min) {
        if e.sum <= 0.0 {
            return Err(SeriesError::NonPositiveSum(e.n, e.sum));
        }
        xs.push(e.n as f64);
        ys.push(e.sum.ln());
    }
    if xs.len() < 3 {
        return Err(SeriesError::InsufficientData(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if ss_tot <= f64::MIN_POSITIVE {
        if ss_res <= 1e-20 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        n_min,
    })
}

/// A bisection bracket for the critical exponent.
#[derive(Debug, Clone, Serialize)]
pub struct PStarInterval {
    pub lower: f64,
    pub upper: f64,
    pub slope_at_lower: f64,
    pub slope_at_upper: f64,
    pub tolerance: f64,
    /// Every (p, slope) pair evaluated, in increasing p.
    pub evaluations: Vec<(f64, f64)>,
    /// False when the evaluated slopes were not monotone in p (reported,
    /// not fatal).
    pub slopes_monotone: bool,
}

/// Bisects on the sign of the fitted decay slope.
pub fn estimate_p_star(
    gens: &GeneratorQuadruple,
    max_n: u32,
    n_min: u32,
    p_lo: f64,
    p_hi: f64,
    tol: f64,
) -> Result<PStarInterval, SeriesError> {
    assert!(tol > 0.0 && p_lo < p_hi);
    let slope_at = |p: f64| -> Result<f64, SeriesError> {
        let table = shell_sums(gens, p, max_n)?;
        Ok(fit_decay(&table, n_min)?.slope)
    };
    let mut evaluations: Vec<(f64, f64)> = Vec::new();
    let slope_lo = slope_at(p_lo)?;
    let slope_hi = slope_at(p_hi)?;
    evaluations.push((p_lo, slope_lo));
    evaluations.push((p_hi, slope_hi));
    if !(slope_lo < 0.0 && slope_hi > 0.0) {
        return Err(SeriesError::BadBracket {
            lo: p_lo,
            hi: p_hi,
            slope_lo,
            slope_hi,
        });
    }
    let (mut lo, mut hi) = (p_lo, p_hi);
    let (mut s_lo, mut s_hi) = (slope_lo, slope_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let s_mid = slope_at(mid)?;
        evaluations.push((mid, s_mid));
        if s_mid < 0.0 {
            lo = mid;
            s_lo = s_mid;
        } else {
            hi = mid;
            s_hi = s_mid;
        }
    }
    evaluations.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let slopes_monotone = evaluations.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12);
    Ok(PStarInterval {
        lower: lo,
        upper: hi,
        slope_at_lower: s_lo,
        slope_at_upper: s_hi,
        tolerance: tol,
        evaluations,
        slopes_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grafting::group_pair;
    use crate::moebius::CayleyDirection;

    fn disk_pair() -> (MoebiusMap, MoebiusMap) {
        let pair = group_pair();
        // the Fuchsian pair conjugated to the disk preserves it exactly
        (
            pair.fuchsian_a.cayley(CayleyDirection::HalfplaneToDisk),
            pair.fuchsian_b.cayley(CayleyDirection::HalfplaneToDisk),
        )
    }

    #[test]
    fn shell_zero_and_counts() {
        let (a, b) = disk_pair();
        let gens = GeneratorQuadruple::trivial(a, b).unwrap();
        let table = shell_sums(&gens, 4.0, 5).unwrap();
        assert_eq!(table.sum(0), 1.0);
        for n in 1..=5u32 {
            assert_eq!(table.entries[n as usize].count, words::count_exact(n));
        }
        assert_eq!(table.entries[3].count, 36);
    }

    #[test]
    fn trivial_homomorphism_cancels_exponent() {
        let (a, b) = disk_pair();
        let gens = GeneratorQuadruple::trivial(a, b).unwrap();
        let t3 = shell_sums(&gens, 3.0, 8).unwrap();
        let t7 = shell_sums(&gens, 7.0, 8).unwrap();
        for n in 0..=8usize {
            let (s3, s7) = (t3.entries[n].sum, t7.entries[n].sum);
            assert!(
                ((s3 - s7) / s3).abs() <= 1e-12,
                "n={n}: {s3} vs {s7}"
            );
        }
    }

    /// Naive oracle: materialize every word string, parse it, multiply
    /// matrices left to right, collect terms, and sum in ascending order.
    fn brute_force_shells(gens: &GeneratorQuadruple, p: f64, max_n: u32) -> Vec<f64> {
        fn extend(prefix: &str, out: &mut Vec<String>, max: u32) {
            if prefix.len() as u32 == max {
                return;
            }
            for ch in ['a', 'A', 'b', 'B'] {
                let clash = prefix.chars().last().map(|last| {
                    matches!(
                        (last, ch),
                        ('a', 'A') | ('A', 'a') | ('b', 'B') | ('B', 'b')
                    )
                });
                if clash == Some(true) {
                    continue;
                }
                let w = format!("{prefix}{ch}");
                out.push(w.clone());
                extend(&w, out, max);
            }
        }
        let mut strings = Vec::new();
        extend("", &mut strings, max_n);
        let mut terms: Vec<Vec<f64>> = vec![Vec::new(); max_n as usize + 1];
        for s in strings {
            let word = crate::words::Word::parse(&s).unwrap();
            let mh = word.evaluate(&gens.a_hat, &gens.b_hat);
            let mt = word.evaluate(&gens.a_target, &gens.b_target);
            let term = mh.d.norm_sqr().powf(-p) * mt.d.norm_sqr().powf(-(2.0 - p));
            terms[s.len()].push(term);
        }
        let mut sums = vec![1.0];
        for n in 1..=max_n as usize {
            let mut shell = terms[n].clone();
            shell.sort_by(|a, b| a.partial_cmp(b).unwrap());
            sums.push(shell.iter().sum());
        }
        sums
    }

    #[test]
    fn dfs_matches_brute_force_oracle() {
        let pair = group_pair();
        let (a, b) = disk_pair();
        let gens = GeneratorQuadruple::new(a, b, pair.kleinian_a, pair.kleinian_b).unwrap();
        for p in [2.5, 4.0, 5.5] {
            let table = shell_sums(&gens, p, 5).unwrap();
            let oracle = brute_force_shells(&gens, p, 5);
            for n in 0..=5usize {
                let rel = ((table.entries[n].sum - oracle[n]) / oracle[n]).abs();
                assert!(rel <= 1e-10, "p={p} n={n}: rel {rel}");
            }
        }
    }

    #[test]
    fn decay_fit_exact_line() {
        let entries: Vec<ShellEntry> = (0..=10u32)
            .map(|n| ShellEntry {
                n,
                count: words::count_exact(n),
                sum: (-0.7 * n as f64).exp(),
                plain_sum: (-0.7 * n as f64).exp(),
            })
            .collect();
        let table = ShellSumTable {
            p: 4.0,
            max_n: 10,
            entries,
        };
        let fit = fit_decay(&table, 2).unwrap();
        assert!((fit.slope + 0.7).abs() <= 1e-12);
        assert!((fit.r_squared - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn decay_fit_noisy_growth() {
        // S_n = 5 e^{0.3 n} (1 + small deterministic wobble)
        let entries: Vec<ShellEntry> = (0..=14u32)
            .map(|n| {
                let wobble = 1.0 + 0.01 * ((n as f64) * 2.4).sin();
                let s = 5.0 * (0.3 * n as f64).exp() * wobble;
                ShellEntry {
                    n,
                    count: words::count_exact(n),
                    sum: s,
                    plain_sum: s,
                }
            })
            .collect();
        let table = ShellSumTable {
            p: 4.0,
            max_n: 14,
            entries,
        };
        let fit = fit_decay(&table, 2).unwrap();
        assert!((fit.slope - 0.3).abs() <= 0.02, "slope {}", fit.slope);
    }

    #[test]
    fn insufficient_data_detected() {
        let entries: Vec<ShellEntry> = (0..=3u32)
            .map(|n| ShellEntry {
                n,
                count: 1,
                sum: 1.0,
                plain_sum: 1.0,
            })
            .collect();
        let table = ShellSumTable {
            p: 4.0,
            max_n: 3,
            entries,
        };
        assert!(matches!(
            fit_decay(&table, 2),
            Err(SeriesError::InsufficientData(_))
        ));
    }

    #[test]
    fn trivial_homomorphism_has_no_bracket() {
        let (a, b) = disk_pair();
        let gens = GeneratorQuadruple::trivial(a, b).unwrap();
        assert!(matches!(
            estimate_p_star(&gens, 8, 2, 5.0, 6.0, 0.1),
            Err(SeriesError::BadBracket { .. })
        ));
    }

    #[test]
    fn rotation_conjugation_leaves_terms_invariant() {
        // conjugating both pairs by a rotation about 0 leaves |γ'(0)| as-is
        let pair = group_pair();
        let (a, b) = disk_pair();
        let gens = GeneratorQuadruple::new(a, b, pair.kleinian_a, pair.kleinian_b).unwrap();
        let rot = MoebiusMap::new(
            Complex64::from_polar(1.0, 0.45),
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::from_polar(1.0, -0.45),
        )
        .unwrap();
        let conj = |m: MoebiusMap| rot.inverse() * m * rot;
        let gens_rot = GeneratorQuadruple::new(
            conj(gens.a_hat),
            conj(gens.b_hat),
            conj(gens.a_target),
            conj(gens.b_target),
        )
        .unwrap();
        let t1 = shell_sums(&gens, 4.0, 8).unwrap();
        let t2 = shell_sums(&gens_rot, 4.0, 8).unwrap();
        for n in 0..=8usize {
            let rel = ((t1.entries[n].sum - t2.entries[n].sum) / t1.entries[n].sum).abs();
            assert!(rel <= 1e-9, "n={n} rel={rel}");
        }
        let f1 = fit_decay(&t1, 4).unwrap();
        let f2 = fit_decay(&t2, 4).unwrap();
        assert!((f1.slope - f2.slope).abs() <= 0.01);
    }

    #[test]
    fn parallel_reduction_is_deterministic() {
        let pair = group_pair();
        let (a, b) = disk_pair();
        let gens = GeneratorQuadruple::new(a, b, pair.kleinian_a, pair.kleinian_b).unwrap();
        let t1 = shell_sums(&gens, 5.5, 9).unwrap();
        let t2 = shell_sums(&gens, 5.5, 9).unwrap();
        for (e1, e2) in t1.entries.iter().zip(&t2.entries) {
            assert_eq!(e1.sum.to_bits(), e2.sum.to_bits(), "shell {}", e1.n);
        }
    }
}
