//! Gauss–Legendre and Gauss–Jacobi quadrature rules.
//!
//! Nodes are found by Newton iteration on the orthogonal-polynomial
//! recurrences; weights come from the standard derivative formula. The
//! Jacobi rules integrate `∫ (1−x)^α (1+x)^β f(x) dx` on [−1, 1]; the
//! mapping integrals only need the (0, β) family, which absorbs the
//! endpoint singularity of one integrand factor.

const NEWTON_EPS: f64 = 3.0e-15;
const NEWTON_MAX_ITERS: usize = 60;

/// A quadrature rule: paired nodes and weights on [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Lanczos approximation of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    assert!(x > 0.0, "ln_gamma needs a positive argument");
    if x < 0.5 {
        // reflection Γ(x)Γ(1−x) = π/sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Gauss–Jacobi rule with weight (1−x)^α (1+x)^β.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule {
    assert!(n >= 1);
    assert!(alpha > -1.0 && beta > -1.0, "Jacobi exponents must exceed -1");
    let nf = n as f64;
    let ab = alpha + beta;
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];

    // roots are computed in descending order; initial guesses follow the
    // classical empirical formulas
    for i in 0..n {
        let mut z: f64;
        if i == 0 {
            let an = alpha / nf;
            let bn = beta / nf;
            let r1 = (1.0 + alpha) * (2.78 / (4.0 + nf * nf) + 0.768 * an / nf);
            let r2 = 1.0 + 1.48 * an + 0.96 * bn + 0.452 * an * an + 0.83 * an * bn;
            z = 1.0 - r1 / r2;
        } else if i == 1 {
            let r1 = (4.1 + alpha) / ((1.0 + alpha) * (1.0 + 0.156 * alpha));
            let r2 = 1.0 + 0.06 * (nf - 8.0) * (1.0 + 0.12 * alpha) / nf;
            let r3 = 1.0 + 0.012 * beta * (1.0 + 0.25 * alpha.abs()) / nf;
            z = nodes[0] - (1.0 - nodes[0]) * r1 * r2 * r3;
        } else if i == 2 {
            let r1 = (1.67 + 0.28 * alpha) / (1.0 + 0.37 * alpha);
            let r2 = 1.0 + 0.22 * (nf - 8.0) / nf;
            let r3 = 1.0 + 8.0 * beta / ((6.28 + beta) * nf * nf);
            z = nodes[1] - (nodes[0] - nodes[1]) * r1 * r2 * r3;
        } else if i == n - 2 {
            let r1 = (1.0 + 0.235 * beta) / (0.766 + 0.119 * beta);
            let r2 = 1.0 / (1.0 + 0.639 * (nf - 4.0) / (1.0 + 0.71 * (nf - 4.0)));
            let r3 = 1.0 / (1.0 + 20.0 * alpha / ((7.5 + alpha) * nf * nf));
            z = nodes[i - 1] + (nodes[i - 1] - nodes[i - 2]) * r1 * r2 * r3;
        } else if i == n - 1 {
            let r1 = (1.0 + 0.37 * beta) / (1.67 + 0.28 * beta);
            let r2 = 1.0 / (1.0 + 0.22 * (nf - 8.0) / nf);
            let r3 = 1.0 / (1.0 + 8.0 * alpha / ((6.28 + alpha) * nf * nf));
            z = nodes[i - 1] + (nodes[i - 1] - nodes[i - 2]) * r1 * r2 * r3;
        } else {
            z = 3.0 * nodes[i - 1] - 3.0 * nodes[i - 2] + nodes[i - 3];
        }

        let mut p2 = 0.0;
        let mut pp = 0.0;
        let mut temp = 0.0;
        for _ in 0..NEWTON_MAX_ITERS {
            temp = 2.0 + ab;
            let mut p1 = (alpha - beta + temp * z) / 2.0;
            p2 = 1.0;
            for j in 2..=n {
                let p3 = p2;
                p2 = p1;
                temp = 2.0 * j as f64 + ab;
                let a = 2.0 * j as f64 * (j as f64 + ab) * (temp - 2.0);
                let b = (temp - 1.0) * (alpha * alpha - beta * beta + temp * (temp - 2.0) * z);
                let c = 2.0 * (j as f64 - 1.0 + alpha) * (j as f64 - 1.0 + beta) * temp;
                p1 = (b * p2 - c * p3) / a;
            }
            pp = (nf * (alpha - beta - temp * z) * p1 + 2.0 * (nf + alpha) * (nf + beta) * p2)
                / (temp * (1.0 - z * z));
            let z_old = z;
            z -= p1 / pp;
            if (z - z_old).abs() <= NEWTON_EPS {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = (ln_gamma(alpha + nf) + ln_gamma(beta + nf)
            - ln_gamma(nf + 1.0)
            - ln_gamma(nf + ab + 1.0))
        .exp()
            * temp
            * 2.0f64.powf(ab)
            / (pp * p2);
    }

    nodes.reverse();
    weights.reverse();
    Rule { nodes, weights }
}

/// Gauss–Legendre rule (Jacobi with α = β = 0).
pub fn gauss_legendre(n: usize) -> Rule {
    gauss_jacobi(n, 0.0, 0.0)
}
