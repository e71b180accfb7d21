//! Quadrature rules for Gaussian expectations `E[g(Z)]`, `Z ~ N(0, 1)`.

use crate::error::{Error, Result};

/// Gauss-Hermite rule rescaled to the standard normal weight, so that
/// `E[g(Z)] ≈ Σ weights[i]·g(nodes[i])`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("Gauss-Hermite order must be positive".into()));
        }
        let (x, w) = physicists_rule(order)?;
        let sqrt_pi = std::f64::consts::PI.sqrt();
        Ok(Self {
            nodes: x.iter().map(|x| std::f64::consts::SQRT_2 * x).collect(),
            weights: w.iter().map(|w| w / sqrt_pi).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Expectation of a vector-valued integrand.
    pub fn expect<const N: usize>(&self, mut g: impl FnMut(f64) -> [f64; N]) -> ([f64; N], [f64; N]) {
        let mut acc = [0.0; N];
        let mut abs = [0.0; N];
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            if *w == 0.0 {
                continue;
            }
            let v = g(*z);
            for c in 0..N {
                acc[c] += w * v[c];
                abs[c] += w * v[c].abs();
            }
        }
        (acc, abs)
    }
}

/// Nodes and weights for `∫ g(x) e^{-x²} dx`. Nodes start from the
/// eigenvalues of the Jacobi matrix and are polished by Newton steps on the
/// orthonormal Hermite recurrence, which also yields the weights.
fn physicists_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let nf = n as f64;
    let mut jacobi = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let off = (i as f64 / 2.0).sqrt();
        jacobi[(i, i - 1)] = off;
        jacobi[(i - 1, i)] = off;
    }
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(|a, b| b.total_cmp(a));
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (i, z0) in guesses.into_iter().enumerate() {
        let mut z = z0;
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..50 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let jf = j as f64;
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-14 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || (z - z0).abs() > 1e-6 * z0.abs().max(1.0) {
            return Err(Error::NumericFailure(format!(
                "Gauss-Hermite node {i} of order {n} did not converge"
            )));
        }
        x[i] = z;
        w[i] = 2.0 / (pp * pp);
    }
    // exact symmetry
    for i in 0..n / 2 {
        let z = 0.5 * (x[i] - x[n - 1 - i]);
        let wi = 0.5 * (w[i] + w[n - 1 - i]);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

// Gauss-Kronrod 15/7 abscissae and weights on [-1, 1] (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    kronrod: [f64; N],
    abs: [f64; N],
    err: [f64; N],
}

fn gk15<const N: usize>(g: &mut impl FnMut(f64) -> [f64; N], a: f64, b: f64) -> Panel<N> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut gs = [0.0; N];
    let mut abs = [0.0; N];
    let fc = g(c);
    for i in 0..N {
        k[i] = WGK[7] * fc[i];
        gs[i] = WG[3] * fc[i];
        abs[i] = WGK[7] * fc[i].abs();
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = g(c - dx);
        let f2 = g(c + dx);
        for i in 0..N {
            k[i] += WGK[j] * (f1[i] + f2[i]);
            abs[i] += WGK[j] * (f1[i].abs() + f2[i].abs());
            if j % 2 == 1 {
                gs[i] += WG[j / 2] * (f1[i] + f2[i]);
            }
        }
    }
    let mut err = [0.0; N];
    for i in 0..N {
        k[i] *= h;
        abs[i] *= h;
        err[i] = (k[i] - gs[i] * h).abs();
    }
    Panel {
        a,
        b,
        kronrod: k,
        abs,
        err,
    }
}

/// Adaptive Gauss-Kronrod integration of a vector integrand over
/// `[breaks[0], breaks.last()]`, never straddling an interior break.
///
/// A panel is accepted when, component-wise, its error estimate is below
/// `rel_tol` times the panel's `∫|g|`, or negligible against the global
/// `∫|g|`. Returns `(∫g, ∫|g|)`.
pub fn adaptive_gk<const N: usize>(
    mut g: impl FnMut(f64) -> [f64; N],
    breaks: &[f64],
    rel_tol: f64,
    max_panels: usize,
) -> Result<([f64; N], [f64; N])> {
    const INITIAL_SPLIT: usize = 4;
    let mut pending = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let step = (b - a) / INITIAL_SPLIT as f64;
        for j in 0..INITIAL_SPLIT {
            let lo = a + step * j as f64;
            let hi = if j + 1 == INITIAL_SPLIT { b } else { lo + step };
            pending.push(gk15(&mut g, lo, hi));
        }
    }
    let mut global_abs = [0.0; N];
    for p in &pending {
        for (g, a) in global_abs.iter_mut().zip(&p.abs) {
            *g += a;
        }
    }
    let mut total = [0.0; N];
    let mut total_abs = [0.0; N];
    let mut evaluated = pending.len();
    while let Some(p) = pending.pop() {
        let ok = (0..N).all(|i| p.err[i] <= rel_tol * p.abs[i] || p.err[i] <= 1e-3 * rel_tol * global_abs[i]);
        let width_exhausted = (p.b - p.a) <= 1e-13 * p.a.abs().max(p.b.abs()).max(1.0);
        if ok || width_exhausted {
            for i in 0..N {
                total[i] += p.kronrod[i];
                total_abs[i] += p.abs[i];
            }
            continue;
        }
        if evaluated + 2 > max_panels {
            return Err(Error::NumericFailure(format!(
                "adaptive quadrature exhausted {max_panels} panels without meeting relative tolerance {rel_tol:e}"
            )));
        }
        let mid = 0.5 * (p.a + p.b);
        pending.push(gk15(&mut g, p.a, mid));
        pending.push(gk15(&mut g, mid, p.b));
        evaluated += 2;
    }
    Ok((total, total_abs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::norm_pdf as phi;

    #[test]
    fn hermite_reproduces_gaussian_moments() {
        for order in [5, 40, 200] {
            let gh = GaussHermite::new(order).unwrap();
            let (m, _) = gh.expect(|z| [1.0, z * z, z.powi(4), (0.3 * z).exp()]);
            assert!((m[0] - 1.0).abs() < 1e-13, "order {order}: {}", m[0]);
            assert!((m[1] - 1.0).abs() < 1e-12);
            assert!((m[2] - 3.0).abs() < 1e-11);
            if order >= 40 {
                assert!((m[3] - (0.045f64).exp()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hermite_nodes_are_symmetric_and_sorted() {
        let gh = GaussHermite::new(200).unwrap();
        let n = gh.order();
        for i in 0..n {
            assert!((gh.nodes()[i] + gh.nodes()[n - 1 - i]).abs() < 1e-12);
        }
        assert!(gh.nodes().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn adaptive_handles_kinks_at_breaks() {
        // E[(Z - 0.3)_+] = φ(0.3) - 0.3·(1 - Φ(0.3))
        let (v, _) = adaptive_gk(|z| [(z - 0.3).max(0.0) * phi(z)], &[-14.0, 0.3, 14.0], 1e-13, 5000).unwrap();
        let exact = phi(0.3) - 0.3 * (1.0 - crate::math::norm_cdf(0.3));
        assert!((v[0] - exact).abs() < 1e-14, "{} vs {exact}", v[0]);
    }

    #[test]
    fn adaptive_reports_exhaustion() {
        let r = adaptive_gk(|z| [(1.0 / (z - 0.123_456)).sin()], &[-1.0, 1.0], 1e-14, 50);
        assert!(matches!(r, Err(Error::NumericFailure(_))));
    }
}
