//! Radial cutoff `ρ` and the near/far splitting of the Green's kernel.

use crate::greens::KernelEval;

/// `e^{-1/s}` and its first two derivatives, zero for `s <= 0`.
fn psi(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0; 3];
    }
    let f = (-1.0 / s).exp();
    let s2 = s * s;
    [f, f / s2, f * (1.0 - 2.0 * s) / (s2 * s2)]
}

/// Exponential smoothstep `S(s) = ψ(s) / (ψ(s) + ψ(1-s))` with `S', S''`.
pub fn smoothstep(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0; 3];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let [n, n1, n2] = psi(s);
    let [g, g1, g2] = psi(1.0 - s);
    // d/ds ψ(1-s) = -ψ'(1-s)
    let (d, d1, d2) = (n + g, n1 - g1, n2 + g2);
    let num1 = n1 * d - n * d1;
    [
        n / d,
        num1 / (d * d),
        (n2 * d - n * d2) / (d * d) - 2.0 * d1 * num1 / (d * d * d),
    ]
}

/// `ρ = 1` on `[0, 1/4]`, `ρ = 0` on `[1/2, ∞)`, smoothstep in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    pub plateau: f64,
    pub support: f64,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile {
            plateau: 0.25,
            support: 0.5,
        }
    }
}

impl CutoffProfile {
    /// `[ρ(t), ρ'(t), ρ''(t)]`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let width = self.support - self.plateau;
        let [s, s1, s2] = smoothstep((self.support - t) / width);
        [s, -s1 / width, s2 / (width * width)]
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t)[0]
    }

    /// `(sup|ρ'|, sup|ρ''|)` on a fine sample of the transition interval.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        let samples = 20_000;
        (0..=samples)
            .map(|i| {
                let t = self.plateau + (self.support - self.plateau) * i as f64 / samples as f64;
                self.eval(t)
            })
            .fold((0.0f64, 0.0f64), |(a, b), [_, d1, d2]| {
                (a.max(d1.abs()), b.max(d2.abs()))
            })
    }
}

/// `H(x,y) = ρ(|y|/|x|)(G(x) - y·DG(x))` and `K(x,y) = G(x-y) - H(x,y)`.
#[derive(Debug, Clone)]
pub struct KernelSplit {
    pub kernel: KernelEval,
    pub rho: CutoffProfile,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl KernelSplit {
    pub fn new(kernel: KernelEval, rho: CutoffProfile) -> Self {
        KernelSplit { kernel, rho }
    }

    pub fn near(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let t = norm(y) / norm(x);
        let r = self.rho.value(t);
        let mut h = self.kernel.g(x);
        if r == 0.0 {
            return vec![0.0; h.len()];
        }
        for (axis, yi) in y.iter().enumerate() {
            for (a, d) in h.iter_mut().zip(self.kernel.dg(axis, x)) {
                *a -= yi * d;
            }
        }
        h.iter_mut().for_each(|a| *a *= r);
        h
    }

    pub fn far(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.kernel
            .g(&diff)
            .into_iter()
            .zip(self.near(x, y))
            .map(|(g, h)| g - h)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::greens_preset;
    use proptest::prelude::*;

    #[test]
    fn plateau_and_support() {
        let rho = CutoffProfile::default();
        assert_eq!(rho.value(0.0), 1.0);
        assert_eq!(rho.value(0.25), 1.0);
        assert_eq!(rho.value(0.5), 0.0);
        assert_eq!(rho.value(3.0), 0.0);
        let mid = rho.value(0.375);
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_bounds_finite() {
        let (d1, d2) = CutoffProfile::default().derivative_bounds();
        assert!(d1 > 4.0 && d1 < 20.0, "{d1}");
        assert!(d2.is_finite() && d2 > d1);
    }

    #[test]
    fn near_kernel_at_origin_is_g() {
        let (g, _) = greens_preset("dsym-r2").unwrap();
        let split = KernelSplit::new(g.kernel(), CutoffProfile::default());
        let x = [1.5, -0.5];
        assert_eq!(split.near(&x, &[0.0, 0.0]), g.kernel().g(&x));
        assert!(split.far(&x, &[0.0, 0.0]).iter().all(|v| v.abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn smoothstep_derivatives_match_differences(s in 0.05f64..0.95) {
            let h = 1e-5;
            let [_, d1, d2] = smoothstep(s);
            let fd1 = (smoothstep(s + h)[0] - smoothstep(s - h)[0]) / (2.0 * h);
            let fd2 = (smoothstep(s + h)[1] - smoothstep(s - h)[1]) / (2.0 * h);
            prop_assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()));
            prop_assert!((d2 - fd2).abs() < 1e-5 * (1.0 + d2.abs()));
        }

        #[test]
        fn split_sums_to_shifted_kernel(
            r in 0.5f64..10.0, th in 0.0f64..std::f64::consts::TAU, t in 0.0f64..2.0, ph in 0.0f64..std::f64::consts::TAU
        ) {
            let (g, _) = greens_preset("dsym-r2").unwrap();
            let k = g.kernel();
            let split = KernelSplit::new(k.clone(), CutoffProfile::default());
            let x = [r * th.cos(), r * th.sin()];
            let y = [r * t * ph.cos(), r * t * ph.sin()];
            prop_assume!((t - 1.0).abs() > 1e-3 || (th - ph).abs() > 1e-3);
            let diff = [x[0] - y[0], x[1] - y[1]];
            let total: Vec<f64> = split.near(&x, &y).iter().zip(split.far(&x, &y)).map(|(a, b)| a + b).collect();
            for (a, b) in total.iter().zip(k.g(&diff)) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
