//! Polar quadrature: Gauss–Legendre per radial cell, trapezoid in angle.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

/// Construction parameters of a [`PolarGrid`] at refinement level 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub center: [f64; 2],
    /// Outer radius; must cover the integrand's support.
    pub r_max: f64,
    /// Uniform radial cell width beyond the geometric zone.
    pub h: f64,
    /// Geometric zone `(r_geo·depth, r_geo]` with ratio `geo_ratio`; `None` disables it.
    pub r_geo: Option<f64>,
    pub geo_ratio: f64,
    pub geo_depth: f64,
    /// Radii where cell boundaries are forced (e.g. edges of an annulus).
    pub breaks: Vec<f64>,
    pub gl_order: usize,
    /// Lower bound on the angular node count; the count also tracks `2π r_max / h`.
    pub min_angles: usize,
}

impl GridSpec {
    pub fn disk(center: [f64; 2], r_max: f64, h: f64) -> Self {
        GridSpec {
            center,
            r_max,
            h,
            r_geo: Some(2.0 * h),
            geo_ratio: 1.05,
            geo_depth: 1e-4,
            breaks: Vec::new(),
            gl_order: 4,
            min_angles: 32,
        }
    }

    pub fn with_breaks(mut self, breaks: &[f64]) -> Self {
        self.breaks = breaks.to_vec();
        self
    }

    /// Deepens the geometric zone so the unresolved inner disk carries a
    /// relative share below `1e-10` of `∫|x|^w`.
    pub fn for_weight(mut self, w: f64) -> Self {
        if w < 0.0 {
            let depth = 1e-10f64.powf(1.0 / (w + 2.0)).max(1e-200);
            self.geo_depth = self.geo_depth.min(depth);
            self.r_geo.get_or_insert(2.0 * self.h);
        }
        self
    }

    pub fn without_geometric(mut self) -> Self {
        self.r_geo = None;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: [f64; 2],
    /// Distance to the grid center.
    pub r: f64,
    pub w: f64,
}

/// Tensor-product polar grid; all weights are positive.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub spec: GridSpec,
    pub level: u32,
    /// `(r, weight including the Jacobian r)`.
    pub radial: Vec<(f64, f64)>,
    pub angles: usize,
}

const CHUNK: usize = 4096;

fn gl_rule(order: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(order).expect("order >= 1");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

impl PolarGrid {
    /// Level `k` halves the geometric log-step and `h` and doubles the angular count.
    pub fn new(spec: GridSpec, level: u32) -> Self {
        assert!(spec.r_max > 0.0 && spec.h > 0.0, "grid radii must be positive");
        let refine = f64::from(1u32 << level);
        let h = spec.h / refine;
        let mut edges = vec![0.0];
        let mut start = 0.0;
        let first_break = spec.breaks.iter().copied().filter(|&b| b > 0.0).fold(f64::INFINITY, f64::min);
        if let Some(rg) = spec.r_geo.map(|rg| rg.min(first_break)).filter(|&rg| rg < spec.r_max) {
            let step = spec.geo_ratio.ln() / refine;
            let cells = ((1.0 / spec.geo_depth).ln() / step).ceil() as usize;
            for i in (0..=cells).rev() {
                edges.push(rg * (-(i as f64) * step).exp());
            }
            start = rg;
        }
        let mut stops: Vec<f64> = spec
            .breaks
            .iter()
            .copied()
            .filter(|&b| b > start && b < spec.r_max)
            .collect();
        stops.push(spec.r_max);
        stops.sort_by(f64::total_cmp);
        for stop in stops {
            let cells = ((stop - start) / h).ceil().max(1.0) as usize;
            for i in 1..=cells {
                edges.push(start + (stop - start) * i as f64 / cells as f64);
            }
            start = stop;
        }
        let rule = gl_rule(spec.gl_order);
        let mut radial = Vec::with_capacity(edges.len() * rule.len());
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            for &(t, w) in &rule {
                let r = a + half * (t + 1.0);
                radial.push((r, w * half * r));
            }
        }
        let wanted = (2.0 * PI * spec.r_max / spec.h).ceil() as usize;
        let base = wanted.max(spec.min_angles).div_ceil(8) * 8;
        PolarGrid {
            angles: base << level,
            spec,
            level,
            radial,
        }
    }

    pub fn refined(&self) -> Self {
        PolarGrid::new(self.spec.clone(), self.level + 1)
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.angles
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, index: usize) -> Node {
        let (i, j) = (index / self.angles, index % self.angles);
        let (r, wr) = self.radial[i];
        let dtheta = 2.0 * PI / self.angles as f64;
        let theta = j as f64 * dtheta;
        Node {
            x: [
                self.spec.center[0] + r * theta.cos(),
                self.spec.center[1] + r * theta.sin(),
            ],
            r,
            w: wr * dtheta,
        }
    }

    /// `Σ w f(node)` for a vector-valued integrand of fixed length `dim`.
    /// Chunks are summed in parallel and combined in a fixed order, so the
    /// result does not depend on the thread count.
    pub fn integrate<F>(&self, dim: usize, f: F) -> Vec<f64>
    where
        F: Fn(&Node, &mut [f64]) + Sync,
    {
        let total = self.len();
        let chunks = total.div_ceil(CHUNK);
        let partial: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![0.0; dim];
                let mut buf = vec![0.0; dim];
                for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                    let node = self.node(idx);
                    buf.iter_mut().for_each(|v| *v = 0.0);
                    f(&node, &mut buf);
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += node.w * b;
                    }
                }
                acc
            })
            .collect();
        let mut out = vec![0.0; dim];
        for p in partial {
            for (a, b) in out.iter_mut().zip(p) {
                *a += b;
            }
        }
        out
    }

    pub fn integrate_scalar<F>(&self, f: F) -> f64
    where
        F: Fn(&Node) -> f64 + Sync,
    {
        self.integrate(1, |n, out| out[0] = f(n))[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disk_area() {
        let g = PolarGrid::new(GridSpec::disk([0.3, -1.0], 2.0, 0.25), 0);
        let area = g.integrate_scalar(|_| 1.0);
        assert!((area - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn refinement_doubles_nodes() {
        let g = PolarGrid::new(GridSpec::disk([0.0, 0.0], 1.0, 0.1), 0);
        let f = g.refined();
        assert_eq!(f.angles, 2 * g.angles);
        assert!(f.radial.len() >= 2 * g.radial.len() - 2 * g.spec.gl_order);
    }

    #[test]
    fn breaks_are_cell_edges() {
        let spec = GridSpec::disk([0.0, 0.0], 3.0, 0.7).with_breaks(&[1.0, 2.0]);
        let g = PolarGrid::new(spec, 0);
        let inside = g.integrate_scalar(|n| if (1.0..=2.0).contains(&n.r) { 1.0 } else { 0.0 });
        assert!((inside - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn deterministic_sums() {
        let g = PolarGrid::new(GridSpec::disk([0.0, 0.0], 1.0, 0.05), 1);
        let f = |n: &Node| (n.x[0] * 3.0).sin() * n.r.powf(-0.5);
        let a = g.integrate_scalar(f);
        let b = g.integrate_scalar(f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn weights_positive(r in 0.5f64..4.0, h in 0.05f64..0.5, level in 0u32..2) {
            let g = PolarGrid::new(GridSpec::disk([0.0, 0.0], r, h), level);
            prop_assert!(g.radial.iter().all(|&(_, w)| w > 0.0));
        }

        #[test]
        fn radial_powers_converge(b in -1.8f64..2.0) {
            // ∫_{|x|<1} |x|^b dx = 2π/(b+2)
            let exact = 2.0 * PI / (b + 2.0);
            let g = PolarGrid::new(GridSpec::disk([0.0, 0.0], 1.0, 0.1).for_weight(b), 0);
            let err0 = (g.integrate_scalar(|n| n.r.powf(b)) - exact).abs();
            let err1 = (g.refined().integrate_scalar(|n| n.r.powf(b)) - exact).abs();
            prop_assert!(err1 <= err0 + 1e-12);
            prop_assert!(err1 / exact < 1e-3);
        }
    }
}
