//! Compactly supported smooth vector fields on the plane with closed-form
//! first derivatives.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("support radius must be positive, got {0}")]
    Radius(f64),
    #[error("dilation must be positive, got {0}")]
    Dilation(f64),
    #[error("unknown field family `{0}`")]
    Family(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RadialBump,
    OscillatoryBump,
    RigidPerturbation,
    TranslatedBump,
    RandomMixture,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::RadialBump,
        Family::OscillatoryBump,
        Family::RigidPerturbation,
        Family::TranslatedBump,
        Family::RandomMixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::RadialBump => "radial-bump",
            Family::OscillatoryBump => "oscillatory-bump",
            Family::RigidPerturbation => "rigid-perturbation",
            Family::TranslatedBump => "translated-bump",
            Family::RandomMixture => "random-mixture",
        }
    }

    pub fn parse(s: &str) -> Result<Self, FieldError> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| FieldError::Family(s.to_string()))
    }
}

/// Vector profile multiplying a bump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant([f64; 2]),
    /// `(cos k·w, sin k·w)`.
    Wave([f64; 2]),
    /// `(-w₂, w₁)`.
    Rotation,
}

/// `amplitude · φ_R(z - offset) · profile(z - offset)` with
/// `φ_R(w) = exp(1 / (|w|²/R² - 1))` inside the disk of radius `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub radius: f64,
    pub offset: [f64; 2],
    pub amplitude: f64,
    pub profile: Profile,
}

impl Component {
    /// Value and Jacobian `J[i][j] = ∂_j u_i` at `z`.
    fn eval(&self, z: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let w = [z[0] - self.offset[0], z[1] - self.offset[1]];
        let r2 = self.radius * self.radius;
        let s = (w[0] * w[0] + w[1] * w[1]) / r2;
        if s >= 1.0 {
            return ([0.0; 2], [[0.0; 2]; 2]);
        }
        let phi = self.amplitude * (1.0 / (s - 1.0)).exp();
        let c = -phi / ((s - 1.0) * (s - 1.0)) * 2.0 / r2;
        let dphi = [c * w[0], c * w[1]];
        let (v, dv) = match self.profile {
            Profile::Constant(d) => (d, [[0.0; 2]; 2]),
            Profile::Wave(k) => {
                let arg = k[0] * w[0] + k[1] * w[1];
                let (sn, cs) = arg.sin_cos();
                (
                    [cs, sn],
                    [[-sn * k[0], -sn * k[1]], [cs * k[0], cs * k[1]]],
                )
            }
            Profile::Rotation => ([-w[1], w[0]], [[0.0, -1.0], [1.0, 0.0]]),
        };
        let mut jac = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                jac[i][j] = dphi[j] * v[i] + phi * dv[i][j];
            }
        }
        ([phi * v[0], phi * v[1]], jac)
    }
}

/// `u(x) = Q Σ_c comp_c(Qᵀ(x - center) / λ)` for a rotation `Q` by `angle`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    pub family: Family,
    pub label: String,
    pub components: Vec<Component>,
    pub center: [f64; 2],
    pub angle: f64,
    pub dilation: f64,
}

impl fmt::Display for TestField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if self.dilation != 1.0 {
            write!(f, " dilated {}", self.dilation)?;
        }
        if self.angle != 0.0 {
            write!(f, " rotated {}", self.angle)?;
        }
        Ok(())
    }
}

/// Parameters for [`make_test_field`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub family: Family,
    pub radius: f64,
    /// Direction for bumps, wave vector for oscillatory bumps.
    pub vector: [f64; 2],
    pub center: [f64; 2],
    pub seed: u64,
}

impl FieldSpec {
    pub fn new(family: Family) -> Self {
        FieldSpec {
            family,
            radius: 1.0,
            vector: match family {
                Family::OscillatoryBump => [4.0, 0.0],
                _ => [1.0, 0.0],
            },
            center: match family {
                Family::TranslatedBump => [10.0, 0.0],
                _ => [0.0, 0.0],
            },
            seed: 0,
        }
    }

    pub fn radius(mut self, r: f64) -> Self {
        self.radius = r;
        self
    }

    pub fn vector(mut self, v: [f64; 2]) -> Self {
        self.vector = v;
        self
    }

    pub fn center(mut self, c: [f64; 2]) -> Self {
        self.center = c;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub fn make_test_field(spec: &FieldSpec) -> Result<TestField, FieldError> {
    if spec.radius.is_nan() || spec.radius <= 0.0 {
        return Err(FieldError::Radius(spec.radius));
    }
    let single = |profile| {
        vec![Component {
            radius: spec.radius,
            offset: [0.0; 2],
            amplitude: 1.0,
            profile,
        }]
    };
    let (components, label) = match spec.family {
        Family::RadialBump => (
            single(Profile::Constant(spec.vector)),
            format!("radial-bump R={} dir={:?}", spec.radius, spec.vector),
        ),
        Family::OscillatoryBump => (
            single(Profile::Wave(spec.vector)),
            format!("oscillatory-bump R={} k={:?}", spec.radius, spec.vector),
        ),
        Family::RigidPerturbation => (
            single(Profile::Rotation),
            format!("rigid-perturbation R={}", spec.radius),
        ),
        Family::TranslatedBump => (
            single(Profile::Constant(spec.vector)),
            format!("translated-bump R={} at {:?}", spec.radius, spec.center),
        ),
        Family::RandomMixture => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let count = rng.gen_range(2..=4);
            let comps = (0..count)
                .map(|_| {
                    let profile = match rng.gen_range(0..3) {
                        0 => {
                            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                            Profile::Constant([t.cos(), t.sin()])
                        }
                        1 => Profile::Wave([rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)]),
                        _ => Profile::Rotation,
                    };
                    Component {
                        radius: spec.radius * rng.gen_range(0.4..1.0),
                        offset: [
                            spec.radius * rng.gen_range(-1.0..1.0),
                            spec.radius * rng.gen_range(-1.0..1.0),
                        ],
                        amplitude: rng.gen_range(-2.0..2.0),
                        profile,
                    }
                })
                .collect();
            (comps, format!("random-mixture R={} seed={}", spec.radius, spec.seed))
        }
    };
    Ok(TestField {
        family: spec.family,
        label,
        components,
        center: spec.center,
        angle: 0.0,
        dilation: 1.0,
    })
}

impl TestField {
    /// `x ↦ u(x / λ)` around the origin, i.e. the center moves to `λ c`.
    pub fn dilated(&self, lambda: f64) -> Result<Self, FieldError> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(FieldError::Dilation(lambda));
        }
        let mut out = self.clone();
        out.dilation *= lambda;
        out.center = [lambda * self.center[0], lambda * self.center[1]];
        Ok(out)
    }

    /// `x ↦ Q u(Qᵀ x)` for the rotation `Q` by `theta`.
    pub fn rotated(&self, theta: f64) -> Self {
        let mut out = self.clone();
        out.angle += theta;
        let (s, c) = theta.sin_cos();
        out.center = [
            c * self.center[0] - s * self.center[1],
            s * self.center[0] + c * self.center[1],
        ];
        out
    }

    pub fn translated(&self, by: [f64; 2]) -> Self {
        let mut out = self.clone();
        out.center = [self.center[0] + by[0], self.center[1] + by[1]];
        out
    }

    /// Radius of a disk about the origin containing the support.
    pub fn outer_radius(&self) -> f64 {
        let c = self.center[0].hypot(self.center[1]);
        c + self.local_radius()
    }

    /// Radius of a disk about `center` containing the support.
    pub fn local_radius(&self) -> f64 {
        self.components
            .iter()
            .map(|k| (k.offset[0].hypot(k.offset[1]) + k.radius) * self.dilation)
            .fold(0.0, f64::max)
    }

    /// Smallest component radius, which sets the quadrature resolution.
    pub fn feature_size(&self) -> f64 {
        self.components
            .iter()
            .map(|k| {
                let wave = match k.profile {
                    Profile::Wave(v) => 1.0 / (1.0 + v[0].hypot(v[1])).max(1.0),
                    _ => 1.0,
                };
                k.radius * wave.max(0.25)
            })
            .fold(f64::INFINITY, f64::min)
            * self.dilation
    }

    /// Value and Jacobian `J[i][j] = ∂_j u_i`.
    pub fn eval(&self, x: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let (s, c) = self.angle.sin_cos();
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let lam = self.dilation;
        let z = [(c * d[0] + s * d[1]) / lam, (-s * d[0] + c * d[1]) / lam];
        let mut v = [0.0; 2];
        let mut j = [[0.0; 2]; 2];
        for comp in &self.components {
            let (cv, cj) = comp.eval(z);
            for i in 0..2 {
                v[i] += cv[i];
                for k in 0..2 {
                    j[i][k] += cj[i][k];
                }
            }
        }
        let q = [[c, -s], [s, c]];
        let mut u = [0.0; 2];
        let mut du = [[0.0; 2]; 2];
        for i in 0..2 {
            u[i] = q[i][0] * v[0] + q[i][1] * v[1];
            for k in 0..2 {
                // (Q J Qᵀ)[i][k] / λ
                let mut acc = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        acc += q[i][a] * j[a][b] * q[k][b];
                    }
                }
                du[i][k] = acc / lam;
            }
        }
        (u, du)
    }

    pub fn value(&self, x: [f64; 2]) -> [f64; 2] {
        self.eval(x).0
    }

    /// `A(D)u = (∂₁u₁, ∂₂u₁ + ∂₁u₂, ∂₂u₂)`.
    pub fn a_of_d(&self, x: [f64; 2]) -> [f64; 3] {
        let (_, j) = self.eval(x);
        [j[0][0], j[0][1] + j[1][0], j[1][1]]
    }

    /// Frobenius norm of `½(Du + Duᵀ)`.
    pub fn dsym_norm(&self, x: [f64; 2]) -> f64 {
        let (_, j) = self.eval(x);
        let off = 0.5 * (j[0][1] + j[1][0]);
        (j[0][0] * j[0][0] + 2.0 * off * off + j[1][1] * j[1][1]).sqrt()
    }
}
