//! Closed-form benchmark data on the prisms `Ω_ω`.
//!
//! With `λ = π/ω`, cylindrical coordinates `(r, φ, x3)` and the polynomial
//! factors `P = (1-x1²)(1-x2²)`, `T = x3²(1-x3)²`:
//!
//! ```text
//! ū = -λ r^(λ-1) P T + 2 r^λ sin(λφ) (x1² + x2² - 2) T
//! z̄ =  r^λ sin(λφ) P T
//! q̄ = ū on ∂Ω,   f = -Δū,   u_d = ū + Δz̄,   α = 1
//! ```
//!
//! `z̄` vanishes on ∂Ω and `q̄ = ∂_n z̄` there, so `(q̄, ū, z̄)` solves the
//! optimality system with inactive bounds. Laplacians come from the product
//! rule on [`Jet`]s; `r^λ sin(λφ)` is harmonic.

use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Point, Result};

/// Value, gradient and Laplacian of a function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: Point,
    pub laplacian: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet::constant(0.0);

    pub const fn constant(c: f64) -> Self {
        Self {
            value: c,
            gradient: [0.0; 3],
            laplacian: 0.0,
        }
    }

    /// The coordinate function `x ↦ x[axis]`.
    pub fn coordinate(x: &Point, axis: usize) -> Self {
        let mut gradient = [0.0; 3];
        gradient[axis] = 1.0;
        Self {
            value: x[axis],
            gradient,
            laplacian: 0.0,
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            value: s * self.value,
            gradient: self.gradient.map(|g| s * g),
            laplacian: s * self.laplacian,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            value: self.value + o.value,
            gradient: core::array::from_fn(|d| self.gradient[d] + o.gradient[d]),
            laplacian: self.laplacian + o.laplacian,
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let cross: f64 = (0..3).map(|d| self.gradient[d] * o.gradient[d]).sum();
        Jet {
            value: self.value * o.value,
            gradient: core::array::from_fn(|d| self.value * o.gradient[d] + o.value * self.gradient[d]),
            laplacian: self.value * o.laplacian + o.value * self.laplacian + 2.0 * cross,
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet {
            value: self.value + c,
            ..self
        }
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, j: Jet) -> Jet {
        -j + self
    }
}

/// Convergence rate of the control error predicted for edge angle `ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryRates {
    /// `min(π/ω - 1, 1/2)`.
    pub s_max: f64,
    /// `1/2 + s_max`.
    pub expected_rate: f64,
    /// Whether the estimate carries a `|ln h|` factor (`s_max = 1/2`).
    pub log_factor: bool,
}

pub fn expected_rate(omega: f64) -> Result<TheoryRates> {
    check_omega(omega)?;
    let lambda = PI / omega;
    let s_max = (lambda - 1.0).min(0.5);
    Ok(TheoryRates {
        s_max,
        expected_rate: 0.5 + s_max,
        log_factor: lambda >= 1.5 - 1e-12,
    })
}

fn check_omega(omega: f64) -> Result<()> {
    if !(PI / 2.0 - 1e-12..PI).contains(&omega) {
        return Err(Error::Domain(alloc::format!("edge angle {omega} outside [π/2, π)")));
    }
    Ok(())
}

/// The manufactured optimal state, adjoint and control for one `Ω_ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub omega: f64,
    pub lambda: f64,
    pub alpha: f64,
}

pub fn exact_fields(omega: f64) -> Result<ManufacturedCase> {
    ManufacturedCase::new(omega)
}

impl ManufacturedCase {
    pub fn new(omega: f64) -> Result<Self> {
        check_omega(omega)?;
        Ok(Self {
            omega,
            lambda: PI / omega,
            alpha: 1.0,
        })
    }

    pub fn rates(&self) -> TheoryRates {
        expected_rate(self.omega).expect("validated angle")
    }

    /// Polar radius and angle folded into `[0, ω]`.
    pub fn cylindrical(&self, x: &Point) -> (f64, f64) {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let phi = x[1].atan2(x[0]).clamp(0.0, self.omega);
        (r, phi)
    }

    /// `r^μ` as a function of `(x1, x2)`; `None` on the axis.
    fn radial_power(&self, x: &Point, mu: f64) -> Option<Jet> {
        let (r, _) = self.cylindrical(x);
        if r == 0.0 {
            return None;
        }
        let rm2 = r.powf(mu - 2.0);
        Some(Jet {
            value: r.powf(mu),
            gradient: [mu * rm2 * x[0], mu * rm2 * x[1], 0.0],
            laplacian: mu * mu * rm2,
        })
    }

    /// The harmonic `r^λ sin(λφ)`.
    fn singular_harmonic(&self, x: &Point) -> Option<Jet> {
        let (r, phi) = self.cylindrical(x);
        if r == 0.0 {
            return None;
        }
        let l = self.lambda;
        let scale = l * r.powf(l - 1.0);
        let (s, c) = ((l - 1.0) * phi).sin_cos();
        Some(Jet {
            value: r.powf(l) * (l * phi).sin(),
            gradient: [scale * s, scale * c, 0.0],
            laplacian: 0.0,
        })
    }

    fn factors(x: &Point) -> (Jet, Jet, Jet) {
        let x1 = Jet::coordinate(x, 0);
        let x2 = Jet::coordinate(x, 1);
        let x3 = Jet::coordinate(x, 2);
        let p = (1.0 - x1 * x1) * (1.0 - x2 * x2);
        let q = x1 * x1 + x2 * x2 + (-2.0);
        let t = x3 * x3 * (1.0 - x3) * (1.0 - x3);
        (p, q, t)
    }

    /// Jet of `ū`; zero on the singular edge, where every term vanishes.
    pub fn state_jet(&self, x: &Point) -> Jet {
        let (Some(g), Some(h)) = (self.radial_power(x, self.lambda - 1.0), self.singular_harmonic(x)) else {
            return Jet::ZERO;
        };
        let (p, q, t) = Self::factors(x);
        (g * p * t).scale(-self.lambda) + (h * q * t).scale(2.0)
    }

    /// Jet of `z̄`.
    pub fn adjoint_jet(&self, x: &Point) -> Jet {
        let Some(h) = self.singular_harmonic(x) else {
            return Jet::ZERO;
        };
        let (p, _, t) = Self::factors(x);
        h * p * t
    }

    pub fn state(&self, x: &Point) -> f64 {
        self.state_jet(x).value
    }

    pub fn adjoint(&self, x: &Point) -> f64 {
        self.adjoint_jet(x).value
    }

    pub fn adjoint_gradient(&self, x: &Point) -> Point {
        self.adjoint_jet(x).gradient
    }

    /// `q̄ = ū|∂Ω`.
    pub fn control(&self, x: &Point) -> f64 {
        self.state(x)
    }

    /// `f = -Δū`; set to zero on the singular edge itself, where it blows up
    /// like `r^(λ-3)` but is never sampled by interior quadrature points.
    pub fn source(&self, x: &Point) -> f64 {
        -self.state_jet(x).laplacian
    }

    /// `u_d = ū + Δz̄`.
    pub fn desired(&self, x: &Point) -> f64 {
        self.state(x) + self.adjoint_jet(x).laplacian
    }
}
