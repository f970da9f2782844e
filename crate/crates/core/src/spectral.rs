//! Dirichlet sine basis on an interval, coefficient/grid transforms and the
//! forcing constants `B0`, `B1`, `M`.
//!
//! The interval `(0, L)` carries the orthonormal eigenfunctions
//! `e_j(x) = sqrt(2/L) sin(j pi x / L)` with eigenvalues `alpha_j = (j pi / L)^2`.
//! Physical-space work happens on the interior points of a uniform partition
//! with `M + 1` cells, where the trapezoid rule (endpoint values vanish) is
//! exact for every trigonometric polynomial of frequency below `2(M + 1)`.
//! With `M >= 4N` this makes the Galerkin projection of `|u|^2 u` exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex Galerkin coefficients `u_j = (u, e_j) + i (u, i e_j)`, `j = 1..N`.
///
/// Index 0 holds mode `j = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    pub fn zeros(modes: usize) -> Self {
        StateVector(vec![Complex64::new(0.0, 0.0); modes])
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        StateVector(coeffs)
    }

    /// The unit vector `e_j` (1-based mode index).
    pub fn mode(modes: usize, j: usize) -> Self {
        let mut v = Self::zeros(modes);
        v.0[j - 1] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.0
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `||u||^2 = sum |u_j|^2` (Parseval on the truncated span).
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Real `L^2` inner product `Re int u conj(v)`.
    pub fn inner(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Dirichlet eigenbasis of `(0, L)` truncated at `N` modes, together with the
/// collocation grid used for pointwise nonlinearities.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    length: f64,
    modes: usize,
    alphas: Vec<f64>,
    grid: Vec<f64>,
    weight: f64,
    // e_j(x_m), row-major by mode
    sines: Vec<f64>,
    // e_j'(x_m), row-major by mode
    cosines: Vec<f64>,
}

impl SpectralBasis {
    /// Alias-free basis: requires `grid_points >= 4 * modes`.
    pub fn new(length: f64, modes: usize, grid_points: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::config("length", format!("must be positive, got {length}")));
        }
        if modes == 0 {
            return Err(Error::config("modes", "must be at least 1"));
        }
        if grid_points < 4 * modes {
            return Err(Error::config(
                "grid",
                format!("needs at least 4 * modes = {} points, got {grid_points}", 4 * modes),
            ));
        }
        Ok(Self::build(length, modes, grid_points))
    }

    /// Basis with the default grid of `4N` points.
    pub fn with_default_grid(length: f64, modes: usize) -> Result<Self> {
        Self::new(length, modes, 4 * modes)
    }

    /// Square collocation basis with as many modes as grid points.
    ///
    /// The coefficient/grid maps are mutually inverse orthogonal transforms
    /// (a scaled DST-I), so pointwise operations followed by analysis preserve
    /// the discrete `L^2` norm exactly. Cubic projections alias in this basis.
    pub fn collocation(length: f64, points: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::config("length", format!("must be positive, got {length}")));
        }
        if points == 0 {
            return Err(Error::config("modes", "must be at least 1"));
        }
        Ok(Self::build(length, points, points))
    }

    fn build(length: f64, modes: usize, grid_points: usize) -> Self {
        let weight = length / (grid_points + 1) as f64;
        let grid: Vec<f64> = (1..=grid_points).map(|m| m as f64 * weight).collect();
        let norm = (2.0 / length).sqrt();
        let alphas = (1..=modes)
            .map(|j| (j as f64 * PI / length).powi(2))
            .collect();
        let mut sines = Vec::with_capacity(modes * grid_points);
        let mut cosines = Vec::with_capacity(modes * grid_points);
        for j in 1..=modes {
            let k = j as f64 * PI / length;
            // sin(j pi m / (M+1)) from the integer phase keeps the table exact to round-off
            for m in 1..=grid_points {
                let phase = PI * ((j * m) % (2 * (grid_points + 1))) as f64 / (grid_points + 1) as f64;
                sines.push(norm * phase.sin());
                cosines.push(norm * k * phase.cos());
            }
        }
        SpectralBasis {
            length,
            modes,
            alphas,
            grid,
            weight,
            sines,
            cosines,
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    /// Dirichlet eigenvalues `alpha_j`, `j = 1..N`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Uniform trapezoid weight `L / (M + 1)` of each interior grid point.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn is_collocation(&self) -> bool {
        self.grid.len() == self.modes
    }

    /// `e_j(x_m)` for 1-based `j` and 0-based grid index `m`.
    pub fn eigenfunction_at(&self, j: usize, m: usize) -> f64 {
        self.sines[(j - 1) * self.grid.len() + m]
    }

    /// `e_j(x)` evaluated at an arbitrary abscissa.
    pub fn eigenfunction(&self, j: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (j as f64 * PI * x / self.length).sin()
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.len() != self.modes {
            return Err(Error::SizeMismatch {
                what: "state vector",
                expected: self.modes,
                found: state.len(),
            });
        }
        Ok(())
    }

    fn synthesize(&self, table: &[f64], state: &StateVector, out: &mut [Complex64]) {
        let m_len = self.grid.len();
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (j, c) in state.coeffs().iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let row = &table[j * m_len..(j + 1) * m_len];
            for (v, &s) in out.iter_mut().zip(row) {
                *v += c * s;
            }
        }
    }

    /// `u(x_m) = sum_j u_j e_j(x_m)` on the collocation grid.
    pub fn to_physical(&self, state: &StateVector) -> Result<Vec<Complex64>> {
        self.check_state(state)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.synthesize(&self.sines, state, &mut out);
        Ok(out)
    }

    /// Allocation-free variant of [`to_physical`](Self::to_physical).
    pub fn to_physical_into(&self, state: &StateVector, out: &mut [Complex64]) -> Result<()> {
        self.check_state(state)?;
        if out.len() != self.grid.len() {
            return Err(Error::SizeMismatch {
                what: "physical field",
                expected: self.grid.len(),
                found: out.len(),
            });
        }
        self.synthesize(&self.sines, state, out);
        Ok(())
    }

    /// Derivative `u_x(x_m)` synthesized from the cosine modes.
    pub fn derivative_to_physical(&self, state: &StateVector) -> Result<Vec<Complex64>> {
        self.check_state(state)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.synthesize(&self.cosines, state, &mut out);
        Ok(out)
    }

    /// Quadrature projections `(f, e_j) + i (f, i e_j)` onto the first `N` modes.
    pub fn to_coefficients(&self, field: &[Complex64]) -> Result<StateVector> {
        let mut out = StateVector::zeros(self.modes);
        self.to_coefficients_into(field, &mut out)?;
        Ok(out)
    }

    pub fn to_coefficients_into(&self, field: &[Complex64], out: &mut StateVector) -> Result<()> {
        let m_len = self.grid.len();
        if field.len() != m_len {
            return Err(Error::SizeMismatch {
                what: "physical field",
                expected: m_len,
                found: field.len(),
            });
        }
        self.check_state(out)?;
        for (j, c) in out.coeffs_mut().iter_mut().enumerate() {
            let row = &self.sines[j * m_len..(j + 1) * m_len];
            let mut acc = Complex64::new(0.0, 0.0);
            for (f, &s) in field.iter().zip(row) {
                acc += f * s;
            }
            *c = acc * self.weight;
        }
        Ok(())
    }

    /// Trapezoid integral of a grid function (endpoint values are zero).
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        self.weight * values.into_iter().sum::<f64>()
    }

    /// `||u_x||^2` by trapezoid quadrature of the synthesized derivative on
    /// the closed grid; the endpoints carry half weight since `u_x` need not
    /// vanish there.
    pub fn gradient_norm_sq_quadrature(&self, state: &StateVector) -> Result<f64> {
        self.check_state(state)?;
        let interior: f64 = self
            .derivative_to_physical(state)?
            .iter()
            .map(|v| v.norm_sqr())
            .sum();
        let norm = (2.0 / self.length).sqrt();
        let mut left = Complex64::new(0.0, 0.0);
        let mut right = Complex64::new(0.0, 0.0);
        for (j, c) in state.coeffs().iter().enumerate() {
            let k = (j + 1) as f64 * PI / self.length;
            left += c * norm * k;
            right += c * norm * k * if j % 2 == 0 { -1.0 } else { 1.0 };
        }
        Ok(self.weight * (interior + 0.5 * (left.norm_sqr() + right.norm_sqr())))
    }

    /// `||u||^2` by grid quadrature of the synthesized field.
    pub fn norm_sq_quadrature(&self, state: &StateVector) -> Result<f64> {
        let field = self.to_physical(state)?;
        Ok(self.integrate(field.iter().map(|v| v.norm_sqr())))
    }
}

/// Forcing coefficients `b_j` with the derived constants
/// `B0 = sum b_j^2`, `B1 = sum alpha_j b_j^2` and
/// `M = max_x sum b_j^2 e_j(x)^2` (maximum over the collocation grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub b: Vec<f64>,
    pub b0: f64,
    pub b1: f64,
    pub m_const: f64,
}

impl NoiseSpec {
    pub fn new(basis: &SpectralBasis, b: Vec<f64>) -> Result<Self> {
        if b.len() != basis.modes() {
            return Err(Error::SizeMismatch {
                what: "forcing coefficients",
                expected: basis.modes(),
                found: b.len(),
            });
        }
        if let Some((j, v)) = b.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::config(
                "forcing",
                format!("b_{} = {v} must be finite and nonnegative", j + 1),
            ));
        }
        let b0 = b.iter().map(|v| v * v).sum();
        let b1 = b.iter().zip(basis.alphas()).map(|(v, a)| a * v * v).sum();
        let m_len = basis.grid_len();
        let m_const = (0..m_len)
            .map(|m| {
                b.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let e = basis.eigenfunction_at(j + 1, m);
                        v * v * e * e
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        Ok(NoiseSpec { b, b0, b1, m_const })
    }

    pub fn zero(basis: &SpectralBasis) -> Self {
        NoiseSpec {
            b: vec![0.0; basis.modes()],
            b0: 0.0,
            b1: 0.0,
            m_const: 0.0,
        }
    }

    pub fn is_forced(&self) -> bool {
        self.b.iter().any(|&v| v > 0.0)
    }

    /// `sum_j b_j^2 |u_j|^2`, i.e. the mirrored sum `sum_{j in Z*} b_j^2 u_j^2`.
    pub fn forced_weight(&self, state: &StateVector) -> f64 {
        self.b
            .iter()
            .zip(state.coeffs())
            .map(|(b, c)| b * b * c.norm_sqr())
            .sum()
    }

    /// `B0^{-1} sqrt(B1 + M B0)`, the shape of the small-ball constant.
    pub fn small_ball_shape(&self) -> f64 {
        if self.b0 == 0.0 {
            f64::INFINITY
        } else {
            (self.b1 + self.m_const * self.b0).sqrt() / self.b0
        }
    }
}

/// `B0, B1, M` for a coefficient sequence.
pub fn noise_constants(basis: &SpectralBasis, b: &[f64]) -> Result<NoiseSpec> {
    NoiseSpec::new(basis, b.to_vec())
}

/// Named families of forcing coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ForcingProfile {
    /// `b_j = amplitude * j^{-exponent}`
    Power { amplitude: f64, exponent: f64 },
    /// `b_j = amplitude * ratio^j`
    Geometric { amplitude: f64, ratio: f64 },
    /// Only mode `mode` is forced.
    Single { mode: usize, amplitude: f64 },
    Zero,
    List(Vec<f64>),
}

impl Default for ForcingProfile {
    fn default() -> Self {
        ForcingProfile::Power {
            amplitude: 1.0,
            exponent: 2.0,
        }
    }
}

impl ForcingProfile {
    pub fn coefficients(&self, modes: usize) -> Result<Vec<f64>> {
        let b = match self {
            ForcingProfile::Power { amplitude, exponent } => (1..=modes)
                .map(|j| amplitude * (j as f64).powf(-exponent))
                .collect(),
            ForcingProfile::Geometric { amplitude, ratio } => (1..=modes)
                .map(|j| amplitude * ratio.powi(j as i32))
                .collect(),
            ForcingProfile::Single { mode, amplitude } => {
                if *mode == 0 || *mode > modes {
                    return Err(Error::config(
                        "forcing_mode",
                        format!("must lie in 1..={modes}, got {mode}"),
                    ));
                }
                let mut b = vec![0.0; modes];
                b[mode - 1] = *amplitude;
                b
            }
            ForcingProfile::Zero => vec![0.0; modes],
            ForcingProfile::List(values) => {
                if values.len() != modes {
                    return Err(Error::config(
                        "forcing_list",
                        format!("has {} entries, expected {modes}", values.len()),
                    ));
                }
                values.clone()
            }
        };
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_on_unit_pi_interval() {
        let basis = SpectralBasis::with_default_grid(PI, 3).unwrap();
        for (a, want) in basis.alphas().iter().zip([1.0, 4.0, 9.0]) {
            assert!((a - want).abs() < 1e-14);
        }
    }

    #[test]
    fn first_mode_peak() {
        let basis = SpectralBasis::with_default_grid(PI, 1).unwrap();
        let v = basis.eigenfunction(1, PI / 2.0);
        assert!((v - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!((v - 0.79788).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_configuration() {
        let e = SpectralBasis::new(-1.0, 4, 16).unwrap_err();
        assert_eq!(e.field(), Some("length"));
        let e = SpectralBasis::new(PI, 0, 16).unwrap_err();
        assert_eq!(e.field(), Some("modes"));
        let e = SpectralBasis::new(PI, 4, 15).unwrap_err();
        assert_eq!(e.field(), Some("grid"));
    }

    #[test]
    fn single_mode_synthesis() {
        let basis = SpectralBasis::with_default_grid(PI, 5).unwrap();
        let field = basis.to_physical(&StateVector::mode(5, 1)).unwrap();
        for (v, x) in field.iter().zip(basis.grid()) {
            assert!((v.re - (2.0 / PI).sqrt() * x.sin()).abs() < 1e-14);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn zero_coefficients_give_zero_field() {
        let basis = SpectralBasis::with_default_grid(PI, 7).unwrap();
        let field = basis.to_physical(&StateVector::zeros(7)).unwrap();
        assert!(field.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn transform_size_mismatch() {
        let basis = SpectralBasis::with_default_grid(PI, 4).unwrap();
        assert!(matches!(
            basis.to_physical(&StateVector::zeros(3)),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(basis.to_coefficients(&[Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn geometric_forcing_constants() {
        let basis = SpectralBasis::with_default_grid(PI, 20).unwrap();
        let b = ForcingProfile::Geometric {
            amplitude: 1.0,
            ratio: 0.5,
        }
        .coefficients(20)
        .unwrap();
        let noise = noise_constants(&basis, &b).unwrap();
        // partial geometric sum of 4^{-j}, j = 1..20
        let want = (1.0 - 0.25f64.powi(20)) / 3.0;
        assert!((noise.b0 - want).abs() < 1e-12);
        assert!((noise.b0 - 1.0 / 3.0).abs() < 1e-12);
        assert!(noise.m_const <= 2.0 / PI * noise.b0);
        assert!(noise.b1 >= basis.alphas()[0] * noise.b0);
    }

    #[test]
    fn zero_forcing_constants() {
        let basis = SpectralBasis::with_default_grid(PI, 6).unwrap();
        let noise = noise_constants(&basis, &[0.0; 6]).unwrap();
        assert_eq!((noise.b0, noise.b1, noise.m_const), (0.0, 0.0, 0.0));
        assert!(!noise.is_forced());
    }

    #[test]
    fn negative_forcing_rejected() {
        let basis = SpectralBasis::with_default_grid(PI, 2).unwrap();
        let e = noise_constants(&basis, &[1.0, -0.5]).unwrap_err();
        assert_eq!(e.field(), Some("forcing"));
    }

    #[test]
    fn collocation_round_trip_is_exact() {
        let basis = SpectralBasis::collocation(PI, 24).unwrap();
        let u = StateVector::from_coeffs(
            (0..24)
                .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
                .collect(),
        );
        let back = basis.to_coefficients(&basis.to_physical(&u).unwrap()).unwrap();
        for (a, b) in u.coeffs().iter().zip(back.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
