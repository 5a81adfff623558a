//! Closed-form test functions: finite sums of modulated Gaussians with
//! quadratic polynomial prefactors.
//!
//! Dilation `S_lambda f(x) = f(lambda x)` is applied by substituting
//! parameters, so scaling identities are never polluted by resampling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// One term `A P(x - c) exp(-|x - c|^2 / (2 w^2)) exp(i k.x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub amplitude: Complex64,
    pub center: Vec<f64>,
    pub width: f64,
    pub modulation: Vec<f64>,
    /// Constant coefficient of `P`.
    pub p0: f64,
    /// Linear coefficients of `P` in `y = x - c`.
    pub p1: Vec<f64>,
    /// Quadratic coefficients of `P`, row-major `d x d`.
    pub p2: Vec<f64>,
}

impl Term {
    /// Plain Gaussian `A exp(-|x - c|^2 / (2 w^2))`.
    pub fn gaussian(amplitude: f64, center: Vec<f64>, width: f64) -> Self {
        let d = center.len();
        Self {
            amplitude: Complex64::new(amplitude, 0.0),
            center,
            width,
            modulation: vec![0.0; d],
            p0: 1.0,
            p1: vec![0.0; d],
            p2: vec![0.0; d * d],
        }
    }

    pub fn with_modulation(mut self, k: Vec<f64>) -> Self {
        self.modulation = k;
        self
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn poly(&self, y: &[f64]) -> f64 {
        let d = self.dim();
        let mut p = self.p0;
        for i in 0..d {
            p += self.p1[i] * y[i];
            for j in 0..d {
                p += self.p2[i * d + j] * y[i] * y[j];
            }
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut y = [0.0f64; 8];
        let d = self.dim();
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for i in 0..d {
            y[i] = x[i] - self.center[i];
            r2 += y[i] * y[i];
            phase += self.modulation[i] * x[i];
        }
        let env = (-r2 / (2.0 * self.width * self.width)).exp();
        self.amplitude * self.poly(&y[..d]) * env * Complex64::from_polar(1.0, phase)
    }

    fn dilate(&self, lambda: f64) -> Term {
        Term {
            amplitude: self.amplitude,
            center: self.center.iter().map(|c| c / lambda).collect(),
            width: self.width / lambda,
            modulation: self.modulation.iter().map(|k| k * lambda).collect(),
            p0: self.p0,
            p1: self.p1.iter().map(|a| a * lambda).collect(),
            p2: self.p2.iter().map(|a| a * lambda * lambda).collect(),
        }
    }

    fn poly_bound(&self, radius: f64) -> f64 {
        let l1: f64 = self.p1.iter().map(|a| a.abs()).sum();
        let l2: f64 = self.p2.iter().map(|a| a.abs()).sum();
        self.p0.abs() + l1 * radius + l2 * radius * radius
    }
}

/// A finite sum of [`Term`]s in `d` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    d: usize,
    terms: Vec<Term>,
}

impl TestFunction {
    pub fn new(d: usize, terms: Vec<Term>) -> Result<Self> {
        if d == 0 || d > 8 {
            return Err(Error::InvalidArgument(format!("unsupported dimension {d}")));
        }
        for t in &terms {
            if t.center.len() != d
                || t.modulation.len() != d
                || t.p1.len() != d
                || t.p2.len() != d * d
            {
                return Err(Error::InvalidArgument("term dimension mismatch".into()));
            }
            if !(t.width > 0.0) {
                return Err(Error::InvalidArgument("term width must be positive".into()));
            }
        }
        Ok(Self { d, terms })
    }

    /// Centered isotropic Gaussian `exp(-|x|^2 / (2 w^2))`.
    pub fn gaussian(d: usize, width: f64) -> Self {
        Self::new(d, vec![Term::gaussian(1.0, vec![0.0; d], width)]).expect("valid gaussian")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        if grid.dim() != self.d {
            return Err(Error::InvalidArgument(format!(
                "test function is {}-dimensional, grid is {}-dimensional",
                self.d,
                grid.dim()
            )));
        }
        Ok(Field::from_fn(*grid, |x| self.eval(x)))
    }

    /// `S_lambda f(x) = f(lambda x)`.
    pub fn dilate(&self, lambda: f64) -> Result<TestFunction> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {lambda}")));
        }
        Ok(TestFunction {
            d: self.d,
            terms: self.terms.iter().map(|t| t.dilate(lambda)).collect(),
        })
    }

    /// Pointwise product, itself a closed-form function (kept as a
    /// sampled product for norms).
    pub fn product_field(&self, other: &TestFunction, grid: &Grid) -> Result<Field> {
        let a = self.sample(grid)?;
        let b = other.sample(grid)?;
        a.pointwise_mul(&b)
    }

    /// Upper bound on `|f|` over the complement of the box, relative to
    /// nothing (absolute). Uses the distance from each center to the
    /// nearest box face.
    pub fn boundary_bound(&self, grid: &Grid) -> f64 {
        let l = grid.half_width();
        self.terms
            .iter()
            .map(|t| {
                let dist = t
                    .center
                    .iter()
                    .map(|c| (l - c.abs()).max(0.0))
                    .fold(f64::INFINITY, f64::min);
                // the polynomial factor can only grow towards the corners
                let rad = (grid.dim() as f64).sqrt() * 2.0 * l;
                t.amplitude.norm()
                    * t.poly_bound(rad)
                    * (-dist * dist / (2.0 * t.width * t.width)).exp()
            })
            .sum()
    }

    /// Upper bound on the spectral envelope at the Nyquist frequency.
    pub fn spectral_tail_bound(&self, grid: &Grid) -> f64 {
        let nyquist = PI / grid.spacing();
        self.terms
            .iter()
            .map(|t| {
                let kmax = t.modulation.iter().map(|k| k.abs()).fold(0.0, f64::max);
                let gap = (nyquist - kmax).max(0.0);
                let w = t.width;
                // polynomial prefactors add powers of xi; bound them by the
                // same geometric factor as in space
                let poly = t.poly_bound(nyquist * w * w);
                t.amplitude.norm()
                    * poly
                    * (w * (2.0 * PI).sqrt()).powi(grid.dim() as i32)
                    * (-(gap * w).powi(2) / 2.0).exp()
            })
            .sum()
    }

    /// Largest sampled modulus, used to normalize the containment checks.
    pub fn peak(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.norm() * t.p0.abs().max(1e-300)).fold(0.0, f64::max)
    }

    /// Checks both decay at the box boundary and spectral resolution
    /// against `tol` (relative to the peak).
    pub fn check_fits(&self, grid: &Grid, tol: f64) -> Result<()> {
        let peak = self.peak().max(f64::MIN_POSITIVE);
        let b = self.boundary_bound(grid) / peak;
        if b > tol {
            return Err(Error::DomainTooSmall(format!(
                "test function reaches {b:e} of its peak at the box boundary"
            )));
        }
        let s = self.spectral_tail_bound(grid) / peak;
        if s > tol {
            return Err(Error::DomainTooSmall(format!(
                "test function is under-resolved: spectral tail {s:e}"
            )));
        }
        Ok(())
    }
}

/// Sampling distribution of random test functions.
#[derive(Debug, Clone, Copy)]
pub struct Ensemble {
    pub min_width: f64,
    pub max_width: f64,
    /// Centers are drawn from `[-center_box, center_box]^d`.
    pub center_box: f64,
    /// Bound on each modulation component.
    pub max_modulation: f64,
    /// Number of Gaussian terms per function.
    pub terms: usize,
    /// Include random polynomial prefactors.
    pub polynomials: bool,
}

impl Ensemble {
    /// Widths log-uniform in `[0.5, 4]`, centers in the middle half of the
    /// box, modulations below half the Nyquist frequency.
    pub fn standard(grid: &Grid) -> Self {
        Self {
            min_width: 0.5,
            max_width: 4.0,
            center_box: grid.half_width() / 2.0,
            max_modulation: 0.5 * PI / grid.spacing(),
            terms: 1,
            polynomials: false,
        }
    }

    pub fn draw<R: Rng>(&self, d: usize, rng: &mut R) -> TestFunction {
        let terms = (0..self.terms.max(1))
            .map(|_| {
                let lw = rng.gen_range(self.min_width.ln()..=self.max_width.ln());
                let width = lw.exp();
                let center = (0..d)
                    .map(|_| {
                        if self.center_box > 0.0 {
                            rng.gen_range(-self.center_box..=self.center_box)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let modulation = (0..d)
                    .map(|_| {
                        if self.max_modulation > 0.0 {
                            rng.gen_range(-self.max_modulation..=self.max_modulation)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mut t = Term::gaussian(rng.gen_range(0.5..=2.0), center, width)
                    .with_modulation(modulation);
                t.amplitude *= Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
                if self.polynomials {
                    t.p1 = (0..d).map(|_| rng.gen_range(-0.5..=0.5) / width).collect();
                    t.p2 = (0..d * d)
                        .map(|_| rng.gen_range(-0.25..=0.25) / (width * width))
                        .collect();
                }
                t
            })
            .collect();
        TestFunction::new(d, terms).expect("ensemble terms are consistent")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dilation_is_parameter_substitution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Grid::new(2, 32, 10.0).unwrap();
        let mut ens = Ensemble::standard(&g);
        ens.polynomials = true;
        ens.terms = 2;
        let f = ens.draw(2, &mut rng);
        for &lambda in &[0.5, 2.0, 3.0] {
            let s = f.dilate(lambda).unwrap();
            for &x in &[[0.3, -1.2], [2.0, 0.5], [-0.7, 0.0]] {
                let lx = [lambda * x[0], lambda * x[1]];
                assert!((s.eval(&x) - f.eval(&lx)).norm() < 1e-12);
            }
        }
        assert!(f.dilate(0.0).is_err());
    }

    #[test]
    fn containment_checks() {
        let g = Grid::new(1, 128, 20.0).unwrap();
        assert!(TestFunction::gaussian(1, 1.0).check_fits(&g, 1e-14).is_ok());
        assert!(TestFunction::gaussian(1, 5.0).check_fits(&g, 1e-14).is_err());
        assert!(TestFunction::gaussian(1, 0.05).check_fits(&g, 1e-14).is_err());
    }
}
