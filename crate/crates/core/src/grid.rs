//! Periodic-box discretization of `R^d`, unitary discrete Fourier transforms
//! and Fourier multipliers.
//!
//! The box is `[-L, L)^d` sampled with `n` points per axis. Data are stored
//! axis-major (last axis fastest). Spectral coefficients are kept in the
//! usual FFT storage order: along each axis index `k < n/2` carries
//! `xi = (pi/L) k` and index `k >= n/2` carries `xi = (pi/L)(k - n)`.
//! Transforms are unitary: both directions carry a factor `n^{-d/2}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 8;

/// Uniform periodic grid on `[-L, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    d: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(d: usize, n: usize, half_width: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidGrid("dimension must be positive".into()));
        }
        if n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("odd number of points per axis: {n}")));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points per axis, got {n}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        if n.checked_pow(d as u32).is_none() {
            return Err(Error::InvalidGrid("grid size overflows".into()));
        }
        Ok(Self { d, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Grid spacing `h = 2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^d` of the Riemann sums.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Frequency spacing `pi/L`.
    pub fn frequency_step(&self) -> f64 {
        PI / self.half_width
    }

    /// Per-axis frequency lattice in increasing order, `(pi/L) m` for
    /// `m = -n/2, ..., n/2 - 1`.
    pub fn freqs(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half..half).map(|m| m as f64 * self.frequency_step()).collect()
    }

    /// Per-axis coordinates `x_j = -L + j h`.
    pub fn coords(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n).map(|j| -self.half_width + j as f64 * h).collect()
    }

    /// Signed frequency index carried by storage index `k` along one axis.
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Wavenumber carried by storage index `k` along one axis.
    pub fn wavenumber(&self, k: usize) -> f64 {
        self.signed_index(k) as f64 * self.frequency_step()
    }

    /// Splits a flat index into per-axis indices.
    pub fn unravel(&self, mut flat: usize, idx: &mut [usize]) {
        for a in (0..self.d).rev() {
            idx[a] = flat % self.n;
            flat /= self.n;
        }
    }

    /// Spatial point of a flat index.
    pub fn point(&self, flat: usize, x: &mut [f64]) {
        let h = self.spacing();
        let mut idx = vec![0; self.d];
        self.unravel(flat, &mut idx);
        for (xa, &ia) in x.iter_mut().zip(&idx) {
            *xa = -self.half_width + ia as f64 * h;
        }
    }

    /// Frequency vector of a flat spectral index.
    pub fn frequency(&self, flat: usize, xi: &mut [f64]) {
        let mut idx = vec![0; self.d];
        self.unravel(flat, &mut idx);
        for (xa, &ia) in xi.iter_mut().zip(&idx) {
            *xa = self.wavenumber(ia);
        }
    }

    /// `|xi|^2` for every spectral index, in storage order.
    pub fn freq_sq(&self) -> Vec<f64> {
        let k2: Vec<f64> = (0..self.n).map(|k| self.wavenumber(k).powi(2)).collect();
        let mut out = vec![0.0; self.len()];
        let mut idx = vec![0; self.d];
        for (flat, o) in out.iter_mut().enumerate() {
            self.unravel(flat, &mut idx);
            *o = idx.iter().map(|&i| k2[i]).sum();
        }
        out
    }

    /// `|x|` for every grid point.
    pub fn radii(&self) -> Vec<f64> {
        let c = self.coords();
        let mut out = vec![0.0; self.len()];
        let mut idx = vec![0; self.d];
        for (flat, o) in out.iter_mut().enumerate() {
            self.unravel(flat, &mut idx);
            *o = idx.iter().map(|&i| c[i] * c[i]).sum::<f64>().sqrt();
        }
        out
    }

    /// True when some axis of the flat spectral index sits on the unpaired
    /// `-n/2` mode.
    pub fn is_unpaired(&self, flat: usize) -> bool {
        let mut f = flat;
        for _ in 0..self.d {
            if f % self.n == self.n / 2 {
                return true;
            }
            f /= self.n;
        }
        false
    }
}

/// Representation tag of a [`Field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rep {
    Space,
    Spectral,
}

impl Rep {
    pub fn name(self) -> &'static str {
        match self {
            Rep::Space => "SPACE",
            Rep::Spectral => "SPECTRAL",
        }
    }
}

/// Parity of a symbol, used to keep real data real.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// No assumption; coefficients are multiplied as they are.
    General,
    /// Odd symbol: the unpaired `-n/2` modes are zeroed.
    Odd,
}

/// Complex samples on a grid in space or spectral representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    rep: Rep,
    data: Vec<Complex64>,
}

impl Field {
    pub fn from_data(grid: Grid, rep: Rep, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, rep, data })
    }

    pub fn zeros(grid: Grid, rep: Rep) -> Self {
        Self {
            grid,
            rep,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples a function of position.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let mut x = vec![0.0; grid.dim()];
        let data = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut x);
                f(&x)
            })
            .collect();
        Self {
            grid,
            rep: Rep::Space,
            data,
        }
    }

    /// Samples a real function of position.
    pub fn from_real_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64,
    {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Samples a radial function `f(|x|)`.
    pub fn from_radial<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(f64) -> f64,
    {
        let data = grid
            .radii()
            .into_iter()
            .map(|r| Complex64::new(f(r), 0.0))
            .collect();
        Self {
            grid,
            rep: Rep::Space,
            data,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rep(&self) -> Rep {
        self.rep
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn expect_rep(&self, rep: Rep) -> Result<()> {
        if self.rep != rep {
            return Err(Error::RepMismatch {
                expected: rep.name(),
                found: self.rep.name(),
            });
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Copy in space representation.
    pub fn to_space(&self) -> Field {
        match self.rep {
            Rep::Space => self.clone(),
            Rep::Spectral => {
                let mut out = self.clone();
                transform_in_place(&self.grid, &mut out.data, Direction::Inverse);
                out.rep = Rep::Space;
                out
            }
        }
    }

    /// Copy in spectral representation.
    pub fn to_spectral(&self) -> Field {
        match self.rep {
            Rep::Spectral => self.clone(),
            Rep::Space => {
                let mut out = self.clone();
                transform_in_place(&self.grid, &mut out.data, Direction::Forward);
                out.rep = Rep::Spectral;
                out
            }
        }
    }

    pub fn into_space(self) -> Field {
        match self.rep {
            Rep::Space => self,
            Rep::Spectral => inverse_transform(self).expect("rep checked"),
        }
    }

    pub fn into_spectral(self) -> Field {
        match self.rep {
            Rep::Spectral => self,
            Rep::Space => forward_transform(self).expect("rep checked"),
        }
    }

    /// Multiplies every sample by `c`.
    pub fn scaled(&self, c: Complex64) -> Field {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|z| *z *= c);
        out
    }

    /// `self + c * other`, both in the representation of `self`.
    pub fn axpy(&self, c: Complex64, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let other = if other.rep == self.rep {
            std::borrow::Cow::Borrowed(other)
        } else {
            std::borrow::Cow::Owned(match self.rep {
                Rep::Space => other.to_space(),
                Rep::Spectral => other.to_spectral(),
            })
        };
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// Pointwise product in space, returned in space representation.
    pub fn pointwise_mul(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let a = self.to_space();
        let b = other.to_space();
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
        Ok(Field {
            grid: self.grid,
            rep: Rep::Space,
            data,
        })
    }

    /// Largest modulus of the samples in the current representation.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus of the imaginary parts.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Mean value over the box, read from the zero mode.
    pub fn mean(&self) -> Complex64 {
        let spec = self.to_spectral();
        spec.data[0] / (self.grid.len() as f64).sqrt()
    }

    /// Writes the text serialization: a header line `d n L rep` followed by
    /// one `re im` pair per line in storage order.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{} {} {:.17e} {}",
            self.grid.d,
            self.grid.n,
            self.grid.half_width,
            self.rep.name()
        )?;
        for z in &self.data {
            writeln!(w, "{:.17e} {:.17e}", z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Field> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("bad header: {header:?}")));
        }
        let parse_err = |what: &str| Error::Parse(format!("bad {what} in header {header:?}"));
        let d: usize = parts[0].parse().map_err(|_| parse_err("d"))?;
        let n: usize = parts[1].parse().map_err(|_| parse_err("n"))?;
        let l: f64 = parts[2].parse().map_err(|_| parse_err("L"))?;
        let rep = match parts[3] {
            "SPACE" => Rep::Space,
            "SPECTRAL" => Rep::Spectral,
            _ => return Err(parse_err("rep")),
        };
        let grid = Grid::new(d, n, l)?;
        let mut data = Vec::with_capacity(grid.len());
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || -> Result<f64> {
                it.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad sample on line {}", lineno + 2)))
            };
            let re = next()?;
            let im = next()?;
            data.push(Complex64::new(re, im));
        }
        Field::from_data(grid, rep, data)
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

type PlanCache = HashMap<(usize, bool), Arc<dyn Fft<f64>>>;

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, PlanCache)>> = OnceLock::new();
    let lock = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = lock.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, cache) = &mut *guard;
    let forward = matches!(dir, Direction::Forward);
    cache
        .entry((n, forward))
        .or_insert_with(|| {
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

fn transform_in_place(grid: &Grid, data: &mut [Complex64], dir: Direction) {
    let n = grid.n;
    let d = grid.d;
    let total = data.len();
    let fft = plan(n, dir);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        // gather lines along `axis` contiguously, transform, scatter back
        let block = n * stride;
        let mut line = 0;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                let dst = &mut buf[line * n..(line + 1) * n];
                for (j, v) in dst.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                line += 1;
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        line = 0;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                let src = &buf[line * n..(line + 1) * n];
                for (j, v) in src.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
                line += 1;
            }
        }
    }
    let norm = 1.0 / (total as f64).sqrt();
    data.iter_mut().for_each(|z| *z *= norm);
}

/// Unitary forward transform of a space field.
pub fn forward_transform(mut f: Field) -> Result<Field> {
    f.expect_rep(Rep::Space)?;
    transform_in_place(&f.grid, &mut f.data, Direction::Forward);
    f.rep = Rep::Spectral;
    Ok(f)
}

/// Unitary inverse transform of a spectral field.
pub fn inverse_transform(mut f: Field) -> Result<Field> {
    f.expect_rep(Rep::Spectral)?;
    transform_in_place(&f.grid, &mut f.data, Direction::Inverse);
    f.rep = Rep::Space;
    Ok(f)
}

/// Applies the Fourier multiplier `sigma(xi)`. The result keeps the
/// representation of the input.
pub fn apply_multiplier<S>(f: &Field, sigma: S) -> Result<Field>
where
    S: Fn(&[f64]) -> Complex64,
{
    apply_multiplier_with(f, sigma, Parity::General)
}

pub fn apply_multiplier_with<S>(f: &Field, sigma: S, parity: Parity) -> Result<Field>
where
    S: Fn(&[f64]) -> Complex64,
{
    let grid = f.grid;
    let mut spec = f.to_spectral();
    let mut xi = vec![0.0; grid.d];
    for (flat, z) in spec.data.iter_mut().enumerate() {
        if parity == Parity::Odd && grid.is_unpaired(flat) {
            *z = Complex64::new(0.0, 0.0);
            continue;
        }
        grid.frequency(flat, &mut xi);
        let s = sigma(&xi);
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::NonFiniteSymbol { xi });
        }
        *z *= s;
    }
    Ok(match f.rep {
        Rep::Spectral => spec,
        Rep::Space => spec.into_space(),
    })
}

/// Applies a radial multiplier given as a function of `|xi|^2`.
pub fn apply_radial_multiplier<S>(f: &Field, sigma: S) -> Result<Field>
where
    S: Fn(f64) -> Complex64,
{
    let grid = f.grid;
    let mut spec = f.to_spectral();
    let k2 = grid.freq_sq();
    for (flat, (z, &q)) in spec.data.iter_mut().zip(&k2).enumerate() {
        let s = sigma(q);
        if !(s.re.is_finite() && s.im.is_finite()) {
            let mut xi = vec![0.0; grid.d];
            grid.frequency(flat, &mut xi);
            return Err(Error::NonFiniteSymbol { xi });
        }
        *z *= s;
    }
    Ok(match f.rep {
        Rep::Spectral => spec,
        Rep::Space => spec.into_space(),
    })
}

/// Spectral partial derivative along `axis`, returned in space.
pub fn partial_derivative(f: &Field, axis: usize) -> Result<Field> {
    if axis >= f.grid.d {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    let out = apply_multiplier_with(f, |xi| Complex64::new(0.0, xi[axis]), Parity::Odd)?;
    Ok(out.into_space())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
        let data = (0..grid.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Field::from_data(grid, Rep::Space, data).unwrap()
    }

    fn rel_err(a: &Field, b: &Field) -> f64 {
        let num: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.data.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn grid_examples() {
        let g = Grid::new(1, 8, PI).unwrap();
        let f = g.freqs();
        let expected = [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        for (a, b) in f.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let g = Grid::new(3, 64, 20.0).unwrap();
        assert_eq!(g.spacing(), 0.625);
        assert!(matches!(Grid::new(2, 7, 1.0), Err(Error::InvalidGrid(_))));
        assert!(Grid::new(0, 8, 1.0).is_err());
        assert!(Grid::new(1, 8, 0.0).is_err());
        assert!(Grid::new(1, 8, -1.0).is_err());
        assert!(Grid::new(1, 6, 1.0).is_err());
    }

    #[test]
    fn grid_invariants() {
        for &(d, n, l) in &[(1, 8, 1.0), (2, 16, 3.5), (3, 32, 10.0)] {
            let g = Grid::new(d, n, l).unwrap();
            assert!((g.spacing() * n as f64 - 2.0 * l).abs() < 1e-13);
            let f = g.freqs();
            assert_eq!(f.len(), n);
            assert_eq!(f.iter().filter(|&&x| x == 0.0).count(), 1);
            let mut stored: Vec<f64> = (0..n).map(|k| g.wavenumber(k)).collect();
            stored.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(stored, f);
        }
    }

    #[test]
    fn plane_wave_single_coefficient() {
        let g = Grid::new(1, 32, 5.0).unwrap();
        let xi0 = 3.0 * g.frequency_step();
        let f = Field::from_fn(g, |x| Complex64::from_polar(1.0, xi0 * x[0]));
        let s = forward_transform(f).unwrap();
        for (k, z) in s.data().iter().enumerate() {
            if k == 3 {
                assert!((z.norm() - (32f64).sqrt()).abs() < 1e-12);
            } else {
                assert!(z.norm() < 1e-12, "k={k} {z}");
            }
        }
    }

    #[test]
    fn gaussian_round_trip() {
        let g = Grid::new(1, 256, 20.0).unwrap();
        let f = Field::from_real_fn(g, |x| (-x[0] * x[0] / 2.0).exp());
        let back = inverse_transform(forward_transform(f.clone()).unwrap()).unwrap();
        let err = f
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn round_trip_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(d, n) in &[(1usize, 256usize), (2, 64), (3, 32)] {
            let g = Grid::new(d, n, 4.0).unwrap();
            for _ in 0..100 {
                let f = random_field(g, &mut rng);
                let back = inverse_transform(forward_transform(f.clone()).unwrap()).unwrap();
                assert!(rel_err(&back, &f) < 1e-12);
            }
        }
    }

    #[test]
    fn parseval_against_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid::new(2, 16, 2.0).unwrap();
        let f = random_field(g, &mut rng);
        let spec = f.to_spectral();
        let space: f64 = f.data().iter().map(|z| z.norm_sqr()).sum();
        let freq: f64 = spec.data().iter().map(|z| z.norm_sqr()).sum();
        assert!(((space - freq) / space).abs() < 1e-12);

        // direct O(N^2) DFT of one coefficient set, unitary scaling
        let n = g.points_per_axis();
        let mut direct = vec![Complex64::new(0.0, 0.0); g.len()];
        for (kf, out) in direct.iter_mut().enumerate() {
            let (k0, k1) = (kf / n, kf % n);
            for (jf, z) in f.data().iter().enumerate() {
                let (j0, j1) = (jf / n, jf % n);
                let phase = -2.0 * PI * ((j0 * k0 + j1 * k1) as f64) / n as f64;
                *out += z * Complex64::from_polar(1.0, phase);
            }
            *out /= (g.len() as f64).sqrt();
        }
        let diff: f64 = direct
            .iter()
            .zip(spec.data())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn rep_mismatch_is_rejected() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let f = Field::zeros(g, Rep::Spectral);
        assert!(matches!(forward_transform(f.clone()), Err(Error::RepMismatch { .. })));
        let f = Field::zeros(g, Rep::Space);
        assert!(inverse_transform(f).is_err());
    }

    #[test]
    fn identity_and_laplacian_multipliers() {
        let g = Grid::new(2, 16, 3.0).unwrap();
        let k = g.frequency_step();
        let (a, b) = (2.0 * k, -3.0 * k);
        let f = Field::from_fn(g, |x| Complex64::from_polar(1.0, a * x[0] + b * x[1]));
        let same = apply_multiplier(&f, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(rel_err(&same, &f) < 1e-13);
        let lap = apply_multiplier(&f, |xi| Complex64::new(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0))
            .unwrap();
        let expected = f.scaled(Complex64::new(-(a * a + b * b), 0.0));
        assert!(rel_err(&lap, &expected) < 1e-12);
    }

    #[test]
    fn non_finite_symbol_names_frequency() {
        let g = Grid::new(1, 8, PI).unwrap();
        let f = Field::from_real_fn(g, |x| x[0].cos());
        let err = apply_multiplier(&f, |xi| Complex64::new(1.0 / xi[0].abs(), 0.0)).unwrap_err();
        match err {
            Error::NonFiniteSymbol { xi } => assert_eq!(xi, vec![0.0]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn abs_xi_multiplier_matches_quadrature() {
        // |D| e^{-x^2/2} against two independent evaluations of the
        // multiplier integral (1/2pi) int |xi| sqrt(2pi) e^{-xi^2/2} e^{i x xi} dxi:
        // the lattice rule xi in (pi/L)Z, which is what a periodic box can
        // represent, and a dense rule on the line. The kink of |xi| at 0
        // makes the two differ by O((pi/L)^2).
        let g = Grid::new(1, 256, 20.0).unwrap();
        let f = Field::from_real_fn(g, |x| (-x[0] * x[0] / 2.0).exp());
        let out = apply_multiplier(&f, |xi| Complex64::new(xi[0].abs(), 0.0)).unwrap();
        let step = g.frequency_step();
        let lattice = |x: f64| {
            let mut s = 0.0;
            for m in 1..2000 {
                let k = m as f64 * step;
                s += 2.0 * k * (-k * k / 2.0).exp() * (x * k).cos();
            }
            s * step / (2.0 * PI).sqrt()
        };
        let line = |x: f64| {
            let m = 200_000;
            let top = 40.0;
            let dk = top / m as f64;
            let mut s = 0.0;
            for i in 0..=m {
                let k = i as f64 * dk;
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                s += w * k * (-k * k / 2.0).exp() * (x * k).cos();
            }
            s * dk * 2.0 / (2.0 * PI).sqrt()
        };
        let coords = g.coords();
        let scale = line(0.0).abs();
        let (mut worst_lattice, mut worst_line) = (0.0f64, 0.0f64);
        for j in (0..256).step_by(16) {
            let v = out.data()[j];
            assert!(v.im.abs() < 1e-12);
            worst_lattice = worst_lattice.max((v.re - lattice(coords[j])).abs() / scale);
            worst_line = worst_line.max((v.re - line(coords[j])).abs() / scale);
        }
        assert!(worst_lattice < 1e-8, "lattice {worst_lattice}");
        assert!(worst_line < 2.0 * step * step, "line {worst_line}");
    }

    #[test]
    fn multiplier_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::new(2, 32, 5.0).unwrap();
        let f = random_field(g, &mut rng);
        let s1 = |xi: &[f64]| Complex64::new((xi[0] * xi[0] + xi[1] * xi[1]).sqrt(), 0.0);
        let s2 = |xi: &[f64]| Complex64::from_polar(1.0, -0.3 * (xi[0] * xi[0] + xi[1] * xi[1]));
        let a = apply_multiplier(&apply_multiplier(&f, s2).unwrap(), s1).unwrap();
        let b = apply_multiplier(&f, |xi| s1(xi) * s2(xi)).unwrap();
        assert!(rel_err(&a, &b) < 1e-12);
    }

    #[test]
    fn real_even_symbol_keeps_real_even_data_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Grid::new(1, 64, 4.0).unwrap();
        // even about x = 0: sample index j and n - j
        let n = 64;
        let mut data = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..=n / 2 {
            let v = rng.gen_range(-1.0..1.0);
            data[(n / 2 + j) % n] = Complex64::new(v, 0.0);
            data[(n / 2 + n - j) % n] = Complex64::new(v, 0.0);
        }
        let f = Field::from_data(g, Rep::Space, data).unwrap();
        let out = apply_multiplier(&f, |xi| Complex64::new((1.0 + xi[0] * xi[0]).powf(0.7), 0.0))
            .unwrap();
        assert!(out.max_imag() < 1e-12);
    }

    #[test]
    fn odd_symbol_zeroes_unpaired_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = Grid::new(2, 16, 2.0).unwrap();
        let data = (0..g.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))
            .collect();
        let f = Field::from_data(g, Rep::Space, data).unwrap();
        let d0 = partial_derivative(&f, 0).unwrap();
        assert!(d0.max_imag() < 1e-12);
    }

    #[test]
    fn text_serialization_round_trip() {
        let g = Grid::new(2, 8, 1.5).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new(x[0].sin(), x[1] * 0.1));
        let mut buf = Vec::new();
        f.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("2 8 "));
        assert!(text.lines().next().unwrap().ends_with("SPACE"));
        let back = Field::read_text(&buf[..]).unwrap();
        assert_eq!(back, f);
    }
}
