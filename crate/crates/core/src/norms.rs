//! Lebesgue and Sobolev norms on grid fields, space-time mixed norms and the
//! admissible-pair algebra.

use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponent::{rational_to_f64, Exponent, Rational};
use crate::grid::{apply_radial_multiplier, Field, Grid, Rep};
use crate::testfn::TestFunction;

/// `||f||_{L^r}` by a Riemann sum with cell volume `h^d`; `r = inf` is the
/// grid maximum.
pub fn lebesgue_norm(f: &Field, r: Exponent) -> Result<f64> {
    f.expect_rep(Rep::Space)?;
    let r = r.lebesgue()?;
    Ok(lebesgue_norm_unchecked(f.data(), f.grid(), r))
}

fn lebesgue_norm_unchecked(data: &[Complex64], grid: &Grid, r: Exponent) -> f64 {
    match r {
        Exponent::Infinite => data.iter().map(|z| z.norm()).fold(0.0, f64::max),
        Exponent::Finite(_) => {
            let p = r.to_f64();
            let vol = grid.cell_volume();
            if p == 2.0 {
                (data.iter().map(|z| z.norm_sqr()).sum::<f64>() * vol).sqrt()
            } else {
                // scale by the max to keep large exponents in range
                let m = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if m == 0.0 {
                    return 0.0;
                }
                let s: f64 = data.iter().map(|z| (z.norm() / m).powf(p)).sum();
                m * (s * vol).powf(1.0 / p)
            }
        }
    }
}

/// Weight `|xi|^s` with the zero mode annihilated for `s > 0` and passed
/// through for `s = 0`.
fn homogeneous_weight(k2: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if k2 == 0.0 {
        0.0
    } else {
        k2.powf(s / 2.0)
    }
}

/// Applies `|D|^s`.
pub fn fractional_derivative(f: &Field, s: f64) -> Result<Field> {
    if !(s >= 0.0) {
        return Err(Error::UnsupportedOrder(format!(
            "homogeneous order {s} < 0 is not supported"
        )));
    }
    apply_radial_multiplier(f, |k2| Complex64::new(homogeneous_weight(k2, s), 0.0))
}

/// `||f||_{W^{s,r}}-dot = || |D|^s f ||_{L^r}`.
pub fn sobolev_seminorm(f: &Field, s: f64, r: Exponent) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::UnsupportedOrder(format!(
            "homogeneous order {s} < 0 is not supported"
        )));
    }
    let r = r.lebesgue()?;
    if r == Exponent::int(2) {
        let spec = f.to_spectral();
        let k2 = spec.grid().freq_sq();
        let sum: f64 = spec
            .data()
            .iter()
            .zip(&k2)
            .map(|(z, &q)| z.norm_sqr() * homogeneous_weight(q, s).powi(2))
            .sum();
        return Ok((sum * spec.grid().cell_volume()).sqrt());
    }
    let g = fractional_derivative(f, s)?.into_space();
    Ok(lebesgue_norm_unchecked(g.data(), g.grid(), r))
}

/// `||f||_{W^{s,r}} = || <D>^s f ||_{L^r}` with `<xi> = (1 + |xi|^2)^{1/2}`.
pub fn sobolev_norm(f: &Field, s: f64, r: Exponent) -> Result<f64> {
    let r = r.lebesgue()?;
    if s == 0.0 {
        let g = f.to_space();
        return Ok(lebesgue_norm_unchecked(g.data(), g.grid(), r));
    }
    if r == Exponent::int(2) {
        let spec = f.to_spectral();
        let k2 = spec.grid().freq_sq();
        let sum: f64 = spec
            .data()
            .iter()
            .zip(&k2)
            .map(|(z, &q)| z.norm_sqr() * (1.0 + q).powf(s))
            .sum();
        return Ok((sum * spec.grid().cell_volume()).sqrt());
    }
    let g = apply_radial_multiplier(f, |k2| Complex64::new((1.0 + k2).powf(s / 2.0), 0.0))?
        .into_space();
    Ok(lebesgue_norm_unchecked(g.data(), g.grid(), r))
}

/// Spatial norm selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex {
    pub s: f64,
    pub r: Exponent,
    pub homogeneous: bool,
}

impl SobolevIndex {
    pub fn homogeneous(s: f64, r: Exponent) -> Self {
        Self { s, r, homogeneous: true }
    }

    pub fn inhomogeneous(s: f64, r: Exponent) -> Self {
        Self { s, r, homogeneous: false }
    }

    pub fn lebesgue(r: Exponent) -> Self {
        Self::homogeneous(0.0, r)
    }

    pub fn norm(&self, f: &Field) -> Result<f64> {
        if self.homogeneous {
            sobolev_seminorm(f, self.s, self.r)
        } else {
            sobolev_norm(f, self.s, self.r)
        }
    }
}

/// Uniform time nodes on `[0, T]` with composite trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_end: f64, m: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidTimeGrid(format!("T_end must be positive, got {t_end}")));
        }
        if m < 2 {
            return Err(Error::InvalidTimeGrid(format!("need at least 2 nodes, got {m}")));
        }
        let dt = t_end / (m - 1) as f64;
        let mut nodes: Vec<f64> = (0..m).map(|i| i as f64 * dt).collect();
        nodes[m - 1] = t_end;
        let mut weights = vec![dt; m];
        weights[0] = dt / 2.0;
        weights[m - 1] = dt / 2.0;
        Ok(Self { t_end, nodes, weights })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.t_end / (self.nodes.len() - 1) as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// One field per time node, all on a common grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: TimeGrid,
    fields: Vec<Field>,
}

impl Trajectory {
    pub fn new(times: TimeGrid, fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if fields.len() != times.len() {
            return Err(Error::InvalidTimeGrid(format!(
                "{} fields for {} time nodes",
                fields.len(),
                times.len()
            )));
        }
        let g = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != g) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { times, fields })
    }

    /// Samples `f(t)` at every node.
    pub fn from_fn<F>(times: TimeGrid, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Field + Sync,
    {
        let fields = times.nodes().par_iter().map(|&t| f(t)).collect();
        Self::new(times, fields)
    }

    /// The zero trajectory.
    pub fn zeros(times: TimeGrid, grid: Grid) -> Self {
        let fields = vec![Field::zeros(grid, Rep::Space); times.len()];
        Self { times, fields }
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn into_fields(self) -> Vec<Field> {
        self.fields
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Writes one field file per node plus `index.txt` listing
    /// `node file time` rows.
    pub fn export(&self, dir: &std::path::Path, stem: &str) -> Result<()> {
        use std::io::Write;
        std::fs::create_dir_all(dir)?;
        let mut index = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}_index.txt")))?);
        writeln!(index, "# node file time")?;
        for (i, (f, t)) in self.fields.iter().zip(self.times.nodes()).enumerate() {
            let name = format!("{stem}_{i:05}.field");
            let file = std::io::BufWriter::new(std::fs::File::create(dir.join(&name))?);
            f.write_text(file)?;
            writeln!(index, "{i} {name} {t:.17e}")?;
        }
        Ok(())
    }
}

/// Combines per-node spatial norms into `||u||_{L^q_I X}` by trapezoid
/// quadrature (`q = inf`: maximum over nodes).
pub fn combine_time_norm(values: &[f64], times: &TimeGrid, q: Exponent) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let q = q.lebesgue()?;
    match q {
        Exponent::Infinite => Ok(values.iter().copied().fold(0.0, f64::max)),
        Exponent::Finite(_) => {
            let p = q.to_f64();
            let m = values.iter().copied().fold(0.0, f64::max);
            if m == 0.0 {
                return Ok(0.0);
            }
            let s: f64 = values
                .iter()
                .zip(times.weights())
                .map(|(v, w)| w * (v / m).powf(p))
                .sum();
            Ok(m * s.powf(1.0 / p))
        }
    }
}

/// `||u||_{L^q_I X}` over the trajectory's time grid.
pub fn mixed_norm(u: &Trajectory, q: Exponent, spatial: SobolevIndex) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let values = u
        .fields()
        .par_iter()
        .map(|f| spatial.norm(f))
        .collect::<Result<Vec<f64>>>()?;
    combine_time_norm(&values, u.times(), q)
}

/// A Strichartz-admissible pair `(q, r)` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmissiblePair {
    pub q: Exponent,
    pub r: Exponent,
    pub d: usize,
}

impl AdmissiblePair {
    pub fn new(q: Exponent, r: Exponent, d: usize) -> Result<Self> {
        let verdict = is_admissible(q, r, d);
        if !verdict.ok {
            return Err(Error::IndexRelation(verdict.reason));
        }
        Ok(Self { q, r, d })
    }
}

impl fmt::Display for AdmissiblePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.q, self.r)
    }
}

/// Verdict of an index check with a human-readable diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub ok: bool,
    pub reason: String,
}

impl Verdict {
    pub fn pass() -> Self {
        Self { ok: true, reason: "ok".into() }
    }

    pub fn fail(reason: impl Into<String>) -> Self {
        Self { ok: false, reason: reason.into() }
    }
}

/// `2 <= q, r <= inf`, `2/q + d/r = d/2` exactly, and
/// `(q, r, d) != (2, inf, 2)`.
pub fn is_admissible(q: Exponent, r: Exponent, d: usize) -> Verdict {
    if d == 0 {
        return Verdict::fail("dimension must be positive");
    }
    let half = Rational::new(1, 2);
    for (name, e) in [("q", q), ("r", r)] {
        if let Exponent::Finite(v) = e {
            if v <= Rational::zero() {
                return Verdict::fail(format!("{name} = {e} is not positive"));
            }
        }
        if e.reciprocal() > half {
            return Verdict::fail(format!("{name} = {e} < 2"));
        }
    }
    let di = Rational::from_integer(d as i64);
    let lhs = Rational::from_integer(2) * q.reciprocal() + di * r.reciprocal();
    let rhs = di * half;
    if lhs != rhs {
        return Verdict::fail(format!("2/q + d/r = {lhs} differs from d/2 = {rhs}"));
    }
    if d == 2 && q == Exponent::int(2) && r.is_infinite() {
        return Verdict::fail("(q, r, d) = (2, inf, 2) is the excluded endpoint");
    }
    Verdict::pass()
}

/// All admissible pairs whose `1/q` has denominator dividing `den` (plus
/// the resulting `r`), ordered by increasing `1/q`.
pub fn enumerate_admissible(d: usize, den: i64) -> Vec<AdmissiblePair> {
    let mut out = Vec::new();
    for num in 0..=den {
        let inv_q = Rational::new(num, den);
        if inv_q > Rational::new(1, 2) {
            break;
        }
        let di = Rational::from_integer(d as i64);
        let inv_r = (di * Rational::new(1, 2) - Rational::from_integer(2) * inv_q) / di;
        let (Ok(q), Ok(r)) = (Exponent::from_reciprocal(inv_q), Exponent::from_reciprocal(inv_r)) else {
            continue;
        };
        if let Ok(p) = AdmissiblePair::new(q, r, d) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Ratio `||f||_{W^{s,r}} / ||f||_{W^{s1,r1}}` (homogeneous) for the
/// embedding `W^{s1,r1} -> W^{s,r}` with `s - d/r = s1 - d/r1`.
pub fn embedding_check(
    f: &TestFunction,
    grid: &Grid,
    s: Rational,
    r: Exponent,
    s1: Rational,
    r1: Exponent,
) -> Result<f64> {
    let d = Rational::from_integer(grid.dim() as i64);
    if s > s1 {
        return Err(Error::IndexRelation(format!("need s <= s1, got {s} > {s1}")));
    }
    if r.is_infinite() || r1.reciprocal() >= Rational::one() || !r1.le(&r) {
        return Err(Error::IndexRelation(format!("need 1 < r1 <= r < inf, got r1 = {r1}, r = {r}")));
    }
    if s < Rational::zero() {
        return Err(Error::UnsupportedOrder(format!("order {s} < 0")));
    }
    if s - d * r.reciprocal() != s1 - d * r1.reciprocal() {
        return Err(Error::IndexRelation(format!(
            "scaling relation s - d/r = s1 - d/r1 fails: {} vs {}",
            s - d * r.reciprocal(),
            s1 - d * r1.reciprocal()
        )));
    }
    let field = f.sample(grid)?;
    let num = sobolev_seminorm(&field, rational_to_f64(s), r)?;
    let den = sobolev_seminorm(&field, rational_to_f64(s1), r1)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("embedding denominator vanishes".into()));
    }
    Ok(num / den)
}
