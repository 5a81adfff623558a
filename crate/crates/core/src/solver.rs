//! Picard solver for `u_tt + Δ²u + V(t,x)u = F` built on the Duhamel map
//!
//! ```text
//! φ(v)(t) = cos(tΔ)u0 + sin(tΔ)/Δ u1 + ∫_0^t sin((t-s)Δ)/Δ [F(s) - V(s)v(s)] ds
//! ```
//!
//! together with the standing-wave and rescaling utilities.
//!
//! The time integral is the trapezoid rule on the nodes of the time grid.
//! Because the kernel vanishes at `s = t`, the discrete map is strictly
//! lower triangular in time and each sweep can overwrite the iterate in
//! place.

use std::borrow::Cow;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exponent::{Exponent, Rational};
use crate::ground_state::{GroundState, RadialProfile};
use crate::grid::{Field, Grid, Rep};
use crate::norms::{is_admissible, TimeGrid, Trajectory, Verdict};
use crate::propagators::sinc_symbol;

type Evaluator = Arc<dyn Fn(f64) -> Result<Field> + Send + Sync>;

/// Representation of `V(t, x)`.
#[derive(Clone)]
pub enum PotentialKind {
    /// Time-independent field.
    StaticProfile(Field),
    /// `fields[k]` on `[breaks[k], breaks[k+1])`; breakpoints take the
    /// left limit.
    PiecewiseRescaled { breaks: Vec<f64>, fields: Vec<Field> },
    /// Arbitrary evaluator sampled at the quadrature nodes.
    Callable(Evaluator),
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::StaticProfile(_) => f.write_str("StaticProfile"),
            PotentialKind::PiecewiseRescaled { breaks, .. } => {
                write!(f, "PiecewiseRescaled({} pieces)", breaks.len() - 1)
            }
            PotentialKind::Callable(_) => f.write_str("Callable"),
        }
    }
}

/// Class indices `(α, β, s)` of `V ∈ L^α_t Ẇ^{s-2,β}_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialClass {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
}

#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub class: Option<PotentialClass>,
}

impl PotentialSpec {
    pub fn zero(grid: Grid) -> Self {
        Self::static_profile(Field::zeros(grid, Rep::Space))
    }

    pub fn static_profile(field: Field) -> Self {
        Self {
            kind: PotentialKind::StaticProfile(field.into_space()),
            class: None,
        }
    }

    pub fn piecewise(breaks: Vec<f64>, fields: Vec<Field>) -> Result<Self> {
        if breaks.len() < 2 || fields.len() != breaks.len() - 1 {
            return Err(Error::InvalidSchedule(format!(
                "{} breakpoints need {} fields, got {}",
                breaks.len(),
                breaks.len().saturating_sub(1),
                fields.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSchedule("breakpoints must be strictly increasing".into()));
        }
        let g = *fields[0].grid();
        if fields.iter().any(|f| *f.grid() != g) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            kind: PotentialKind::PiecewiseRescaled {
                breaks,
                fields: fields.into_iter().map(Field::into_space).collect(),
            },
            class: None,
        })
    }

    pub fn callable<F>(f: F) -> Self
    where
        F: Fn(f64) -> Result<Field> + Send + Sync + 'static,
    {
        Self {
            kind: PotentialKind::Callable(Arc::new(f)),
            class: None,
        }
    }

    pub fn with_class(mut self, class: PotentialClass) -> Self {
        self.class = Some(class);
        self
    }

    /// `V(t, ·)` in the space representation.
    pub fn at(&self, t: f64) -> Result<Cow<'_, Field>> {
        match &self.kind {
            PotentialKind::StaticProfile(f) => Ok(Cow::Borrowed(f)),
            PotentialKind::PiecewiseRescaled { breaks, fields } => {
                let end = *breaks.last().expect("non-empty");
                if t < breaks[0] || t > end {
                    return Err(Error::TimeOutOfRange { t, end });
                }
                // left limit: t in (T_k, T_{k+1}] uses piece k
                let k = breaks[1..].iter().position(|&b| t <= b).unwrap_or(fields.len() - 1);
                Ok(Cow::Borrowed(&fields[k]))
            }
            PotentialKind::Callable(f) => Ok(Cow::Owned(f(t)?.into_space())),
        }
    }
}

/// Starting iterate on each subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    Free,
    Zero,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative tolerance on successive iterates in the working norm.
    pub tol: f64,
    pub max_subdivision: usize,
    pub max_picard_iters: usize,
    /// Regularity of the working norm.
    pub s: f64,
    pub guess: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_subdivision: 12,
            max_picard_iters: 50,
            s: 2.0,
            guess: InitialGuess::Free,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubintervalReport {
    pub t_start: f64,
    pub t_end: f64,
    pub depth: usize,
    pub iterations: usize,
    pub residual: f64,
    /// Largest ratio of successive iterate differences.
    pub factor: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    /// `u_t` at the final node.
    pub final_velocity: Field,
    pub subintervals: Vec<SubintervalReport>,
}

impl SolveReport {
    pub fn max_factor(&self) -> f64 {
        self.subintervals.iter().map(|s| s.factor).fold(0.0, f64::max)
    }

    pub fn total_iterations(&self) -> usize {
        self.subintervals.iter().map(|s| s.iterations).sum()
    }

    /// Plain-text summary, one line per subinterval.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "subintervals {}", self.subintervals.len());
        let _ = writeln!(out, "t_start t_end depth iterations residual factor");
        for s in &self.subintervals {
            let _ = writeln!(
                out,
                "{:.9e} {:.9e} {} {} {:.3e} {:.3e}",
                s.t_start, s.t_end, s.depth, s.iterations, s.residual, s.factor
            );
        }
        out
    }
}

/// `max{ max_i ||<D>^s w_i||_2, (Σ_i ω_i ||<D>^s w_i||_{2d/(d-2)}²)^{1/2} }`
/// over the nodes of one subinterval; for `d <= 2` only the first term.
struct WorkingNorm {
    grid: Grid,
    weight: Vec<f64>,
    r_star: Option<f64>,
}

impl WorkingNorm {
    fn new(grid: Grid, s: f64) -> Self {
        let weight = grid.freq_sq().iter().map(|&q| (1.0 + q).powf(s / 2.0)).collect();
        let d = grid.dim();
        let r_star = (d > 2).then(|| 2.0 * d as f64 / (d as f64 - 2.0));
        Self { grid, weight, r_star }
    }

    /// `(energy part, Strichartz part)` of one spectral sample.
    fn node(&self, spec: &[Complex64]) -> Result<(f64, f64)> {
        let vol = self.grid.cell_volume();
        let e: f64 = spec.iter().zip(&self.weight).map(|(z, w)| z.norm_sqr() * w * w).sum::<f64>() * vol;
        let Some(p) = self.r_star else { return Ok((e.sqrt(), 0.0)) };
        let data = spec.iter().zip(&self.weight).map(|(z, w)| z * w).collect();
        let f = Field::from_data(self.grid, Rep::Spectral, data)?.into_space();
        let m = f.max_abs();
        let l = if m == 0.0 {
            0.0
        } else {
            let s: f64 = f.data().iter().map(|z| (z.norm() / m).powf(p)).sum();
            m * (s * vol).powf(1.0 / p)
        };
        Ok((e.sqrt(), l))
    }

    fn combine(&self, parts: &[(f64, f64)], weights: &[f64]) -> f64 {
        let e = parts.iter().map(|p| p.0).fold(0.0, f64::max);
        let l2: f64 = parts.iter().zip(weights).map(|(p, w)| w * p.1 * p.1).sum();
        e.max(l2.sqrt())
    }
}

struct Problem<'a> {
    grid: Grid,
    k2: Vec<f64>,
    nodes: &'a [f64],
    forcing: Option<Vec<Vec<Complex64>>>,
    potential: &'a PotentialSpec,
    opts: SolverOptions,
    norm: WorkingNorm,
}

struct Segment {
    disp: Vec<Vec<Complex64>>,
    vel_end: Vec<Complex64>,
    iterations: usize,
    residual: f64,
    factor: f64,
}

impl Problem<'_> {
    fn free(&self, u: &[Complex64], ut: &[Complex64], tau: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut a = u.to_vec();
        let mut b = ut.to_vec();
        for ((x, y), &w) in a.iter_mut().zip(b.iter_mut()).zip(&self.k2) {
            let (s, c) = (tau * w).sin_cos();
            let (x0, y0) = (*x, *y);
            *x = x0 * c + y0 * sinc_symbol(tau, w);
            *y = -x0 * (w * s) + y0 * c;
        }
        (a, b)
    }

    /// `F(t_i) - V(t_i) v_i` in spectral form.
    fn source(&self, i: usize, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let pot = self.potential.at(self.nodes[i])?;
        let vs = Field::from_data(self.grid, Rep::Spectral, v.to_vec())?.into_space();
        let prod = pot.pointwise_mul(&vs)?.into_spectral();
        let mut out = prod.into_data();
        match &self.forcing {
            Some(f) => out.iter_mut().zip(&f[i]).for_each(|(o, g)| *o = g - *o),
            None => out.iter_mut().for_each(|o| *o = -*o),
        }
        Ok(out)
    }

    /// Picard iteration on nodes `lo..=hi` from the state at `nodes[lo]`.
    fn segment(&self, u_a: &[Complex64], ut_a: &[Complex64], lo: usize, hi: usize) -> Result<Segment> {
        let n = self.grid.len();
        let zero = Complex64::zero();
        let t_a = self.nodes[lo];
        let free: Vec<Vec<Complex64>> = (lo..=hi).map(|i| self.free(u_a, ut_a, self.nodes[i] - t_a).0).collect();
        let mut iter: Vec<Vec<Complex64>> = match self.opts.guess {
            InitialGuess::Free => free.clone(),
            InitialGuess::Zero => vec![vec![zero; n]; hi - lo + 1],
        };
        let weights: Vec<f64> = (lo..=hi)
            .map(|i| {
                let left = if i > lo { self.nodes[i] - self.nodes[i - 1] } else { 0.0 };
                let right = if i < hi { self.nodes[i + 1] - self.nodes[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect();
        let mut diffs: Vec<f64> = Vec::new();
        let mut residual = f64::INFINITY;
        let mut vel_end = vec![zero; n];
        for it in 1..=self.opts.max_picard_iters {
            let mut cos_acc = vec![zero; n];
            let mut sin_acc = vec![zero; n];
            let mut prev_c = vec![zero; n];
            let mut prev_s = vec![zero; n];
            let mut diff_parts = Vec::with_capacity(hi - lo + 1);
            let mut new_parts = Vec::with_capacity(hi - lo + 1);
            for (j, i) in (lo..=hi).enumerate() {
                let tau = self.nodes[i] - t_a;
                let half = if j == 0 { 0.0 } else { 0.5 * (self.nodes[i] - self.nodes[i - 1]) };
                // the source at node i uses the old iterate, read before
                // it is overwritten below
                let g = self.source(i, &iter[j])?;
                let mut new = free[j].clone();
                for k in 0..n {
                    let w = self.k2[k];
                    let (s, c) = if w == 0.0 { (tau, 1.0) } else { (tau * w).sin_cos() };
                    let cg = g[k] * c;
                    let sg = g[k] * s;
                    cos_acc[k] += (prev_c[k] + cg) * half;
                    sin_acc[k] += (prev_s[k] + sg) * half;
                    prev_c[k] = cg;
                    prev_s[k] = sg;
                    if w == 0.0 {
                        new[k] += cos_acc[k] * tau - sin_acc[k];
                    } else {
                        new[k] += (cos_acc[k] * s - sin_acc[k] * c) / w;
                    }
                    if i == hi {
                        let dv = if w == 0.0 { cos_acc[k] } else { cos_acc[k] * c + sin_acc[k] * s };
                        vel_end[k] = dv;
                    }
                }
                let delta: Vec<Complex64> = new.iter().zip(&iter[j]).map(|(a, b)| a - b).collect();
                diff_parts.push(self.norm.node(&delta)?);
                new_parts.push(self.norm.node(&new)?);
                iter[j] = new;
            }
            let diff = self.norm.combine(&diff_parts, &weights);
            let size = self.norm.combine(&new_parts, &weights);
            diffs.push(diff);
            residual = if size > 0.0 { diff / size } else { diff };
            if residual <= self.opts.tol {
                let (_, free_vel) = self.free(u_a, ut_a, self.nodes[hi] - t_a);
                let vel_end = free_vel.iter().zip(&vel_end).map(|(a, b)| a + b).collect();
                return Ok(Segment {
                    disp: iter,
                    vel_end,
                    iterations: it,
                    residual,
                    factor: contraction_factor(&diffs),
                });
            }
        }
        Err(Error::IterationLimit {
            limit: self.opts.max_picard_iters,
            residual,
        })
    }
}

/// Largest ratio of successive differences, ignoring differences at the
/// round-off floor of the first one.
fn contraction_factor(diffs: &[f64]) -> f64 {
    let floor = diffs.first().copied().unwrap_or(0.0) * 1e-13;
    diffs
        .windows(2)
        .filter(|w| w[0] > floor)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max)
}

/// Solves on the time grid, halving subintervals until every observed
/// contraction factor is below `1/2`.
pub fn picard_solve(
    u0: &Field,
    u1: &Field,
    forcing: Option<&Trajectory>,
    potential: &PotentialSpec,
    times: &TimeGrid,
    opts: SolverOptions,
) -> Result<SolveReport> {
    u0.same_grid(u1)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let grid = *u0.grid();
    let forcing = match forcing {
        Some(f) => {
            if *f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if f.times() != times {
                return Err(Error::InvalidTimeGrid("forcing is sampled on a different time grid".into()));
            }
            Some(f.fields().iter().map(|x| x.to_spectral().into_data()).collect())
        }
        None => None,
    };
    let nodes = times.nodes();
    let problem = Problem {
        grid,
        k2: grid.freq_sq(),
        nodes,
        forcing,
        potential,
        opts,
        norm: WorkingNorm::new(grid, opts.s),
    };
    let mut u = u0.to_spectral().into_data();
    let mut ut = u1.to_spectral().into_data();
    let mut out: Vec<Vec<Complex64>> = vec![u.clone()];
    let mut reports = Vec::new();
    // stack of (lo, hi, depth), processed left to right
    let mut pending = vec![(0usize, nodes.len() - 1, 0usize)];
    while let Some((lo, hi, depth)) = pending.pop() {
        let attempt = problem.segment(&u, &ut, lo, hi);
        let accept = match &attempt {
            Ok(seg) => seg.factor < 0.5,
            Err(Error::IterationLimit { .. }) => false,
            Err(_) => true,
        };
        if !accept {
            if depth >= opts.max_subdivision || hi - lo < 2 {
                let factors = match attempt {
                    Ok(seg) => vec![seg.factor],
                    Err(_) => vec![f64::INFINITY],
                };
                return Err(Error::NonContraction { depth, factors });
            }
            let mid = (lo + hi) / 2;
            pending.push((mid, hi, depth + 1));
            pending.push((lo, mid, depth + 1));
            continue;
        }
        let seg = attempt?;
        reports.push(SubintervalReport {
            t_start: nodes[lo],
            t_end: nodes[hi],
            depth,
            iterations: seg.iterations,
            residual: seg.residual,
            factor: seg.factor,
        });
        let mut disp = seg.disp.into_iter();
        disp.next();
        for d in disp {
            out.push(d);
        }
        u = out.last().expect("non-empty").clone();
        ut = seg.vel_end;
    }
    let fields = out
        .into_iter()
        .map(|d| Field::from_data(grid, Rep::Spectral, d).map(Field::into_space))
        .collect::<Result<Vec<_>>>()?;
    let final_velocity = Field::from_data(grid, Rep::Spectral, ut)?.into_space();
    Ok(SolveReport {
        trajectory: Trajectory::new(times.clone(), fields)?,
        final_velocity,
        subintervals: reports,
    })
}

/// `e^{iε²t} v(ε|x|)`; the profile must fall below `tail_tol` on the box
/// boundary.
pub fn standing_wave_with_tol(gs: &GroundState, eps: f64, t: f64, grid: &Grid, tail_tol: f64) -> Result<Field> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let b = gs.boundary_value(eps, grid);
    if b > tail_tol {
        return Err(Error::DomainTooSmall(format!(
            "ground state reaches {b:e} on the box boundary (threshold {tail_tol:e})"
        )));
    }
    let v = gs.sample(eps, grid)?;
    Ok(v.scaled(Complex64::from_polar(1.0, eps * eps * t)))
}

/// [`standing_wave_with_tol`] at the default threshold `1e-12`.
pub fn standing_wave(gs: &GroundState, eps: f64, t: f64, grid: &Grid) -> Result<Field> {
    standing_wave_with_tol(gs, eps, t, grid, 1e-12)
}

/// `ε⁴ W(ε|x|)`.
pub fn rescaled_potential(w: &RadialProfile, eps: f64, grid: &Grid) -> Result<Field> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let e4 = eps.powi(4);
    Ok(Field::from_radial(*grid, |r| e4 * w.eval(eps * r)))
}

/// The pair `(q0, r0)` through which the contraction argument controls
/// `Vv`, with its admissibility verdict.
#[derive(Debug, Clone)]
pub struct Regime {
    pub q0: Exponent,
    pub r0: Exponent,
    /// `true` for `α >= 2`.
    pub large_alpha: bool,
    pub verdict: Verdict,
}

/// `α >= 2`: `1/q0 = 1/2 - 1/α`, `1/r0 = -1/β + 1/2 + (s+1)/d`;
/// `1 <= α < 2`: `1/q0 = 1 - 1/α`, `1/r0 = -1/β + 1/2 + s/d`.
/// Requires `2/α + d/β = s + 2`.
pub fn classify_regime(alpha: Exponent, beta: Exponent, s: Rational, d: usize) -> Result<Regime> {
    let one = Rational::one();
    let two = Rational::from_integer(2);
    let half = one / two;
    let ia = alpha.reciprocal();
    let ib = beta.reciprocal();
    if ia > one || ia.is_zero() {
        return Err(Error::InvalidExponent(format!("alpha = {alpha} must lie in [1, inf)")));
    }
    if ib >= one || ib.is_zero() {
        return Err(Error::InvalidExponent(format!("beta = {beta} must lie in (1, inf)")));
    }
    let dd = Rational::from_integer(d as i64);
    if two * ia + dd * ib != s + two {
        return Err(Error::IndexRelation(format!(
            "2/alpha + d/beta = {} differs from s + 2 = {}",
            two * ia + dd * ib,
            s + two
        )));
    }
    let large_alpha = ia <= half;
    let (iq, ir) = if large_alpha {
        (half - ia, -ib + half + (s + one) / dd)
    } else {
        (one - ia, -ib + half + s / dd)
    };
    let q0 = Exponent::from_reciprocal(iq)?;
    let r0 = Exponent::from_reciprocal(ir)?;
    Ok(Regime {
        q0,
        r0,
        large_alpha,
        verdict: is_admissible(q0, r0, d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::{find_ground_state, GroundStateOptions};
    use crate::norms::sobolev_seminorm;
    use crate::propagators::free_plate_solution;
    use std::sync::OnceLock;

    fn gs3() -> &'static GroundState {
        static GS: OnceLock<GroundState> = OnceLock::new();
        GS.get_or_init(|| find_ground_state(3, GroundStateOptions::default()).unwrap())
    }

    fn rel(a: &Field, b: &Field) -> f64 {
        let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.data().iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    fn gaussian(grid: Grid, w: f64) -> Field {
        Field::from_real_fn(grid, |x| (-x.iter().map(|a| a * a).sum::<f64>() / (2.0 * w * w)).exp())
    }

    #[test]
    fn zero_potential_is_free_flow() {
        let g = Grid::new(2, 32, 10.0).unwrap();
        let u0 = gaussian(g, 1.5);
        let u1 = gaussian(g, 2.0).scaled(Complex64::new(0.3, 0.0));
        let times = TimeGrid::new(2.0, 21).unwrap();
        let rep = picard_solve(&u0, &u1, None, &PotentialSpec::zero(g), &times, SolverOptions::default()).unwrap();
        for (f, &t) in rep.trajectory.fields().iter().zip(times.nodes()) {
            let exact = free_plate_solution(&u0, &u1, t).unwrap().u;
            assert!(rel(f, &exact) < 1e-13);
        }
        assert_eq!(rep.subintervals.len(), 1);
        assert!(rep.max_factor() < 0.5);
    }

    /// `u*(t,x) = cos(t) g(x)` with `V = c e^{-|x|²}`.
    fn manufactured(n: usize, m: usize) -> f64 {
        let g = Grid::new(3, n, 8.0).unwrap();
        let prof = gaussian(g, 1.5);
        let bilap = crate::grid::apply_radial_multiplier(&prof, |k2| Complex64::new(k2 * k2, 0.0)).unwrap().into_space();
        let pot = Field::from_real_fn(g, |x| 0.5 * (-x.iter().map(|a| a * a).sum::<f64>()).exp());
        let times = TimeGrid::new(1.0, m).unwrap();
        let forcing = Trajectory::from_fn(times.clone(), |t| {
            // F = -cos t g + cos t Δ²g + V cos t g
            let a = bilap.sub(&prof).unwrap().add(&pot.pointwise_mul(&prof).unwrap()).unwrap();
            a.scaled(Complex64::new(t.cos(), 0.0))
        })
        .unwrap();
        let u1 = Field::zeros(g, Rep::Space);
        let spec = PotentialSpec::static_profile(pot);
        let opts = SolverOptions { tol: 1e-12, ..Default::default() };
        let rep = picard_solve(&prof, &u1, Some(&forcing), &spec, &times, opts).unwrap();
        rep.trajectory
            .fields()
            .iter()
            .zip(times.nodes())
            .map(|(f, &t)| rel(f, &prof.scaled(Complex64::new(t.cos(), 0.0))))
            .fold(0.0, f64::max)
    }

    #[test]
    fn manufactured_solution_second_order() {
        let e1 = manufactured(32, 33);
        let e2 = manufactured(32, 65);
        assert!(e2 < 1e-3, "{e2}");
        assert!((e1 / e2).log2() >= 1.9, "{e1} {e2}");
    }

    #[test]
    fn guess_independence_and_realness() {
        let g = Grid::new(2, 32, 10.0).unwrap();
        let u0 = gaussian(g, 1.5);
        let u1 = Field::zeros(g, Rep::Space);
        let pot = Field::from_real_fn(g, |x| -(-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp());
        let spec = PotentialSpec::static_profile(pot);
        let times = TimeGrid::new(3.0, 31).unwrap();
        let a = picard_solve(&u0, &u1, None, &spec, &times, SolverOptions { tol: 1e-12, ..Default::default() }).unwrap();
        let b = picard_solve(
            &u0,
            &u1,
            None,
            &spec,
            &times,
            SolverOptions { tol: 1e-12, guess: InitialGuess::Zero, ..Default::default() },
        )
        .unwrap();
        for (x, y) in a.trajectory.fields().iter().zip(b.trajectory.fields()) {
            assert!(rel(x, y) < 1e-6);
            assert!(x.max_imag() < 1e-10);
        }
        assert!(a.subintervals.iter().all(|s| s.factor < 0.5));
    }

    #[test]
    fn strong_potential_forces_subdivision() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let u0 = gaussian(g, 1.0);
        let u1 = Field::zeros(g, Rep::Space);
        let pot = Field::from_real_fn(g, |x| 40.0 * (-x[0] * x[0]).exp());
        let times = TimeGrid::new(4.0, 129).unwrap();
        let rep = picard_solve(&u0, &u1, None, &PotentialSpec::static_profile(pot), &times, SolverOptions::default()).unwrap();
        assert!(rep.subintervals.len() > 1);
        assert!(rep.subintervals.iter().all(|s| s.factor < 0.5));
        assert_eq!(rep.trajectory.len(), times.len());
        assert!(rep.summary().lines().count() == rep.subintervals.len() + 2);
        let tight = SolverOptions { max_subdivision: 0, ..Default::default() };
        assert!(matches!(
            picard_solve(&u0, &u1, None, &PotentialSpec::static_profile(Field::from_real_fn(g, |x| 40.0 * (-x[0] * x[0]).exp())), &times, tight),
            Err(Error::NonContraction { .. })
        ));
    }

    #[test]
    fn piecewise_takes_left_limit() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let a = Field::from_real_fn(g, |_| 1.0);
        let b = Field::from_real_fn(g, |_| 2.0);
        let spec = PotentialSpec::piecewise(vec![0.0, 1.0, 2.0], vec![a, b]).unwrap();
        assert_eq!(spec.at(0.0).unwrap().data()[0].re, 1.0);
        assert_eq!(spec.at(1.0).unwrap().data()[0].re, 1.0);
        assert_eq!(spec.at(1.5).unwrap().data()[0].re, 2.0);
        assert!(spec.at(2.5).is_err());
        let c = Field::zeros(g, Rep::Space);
        assert!(PotentialSpec::piecewise(vec![0.0, 0.0], vec![c]).is_err());
    }

    #[test]
    fn standing_wave_properties() {
        let gs = gs3();
        let g = Grid::new(3, 32, 28.0).unwrap();
        let v = gs.sample(1.0, &g).unwrap();
        let w0 = standing_wave(gs, 1.0, 0.0, &g).unwrap();
        assert!(rel(&w0, &v) == 0.0);
        let wt = standing_wave(gs, 1.0, 0.7, &g).unwrap();
        for (a, b) in wt.data().iter().zip(v.data()) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        let small = Grid::new(3, 16, 8.0).unwrap();
        assert!(matches!(standing_wave(gs, 1.0, 0.0, &small), Err(Error::DomainTooSmall(_))));
        assert!(standing_wave(gs, 0.0, 0.0, &g).is_err());
    }

    #[test]
    fn standing_wave_sobolev_scaling() {
        // ||u_ε||_{Ḣ^2} = ε^{2 - 3/2} ||v||_{Ḣ^2}, d = 3
        let gs = gs3();
        let g1 = Grid::new(3, 64, 24.0).unwrap();
        let g2 = Grid::new(3, 64, 48.0).unwrap();
        let a = sobolev_seminorm(&standing_wave_with_tol(gs, 1.0, 0.3, &g1, 1e-9).unwrap(), 2.0, Exponent::int(2)).unwrap();
        let b = sobolev_seminorm(&standing_wave_with_tol(gs, 0.5, 0.3, &g2, 1e-9).unwrap(), 2.0, Exponent::int(2)).unwrap();
        let ratio = b / (0.5f64.powf(0.5) * a);
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn rescaled_potential_scaling() {
        let gs = gs3();
        let g = Grid::new(3, 32, 28.0).unwrap();
        let w1 = rescaled_potential(&gs.w_profile, 1.0, &g).unwrap();
        let direct = Field::from_radial(g, |r| gs.w(r));
        assert!(rel(&w1, &direct) == 0.0);
        let wh = rescaled_potential(&gs.w_profile, 0.5, &g).unwrap();
        // sup norm scales by ε⁴ on nested grids (the origin is a node)
        assert!((wh.max_abs() - 0.0625 * w1.max_abs()).abs() < 1e-14 * w1.max_abs());
        // ||W_ε||_{Ẇ^{0,2}} = ε^{4 - 3/2} ||W||, s = 2, β = 2
        let g1 = Grid::new(3, 64, 16.0).unwrap();
        let g2 = Grid::new(3, 64, 32.0).unwrap();
        let a = sobolev_seminorm(&rescaled_potential(&gs.w_profile, 1.0, &g1).unwrap(), 0.0, Exponent::int(2)).unwrap();
        let b = sobolev_seminorm(&rescaled_potential(&gs.w_profile, 0.5, &g2).unwrap(), 0.0, Exponent::int(2)).unwrap();
        let ratio = b / (0.5f64.powf(2.5) * a);
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn regimes() {
        let r = |a: i64, b: i64| Rational::new(a, b);
        // d = 5, s = 2, α = 4: 1/2 + 5/β = 4 gives β = 10/7
        let reg = classify_regime(Exponent::int(4), Exponent::ratio(10, 7), r(2, 1), 5).unwrap();
        assert!(reg.large_alpha);
        assert_eq!(reg.q0, Exponent::int(4));
        // 1/r0 = -7/10 + 1/2 + 3/5 = 2/5
        assert_eq!(reg.r0, Exponent::ratio(5, 2));
        assert!(reg.verdict.ok);
        // d = 3, s = 2, α = 3/2: β = 9/8, 1/q0 = 1/3, 1/r0 = 5/18
        let reg = classify_regime(Exponent::ratio(3, 2), Exponent::ratio(9, 8), r(2, 1), 3).unwrap();
        assert!(!reg.large_alpha);
        assert_eq!(reg.q0, Exponent::int(3));
        assert_eq!(reg.r0, Exponent::ratio(18, 5));
        assert!(reg.verdict.ok);
        // α = 1 gives the energy pair
        let reg = classify_regime(Exponent::int(1), Exponent::ratio(3, 2), r(2, 1), 3).unwrap();
        assert_eq!((reg.q0, reg.r0), (Exponent::Infinite, Exponent::int(2)));
        assert!(matches!(
            classify_regime(Exponent::int(2), Exponent::int(3), r(2, 1), 3),
            Err(Error::IndexRelation(_))
        ));
        assert!(classify_regime(Exponent::ratio(1, 2), Exponent::int(3), r(2, 1), 3).is_err());
    }
}
