//! Sharpness schedule for potentials outside the admissible class.
//!
//! With `2/α + d/β < s + 2` the potential `V = W_{ε_k}` on `[T_k, T_{k+1})`,
//! `ε_k = k^{-b/2}`, `T_{k+1} - T_k = k^a`, lies in `L^α Ẇ^{s-2,β}` while
//! the Strichartz quotient of the rescaled standing waves grows like
//! `k^{(a-b)/q}`. Everything here is exponent arithmetic on the schedule;
//! only [`numerical_cross_check`] materializes a potential.
//!
//! The schedule starts at `k = 1` with `T_1 = 0`: the `k = 0` interval has
//! length `0^a = 0` and carries no mass.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exponent::{rational_to_f64, Exponent, Rational};
use crate::ground_state::{GroundState, Nonlinearity, RadialProfile};
use crate::grid::Grid;
use crate::norms::{is_admissible, mixed_norm, sobolev_seminorm, SobolevIndex, TimeGrid};
use crate::solver::{picard_solve, rescaled_potential, standing_wave_with_tol, PotentialSpec, SolverOptions};

/// Default margin of [`choose_powers`].
pub fn default_margin() -> Rational {
    Rational::new(1, 4)
}

fn check_class(alpha: Exponent, beta: Exponent, s: Rational, d: usize) -> Result<()> {
    if !(s >= Rational::from_integer(2) && s < Rational::from_integer(d as i64)) {
        return Err(Error::InvalidArgument(format!("s = {s} must lie in [2, d) with d = {d}")));
    }
    if alpha.reciprocal() > Rational::one() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be at least 1")));
    }
    let rb = beta.reciprocal();
    if rb >= Rational::one() || rb.is_zero() {
        return Err(Error::InvalidArgument(format!("beta = {beta} must lie in (1, inf)")));
    }
    Ok(())
}

/// `g0 = s + 2 - (2/α + d/β)`; only the branch `g0 > 0` is constructed.
pub fn admissibility_gap(alpha: Exponent, beta: Exponent, s: Rational, d: usize) -> Result<Rational> {
    check_class(alpha, beta, s, d)?;
    let g0 = s + Rational::from_integer(2)
        - (Rational::from_integer(2) * alpha.reciprocal()
            + Rational::from_integer(d as i64) * beta.reciprocal());
    if g0.is_zero() {
        return Err(Error::AdmissibleClass(format!(
            "2/alpha + d/beta = s + 2 = {}: the potential is in the admissible class, no counterexample exists",
            s + Rational::from_integer(2)
        )));
    }
    if g0 < Rational::zero() {
        return Err(Error::AdmissibleClass(format!(
            "2/alpha + d/beta > s + 2 (gap {g0}): only the branch 2/alpha + d/beta < s + 2 is constructed"
        )));
    }
    Ok(g0)
}

/// `b = (2/g0)(1 + m)`, `a = b(1 + m)`, so that `a > b > 2/g0`.
pub fn choose_powers(g0: Rational, margin: Rational) -> Result<(Rational, Rational)> {
    if g0 <= Rational::zero() {
        return Err(Error::AdmissibleClass(format!("gap {g0} is not positive")));
    }
    if margin <= Rational::zero() {
        return Err(Error::InvalidArgument(format!(
            "margin {margin} must be positive: both inequalities are strict"
        )));
    }
    let one = Rational::one();
    let b = Rational::from_integer(2) / g0 * (one + margin);
    Ok((b * (one + margin), b))
}

/// Parameters of the piecewise-rescaled potential.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupSchedule {
    pub d: usize,
    pub s: Rational,
    pub alpha: Exponent,
    pub beta: Exponent,
    pub a: Rational,
    pub b: Rational,
    /// Common factor on every `ε_k`; 1 for the schedule itself.
    pub eps_scale: f64,
}

impl BlowupSchedule {
    /// Requires `g0 > 0` and `a > b > 2/g0`.
    pub fn new(alpha: Exponent, beta: Exponent, s: Rational, d: usize, a: Rational, b: Rational) -> Result<Self> {
        let sched = Self::raw(alpha, beta, s, d, a, b)?;
        let g0 = sched.gap();
        let threshold = Rational::from_integer(2) / g0;
        if !(a > b && b > threshold) {
            return Err(Error::InvalidArgument(format!(
                "powers must satisfy a > b > 2/g0 = {threshold}, got a = {a}, b = {b}"
            )));
        }
        Ok(sched)
    }

    /// Schedule from the class indices and a margin.
    pub fn with_margin(alpha: Exponent, beta: Exponent, s: Rational, d: usize, margin: Rational) -> Result<Self> {
        let g0 = admissibility_gap(alpha, beta, s, d)?;
        let (a, b) = choose_powers(g0, margin)?;
        Self::new(alpha, beta, s, d, a, b)
    }

    /// Only the gap is checked, so boundary powers (`a = b`,
    /// `b = 2/g0`) can be explored.
    pub fn raw(alpha: Exponent, beta: Exponent, s: Rational, d: usize, a: Rational, b: Rational) -> Result<Self> {
        admissibility_gap(alpha, beta, s, d)?;
        if a <= Rational::zero() || b <= Rational::zero() {
            return Err(Error::InvalidArgument(format!("powers must be positive, got a = {a}, b = {b}")));
        }
        Ok(Self { d, s, alpha, beta, a, b, eps_scale: 1.0 })
    }

    pub fn with_eps_scale(mut self, c: f64) -> Self {
        self.eps_scale = c;
        self
    }

    pub fn gap(&self) -> Rational {
        admissibility_gap(self.alpha, self.beta, self.s, self.d).expect("validated at construction")
    }

    fn check_k(k: u64) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidArgument("schedule index starts at k = 1".into()));
        }
        Ok(())
    }

    /// `ε_k = k^{-b/2}` (times the scale).
    pub fn epsilon(&self, k: u64) -> Result<f64> {
        Self::check_k(k)?;
        Ok(self.eps_scale * (k as f64).powf(-rational_to_f64(self.b) / 2.0))
    }

    /// `T_{k+1} - T_k = k^a`.
    pub fn length(&self, k: u64) -> Result<f64> {
        Self::check_k(k)?;
        Ok((k as f64).powf(rational_to_f64(self.a)))
    }

    /// `T_1, ..., T_K` with `T_1 = 0`.
    pub fn start_times(&self, count: usize) -> Vec<f64> {
        let a = rational_to_f64(self.a);
        let mut out = Vec::with_capacity(count);
        let mut t = 0.0;
        for k in 1..=count {
            out.push(t);
            t += (k as f64).powf(a);
        }
        out
    }

    /// Exponent of `term_k ~ k^e` in the potential norm:
    /// `e = a/α - (b/2)(s + 2 - d/β)`.
    pub fn potential_exponent(&self) -> Rational {
        let d = Rational::from_integer(self.d as i64);
        self.a * self.alpha.reciprocal()
            - self.b / Rational::from_integer(2) * (self.s + Rational::from_integer(2) - d * self.beta.reciprocal())
    }

    /// Exponent of `R_k ~ k^e` for the pair `(q, r)`:
    /// `e = a/q - (b/2)(d/2 - d/r)`, which is `(a - b)/q` on admissible pairs.
    pub fn ratio_exponent(&self, q: Exponent, r: Exponent) -> Rational {
        let d = Rational::from_integer(self.d as i64);
        let half = Rational::new(1, 2);
        self.a * q.reciprocal() - self.b * half * (d * half - d * r.reciprocal())
    }
}

/// Partial sums of the potential norm series.
#[derive(Debug, Clone)]
pub struct PartialSums {
    pub terms: Vec<f64>,
    pub sums: Vec<f64>,
    pub exponent: Rational,
    pub convergent: bool,
    pub verdict: String,
}

/// `S_K = Σ_{k=1}^K |W| ε_k^{s+2-d/β} (T_{k+1} - T_k)^{1/α}` with the
/// exponent test `term_k ~ k^e`, convergent iff `e < -1`.
pub fn potential_norm_partial_sums(sched: &BlowupSchedule, w_norm: f64, count: usize) -> Result<PartialSums> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one term".into()));
    }
    let d = sched.d as f64;
    let pe = rational_to_f64(sched.s) + 2.0 - d * sched.beta.recip_f64();
    let ia = sched.alpha.recip_f64();
    let mut terms = Vec::with_capacity(count);
    let mut sums = Vec::with_capacity(count);
    let mut acc = 0.0;
    for k in 1..=count as u64 {
        let term = w_norm * sched.epsilon(k)?.powf(pe) * sched.length(k)?.powf(ia);
        acc += term;
        terms.push(term);
        sums.push(acc);
    }
    let exponent = sched.potential_exponent();
    let convergent = exponent < -Rational::one();
    let verdict = if convergent {
        format!("convergent: term_k ~ k^({exponent}) with exponent < -1")
    } else {
        format!("divergent: term_k ~ k^({exponent}) with exponent >= -1")
    };
    Ok(PartialSums { terms, sums, exponent, convergent, verdict })
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two matched points".into()));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// `R_k` on `k in [k_min, k_max]` with its fitted and predicted growth.
#[derive(Debug, Clone)]
pub struct RatioSequence {
    pub ks: Vec<u64>,
    pub values: Vec<f64>,
    pub fitted_slope: f64,
    pub predicted: Rational,
}

impl RatioSequence {
    pub fn strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }

    pub fn relative_slope_error(&self) -> f64 {
        let p = rational_to_f64(self.predicted);
        if p == 0.0 {
            self.fitted_slope.abs()
        } else {
            (self.fitted_slope - p).abs() / p.abs()
        }
    }
}

/// `R_k = ε_k^{d/2-d/r} (T_{k+1} - T_k)^{1/q}` for an admissible pair other
/// than `(∞, 2)`.
pub fn blowup_ratio_sequence(
    sched: &BlowupSchedule,
    q: Exponent,
    r: Exponent,
    k_min: u64,
    k_max: u64,
) -> Result<RatioSequence> {
    let v = is_admissible(q, r, sched.d);
    if !v.ok {
        return Err(Error::IndexRelation(v.reason));
    }
    if q.is_infinite() {
        return Err(Error::InvalidArgument(
            "the pair (inf, 2) is excluded: d/2 - d/r and 1/q both vanish, so the quotient cannot grow".into(),
        ));
    }
    if k_min == 0 || k_max <= k_min {
        return Err(Error::InvalidArgument(format!("bad index range [{k_min}, {k_max}]")));
    }
    let d = sched.d as f64;
    let pe = d / 2.0 - d * r.recip_f64();
    let iq = q.recip_f64();
    let ks: Vec<u64> = (k_min..=k_max).collect();
    let values = ks
        .iter()
        .map(|&k| Ok(sched.epsilon(k)?.powf(pe) * sched.length(k)?.powf(iq)))
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let fitted_slope = log_log_slope(&xs, &values)?;
    Ok(RatioSequence { ks, values, fitted_slope, predicted: sched.ratio_exponent(q, r) })
}

/// CSV header of [`schedule_csv`].
pub const SCHEDULE_COLUMNS: &str = "k,eps_k,T_k,term_k,S_k,R_k";

/// Rows `(k, ε_k, T_k, term_k, S_k, R_k)` for `k = 1..=count`.
pub fn schedule_csv(sched: &BlowupSchedule, q: Exponent, r: Exponent, w_norm: f64, count: usize) -> Result<String> {
    let sums = potential_norm_partial_sums(sched, w_norm, count)?;
    let starts = sched.start_times(count);
    let d = sched.d as f64;
    let pe = d / 2.0 - d * r.recip_f64();
    let mut out = String::from(SCHEDULE_COLUMNS);
    out.push('\n');
    for k in 1..=count {
        let eps = sched.epsilon(k as u64)?;
        let rk = eps.powf(pe) * sched.length(k as u64)?.powf(q.recip_f64());
        let _ = writeln!(
            out,
            "{k},{eps:.12e},{:.12e},{:.12e},{:.12e},{rk:.12e}",
            starts[k - 1],
            sums.terms[k - 1],
            sums.sums[k - 1]
        );
    }
    Ok(out)
}

/// Options of [`numerical_cross_check`].
#[derive(Debug, Clone, Copy)]
pub struct CrossCheckOptions {
    pub n: usize,
    /// Box half-width in units of `1/ε_k`.
    pub scaled_half_width: f64,
    /// Time nodes per unit of `ε_k² t`.
    pub nodes_per_phase: f64,
    pub min_nodes: usize,
    pub tail_tol: f64,
    pub solver: SolverOptions,
}

impl Default for CrossCheckOptions {
    fn default() -> Self {
        Self {
            n: 80,
            scaled_half_width: 16.0,
            nodes_per_phase: 64.0,
            min_nodes: 33,
            tail_tol: 1e-6,
            solver: SolverOptions::default(),
        }
    }
}

/// Outcome of [`numerical_cross_check`].
#[derive(Debug, Clone)]
pub struct CrossCheckReport {
    pub k: u64,
    pub eps: f64,
    pub t_start: f64,
    pub length: f64,
    pub grid: Grid,
    pub nodes: usize,
    /// `max_t ||u(t) - e^{iε²t} v(ε·)||_2 / ||v(ε·)||_2`.
    pub fidelity: f64,
    /// `max/min - 1` of `||u(t)||_{Ḣ^s}` over the nodes.
    pub hs_variation: f64,
    pub numerator: f64,
    pub numerator_bound: f64,
    pub denominator: f64,
    pub denominator_analytic: f64,
    pub quotient: f64,
    /// `C R_k` with `C = ||v||_{Ẇ^{s,r}} / (||v||_{Ḣ^s} + ||v||_{Ḣ^{s-2}})`.
    pub quotient_bound: f64,
}

impl CrossCheckReport {
    pub fn fidelity_ok(&self) -> bool {
        self.fidelity < 1e-3
    }

    pub fn constancy_ok(&self) -> bool {
        self.hs_variation < 1e-2
    }

    /// Denominator within 1% of the scaling formula and the measured
    /// quotient no more than 1% below `C R_k`.
    pub fn quotient_ok(&self) -> bool {
        (self.denominator / self.denominator_analytic - 1.0).abs() < 1e-2
            && self.quotient >= (1.0 - 1e-2) * self.quotient_bound
    }

    pub fn all_pass(&self) -> bool {
        self.fidelity_ok() && self.constancy_ok() && self.quotient_ok()
    }
}

/// `||h(v)||_{L^p}` of a radial function by the trapezoid rule on the
/// profile nodes.
fn radial_lp<F: Fn(f64) -> f64>(profile: &RadialProfile, d: usize, p: f64, h: F) -> f64 {
    let area = 2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d);
    let dr = profile.spacing();
    let n = profile.len();
    let mut acc = 0.0;
    for (i, (r, &v)) in profile.nodes().zip(profile.values()).enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        acc += w * h(v).abs().powf(p) * r.powi(d as i32 - 1);
    }
    (area * acc * dr).powf(1.0 / p)
}

/// `Γ(d/2)` for positive integers `d`.
fn gamma_half_integer(d: usize) -> f64 {
    let mut g = if d % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if d % 2 == 0 { 1.0 } else { 0.5 };
    while x < d as f64 / 2.0 - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Evolves the standing wave through `[T_k, T_{k+1}]` under `V = W_{ε_k}`
/// with the Picard solver and certifies phase-rotation fidelity,
/// `Ḣ^s` constancy and the quotient bound. Only `s = 2` is supported, where
/// `|D|^2 v = -g~(v)` gives the profile norms by radial quadrature.
pub fn numerical_cross_check(
    sched: &BlowupSchedule,
    gs: &GroundState,
    k: u64,
    q: Exponent,
    r: Exponent,
    opts: CrossCheckOptions,
) -> Result<CrossCheckReport> {
    if sched.s != Rational::from_integer(2) {
        return Err(Error::UnsupportedOrder(format!(
            "cross check needs s = 2, schedule has s = {}",
            sched.s
        )));
    }
    if gs.d != sched.d {
        return Err(Error::InvalidArgument(format!(
            "ground state is {}-dimensional, schedule is {}-dimensional",
            gs.d, sched.d
        )));
    }
    let v = is_admissible(q, r, sched.d);
    if !v.ok {
        return Err(Error::IndexRelation(v.reason));
    }
    let eps = sched.epsilon(k)?;
    let length = sched.length(k)?;
    let t_start = sched.start_times(k as usize)[k as usize - 1];
    let grid = Grid::new(sched.d, opts.n, opts.scaled_half_width / eps)?;
    let m = ((opts.nodes_per_phase * eps * eps * length).ceil() as usize + 1).max(opts.min_nodes);
    let times = TimeGrid::new(length, m)?;

    let u0 = standing_wave_with_tol(gs, eps, t_start, &grid, opts.tail_tol)?;
    let u1 = u0.scaled(Complex64::new(0.0, eps * eps));
    let potential = PotentialSpec::static_profile(rescaled_potential(&gs.w_profile, eps, &grid)?);
    let report = picard_solve(&u0, &u1, None, &potential, &times, opts.solver)?;

    let s = 2.0;
    let vnorm = sobolev_seminorm(&u0, 0.0, Exponent::int(2))?;
    let mut fidelity: f64 = 0.0;
    let mut hs_min = f64::INFINITY;
    let mut hs_max: f64 = 0.0;
    for (t, u) in times.nodes().iter().zip(report.trajectory.fields()) {
        let exact = u0.scaled(Complex64::from_polar(1.0, eps * eps * t));
        let diff = u.axpy(Complex64::new(-1.0, 0.0), &exact)?;
        fidelity = fidelity.max(sobolev_seminorm(&diff, 0.0, Exponent::int(2))? / vnorm);
        let hs = sobolev_seminorm(u, s, Exponent::int(2))?;
        hs_min = hs_min.min(hs);
        hs_max = hs_max.max(hs);
    }

    let d = sched.d as f64;
    let profile = &gs.profile;
    let lap = |x: f64| Nonlinearity::g_tilde(x);
    let v_hs = radial_lp(profile, sched.d, 2.0, lap);
    let v_hs2 = radial_lp(profile, sched.d, 2.0, |x| x);
    let v_wsr = if r.is_infinite() {
        profile.values().iter().map(|&x| lap(x).abs()).fold(0.0, f64::max)
    } else {
        radial_lp(profile, sched.d, r.to_f64(), lap)
    };

    let numerator = mixed_norm(&report.trajectory, q, SobolevIndex::homogeneous(s, r))?;
    let numerator_bound = eps.powf(s - d * r.recip_f64()) * v_wsr * length.powf(q.recip_f64());
    let denominator = sobolev_seminorm(&u0, s, Exponent::int(2))? + sobolev_seminorm(&u1, s - 2.0, Exponent::int(2))?;
    let denominator_analytic = eps.powf(s - d / 2.0) * (v_hs + v_hs2);
    let c = v_wsr / (v_hs + v_hs2);
    let rk = eps.powf(d / 2.0 - d * r.recip_f64()) * length.powf(q.recip_f64());
    Ok(CrossCheckReport {
        k,
        eps,
        t_start,
        length,
        grid,
        nodes: m,
        fidelity,
        hs_variation: hs_max / hs_min - 1.0,
        numerator,
        numerator_bound,
        denominator,
        denominator_analytic,
        quotient: numerator / denominator,
        quotient_bound: c * rk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn base() -> (Exponent, Exponent, Rational, usize) {
        (Exponent::int(2), Exponent::int(3), q(2, 1), 3)
    }

    #[test]
    fn gap_examples() {
        let (a, b, s, d) = base();
        assert_eq!(admissibility_gap(a, b, s, d).unwrap(), q(2, 1));
        let e = admissibility_gap(Exponent::int(1), Exponent::ratio(3, 2), s, d);
        assert!(matches!(e, Err(Error::AdmissibleClass(_))));
        // 2/α + d/β above s + 2
        let e = admissibility_gap(Exponent::int(1), Exponent::ratio(9, 8), s, d);
        assert!(matches!(e, Err(Error::AdmissibleClass(_))));
        assert!(admissibility_gap(a, b, q(3, 1), 3).is_err());
        assert!(admissibility_gap(Exponent::ratio(1, 2), b, s, d).is_err());
    }

    #[test]
    fn power_examples() {
        let (a, b) = choose_powers(q(2, 1), q(1, 4)).unwrap();
        assert_eq!(b, q(5, 4));
        assert_eq!(a, q(25, 16));
        assert!(choose_powers(q(2, 1), q(0, 1)).is_err());
        // the threshold for g0 = 2 is b > 1
        let (a0, b0, s, d) = base();
        assert!(BlowupSchedule::new(a0, b0, s, d, q(3, 2), q(1, 1)).is_err());
        assert!(BlowupSchedule::new(a0, b0, s, d, q(3, 2), q(11, 10)).is_ok());
        assert!(BlowupSchedule::new(a0, b0, s, d, q(6, 5), q(6, 5)).is_err());
    }

    #[test]
    fn potential_exponent_examples() {
        let (a0, b0, s, d) = base();
        let sched = BlowupSchedule::new(a0, b0, s, d, q(2, 1), q(3, 2)).unwrap();
        assert_eq!(sched.potential_exponent(), q(-5, 4));
        let margin = BlowupSchedule::with_margin(a0, b0, s, d, default_margin()).unwrap();
        // 25/32 - (5/8) * 3
        assert_eq!(margin.potential_exponent(), q(-35, 32));
        let edge = BlowupSchedule::raw(a0, b0, s, d, q(1, 1), q(1, 1)).unwrap();
        assert_eq!(edge.potential_exponent(), q(-1, 1));
        let ps = potential_norm_partial_sums(&edge, 1.0, 100).unwrap();
        assert!(!ps.convergent, "{}", ps.verdict);
    }

    #[test]
    fn partial_sums_are_cauchy() {
        let (a0, b0, s, d) = base();
        let sched = BlowupSchedule::new(a0, b0, s, d, q(2, 1), q(3, 2)).unwrap();
        let ps = potential_norm_partial_sums(&sched, 1.0, 1_000_000).unwrap();
        assert!(ps.convergent);
        let tails: Vec<f64> = [1_000usize, 10_000, 100_000, 500_000]
            .iter()
            .map(|&k| ps.sums[2 * k - 1] - ps.sums[k - 1])
            .collect();
        assert!(tails.windows(2).all(|w| w[1] < w[0]), "{tails:?}");
        // oracle: Σ_{K<k<=2K} k^{-5/4} ≈ 4 K^{-1/4} (1 - 2^{-1/4})
        let k = 500_000.0f64;
        let oracle = 4.0 * k.powf(-0.25) * (1.0 - 2f64.powf(-0.25));
        assert!((tails[3] / oracle - 1.0).abs() < 1e-4, "{} vs {oracle}", tails[3]);
    }

    #[test]
    fn ratio_growth_matches_prediction() {
        let (a0, b0, s, d) = base();
        let sched = BlowupSchedule::new(a0, b0, s, d, q(2, 1), q(3, 2)).unwrap();
        let seq = blowup_ratio_sequence(&sched, Exponent::int(2), Exponent::int(6), 100, 100_000).unwrap();
        assert_eq!(seq.predicted, q(1, 4));
        assert!(seq.relative_slope_error() < 0.02);
        assert!(seq.strictly_increasing());
        let r = |k: u64| seq.values[(k - 100) as usize];
        assert!((r(2000) / r(1000) / 2f64.powf(0.25) - 1.0).abs() < 0.05);
        // a = b leaves R_k flat
        let flat = BlowupSchedule::raw(a0, b0, s, d, q(3, 2), q(3, 2)).unwrap();
        let seq = blowup_ratio_sequence(&flat, Exponent::int(2), Exponent::int(6), 100, 1000).unwrap();
        assert!(seq.predicted.is_zero());
        assert!(seq.fitted_slope.abs() < 1e-10);
        assert!(blowup_ratio_sequence(&sched, Exponent::INF, Exponent::int(2), 100, 1000).is_err());
        assert!(blowup_ratio_sequence(&sched, Exponent::int(2), Exponent::int(4), 100, 1000).is_err());
    }

    #[test]
    fn eps_scale_leaves_slope_unchanged() {
        let (a0, b0, s, d) = base();
        let sched = BlowupSchedule::with_margin(a0, b0, s, d, default_margin()).unwrap();
        let scaled = sched.clone().with_eps_scale(0.3);
        let p = (Exponent::int(4), Exponent::int(3));
        let x = blowup_ratio_sequence(&sched, p.0, p.1, 100, 10_000).unwrap();
        let y = blowup_ratio_sequence(&scaled, p.0, p.1, 100, 10_000).unwrap();
        assert!((x.fitted_slope - y.fitted_slope).abs() < 1e-12);
        let c = y.values[0] / x.values[0];
        assert!(x.values.iter().zip(&y.values).all(|(a, b)| (b / a / c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn schedule_shape_and_csv() {
        let (a0, b0, s, d) = base();
        let sched = BlowupSchedule::with_margin(a0, b0, s, d, default_margin()).unwrap();
        let t = sched.start_times(5);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[1], 1.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        let e: Vec<f64> = (1..6).map(|k| sched.epsilon(k).unwrap()).collect();
        assert_eq!(e[0], 1.0);
        assert!(e.windows(2).all(|w| w[1] < w[0]));
        assert!(sched.epsilon(0).is_err());
        let csv = schedule_csv(&sched, Exponent::int(2), Exponent::int(6), 1.0, 4).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SCHEDULE_COLUMNS);
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn gamma_and_sphere_area() {
        assert!((gamma_half_integer(3) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((gamma_half_integer(4) - 1.0).abs() < 1e-15);
        let area3 = 2.0 * PI.powf(1.5) / gamma_half_integer(3);
        assert!((area3 - 4.0 * PI).abs() < 1e-12);
    }
}
