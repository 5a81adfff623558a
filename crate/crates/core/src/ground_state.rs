//! Stationary solutions: the explicit 1-D soliton `v = (3/2) sech²(x/2)` and
//! the radial ground state of `-Δv + v - 3v³ + v⁵ = 0` for `d >= 3`, together
//! with the potential `W` for which `Δ²v - v + Wv = 0`.
//!
//! Radial profiles are sampled on a uniform node set `r_i = i h` and
//! interpolated by cubic Hermite polynomials through `(v, v')`.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{apply_radial_multiplier, partial_derivative, Field, Grid};

/// `g(s) = -s + 3s³ - s⁵`, its primitive `G` and the critical exponent.
#[derive(Debug, Clone, Copy, Default)]
pub struct Nonlinearity;

impl Nonlinearity {
    pub const P1: u32 = 3;
    pub const P2: u32 = 5;

    pub fn g(s: f64) -> f64 {
        let s2 = s * s;
        s * (-1.0 + s2 * (3.0 - s2))
    }

    /// `G(s) = -s²/2 + (3/4)s⁴ - s⁶/6`.
    pub fn primitive(s: f64) -> f64 {
        let s2 = s * s;
        s2 * (-0.5 + s2 * (0.75 - s2 / 6.0))
    }

    /// `g~(v) = -g(v)`, the right-hand side of `Δv = g~(v)`.
    pub fn g_tilde(v: f64) -> f64 {
        -Self::g(v)
    }

    pub fn g_tilde_prime(v: f64) -> f64 {
        let v2 = v * v;
        1.0 - 9.0 * v2 + 5.0 * v2 * v2
    }

    /// `l = (d+2)/(d-2)`.
    pub fn critical_exponent(d: usize) -> Result<f64> {
        if d < 3 {
            return Err(Error::InvalidArgument(format!("critical exponent needs d >= 3, got {d}")));
        }
        Ok((d as f64 + 2.0) / (d as f64 - 2.0))
    }

    /// Interval on which `G > 0`: `ζ²` between the roots of `z² - 4.5z + 3`.
    pub fn positive_primitive_interval() -> (f64, f64) {
        let disc = (4.5f64 * 4.5 - 12.0).sqrt();
        (((4.5 - disc) / 2.0).sqrt(), ((4.5 + disc) / 2.0).sqrt())
    }
}

/// `(3/2) / cosh²(x/2)`.
pub fn newton_1d(x: f64) -> f64 {
    let c = (x / 2.0).cosh();
    1.5 / (c * c)
}

pub fn newton_1d_derivative(x: f64) -> f64 {
    -2.0 * newton_1d(x) * (x / 2.0).tanh() / 2.0
}

/// `W = -(10/3)v² + 5v` with `v = newton_1d(x)`.
pub fn w_1d(x: f64) -> f64 {
    let v = newton_1d(x);
    -(10.0 / 3.0) * v * v + 5.0 * v
}

/// Maximal residuals of the 1-D identities under spectral differentiation.
#[derive(Debug, Clone, Copy)]
pub struct NewtonResiduals {
    /// `max |-v'' + v - v²|`.
    pub second_order: f64,
    /// `max |v'''' - v + Wv|`.
    pub fourth_order: f64,
    /// `max |v'''' - v + 3v² - 2v³ + 2(v')²|`.
    pub intermediate: f64,
}

pub fn newton_residuals(grid: &Grid) -> Result<NewtonResiduals> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("the Newton soliton is one-dimensional".into()));
    }
    let v = Field::from_real_fn(*grid, |x| newton_1d(x[0]));
    let w = Field::from_real_fn(*grid, |x| w_1d(x[0]));
    let neg_vxx = apply_radial_multiplier(&v, |k2| Complex64::new(k2, 0.0))?.into_space();
    let v4 = apply_radial_multiplier(&v, |k2| Complex64::new(k2 * k2, 0.0))?.into_space();
    let vx = partial_derivative(&v, 0)?;
    let (mut r2, mut r4, mut ri) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..grid.len() {
        let vi = v.data()[i].re;
        let d1 = vx.data()[i].re;
        let d4 = v4.data()[i].re;
        r2 = r2.max((neg_vxx.data()[i].re + vi - vi * vi).abs());
        r4 = r4.max((d4 - vi + w.data()[i].re * vi).abs());
        ri = ri.max((d4 - vi + 3.0 * vi * vi - 2.0 * vi * vi * vi + 2.0 * d1 * d1).abs());
    }
    Ok(NewtonResiduals {
        second_order: r2,
        fourth_order: r4,
        intermediate: ri,
    })
}

/// Outcome of the three Berestycki-Lions hypotheses for `g`.
#[derive(Debug, Clone)]
pub struct BlReport {
    pub d: usize,
    /// `g(s)/s` on the mesh `s = 10^-6 .. 10^-1`; the limit must be `-1`.
    pub small_ratios: Vec<(f64, f64)>,
    pub limit_ok: bool,
    /// `g(s)/s^l` at large `s`; must be `<= 0`.
    pub growth_samples: Vec<(f64, f64)>,
    pub growth_ok: bool,
    /// Scanned `ζ` with the largest `G(ζ)`.
    pub zeta: f64,
    pub g_at_zeta: f64,
    pub zeta_ok: bool,
}

impl BlReport {
    pub fn all_pass(&self) -> bool {
        self.limit_ok && self.growth_ok && self.zeta_ok
    }
}

pub fn check_bl_conditions(d: usize) -> Result<BlReport> {
    let l = Nonlinearity::critical_exponent(d)?;
    let small_ratios: Vec<(f64, f64)> = (1..=6)
        .rev()
        .map(|k| {
            let s = 10f64.powi(-k);
            (s, Nonlinearity::g(s) / s)
        })
        .collect();
    let limit_ok = (small_ratios[0].1 + 1.0).abs() < 1e-5
        && small_ratios.windows(2).all(|w| (w[0].1 + 1.0).abs() <= (w[1].1 + 1.0).abs());
    let growth_samples: Vec<(f64, f64)> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&s| (s, Nonlinearity::g(s) / s.powf(l)))
        .collect();
    let growth_ok = growth_samples.iter().all(|&(_, q)| q <= 0.0);
    let (mut zeta, mut best) = (0.0, f64::NEG_INFINITY);
    for i in 0..=2500 {
        let z = 2.5 * i as f64 / 2500.0;
        let gz = Nonlinearity::primitive(z);
        if gz > best {
            best = gz;
            zeta = z;
        }
    }
    Ok(BlReport {
        d,
        small_ratios,
        limit_ok,
        growth_samples,
        growth_ok,
        zeta,
        g_at_zeta: best,
        zeta_ok: best > 0.0,
    })
}

/// Uniformly sampled radial function with cubic Hermite interpolation;
/// zero beyond the last node.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    h: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl RadialProfile {
    pub fn new(h: f64, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) || values.len() < 2 || values.len() != derivs.len() {
            return Err(Error::InvalidArgument("radial profile needs h > 0 and matching samples".into()));
        }
        Ok(Self { h, values, derivs })
    }

    pub fn from_fn<F, G>(h: f64, radius: f64, f: F, df: G) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let n = (radius / h).round() as usize + 1;
        let r: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        Self::new(h, r.iter().map(|&x| f(x)).collect(), r.iter().map(|&x| df(x)).collect())
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn radius(&self) -> f64 {
        self.h * (self.values.len() - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.h)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    fn locate(&self, r: f64) -> Option<(usize, f64)> {
        let r = r.abs();
        let x = r / self.h;
        let last = self.values.len() - 1;
        if x > last as f64 {
            return None;
        }
        let i = (x.floor() as usize).min(last - 1);
        Some((i, x - i as f64))
    }

    /// Value at `|r|` (even extension).
    pub fn eval(&self, r: f64) -> f64 {
        let Some((i, t)) = self.locate(r) else { return 0.0 };
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.derivs[i] * self.h, self.derivs[i + 1] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// Radial derivative at `r >= 0`.
    pub fn eval_deriv(&self, r: f64) -> f64 {
        let Some((i, t)) = self.locate(r) else { return 0.0 };
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.derivs[i] * self.h, self.derivs[i + 1] * self.h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / self.h
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `|f(R)|` at the last node.
    pub fn tail(&self) -> f64 {
        self.values.last().map(|v| v.abs()).unwrap_or(0.0)
    }
}

/// Classification of one radial shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shot {
    /// `v` changes sign at `r`: overshoot.
    CrossesZero(f64),
    /// `v'` reverses its initial sign while `v > 0`: undershoot.
    TurnsBack(f64),
    /// `v` exceeds the escape cap.
    Escapes(f64),
    /// Reached `R` without an event.
    Decays,
}

impl Shot {
    pub fn name(&self) -> &'static str {
        match self {
            Shot::CrossesZero(_) => "CROSSES_ZERO",
            Shot::TurnsBack(_) => "TURNS_BACK",
            Shot::Escapes(_) => "ESCAPES",
            Shot::Decays => "DECAYS",
        }
    }
}

/// Step size of the classical Runge-Kutta integrator and the escape cap.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub h: f64,
    pub escape_cap: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { h: 1e-3, escape_cap: 10.0 }
    }
}

fn radial_rhs(d: usize, r: f64, v: f64, vp: f64) -> f64 {
    let g = Nonlinearity::g_tilde(v);
    if r == 0.0 {
        g / d as f64
    } else {
        g - (d as f64 - 1.0) / r * vp
    }
}

fn rk4_step(d: usize, r: f64, v: f64, vp: f64, h: f64) -> (f64, f64) {
    let k1v = vp;
    let k1p = radial_rhs(d, r, v, vp);
    let k2v = vp + 0.5 * h * k1p;
    let k2p = radial_rhs(d, r + 0.5 * h, v + 0.5 * h * k1v, k2v);
    let k3v = vp + 0.5 * h * k2p;
    let k3p = radial_rhs(d, r + 0.5 * h, v + 0.5 * h * k2v, k3v);
    let k4v = vp + h * k3p;
    let k4p = radial_rhs(d, r + h, v + h * k3v, k4v);
    (
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        vp + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

/// Integrates from `r = 0`; samples are recorded at every step until the
/// first event.
fn integrate(d: usize, sigma: f64, radius: f64, ctl: StepControl) -> Result<(Shot, Vec<f64>, Vec<f64>)> {
    if d < 3 {
        return Err(Error::InvalidArgument(format!("radial shooting needs d >= 3, got {d}")));
    }
    if !(sigma > 0.0) || !(ctl.h > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidArgument("shooting needs sigma, h and R positive".into()));
    }
    let h = ctl.h;
    let steps = (radius / h).round() as usize;
    // even Taylor start v = sigma + a r² + b r⁴
    let a = Nonlinearity::g_tilde(sigma) / (2.0 * d as f64);
    let b = Nonlinearity::g_tilde_prime(sigma) * a / (4.0 * (d as f64 + 2.0));
    let mut vs = vec![sigma];
    let mut ps = vec![0.0];
    let (mut v, mut vp) = (sigma + a * h * h + b * h.powi(4), 2.0 * a * h + 4.0 * b * h.powi(3));
    // sign of the initial motion; a later reversal is an undershoot
    let dir = a.signum();
    for i in 1..=steps {
        let r = i as f64 * h;
        if !v.is_finite() || !vp.is_finite() {
            return Err(Error::StepControl { r });
        }
        if v < 0.0 {
            let prev = *vs.last().unwrap();
            let frac = prev / (prev - v);
            return Ok((Shot::CrossesZero(r - h + frac * h), vs, ps));
        }
        if v > ctl.escape_cap {
            return Ok((Shot::Escapes(r), vs, ps));
        }
        if vp * dir < 0.0 && v > 0.0 {
            return Ok((Shot::TurnsBack(r), vs, ps));
        }
        vs.push(v);
        ps.push(vp);
        let (nv, np) = rk4_step(d, r, v, vp, h);
        v = nv;
        vp = np;
    }
    Ok((Shot::Decays, vs, ps))
}

/// Classifies the radial solution with `v(0) = σ`, `v'(0) = 0` on `[0, R]`.
pub fn shoot_radial(d: usize, sigma: f64, radius: f64, ctl: StepControl) -> Result<Shot> {
    Ok(integrate(d, sigma, radius, ctl)?.0)
}

/// Least-squares fit of `log(r^p f(r)) = log C - δ r` on a tail window.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub c: f64,
    pub delta: f64,
    /// Algebraic prefactor power `p` removed before fitting.
    pub power: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl DecayFit {
    pub fn fit(profile: &RadialProfile, power: f64, r_min: f64, r_max: f64) -> Result<Self> {
        let (mut sx, mut sy, mut sxx, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (r, &f) in profile.nodes().zip(profile.values()) {
            if r < r_min || r > r_max {
                continue;
            }
            if !(f > 0.0) {
                return Err(Error::Certification(format!("non-positive tail value {f:e} at r = {r}")));
            }
            let y = (r.powf(power) * f).ln();
            sx += r;
            sy += y;
            sxx += r * r;
            sxy += r * y;
            n += 1.0;
        }
        if n < 3.0 {
            return Err(Error::InvalidArgument("decay window holds fewer than three nodes".into()));
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icept = (sy - slope * sx) / n;
        Ok(Self {
            c: icept.exp(),
            delta: -slope,
            power,
            r_min,
            r_max,
        })
    }
}

/// Radial ground state with its potential.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub d: usize,
    pub profile: RadialProfile,
    pub sigma_star: f64,
    /// Final bisection bracket `(lo, hi)`.
    pub bracket: (f64, f64),
    /// Last node taken from the shooting integration; the tail beyond it
    /// is the matched linearized decay.
    pub matching_radius: f64,
    pub decay: DecayFit,
    pub w_profile: RadialProfile,
}

/// Options of [`find_ground_state`].
#[derive(Debug, Clone, Copy)]
pub struct GroundStateOptions {
    pub tol_bracket: f64,
    pub radius: f64,
    pub step: StepControl,
    /// Bracket and bisection shots agree to this relative level up to the
    /// matching point.
    pub match_rel: f64,
    /// Width of the window before the matching point over which the shot
    /// is blended into the tail.
    pub blend_width: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tol_bracket: 1e-12,
            radius: 25.0,
            step: StepControl::default(),
            match_rel: 1e-4,
            blend_width: 1.0,
        }
    }
}

/// Degree-nine smoothstep with four vanishing derivatives at both ends,
/// and its derivative.
fn smoothstep(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    let t4 = t.powi(4);
    let p = t4 * t * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + 70.0 * t))));
    let dp = 630.0 * t4 * (1.0 - t).powi(4);
    (p, dp)
}

/// Bisection between an undershoot and an overshoot in `σ ∈ (0, 3]`, then
/// the tail is replaced by `c r^{-(d-1)/2} e^{-r}`.
pub fn find_ground_state(d: usize, opts: GroundStateOptions) -> Result<GroundState> {
    if d < 3 {
        return Err(Error::InvalidArgument(format!("ground state construction needs d >= 3, got {d}")));
    }
    let ctl = opts.step;
    // shots only need to reach the divergence region
    let shot_radius = opts.radius;
    let mut lo = None;
    let mut hi = None;
    let mut prev: Option<(f64, Shot)> = None;
    for i in 1..=60 {
        let s = 0.05 * i as f64;
        let shot = shoot_radial(d, s, shot_radius, ctl)?;
        if let Some((ps, Shot::TurnsBack(_))) = prev {
            if matches!(shot, Shot::CrossesZero(_)) {
                lo = Some(ps);
                hi = Some(s);
                break;
            }
        }
        prev = Some((s, shot));
    }
    let (Some(mut lo), Some(mut hi)) = (lo, hi) else {
        return Err(Error::Construction("no undershoot/overshoot bracket in (0, 3]".into()));
    };
    while hi - lo > opts.tol_bracket {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot_radial(d, mid, shot_radius, ctl)? {
            Shot::TurnsBack(_) => lo = mid,
            Shot::CrossesZero(_) => hi = mid,
            Shot::Decays => {
                lo = mid;
                hi = mid;
            }
            Shot::Escapes(r) => {
                return Err(Error::Construction(format!("shot at sigma = {mid} escaped at r = {r}")))
            }
        }
    }
    let sigma = 0.5 * (lo + hi);
    let (_, v_lo, _) = integrate(d, lo, shot_radius, ctl)?;
    let (_, v_hi, _) = integrate(d, hi, shot_radius, ctl)?;
    let (_, v_mid, p_mid) = integrate(d, sigma, shot_radius, ctl)?;
    let h = ctl.h;
    let limit = v_lo.len().min(v_hi.len()).min(v_mid.len());
    let mut m = 1;
    while m < limit
        && (v_hi[m] - v_lo[m]).abs() <= opts.match_rel * v_mid[m]
        && p_mid[m] < 0.0
    {
        m += 1;
    }
    let m = m - 1;
    let rm = m as f64 * h;
    if rm < 4.0 {
        return Err(Error::Construction(format!("shooting profile unreliable beyond r = {rm}")));
    }
    let p = (d as f64 - 1.0) / 2.0;
    let c = v_mid[m] * rm.powf(p) * rm.exp();
    let tail = |r: f64| c * r.powf(-p) * (-r).exp();
    let tail_d = |r: f64| -tail(r) * (1.0 + p / r);
    let n = (opts.radius / h).round() as usize + 1;
    let r_blend = (rm - opts.blend_width).max(0.0);
    let mut values = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for i in 0..n {
        let r = i as f64 * h;
        if r <= r_blend {
            values.push(v_mid[i]);
            derivs.push(p_mid[i]);
        } else if i <= m {
            // C⁴ transition from the shot to the tail
            let (x, dx) = smoothstep((r - r_blend) / (rm - r_blend));
            let dx = dx / (rm - r_blend);
            let gap = tail(r) - v_mid[i];
            values.push(v_mid[i] + x * gap);
            derivs.push(p_mid[i] + x * (tail_d(r) - p_mid[i]) + dx * gap);
        } else {
            values.push(tail(r));
            derivs.push(tail_d(r));
        }
    }
    let profile = RadialProfile::new(h, values, derivs)?;
    let decay = DecayFit::fit(&profile, p, 0.5 * rm, rm)?;
    let w_profile = assemble_potential_profile(d, &profile)?;
    Ok(GroundState {
        d,
        profile,
        sigma_star: sigma,
        bracket: (lo, hi),
        matching_radius: rm,
        decay,
        w_profile,
    })
}

impl GroundState {
    /// The explicit 1-D soliton sampled on `[0, radius]`.
    pub fn newton(h: f64, radius: f64) -> Result<Self> {
        let profile = RadialProfile::from_fn(h, radius, newton_1d, newton_1d_derivative)?;
        let w_profile = RadialProfile::from_fn(h, radius, w_1d, |x| {
            let v = newton_1d(x);
            (-(20.0 / 3.0) * v + 5.0) * newton_1d_derivative(x)
        })?;
        let decay = DecayFit::fit(&profile, 0.0, 0.5 * radius, 0.75 * radius)?;
        Ok(Self {
            d: 1,
            profile,
            sigma_star: 1.5,
            bracket: (1.5, 1.5),
            matching_radius: radius,
            decay,
            w_profile,
        })
    }

    pub fn v(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }

    pub fn w(&self, r: f64) -> f64 {
        self.w_profile.eval(r)
    }

    /// Samples `v(ε|x|)`.
    pub fn sample(&self, eps: f64, grid: &Grid) -> Result<Field> {
        if grid.dim() != self.d {
            return Err(Error::InvalidArgument(format!(
                "ground state is {}-dimensional, grid is {}-dimensional",
                self.d,
                grid.dim()
            )));
        }
        Ok(Field::from_radial(*grid, |r| self.profile.eval(eps * r)))
    }

    /// Largest value of `v(ε|x|)` on the box boundary.
    pub fn boundary_value(&self, eps: f64, grid: &Grid) -> f64 {
        self.profile.eval(eps * grid.half_width())
    }

    /// CSV with columns `r, v, v', W`.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::new();
        if !header.is_empty() {
            let _ = writeln!(out, "# {header}");
        }
        out.push_str("r,v,dv,W\n");
        for (i, r) in self.profile.nodes().enumerate() {
            let _ = writeln!(
                out,
                "{:.6},{:.16e},{:.16e},{:.16e}",
                r,
                self.profile.values()[i],
                self.profile.derivs()[i],
                self.w_profile.values()[i]
            );
        }
        out
    }
}

/// `W = -5v⁸ + 24v⁶ - 33v⁴ + 12v² - 20v²|∇v|² + 18|∇v|²`.
pub fn potential_formula(v: f64, dv: f64) -> f64 {
    let a = v * v;
    let g2 = dv * dv;
    a * (12.0 + a * (-33.0 + a * (24.0 - 5.0 * a))) + g2 * (18.0 - 20.0 * a)
}

fn assemble_potential_profile(d: usize, profile: &RadialProfile) -> Result<RadialProfile> {
    let h = profile.spacing();
    let mut w = Vec::with_capacity(profile.len());
    let mut dw = Vec::with_capacity(profile.len());
    for (r, (&v, &p)) in profile.nodes().zip(profile.values().iter().zip(profile.derivs())) {
        w.push(potential_formula(v, p));
        // v'' from the radial equation
        let vpp = if r == 0.0 {
            Nonlinearity::g_tilde(v) / d as f64
        } else {
            Nonlinearity::g_tilde(v) - (d as f64 - 1.0) / r * p
        };
        let a = v * v;
        let dpoly = 2.0 * v * (12.0 + a * (-66.0 + a * (72.0 - 20.0 * a)));
        dw.push(dpoly * p - 40.0 * v * p * p * p + 2.0 * p * vpp * (18.0 - 20.0 * a));
    }
    RadialProfile::new(h, w, dw)
}

/// Pointwise assembly of the potential from a ground state.
pub fn assemble_potential(gs: &GroundState) -> Result<RadialProfile> {
    if gs.d == 1 {
        return Ok(gs.w_profile.clone());
    }
    assemble_potential_profile(gs.d, &gs.profile)
}

/// Residual report of the fourth-order identities.
#[derive(Debug, Clone, Copy)]
pub struct FourthOrderReport {
    /// `max |Δv - g~(v)|` over `[0, r_second]`.
    pub second_order: f64,
    pub r_second: f64,
    /// `max |Δ²v - v + Wv|` over the nodes with `v > v_floor` and `r <= r_max`.
    pub fourth_order: f64,
    /// Same range, `Δ²v - Δv + 18v|∇v|² + 9v²Δv - 20v³|∇v|² - 5v⁴Δv`.
    pub intermediate: f64,
    pub r_max: f64,
}

// sixth-order central stencils at spacing 1
const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 7] = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
const D3: [f64; 9] = [
    -7.0 / 240.0,
    3.0 / 10.0,
    -169.0 / 120.0,
    61.0 / 30.0,
    0.0,
    -61.0 / 30.0,
    169.0 / 120.0,
    -3.0 / 10.0,
    7.0 / 240.0,
];
const D4: [f64; 9] = [
    7.0 / 240.0,
    -2.0 / 5.0,
    169.0 / 60.0,
    -122.0 / 15.0,
    91.0 / 8.0,
    -122.0 / 15.0,
    169.0 / 60.0,
    -2.0 / 5.0,
    7.0 / 240.0,
];

fn stencil(f: &dyn Fn(f64) -> f64, r: f64, h: f64, c: &[f64], order: i32) -> f64 {
    let half = (c.len() / 2) as f64;
    c.iter()
        .enumerate()
        .map(|(j, &w)| w * f(r + (j as f64 - half) * h))
        .sum::<f64>()
        / h.powi(order)
}

/// Radial derivatives `(v', v'', v''', v'''')` by sixth-order central
/// differences of the even extension.
pub fn radial_derivatives(profile: &RadialProfile, r: f64, h: f64) -> [f64; 4] {
    let f = |x: f64| profile.eval(x);
    [
        stencil(&f, r, h, &D1, 1),
        stencil(&f, r, h, &D2, 2),
        stencil(&f, r, h, &D3, 3),
        stencil(&f, r, h, &D4, 4),
    ]
}

/// `(Δv, Δ²v)` from radial derivatives; `r = 0` uses the even limits.
pub fn radial_laplacians(d: usize, r: f64, der: [f64; 4]) -> (f64, f64) {
    let k = d as f64 - 1.0;
    let [d1, d2, d3, d4] = der;
    if r == 0.0 {
        (d as f64 * d2, d4 * (1.0 + 2.0 * k + k * (d as f64 - 3.0) / 3.0))
    } else {
        let lap = d2 + k / r * d1;
        let m = k * (d as f64 - 3.0);
        (lap, d4 + 2.0 * k / r * d3 + m / (r * r) * d2 - m / (r * r * r) * d1)
    }
}

/// Finite-difference check of `Δv = g~(v)`, `Δ²v - v + Wv = 0` and the
/// intermediate identity on the radial profile.
pub fn verify_fourth_order(gs: &GroundState, w: &RadialProfile, fd_step: f64, r_max: f64, v_floor: f64) -> Result<FourthOrderReport> {
    if gs.d < 3 {
        return Err(Error::InvalidArgument("use newton_residuals for d = 1".into()));
    }
    let d = gs.d;
    let h = gs.profile.spacing();
    let stride = (fd_step / h).round().max(1.0) as usize;
    let hs = stride as f64 * h;
    // keep stencils clear of the profile end
    let last = gs.profile.len().saturating_sub(5 * stride + 1);
    let (mut r2, mut r4, mut ri) = (0.0f64, 0.0f64, 0.0f64);
    for i in (0..last).step_by(stride) {
        let r = i as f64 * h;
        let v = gs.profile.values()[i];
        let der = radial_derivatives(&gs.profile, r, hs);
        let (lap, bilap) = radial_laplacians(d, r, der);
        if r <= gs.matching_radius {
            r2 = r2.max((lap - Nonlinearity::g_tilde(v)).abs());
        }
        if r > r_max || v <= v_floor {
            continue;
        }
        let g2 = der[0] * der[0];
        r4 = r4.max((bilap - v + w.values()[i] * v).abs());
        let v2 = v * v;
        ri = ri.max(
            (bilap - lap + 18.0 * v * g2 + 9.0 * v2 * lap - 20.0 * v2 * v * g2 - 5.0 * v2 * v2 * lap).abs(),
        );
    }
    let report = FourthOrderReport {
        second_order: r2,
        r_second: gs.matching_radius,
        fourth_order: r4,
        intermediate: ri,
        r_max,
    };
    Ok(report)
}

/// Relative `L²` residual of `Δ²v - v + Wv` with spectral derivatives on a
/// periodic grid (cross-check of the radial computation).
pub fn spectral_fourth_order_residual(gs: &GroundState, grid: &Grid) -> Result<f64> {
    let v = gs.sample(1.0, grid)?;
    let w = Field::from_radial(*grid, |r| gs.w_profile.eval(r));
    let bilap = apply_radial_multiplier(&v, |k2| Complex64::new(k2 * k2, 0.0))?.into_space();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..grid.len() {
        let vi = v.data()[i].re;
        num += (bilap.data()[i].re - vi + w.data()[i].re * vi).powi(2);
        den += vi * vi;
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn gs3() -> &'static GroundState {
        static GS: OnceLock<GroundState> = OnceLock::new();
        GS.get_or_init(|| find_ground_state(3, GroundStateOptions::default()).unwrap())
    }

    #[test]
    fn nonlinearity_identities() {
        assert_eq!(Nonlinearity::g(0.0), 0.0);
        assert_eq!(Nonlinearity::primitive(0.0), 0.0);
        for &s in &[0.3, 1.1, 2.0] {
            assert_eq!(Nonlinearity::g(-s), -Nonlinearity::g(s));
            let h = 1e-5;
            let dg = (Nonlinearity::primitive(s + h) - Nonlinearity::primitive(s - h)) / (2.0 * h);
            assert!((dg - Nonlinearity::g(s)).abs() < 1e-8);
        }
        assert_eq!(Nonlinearity::critical_exponent(3).unwrap(), 5.0);
        let (a, b) = Nonlinearity::positive_primitive_interval();
        assert!(Nonlinearity::primitive(a).abs() < 1e-12 && Nonlinearity::primitive(b).abs() < 1e-12);
        assert!(Nonlinearity::primitive(0.5 * (a + b)) > 0.0);
    }

    #[test]
    fn newton_closed_form() {
        assert_eq!(newton_1d(0.0), 1.5);
        let g = Grid::new(1, 2048, 40.0).unwrap();
        let r = newton_residuals(&g).unwrap();
        assert!(r.second_order < 1e-8, "{r:?}");
        assert!(r.fourth_order < 1e-6, "{r:?}");
        assert!(r.intermediate < 1e-6, "{r:?}");
    }

    #[test]
    fn bl_conditions_d3() {
        let rep = check_bl_conditions(3).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert!((rep.small_ratios[0].1 + 1.0).abs() < 1e-5);
        assert!((rep.growth_samples[2].1 + 1.0).abs() < 1e-3);
        let (a, b) = Nonlinearity::positive_primitive_interval();
        assert!(rep.zeta > a && rep.zeta < b);
        assert!(check_bl_conditions(2).is_err());
    }

    #[test]
    fn shooting_classifications() {
        let ctl = StepControl::default();
        assert!(matches!(shoot_radial(3, 0.1, 20.0, ctl).unwrap(), Shot::TurnsBack(_)));
        assert!(matches!(shoot_radial(3, 1.6, 20.0, ctl).unwrap(), Shot::CrossesZero(_)));
        // above the largest zero of g~ the profile rises and escapes
        assert!(matches!(shoot_radial(3, 2.5, 20.0, ctl).unwrap(), Shot::Escapes(_)));
        assert!(shoot_radial(3, -1.0, 20.0, ctl).is_err());
    }

    #[test]
    fn ground_state_d3() {
        let gs = gs3();
        assert!(gs.bracket.1 - gs.bracket.0 < 1e-12);
        assert!((gs.sigma_star - 1.5979476).abs() < 1e-4, "{}", gs.sigma_star);
        let v = gs.profile.values();
        assert!(v.iter().all(|&x| x > 0.0));
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(gs.profile.tail() < 1e-10);
        assert!((gs.decay.delta - 1.0).abs() < 0.1, "{:?}", gs.decay);
        // local uniqueness: a shift of ten bracket widths flips the class
        let ctl = StepControl::default();
        let step = 10.0 * 1e-12;
        assert!(matches!(shoot_radial(3, gs.sigma_star - step, 25.0, ctl).unwrap(), Shot::TurnsBack(_)));
        assert!(matches!(shoot_radial(3, gs.sigma_star + step, 25.0, ctl).unwrap(), Shot::CrossesZero(_)));
    }

    #[test]
    fn potential_values() {
        assert_eq!(potential_formula(0.0, 0.0), 0.0);
        let gs = gs3();
        let s = gs.sigma_star;
        let w0 = -5.0 * s.powi(8) + 24.0 * s.powi(6) - 33.0 * s.powi(4) + 12.0 * s * s;
        let w = assemble_potential(gs).unwrap();
        assert!((w.values()[0] - w0).abs() < 1e-12 * w0.abs().max(1.0));
        // W is quadratic in (v, v'), so it decays at twice the rate
        let fit = DecayFit::fit(&w, 2.0, 0.5 * gs.matching_radius, gs.matching_radius).unwrap();
        assert!((fit.delta - 2.0 * gs.decay.delta).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn fourth_order_identities_d3() {
        let gs = gs3();
        let w = assemble_potential(gs).unwrap();
        let rep = verify_fourth_order(gs, &w, 0.02, 15.0, 1e-8).unwrap();
        assert!(rep.second_order < 1e-6, "{rep:?}");
        assert!(rep.fourth_order < 1e-4, "{rep:?}");
        assert!(rep.intermediate < 1e-4, "{rep:?}");
    }

    #[test]
    fn fourth_order_residual_refines_at_high_order() {
        let gs = gs3();
        let w = assemble_potential(gs).unwrap();
        let coarse = verify_fourth_order(gs, &w, 0.1, 15.0, 1e-8).unwrap().fourth_order;
        let fine = verify_fourth_order(gs, &w, 0.05, 15.0, 1e-8).unwrap().fourth_order;
        // sixth-order stencils; at least fourth order is required
        assert!(coarse / fine > 16.0, "{coarse} {fine}");
    }

    #[test]
    fn radial_laplacian_of_polynomials() {
        // Δ r⁴ = 20 r², Δ² r⁴ = 120 in three dimensions
        let p = RadialProfile::from_fn(0.01, 3.0, |r| r.powi(4), |r| 4.0 * r.powi(3)).unwrap();
        for &r in &[0.0, 0.5, 1.0] {
            let der = radial_derivatives(&p, r, 0.05);
            let (lap, bilap) = radial_laplacians(3, r, der);
            assert!((lap - 20.0 * r * r).abs() < 1e-6, "{r} {lap}");
            assert!((bilap - 120.0).abs() < 1e-3, "{r} {bilap}");
        }
    }

    #[test]
    fn hermite_interpolation_is_exact_on_cubics() {
        let p = RadialProfile::from_fn(0.1, 2.0, |r| 1.0 + r * r * r, |r| 3.0 * r * r).unwrap();
        for &r in &[0.05, 0.77, 1.93] {
            assert!((p.eval(r) - (1.0 + r * r * r)).abs() < 1e-13);
            assert!((p.eval_deriv(r) - 3.0 * r * r).abs() < 1e-12);
        }
        assert_eq!(p.eval(2.5), 0.0);
    }

    #[test]
    fn newton_profile_container() {
        let gs = GroundState::newton(0.01, 40.0).unwrap();
        assert_eq!(gs.v(0.0), 1.5);
        assert!((gs.w(1.3) - w_1d(1.3)).abs() < 1e-12);
        assert!((gs.decay.delta - 1.0).abs() < 1e-3);
        assert!(gs.to_csv("t").lines().nth(1).unwrap() == "r,v,dv,W");
    }
}
