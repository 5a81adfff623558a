//! Numerical checks of the fixed-time dispersive decay and of the
//! Strichartz estimates for the Schrödinger and plate flows.
//!
//! On the periodic box dispersion only holds up to the wrap-around time
//! `~L²`; every time sweep enforces `t_max <= L²/10`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exponent::{dual_exponent, Exponent};
use crate::grid::{Field, Grid, Rep};
use crate::norms::{
    combine_time_norm, lebesgue_norm, mixed_norm, sobolev_seminorm, AdmissiblePair, SobolevIndex, TimeGrid,
    Trajectory,
};
use crate::propagators::{duhamel_trajectory, free_plate_solution, schrodinger_flow};
use crate::testfn::Ensemble;

/// `||e^{itΔ}u0||_{L^r} |t|^{d(1/2-1/r)} / ||u0||_{L^{r'}}`.
pub fn fixed_time_ratio(u0: &Field, t: f64, r: Exponent) -> Result<f64> {
    let r = r.lebesgue()?;
    if r.recip_f64() > 0.5 {
        return Err(Error::InvalidExponent(format!("dispersive ratio needs r >= 2, got {r}")));
    }
    let power = u0.grid().dim() as f64 * (0.5 - r.recip_f64());
    if t == 0.0 && power > 0.0 {
        return Err(Error::InvalidArgument("t = 0 is singular for r > 2".into()));
    }
    let u0 = u0.to_space();
    let den = lebesgue_norm(&u0, dual_exponent(r)?)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("||u0||_{L^r'} vanishes".into()));
    }
    let num = lebesgue_norm(&schrodinger_flow(&u0, t).into_space(), r)?;
    Ok(num * t.abs().powf(power) / den)
}

/// Wrap-around guard of the periodic proxy.
pub fn check_validity_window(grid: &Grid, t_max: f64) -> Result<()> {
    let limit = grid.half_width().powi(2) / 10.0;
    if t_max.abs() > limit {
        return Err(Error::DomainTooSmall(format!(
            "t_max = {t_max} exceeds the validity window L^2/10 = {limit}"
        )));
    }
    Ok(())
}

/// Which free flow a Strichartz quotient measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `e^{itΔ}u0` against `||u0||_{Ḣ^s}`.
    Schrodinger,
    /// `cos(tΔ)u0` against `||u0||_{Ḣ^s}`.
    PlateCosInput,
    /// `e^{itΔ}/Δ u1` against `||u1||_{Ḣ^{s-2}}`; mean-zero data only.
    PlateSincInput,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Schrodinger => "SCHRODINGER",
            Variant::PlateCosInput => "PLATE_COS_INPUT",
            Variant::PlateSincInput => "PLATE_SINC_INPUT",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_uppercase().as_str() {
            "SCHRODINGER" => Ok(Variant::Schrodinger),
            "PLATE_COS_INPUT" => Ok(Variant::PlateCosInput),
            "PLATE_SINC_INPUT" => Ok(Variant::PlateSincInput),
            other => Err(Error::Parse(format!("unknown variant {other:?}"))),
        }
    }

    fn symbol(self, t: f64, k2: f64) -> Complex64 {
        match self {
            Variant::Schrodinger => Complex64::from_polar(1.0, -t * k2),
            Variant::PlateCosInput => Complex64::new((t * k2).cos(), 0.0),
            Variant::PlateSincInput => {
                if k2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    -Complex64::from_polar(1.0, -t * k2) / k2
                }
            }
        }
    }
}

/// Relative size of the mean that counts as nonzero.
const MEAN_TOL: f64 = 1e-12;

fn check_mean_zero(f: &Field) -> Result<()> {
    let spec = f.to_spectral();
    let zero_mode = spec.data()[0].norm();
    let scale = spec.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if zero_mode > MEAN_TOL * scale {
        return Err(Error::NonzeroMean(format!(
            "e^(itΔ)/Δ needs mean-zero data; zero mode is {zero_mode:e}"
        )));
    }
    Ok(())
}

/// `||flow(t) u||_{L^q_I Ẇ^{s,r}}` sampled at the nodes of `times`, with
/// no admissibility requirement on `(q, r)`.
pub fn flow_space_time_norm(u: &Field, q: Exponent, r: Exponent, s: f64, times: &TimeGrid, variant: Variant) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::UnsupportedOrder(format!("homogeneous order {s} < 0 is not supported")));
    }
    if variant == Variant::PlateSincInput {
        check_mean_zero(u)?;
    }
    let r = r.lebesgue()?;
    let spec = u.to_spectral();
    let grid = *u.grid();
    let k2 = grid.freq_sq();
    let values = times
        .nodes()
        .par_iter()
        .map(|&t| {
            let data = spec
                .data()
                .iter()
                .zip(&k2)
                .map(|(z, &q2)| {
                    let w = if s == 0.0 {
                        1.0
                    } else if q2 == 0.0 {
                        0.0
                    } else {
                        q2.powf(s / 2.0)
                    };
                    z * variant.symbol(t, q2) * w
                })
                .collect();
            let f = Field::from_data(grid, Rep::Spectral, data)?.into_space();
            lebesgue_norm(&f, r)
        })
        .collect::<Result<Vec<f64>>>()?;
    combine_time_norm(&values, times, q)
}

/// Norm of the data in the space the variant's estimate is stated for.
fn data_norm(u: &Field, s: f64, variant: Variant) -> Result<f64> {
    match variant {
        Variant::Schrodinger | Variant::PlateCosInput => sobolev_seminorm(u, s, Exponent::int(2)),
        Variant::PlateSincInput => sobolev_seminorm(u, s - 2.0, Exponent::int(2)),
    }
}

/// Space-time norm over data norm without admissibility check.
pub fn flow_quotient(u: &Field, q: Exponent, r: Exponent, s: f64, times: &TimeGrid, variant: Variant) -> Result<f64> {
    let den = data_norm(u, s, variant)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("data norm vanishes".into()));
    }
    Ok(flow_space_time_norm(u, q, r, s, times, variant)? / den)
}

/// `||flow u||_{L^q_I Ẇ^{s,r}} / ||u||` for an admissible pair.
pub fn strichartz_quotient_free(u: &Field, pair: AdmissiblePair, s: f64, times: &TimeGrid, variant: Variant) -> Result<f64> {
    let pair = AdmissiblePair::new(pair.q, pair.r, pair.d)?;
    if pair.d != u.grid().dim() {
        return Err(Error::InvalidArgument("pair and grid dimensions differ".into()));
    }
    flow_quotient(u, pair.q, pair.r, s, times, variant)
}

/// `||F||_{L^{q~'}_I Ẇ^{s-2, r~'}}`.
fn dual_forcing_norm(forcing: &Trajectory, dual_pair: AdmissiblePair, s: f64) -> Result<f64> {
    let qd = dual_exponent(dual_pair.q)?;
    let rd = dual_exponent(dual_pair.r)?;
    mixed_norm(forcing, qd, SobolevIndex::homogeneous(s - 2.0, rd))
}

fn is_zero(f: &Field) -> bool {
    f.data().iter().all(|z| *z == Complex64::new(0.0, 0.0))
}

/// `||∫_0^t sin((t-s)Δ)/Δ F ds||_{L^q Ẇ^{s,r}} / ||F||_{L^{q~'} Ẇ^{s-2,r~'}}`.
pub fn strichartz_quotient_duhamel(forcing: &Trajectory, pair: AdmissiblePair, dual_pair: AdmissiblePair, s: f64) -> Result<f64> {
    let pair = AdmissiblePair::new(pair.q, pair.r, pair.d)?;
    let dual_pair = AdmissiblePair::new(dual_pair.q, dual_pair.r, dual_pair.d)?;
    if forcing.fields().iter().all(is_zero) {
        return Err(Error::ZeroDenominator("forcing vanishes identically".into()));
    }
    let den = dual_forcing_norm(forcing, dual_pair, s)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("dual forcing norm vanishes".into()));
    }
    let w = duhamel_trajectory(forcing)?;
    let num = mixed_norm(&w, pair.q, SobolevIndex::homogeneous(s, pair.r))?;
    Ok(num / den)
}

/// Full Duhamel solution norm over
/// `||u0||_{Ḣ^s} + ||u1||_{Ḣ^{s-2}} + ||F||_{L^{q~'} Ẇ^{s-2,r~'}}`;
/// identically vanishing terms contribute zero at any order.
pub fn solution_quotient(
    u0: &Field,
    u1: &Field,
    forcing: &Trajectory,
    pair: AdmissiblePair,
    dual_pair: AdmissiblePair,
    s: f64,
) -> Result<f64> {
    let pair = AdmissiblePair::new(pair.q, pair.r, pair.d)?;
    let dual_pair = AdmissiblePair::new(dual_pair.q, dual_pair.r, dual_pair.d)?;
    u0.same_grid(u1)?;
    if forcing.grid() != u0.grid() {
        return Err(Error::GridMismatch);
    }
    let a = if is_zero(u0) { 0.0 } else { sobolev_seminorm(u0, s, Exponent::int(2))? };
    let b = if is_zero(u1) { 0.0 } else { sobolev_seminorm(u1, s - 2.0, Exponent::int(2))? };
    let c = if forcing.fields().iter().all(is_zero) {
        0.0
    } else {
        dual_forcing_norm(forcing, dual_pair, s)?
    };
    let den = a + b + c;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("all data vanish".into()));
    }
    let w = duhamel_trajectory(forcing)?;
    let u0s = u0.to_space();
    let u1s = u1.to_space();
    let values = forcing
        .times()
        .nodes()
        .par_iter()
        .zip(w.fields().par_iter())
        .map(|(&t, duh)| {
            let free = free_plate_solution(&u0s, &u1s, t)?.u;
            let u = free.add(&duh.to_space())?;
            sobolev_seminorm(&u, s, pair.r)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(combine_time_norm(&values, forcing.times(), pair.q)? / den)
}

/// Power of `T` at which `||e^{itΔ}u0||_{L^q_{[0,T]} L^r}` grows when
/// `1/q > d(1/2 - 1/r)`; zero otherwise.
pub fn growth_exponent(q: Exponent, r: Exponent, d: usize) -> f64 {
    (q.recip_f64() - d as f64 * (0.5 - r.recip_f64())).max(0.0)
}

/// Quotients on `[0, t_short]` and `[0, t_long]` at a common node spacing
/// `dt`, both inside the validity window.
pub fn time_extension(
    u: &Field,
    q: Exponent,
    r: Exponent,
    s: f64,
    variant: Variant,
    t_short: f64,
    t_long: f64,
    dt: f64,
) -> Result<(f64, f64)> {
    check_validity_window(u.grid(), t_long)?;
    let nodes = |t: f64| ((t / dt).round() as usize).max(1) + 1;
    let a = flow_quotient(u, q, r, s, &TimeGrid::new(t_short, nodes(t_short))?, variant)?;
    let b = flow_quotient(u, q, r, s, &TimeGrid::new(t_long, nodes(t_long))?, variant)?;
    Ok((a, b))
}

/// One row of a Strichartz sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: Variant,
    pub d: usize,
    pub n: usize,
    pub l: f64,
    pub s: f64,
    pub q: Exponent,
    pub r: Exponent,
    pub t: f64,
    pub quotient: f64,
}

pub const SWEEP_COLUMNS: &str = "variant,d,n,L,s,q,r,T,quotient";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.12e}",
            row.variant.name(),
            row.d,
            row.n,
            row.l,
            row.s,
            row.q,
            row.r,
            row.t,
            row.quotient
        );
    }
    out
}

/// Ensemble for long-time Strichartz runs: single unmodulated Gaussians of
/// width `[1.7h, 2.25h]` centered within `L/8` of the origin. Wider data
/// would wrap around the box before `T = L^2/10`; narrower data is not
/// resolved at the coarse spacings these runs afford.
pub fn strichartz_ensemble(grid: &Grid) -> Ensemble {
    let h = grid.spacing();
    Ensemble {
        min_width: 1.7 * h,
        max_width: 2.25 * h,
        center_box: grid.half_width() / 8.0,
        max_modulation: 0.0,
        terms: 1,
        polynomials: false,
    }
}

/// `(Q(t_short), Q(t_long))` of each member's flow quotient.
pub fn ensemble_growth(
    members: &[Field],
    q: Exponent,
    r: Exponent,
    s: f64,
    variant: Variant,
    t_short: f64,
    t_long: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    members
        .par_iter()
        .map(|u| time_extension(u, q, r, s, variant, t_short, t_long, dt))
        .collect()
}
