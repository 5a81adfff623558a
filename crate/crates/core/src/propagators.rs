//! Exact-in-time spectral propagators for the Schrödinger and plate flows,
//! the free plate solution and the Duhamel integral.
//!
//! With `omega = |xi|^2` the free plate flow `u_tt + Δ²u = 0` acts on each
//! Fourier mode through
//!
//! ```text
//! [ u  ]      [  cos(t omega)          sin(t omega)/omega ] [ u0 ]
//! [ u_t] (t) = [ -omega sin(t omega)   cos(t omega)       ] [ u1 ]
//! ```
//!
//! The only time discretization anywhere in this module is the trapezoid
//! quadrature of the Duhamel integral.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{apply_radial_multiplier, Field, Grid, Rep};
use crate::norms::Trajectory;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `sin(t omega)/omega`, equal to `t` at `omega = 0`.
pub fn sinc_symbol(t: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        t
    } else {
        (t * omega).sin() / omega
    }
}

/// `e^{itΔ} u0`, the multiplier `e^{-it|xi|^2}`.
pub fn schrodinger_flow(u0: &Field, t: f64) -> Field {
    apply_radial_multiplier(u0, |k2| Complex64::from_polar(1.0, -t * k2)).expect("finite symbol")
}

/// `K'(t) u0 = cos(tΔ) u0`, the multiplier `cos(t|xi|^2)`.
pub fn plate_cos(u0: &Field, t: f64) -> Field {
    apply_radial_multiplier(u0, |k2| c((t * k2).cos())).expect("finite symbol")
}

/// `K(t) u1 = sin(tΔ)/Δ u1`, the multiplier `sin(t|xi|^2)/|xi|^2` with the
/// zero mode set to its limit `t`.
pub fn plate_sinc(u1: &Field, t: f64) -> Field {
    apply_radial_multiplier(u1, |k2| c(sinc_symbol(t, k2))).expect("finite symbol")
}

/// Displacement and velocity of the plate at time `t`.
#[derive(Debug, Clone)]
pub struct PlateState {
    pub u: Field,
    pub ut: Field,
    pub t: f64,
}

impl PlateState {
    pub fn new(u: Field, ut: Field, t: f64) -> Result<Self> {
        u.same_grid(&ut)?;
        Ok(Self { u, ut, t })
    }

    /// `||u_t||_2^2 + ||Δu||_2^2`.
    pub fn energy(&self) -> f64 {
        let u = self.u.to_spectral();
        let ut = self.ut.to_spectral();
        let k2 = u.grid().freq_sq();
        let vol = u.grid().cell_volume();
        let e: f64 = u
            .data()
            .iter()
            .zip(ut.data())
            .zip(&k2)
            .map(|((a, b), &q)| b.norm_sqr() + q * q * a.norm_sqr())
            .sum();
        e * vol
    }
}

/// Applies the 2x2 free plate symbol matrix to `(u0, u1)` in place
/// (spectral data).
fn plate_matrix(grid: &Grid, u: &mut [Complex64], ut: &mut [Complex64], t: f64) {
    let k2 = grid.freq_sq();
    for ((a, b), &w) in u.iter_mut().zip(ut.iter_mut()).zip(&k2) {
        let (s, co) = (t * w).sin_cos();
        let a0 = *a;
        let b0 = *b;
        *a = a0 * co + b0 * sinc_symbol(t, w);
        *b = -a0 * (w * s) + b0 * co;
    }
}

/// Free plate solution `u(t) = K'(t)u0 + K(t)u1` together with its
/// velocity `-Δ sin(tΔ) u0 + cos(tΔ) u1`.
pub fn free_plate_solution(u0: &Field, u1: &Field, t: f64) -> Result<PlateState> {
    u0.same_grid(u1)?;
    let grid = *u0.grid();
    let mut a = u0.to_spectral();
    let mut b = u1.to_spectral();
    plate_matrix(&grid, a.data_mut(), b.data_mut(), t);
    let (u, ut) = match u0.rep() {
        Rep::Space => (a.into_space(), b.into_space()),
        Rep::Spectral => (a, b),
    };
    Ok(PlateState { u, ut, t })
}

/// Advances a plate state by `dt` under the free flow.
pub fn plate_flow(state: &PlateState, dt: f64) -> Result<PlateState> {
    let mut next = free_plate_solution(&state.u, &state.ut, dt)?;
    next.t = state.t + dt;
    Ok(next)
}

/// Duhamel term `int_0^t K(t - s) F(s) ds` by trapezoid quadrature over the
/// nodes `s_i <= t`; a trailing partial panel `[s_k, t]` is included when
/// `t` is not a node.
pub fn duhamel(forcing: &Trajectory, t: f64) -> Result<Field> {
    let nodes = forcing.times().nodes();
    let end = *nodes.last().expect("non-empty");
    if !(t >= 0.0) || t > end * (1.0 + 1e-14) {
        return Err(Error::TimeOutOfRange { t, end });
    }
    let grid = *forcing.grid();
    let k2 = grid.freq_sq();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    let specs: Vec<Field> = forcing.fields().iter().map(|f| f.to_spectral()).collect();
    let mut add = |j: usize, w: f64| {
        let tau = t - nodes[j];
        for ((a, g), &q) in acc.iter_mut().zip(specs[j].data()).zip(&k2) {
            *a += g * (w * sinc_symbol(tau, q));
        }
    };
    let last = nodes.iter().rposition(|&s| s <= t).unwrap_or(0);
    for j in 0..last {
        let dt = nodes[j + 1] - nodes[j];
        add(j, dt / 2.0);
        add(j + 1, dt / 2.0);
    }
    if t > nodes[last] {
        // K(0) = 0 kills the right end of the partial panel
        add(last, (t - nodes[last]) / 2.0);
    }
    let out = Field::from_data(grid, Rep::Spectral, acc)?;
    Ok(match forcing.fields()[0].rep() {
        Rep::Space => out.into_space(),
        Rep::Spectral => out,
    })
}

/// Duhamel displacement and velocity at every node of `times` (uniform or
/// not) for forcing given as spectral coefficients on those nodes.
///
/// Uses `sin((t-s)w) = sin(tw)cos(sw) - cos(tw)sin(sw)` so that the
/// trapezoid sums accumulate in one pass over the nodes.
pub fn duhamel_spectral(
    grid: &Grid,
    times: &[f64],
    forcing: &[Vec<Complex64>],
) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let m = times.len();
    let n = grid.len();
    let k2 = grid.freq_sq();
    let zero = Complex64::new(0.0, 0.0);
    let mut cos_acc = vec![zero; n];
    let mut sin_acc = vec![zero; n];
    let mut disp = Vec::with_capacity(m);
    let mut vel = Vec::with_capacity(m);
    let t0 = times[0];
    let mut prev_c: Vec<Complex64> = vec![zero; n];
    let mut prev_s: Vec<Complex64> = vec![zero; n];
    for i in 0..m {
        let tau = times[i] - t0;
        let mut u = vec![zero; n];
        let mut v = vec![zero; n];
        let half = if i == 0 { 0.0 } else { (times[i] - times[i - 1]) / 2.0 };
        for k in 0..n {
            let w = k2[k];
            let g = forcing[i][k];
            // for w = 0 the kernel is (t - s); use cos -> 1, sin -> s
            let (s, co) = if w == 0.0 { (tau, 1.0) } else { (tau * w).sin_cos() };
            let cg = g * co;
            let sg = g * s;
            cos_acc[k] += (prev_c[k] + cg) * half;
            sin_acc[k] += (prev_s[k] + sg) * half;
            prev_c[k] = cg;
            prev_s[k] = sg;
            if w == 0.0 {
                u[k] = cos_acc[k] * tau - sin_acc[k];
                v[k] = cos_acc[k];
            } else {
                u[k] = (cos_acc[k] * s - sin_acc[k] * co) / w;
                v[k] = cos_acc[k] * co + sin_acc[k] * s;
            }
        }
        disp.push(u);
        vel.push(v);
    }
    (disp, vel)
}

/// Duhamel displacement at every node of the forcing trajectory.
pub fn duhamel_trajectory(forcing: &Trajectory) -> Result<Trajectory> {
    let grid = *forcing.grid();
    let specs: Vec<Vec<Complex64>> = forcing
        .fields()
        .iter()
        .map(|f| f.to_spectral().into_data())
        .collect();
    let (disp, _) = duhamel_spectral(&grid, forcing.times().nodes(), &specs);
    let fields = disp
        .into_iter()
        .map(|d| Field::from_data(grid, Rep::Spectral, d).map(Field::into_space))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(forcing.times().clone(), fields)
}
