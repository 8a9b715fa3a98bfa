//! Closed-form estimates of coherence transfer from a coherently pumped
//! mode 1 into the wall and into mode 2, plus a brute-force unitary oracle
//! for the reduced models they are derived from.
//!
//! In the reduced models mode 1 is replaced by the c-number α = F e^{−iω_L t}
//! and only resonant terms are kept:
//!
//! ```text
//! wall only:   H = Ω b†b + g_w (e^{−2iω_L t} b† + h.c.)
//! with mode 2: H = Ω b†b + ω₂ a₂†a₂ + g_w (e^{−2iω_L t} b† + h.c.)
//!                  + c (e^{−iω_L t} b† + e^{iω_L t} b)(a₂ + a₂†)
//! g_w = ω₁εF²/2,  c = √(ω₁ω₂)εF/2
//! ```
//!
//! Here F is the coherent amplitude of mode 1, not the drive amplitude of the
//! master equation.

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::fockspace::annihilation;
use crate::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppendixParams {
    pub omega1: f64,
    pub omega2: f64,
    pub omega_wall: f64,
    pub epsilon: f64,
    /// Coherent amplitude |α| of mode 1.
    pub amplitude: f64,
}

impl AppendixParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega1", self.omega1), ("omega2", self.omega2), ("omega_wall", self.omega_wall)] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if !self.epsilon.is_finite() || !self.amplitude.is_finite() {
            return invalid("epsilon and amplitude must be finite");
        }
        Ok(())
    }

    /// β = −εF²ω₁.
    pub fn beta(&self) -> f64 {
        -self.epsilon * self.amplitude.powi(2) * self.omega1
    }

    /// ξ = −ω₁√(ω₁ω₂)ε²F³.
    pub fn xi(&self) -> f64 {
        -self.omega1 * (self.omega1 * self.omega2).sqrt() * self.epsilon.powi(2) * self.amplitude.powi(3)
    }

    fn check_distinct(&self) -> Result<()> {
        if (self.omega2 - self.omega1).abs() < 1e-12 || (self.omega2 + self.omega1).abs() < 1e-12 {
            return invalid(format!(
                "mode frequencies must differ (omega1 = {}, omega2 = {})",
                self.omega1, self.omega2
            ));
        }
        Ok(())
    }
}

/// X_w(t) = βt sin(Ωt).
pub fn xw_closed_form(t: f64, p: &AppendixParams) -> f64 {
    p.beta() * t * (p.omega_wall * t).sin()
}

/// K(ω, t) = ∫₀ᵗ t′ e^{−iωt′} dt′ = (e^{−iωt}(1 + iωt) − 1)/ω².
///
/// Uses the power series when |ωt| < 1e-2; K(0, t) = t²/2.
pub fn kernel_k(omega: f64, t: f64) -> C64 {
    let x = omega * t;
    if x.abs() < 1e-2 {
        // Σₙ (−iω)ⁿ t^{n+2} / (n!(n+2))
        let mut sum = C64::new(0.0, 0.0);
        let mut term = C64::new(t * t, 0.0);
        for n in 0..12 {
            sum += term / (n + 2) as f64;
            term *= C64::new(0.0, -x) / (n + 1) as f64;
        }
        return sum;
    }
    let phase = C64::from_polar(1.0, -x);
    (phase * C64::new(1.0, x) - 1.0) / (omega * omega)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Mode-2 quadrature from the resonant three-boson channel, all three lines:
///
/// ```text
/// X₂(t) = (ξt/2){ (1/(ω₂+ω₁) − 1/(ω₂−ω₁)) sin(ω₁t)
///               + sin((ω₂+ω₁)t/2) sinc((ω₂−ω₁)t/2) / (ω₂−ω₁)
///               − sin((ω₂−ω₁)t/2) sinc((ω₂+ω₁)t/2) / (ω₂+ω₁) }
/// ```
pub fn x2_closed_form(t: f64, p: &AppendixParams) -> Result<f64> {
    p.check_distinct()?;
    let (w1, w2) = (p.omega1, p.omega2);
    let (plus, minus) = (w2 + w1, w2 - w1);
    let lines = (1.0 / plus - 1.0 / minus) * (w1 * t).sin()
        + (plus * t / 2.0).sin() * sinc(minus * t / 2.0) / minus
        - (minus * t / 2.0).sin() * sinc(plus * t / 2.0) / plus;
    Ok(p.xi() * t / 2.0 * lines)
}

/// First line of [`x2_closed_form`] only.
pub fn x2_leading_line(t: f64, p: &AppendixParams) -> Result<f64> {
    p.check_distinct()?;
    let (w1, w2) = (p.omega1, p.omega2);
    Ok(p.xi() * t / 2.0 * (1.0 / (w2 + w1) - 1.0 / (w2 - w1)) * (w1 * t).sin())
}

/// Leading cubic term once mode-2/wall conversion is included:
/// (ξ³t³/16)(1/(ω₂+ω₁) − 1/(ω₂−ω₁)) sin(ω₁t).
pub fn x2_with_conversion(t: f64, p: &AppendixParams) -> Result<f64> {
    p.check_distinct()?;
    let (w1, w2) = (p.omega1, p.omega2);
    Ok(p.xi().powi(3) * t.powi(3) / 16.0 * (1.0 / (w2 + w1) - 1.0 / (w2 - w1)) * (w1 * t).sin())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducedModel {
    /// Wall driven by the squared coherent amplitude of mode 1.
    WallOnly,
    /// Adds the wall-assisted displacement of mode 2.
    WallAndMode2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub model: ReducedModel,
    pub t_max: f64,
    pub dt: f64,
    /// Frequency of the coherent amplitude of mode 1 (ω₁ on resonance).
    pub drive_frequency: f64,
    pub wall_cutoff: usize,
    pub mode2_cutoff: usize,
    /// Steps between samples.
    pub sample_every: usize,
}

impl OracleOptions {
    pub const MAX_WALL_CUTOFF: usize = 12;
    pub const MAX_MODE2_CUTOFF: usize = 6;
    pub const NORM_TOL: f64 = 1e-8;

    pub fn new(model: ReducedModel, p: &AppendixParams, t_max: f64) -> Self {
        OracleOptions {
            model,
            t_max,
            dt: 0.005,
            drive_frequency: p.omega1,
            wall_cutoff: Self::MAX_WALL_CUTOFF,
            mode2_cutoff: 4,
            sample_every: 10,
        }
    }

    /// Longest time for which the wall displacement stays well inside the
    /// wall cutoff: 0.2·cutoff/|β|.
    pub fn validity_window(p: &AppendixParams, wall_cutoff: usize) -> f64 {
        0.2 * wall_cutoff as f64 / p.beta().abs()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleSeries {
    pub times: Vec<f64>,
    pub xw: Vec<f64>,
    pub x2: Vec<f64>,
}

/// Schrödinger-picture RK4 integration of a reduced model from the vacuum.
pub fn brute_force_oracle(p: &AppendixParams, opts: &OracleOptions) -> Result<OracleSeries> {
    p.validate()?;
    if opts.wall_cutoff < 1 || opts.wall_cutoff > OracleOptions::MAX_WALL_CUTOFF {
        return invalid(format!("wall cutoff must be in 1..={}", OracleOptions::MAX_WALL_CUTOFF));
    }
    let mode2_cutoff = match opts.model {
        ReducedModel::WallOnly => 0,
        ReducedModel::WallAndMode2 => {
            if opts.mode2_cutoff < 1 || opts.mode2_cutoff > OracleOptions::MAX_MODE2_CUTOFF {
                return invalid(format!("mode-2 cutoff must be in 1..={}", OracleOptions::MAX_MODE2_CUTOFF));
            }
            opts.mode2_cutoff
        }
    };
    if !(opts.t_max > 0.0 && opts.dt > 0.0 && opts.dt.is_finite()) || opts.sample_every == 0 {
        return invalid("t_max, dt and sample_every must be positive");
    }
    if !(opts.drive_frequency.is_finite() && opts.drive_frequency > 0.0) {
        return invalid("drive frequency must be positive");
    }

    // Product space wall ⊗ mode 2, wall index major.
    let dw = opts.wall_cutoff + 1;
    let d2 = mode2_cutoff + 1;
    let b = annihilation(opts.wall_cutoff)?.kronecker(&Matrix::identity(d2, d2));
    let a2 = if mode2_cutoff > 0 {
        Matrix::identity(dw, dw).kronecker(&annihilation(mode2_cutoff)?)
    } else {
        Matrix::zeros(dw, dw)
    };
    let x_b = &b + b.transpose();
    let x_2 = &a2 + a2.transpose();
    let h0 = b.transpose() * &b * p.omega_wall + a2.transpose() * &a2 * p.omega2;
    let g_w = p.omega1 * p.epsilon * p.amplitude.powi(2) / 2.0;
    let c = (p.omega1 * p.omega2).sqrt() * p.epsilon * p.amplitude / 2.0;
    let b_x2 = &b * &x_2;
    let wl = opts.drive_frequency;

    let to_c = |m: &Matrix| m.map(|x| C64::new(x, 0.0));
    let (h0, b, b_x2) = (to_c(&h0), to_c(&b), to_c(&b_x2));
    let hamiltonian = |t: f64| {
        // g_w e^{−2iω_L t} b + c e^{−iω_L t} b X₂ carry the h.c. below.
        let lower = &b * C64::from_polar(g_w, 2.0 * wl * t) + &b_x2 * C64::from_polar(c, wl * t);
        &h0 + &lower + lower.adjoint()
    };
    let deriv = |t: f64, psi: &nalgebra::DVector<C64>| -> nalgebra::DVector<C64> { hamiltonian(t) * psi * C64::new(0.0, -1.0) };

    let dim = dw * d2;
    let mut psi = nalgebra::DVector::<C64>::zeros(dim);
    psi[0] = C64::new(1.0, 0.0);
    let expect = |op: &Matrix, psi: &nalgebra::DVector<C64>| -> f64 {
        let v = to_c(op) * psi;
        psi.dotc(&v).re
    };

    let steps = (opts.t_max / opts.dt - 1e-9).ceil() as usize;
    let dt = opts.dt;
    let mut out = OracleSeries::default();
    let sample = |t: f64, psi: &nalgebra::DVector<C64>, out: &mut OracleSeries| -> Result<()> {
        let drift = (psi.norm_squared() - 1.0).abs();
        if drift > OracleOptions::NORM_TOL {
            return Err(Error::IntegrationUnstable { time: t, reason: format!("norm drift {drift:e}") });
        }
        out.times.push(t);
        out.xw.push(expect(&x_b, psi));
        out.x2.push(if mode2_cutoff > 0 { expect(&x_2, psi) } else { 0.0 });
        Ok(())
    };
    sample(0.0, &psi, &mut out)?;
    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        let k1 = deriv(t, &psi);
        let k2 = deriv(t + 0.5 * dt, &(&psi + &k1 * C64::new(0.5 * dt, 0.0)));
        let k3 = deriv(t + 0.5 * dt, &(&psi + &k2 * C64::new(0.5 * dt, 0.0)));
        let k4 = deriv(t + dt, &(&psi + &k3 * C64::new(dt, 0.0)));
        psi += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
        if step % opts.sample_every == 0 {
            sample(step as f64 * dt, &psi, &mut out)?;
        }
    }
    Ok(out)
}
