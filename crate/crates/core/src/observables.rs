//! Expectation values, heat currents, drive power and time-series analysis.
//!
//! Populations and quadratures use the dressed ladder operators:
//! N = Tr[Â†Â ρ], X = Tr[(Â + Â†) ρ]. Heat currents follow the
//! Heisenberg-picture definition J_bath = Tr[H_tot'(t) L_bath(ρ)], positive
//! when energy enters the system.

use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dressed::DressedOperators;
use crate::error::{invalid, Error, Result};
use crate::fockspace::ModeLabel;
use crate::lindblad::{BathKind, DensityMatrix, MasterEquation};
use crate::{CMatrix, Matrix};

/// Tr[O ρ] for a real symmetric O and Hermitian ρ.
pub fn expectation(op: &Matrix, rho: &CMatrix) -> f64 {
    op.iter().zip(rho.iter()).map(|(o, z)| o * z.re).sum()
}

/// Tr[Â†Â ρ].
pub fn population(rho: &DensityMatrix, ladder: &Matrix) -> f64 {
    expectation(&(ladder.transpose() * ladder), rho.matrix())
}

/// Tr[(Â + Â†) ρ].
pub fn quadrature(rho: &DensityMatrix, ladder: &Matrix) -> f64 {
    expectation(&(ladder + ladder.transpose()), rho.matrix())
}

/// Tr[H_tot'(t) · L_bath(ρ)].
pub fn heat_flow(eq: &MasterEquation, bath: BathKind, t: f64, rho: &DensityMatrix) -> f64 {
    let l = eq.dissipate(Some(bath), rho.matrix());
    let h = eq.hamiltonian(t);
    h.iter().zip(l.transpose().iter()).map(|(a, b)| (a * b).re).sum()
}

/// Tr[Ḣ_d(t) ρ] = −2Fω_L Im(e^{iω_L t} Tr[Â₁ρ]).
pub fn laser_power(eq: &MasterEquation, t: f64, rho: &DensityMatrix) -> f64 {
    let drive = eq.drive();
    if drive.amplitude == 0.0 {
        return 0.0;
    }
    let phase = crate::C64::from_polar(1.0, drive.frequency * t);
    -2.0 * drive.amplitude * drive.frequency * (phase * eq.drive_overlap(rho.matrix())).im
}

/// Temperature of a thermal oscillator of frequency ω holding N quanta.
pub fn effective_temperature(n: f64, omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return invalid(format!("frequency must be positive, got {omega}"));
    }
    if !(n.is_finite() && n > 0.0) {
        return invalid(format!("occupation must be finite and positive, got {n}"));
    }
    Ok(omega / (1.0 / n).ln_1p())
}

/// Observable columns, in output order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    N1,
    N2,
    Nw,
    X1,
    X2,
    Xw,
    Jc,
    Jw,
    P,
}

impl Observable {
    pub const ALL: [Observable; 9] = [
        Observable::N1,
        Observable::N2,
        Observable::Nw,
        Observable::X1,
        Observable::X2,
        Observable::Xw,
        Observable::Jc,
        Observable::Jw,
        Observable::P,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::N1 => "N1",
            Observable::N2 => "N2",
            Observable::Nw => "Nw",
            Observable::X1 => "X1",
            Observable::X2 => "X2",
            Observable::Xw => "Xw",
            Observable::Jc => "Jc",
            Observable::Jw => "Jw",
            Observable::P => "P",
        }
    }

    pub fn population(label: ModeLabel) -> Self {
        match label {
            ModeLabel::Mode1 => Observable::N1,
            ModeLabel::Mode2 => Observable::N2,
            ModeLabel::Wall => Observable::Nw,
        }
    }

    pub fn quadrature(label: ModeLabel) -> Self {
        match label {
            ModeLabel::Mode1 => Observable::X1,
            ModeLabel::Mode2 => Observable::X2,
            ModeLabel::Wall => Observable::Xw,
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// All observables at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub t: f64,
    pub values: [f64; 9],
}

impl Record {
    pub fn get(&self, obs: Observable) -> f64 {
        self.values[obs as usize]
    }
}

/// Evaluates every observable for a given generator, with the operator
/// products precomputed.
#[derive(Clone, Debug)]
pub struct Recorder {
    numbers: [Matrix; 3],
    positions: [Matrix; 3],
}

impl Recorder {
    pub fn new(ops: &DressedOperators) -> Self {
        let number = |a: &Matrix| a.transpose() * a;
        let position = |a: &Matrix| a + a.transpose();
        Recorder {
            numbers: [number(&ops.a1), number(&ops.a2), number(&ops.b)],
            positions: [position(&ops.a1), position(&ops.a2), position(&ops.b)],
        }
    }

    pub fn record(&self, eq: &MasterEquation, t: f64, rho: &DensityMatrix) -> Record {
        let m = rho.matrix();
        let mut values = [0.0; 9];
        for k in 0..3 {
            values[k] = expectation(&self.numbers[k], m);
            values[3 + k] = expectation(&self.positions[k], m);
        }
        values[6] = heat_flow(eq, BathKind::Cavity, t, rho);
        values[7] = heat_flow(eq, BathKind::Wall, t, rho);
        values[8] = laser_power(eq, t, rho);
        Record { t, values }
    }
}

/// Time-ordered records on a uniform grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, obs: Observable) -> Vec<f64> {
        self.records.iter().map(|r| r.get(obs)).collect()
    }

    /// Sampling interval (zero for fewer than two records).
    pub fn spacing(&self) -> f64 {
        match self.records.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Records with t ≥ `from`.
    pub fn since(&self, from: f64) -> &[Record] {
        let start = self.records.partition_point(|r| r.t < from);
        &self.records[start..]
    }
}

/// Strongest spectral line of a sampled signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPeak {
    /// Angular frequency of the peak bin.
    pub omega: f64,
    /// Bin spacing 2π/(N·dt).
    pub resolution: f64,
    /// Sinusoid amplitude implied by the bin, 2|X_k|/N.
    pub amplitude: f64,
}

/// A peak must exceed this multiple of the median bin power.
pub const PEAK_TO_FLOOR: f64 = 10.0;
/// Minimum number of periods of the peak frequency inside the window.
pub const MIN_PERIODS: f64 = 20.0;

/// Peak of the one-sided power spectrum after removing the mean.
pub fn dominant_frequency(samples: &[f64], dt: f64) -> Result<SpectralPeak> {
    let n = samples.len();
    if n < 8 {
        return invalid(format!("need at least 8 samples, got {n}"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return invalid(format!("sample spacing must be positive, got {dt}"));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[1..=n / 2].iter().map(|z| z.norm_sqr()).collect();
    let (offset, peak) = power
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best });
    let mut sorted = power.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(peak > PEAK_TO_FLOOR * median) || peak == 0.0 {
        return Err(Error::NotFound(format!(
            "no spectral line stands out: peak power {peak:e}, median {median:e}"
        )));
    }
    let window = n as f64 * dt;
    let resolution = 2.0 * std::f64::consts::PI / window;
    let bin = offset + 1;
    let omega = bin as f64 * resolution;
    if (bin as f64) < MIN_PERIODS {
        return Err(Error::NotFound(format!(
            "window of {window} holds only {bin} periods of the peak at {omega}"
        )));
    }
    Ok(SpectralPeak { omega, resolution, amplitude: 2.0 * peak.sqrt() / n as f64 })
}

/// Trailing moving average over `width` samples (shorter at the start).
pub fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    let width = width.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= width {
            sum -= values[i - width];
        }
        out.push(sum / (i + 1).min(width) as f64);
    }
    out
}

/// Earliest time after which the smoothed series never varies by more than
/// `rel_tol · max|ȳ|` across any trailing window of length `window`.
///
/// `smoothing` is the span of the moving average applied first.
pub fn steady_state_time(times: &[f64], values: &[f64], window: f64, smoothing: f64, rel_tol: f64) -> Result<f64> {
    if times.len() != values.len() {
        return invalid("times and values differ in length");
    }
    if times.len() < 2 {
        return invalid("need at least two samples");
    }
    if !(window > 0.0 && smoothing >= 0.0 && rel_tol > 0.0) {
        return invalid("window and tolerance must be positive");
    }
    let dt = times[1] - times[0];
    let smooth = moving_average(values, (smoothing / dt).round() as usize);
    let span = (window / dt).round().max(1.0) as usize;
    if smooth.len() <= span {
        return Err(Error::NotFound(format!(
            "trajectory of length {} is shorter than the window {window}",
            times[times.len() - 1] - times[0]
        )));
    }
    let scale = smooth.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = rel_tol * scale;

    // Walk backwards; remember the earliest window end such that it and
    // every later window pass.
    let mut earliest = None;
    for end in (span..smooth.len()).rev() {
        let w = &smooth[end - span..=end];
        let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi - lo <= tol {
            earliest = Some(end - span);
        } else {
            break;
        }
    }
    earliest.map(|i| times[i]).ok_or_else(|| {
        Error::NotFound(format!("variation stays above {rel_tol:e} of the signal scale through the last window"))
    })
}

/// Mean of one observable over the records.
pub fn mean(records: &[Record], obs: Observable) -> f64 {
    records.iter().map(|r| r.get(obs)).sum::<f64>() / records.len() as f64
}

/// Oscillation amplitude √2·σ of one observable over the records.
pub fn amplitude(records: &[Record], obs: Observable) -> f64 {
    let mu = mean(records, obs);
    let var = records.iter().map(|r| (r.get(obs) - mu).powi(2)).sum::<f64>() / records.len() as f64;
    (2.0 * var).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::DressedSystem;
    use crate::hamiltonian::{Cutoffs, SystemParams};
    use crate::lindblad::{BathParams, DriveParams};
    use crate::C64;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn system(epsilon: f64) -> DressedSystem {
        let p = SystemParams {
            omega1: 0.502,
            omega2: 1.0,
            omega_wall: 1.0,
            epsilon,
            cutoffs: Cutoffs { mode1: 3, mode2: 2, wall: 2 },
        };
        DressedSystem::new(&p, 12).unwrap()
    }

    #[test]
    fn effective_temperature_inverts_occupation() {
        let n = crate::lindblad::thermal_occupation(1.0, 0.3).unwrap();
        assert_abs_diff_eq!(effective_temperature(n, 1.0).unwrap(), 0.3, epsilon = 1e-12);
        assert!(effective_temperature(0.0, 1.0).is_err());
        assert!(effective_temperature(0.1, 0.0).is_err());
        assert!(effective_temperature(-0.1, 1.0).is_err());
    }

    #[test]
    fn effective_temperature_values() {
        assert_abs_diff_eq!(effective_temperature(0.028, 1.0).unwrap(), 0.277_533_707_247_068, epsilon = 1e-12);
        assert_abs_diff_eq!(effective_temperature(0.0086, 2.0).unwrap(), 0.419_766_263_926_939_7, epsilon = 1e-12);
    }

    #[test]
    fn populations_of_bare_states() {
        let sys = system(0.0);
        // Levels at ε = 0: 0, ω₁, ω₂ (twice), 2ω₁; level 4 is |2,0,0⟩.
        let rho = DensityMatrix::basis_state(12, 4);
        assert_abs_diff_eq!(population(&rho, &sys.ops.a1), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(population(&rho, &sys.ops.b), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(quadrature(&rho, &sys.ops.a1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn wall_population_of_dressed_eigenstate() {
        let sys = system(0.05);
        let rho0 = DensityMatrix::ground(12);
        assert!(population(&rho0, &sys.ops.b).abs() < 1e-14);
        for k in [3, 5, 9] {
            let rho = DensityMatrix::basis_state(12, k);
            let direct: f64 = (0..k).map(|j| sys.table.w(k, j).powi(2)).sum();
            assert_abs_diff_eq!(population(&rho, &sys.ops.b), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_states_have_no_quadrature_or_power() {
        let sys = system(0.05);
        let baths = BathParams { t_cavity: 0.1, t_wall: 0.3, kappa: 0.003, gamma: 0.009 };
        let drive = DriveParams { amplitude: 0.01, frequency: 0.502 };
        let eq = MasterEquation::new(&sys.table, &sys.ops, &baths, &drive).unwrap();
        let rho = DensityMatrix::gibbs(eq.energies(), 0.7).unwrap();
        for ladder in [&sys.ops.a1, &sys.ops.a2, &sys.ops.b] {
            assert!(quadrature(&rho, ladder).abs() < 1e-15);
        }
        assert!(laser_power(&eq, 1.1, &rho).abs() < 1e-18);
    }

    #[test]
    fn cold_wall_absorbs_from_warm_bath() {
        let sys = system(0.0);
        let baths = BathParams { t_cavity: 0.0, t_wall: 0.3, kappa: 0.003, gamma: 0.009 };
        let eq = MasterEquation::new(&sys.table, &sys.ops, &baths, &DriveParams::off(0.502)).unwrap();
        let rho = DensityMatrix::ground(12);
        assert!(heat_flow(&eq, BathKind::Wall, 0.0, &rho) > 0.0);
        assert_eq!(heat_flow(&eq, BathKind::Cavity, 0.0, &rho), 0.0);
    }

    #[test]
    fn quadrature_of_coherent_superposition() {
        let sys = system(0.0);
        let mut m = CMatrix::zeros(12, 12);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            m[(r, c)] = C64::new(0.5, 0.0);
        }
        let rho = DensityMatrix::new(m).unwrap();
        assert_abs_diff_eq!(quadrature(&rho, &sys.ops.a1), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(population(&rho, &sys.ops.a1), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn recorder_matches_free_functions() {
        let sys = system(0.05);
        let baths = BathParams { t_cavity: 0.1, t_wall: 0.3, kappa: 0.003, gamma: 0.009 };
        let drive = DriveParams { amplitude: 0.01, frequency: 0.502 };
        let eq = MasterEquation::new(&sys.table, &sys.ops, &baths, &drive).unwrap();
        let rho = DensityMatrix::gibbs(eq.energies(), 0.5).unwrap();
        let rec = Recorder::new(&sys.ops).record(&eq, 0.3, &rho);
        assert_abs_diff_eq!(rec.get(Observable::N1), population(&rho, &sys.ops.a1), epsilon = 1e-14);
        assert_abs_diff_eq!(rec.get(Observable::Xw), quadrature(&rho, &sys.ops.b), epsilon = 1e-14);
        assert_abs_diff_eq!(rec.get(Observable::Jw), heat_flow(&eq, BathKind::Wall, 0.3, &rho), epsilon = 1e-14);
    }

    #[test]
    fn thermal_state_at_bath_temperature_carries_no_heat() {
        let sys = system(0.05);
        let baths = BathParams { t_cavity: 0.3, t_wall: 0.3, kappa: 0.003, gamma: 0.009 };
        let eq = MasterEquation::new(&sys.table, &sys.ops, &baths, &DriveParams::off(0.502)).unwrap();
        let rho = DensityMatrix::gibbs(eq.energies(), 0.3).unwrap();
        assert!(heat_flow(&eq, BathKind::Cavity, 0.0, &rho).abs() < 1e-15);
        assert!(heat_flow(&eq, BathKind::Wall, 0.0, &rho).abs() < 1e-15);
    }

    #[test]
    fn laser_power_matches_direct_trace() {
        let sys = system(0.05);
        let baths = BathParams { t_cavity: 0.0, t_wall: 0.3, kappa: 0.003, gamma: 0.009 };
        let drive = DriveParams { amplitude: 0.02, frequency: 0.502 };
        let eq = MasterEquation::new(&sys.table, &sys.ops, &baths, &drive).unwrap();
        let mut m = CMatrix::zeros(12, 12);
        m[(0, 0)] = C64::new(0.6, 0.0);
        m[(1, 1)] = C64::new(0.4, 0.0);
        m[(0, 1)] = C64::new(0.2, 0.3);
        m[(1, 0)] = C64::new(0.2, -0.3);
        let rho = DensityMatrix::new(m).unwrap();
        let t = 2.7;
        let a = sys.ops.a1.map(|x| C64::new(x, 0.0));
        let w = drive.frequency;
        let hdot = (&a * C64::from_polar(w, w * t + PI / 2.0) + a.transpose() * C64::from_polar(w, -w * t - PI / 2.0))
            * C64::new(drive.amplitude, 0.0);
        let direct = (hdot * rho.matrix()).trace().re;
        assert_abs_diff_eq!(laser_power(&eq, t, &rho), direct, epsilon = 1e-15);
    }

    #[test]
    fn dominant_frequency_finds_bin() {
        let dt = 0.5;
        let n = 4096;
        let omega = 2.0 * PI * 300.0 / (n as f64 * dt);
        let s: Vec<f64> = (0..n).map(|k| 3.0 + 0.7 * (omega * k as f64 * dt).sin()).collect();
        let peak = dominant_frequency(&s, dt).unwrap();
        assert_abs_diff_eq!(peak.omega, omega, epsilon = 1e-12);
        assert_abs_diff_eq!(peak.amplitude, 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(peak.resolution, 2.0 * PI / (n as f64 * dt), epsilon = 1e-15);
    }

    #[test]
    fn dominant_frequency_rejects_flat_and_short() {
        assert!(matches!(dominant_frequency(&[1.0; 256], 0.1), Err(Error::NotFound(_))));
        // Three periods only.
        let s: Vec<f64> = (0..256).map(|k| (2.0 * PI * 3.0 * k as f64 / 256.0).sin()).collect();
        assert!(matches!(dominant_frequency(&s, 0.1), Err(Error::NotFound(_))));
        assert!(dominant_frequency(&[1.0; 4], 0.1).is_err());
    }

    #[test]
    fn moving_average_of_constant_is_constant() {
        assert_eq!(moving_average(&[2.0; 10], 3), vec![2.0; 10]);
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.0, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn steady_state_of_exponential_relaxation() {
        // y = 1 − e^{−t}; variation over a window of 1 is e^{−t}(1 − e^{−1}).
        let dt = 0.01;
        let times: Vec<f64> = (0..3000).map(|k| k as f64 * dt).collect();
        let values: Vec<f64> = times.iter().map(|t| 1.0 - (-t).exp()).collect();
        let tf = steady_state_time(&times, &values, 1.0, 0.0, 1e-3).unwrap();
        let expected = ((1.0 - (-1.0f64).exp()) / 1e-3 / (1.0 - (-30.0f64).exp())).ln();
        assert_abs_diff_eq!(tf, expected, epsilon = 0.02);
    }

    #[test]
    fn steady_state_not_reached() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert!(matches!(steady_state_time(&times, &times, 10.0, 0.0, 1e-3), Err(Error::NotFound(_))));
        assert!(matches!(steady_state_time(&times[..5], &times[..5], 10.0, 0.0, 1e-3), Err(Error::NotFound(_))));
    }

    #[test]
    fn amplitude_of_sinusoid() {
        let records: Vec<Record> = (0..1000)
            .map(|k| {
                let mut values = [0.0; 9];
                values[Observable::X2 as usize] = 0.4 * (2.0 * PI * k as f64 / 100.0).cos();
                Record { t: k as f64, values }
            })
            .collect();
        assert_abs_diff_eq!(amplitude(&records, Observable::X2), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(mean(&records, Observable::X2), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn observable_names_follow_column_order() {
        let names: Vec<&str> = Observable::ALL.iter().map(|o| o.name()).collect();
        assert_eq!(names, ["N1", "N2", "Nw", "X1", "X2", "Xw", "Jc", "Jw", "P"]);
        for (k, o) in Observable::ALL.iter().enumerate() {
            assert_eq!(*o as usize, k);
        }
    }

    proptest! {
        #[test]
        fn effective_temperature_round_trip(omega in 0.1f64..3.0, temp in 0.05f64..2.0) {
            let n = crate::lindblad::thermal_occupation(omega, temp).unwrap();
            let back = effective_temperature(n, omega).unwrap();
            prop_assert!((back - temp).abs() < 1e-9 * temp.max(1.0));
        }
    }
}
