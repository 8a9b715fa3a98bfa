//! Free and interaction Hamiltonians of the cavity–wall system.
//!
//! The interaction is
//! `g12 (a1+a1†)(a2+a2†)(b+b†) + Σ_j gjj (aj+aj†)² (b+b†)`
//! with `g11 = εω₁/2`, `g22 = εω₂/2`, `g12 = ε√(ω₁ω₂)/2`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{invalid, Result};
use crate::fockspace::{FockSpace, ModeLabel, ModeSpec};
use crate::Matrix;

/// Fock cutoffs (maximum occupation) of the three modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cutoffs {
    pub mode1: usize,
    pub mode2: usize,
    pub wall: usize,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs { mode1: 6, mode2: 4, wall: 4 }
    }
}

impl Cutoffs {
    pub fn incremented(self, by: usize) -> Cutoffs {
        Cutoffs { mode1: self.mode1 + by, mode2: self.mode2 + by, wall: self.wall + by }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub omega_wall: f64,
    /// Dimensionless oscillation amplitude of the wall, ε = dL/L.
    pub epsilon: f64,
    pub cutoffs: Cutoffs,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("omega1", self.omega1), ("omega2", self.omega2), ("omega_wall", self.omega_wall)] {
            if !(w.is_finite() && w > 0.0) {
                return invalid(format!("{name} must be finite and positive, got {w}"));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return invalid(format!("epsilon must be finite and nonnegative, got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn fock_space(&self) -> Result<FockSpace> {
        self.validate()?;
        FockSpace::new([
            ModeSpec::new(ModeLabel::Mode1, self.omega1, self.cutoffs.mode1)?,
            ModeSpec::new(ModeLabel::Mode2, self.omega2, self.cutoffs.mode2)?,
            ModeSpec::new(ModeLabel::Wall, self.omega_wall, self.cutoffs.wall)?,
        ])
    }

    pub fn couplings(&self) -> Result<Couplings> {
        coupling_constants(self.epsilon, self.omega1, self.omega2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Couplings {
    pub g11: f64,
    pub g22: f64,
    pub g12: f64,
}

pub fn coupling_constants(epsilon: f64, omega1: f64, omega2: f64) -> Result<Couplings> {
    if !(omega1 > 0.0 && omega2 > 0.0) {
        return invalid(format!("mode frequencies must be positive, got {omega1}, {omega2}"));
    }
    Ok(Couplings {
        g11: epsilon * omega1 / 2.0,
        g22: epsilon * omega2 / 2.0,
        g12: epsilon * (omega1 * omega2).sqrt() / 2.0,
    })
}

pub fn build_free(params: &SystemParams) -> Result<Matrix> {
    let space = params.fock_space()?;
    let mut h = Matrix::zeros(space.dim(), space.dim());
    for idx in 0..space.dim() {
        let [n1, n2, m] = space.occupations(idx);
        h[(idx, idx)] = n1 as f64 * params.omega1 + n2 as f64 * params.omega2 + m as f64 * params.omega_wall;
    }
    Ok(h)
}

pub fn build_interaction(params: &SystemParams) -> Result<Matrix> {
    let space = params.fock_space()?;
    let g = params.couplings()?;
    let x1 = space.position(ModeLabel::Mode1);
    let x2 = space.position(ModeLabel::Mode2);
    let xb = space.position(ModeLabel::Wall);
    let three_mode = &x1 * &x2 * &xb * g.g12;
    let squeeze = (&x1 * &x1 * g.g11 + &x2 * &x2 * g.g22) * &xb;
    Ok(three_mode + squeeze)
}

/// System Hamiltonian H₀ + H_I.
pub fn build_system(params: &SystemParams) -> Result<Matrix> {
    Ok(build_free(params)? + build_interaction(params)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    /// a†a (b + b†)
    RadiationPressure,
    /// a² b† + a†² b
    SingleModeConversion,
    /// a1 a2 b† + a1† a2† b
    TwoModeConversion,
    /// (a1 a2† + a1† a2)(b + b†)
    Raman,
    /// a_i a_j b + a_i† a_j† b†
    CounterRotating,
}

impl TermKind {
    pub const ALL: [TermKind; 5] = [
        TermKind::RadiationPressure,
        TermKind::SingleModeConversion,
        TermKind::TwoModeConversion,
        TermKind::Raman,
        TermKind::CounterRotating,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TermKind::RadiationPressure => "radiation_pressure",
            TermKind::SingleModeConversion => "single_mode_conversion",
            TermKind::TwoModeConversion => "two_mode_conversion",
            TermKind::Raman => "raman",
            TermKind::CounterRotating => "counter_rotating",
        }
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The interaction split into its physical processes.
///
/// Expanding `(a+a†)²` leaves `a a† + a† a`; the radiation-pressure entry
/// holds `2a†a (b+b†)` and the remainder `[a, a†](b+b†)` (the vacuum term,
/// which carries the truncation defect on the top Fock level) is kept
/// separately in `vacuum_offset`.
#[derive(Clone, Debug)]
pub struct TermBreakdown {
    pub terms: BTreeMap<TermKind, Matrix>,
    pub vacuum_offset: Matrix,
}

impl TermBreakdown {
    pub fn term(&self, kind: TermKind) -> &Matrix {
        &self.terms[&kind]
    }

    pub fn total(&self) -> Matrix {
        self.terms.values().fold(self.vacuum_offset.clone(), |acc, m| acc + m)
    }
}

pub fn term_breakdown(params: &SystemParams) -> Result<TermBreakdown> {
    let space = params.fock_space()?;
    let g = params.couplings()?;
    let a1 = space.lowering(ModeLabel::Mode1);
    let a2 = space.lowering(ModeLabel::Mode2);
    let b = space.lowering(ModeLabel::Wall);
    let (a1d, a2d, bd) = (a1.transpose(), a2.transpose(), b.transpose());
    let xb = &b + &bd;

    let radiation = (&a1d * &a1 * (2.0 * g.g11) + &a2d * &a2 * (2.0 * g.g22)) * &xb;
    let single = (&a1 * &a1 * &bd + &a1d * &a1d * &b) * g.g11 + (&a2 * &a2 * &bd + &a2d * &a2d * &b) * g.g22;
    let two_mode = (&a1 * &a2 * &bd + &a1d * &a2d * &b) * g.g12;
    let raman = (&a1 * &a2d + &a1d * &a2) * &xb * g.g12;
    let counter = (&a1 * &a2 * &b + &a1d * &a2d * &bd) * g.g12
        + (&a1 * &a1 * &b + &a1d * &a1d * &bd) * g.g11
        + (&a2 * &a2 * &b + &a2d * &a2d * &bd) * g.g22;
    let comm1 = &a1 * &a1d - &a1d * &a1;
    let comm2 = &a2 * &a2d - &a2d * &a2;
    let vacuum_offset = (comm1 * g.g11 + comm2 * g.g22) * &xb;

    let mut terms = BTreeMap::new();
    terms.insert(TermKind::RadiationPressure, radiation);
    terms.insert(TermKind::SingleModeConversion, single);
    terms.insert(TermKind::TwoModeConversion, two_mode);
    terms.insert(TermKind::Raman, raman);
    terms.insert(TermKind::CounterRotating, counter);
    Ok(TermBreakdown { terms, vacuum_offset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(epsilon: f64) -> SystemParams {
        SystemParams { omega1: 0.5, omega2: 1.0, omega_wall: 1.0, epsilon, cutoffs: Cutoffs::default() }
    }

    #[test]
    fn coupling_values() {
        let g = coupling_constants(0.05, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(g.g11, 0.0125, epsilon = 1e-15);
        assert_abs_diff_eq!(g.g22, 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(g.g12, 0.05 * 0.5f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.g12, 0.017678, epsilon = 1e-6);

        let zero = coupling_constants(0.0, 0.5, 1.0).unwrap();
        assert_eq!((zero.g11, zero.g22, zero.g12), (0.0, 0.0, 0.0));

        let double = coupling_constants(0.1, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(double.g11, 2.0 * g.g11, epsilon = 1e-15);
        assert_abs_diff_eq!(double.g22, 2.0 * g.g22, epsilon = 1e-15);
        assert_abs_diff_eq!(double.g12, 2.0 * g.g12, epsilon = 1e-15);
    }

    #[test]
    fn coupling_rejects_nonpositive_frequency() {
        assert!(coupling_constants(0.05, 0.0, 1.0).is_err());
        assert!(coupling_constants(0.05, 0.5, -1.0).is_err());
    }

    #[test]
    fn free_spectrum() {
        let p = params(0.0);
        let space = p.fock_space().unwrap();
        let h0 = build_free(&p).unwrap();
        assert_eq!(h0[(0, 0)], 0.0);
        let i200 = space.index([2, 0, 0]).unwrap();
        assert_eq!(h0[(i200, i200)], 1.0);
        for occ in [[0, 1, 0], [0, 0, 1]] {
            let i = space.index(occ).unwrap();
            assert_eq!(h0[(i, i)], 1.0);
        }
        assert_eq!(h0.clone() - Matrix::from_diagonal(&h0.diagonal()), Matrix::zeros(175, 175));
    }

    #[test]
    fn interaction_vanishes_without_coupling() {
        assert_eq!(build_interaction(&params(0.0)).unwrap().amax(), 0.0);
    }

    #[test]
    fn single_mode_down_conversion_element() {
        let p = params(0.05);
        let space = p.fock_space().unwrap();
        let hi = build_interaction(&p).unwrap();
        let bra = space.index([0, 0, 1]).unwrap();
        let ket = space.index([2, 0, 0]).unwrap();
        assert_abs_diff_eq!(hi[(bra, ket)], 2f64.sqrt() * 0.0125, epsilon = 1e-15);
    }

    #[test]
    fn hamiltonians_are_exactly_symmetric() {
        let p = params(0.05);
        let hi = build_interaction(&p).unwrap();
        assert_eq!((&hi - hi.transpose()).amax(), 0.0);
        let h0 = build_free(&p).unwrap();
        assert_eq!((&h0 - h0.transpose()).amax(), 0.0);
    }

    #[test]
    fn interaction_norm_is_linear_in_epsilon() {
        let a = build_interaction(&params(0.05)).unwrap();
        let b = build_interaction(&params(0.1)).unwrap();
        assert!((b - a * 2.0).amax() < 1e-14);
    }

    #[test]
    fn selection_rules() {
        let p = params(0.05);
        let space = p.fock_space().unwrap();
        let hi = build_interaction(&p).unwrap();
        for r in 0..space.dim() {
            for c in 0..space.dim() {
                if hi[(r, c)] == 0.0 {
                    continue;
                }
                let a = space.occupations(r);
                let b = space.occupations(c);
                let d = |k: usize| a[k] as i64 - b[k] as i64;
                assert_eq!(d(2).abs(), 1, "every element moves one phonon");
                let photon = (d(0), d(1));
                let allowed = matches!(photon, (0, 0) | (2, 0) | (-2, 0) | (0, 2) | (0, -2))
                    || (d(0).abs() == 1 && d(1).abs() == 1);
                assert!(allowed, "photon change {photon:?}");
            }
        }
    }

    #[test]
    fn breakdown_reassembles_interaction() {
        let p = SystemParams { omega1: 0.502, ..params(0.05) };
        let parts = term_breakdown(&p).unwrap();
        let full = build_interaction(&p).unwrap();
        assert!((parts.total() - full).amax() < 1e-12);
    }

    #[test]
    fn breakdown_labels_processes() {
        let p = params(0.05);
        let space = p.fock_space().unwrap();
        let parts = term_breakdown(&p).unwrap();
        let g = p.couplings().unwrap();

        let single = parts.term(TermKind::SingleModeConversion);
        let i001 = space.index([0, 0, 1]).unwrap();
        let i200 = space.index([2, 0, 0]).unwrap();
        let i020 = space.index([0, 2, 0]).unwrap();
        assert_abs_diff_eq!(single[(i001, i200)], 2f64.sqrt() * g.g11, epsilon = 1e-15);
        assert_abs_diff_eq!(single[(i200, i001)], 2f64.sqrt() * g.g11, epsilon = 1e-15);
        assert_abs_diff_eq!(single[(i001, i020)], 2f64.sqrt() * g.g22, epsilon = 1e-15);

        let raman = parts.term(TermKind::Raman);
        let i100 = space.index([1, 0, 0]).unwrap();
        let i011 = space.index([0, 1, 1]).unwrap();
        assert_abs_diff_eq!(raman[(i100, i011)], g.g12, epsilon = 1e-15);

        let two = parts.term(TermKind::TwoModeConversion);
        let i110 = space.index([1, 1, 0]).unwrap();
        assert_abs_diff_eq!(two[(i001, i110)], g.g12, epsilon = 1e-15);

        let counter = parts.term(TermKind::CounterRotating);
        let i111 = space.index([1, 1, 1]).unwrap();
        assert_abs_diff_eq!(counter[(i111, 0)], g.g12, epsilon = 1e-15);

        let rp = parts.term(TermKind::RadiationPressure);
        let i101 = space.index([1, 0, 1]).unwrap();
        assert_abs_diff_eq!(rp[(i101, i100)], 2.0 * g.g11, epsilon = 1e-15);
    }

    #[test]
    fn term_labels() {
        let labels: Vec<_> = TermKind::ALL.iter().map(|t| t.label()).collect();
        assert_eq!(
            labels,
            ["radiation_pressure", "single_mode_conversion", "two_mode_conversion", "raman", "counter_rotating"]
        );
    }

    #[test]
    fn rejects_negative_epsilon() {
        assert!(params(-0.1).validate().is_err());
    }
}
