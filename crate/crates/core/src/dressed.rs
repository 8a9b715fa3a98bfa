//! Dressed eigenbasis of the system Hamiltonian, transition amplitudes of
//! the bare position quadratures on that basis, and the dressed ladder
//! operators built from them.
//!
//! Levels are indexed in ascending energy. A dressed annihilation operator
//! lowers energy, so in this ordering it is strictly upper-triangular: its
//! (j, i) entry with j < i is the amplitude ⟨j|(a + a†)|i⟩ and its first
//! column (the ground state) vanishes.

use nalgebra::SymmetricEigen;

use crate::error::{invalid, Error, Result};
use crate::fockspace::{FockSpace, ModeLabel};
use crate::hamiltonian::{build_system, SystemParams};
use crate::Matrix;

/// Transitions with |E_i − E_j| below this are treated as degenerate and
/// excluded from the thermal dissipators.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct DressedBasis {
    energies: Vec<f64>,
    /// Full-dimension × M, one eigenvector per column.
    vectors: Matrix,
    full_dim: usize,
}

impl DressedBasis {
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    /// Matrix elements ⟨i|op|j⟩ of a full-space operator between kept levels.
    pub fn project(&self, op: &Matrix) -> Matrix {
        self.vectors.transpose() * op * &self.vectors
    }

    /// |⟨bare|level⟩|² for a bare Fock index.
    pub fn weight(&self, bare: usize, level: usize) -> f64 {
        self.vectors[(bare, level)].powi(2)
    }
}

/// Lowest `levels` eigenpairs of a real symmetric Hamiltonian, ascending.
///
/// Each eigenvector has its largest-magnitude component made positive;
/// exact ties in energy are ordered by the index of that component.
pub fn diagonalize(h: &Matrix, levels: usize) -> Result<DressedBasis> {
    let n = h.nrows();
    if h.ncols() != n {
        return invalid(format!("Hamiltonian must be square, got {}x{}", n, h.ncols()));
    }
    if levels < 1 || levels > n {
        return invalid(format!("kept level count {levels} outside 1..={n}"));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return invalid("Hamiltonian has non-finite entries");
    }
    let scale = h.amax().max(f64::MIN_POSITIVE);
    if (h - h.transpose()).amax() > 1e-12 * scale {
        return invalid("Hamiltonian is not symmetric");
    }

    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;

    let dominant = |k: usize| -> usize {
        let col = eig.eigenvectors.column(k);
        let max = col.amax();
        col.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap_or(0)
    };
    let mut order: Vec<(usize, usize)> = (0..n).map(|k| (k, dominant(k))).collect();
    order.sort_by(|a, b| {
        eig.eigenvalues[a.0].total_cmp(&eig.eigenvalues[b.0]).then(a.1.cmp(&b.1))
    });

    let mut energies = Vec::with_capacity(levels);
    let mut vectors = Matrix::zeros(n, levels);
    for (out, &(k, dom)) in order.iter().take(levels).enumerate() {
        energies.push(eig.eigenvalues[k]);
        let sign = if eig.eigenvectors[(dom, k)] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(out, &(eig.eigenvectors.column(k) * sign));
    }

    let norm = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    for (k, &e) in energies.iter().enumerate() {
        let v = vectors.column(k);
        let residual = (h * v - v * e).norm();
        if residual > 1e-9 * norm {
            return Err(Error::Numerical(format!("eigenpair {k} residual {residual:e} exceeds tolerance")));
        }
    }
    let gram = vectors.transpose() * &vectors;
    let ortho = (gram - Matrix::identity(levels, levels)).amax();
    if ortho > 1e-10 {
        return Err(Error::Numerical(format!("eigenvectors not orthonormal (defect {ortho:e})")));
    }

    Ok(DressedBasis { energies, vectors, full_dim: n })
}

/// Position-quadrature matrix elements between dressed levels.
///
/// The stored matrices are the full (symmetric) projections ⟨i|X|j⟩; the
/// accessors expose the i > j amplitudes used by the dissipators.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    energies: Vec<f64>,
    u1: Matrix,
    u2: Matrix,
    w: Matrix,
}

impl TransitionTable {
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Δ_ij = E_i − E_j.
    pub fn delta(&self, i: usize, j: usize) -> f64 {
        self.energies[i] - self.energies[j]
    }

    pub fn u1(&self, i: usize, j: usize) -> f64 {
        self.u1[(i, j)]
    }

    pub fn u2(&self, i: usize, j: usize) -> f64 {
        self.u2[(i, j)]
    }

    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    pub fn position(&self, label: ModeLabel) -> &Matrix {
        match label {
            ModeLabel::Mode1 => &self.u1,
            ModeLabel::Mode2 => &self.u2,
            ModeLabel::Wall => &self.w,
        }
    }

    pub fn is_degenerate(&self, i: usize, j: usize) -> bool {
        self.delta(i, j).abs() < DEGENERACY_TOL
    }

    /// All pairs (i, j) with i > j, in row order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.levels()).flat_map(|i| (0..i).map(move |j| (i, j)))
    }

    pub fn degenerate_pairs(&self) -> usize {
        self.pairs().filter(|&(i, j)| self.is_degenerate(i, j)).count()
    }
}

pub fn transition_amplitudes(basis: &DressedBasis, space: &FockSpace) -> Result<TransitionTable> {
    if space.dim() != basis.full_dim() {
        return invalid(format!(
            "basis spans {} states but the Fock space has {}",
            basis.full_dim(),
            space.dim()
        ));
    }
    Ok(TransitionTable {
        energies: basis.energies().to_vec(),
        u1: basis.project(&space.position(ModeLabel::Mode1)),
        u2: basis.project(&space.position(ModeLabel::Mode2)),
        w: basis.project(&space.position(ModeLabel::Wall)),
    })
}

/// Dressed annihilation operators Â₁, Â₂, B̂ in the M-level basis.
#[derive(Clone, Debug)]
pub struct DressedOperators {
    pub a1: Matrix,
    pub a2: Matrix,
    pub b: Matrix,
}

impl DressedOperators {
    pub fn get(&self, label: ModeLabel) -> &Matrix {
        match label {
            ModeLabel::Mode1 => &self.a1,
            ModeLabel::Mode2 => &self.a2,
            ModeLabel::Wall => &self.b,
        }
    }
}

pub fn dressed_operators(table: &TransitionTable) -> DressedOperators {
    let lower = |x: &Matrix| {
        let m = x.nrows();
        Matrix::from_fn(m, m, |j, i| if i > j { x[(i, j)] } else { 0.0 })
    };
    DressedOperators { a1: lower(&table.u1), a2: lower(&table.u2), b: lower(&table.w) }
}

/// Dressed basis, transition table and ladder operators for one parameter set.
#[derive(Clone, Debug)]
pub struct DressedSystem {
    pub basis: DressedBasis,
    pub table: TransitionTable,
    pub ops: DressedOperators,
}

impl DressedSystem {
    pub fn new(params: &SystemParams, levels: usize) -> Result<Self> {
        let space = params.fock_space()?;
        let basis = diagonalize(&build_system(params)?, levels)?;
        let table = transition_amplitudes(&basis, &space)?;
        let ops = dressed_operators(&table);
        Ok(DressedSystem { basis, table, ops })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scan {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for Scan {
    fn default() -> Self {
        Scan { lo: 0.49, hi: 0.52, step: 5e-4 }
    }
}

impl Scan {
    fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=n).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

/// Energy gap between the two dressed levels that carry the most weight on
/// the bare states |2,0,0⟩ and |0,0,1⟩.
pub fn conversion_gap(params: &SystemParams) -> Result<f64> {
    let space = params.fock_space()?;
    let (Some(pair), Some(phonon)) = (space.index([2, 0, 0]), space.index([0, 0, 1])) else {
        return invalid("mode-1 cutoff must be at least 2 to resolve the conversion doublet");
    };
    let basis = diagonalize(&build_system(params)?, space.dim())?;
    let mut ranked: Vec<(usize, f64)> =
        (0..basis.levels()).map(|k| (k, basis.weight(pair, k) + basis.weight(phonon, k))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let (a, b) = (ranked[0].0, ranked[1].0);
    Ok((basis.energies()[a] - basis.energies()[b]).abs())
}

/// Mode-1 frequency that minimizes the splitting of the Ω = 2ω₁ anticrossing.
pub fn tune_resonance(params: &SystemParams, scan: Scan) -> Result<f64> {
    let target = params.omega_wall / 2.0;
    if !(scan.lo < target && target < scan.hi) {
        return invalid(format!("scan [{}, {}] does not bracket Ω/2 = {target}", scan.lo, scan.hi));
    }
    if !(scan.step > 0.0 && scan.step <= 1e-3) {
        return invalid(format!("scan step must be in (0, 1e-3], got {}", scan.step));
    }
    let points = scan.points();
    let mut best: Option<(usize, f64)> = None;
    for (k, &omega1) in points.iter().enumerate() {
        let gap = conversion_gap(&SystemParams { omega1, ..*params })?;
        if best.map_or(true, |(_, g)| gap < g) {
            best = Some((k, gap));
        }
    }
    let (k, _) = best.expect("scan has at least two points");
    if k == 0 || k + 1 == points.len() {
        return Err(Error::NotFound(format!(
            "gap minimum lies on the scan boundary at omega1 = {}",
            points[k]
        )));
    }
    Ok(points[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_free, build_interaction, Cutoffs};
    use approx::assert_abs_diff_eq;

    fn params(omega1: f64, epsilon: f64) -> SystemParams {
        SystemParams { omega1, omega2: 1.0, omega_wall: 1.0, epsilon, cutoffs: Cutoffs::default() }
    }

    #[test]
    fn bare_spectrum_without_coupling() {
        let b = diagonalize(&build_system(&params(0.5, 0.0)).unwrap(), 8).unwrap();
        let expected = [0.0, 0.5, 1.0, 1.0, 1.0, 1.5, 1.5, 1.5];
        for (e, x) in b.energies().iter().zip(expected) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn resonant_doublet_splitting() {
        // Brute-force reference: full diagonalization, gap of the levels
        // hosting |2,0,0⟩ and |0,0,1⟩, against the two-level estimate 2√2·g11.
        let p = params(0.5, 0.05);
        let gap = conversion_gap(&p).unwrap();
        let two_level = 2.0 * 2f64.sqrt() * 0.0125;
        assert_abs_diff_eq!(two_level, 0.0354, epsilon = 1e-4);
        assert!((gap - two_level).abs() / two_level < 0.05, "gap {gap}");
    }

    #[test]
    fn eigenpairs_satisfy_residual_and_orthonormality() {
        let h = build_system(&params(0.502, 0.05)).unwrap();
        let b = diagonalize(&h, 60).unwrap();
        let norm = b.energies().iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for k in 0..60 {
            let v = b.vectors().column(k);
            assert!((&h * v - v * b.energies()[k]).norm() <= 1e-9 * norm);
        }
        let gram = b.vectors().transpose() * b.vectors();
        assert!((gram - Matrix::identity(60, 60)).amax() < 1e-10);
        assert!(b.energies().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn phase_convention_is_deterministic() {
        let h = build_system(&params(0.502, 0.05)).unwrap();
        let a = diagonalize(&h, 30).unwrap();
        let b = diagonalize(&h, 30).unwrap();
        assert_eq!(a.vectors(), b.vectors());
        for k in 0..30 {
            let col = a.vectors().column(k);
            let max = col.amax();
            let first = col.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn diagonalize_rejects_bad_input() {
        let h = build_system(&params(0.5, 0.05)).unwrap();
        assert!(diagonalize(&h, 0).is_err());
        assert!(diagonalize(&h, 176).is_err());
        let mut asym = h.clone();
        asym[(0, 1)] += 1.0;
        assert!(diagonalize(&asym, 10).is_err());
    }

    #[test]
    fn spectrum_symmetric_under_wall_reflection() {
        // ε → −ε is equivalent to b → −b, so H₀ ± H_I are isospectral.
        let p = params(0.502, 0.05);
        let h0 = build_free(&p).unwrap();
        let hi = build_interaction(&p).unwrap();
        let plus = diagonalize(&(&h0 + &hi), 175).unwrap();
        let minus = diagonalize(&(&h0 - &hi), 175).unwrap();
        for (a, b) in plus.energies().iter().zip(minus.energies()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn bare_amplitudes_without_coupling() {
        let p = params(0.502, 0.0);
        let space = p.fock_space().unwrap();
        let sys = DressedSystem::new(&p, 40).unwrap();
        let occ = |k: usize| {
            let v = sys.basis.vectors().column(k);
            let idx = v.iter().position(|x| (x.abs() - 1.0).abs() < 1e-12).unwrap();
            space.occupations(idx)
        };
        for (i, j) in sys.table.pairs() {
            let (oi, oj) = (occ(i), occ(j));
            let w = sys.table.w(i, j);
            let one_phonon = oi[0] == oj[0] && oi[1] == oj[1] && oi[2].abs_diff(oj[2]) == 1;
            if one_phonon {
                assert_abs_diff_eq!(w.abs(), (oi[2].max(oj[2]) as f64).sqrt(), epsilon = 1e-12);
            } else {
                assert_abs_diff_eq!(w, 0.0, epsilon = 1e-12);
            }
        }
        // ground ↔ |1,0,0⟩ is level 1 at ω₁ = 0.502
        assert_eq!(occ(1), [1, 0, 0]);
        assert_abs_diff_eq!(sys.table.u1(1, 0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn phonon_splits_evenly_across_doublet() {
        let p = params(0.502, 0.05);
        let space = p.fock_space().unwrap();
        let sys = DressedSystem::new(&p, 60).unwrap();
        let phonon = space.index([0, 0, 1]).unwrap();
        let pair = space.index([2, 0, 0]).unwrap();
        let mut doublet: Vec<usize> = (0..60).collect();
        doublet.sort_by(|&a, &b| {
            let wa = sys.basis.weight(phonon, a) + sys.basis.weight(pair, a);
            let wb = sys.basis.weight(phonon, b) + sys.basis.weight(pair, b);
            wb.total_cmp(&wa)
        });
        for &k in &doublet[..2] {
            assert_abs_diff_eq!(sys.table.w(k, 0).abs(), 0.5f64.sqrt(), epsilon = 0.05);
        }
    }

    #[test]
    fn dressed_operators_structure() {
        let sys = DressedSystem::new(&params(0.502, 0.05), 40).unwrap();
        for label in ModeLabel::ALL {
            let a = sys.ops.get(label);
            for r in 0..40 {
                for c in 0..=r {
                    assert_eq!(a[(r, c)], 0.0, "{label} must be strictly upper-triangular");
                }
            }
            // B†B positive semidefinite
            let n = a.transpose() * a;
            let eig = SymmetricEigen::new(n.clone());
            assert!(eig.eigenvalues.min() > -1e-12);
            // ground hosts no excitations: (A†A)_00 = 0
            assert_eq!(n[(0, 0)], 0.0);
        }
    }

    #[test]
    fn dressed_operator_reduces_to_bare_without_coupling() {
        let p = params(0.502, 0.0);
        let space = p.fock_space().unwrap();
        let sys = DressedSystem::new(&p, 30).unwrap();
        let bare = sys.basis.project(&space.lowering(ModeLabel::Mode1));
        assert!((bare - &sys.ops.a1).amax() < 1e-12);
    }

    #[test]
    fn transition_table_pairs_and_symmetry() {
        let sys = DressedSystem::new(&params(0.502, 0.05), 20).unwrap();
        assert_eq!(sys.table.pairs().count(), 190);
        for (i, j) in sys.table.pairs() {
            assert!(sys.table.delta(i, j) >= 0.0);
            assert_eq!(sys.table.w(i, j), sys.table.position(ModeLabel::Wall)[(i, j)]);
            assert_abs_diff_eq!(sys.table.u1(i, j), sys.table.u1(j, i), epsilon = 1e-12);
        }
        assert_eq!(sys.table.degenerate_pairs(), 0);
    }

    #[test]
    fn tuned_frequency_vanishing_coupling() {
        let scan = Scan { lo: 0.49, hi: 0.51, step: 1e-3 };
        let p = SystemParams { cutoffs: Cutoffs { mode1: 2, mode2: 1, wall: 1 }, ..params(0.5, 0.0) };
        let w = tune_resonance(&p, scan).unwrap();
        assert_abs_diff_eq!(w, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn tuner_validates_scan() {
        let p = params(0.5, 0.05);
        assert!(tune_resonance(&p, Scan { lo: 0.51, hi: 0.52, step: 1e-3 }).is_err());
        assert!(tune_resonance(&p, Scan { lo: 0.49, hi: 0.52, step: 1e-2 }).is_err());
    }

    #[test]
    fn tuner_reports_unbracketed_minimum() {
        let p = SystemParams { cutoffs: Cutoffs { mode1: 2, mode2: 1, wall: 1 }, ..params(0.5, 0.3) };
        let r = tune_resonance(&p, Scan { lo: 0.499, hi: 0.501, step: 1e-3 });
        assert!(matches!(r, Err(Error::NotFound(_))), "{r:?}");
    }
}
