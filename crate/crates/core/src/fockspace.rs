//! Truncated bosonic ladder operators and their lift into the three-mode
//! product space.
//!
//! Slots are always ordered (mode 1, mode 2, wall); the Fock state
//! |n₁, n₂, m⟩ sits at index `(n₁·d₂ + n₂)·d_w + m` where `d` are the local
//! dimensions.

use std::fmt;

use crate::error::{invalid, Result};
use crate::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeLabel {
    Mode1,
    Mode2,
    Wall,
}

impl ModeLabel {
    pub const ALL: [ModeLabel; 3] = [ModeLabel::Mode1, ModeLabel::Mode2, ModeLabel::Wall];

    pub fn slot(self) -> usize {
        match self {
            ModeLabel::Mode1 => 0,
            ModeLabel::Mode2 => 1,
            ModeLabel::Wall => 2,
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeLabel::Mode1 => "mode1",
            ModeLabel::Mode2 => "mode2",
            ModeLabel::Wall => "wall",
        })
    }
}

/// One bosonic mode: its frequency (units of ω₂) and maximum occupation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpec {
    pub label: ModeLabel,
    pub frequency: f64,
    pub cutoff: usize,
}

impl ModeSpec {
    pub fn new(label: ModeLabel, frequency: f64, cutoff: usize) -> Result<Self> {
        if cutoff < 1 {
            return invalid(format!("{label}: cutoff must be at least 1"));
        }
        if !frequency.is_finite() || frequency < 0.0 {
            return invalid(format!("{label}: frequency must be finite and nonnegative, got {frequency}"));
        }
        Ok(ModeSpec { label, frequency, cutoff })
    }

    pub fn local_dim(&self) -> usize {
        self.cutoff + 1
    }
}

/// Matrix of the truncated annihilation operator: entry (n−1, n) = √n.
pub fn annihilation(cutoff: usize) -> Result<Matrix> {
    if cutoff < 1 {
        return invalid("cutoff must be at least 1");
    }
    let dim = cutoff + 1;
    let mut a = Matrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    Ok(a)
}

/// Lift a single-mode operator into the product space, I ⊗ … ⊗ op ⊗ … ⊗ I.
pub fn embed(op: &Matrix, slot: ModeLabel, specs: &[ModeSpec; 3]) -> Result<Matrix> {
    FockSpace::new(*specs)?.embed(op, slot)
}

/// The three-mode truncated Fock space.
#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace {
    specs: [ModeSpec; 3],
}

impl FockSpace {
    pub fn new(specs: [ModeSpec; 3]) -> Result<Self> {
        for (spec, label) in specs.iter().zip(ModeLabel::ALL) {
            if spec.label != label {
                return invalid(format!(
                    "mode slots must be ordered (mode1, mode2, wall); found {} in the {} slot",
                    spec.label, label
                ));
            }
            // Re-run field validation for specs built by struct literal.
            ModeSpec::new(spec.label, spec.frequency, spec.cutoff)?;
        }
        Ok(FockSpace { specs })
    }

    pub fn specs(&self) -> &[ModeSpec; 3] {
        &self.specs
    }

    pub fn spec(&self, label: ModeLabel) -> &ModeSpec {
        &self.specs[label.slot()]
    }

    pub fn local_dims(&self) -> [usize; 3] {
        [self.specs[0].local_dim(), self.specs[1].local_dim(), self.specs[2].local_dim()]
    }

    pub fn dim(&self) -> usize {
        self.local_dims().iter().product()
    }

    /// Index of |n₁, n₂, m⟩; `None` if any occupation exceeds its cutoff.
    pub fn index(&self, occupations: [usize; 3]) -> Option<usize> {
        let d = self.local_dims();
        if occupations.iter().zip(d).any(|(&n, d)| n >= d) {
            return None;
        }
        Some((occupations[0] * d[1] + occupations[1]) * d[2] + occupations[2])
    }

    pub fn occupations(&self, index: usize) -> [usize; 3] {
        let d = self.local_dims();
        [index / (d[1] * d[2]), (index / d[2]) % d[1], index % d[2]]
    }

    pub fn embed(&self, op: &Matrix, slot: ModeLabel) -> Result<Matrix> {
        let local = self.spec(slot).local_dim();
        if op.nrows() != local || op.ncols() != local {
            return invalid(format!(
                "{slot} operator is {}x{}, expected {local}x{local}",
                op.nrows(),
                op.ncols()
            ));
        }
        let factors: Vec<Matrix> = ModeLabel::ALL
            .iter()
            .map(|&label| {
                if label == slot {
                    op.clone()
                } else {
                    Matrix::identity(self.spec(label).local_dim(), self.spec(label).local_dim())
                }
            })
            .collect();
        Ok(factors[0].kronecker(&factors[1]).kronecker(&factors[2]))
    }

    /// Embedded annihilation operator of one mode.
    pub fn lowering(&self, slot: ModeLabel) -> Matrix {
        let a = annihilation(self.spec(slot).cutoff).expect("cutoff validated at construction");
        self.embed(&a, slot).expect("local dimension matches by construction")
    }

    /// Embedded position quadrature a + a† of one mode.
    pub fn position(&self, slot: ModeLabel) -> Matrix {
        let a = self.lowering(slot);
        &a + a.transpose()
    }

    /// Embedded number operator a†a of one mode.
    pub fn number(&self, slot: ModeLabel) -> Matrix {
        let a = self.lowering(slot);
        a.transpose() * a
    }
}
