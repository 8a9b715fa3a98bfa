//! Dressed-picture master equation with a cavity bath, a wall bath and a
//! coherent drive on mode 1:
//!
//! ```text
//! dρ/dt = −i[H_s' + H_d(t), ρ] + L_c(ρ) + L_w(ρ)
//! L_c = (κ/4) Σ_{i>j} |u¹ᵢⱼ + u²ᵢⱼ|² D̂ᵢⱼ,   L_w = (γ/2) Σ_{i>j} |wᵢⱼ|² D̂ᵢⱼ
//! D̂ᵢⱼ = nᵢⱼ D[Pᵢⱼ] + (1 + nᵢⱼ) D[Pⱼᵢ],      Pᵢⱼ = |i⟩⟨j|
//! ```
//!
//! Summed over all pairs, the dissipators reduce to a Pauli rate equation on
//! the populations plus damping of every coherence ρ_kl at rate
//! ½(Γ_k + Γ_l), where Γ_k is the total escape rate of level k. The
//! integrator uses that aggregated form; [`dissipator_apply`] keeps the
//! literal per-pair superoperator for cross-checks.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use crate::dressed::{DressedOperators, TransitionTable};
use crate::error::{invalid, Error, Result};
use crate::{CMatrix, Matrix, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathParams {
    /// Temperature of the bath shared by both cavity modes.
    pub t_cavity: f64,
    /// Temperature of the wall bath.
    pub t_wall: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl BathParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_cavity", self.t_cavity),
            ("t_wall", self.t_wall),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        Ok(())
    }
}

/// Coherent drive `F (e^{iω_L t} Â₁ + h.c.)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveParams {
    pub amplitude: f64,
    pub frequency: f64,
}

impl DriveParams {
    pub fn off(frequency: f64) -> Self {
        DriveParams { amplitude: 0.0, frequency }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return invalid(format!("drive amplitude must be finite and nonnegative, got {}", self.amplitude));
        }
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return invalid(format!("drive frequency must be finite and positive, got {}", self.frequency));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BathKind {
    Cavity,
    Wall,
}

/// Bose–Einstein occupation (e^{Δ/T} − 1)⁻¹.
pub fn thermal_occupation(delta: f64, temperature: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return invalid(format!("transition energy must be positive, got {delta}"));
    }
    if !(temperature.is_finite() && temperature >= 0.0) {
        return invalid(format!("temperature must be finite and nonnegative, got {temperature}"));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = delta / temperature;
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(1.0 / x.exp_m1())
}

/// One thermal channel between dressed levels `upper` > `lower`.
///
/// `rate_down` multiplies D[|lower⟩⟨upper|] and `rate_up` multiplies
/// D[|upper⟩⟨lower|].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindbladChannel {
    pub upper: usize,
    pub lower: usize,
    pub rate_down: f64,
    pub rate_up: f64,
    pub source: BathKind,
}

/// Per-pair channels for both baths. Degenerate pairs are skipped.
pub fn build_channels(table: &TransitionTable, baths: &BathParams) -> Result<Vec<LindbladChannel>> {
    baths.validate()?;
    let mut channels = Vec::new();
    for (i, j) in table.pairs() {
        if table.is_degenerate(i, j) {
            continue;
        }
        let delta = table.delta(i, j);
        let cavity_weight = baths.kappa / 4.0 * (table.u1(i, j) + table.u2(i, j)).powi(2);
        let wall_weight = baths.gamma / 2.0 * table.w(i, j).powi(2);
        for (source, weight, temperature) in [
            (BathKind::Cavity, cavity_weight, baths.t_cavity),
            (BathKind::Wall, wall_weight, baths.t_wall),
        ] {
            let n = thermal_occupation(delta, temperature)?;
            channels.push(LindbladChannel {
                upper: i,
                lower: j,
                rate_down: weight * (1.0 + n),
                rate_up: weight * n,
                source,
            });
        }
    }
    Ok(channels)
}

fn jump(levels: usize, to: usize, from: usize) -> CMatrix {
    let mut p = CMatrix::zeros(levels, levels);
    p[(to, from)] = C64::new(1.0, 0.0);
    p
}

/// D[P]ρ = ½(2PρP† − ρP†P − P†Pρ) with P = |to⟩⟨from|.
pub fn dissipator_apply(to: usize, from: usize, rho: &CMatrix) -> CMatrix {
    let p = jump(rho.nrows(), to, from);
    let pd = p.adjoint();
    let pdp = &pd * &p;
    (&p * rho * &pd) * C64::new(2.0, 0.0) - rho * &pdp - &pdp * rho
}

/// Heisenberg-picture dual D*[P]X = ½(2P†XP − XP†P − P†PX).
pub fn adjoint_dissipator_apply(to: usize, from: usize, x: &CMatrix) -> CMatrix {
    let p = jump(x.nrows(), to, from);
    let pd = p.adjoint();
    let pdp = &pd * &p;
    ((&pd * x * &p) * C64::new(2.0, 0.0) - x * &pdp - &pdp * x) * C64::new(0.5, 0.0)
}

/// H_d(t) = F(e^{iω_L t} Â₁ + e^{−iω_L t} Â₁†) in the dressed basis, with
/// Â₁ lowering the energy: the laser is co-rotating with mode 1.
pub fn drive_hamiltonian(t: f64, drive: &DriveParams, ops: &DressedOperators) -> CMatrix {
    let phase = C64::from_polar(drive.amplitude, drive.frequency * t);
    let a = ops.a1.map(|x| C64::new(x, 0.0));
    &a * phase + a.transpose() * phase.conj()
}

/// Density matrix on the dressed basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-8;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return invalid("density matrix must be square and nonempty");
        }
        let rho = DensityMatrix(matrix);
        if rho.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("density matrix has non-finite entries");
        }
        let herm = rho.hermiticity_defect();
        if herm > Self::HERMITICITY_TOL {
            return invalid(format!("density matrix not Hermitian (defect {herm:e})"));
        }
        let trace = rho.trace();
        if (trace - 1.0).abs() > Self::TRACE_TOL {
            return invalid(format!("density matrix trace {trace} differs from 1"));
        }
        let min = rho.min_eigenvalue();
        if min < -Self::POSITIVITY_TOL {
            return invalid(format!("density matrix has negative eigenvalue {min:e}"));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(matrix: CMatrix) -> Self {
        DensityMatrix(matrix)
    }

    pub fn basis_state(levels: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(levels, levels);
        m[(k, k)] = C64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    pub fn ground(levels: usize) -> Self {
        Self::basis_state(levels, 0)
    }

    /// Boltzmann state ∝ e^{−E/T} over the given levels.
    pub fn gibbs(energies: &[f64], temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return invalid("Gibbs state needs a positive temperature");
        }
        let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = energies.iter().map(|e| (-(e - e0) / temperature).exp()).collect();
        let z: f64 = weights.iter().sum();
        let mut m = CMatrix::zeros(energies.len(), energies.len());
        for (k, w) in weights.iter().enumerate() {
            m[(k, k)] = C64::new(w / z, 0.0);
        }
        Ok(DensityMatrix(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn levels(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// ½ Σ |λ(ρ − σ)|.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let d = &self.0 - &other.0;
        let h = (&d + d.adjoint()) * C64::new(0.5, 0.0);
        0.5 * SymmetricEigen::new(h).eigenvalues.iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// Aggregated rates of one bath: `gain[(a, b)]` is the population rate
/// b → a, `escape[b]` the total rate out of b.
#[derive(Clone, Debug)]
struct RateTable {
    gain: Matrix,
    escape: Vec<f64>,
}

impl RateTable {
    fn zeros(m: usize) -> Self {
        RateTable { gain: Matrix::zeros(m, m), escape: vec![0.0; m] }
    }

    fn add(&mut self, ch: &LindbladChannel) {
        self.gain[(ch.upper, ch.lower)] += ch.rate_up;
        self.gain[(ch.lower, ch.upper)] += ch.rate_down;
        self.escape[ch.lower] += ch.rate_up;
        self.escape[ch.upper] += ch.rate_down;
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let m = rho.nrows();
        let mut out = CMatrix::from_fn(m, m, |k, l| rho[(k, l)] * (-0.5 * (self.escape[k] + self.escape[l])));
        for a in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..m {
                acc += rho[(b, b)] * self.gain[(a, b)];
            }
            out[(a, a)] += acc;
        }
        out
    }
}

/// Split-complex square matrix in column-major order.
#[derive(Clone, Debug)]
pub(crate) struct Planes {
    m: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Planes {
    fn zeros(m: usize) -> Self {
        Planes { m, re: vec![0.0; m * m], im: vec![0.0; m * m] }
    }

    fn from_matrix(x: &CMatrix) -> Self {
        let data = x.as_slice();
        Planes { m: x.nrows(), re: data.iter().map(|z| z.re).collect(), im: data.iter().map(|z| z.im).collect() }
    }

    fn to_matrix(&self) -> CMatrix {
        CMatrix::from_iterator(self.m, self.m, self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)))
    }

    fn trace(&self) -> f64 {
        (0..self.m).map(|k| self.re[k * (self.m + 1)]).sum()
    }

    fn hermitize(&mut self) {
        let m = self.m;
        for c in 0..m {
            for r in 0..c {
                let (a, b) = (r + c * m, c + r * m);
                let re = 0.5 * (self.re[a] + self.re[b]);
                let im = 0.5 * (self.im[a] - self.im[b]);
                self.re[a] = re;
                self.re[b] = re;
                self.im[a] = im;
                self.im[b] = -im;
            }
            self.im[c * (m + 1)] = 0.0;
        }
    }

    /// self = base + h * k
    fn set_axpy(&mut self, base: &Planes, h: f64, k: &Planes) {
        for ((o, b), d) in self.re.iter_mut().zip(&base.re).zip(&k.re) {
            *o = b + h * d;
        }
        for ((o, b), d) in self.im.iter_mut().zip(&base.im).zip(&k.im) {
            *o = b + h * d;
        }
    }
}

/// The generator of the dressed master equation for one parameter set.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    energies: Vec<f64>,
    channels: Vec<LindbladChannel>,
    dropped_degenerate: usize,
    cavity: RateTable,
    wall: RateTable,
    total: RateTable,
    drive: DriveParams,
    a1: Matrix,
    /// Nonzero entries (row, col, value) of Â₁, row < col.
    a1_entries: Vec<(usize, usize, f64)>,
    /// The same entries grouped for ρÂ₁ (by column) and ρÂ₁ᵀ (by row).
    by_column: SparseColumns,
    by_row: SparseColumns,
    /// −i(E_k − E_l) − ½(Γ_k + Γ_l), column-major.
    coherence_re: Vec<f64>,
    coherence_im: Vec<f64>,
}

impl MasterEquation {
    /// Relative magnitude below which Â₁ entries are dropped from the drive
    /// product; entries that vanish by photon-parity selection come out of
    /// the eigensolver at round-off level.
    pub const DRIVE_SPARSITY_TOL: f64 = 1e-12;

    pub fn new(
        table: &TransitionTable,
        ops: &DressedOperators,
        baths: &BathParams,
        drive: &DriveParams,
    ) -> Result<Self> {
        drive.validate()?;
        let m = table.levels();
        if ops.a1.nrows() != m {
            return invalid("dressed operators and transition table disagree on level count");
        }
        let channels = build_channels(table, baths)?;
        let mut cavity = RateTable::zeros(m);
        let mut wall = RateTable::zeros(m);
        let mut total = RateTable::zeros(m);
        for ch in &channels {
            match ch.source {
                BathKind::Cavity => cavity.add(ch),
                BathKind::Wall => wall.add(ch),
            }
            total.add(ch);
        }
        let energies = table.energies().to_vec();
        let mut coherence_re = vec![0.0; m * m];
        let mut coherence_im = vec![0.0; m * m];
        for l in 0..m {
            for k in 0..m {
                coherence_re[k + l * m] = -0.5 * (total.escape[k] + total.escape[l]);
                coherence_im[k + l * m] = -(energies[k] - energies[l]);
            }
        }
        let scale = ops.a1.amax();
        let mut a1_entries = Vec::new();
        for c in 0..m {
            for r in 0..c {
                let v = ops.a1[(r, c)];
                if v.abs() > Self::DRIVE_SPARSITY_TOL * scale {
                    a1_entries.push((r, c, v));
                }
            }
        }
        Ok(MasterEquation {
            energies,
            channels,
            dropped_degenerate: table.degenerate_pairs(),
            cavity,
            wall,
            total,
            drive: *drive,
            a1: ops.a1.clone(),
            by_column: SparseColumns::new(m, a1_entries.iter().map(|&(r, c, v)| (c, r, v))),
            by_row: SparseColumns::new(m, a1_entries.iter().map(|&(r, c, v)| (r, c, v))),
            a1_entries,
            coherence_re,
            coherence_im,
        })
    }

    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn channels(&self) -> &[LindbladChannel] {
        &self.channels
    }

    pub fn drive(&self) -> &DriveParams {
        &self.drive
    }

    /// Number of degenerate level pairs left without a thermal channel.
    pub fn dropped_degenerate(&self) -> usize {
        self.dropped_degenerate
    }

    /// Largest transition energy among kept levels.
    pub fn max_transition(&self) -> f64 {
        let lo = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn system_hamiltonian(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.levels(),
            self.energies.iter().map(|&e| C64::new(e, 0.0)),
        ))
    }

    /// H_tot'(t) = diag(E) + H_d(t).
    pub fn hamiltonian(&self, t: f64) -> CMatrix {
        let mut h = self.system_hamiltonian();
        if self.drive.amplitude != 0.0 {
            let phase = C64::from_polar(self.drive.amplitude, self.drive.frequency * t);
            for &(r, c, v) in &self.a1_entries {
                h[(r, c)] += phase * v;
                h[(c, r)] += phase.conj() * v;
            }
        }
        h
    }

    /// Tr[Â₁ ρ].
    pub(crate) fn drive_overlap(&self, rho: &CMatrix) -> C64 {
        self.a1_entries.iter().map(|&(r, c, v)| rho[(c, r)] * v).sum()
    }

    /// Entries of Â₁ kept in the drive product.
    pub fn drive_nonzeros(&self) -> usize {
        self.a1_entries.len()
    }

    pub fn drive_operator(&self) -> &Matrix {
        &self.a1
    }

    /// L_c(ρ), L_w(ρ) or their sum (`None`).
    pub fn dissipate(&self, bath: Option<BathKind>, rho: &CMatrix) -> CMatrix {
        match bath {
            Some(BathKind::Cavity) => self.cavity.apply(rho),
            Some(BathKind::Wall) => self.wall.apply(rho),
            None => self.total.apply(rho),
        }
    }

    /// L*_bath(X) assembled channel by channel from the dual dissipators.
    pub fn adjoint_dissipate(&self, bath: BathKind, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for ch in self.channels.iter().filter(|c| c.source == bath) {
            if ch.rate_up != 0.0 {
                out += adjoint_dissipator_apply(ch.upper, ch.lower, x) * C64::new(ch.rate_up, 0.0);
            }
            if ch.rate_down != 0.0 {
                out += adjoint_dissipator_apply(ch.lower, ch.upper, x) * C64::new(ch.rate_down, 0.0);
            }
        }
        out
    }

    /// Value of the generator at time t.
    pub fn rhs(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let m = self.levels();
        let state = Planes::from_matrix(rho);
        let mut out = Planes::zeros(m);
        let mut p = Planes::zeros(m);
        let mut q = Planes::zeros(m);
        self.rhs_into(t, &state, &mut out, &mut p, &mut q);
        out.to_matrix()
    }

    fn rhs_into(&self, t: f64, rho: &Planes, out: &mut Planes, p: &mut Planes, q: &mut Planes) {
        let m = rho.m;
        for idx in 0..m * m {
            let (lr, li) = (self.coherence_re[idx], self.coherence_im[idx]);
            let (xr, xi) = (rho.re[idx], rho.im[idx]);
            out.re[idx] = lr * xr - li * xi;
            out.im[idx] = lr * xi + li * xr;
        }
        for a in 0..m {
            let (mut gr, mut gi) = (0.0, 0.0);
            for b in 0..m {
                let g = self.total.gain[(a, b)];
                gr += g * rho.re[b * (m + 1)];
                gi += g * rho.im[b * (m + 1)];
            }
            out.re[a * (m + 1)] += gr;
            out.im[a * (m + 1)] += gi;
        }

        if self.drive.amplitude == 0.0 {
            return;
        }
        // With P = ρÂ₁ and Q = ρÂ₁ᵀ (both real-sparse products),
        // Z = ρH_d = c·P + c*·Q and −i[H_d, ρ] = −i(Z† − Z).
        let c = C64::from_polar(self.drive.amplitude, self.drive.frequency * t);
        self.by_column.multiply(rho, p);
        self.by_row.multiply(rho, q);
        for idx in 0..m * m {
            let (pr, pi, qr, qi) = (p.re[idx], p.im[idx], q.re[idx], q.im[idx]);
            p.re[idx] = c.re * (pr + qr) - c.im * (pi - qi);
            p.im[idx] = c.re * (pi + qi) + c.im * (pr - qr);
        }
        let z = p;
        for l in 0..m {
            for k in 0..m {
                let (kl, lk) = (k + l * m, l + k * m);
                out.re[kl] -= z.im[lk] + z.im[kl];
                out.im[kl] += z.re[kl] - z.re[lk];
            }
        }
    }
}

/// Real sparse matrix S stored as, for each output column j, the list of
/// (source column, weight) pairs so that (XS)[:, j] = Σ w·X[:, source].
#[derive(Clone, Debug)]
struct SparseColumns {
    start: Vec<usize>,
    source: Vec<usize>,
    weight: Vec<f64>,
}

impl SparseColumns {
    /// `entries` yields (output column, source column, weight).
    fn new(m: usize, entries: impl Iterator<Item = (usize, usize, f64)>) -> Self {
        let mut lists = vec![Vec::new(); m];
        for (dst, src, w) in entries {
            lists[dst].push((src, w));
        }
        let mut start = vec![0];
        let (mut source, mut weight) = (Vec::new(), Vec::new());
        for list in lists {
            for (src, w) in list {
                source.push(src);
                weight.push(w);
            }
            start.push(source.len());
        }
        SparseColumns { start, source, weight }
    }

    /// out = x·S on both planes.
    fn multiply(&self, x: &Planes, out: &mut Planes) {
        let m = x.m;
        for j in 0..m {
            let range = self.start[j]..self.start[j + 1];
            let (src, w) = (&self.source[range.clone()], &self.weight[range]);
            accumulate(&mut out.re[j * m..(j + 1) * m], &x.re, m, src, w);
            accumulate(&mut out.im[j * m..(j + 1) * m], &x.im, m, src, w);
        }
    }
}

#[inline]
fn accumulate(dst: &mut [f64], x: &[f64], m: usize, src: &[usize], w: &[f64]) {
    dst.iter_mut().for_each(|d| *d = 0.0);
    let col = |k: usize| &x[k * m..(k + 1) * m];
    let mut chunks = src.chunks_exact(4).zip(w.chunks_exact(4));
    for (s, v) in &mut chunks {
        let (a, b, c, d) = (col(s[0]), col(s[1]), col(s[2]), col(s[3]));
        for ((((o, a), b), c), d) in dst.iter_mut().zip(a).zip(b).zip(c).zip(d) {
            *o += v[0] * a + v[1] * b + v[2] * c + v[3] * d;
        }
    }
    let tail = src.len() - src.len() % 4;
    for (&s, &v) in src[tail..].iter().zip(&w[tail..]) {
        for (d, a) in dst.iter_mut().zip(col(s)) {
            *d += v * a;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationOptions {
    pub t_max: f64,
    pub dt: f64,
    /// Steps between recorded states.
    pub record_every: usize,
    /// Recorded states between positivity (eigenvalue) checks; the final
    /// state is always checked. Zero checks only the final state.
    pub positivity_every: usize,
}

impl IntegrationOptions {
    /// Abort thresholds for trace drift and negative eigenvalues.
    pub const TRACE_ABORT: f64 = 1e-6;
    pub const NEGATIVITY_ABORT: f64 = -1e-6;

    pub fn new(t_max: f64, dt: f64, record_every: usize) -> Self {
        IntegrationOptions { t_max, dt, record_every, positivity_every: 400 }
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil() as usize
    }
}

#[derive(Clone, Debug)]
pub struct IntegrationReport {
    pub steps: usize,
    pub records: usize,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub final_time: f64,
    pub final_state: DensityMatrix,
}

/// Classical fixed-step RK4 from `rho0` to `t_max`.
///
/// The observer sees the (re-Hermitized) state at t = 0 and every
/// `record_every` steps thereafter.
pub fn integrate<F>(
    eq: &MasterEquation,
    rho0: &DensityMatrix,
    opts: &IntegrationOptions,
    mut observer: F,
) -> Result<IntegrationReport>
where
    F: FnMut(f64, &DensityMatrix) -> Result<()>,
{
    let m = eq.levels();
    if rho0.levels() != m {
        return invalid(format!("initial state has {} levels, generator has {m}", rho0.levels()));
    }
    if !(opts.t_max > 0.0 && opts.t_max.is_finite()) {
        return invalid(format!("t_max must be positive, got {}", opts.t_max));
    }
    if opts.record_every == 0 {
        return invalid("record_every must be at least 1");
    }
    let fastest = eq.max_transition().max(eq.drive().frequency);
    let dt_limit = 2.0 * PI / (20.0 * fastest);
    if !(opts.dt > 0.0 && opts.dt <= dt_limit) {
        return invalid(format!("dt = {} must lie in (0, {dt_limit:.6}] to resolve the spectrum", opts.dt));
    }

    let steps = opts.steps();
    let dt = opts.dt;
    let mut y = Planes::from_matrix(rho0.matrix());
    let mut k1 = Planes::zeros(m);
    let mut k2 = Planes::zeros(m);
    let mut k3 = Planes::zeros(m);
    let mut k4 = Planes::zeros(m);
    let mut tmp = Planes::zeros(m);
    let mut p = Planes::zeros(m);
    let mut q = Planes::zeros(m);

    let mut max_drift: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut records = 0usize;

    let mut check = |t: f64, y: &mut Planes, records: &mut usize, force_positivity: bool| -> Result<DensityMatrix> {
        y.hermitize();
        let drift = (y.trace() - 1.0).abs();
        max_drift = max_drift.max(drift);
        if !drift.is_finite() || drift > IntegrationOptions::TRACE_ABORT {
            return Err(Error::IntegrationUnstable { time: t, reason: format!("trace drift {drift:e}") });
        }
        let rho = DensityMatrix::from_raw(y.to_matrix());
        let due = opts.positivity_every > 0 && *records % opts.positivity_every == 0;
        if due || force_positivity {
            let e = rho.min_eigenvalue();
            min_eig = min_eig.min(e);
            if e < IntegrationOptions::NEGATIVITY_ABORT {
                return Err(Error::IntegrationUnstable { time: t, reason: format!("negative eigenvalue {e:e}") });
            }
        }
        *records += 1;
        Ok(rho)
    };

    let rho = check(0.0, &mut y, &mut records, false)?;
    observer(0.0, &rho)?;

    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        eq.rhs_into(t, &y, &mut k1, &mut p, &mut q);
        tmp.set_axpy(&y, 0.5 * dt, &k1);
        eq.rhs_into(t + 0.5 * dt, &tmp, &mut k2, &mut p, &mut q);
        tmp.set_axpy(&y, 0.5 * dt, &k2);
        eq.rhs_into(t + 0.5 * dt, &tmp, &mut k3, &mut p, &mut q);
        tmp.set_axpy(&y, dt, &k3);
        eq.rhs_into(t + dt, &tmp, &mut k4, &mut p, &mut q);
        let w = dt / 6.0;
        for idx in 0..m * m {
            y.re[idx] += w * (k1.re[idx] + 2.0 * (k2.re[idx] + k3.re[idx]) + k4.re[idx]);
            y.im[idx] += w * (k1.im[idx] + 2.0 * (k2.im[idx] + k3.im[idx]) + k4.im[idx]);
        }
        if step % opts.record_every == 0 {
            let now = step as f64 * dt;
            let rho = check(now, &mut y, &mut records, step == steps)?;
            observer(now, &rho)?;
        }
    }

    let final_time = steps as f64 * dt;
    let final_state = if steps % opts.record_every == 0 {
        DensityMatrix::from_raw(y.to_matrix())
    } else {
        let mut scratch_records = 1;
        check(final_time, &mut y, &mut scratch_records, true)?
    };

    Ok(IntegrationReport {
        steps,
        records,
        max_trace_drift: max_drift,
        min_eigenvalue: min_eig,
        final_time,
        final_state,
    })
}
