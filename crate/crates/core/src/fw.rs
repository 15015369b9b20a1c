//! Foldy-Wouthuysen transformations.
//!
//! The free transform is the 2×2 matrix `exp(θ 𝛄·p)` with
//! `tan(2|p|θ) = |p|/m`. In a static magnetic field the same construction is
//! applied to the grid operator `X = 𝛄·𝚷`, with `θ` a function of `Π̃² = −X²`
//! evaluated level by level on the span of the resolved Ritus columns. The
//! field operator acts as the identity outside that span.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::clifford::{GammaRep, Mat2, C64};
use crate::dirac::DiracGrid;
use crate::error::{Error, Result};
use crate::ritus::{check_mass, BarMomentum, RitusLevel, SliceSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwKind {
    Free,
    Field,
}

/// One degenerate eigenspace of `Π̃²` inside the span basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanBlock {
    pub level: usize,
    pub k: f64,
    pub theta: f64,
    pub start: usize,
    pub len: usize,
}

/// Orthonormal columns spanning the resolved levels, with the grid data
/// needed to move between the span and the full grid.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    pub q: DMatrix<C64>,
    pub dirac: DiracGrid,
    /// Channel eigenvalue of each column.
    pub column_k: Vec<f64>,
    /// Anti-Hermitian part of `Q† W X Q`.
    pub generator: DMatrix<C64>,
    pub gram: DMatrix<C64>,
}

#[derive(Debug, Clone)]
pub struct FwOperator {
    pub kind: FwKind,
    pub mass: f64,
    pub rep: GammaRep,
    /// The unitary in the operator's own coordinates: spinor components for
    /// the free kind, span coordinates for the field kind.
    pub u: DMatrix<C64>,
    /// γ⁰ in the same coordinates (diagonal, ±1).
    pub grading: Vec<f64>,
    pub blocks: Vec<SpanBlock>,
    pub basis: Option<SpanBasis>,
}

#[derive(Debug, Clone)]
pub struct FwHamiltonianReport {
    pub transformed: DMatrix<C64>,
    pub even_part_norm: f64,
    pub odd_part_norm: f64,
    /// Ascending eigenvalues of the Hermitian part.
    pub eigenvalues: Vec<f64>,
}

/// `θ(k) = arctan(√k/m) / (2√k)`, continued to `1/(2m)` at `k = 0`.
pub fn fw_theta(k: f64, m: f64) -> f64 {
    let p = k.max(0.0).sqrt();
    let x = p / m;
    if x < 1e-4 {
        // arctan(x)/x = 1 − x²/3 + x⁴/5
        let x2 = x * x;
        (1.0 - x2 / 3.0 + x2 * x2 / 5.0) / (2.0 * m)
    } else {
        x.atan() / (2.0 * p)
    }
}

/// `exp(A)` for anti-Hermitian `A`, through the eigenbasis of `iA`.
pub fn expm_anti_hermitian(a: &DMatrix<C64>) -> DMatrix<C64> {
    let i = C64::new(0.0, 1.0);
    let h = a * i;
    let h = (&h + h.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(h);
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (-i * l).exp()));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

fn grading_of(rep: &GammaRep) -> Result<Vec<f64>> {
    let g0 = rep.g0();
    let zero = C64::new(0.0, 0.0);
    if g0[(0, 1)] != zero || g0[(1, 0)] != zero || g0[(0, 0)].im != 0.0 || g0[(1, 1)].im != 0.0 {
        return Err(Error::Unsupported("γ⁰ must be real diagonal".into()));
    }
    Ok(vec![g0[(0, 0)].re, g0[(1, 1)].re])
}

fn to_dm(m: &Mat2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

/// Free transform for spatial momentum `(p1, p2)`:
/// `U = cos(|p|θ) + (𝛄·p/|p|) sin(|p|θ)`.
pub fn free_fw_spatial(p1: f64, p2: f64, m: f64, rep: &GammaRep) -> Result<FwOperator> {
    check_mass(m)?;
    let p = p1.hypot(p2);
    let k = p * p;
    let theta = fw_theta(k, m);
    let phi = p * theta;
    // sin(φ)/|p| = θ · sinc(φ), finite as p → 0
    let sinc = if phi.abs() < 1e-8 { 1.0 - phi * phi / 6.0 } else { phi.sin() / phi };
    let u = Mat2::identity() * C64::from(phi.cos()) + rep.spatial(p1, p2) * C64::from(theta * sinc);
    Ok(FwOperator {
        kind: FwKind::Free,
        mass: m,
        rep: rep.clone(),
        u: to_dm(&u),
        grading: grading_of(rep)?,
        blocks: vec![SpanBlock {
            level: 0,
            k,
            theta,
            start: 0,
            len: 2,
        }],
        basis: None,
    })
}

/// Free transform at `p̄ = (p₀, 0, √k)`.
pub fn free_fw(pbar: &BarMomentum, m: f64, rep: &GammaRep) -> Result<FwOperator> {
    free_fw_spatial(pbar.p1, pbar.p2, m, rep)
}

/// `γ⁰(𝛄·p + m)`.
pub fn free_dirac_hamiltonian(p1: f64, p2: f64, m: f64, rep: &GammaRep) -> DMatrix<C64> {
    to_dm(&(rep.g0() * (rep.spatial(p1, p2) + Mat2::identity() * C64::from(m))))
}

/// `γ⁰ √(p̄² + m²)` with `p̄` the spatial part of the bar momentum.
pub fn free_fw_hamiltonian(pbar: &BarMomentum, m: f64, rep: &GammaRep) -> Result<DMatrix<C64>> {
    check_mass(m)?;
    let e = (pbar.p1 * pbar.p1 + pbar.p2 * pbar.p2 + m * m).sqrt();
    Ok(to_dm(&(rep.g0() * C64::from(e))))
}

/// Exact transform on the span of levels `0..=n_max` of a solved slice.
pub fn field_fw(sol: &SliceSolution, m: f64, n_max: usize) -> Result<FwOperator> {
    check_mass(m)?;
    if n_max > sol.n_max {
        let sigma = sol.slice.zero_mode_channel(sol.slice.center()?)?;
        return Err(Error::Truncation {
            sigma,
            level: n_max,
            reason: format!("only levels up to {} were solved", sol.n_max),
        });
    }
    let dirac = sol.dirac()?;
    let g = grading_of(&sol.rep)?;
    let npts = sol.grid.n;
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
    let mut grading = Vec::new();
    let mut column_k = Vec::new();
    let mut blocks = Vec::new();
    for n in 0..=n_max {
        let level = sol.level(n, 0.0)?;
        let start = cols.len();
        for z in level.columns() {
            cols.push(level.ep.column(z).into_owned());
            grading.push(g[z]);
            let spec = if sol.rep.channel_of_slot(z) == 1 { &sol.plus } else { &sol.minus };
            let idx = if z == level.zero_mode_slot { n } else { n - 1 };
            column_k.push(spec.eigenvalues[idx]);
        }
        blocks.push(SpanBlock {
            level: n,
            k: level.k,
            theta: fw_theta(level.k, m),
            start,
            len: cols.len() - start,
        });
    }
    let q = DMatrix::from_columns(&cols);
    debug_assert_eq!(q.nrows(), 2 * npts);
    let xq = dirac.map_columns(&q, |c| dirac.apply_x(c))?;
    let mx = dirac.gram(&q, &xq);
    let generator = (&mx - mx.adjoint()) * C64::from(0.5);
    let gram = dirac.gram(&q, &q);
    let gram = (&gram + gram.adjoint()) * C64::from(0.5);
    let dim = q.ncols();
    let mut u = DMatrix::<C64>::identity(dim, dim);
    for b in &blocks {
        let block = generator.view((b.start, b.start), (b.len, b.len)) * C64::from(b.theta);
        let e = expm_anti_hermitian(&block.into_owned());
        u.view_mut((b.start, b.start), (b.len, b.len)).copy_from(&e);
    }
    Ok(FwOperator {
        kind: FwKind::Field,
        mass: m,
        rep: sol.rep.clone(),
        u,
        grading,
        blocks,
        basis: Some(SpanBasis {
            q,
            dirac,
            column_k,
            generator,
            gram,
        }),
    })
}

impl FwOperator {
    /// Same coordinates and grading with `U = 1`.
    pub fn identity_like(&self) -> FwOperator {
        let mut out = self.clone();
        let d = out.u.nrows();
        out.u = DMatrix::identity(d, d);
        out
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Applies `U` to the columns of `psi`: 2-spinors for the free kind,
    /// slot-major grid spinors for the field kind.
    pub fn apply(&self, psi: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        match &self.basis {
            None => {
                if psi.nrows() != 2 {
                    return Err(Error::Argument(format!(
                        "free transform acts on 2-spinors, got {} rows",
                        psi.nrows()
                    )));
                }
                Ok(&self.u * psi)
            }
            Some(b) => {
                if psi.nrows() != b.q.nrows() {
                    return Err(Error::Argument(format!(
                        "field transform acts on {} rows, got {}",
                        b.q.nrows(),
                        psi.nrows()
                    )));
                }
                let d = self.dim();
                let coeff = b.dirac.gram(&b.q, psi);
                let delta = &self.u - DMatrix::<C64>::identity(d, d);
                Ok(psi + &b.q * (delta * coeff))
            }
        }
    }

    /// `‖U†U − 1‖_F` on the operator's own space; for the field kind, measured
    /// on the span with the grid inner product.
    pub fn unitarity_defect(&self) -> Result<f64> {
        match &self.basis {
            None => {
                let d = self.dim();
                Ok((self.u.adjoint() * &self.u - DMatrix::<C64>::identity(d, d)).norm())
            }
            Some(b) => {
                let uq = self.apply(&b.q)?;
                let g = b.dirac.gram(&uq, &uq);
                Ok((g - b.dirac.gram(&b.q, &b.q)).norm())
            }
        }
    }

    /// Largest `‖[U, P_n] Q‖` over the level projectors `P_n = Q_n Q_n† W`.
    pub fn projector_commutator(&self) -> Result<f64> {
        let Some(b) = &self.basis else {
            return Ok(0.0);
        };
        let mut worst = 0.0_f64;
        for blk in &self.blocks {
            let qn = b.q.columns(blk.start, blk.len).into_owned();
            let project = |m: &DMatrix<C64>| -> DMatrix<C64> { &qn * b.dirac.gram(&qn, m) };
            let lhs = self.apply(&project(&b.q))?;
            let rhs = project(&self.apply(&b.q)?);
            worst = worst.max(b.dirac.norm(&(lhs - rhs)));
        }
        Ok(worst)
    }

    /// `Γ √(k + m²)` per coordinate with the channel eigenvalue of each
    /// column; the closed-form transformed Hamiltonian on the span.
    pub fn closed_form_energies(&self) -> Vec<f64> {
        let m = self.mass;
        match &self.basis {
            Some(b) => b
                .column_k
                .iter()
                .zip(&self.grading)
                .map(|(k, g)| g * (k + m * m).sqrt())
                .collect(),
            None => {
                let k = self.blocks[0].k;
                self.grading.iter().map(|g| g * (k + m * m).sqrt()).collect()
            }
        }
    }

    /// Expected transformed energies `±√(k_n + m²)` with the averaged level
    /// eigenvalue, in ascending order.
    pub fn target_energies(&self) -> Vec<f64> {
        let m = self.mass;
        let mut out: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| {
                let e = (b.k + m * m).sqrt();
                self.grading[b.start..b.start + b.len].iter().map(move |g| g * e)
            })
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// `H_D = γ⁰(X + m)` restricted to the span of a field transform.
pub fn restrict_dirac_hamiltonian(fw: &FwOperator) -> Result<DMatrix<C64>> {
    let Some(b) = &fw.basis else {
        return Err(Error::Argument("free transforms have no grid span".into()));
    };
    let inner = &b.generator + &b.gram * C64::from(fw.mass);
    let gamma = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        fw.grading.len(),
        fw.grading.iter().map(|&g| C64::from(g)),
    ));
    Ok(gamma * inner)
}

fn graded_parts(h: &DMatrix<C64>, grading: &[f64]) -> (DMatrix<C64>, DMatrix<C64>) {
    let conj = DMatrix::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * (grading[i] * grading[j]));
    let even = (h + &conj) * C64::from(0.5);
    let odd = (h - &conj) * C64::from(0.5);
    (even, odd)
}

fn hermitian_eigenvalues(h: &DMatrix<C64>) -> Vec<f64> {
    let herm = (h + h.adjoint()) * C64::from(0.5);
    let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn report(h: DMatrix<C64>, grading: &[f64]) -> FwHamiltonianReport {
    let (even, odd) = graded_parts(&h, grading);
    FwHamiltonianReport {
        even_part_norm: even.norm(),
        odd_part_norm: odd.norm(),
        eigenvalues: hermitian_eigenvalues(&h),
        transformed: h,
    }
}

/// `U H U†`, with `H` given in the operator's own coordinates.
pub fn transform_hamiltonian(fw: &FwOperator, h: &DMatrix<C64>) -> Result<FwHamiltonianReport> {
    let d = fw.dim();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::Argument(format!(
            "Hamiltonian is {}×{}, transform acts on dimension {d}",
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(report(&fw.u * h * fw.u.adjoint(), &fw.grading))
}

/// `‖U E_p − E_p U_free(p̄)‖ / ‖E_p‖` with `U_free` from the free transform at
/// the level's own `√k`.
pub fn verify_main_claim(fw: &FwOperator, level: &RitusLevel) -> Result<f64> {
    let Some(b) = &fw.basis else {
        return Err(Error::Argument("main claim needs a field transform".into()));
    };
    if level.rep != fw.rep || level.grid != b.dirac.grid {
        return Err(Error::Argument(
            "level and transform use different grids or representations".into(),
        ));
    }
    let pbar = crate::ritus::bar_momentum(level.k, fw.mass, 1)?;
    let free = free_fw(&pbar, fw.mass, &fw.rep)?;
    let lhs = fw.apply(&level.ep)?;
    let rhs = &level.ep * &free.u;
    Ok(b.dirac.norm(&(lhs - rhs)) / b.dirac.norm(&level.ep))
}

/// Successive transforms `U_j = exp(γ⁰ O_j / 2m)`, with `O_j` the odd part
/// of the current Hamiltonian. Entry 0 describes `H` itself.
pub fn bd_iteration(h: &DMatrix<C64>, grading: &[f64], m: f64, steps: usize) -> Result<Vec<FwHamiltonianReport>> {
    check_mass(m)?;
    if steps < 1 {
        return Err(Error::Argument("bd_iteration needs at least one step".into()));
    }
    if h.nrows() != grading.len() || h.ncols() != grading.len() {
        return Err(Error::Argument("grading does not match the Hamiltonian".into()));
    }
    let mut current = h.clone();
    let mut out = vec![report(current.clone(), grading)];
    for _ in 0..steps {
        let (_, odd) = graded_parts(&current, grading);
        let gen = DMatrix::from_fn(odd.nrows(), odd.ncols(), |i, j| odd[(i, j)] * (grading[i] / (2.0 * m)));
        // γ⁰O is anti-Hermitian when O is odd and Hermitian
        let gen = (&gen - gen.adjoint()) * C64::from(0.5);
        let u = expm_anti_hermitian(&gen);
        current = &u * current * u.adjoint();
        out.push(report(current.clone(), grading));
    }
    Ok(out)
}

/// Truncated `1/m` energy: `m + k/2m` (order 2) or `m + k/2m − k²/8m³` (order 3).
pub fn fw_series_energy(k: f64, m: f64, order: u32) -> Result<f64> {
    check_mass(m)?;
    if !(k >= 0.0) {
        return Err(Error::Argument(format!("eigenvalue k must be non-negative, got {k}")));
    }
    match order {
        2 => Ok(m + k / (2.0 * m)),
        3 => Ok(m + k / (2.0 * m) - k * k / (8.0 * m * m * m)),
        _ => Err(Error::Argument(format!("series order must be 2 or 3, got {order}"))),
    }
}

/// `exp(θ(−X²) X)` for a dense anti-Hermitian `X`, computed from a single
/// eigendecomposition. Serves as a reference for small problems.
pub fn dense_spectral_fw(x: &DMatrix<C64>, m: f64) -> Result<DMatrix<C64>> {
    check_mass(m)?;
    let i = C64::new(0.0, 1.0);
    let h = x * i;
    let h = (&h + h.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(h);
    // X = V diag(−iλ) V†, −X² = V diag(λ²) V†
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues.map(|l| (-i * l * fw_theta(l * l, m)).exp()),
    );
    Ok(&eig.eigenvectors * phases * eig.eigenvectors.adjoint())
}
