//! Matrix eigenfunctions `E_p` built from paired scalar channels.
//!
//! At fixed `(p₀, p_y)` the level-`n` function is slot-diagonal: the slot of
//! the zero-mode channel `σ₀ = sign(eB)` carries `φ^{σ₀}_n`, the other slot
//! carries `φ^{−σ₀}_{n−1}`. The sign of the partner column is chosen so that
//! `X E_p = E_p γ² √k`, which is the intertwining relation in this gauge.

use std::io::Write;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::clifford::{spin_projector_for, GammaRep, Mat2, SpinProjector, C64};
use crate::dirac::DiracGrid;
use crate::error::{Error, Result};
use crate::field::FieldSlice;
use crate::spectral::{build_grid, fmt_sig, solve_channel, Grid, GridConfig, ScalarSpectrum};

/// Relative tolerance for matching the two channel eigenvalues of one level.
pub const PAIRING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarMomentum {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// On-shell energy `√(k + m²)`.
    pub e_d: f64,
}

impl BarMomentum {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p0, self.p1, self.p2]
    }

    /// `p̄² = p₀² − p₂²`.
    pub fn square(&self) -> f64 {
        self.p0 * self.p0 - self.p2 * self.p2
    }

    /// `p̄ = (p₀, 0, √k)` at an arbitrary, possibly off-shell, energy.
    pub fn off_shell(p0: f64, k: f64, m: f64) -> Result<Self> {
        check_k(k)?;
        check_mass(m)?;
        Ok(BarMomentum {
            p0,
            p1: 0.0,
            p2: k.sqrt(),
            e_d: (k + m * m).sqrt(),
        })
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 0.0) {
        return Err(Error::Argument(format!("eigenvalue k must be non-negative, got {k}")));
    }
    Ok(())
}

pub(crate) fn check_mass(m: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Argument(format!("mass must be positive, got {m}")));
    }
    Ok(())
}

/// On-shell bar momentum with `p₀ = branch · √(k + m²)`.
pub fn bar_momentum(k: f64, m: f64, branch: i8) -> Result<BarMomentum> {
    if branch != 1 && branch != -1 {
        return Err(Error::Argument(format!("branch must be +1 or -1, got {branch}")));
    }
    check_k(k)?;
    check_mass(m)?;
    let e_d = (k + m * m).sqrt();
    BarMomentum::off_shell(f64::from(branch) * e_d, k, m)
}

#[derive(Debug, Clone)]
pub struct RitusLevel {
    pub n: usize,
    pub p0: f64,
    pub p_y: f64,
    pub k: f64,
    /// Slot-major `2N × 2`; column `z` is nonzero only in spinor slot `z`.
    /// At `n = 0` the column of the empty slot is identically zero.
    pub ep: DMatrix<C64>,
    pub pbar: [f64; 3],
    pub projector: SpinProjector,
    pub rep: GammaRep,
    pub grid: Grid,
    /// Slot holding the zero-mode channel.
    pub zero_mode_slot: usize,
}

impl RitusLevel {
    pub fn bar_momentum(&self, m: f64) -> Result<BarMomentum> {
        BarMomentum::off_shell(self.p0, self.k, m)
    }

    /// `γ·p̄ = γ⁰p₀ − γ²√k`.
    pub fn slash_pbar(&self) -> Mat2 {
        self.rep.slash(self.pbar)
    }

    /// Indices of the populated columns.
    pub fn columns(&self) -> Vec<usize> {
        if self.n == 0 {
            vec![self.zero_mode_slot]
        } else {
            vec![0, 1]
        }
    }

    /// Copy at a different energy; the spatial structure does not depend on p₀.
    pub fn with_p0(&self, p0: f64) -> RitusLevel {
        let mut out = self.clone();
        out.p0 = p0;
        out.pbar[0] = p0;
        out
    }

    /// Multiplies `E_p` on the right by a 2×2 matrix.
    pub fn times(&self, m: &Mat2) -> DMatrix<C64> {
        let dm = DMatrix::from_fn(2, 2, |i, j| m[(i, j)]);
        &self.ep * dm
    }
}

/// Both channel spectra of one `(profile, p_y, e)` slice on a common grid.
#[derive(Debug, Clone)]
pub struct SliceSolution {
    pub slice: FieldSlice,
    pub rep: GammaRep,
    pub grid: Grid,
    pub plus: ScalarSpectrum,
    pub minus: ScalarSpectrum,
    pub n_max: usize,
}

impl SliceSolution {
    /// Solves the channels for levels `0..=n_max` on an automatically sized grid.
    pub fn solve(slice: &FieldSlice, rep: &GammaRep, n_max: usize, config: &GridConfig) -> Result<Self> {
        let grid = build_grid(slice, n_max, config)?;
        Self::solve_on(slice, rep, n_max, &grid)
    }

    pub fn solve_on(slice: &FieldSlice, rep: &GammaRep, n_max: usize, grid: &Grid) -> Result<Self> {
        let sigma0 = slice.zero_mode_channel(slice.center()?)?;
        let count = |sigma: i8| if sigma == sigma0 { n_max + 1 } else { n_max.max(1) };
        let (plus, minus) = rayon::join(
            || solve_channel(slice, 1, grid, count(1)),
            || solve_channel(slice, -1, grid, count(-1)),
        );
        Ok(SliceSolution {
            slice: slice.clone(),
            rep: rep.clone(),
            grid: *grid,
            plus: plus?,
            minus: minus?,
            n_max,
        })
    }

    /// Same spectra viewed through another representation.
    pub fn with_rep(&self, rep: &GammaRep) -> SliceSolution {
        let mut out = self.clone();
        out.rep = rep.clone();
        out
    }

    pub fn level(&self, n: usize, p0: f64) -> Result<RitusLevel> {
        assemble_level(&self.slice, &self.rep, &self.plus, &self.minus, n, p0)
    }

    /// Levels `0..=n_max`, each at its positive on-shell energy.
    pub fn on_shell_levels(&self, m: f64) -> Result<Vec<RitusLevel>> {
        (0..=self.n_max)
            .map(|n| {
                let level = self.level(n, 0.0)?;
                let e = bar_momentum(level.k, m, 1)?;
                Ok(level.with_p0(e.p0))
            })
            .collect()
    }

    pub fn levels_at(&self, p0: f64) -> Result<Vec<RitusLevel>> {
        (0..=self.n_max).map(|n| self.level(n, p0)).collect()
    }

    pub fn dirac(&self) -> Result<DiracGrid> {
        DiracGrid::new(&self.slice, &self.rep, &self.grid)
    }
}

fn spectrum_entry(spec: &ScalarSpectrum, level: usize) -> Result<(f64, &[f64])> {
    match (spec.eigenvalues.get(level), spec.eigenfunctions.get(level)) {
        (Some(&k), Some(phi)) => Ok((k, phi)),
        _ => Err(Error::Truncation {
            sigma: spec.sigma,
            level,
            reason: format!("only {} levels were solved", spec.len()),
        }),
    }
}

pub fn assemble_level(
    slice: &FieldSlice,
    rep: &GammaRep,
    plus: &ScalarSpectrum,
    minus: &ScalarSpectrum,
    n: usize,
    p0: f64,
) -> Result<RitusLevel> {
    if plus.grid != minus.grid {
        return Err(Error::Pairing("channel spectra were computed on different grids".into()));
    }
    if plus.sigma != 1 || minus.sigma != -1 {
        return Err(Error::Argument("spectra must be passed as (sigma=+1, sigma=-1)".into()));
    }
    let grid = plus.grid;
    let center = slice.center()?;
    let field_sign = slice.eb(center)?;
    let sigma0 = slice.zero_mode_channel(center)?;
    let (zero_spec, partner_spec) = if sigma0 == 1 { (plus, minus) } else { (minus, plus) };
    let z = rep.slot_of_channel(sigma0);
    let zp = 1 - z;
    let npts = grid.n;

    let (k_zero, phi) = spectrum_entry(zero_spec, n)?;
    let mut ep = DMatrix::<C64>::zeros(2 * npts, 2);
    for i in 0..npts {
        ep[(z * npts + i, z)] = C64::from(phi[i]);
    }
    let k = if n == 0 {
        k_zero
    } else {
        let (k_partner, psi) = spectrum_entry(partner_spec, n - 1)?;
        let scale = k_zero.abs().max(k_partner.abs());
        if (k_zero - k_partner).abs() > PAIRING_TOLERANCE * scale {
            return Err(Error::Pairing(format!(
                "level {n}: k = {k_zero} (sigma={sigma0}) vs {k_partner} (sigma={})",
                -sigma0
            )));
        }
        for i in 0..npts {
            ep[(zp * npts + i, zp)] = C64::from(psi[i]);
        }
        // fix the partner phase so that ⟨v, X u⟩ = γ²_{z'z} √k
        let dirac = DiracGrid::new(slice, rep, &grid)?;
        let u: Vec<C64> = ep.column(z).iter().copied().collect();
        let v: Vec<C64> = ep.column(zp).iter().copied().collect();
        let overlap = dirac.inner(&v, &dirac.apply_x(&u)?);
        let g = rep.gamma[2][(zp, z)];
        if overlap.norm() == 0.0 || g.norm() == 0.0 {
            return Err(Error::Pairing(format!("level {n}: channels are not connected by X")));
        }
        let phase = overlap / (g * overlap.norm());
        let mut col = ep.column_mut(zp);
        col *= phase;
        0.5 * (k_zero + k_partner)
    };
    let k = k.max(0.0);
    Ok(RitusLevel {
        n,
        p0,
        p_y: slice.p_y,
        k,
        ep,
        pbar: [p0, 0.0, k.sqrt()],
        projector: spin_projector_for(rep, n as i64, field_sign)?,
        rep: rep.clone(),
        grid,
        zero_mode_slot: z,
    })
}

fn check_grid(level: &RitusLevel, dirac: &DiracGrid) -> Result<()> {
    if level.grid != dirac.grid || level.rep != dirac.rep {
        return Err(Error::Argument(
            "level and grid operator use different grids or representations".into(),
        ));
    }
    Ok(())
}

/// `‖(γ·Π)² E_p − p̄² E_p‖ / ‖E_p‖` with `(γ·Π)² = p₀² − Π̃²`.
pub fn verify_eigen_relation(level: &RitusLevel, dirac: &DiracGrid) -> Result<f64> {
    check_grid(level, dirac)?;
    let p2 = level.pbar[0] * level.pbar[0] - level.pbar[2] * level.pbar[2];
    let p0sq = level.p0 * level.p0;
    let lhs = dirac.map_columns(&level.ep, |c| {
        let t = dirac.apply_pi_tilde_sq(c)?;
        Ok(c.iter().zip(t).map(|(a, b)| a * p0sq - b).collect())
    })?;
    let res = lhs - &level.ep * C64::from(p2);
    Ok(dirac.norm(&res) / dirac.norm(&level.ep))
}

/// `‖(γ·Π) E_p − E_p (γ·p̄)‖ / ‖E_p‖` with `γ·Π = γ⁰p₀ − X`.
pub fn verify_gp_ep(level: &RitusLevel, dirac: &DiracGrid) -> Result<f64> {
    check_grid(level, dirac)?;
    let lhs = dirac.map_columns(&level.ep, |c| {
        let g = dirac.apply_g0(c)?;
        let x = dirac.apply_x(c)?;
        Ok(g.iter().zip(x).map(|(a, b)| a * level.p0 - b).collect())
    })?;
    let res = lhs - level.times(&level.slash_pbar());
    Ok(dirac.norm(&res) / dirac.norm(&level.ep))
}

/// `‖X E_p‖ / ‖E_p‖`; vanishes for the zero mode.
pub fn spatial_residual(level: &RitusLevel, dirac: &DiracGrid) -> Result<f64> {
    check_grid(level, dirac)?;
    let x = dirac.map_columns(&level.ep, |c| dirac.apply_x(c))?;
    Ok(dirac.norm(&x) / dirac.norm(&level.ep))
}

fn check_shared(levels: &[RitusLevel]) -> Result<()> {
    if let Some(first) = levels.first() {
        for l in levels {
            if l.grid != first.grid || l.p_y != first.p_y {
                return Err(Error::Argument(
                    "levels must share the grid and p_y".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Block `(i, j)` is `∫ dx Ē_{p_i} E_{p_j}` with `Ē = γ⁰ E† γ⁰`.
pub fn orthonormality_matrix(levels: &[RitusLevel]) -> Result<DMatrix<C64>> {
    check_shared(levels)?;
    for (i, a) in levels.iter().enumerate() {
        if levels[..i].iter().any(|b| b.n == a.n) {
            warn!("level {} appears more than once in the orthonormality check", a.n);
        }
    }
    let l = levels.len();
    let mut out = DMatrix::zeros(2 * l, 2 * l);
    let Some(first) = levels.first() else {
        return Ok(out);
    };
    let npts = first.grid.n;
    let w = first.grid.weights();
    let g0 = first.rep.g0();
    let g0_big = |m: &DMatrix<C64>| -> DMatrix<C64> {
        DMatrix::from_fn(2 * npts, m.ncols(), |r, c| {
            let (a, i) = (r / npts, r % npts);
            g0[(a, 0)] * m[(i, c)] + g0[(a, 1)] * m[(npts + i, c)]
        })
    };
    let g0_small = DMatrix::from_fn(2, 2, |i, j| g0[(i, j)]);
    for (i, a) in levels.iter().enumerate() {
        let mut bar = g0_big(&a.ep);
        for (r, mut row) in bar.row_iter_mut().enumerate() {
            row *= C64::from(w[r % npts]);
        }
        for (j, b) in levels.iter().enumerate() {
            let block = &g0_small * bar.adjoint() * &b.ep;
            out.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&block);
        }
    }
    Ok(out)
}

/// Largest deviation of the orthonormality matrix from `diag(Π(n_i))`.
pub fn orthonormality_defect(levels: &[RitusLevel]) -> Result<f64> {
    let m = orthonormality_matrix(levels)?;
    let mut worst = 0.0_f64;
    for (i, a) in levels.iter().enumerate() {
        for (j, _) in levels.iter().enumerate() {
            for r in 0..2 {
                for c in 0..2 {
                    let target = if i == j && r == c { a.projector.diag[r] } else { 0.0 };
                    worst = worst.max((m[(2 * i + r, 2 * j + c)] - target).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// `‖ψ − Σ E_p ∫Ē_p ψ‖ / ‖ψ‖` for a slot-major test spinor.
pub fn completeness_residual(levels: &[RitusLevel], test: &[C64]) -> Result<f64> {
    check_shared(levels)?;
    let residuals = completeness_sequence(levels, test)?;
    Ok(*residuals.last().unwrap())
}

/// Residual after including the first `0, 1, …, len` levels.
pub fn completeness_sequence(levels: &[RitusLevel], test: &[C64]) -> Result<Vec<f64>> {
    check_shared(levels)?;
    let Some(first) = levels.first() else {
        return Ok(vec![1.0]);
    };
    let npts = first.grid.n;
    if test.len() != 2 * npts {
        return Err(Error::Argument(format!(
            "test spinor has {} entries, expected {}",
            test.len(),
            2 * npts
        )));
    }
    let w = first.grid.weights();
    let norm = |v: &[C64]| -> f64 {
        v.iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * w[i % npts])
            .sum::<f64>()
            .sqrt()
    };
    let total = norm(test);
    if total == 0.0 {
        return Err(Error::Argument("test spinor is zero".into()));
    }
    let psi = DVector::from_column_slice(test);
    let wpsi = DVector::from_fn(2 * npts, |i, _| psi[i] * w[i % npts]);
    let mut rest = psi.clone();
    let mut out = vec![1.0];
    for l in levels {
        let coeff = l.ep.adjoint() * &wpsi;
        rest -= &l.ep * coeff;
        out.push(norm(rest.as_slice()) / total);
    }
    Ok(out)
}

/// Level table with columns `n,k,p0,py,E_D`.
pub fn write_levels_csv<W: Write>(out: W, levels: &[RitusLevel], m: f64) -> Result<()> {
    check_mass(m)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "k", "p0", "py", "E_D"])?;
    for l in levels {
        w.write_record([
            l.n.to_string(),
            fmt_sig(l.k),
            fmt_sig(l.p0),
            fmt_sig(l.p_y),
            fmt_sig((l.k + m * m).sqrt()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Matrix eigenfunction with columns `x,re_c1s1,im_c1s1,…`, where `c` is the
/// column and `s` the spinor component.
pub fn write_level_matrix_csv<W: Write>(out: W, level: &RitusLevel) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string()];
    for c in 1..=2 {
        for s in 1..=2 {
            header.push(format!("re_c{c}s{s}"));
            header.push(format!("im_c{c}s{s}"));
        }
    }
    w.write_record(&header)?;
    let npts = level.grid.n;
    for i in 0..npts {
        let mut rec = vec![fmt_sig(level.grid.x(i))];
        for c in 0..2 {
            for s in 0..2 {
                let z = level.ep[(s * npts + i, c)];
                rec.push(fmt_sig(z.re));
                rec.push(fmt_sig(z.im));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{make_rep, Variant};
    use crate::field::FieldProfile;

    fn solution(variant: Variant) -> SliceSolution {
        let slice = FieldSlice::new(FieldProfile::uniform(1.0), 1.0, 0.0);
        SliceSolution::solve(&slice, &make_rep(variant), 8, &GridConfig::default()).unwrap()
    }

    #[test]
    fn bar_momentum_examples() {
        let b = bar_momentum(0.0, 1.0, 1).unwrap();
        assert_eq!(b.as_array(), [1.0, 0.0, 0.0]);
        assert_eq!(b.e_d, 1.0);
        let b = bar_momentum(3.0, 1.0, 1).unwrap();
        assert_eq!(b.p0, 2.0);
        assert!((b.p2 - 3f64.sqrt()).abs() < 1e-15);
        assert!((b.square() - 1.0).abs() < 1e-14);
        assert!(matches!(bar_momentum(-1.0, 1.0, 1), Err(Error::Argument(_))));
        assert!(matches!(bar_momentum(1.0, 0.0, 1), Err(Error::Argument(_))));
        assert_eq!(bar_momentum(3.0, 1.0, -1).unwrap().p0, -2.0);
    }

    #[test]
    fn level_layout() {
        let sol = solution(Variant::First);
        let l0 = sol.level(0, 1.0).unwrap();
        assert_eq!(l0.k, 0.0);
        assert_eq!(l0.columns(), vec![0]);
        assert!(l0.ep.column(1).iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert_eq!(l0.projector.diag, [1.0, 0.0]);
        let l1 = sol.level(1, 0.0).unwrap();
        assert!((l1.k - 2.0).abs() < 1e-6);
        assert_eq!(l1.pbar[1], 0.0);
        assert_eq!(l1.projector.diag, [1.0, 1.0]);
    }

    #[test]
    fn second_rep_swaps_slots() {
        let sol = solution(Variant::Second);
        let l0 = sol.level(0, 1.0).unwrap();
        assert_eq!(l0.zero_mode_slot, 1);
        assert_eq!(l0.projector.diag, [0.0, 1.0]);
    }

    #[test]
    fn residuals_small() {
        let sol = solution(Variant::First);
        let d = sol.dirac().unwrap();
        for l in sol.on_shell_levels(1.0).unwrap() {
            assert!(verify_eigen_relation(&l, &d).unwrap() < 1e-6, "n={}", l.n);
            assert!(verify_gp_ep(&l, &d).unwrap() < 1e-5, "n={}", l.n);
        }
        let l0 = sol.level(0, 1.0).unwrap();
        assert!(spatial_residual(&l0, &d).unwrap() < 1e-8);
    }

    #[test]
    fn perturbed_pbar_breaks_relations() {
        let sol = solution(Variant::First);
        let d = sol.dirac().unwrap();
        let mut l = sol.on_shell_levels(1.0).unwrap().remove(2);
        l.pbar[2] *= -1.0;
        assert!(verify_gp_ep(&l, &d).unwrap() > 0.5);
        l.pbar[2] *= -1.1;
        assert!(verify_eigen_relation(&l, &d).unwrap() > 0.1);
    }

    #[test]
    fn orthonormal_blocks() {
        let sol = solution(Variant::First);
        let levels = sol.levels_at(0.3).unwrap();
        assert!(orthonormality_defect(&levels).unwrap() < 1e-8);
        let single = orthonormality_matrix(&levels[3..4]).unwrap();
        assert!((single - DMatrix::<C64>::identity(2, 2)).norm() < 1e-8);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = solution(Variant::First);
        let slice = FieldSlice::new(FieldProfile::uniform(1.0), 1.0, 0.0);
        let g = Grid::new(a.grid.x_min, a.grid.x_max, 900).unwrap();
        let b = SliceSolution::solve_on(&slice, &a.rep, 8, &g).unwrap();
        assert!(matches!(
            assemble_level(&slice, &a.rep, &a.plus, &b.minus, 1, 0.0),
            Err(Error::Pairing(_))
        ));
        let la = a.level(1, 0.0).unwrap();
        let lb = b.level(1, 0.0).unwrap();
        assert!(matches!(orthonormality_matrix(&[la, lb]), Err(Error::Argument(_))));
    }

    #[test]
    fn missing_level_is_truncation() {
        let sol = solution(Variant::First);
        assert!(matches!(sol.level(12, 0.0), Err(Error::Truncation { .. })));
    }

    #[test]
    fn completeness_examples() {
        let sol = solution(Variant::First);
        let levels = sol.levels_at(0.3).unwrap();
        let test: Vec<C64> = levels[3].ep.column(1).iter().copied().collect();
        let seq = completeness_sequence(&levels, &test).unwrap();
        assert_eq!(seq[0], 1.0);
        assert!(seq[4] < 1e-8);
        assert_eq!(completeness_sequence(&[], &test).unwrap(), vec![1.0]);
    }

    #[test]
    fn csv_exports() {
        let sol = solution(Variant::First);
        let levels = sol.on_shell_levels(1.0).unwrap();
        let mut buf = Vec::new();
        write_levels_csv(&mut buf, &levels, 1.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,k,p0,py,E_D\n0,"));
        assert_eq!(text.lines().count(), 10);
        let mut buf = Vec::new();
        write_level_matrix_csv(&mut buf, &levels[1]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,re_c1s1,im_c1s1,re_c1s2,im_c1s2,re_c2s1"));
        assert_eq!(text.lines().count(), 1 + sol.grid.n);
    }
}
