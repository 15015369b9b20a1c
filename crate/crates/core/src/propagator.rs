//! The fermion propagator `S_F = (γ·Π − m)⁻¹` on the grid, projected onto
//! the Ritus levels and compared with `1/(γ·p̄ − m)`.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::clifford::{GammaRep, Mat2, C64};
use crate::dirac::DiracGrid;
use crate::error::{Error, Result};
use crate::ritus::{check_mass, BarMomentum, RitusLevel};
use crate::spectral::fmt_sig;

/// Smallest `|p̄² − m²|` accepted by [`diagonal_propagator`].
pub const POLE_TOLERANCE: f64 = 1e-8;
/// Smallest distance between `p₀` and an on-shell energy in [`project_propagator`].
pub const SHELL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPropagator {
    pub pbar: BarMomentum,
    pub m: f64,
    pub stilde: Mat2,
    /// `‖(γ·p̄ − m) S̃ − 1‖`.
    pub inverse_residual: f64,
    /// Deviation from the direct 2×2 inverse.
    pub inversion_mismatch: f64,
    /// 2-norm condition number of `γ·p̄ − m`.
    pub condition: f64,
}

/// `S̃ = (γ·p̄ + m) / (p̄² − m²)`.
pub fn diagonal_propagator(pbar: &BarMomentum, m: f64, rep: &GammaRep) -> Result<DiagonalPropagator> {
    check_mass(m)?;
    let distance = (pbar.square() - m * m).abs();
    if distance <= POLE_TOLERANCE {
        return Err(Error::Pole { distance });
    }
    let slash = rep.slash(pbar.as_array());
    let id = Mat2::identity();
    let stilde = (slash + id * C64::from(m)) / C64::from(pbar.square() - m * m);
    let op = slash - id * C64::from(m);
    let inverse_residual = (op * stilde - id).norm();
    let direct = op.try_inverse().ok_or(Error::Pole { distance })?;
    let sv = op.singular_values();
    Ok(DiagonalPropagator {
        pbar: *pbar,
        m,
        stilde,
        inverse_residual,
        inversion_mismatch: (direct - stilde).norm(),
        condition: sv.max() / sv.min(),
    })
}

#[derive(Debug, Clone)]
pub struct ProjectedPropagator {
    pub p0: f64,
    /// `∫ Ē_{p_i} S_F E_{p_i}` per level.
    pub diagonal_blocks: Vec<Mat2>,
    /// `Π(n) S̃(p̄_n)` per level.
    pub expected: Vec<Mat2>,
    /// `‖B_ii − Π(n) S̃‖_F / ‖S̃‖_F` per level.
    pub diagonal_errors: Vec<f64>,
    /// Largest `‖B_ij‖_F` over `i ≠ j`.
    pub max_cross_norm: f64,
    /// Full block matrix.
    pub blocks: DMatrix<C64>,
}

fn check_off_shell(levels: &[RitusLevel], p0: f64, m: f64) -> Result<()> {
    for l in levels {
        let e = (l.k + m * m).sqrt();
        let distance = (p0.abs() - e).abs();
        if distance < SHELL_TOLERANCE {
            return Err(Error::Conditioning { p0, level: l.n, distance });
        }
    }
    Ok(())
}

/// Inverts `γ⁰p₀ − X − m` on the grid and projects onto the given levels.
/// The levels' own `p₀` is ignored in favour of `p0`.
pub fn project_propagator(dirac: &DiracGrid, levels: &[RitusLevel], p0: f64, m: f64) -> Result<ProjectedPropagator> {
    check_mass(m)?;
    for l in levels {
        if l.grid != dirac.grid || l.rep != dirac.rep {
            return Err(Error::Argument(
                "levels and grid operator use different grids or representations".into(),
            ));
        }
    }
    check_off_shell(levels, p0, m)?;
    let lu = dirac.factor_propagator(p0, m)?;
    let npts = dirac.grid.n;
    let g0 = *dirac.rep.g0();
    let g0_dm = DMatrix::from_fn(2, 2, |i, j| g0[(i, j)]);
    // S_F E_j, one solve per column
    let solved: Vec<DMatrix<C64>> = levels
        .par_iter()
        .map(|l| {
            let mut out = DMatrix::zeros(2 * npts, 2);
            for z in l.columns() {
                let rhs: Vec<C64> = l.ep.column(z).iter().copied().collect();
                let x = lu.solve(&rhs);
                out.set_column(z, &nalgebra::DVector::from_vec(x));
            }
            out
        })
        .collect();
    let count = levels.len();
    let mut blocks = DMatrix::zeros(2 * count, 2 * count);
    for (i, li) in levels.iter().enumerate() {
        // Ē = γ⁰ E† γ⁰, with γ⁰ acting on the spinor index of the grid vector
        let g0e = dirac.map_columns(&li.ep, |c| dirac.apply_g0(c))?;
        for (j, sj) in solved.iter().enumerate() {
            let b = &g0_dm * dirac.gram(&g0e, sj);
            blocks.view_mut((2 * i, 2 * j), (2, 2)).copy_from(&b);
        }
    }
    let mut diagonal_blocks = Vec::with_capacity(count);
    let mut expected = Vec::with_capacity(count);
    let mut diagonal_errors = Vec::with_capacity(count);
    let mut max_cross_norm = 0.0_f64;
    for (i, l) in levels.iter().enumerate() {
        let pbar = BarMomentum::off_shell(p0, l.k, m)?;
        let s = diagonal_propagator(&pbar, m, &l.rep)?.stilde;
        let target = l.projector.matrix() * s;
        let b = blocks.fixed_view::<2, 2>(2 * i, 2 * i).into_owned();
        diagonal_errors.push((b - target).norm() / s.norm());
        diagonal_blocks.push(b);
        expected.push(target);
        for j in 0..count {
            if j != i {
                max_cross_norm = max_cross_norm.max(blocks.view((2 * i, 2 * j), (2, 2)).norm());
            }
        }
    }
    Ok(ProjectedPropagator {
        p0,
        diagonal_blocks,
        expected,
        diagonal_errors,
        max_cross_norm,
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoleSweepPoint {
    pub p0: f64,
    pub level: usize,
    pub block_norm: f64,
    /// `|p₀² − (k + m²)|`.
    pub distance: f64,
}

/// Diagonal block norm of `level` at `p₀ = E_D (1 − δ)` for each offset δ.
pub fn pole_sweep(dirac: &DiracGrid, level: &RitusLevel, m: f64, offsets: &[f64]) -> Result<Vec<PoleSweepPoint>> {
    check_mass(m)?;
    let e = (level.k + m * m).sqrt();
    offsets
        .par_iter()
        .map(|&d| {
            let p0 = e * (1.0 - d);
            let r = project_propagator(dirac, std::slice::from_ref(level), p0, m)?;
            Ok(PoleSweepPoint {
                p0,
                level: level.n,
                block_norm: r.diagonal_blocks[0].norm(),
                distance: (p0 * p0 - e * e).abs(),
            })
        })
        .collect()
}

/// Least-squares slope of `ln(block_norm)` against `ln(distance)`; the pole
/// exponent is its negative.
pub fn pole_exponent(points: &[PoleSweepPoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Argument("pole fit needs at least two points".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.distance.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.block_norm.ln()).collect();
    Ok(-log_slope(&xs, &ys))
}

/// Least-squares slope of `ys` against `xs`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// CSV with columns `p0,n,block_norm`.
pub fn write_pole_sweep_csv<W: Write>(out: W, points: &[PoleSweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p0", "n", "block_norm"])?;
    for p in points {
        w.write_record([fmt_sig(p.p0), p.level.to_string(), fmt_sig(p.block_norm)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{make_rep, Variant};
    use crate::field::{FieldProfile, FieldSlice};
    use crate::ritus::SliceSolution;
    use crate::spectral::GridConfig;

    #[test]
    fn rest_frame_is_diagonal() {
        let rep = make_rep(Variant::First);
        let (p0, m) = (0.3, 1.0);
        let d = diagonal_propagator(&BarMomentum::off_shell(p0, 0.0, m).unwrap(), m, &rep).unwrap();
        assert!((d.stilde[(0, 0)] - C64::from(1.0 / (p0 - m))).norm() < 1e-15);
        assert!((d.stilde[(1, 1)] + C64::from(1.0 / (p0 + m))).norm() < 1e-15);
        assert_eq!(d.stilde[(0, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn off_shell_inverse() {
        for v in [Variant::First, Variant::Second] {
            let rep = make_rep(v);
            for &(p0, k, m) in &[(0.3, 2.0, 1.0), (-2.5, 0.7, 0.4), (5.0, 11.0, 2.0)] {
                let d = diagonal_propagator(&BarMomentum::off_shell(p0, k, m).unwrap(), m, &rep).unwrap();
                assert!(d.inverse_residual < 1e-12);
                assert!(d.inversion_mismatch < 1e-12);
                assert!(d.condition >= 1.0);
            }
        }
    }

    #[test]
    fn on_shell_is_pole() {
        let rep = make_rep(Variant::First);
        let pbar = crate::ritus::bar_momentum(2.0, 1.0, 1).unwrap();
        assert!(matches!(diagonal_propagator(&pbar, 1.0, &rep), Err(Error::Pole { .. })));
    }

    #[test]
    fn projected_blocks_match() {
        let slice = FieldSlice::new(FieldProfile::uniform(1.0), 1.0, 0.0);
        let sol = SliceSolution::solve(&slice, &make_rep(Variant::First), 5, &GridConfig::default()).unwrap();
        let d = sol.dirac().unwrap();
        let levels = sol.levels_at(0.3).unwrap();
        let r = project_propagator(&d, &levels, 0.3, 1.0).unwrap();
        for e in &r.diagonal_errors {
            assert!(*e < 1e-5, "{e}");
        }
        assert!(r.max_cross_norm < 1e-6);
        let on_shell = (levels[1].k + 1.0).sqrt();
        assert!(matches!(
            project_propagator(&d, &levels, on_shell, 1.0),
            Err(Error::Conditioning { level: 1, .. })
        ));
    }

    #[test]
    fn sweep_csv() {
        let pts = vec![PoleSweepPoint {
            p0: 1.5,
            level: 1,
            block_norm: 2.0,
            distance: 0.1,
        }];
        let mut buf = Vec::new();
        write_pole_sweep_csv(&mut buf, &pts).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("p0,n,block_norm\n1.50000000000e0,1,"));
    }
}
