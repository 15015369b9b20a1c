//! Channel eigenproblems `H_σ = −d²/dx² + V_σ(x)` on a uniform grid.
//!
//! `H_σ` is discretized with the five-point fourth-order stencil and
//! Dirichlet boundaries, which gives a symmetric pentadiagonal matrix. Its
//! lowest eigenpairs come from Sturm-count bisection and inverse iteration.

use std::io::Write;

use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::field::{check_sigma, FieldProfile, FieldSlice};
use crate::stencil;

/// Raw eigenvalues in `[ZERO_MODE_CLAMP, 0)` are reported as exactly zero.
pub const ZERO_MODE_CLAMP: f64 = -1e-8;
/// Largest edge amplitude, relative to the peak, accepted for a bound state.
pub const EDGE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 64;

    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < Self::MIN_POINTS {
            return Err(Error::Configuration(format!(
                "grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Configuration(format!(
                "invalid grid range [{x_min}, {x_max}]"
            )));
        }
        Ok(Grid { x_min, x_max, n })
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.x_max - self.x_min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub points: usize,
    /// Minimum ratio of the half-extent to the turning-point distance.
    pub padding: f64,
    /// WKB decay exponent `∫ √(V − k) dx` required beyond the turning point.
    pub decay: f64,
    /// Explicit `(x_min, x_max)`, bypassing the automatic sizing.
    pub range: Option<(f64, f64)>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            points: 1024,
            padding: 1.5,
            decay: 13.5,
            range: None,
        }
    }
}

/// Rough value of `k` at level `n_max`: exact for a uniform field, a local
/// Landau estimate with a safety margin otherwise.
pub fn k_estimate(slice: &FieldSlice, n_max: usize) -> Result<f64> {
    let center = slice.center()?;
    let eb = slice.eb(center)?.abs();
    Ok(match slice.profile {
        FieldProfile::Uniform { .. } => 2.0 * n_max as f64 * eb,
        _ => 1.25 * 2.0 * n_max as f64 * eb,
    })
}

pub fn build_grid(slice: &FieldSlice, n_max: usize, config: &GridConfig) -> Result<Grid> {
    if n_max == 0 {
        return Err(Error::Configuration("n_max must be at least 1".into()));
    }
    if !(config.padding >= 1.0) || !(config.decay > 0.0) {
        return Err(Error::Configuration(
            "grid padding must be >= 1 and decay > 0".into(),
        ));
    }
    if let Some((a, b)) = config.range {
        return Grid::new(a, b, config.points);
    }
    let center = slice.center()?;
    let k_top = k_estimate(slice, n_max)?;
    let length = 1.0 / slice.eb(center)?.abs().sqrt();
    let left = side_extent(slice, center, -1.0, k_top, length, config)?;
    let right = side_extent(slice, center, 1.0, k_top, length, config)?;
    let (mut a, mut b) = (center - left, center + right);
    if let Some((lo, hi)) = slice.profile.domain() {
        a = a.max(lo);
        b = b.min(hi);
    }
    Grid::new(a, b, config.points)
}

fn side_extent(
    slice: &FieldSlice,
    center: f64,
    dir: f64,
    k_top: f64,
    length: f64,
    config: &GridConfig,
) -> Result<f64> {
    const MAX_LENGTHS: f64 = 400.0;
    let step = 1e-3 * length;
    let v_min = |x: f64| -> Result<f64> {
        Ok(slice.potential(1, x)?.min(slice.potential(-1, x)?))
    };
    let mut d = 0.0;
    let mut turning = None;
    let mut decay = 0.0;
    let mut prev = 0.0;
    while d < MAX_LENGTHS * length {
        d += step;
        let x = center + dir * d;
        let v = match v_min(x) {
            Ok(v) => v,
            // tabulated profile: the table edge bounds the domain
            Err(Error::Domain { .. }) => return Ok(d - step),
            Err(e) => return Err(e),
        };
        if !v.is_finite() {
            return Err(Error::Configuration(format!("non-finite potential at x = {x}")));
        }
        match turning {
            None if v >= k_top => turning = Some(d),
            None => {}
            Some(t) => {
                let kappa = (v - k_top).max(0.0).sqrt();
                decay += 0.5 * (kappa + prev) * step;
                prev = kappa;
                if decay >= config.decay {
                    return Ok((config.padding * t).max(d));
                }
            }
        }
    }
    Err(Error::Configuration(format!(
        "potential does not confine k = {k_top} within {MAX_LENGTHS} magnetic lengths \
         of x = {center} (direction {dir:+})"
    )))
}

/// Lowest eigenpairs of one scalar channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSpectrum {
    pub sigma: i8,
    pub grid: Grid,
    /// Ascending; tiny negative zero-mode values clamped to 0.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues exactly as produced by the eigensolver.
    pub raw_eigenvalues: Vec<f64>,
    /// Real, unit trapezoid norm, positive at the peak of |φ|.
    pub eigenfunctions: Vec<Vec<f64>>,
}

impl ScalarSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Pentadiagonal matrix of `−d²/dx² + V_σ` on `grid`.
pub fn channel_matrix(slice: &FieldSlice, sigma: i8, grid: &Grid) -> Result<SymBanded> {
    check_sigma(sigma)?;
    let n = grid.n;
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut m = SymBanded::new(n, 2);
    for i in 0..n {
        let v = slice.potential(sigma, grid.x(i))?;
        m.set(i, i, -stencil::SECOND[2] * inv_h2 + v);
        if i + 1 < n {
            m.set(i, i + 1, -stencil::SECOND[3] * inv_h2);
        }
        if i + 2 < n {
            m.set(i, i + 2, -stencil::SECOND[4] * inv_h2);
        }
    }
    Ok(m)
}

/// Raw eigenpairs with normalization and the phase convention applied, but
/// no clamping or truncation checks.
pub fn solve_channel_raw(
    slice: &FieldSlice,
    sigma: i8,
    grid: &Grid,
    count: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let m = channel_matrix(slice, sigma, grid)?;
    let (values, mut vectors) = m.lowest_eigenpairs(count);
    let w = grid.weights();
    for v in &mut vectors {
        normalize_and_fix_phase(v, &w);
    }
    Ok((values, vectors))
}

fn normalize_and_fix_phase(v: &mut [f64], weights: &[f64]) {
    let norm = v
        .iter()
        .zip(weights)
        .map(|(x, w)| w * x * x)
        .sum::<f64>()
        .sqrt();
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    // ties between symmetric lobes resolve toward lower x
    let anchor = v
        .iter()
        .position(|x| x.abs() >= peak * (1.0 - 1e-8))
        .unwrap_or(0);
    let s = if v[anchor] < 0.0 { -1.0 } else { 1.0 } / norm;
    v.iter_mut().for_each(|x| *x *= s);
}

pub fn solve_channel(slice: &FieldSlice, sigma: i8, grid: &Grid, count: usize) -> Result<ScalarSpectrum> {
    if count == 0 {
        return Err(Error::Argument("at least one level must be requested".into()));
    }
    if count > grid.n / 4 {
        return Err(Error::Truncation {
            sigma,
            level: count - 1,
            reason: format!("{count} levels cannot be resolved with {} points", grid.n),
        });
    }
    let (raw, vectors) = solve_channel_raw(slice, sigma, grid, count)?;
    let wall = slice
        .potential(sigma, grid.x_min)?
        .min(slice.potential(sigma, grid.x_max)?);
    let mut eigenvalues = Vec::with_capacity(count);
    for (level, (&k, phi)) in raw.iter().zip(&vectors).enumerate() {
        if k < ZERO_MODE_CLAMP {
            return Err(Error::Discretization(format!(
                "channel sigma={sigma} level {level} has eigenvalue {k:e} < {ZERO_MODE_CLAMP:e}"
            )));
        }
        if k >= wall {
            return Err(Error::Truncation {
                sigma,
                level,
                reason: format!("k = {k} is not below the boundary potential {wall}"),
            });
        }
        let peak = phi.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let n = phi.len();
        let edge = [phi[0], phi[1], phi[n - 2], phi[n - 1]]
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        if edge > EDGE_TOLERANCE * peak {
            return Err(Error::Truncation {
                sigma,
                level,
                reason: format!("edge amplitude {:.3e} of peak; enlarge the domain", edge / peak),
            });
        }
        eigenvalues.push(if k < 0.0 { 0.0 } else { k });
    }
    Ok(ScalarSpectrum {
        sigma,
        grid: *grid,
        eigenvalues,
        raw_eigenvalues: raw,
        eigenfunctions: vectors,
    })
}

/// Solves σ = +1 (`count_plus` levels) and σ = −1 (`count_minus` levels) concurrently.
pub fn solve_channels(
    slice: &FieldSlice,
    grid: &Grid,
    count_plus: usize,
    count_minus: usize,
) -> Result<(ScalarSpectrum, ScalarSpectrum)> {
    let (plus, minus) = rayon::join(
        || solve_channel(slice, 1, grid, count_plus),
        || solve_channel(slice, -1, grid, count_minus),
    );
    Ok((plus?, minus?))
}

/// Number of sign changes, ignoring samples below `floor` times the peak.
pub fn sign_changes(phi: &[f64], floor: f64) -> usize {
    let peak = phi.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut last = 0.0;
    let mut changes = 0;
    for &v in phi {
        if v.abs() <= floor * peak {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            changes += 1;
        }
        last = v.signum();
    }
    changes
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub points: usize,
    pub h: f64,
    pub k: f64,
    /// Against the analytic value, when one exists.
    pub error: Option<f64>,
    /// Observed order between this row and the previous one.
    pub order: Option<f64>,
}

/// Eigenvalue of one level on successively refined grids over a fixed domain.
///
/// Orders come from the analytic error for a uniform field and from
/// successive differences otherwise (which needs at least three grids).
pub fn convergence_study(
    slice: &FieldSlice,
    sigma: i8,
    level: usize,
    points: &[usize],
    config: &GridConfig,
) -> Result<Vec<ConvergenceRow>> {
    if points.len() < 2 {
        return Err(Error::Argument(
            "convergence study needs at least two grid sizes".into(),
        ));
    }
    if points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("grid sizes must be strictly ascending".into()));
    }
    let base = build_grid(slice, level.max(1), config)?;
    let exact = crate::field::analytic_landau_level(&slice.profile, slice.charge, level, sigma).ok();
    if exact.is_none() && points.len() < 3 {
        return Err(Error::Argument(
            "without an analytic reference at least three grid sizes are needed".into(),
        ));
    }
    let rows: Vec<(usize, f64, f64)> = points
        .iter()
        .map(|&n| {
            let g = Grid::new(base.x_min, base.x_max, n)?;
            let (vals, _) = solve_channel_raw(slice, sigma, &g, level + 1)?;
            Ok((n, g.h(), vals[level]))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<ConvergenceRow> = Vec::with_capacity(rows.len());
    for (i, &(n, h, k)) in rows.iter().enumerate() {
        let error = exact.map(|e| (k - e).abs());
        let order = match (exact, i) {
            (Some(_), i) if i >= 1 => {
                let prev = out[i - 1].error.unwrap();
                Some((prev / error.unwrap()).ln() / (rows[i - 1].1 / h).ln())
            }
            (None, i) if i >= 2 => {
                let d0 = (rows[i - 1].2 - rows[i - 2].2).abs();
                let d1 = (k - rows[i - 1].2).abs();
                Some((d0 / d1).ln() / (rows[i - 1].1 / h).ln())
            }
            _ => None,
        };
        out.push(ConvergenceRow {
            points: n,
            h,
            k,
            error,
            order,
        });
    }
    Ok(out)
}

/// Richardson extrapolation of two estimates with leading error `C h^order`.
pub fn richardson(coarse: (f64, f64), fine: (f64, f64), order: f64) -> f64 {
    let r = (coarse.0 / fine.0).powf(order);
    (r * fine.1 - coarse.1) / (r - 1.0)
}

/// CSV with columns `sigma,n,k`.
pub fn write_spectrum_csv<W: Write>(out: W, spectra: &[&ScalarSpectrum]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sigma", "n", "k"])?;
    for s in spectra {
        for (n, k) in s.eigenvalues.iter().enumerate() {
            w.write_record([s.sigma.to_string(), n.to_string(), fmt_sig(*k)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `x,phi`.
pub fn write_eigenfunction_csv<W: Write>(out: W, grid: &Grid, phi: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "phi"])?;
    for (i, v) in phi.iter().enumerate() {
        w.write_record([fmt_sig(grid.x(i)), fmt_sig(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed 12-significant-digit scientific formatting used by all exports.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        // normalizes -0.0
        "0.00000000000e0".to_string()
    } else {
        format!("{v:.11e}")
    }
}
