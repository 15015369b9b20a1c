//! Grid realization of the spatial Dirac operator `X = γ¹Π¹ + γ²Π²` with
//! `Π¹ = −i d/dx` and `Π² = p_y − eW(x)`.
//!
//! Spinor fields are stored slot-major: entries `0..N` hold the upper
//! component, `N..2N` the lower one.

use nalgebra::DMatrix;

use crate::banded::BandedLu;
use crate::clifford::{GammaRep, C64};
use crate::error::{Error, Result};
use crate::field::FieldSlice;
use crate::spectral::Grid;
use crate::stencil;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub struct DiracGrid {
    pub rep: GammaRep,
    pub grid: Grid,
    /// Π²(x_i).
    pub kinetic: Vec<f64>,
    /// Channel potential seen by each spinor slot, `V_{σ(slot)}(x_i)`.
    pub slot_potential: [Vec<f64>; 2],
    pub weights: Vec<f64>,
}

impl DiracGrid {
    pub fn new(slice: &FieldSlice, rep: &GammaRep, grid: &Grid) -> Result<Self> {
        let xs = grid.points();
        let kinetic = xs.iter().map(|&x| slice.kinetic(x)).collect::<Result<Vec<_>>>()?;
        let pot = |slot: usize| -> Result<Vec<f64>> {
            let sigma = rep.channel_of_slot(slot);
            xs.iter().map(|&x| slice.potential(sigma, x)).collect()
        };
        Ok(DiracGrid {
            rep: rep.clone(),
            grid: *grid,
            kinetic,
            slot_potential: [pot(0)?, pot(1)?],
            weights: grid.weights(),
        })
    }

    pub fn points(&self) -> usize {
        self.grid.n
    }

    fn check_len(&self, psi: &[C64]) -> Result<()> {
        if psi.len() != 2 * self.grid.n {
            return Err(Error::Argument(format!(
                "spinor field has {} entries, expected {}",
                psi.len(),
                2 * self.grid.n
            )));
        }
        Ok(())
    }

    /// `X ψ`.
    pub fn apply_x(&self, psi: &[C64]) -> Result<Vec<C64>> {
        self.check_len(psi)?;
        let n = self.grid.n;
        let h = self.grid.h();
        let (g1, g2) = (&self.rep.gamma[1], &self.rep.gamma[2]);
        let comps = [&psi[..n], &psi[n..]];
        let d1 = [
            stencil::first_derivative(comps[0], h),
            stencil::first_derivative(comps[1], h),
        ];
        let mut out = vec![C64::new(0.0, 0.0); 2 * n];
        for a in 0..2 {
            for b in 0..2 {
                let c1 = g1[(a, b)] * (-I);
                let c2 = g2[(a, b)];
                if c1 == C64::new(0.0, 0.0) && c2 == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n {
                    out[a * n + i] += c1 * d1[b][i] + c2 * (self.kinetic[i] * comps[b][i]);
                }
            }
        }
        Ok(out)
    }

    /// `Π̃² ψ` with the second-derivative stencil, slot by slot.
    pub fn apply_pi_tilde_sq(&self, psi: &[C64]) -> Result<Vec<C64>> {
        self.check_len(psi)?;
        let n = self.grid.n;
        let h = self.grid.h();
        let mut out = Vec::with_capacity(2 * n);
        for s in 0..2 {
            let f = &psi[s * n..(s + 1) * n];
            let d2 = stencil::second_derivative(f, h);
            out.extend((0..n).map(|i| -d2[i] + f[i] * self.slot_potential[s][i]));
        }
        Ok(out)
    }

    /// `γ⁰ ψ`.
    pub fn apply_g0(&self, psi: &[C64]) -> Result<Vec<C64>> {
        self.check_len(psi)?;
        let n = self.grid.n;
        let g0 = self.rep.g0();
        Ok((0..2 * n)
            .map(|idx| {
                let (a, i) = (idx / n, idx % n);
                g0[(a, 0)] * psi[i] + g0[(a, 1)] * psi[n + i]
            })
            .collect())
    }

    /// Weighted inner product `Σ w_i ⟨a(x_i), b(x_i)⟩` over both slots.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        let n = self.grid.n;
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(idx, (x, y))| x.conj() * y * self.weights[idx % n])
            .sum()
    }

    /// Weighted Frobenius norm of a slot-major `2N × c` matrix.
    pub fn norm(&self, m: &DMatrix<C64>) -> f64 {
        let n = self.grid.n;
        m.column_iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(idx, z)| z.norm_sqr() * self.weights[idx % n])
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `Q† W A` for slot-major matrices.
    pub fn gram(&self, q: &DMatrix<C64>, a: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.grid.n;
        let mut wa = a.clone();
        for (idx, mut row) in wa.row_iter_mut().enumerate() {
            row *= C64::from(self.weights[idx % n]);
        }
        q.adjoint() * wa
    }

    /// Applies `op` to every column of a slot-major matrix.
    pub fn map_columns(
        &self,
        m: &DMatrix<C64>,
        op: impl Fn(&[C64]) -> Result<Vec<C64>>,
    ) -> Result<DMatrix<C64>> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (j, col) in m.column_iter().enumerate() {
            let v: Vec<C64> = col.iter().copied().collect();
            out.set_column(j, &nalgebra::DVector::from_vec(op(&v)?));
        }
        Ok(out)
    }

    /// Banded LU of `γ⁰p₀ − X − m` in the interleaved ordering `2i + slot`.
    pub fn factor_propagator(&self, p0: f64, m: f64) -> Result<InterleavedLu> {
        let n = self.grid.n;
        let h = self.grid.h();
        let (g0, g1, g2) = (self.rep.gamma[0], self.rep.gamma[1], self.rep.gamma[2]);
        let mut lu = BandedLu::<C64>::zeros(2 * n, 5, 5);
        for i in 0..n {
            for a in 0..2 {
                for b in 0..2 {
                    let row = 2 * i + a;
                    let diag = g0[(a, b)] * p0 - g2[(a, b)] * self.kinetic[i]
                        - if a == b { C64::from(m) } else { C64::new(0.0, 0.0) };
                    lu.set(row, 2 * i + b, lu.get(row, 2 * i + b) + diag);
                    let c1 = g1[(a, b)] * (-I);
                    for (k, &c) in stencil::FIRST.iter().enumerate() {
                        if c == 0.0 {
                            continue;
                        }
                        let j = i as isize + k as isize - 2;
                        if j < 0 || j as usize >= n {
                            continue;
                        }
                        let col = 2 * j as usize + b;
                        lu.set(row, col, lu.get(row, col) - c1 * (c / h));
                    }
                }
            }
        }
        let min_pivot = lu.factor(false);
        if min_pivot == 0.0 || !min_pivot.is_finite() {
            return Err(Error::Discretization(format!(
                "grid Dirac operator is singular at p0 = {p0}"
            )));
        }
        Ok(InterleavedLu { lu, n })
    }
}

#[derive(Debug, Clone)]
pub struct InterleavedLu {
    lu: BandedLu<C64>,
    n: usize,
}

impl InterleavedLu {
    /// Solves for one slot-major right-hand side.
    pub fn solve(&self, rhs: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut b: Vec<C64> = (0..2 * n).map(|k| rhs[(k % 2) * n + k / 2]).collect();
        self.lu.solve_in_place(&mut b);
        let mut out = vec![C64::new(0.0, 0.0); 2 * n];
        for (k, v) in b.into_iter().enumerate() {
            out[(k % 2) * n + k / 2] = v;
        }
        out
    }
}
