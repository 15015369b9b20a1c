//! Banded matrices: symmetric eigenpairs by Sturm-count bisection plus
//! inverse iteration, and a general banded LU with partial pivoting.

use nalgebra::ComplexField;

/// Real symmetric band matrix; `bands[d][i] = A[i][i+d]` for `d = 0..=b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBanded {
    n: usize,
    bands: Vec<Vec<f64>>,
}

impl SymBanded {
    pub fn new(n: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth)
            .map(|d| vec![0.0; n.saturating_sub(d)])
            .collect();
        SymBanded { n, bands }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let d = j - i;
        if d > self.bandwidth() {
            0.0
        } else {
            self.bands[d][i]
        }
    }

    /// Sets `A[i][j]` and `A[j][i]`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let d = j - i;
        assert!(d <= self.bandwidth(), "entry ({i},{j}) outside band");
        self.bands[d][i] = value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.bands[0].iter().zip(x).map(|(a, v)| a * v).collect();
        for (d, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                y[i] += a * x[i + d];
                y[i + d] += a * x[i];
            }
        }
        y
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let b = self.bandwidth();
            let start = i.saturating_sub(b);
            let end = (i + b).min(self.n - 1);
            let radius: f64 = (start..=end)
                .filter(|&j| j != i)
                .map(|j| self.get(i, j).abs())
                .sum();
            lo = lo.min(self.bands[0][i] - radius);
            hi = hi.max(self.bands[0][i] + radius);
        }
        (lo, hi)
    }

    fn scale(&self) -> f64 {
        self.bands
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `lambda`, from the inertia of
    /// the LDLᵀ factorization of `A − λI`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let n = self.n;
        let b = self.bandwidth();
        let pivmin = f64::EPSILON * self.scale();
        // l[i*b + (j - (i-b))] holds L[i][j] for j in i-b..i
        let mut l = vec![0.0; n * b.max(1)];
        let mut d = vec![0.0; n];
        let mut negatives = 0;
        for i in 0..n {
            let start = i.saturating_sub(b);
            for j in start..i {
                let mut s = self.get(i, j);
                for k in start.max(j.saturating_sub(b))..j {
                    s -= l_at(&l, b, i, k) * l_at(&l, b, j, k) * d[k];
                }
                let idx = i * b + (j + b - i);
                l[idx] = s / d[j];
            }
            let mut di = self.bands[0][i] - lambda;
            for k in start..i {
                let lik = l_at(&l, b, i, k);
                di -= lik * lik * d[k];
            }
            if di.abs() < pivmin {
                di = -pivmin;
            }
            if di < 0.0 {
                negatives += 1;
            }
            d[i] = di;
        }
        negatives
    }

    /// The `count` smallest eigenpairs, ascending. Eigenvectors have unit
    /// Euclidean norm; their sign is left as produced.
    pub fn lowest_eigenpairs(&self, count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let count = count.min(self.n);
        let (glo, ghi) = self.gershgorin();
        let tiny = f64::EPSILON * self.scale();
        let mut values = Vec::with_capacity(count);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
        let mut left_start = glo - tiny;
        for j in 0..count {
            let (mut left, mut right) = (left_start, ghi + tiny);
            for _ in 0..256 {
                let mid = 0.5 * (left + right);
                if mid <= left || mid >= right {
                    break;
                }
                if self.count_below(mid) > j {
                    right = mid;
                } else {
                    left = mid;
                }
                if right - left <= 2.0 * f64::EPSILON * left.abs().max(right.abs()) + tiny {
                    break;
                }
            }
            let lambda = 0.5 * (left + right);
            left_start = left;
            let v = self.inverse_iteration(lambda, &values, &vectors);
            let av = self.matvec(&v);
            let rayleigh: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
            values.push(rayleigh);
            vectors.push(v);
        }
        (values, vectors)
    }

    fn inverse_iteration(&self, lambda: f64, prev_vals: &[f64], prev_vecs: &[Vec<f64>]) -> Vec<f64> {
        let n = self.n;
        let b = self.bandwidth();
        let mut shifted = BandedLu::<f64>::zeros(n, b, b);
        for i in 0..n {
            for j in i.saturating_sub(b)..=(i + b).min(n - 1) {
                let mut a = self.get(i, j);
                if i == j {
                    a -= lambda;
                }
                shifted.set(i, j, a);
            }
        }
        shifted.factor(true);
        let cluster = 1e-6 * self.scale().sqrt().max(1.0);
        let neighbours: Vec<&Vec<f64>> = prev_vals
            .iter()
            .zip(prev_vecs)
            .filter(|(v, _)| (lambda - **v).abs() < cluster)
            .map(|(_, vec)| vec)
            .collect();
        let mut v = start_vector(n);
        for _ in 0..4 {
            shifted.solve_in_place(&mut v);
            for u in &neighbours {
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u.iter()).for_each(|(x, y)| *x -= dot * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

fn l_at(l: &[f64], b: usize, i: usize, j: usize) -> f64 {
    l[i * b + (j + b - i)]
}

/// Fixed pseudo-random start vector so results do not depend on run order.
fn start_vector(n: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            0.5 + ((state >> 11) as f64 / (1u64 << 53) as f64)
        })
        .collect()
}

/// General band matrix with `kl` sub- and `ku` super-diagonals, factored in
/// place by Gaussian elimination with partial pivoting.
#[derive(Debug, Clone)]
pub struct BandedLu<T: ComplexField<RealField = f64> + Copy> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<T>,
    piv: Vec<usize>,
    factored: bool,
}

impl<T: ComplexField<RealField = f64> + Copy> BandedLu<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedLu {
            n,
            kl,
            ku,
            width,
            ab: vec![T::zero(); n * width],
            piv: vec![0; n],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i},{j}) outside band"
        );
        let k = self.idx(i, j);
        self.ab[k] = value;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.ku + self.kl {
            T::zero()
        } else {
            self.ab[self.idx(i, j)]
        }
    }

    /// Factors the matrix. With `perturb_singular`, exact zero pivots are
    /// replaced by a tiny value, which is what inverse iteration needs.
    /// Returns the smallest pivot modulus encountered.
    pub fn factor(&mut self, perturb_singular: bool) -> f64 {
        let n = self.n;
        let scale = self
            .ab
            .iter()
            .map(|v| v.modulus())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.ku + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).modulus();
            for i in k + 1..=last_row {
                let m = self.get(i, k).modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            self.piv[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.ab.swap(a, b);
                }
            }
            let kk = self.idx(k, k);
            if self.ab[kk].modulus() == 0.0 && perturb_singular {
                self.ab[kk] = T::from_real(f64::EPSILON * scale);
            }
            let pivot = self.ab[kk];
            min_pivot = min_pivot.min(pivot.modulus());
            if pivot.modulus() == 0.0 {
                continue;
            }
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let factor = self.ab[ik] / pivot;
                self.ab[ik] = factor;
                if factor.modulus() == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let (ij, kj) = (self.idx(i, j), self.idx(k, j));
                    let update = factor * self.ab[kj];
                    self.ab[ij] -= update;
                }
            }
        }
        self.factored = true;
        min_pivot
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert!(self.factored, "solve before factor");
        assert_eq!(b.len(), self.n);
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.ab[self.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + self.ku + self.kl).min(n - 1) {
                s -= self.ab[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.ab[self.idx(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;

    fn random_sym(n: usize, b: usize, seed: u64) -> SymBanded {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = SymBanded::new(n, b);
        for i in 0..n {
            for j in i..(i + b + 1).min(n) {
                m.set(i, j, if i == j { 4.0 * next() + i as f64 * 0.1 } else { next() });
            }
        }
        m
    }

    fn dense(m: &SymBanded) -> DMatrix<f64> {
        DMatrix::from_fn(m.dim(), m.dim(), |i, j| m.get(i, j))
    }

    #[test]
    fn sturm_count_matches_dense_spectrum() {
        let m = random_sym(40, 2, 7);
        let eig = nalgebra::SymmetricEigen::new(dense(&m)).eigenvalues;
        for probe in [-3.0, -0.5, 0.0, 1.2, 3.3] {
            let expected = eig.iter().filter(|&&e| e < probe).count();
            assert_eq!(m.count_below(probe), expected);
        }
    }

    #[test]
    fn lowest_eigenpairs_match_dense() {
        let m = random_sym(60, 2, 11);
        let mut eig: Vec<f64> = nalgebra::SymmetricEigen::new(dense(&m))
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (vals, vecs) = m.lowest_eigenpairs(6);
        for (j, (v, vec)) in vals.iter().zip(&vecs).enumerate() {
            assert!((v - eig[j]).abs() < 1e-11, "{v} vs {}", eig[j]);
            let av = m.matvec(vec);
            let res: f64 = av
                .iter()
                .zip(vec)
                .map(|(a, x)| (a - v * x).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-10);
        }
        for i in 0..vecs.len() {
            for j in 0..i {
                let d: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                assert!(d.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn banded_lu_real_and_complex() {
        let n = 30;
        let (kl, ku) = (3, 2);
        let mut real = BandedLu::<f64>::zeros(n, kl, ku);
        let mut cplx = BandedLu::<Complex64>::zeros(n, kl, ku);
        let mut dense_r = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // small diagonal forces pivoting
                let v = if i == j { 0.01 * (i as f64 - 10.0) } else { 1.0 + ((i * 7 + j * 3) % 5) as f64 };
                real.set(i, j, v);
                cplx.set(i, j, Complex64::new(v, 0.3 * v));
                dense_r[(i, j)] = v;
            }
        }
        let dense_c = dense_r.map(|v| Complex64::new(v, 0.3 * v));
        real.factor(false);
        cplx.factor(false);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = rhs.clone();
        real.solve_in_place(&mut x);
        let r = &dense_r * DVector::from_vec(x) - DVector::from_vec(rhs.clone());
        assert!(r.norm() < 1e-10);
        let mut xc: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, -v)).collect();
        let bc = DVector::from_vec(xc.clone());
        cplx.solve_in_place(&mut xc);
        let rc = &dense_c * DVector::from_vec(xc) - bc;
        assert!(rc.norm() < 1e-10);
    }
}
