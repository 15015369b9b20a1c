//! Fourth-order central differences on a uniform grid with homogeneous
//! Dirichlet data outside the sampled points.

use nalgebra::ComplexField;

/// Offsets −2..=2 of `f''` to fourth order, in units of `1/h²`.
pub const SECOND: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
/// Offsets −2..=2 of `f'` to fourth order, in units of `1/h`.
pub const FIRST: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];

fn apply<T: ComplexField<RealField = f64> + Copy>(coef: &[f64; 5], scale: f64, f: &[T]) -> Vec<T> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let mut acc = T::zero();
            for (k, &c) in coef.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let j = i as isize + k as isize - 2;
                if j >= 0 && (j as usize) < n {
                    acc += f[j as usize].scale(c * scale);
                }
            }
            acc
        })
        .collect()
}

pub fn first_derivative<T: ComplexField<RealField = f64> + Copy>(f: &[T], h: f64) -> Vec<T> {
    apply(&FIRST, 1.0 / h, f)
}

pub fn second_derivative<T: ComplexField<RealField = f64> + Copy>(f: &[T], h: f64) -> Vec<T> {
    apply(&SECOND, 1.0 / (h * h), f)
}
