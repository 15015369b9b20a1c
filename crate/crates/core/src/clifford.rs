//! Gamma matrices for 2+1 dimensions.
//!
//! Two inequivalent 2x2 representations exist. Both share `γ⁰ = σ₃` and
//! `γ¹ = iσ₁`; they differ in the sign of `γ²`, which flips the sign of the
//! epsilon term in the product identity
//!
//! ```text
//! γ^μ γ^ν = g^{μν} + s · i ε^{μνλ} γ_λ,     ε^{012} = +1
//! ```
//!
//! with `s = -1` for [`Variant::First`] and `s = +1` for [`Variant::Second`].
//! Metric is `diag(+1, -1, -1)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

/// Minkowski metric, signature (+, -, -).
pub const METRIC: [f64; 3] = [1.0, -1.0, -1.0];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn identity() -> Mat2 {
    Mat2::identity()
}

pub fn sigma1() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma2() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma3() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Levi-Civita symbol with ε^{012} = +1.
pub fn epsilon(mu: usize, nu: usize, lambda: usize) -> f64 {
    match (mu, nu, lambda) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    First,
    Second,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "first" | "1" => Ok(Variant::First),
            "second" | "2" => Ok(Variant::Second),
            other => Err(Error::Configuration(format!(
                "unknown gamma representation {other:?}; expected \"first\" or \"second\""
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::First => f.write_str("first"),
            Variant::Second => f.write_str("second"),
        }
    }
}

/// A concrete set of three gamma matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRep {
    /// `None` for hand-built sets that are not one of the two standard variants.
    pub variant: Option<Variant>,
    pub gamma: [Mat2; 3],
    /// Sign `s` of the epsilon term in the product identity.
    pub product_sign: i8,
}

pub fn make_rep(variant: Variant) -> GammaRep {
    let g0 = sigma3();
    let g1 = sigma1() * I;
    match variant {
        Variant::First => GammaRep {
            variant: Some(variant),
            gamma: [g0, g1, sigma2() * I],
            product_sign: -1,
        },
        Variant::Second => GammaRep {
            variant: Some(variant),
            gamma: [g0, g1, sigma2() * (-I)],
            product_sign: 1,
        },
    }
}

impl GammaRep {
    pub fn custom(gamma: [Mat2; 3], product_sign: i8) -> Self {
        GammaRep {
            variant: None,
            gamma,
            product_sign,
        }
    }

    pub fn g0(&self) -> &Mat2 {
        &self.gamma[0]
    }

    /// Covariant component γ_μ = g_{μμ} γ^μ.
    pub fn lower(&self, mu: usize) -> Mat2 {
        self.gamma[mu] * C64::from(METRIC[mu])
    }

    /// Contraction γ·p = γ⁰p⁰ − γ¹p¹ − γ²p² for a contravariant 3-vector.
    pub fn slash(&self, p: [f64; 3]) -> Mat2 {
        (0..3).fold(Mat2::zeros(), |acc, mu| {
            acc + self.gamma[mu] * C64::from(METRIC[mu] * p[mu])
        })
    }

    /// Spatial contraction γ¹p¹ + γ²p² (bold gamma dot bold p).
    pub fn spatial(&self, p1: f64, p2: f64) -> Mat2 {
        self.gamma[1] * C64::from(p1) + self.gamma[2] * C64::from(p2)
    }

    /// Diagonal spin matrix `C = -i γ¹γ²` entering `Π̃² = 𝚷² + e W'(x) C`.
    pub fn spin_term(&self) -> Mat2 {
        self.gamma[1] * self.gamma[2] * (-I)
    }

    /// Scalar channel sigma carried by spinor slot `slot` (0 = upper).
    ///
    /// Slot `s` sees the potential `(p_y − eW)² + C_ss eW'`, which is the
    /// channel `σ = −C_ss` of `V_σ = (p_y − eW)² − σ eW'`.
    pub fn channel_of_slot(&self, slot: usize) -> i8 {
        if self.spin_term()[(slot, slot)].re < 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn slot_of_channel(&self, sigma: i8) -> usize {
        if self.channel_of_slot(0) == sigma {
            0
        } else {
            1
        }
    }
}

/// {γ^μ, γ^ν}.
pub fn anticommutator(rep: &GammaRep, mu: usize, nu: usize) -> Result<Mat2> {
    if mu > 2 || nu > 2 {
        return Err(Error::Argument(format!(
            "gamma index out of range: ({mu}, {nu})"
        )));
    }
    let (a, b) = (&rep.gamma[mu], &rep.gamma[nu]);
    Ok(a * b + b * a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductIdentityReport {
    pub max_residual: f64,
    pub sign: i8,
}

/// Largest entrywise deviation from `{γ^μ, γ^ν} = 2 g^{μν}` over all index pairs.
pub fn clifford_residual(rep: &GammaRep) -> f64 {
    let mut worst = 0.0_f64;
    for mu in 0..3 {
        for nu in 0..3 {
            let ac = anticommutator(rep, mu, nu).expect("indices in range");
            let target = if mu == nu {
                identity() * C64::from(2.0 * METRIC[mu])
            } else {
                Mat2::zeros()
            };
            worst = worst.max(max_abs(&(ac - target)));
        }
    }
    worst
}

pub fn check_product_identity(rep: &GammaRep) -> ProductIdentityReport {
    let sign = C64::from(f64::from(rep.product_sign));
    let mut worst = 0.0_f64;
    for mu in 0..3 {
        for nu in 0..3 {
            let lhs = rep.gamma[mu] * rep.gamma[nu];
            let mut rhs = if mu == nu {
                identity() * C64::from(METRIC[mu])
            } else {
                Mat2::zeros()
            };
            for lambda in 0..3 {
                let eps = epsilon(mu, nu, lambda);
                if eps != 0.0 {
                    rhs += rep.lower(lambda) * (sign * I * eps);
                }
            }
            worst = worst.max(max_abs(&(lhs - rhs)));
        }
    }
    ProductIdentityReport {
        max_residual: worst,
        sign: rep.product_sign,
    }
}

pub(crate) fn max_abs(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spin projector Π(n): identity above the lowest level, a rank-one
/// projector onto the zero-mode slot at n = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinProjector {
    pub level: usize,
    pub diag: [f64; 2],
}

impl SpinProjector {
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(
            C64::from(self.diag[0]),
            ZERO,
            ZERO,
            C64::from(self.diag[1]),
        )
    }

    pub fn trace(&self) -> f64 {
        self.diag[0] + self.diag[1]
    }

    fn for_slot(level: usize, zero_mode_slot: usize) -> Self {
        let diag = if level == 0 {
            let mut d = [0.0; 2];
            d[zero_mode_slot] = 1.0;
            d
        } else {
            [1.0, 1.0]
        };
        SpinProjector { level, diag }
    }
}

/// Projector in the first representation, where the upper slot hosts σ = +1.
/// `field_sign` is the sign of eB.
pub fn spin_projector(n: i64, field_sign: f64) -> Result<SpinProjector> {
    spin_projector_for(&make_rep(Variant::First), n, field_sign)
}

/// Projector for an arbitrary representation: the zero mode lives in the
/// channel σ = sign(eB), whose slot depends on the representation.
pub fn spin_projector_for(rep: &GammaRep, n: i64, field_sign: f64) -> Result<SpinProjector> {
    if n < 0 {
        return Err(Error::Argument(format!("negative level {n}")));
    }
    if field_sign == 0.0 || !field_sign.is_finite() {
        return Err(Error::Argument("field sign must be nonzero".into()));
    }
    let sigma = if field_sign > 0.0 { 1 } else { -1 };
    Ok(SpinProjector::for_slot(n as usize, rep.slot_of_channel(sigma)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reps() -> [GammaRep; 2] {
        [make_rep(Variant::First), make_rep(Variant::Second)]
    }

    #[test]
    fn first_variant_matrices() {
        let r = make_rep(Variant::First);
        assert_eq!(r.gamma[0], sigma3());
        assert_eq!(r.gamma[1], sigma1() * I);
        assert_eq!(r.gamma[2], sigma2() * I);
    }

    #[test]
    fn second_variant_differs_only_in_gamma2() {
        let (a, b) = (make_rep(Variant::First), make_rep(Variant::Second));
        assert_eq!(a.gamma[0], b.gamma[0]);
        assert_eq!(a.gamma[1], b.gamma[1]);
        assert_eq!(b.gamma[2], sigma2() * (-I));
    }

    #[test]
    fn unknown_variant_is_config_error() {
        assert!(matches!(
            "third".parse::<Variant>(),
            Err(Error::Configuration(_))
        ));
        assert_eq!("Second".parse::<Variant>().unwrap(), Variant::Second);
    }

    #[test]
    fn anticommutator_examples() {
        for r in reps() {
            assert_eq!(anticommutator(&r, 0, 0).unwrap(), identity() * C64::from(2.0));
            assert_eq!(anticommutator(&r, 1, 2).unwrap(), Mat2::zeros());
            assert_eq!(anticommutator(&r, 1, 1).unwrap(), identity() * C64::from(-2.0));
            assert!(matches!(anticommutator(&r, 3, 0), Err(Error::Argument(_))));
        }
    }

    #[test]
    fn clifford_and_product_identity_exact() {
        for r in reps() {
            assert_eq!(clifford_residual(&r), 0.0);
            let rep = check_product_identity(&r);
            assert_eq!(rep.max_residual, 0.0);
        }
        assert_eq!(check_product_identity(&make_rep(Variant::First)).sign, -1);
        assert_eq!(check_product_identity(&make_rep(Variant::Second)).sign, 1);
    }

    #[test]
    fn wrong_sign_breaks_identity() {
        let mut r = make_rep(Variant::First);
        r.product_sign = 1;
        assert!(check_product_identity(&r).max_residual > 0.5);
    }

    #[test]
    fn hermitian_gamma1_violates_identity() {
        let r = make_rep(Variant::First);
        let bad = GammaRep::custom([r.gamma[0], sigma1(), r.gamma[2]], -1);
        assert!(check_product_identity(&bad).max_residual > 0.5);
        assert!(clifford_residual(&bad) > 0.5);
    }

    #[test]
    fn hermiticity_pattern() {
        for r in reps() {
            assert_eq!(r.gamma[0].adjoint(), r.gamma[0]);
            assert_eq!(r.gamma[1].adjoint(), -r.gamma[1]);
            assert_eq!(r.gamma[2].adjoint(), -r.gamma[2]);
        }
    }

    #[test]
    fn slot_assignment() {
        let (a, b) = (make_rep(Variant::First), make_rep(Variant::Second));
        assert_eq!(a.channel_of_slot(0), 1);
        assert_eq!(a.channel_of_slot(1), -1);
        assert_eq!(b.channel_of_slot(0), -1);
        assert_eq!(b.slot_of_channel(1), 1);
    }

    #[test]
    fn projector_examples() {
        assert_eq!(spin_projector(0, 1.0).unwrap().diag, [1.0, 0.0]);
        assert_eq!(spin_projector(3, 1.0).unwrap().diag, [1.0, 1.0]);
        assert_eq!(spin_projector(0, -1.0).unwrap().diag, [0.0, 1.0]);
        assert!(matches!(spin_projector(-1, 1.0), Err(Error::Argument(_))));
        let second = make_rep(Variant::Second);
        assert_eq!(spin_projector_for(&second, 0, 1.0).unwrap().diag, [0.0, 1.0]);
    }

    #[test]
    fn projector_invariants() {
        for n in 0..4 {
            for s in [1.0, -1.0] {
                let p = spin_projector(n, s).unwrap();
                let m = p.matrix();
                assert_eq!(m * m, m);
                assert_eq!(m.adjoint(), m);
                assert_eq!(p.trace(), if n == 0 { 1.0 } else { 2.0 });
                assert_eq!(m * sigma3(), sigma3() * m);
            }
        }
    }
}
