//! Static magnetic field profiles in the Landau-like gauge `A^μ = (0, 0, W(x))`.
//!
//! The field is `B(x) = W'(x)`. A fermion slice at fixed `p_y` sees the
//! kinetic momentum `P(x) = p_y − e W(x)` and the supersymmetric partner
//! potentials `V_σ(x) = P(x)² − σ e W'(x)`, σ = ±1.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldProfile {
    /// `W = B x`.
    Uniform { b: f64 },
    /// `W = (B/α)(1 − e^{−αx})`, anchored at `W(0) = 0`.
    Exponential { b: f64, alpha: f64 },
    /// Natural cubic spline through `(x, W)` samples.
    Tabulated(TabulatedW),
}

impl FieldProfile {
    pub fn uniform(b: f64) -> Self {
        FieldProfile::Uniform { b }
    }

    pub fn exponential(b: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Configuration(format!(
                "exponential profile needs alpha > 0, got {alpha}"
            )));
        }
        Ok(FieldProfile::Exponential { b, alpha })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FieldProfile::Uniform { .. } => "uniform",
            FieldProfile::Exponential { .. } => "exponential",
            FieldProfile::Tabulated(_) => "tabulated",
        }
    }

    /// Returns `(W(x), W'(x))`.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        match *self {
            FieldProfile::Uniform { b } => Ok((b * x, b)),
            FieldProfile::Exponential { b, alpha } => {
                // -expm1(-αx)/α stays accurate as α → 0
                let w = -b * (-alpha * x).exp_m1() / alpha;
                Ok((w, b * (-alpha * x).exp()))
            }
            FieldProfile::Tabulated(ref t) => t.evaluate(x),
        }
    }

    pub fn field(&self, x: f64) -> Result<f64> {
        self.evaluate(x).map(|(_, wp)| wp)
    }

    /// Allowed x-range; `None` means the whole real line.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            FieldProfile::Tabulated(t) => Some((t.x[0], t.x[t.x.len() - 1])),
            _ => None,
        }
    }

    /// Recommended x-range for a slice centered at `center`, in units of
    /// the local magnetic length.
    pub fn domain_hint(&self, center: f64, charge: f64) -> (f64, f64) {
        if let Some(range) = self.domain() {
            return range;
        }
        let eb = self
            .field(center)
            .map(|b| (charge * b).abs())
            .unwrap_or(1.0)
            .max(f64::MIN_POSITIVE);
        let half = 10.0 / eb.sqrt();
        (center - half, center + half)
    }
}

/// Scalar partner potentials of one `(profile, p_y, e)` slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSlice {
    pub profile: FieldProfile,
    pub charge: f64,
    pub p_y: f64,
}

pub fn susy_partner_potentials(profile: &FieldProfile, p_y: f64, e: f64) -> FieldSlice {
    FieldSlice {
        profile: profile.clone(),
        charge: e,
        p_y,
    }
}

pub(crate) fn check_sigma(sigma: i8) -> Result<()> {
    if sigma == 1 || sigma == -1 {
        Ok(())
    } else {
        Err(Error::Argument(format!("sigma must be +1 or -1, got {sigma}")))
    }
}

impl FieldSlice {
    pub fn new(profile: FieldProfile, charge: f64, p_y: f64) -> Self {
        FieldSlice {
            profile,
            charge,
            p_y,
        }
    }

    /// Kinetic momentum `Π₂ = p_y − e W(x)`.
    pub fn kinetic(&self, x: f64) -> Result<f64> {
        let (w, _) = self.profile.evaluate(x)?;
        Ok(self.p_y - self.charge * w)
    }

    /// `V_σ(x) = (p_y − eW)² − σ e W'`.
    pub fn potential(&self, sigma: i8, x: f64) -> Result<f64> {
        check_sigma(sigma)?;
        let (w, wp) = self.profile.evaluate(x)?;
        let p = self.p_y - self.charge * w;
        Ok(p * p - f64::from(sigma) * self.charge * wp)
    }

    /// e·B(x).
    pub fn eb(&self, x: f64) -> Result<f64> {
        Ok(self.charge * self.profile.field(x)?)
    }

    /// Channel hosting the zero mode, `sign(eB)`.
    pub fn zero_mode_channel(&self, x: f64) -> Result<i8> {
        let eb = self.eb(x)?;
        if eb == 0.0 {
            return Err(Error::Configuration(
                "field vanishes at the slice center; no zero mode channel".into(),
            ));
        }
        Ok(if eb > 0.0 { 1 } else { -1 })
    }

    /// Position where `P(x) = 0`, i.e. the bottom of `P²`.
    pub fn center(&self) -> Result<f64> {
        let e = self.charge;
        match self.profile {
            FieldProfile::Uniform { b } => {
                if e * b == 0.0 {
                    return Err(Error::Configuration("uniform field with eB = 0".into()));
                }
                Ok(self.p_y / (e * b))
            }
            FieldProfile::Exponential { b, alpha } => {
                if e * b == 0.0 {
                    return Err(Error::Configuration("exponential field with eB = 0".into()));
                }
                // W(x) = p_y/e  ⇔  1 − e^{−αx} = α p_y/(eB)
                let r = alpha * self.p_y / (e * b);
                if r >= 1.0 {
                    return Err(Error::Configuration(format!(
                        "p_y = {} exceeds the asymptotic vector potential eB/alpha; \
                         the slice has no confining well",
                        self.p_y
                    )));
                }
                Ok(-(-r).ln_1p() / alpha)
            }
            FieldProfile::Tabulated(ref t) => {
                let mut best = (f64::INFINITY, t.x[0]);
                for (&x, &w) in t.x.iter().zip(&t.w) {
                    let p = (self.p_y - e * w).abs();
                    if p < best.0 {
                        best = (p, x);
                    }
                }
                Ok(best.1)
            }
        }
    }
}

/// Closed-form Landau level `k = (2n+1)|eB| − σ sign(eB) |eB|` for a uniform field.
pub fn analytic_landau_level(profile: &FieldProfile, e: f64, n: usize, sigma: i8) -> Result<f64> {
    check_sigma(sigma)?;
    match *profile {
        FieldProfile::Uniform { b } => {
            let eb = e * b;
            Ok((2 * n + 1) as f64 * eb.abs() - f64::from(sigma) * eb.signum() * eb.abs())
        }
        _ => Err(Error::Unsupported(format!(
            "no analytic Landau spectrum for the {} profile",
            profile.kind()
        ))),
    }
}

/// `W(x)` sampled on a strictly increasing grid, interpolated by a natural cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedW {
    x: Vec<f64>,
    w: Vec<f64>,
    /// Spline second derivatives at the knots.
    m: Vec<f64>,
}

impl TabulatedW {
    pub fn new(x: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if x.len() != w.len() {
            return Err(Error::Configuration("x and W columns differ in length".into()));
        }
        if x.len() < 3 {
            return Err(Error::Configuration(
                "tabulated profile needs at least 3 samples".into(),
            ));
        }
        if x.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Configuration(
                "tabulated x samples must be strictly increasing".into(),
            ));
        }
        if x.iter().chain(&w).any(|v| !v.is_finite()) {
            return Err(Error::Configuration("non-finite sample in table".into()));
        }
        let m = natural_spline_moments(&x, &w);
        Ok(TabulatedW { x, w, m })
    }

    /// Reads a two-column CSV with header `x,W`.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "W" {
            return Err(Error::Configuration(format!(
                "tabulated profile header must be `x,W`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut xs, mut ws) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Configuration(format!("bad number {s:?} in table")))
            };
            xs.push(parse(&rec[0])?);
            ws.push(parse(&rec[1])?);
        }
        TabulatedW::new(xs, ws)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_reader(f)
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.w)
    }

    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        let (lo, hi) = (self.x[0], self.x[self.x.len() - 1]);
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain { x, min: lo, max: hi });
        }
        let i = match self.x.partition_point(|&xi| xi <= x) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - x) / h;
        let b = (x - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.w[i], self.w[i + 1]);
        let w = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let wp = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        Ok((w, wp))
    }
}

fn natural_spline_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior knots.
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[j] = (h0 + h1) / 3.0;
        upper[j] = h1 / 6.0;
        rhs[j] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    for j in 1..k {
        let lower = (x[j + 1] - x[j]) / 6.0;
        let f = lower / diag[j - 1];
        diag[j] -= f * upper[j - 1];
        rhs[j] -= f * rhs[j - 1];
    }
    let mut sol = vec![0.0; k];
    sol[k - 1] = rhs[k - 1] / diag[k - 1];
    for j in (0..k - 1).rev() {
        sol[j] = (rhs[j] - upper[j] * sol[j + 1]) / diag[j];
    }
    m[1..n - 1].copy_from_slice(&sol);
    m
}
