use std::fs;
use std::path::{Path, PathBuf};

use rfw_core::clifford::{make_rep, GammaRep, Variant};
use rfw_core::field::{FieldProfile, FieldSlice, TabulatedW};
use rfw_core::spectral::GridConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// `uniform`, `exponential` or `tabulated`.
    pub kind: String,
    pub b: f64,
    pub alpha: Option<f64>,
    /// CSV with header `x,W` for the tabulated kind.
    pub path: Option<PathBuf>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            kind: "uniform".into(),
            b: 1.0,
            alpha: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub points: usize,
    pub padding: f64,
    pub decay: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridConfig::default();
        GridSection {
            points: g.points,
            padding: g.padding,
            decay: g.decay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Eigenvalue and pairing checks.
    pub eig: f64,
    /// Eigen relation, main claim, exact-FW energies and block-diagonality.
    pub residual: f64,
    /// Intertwining relation, which carries the first-derivative stencil error.
    pub intertwining: f64,
    /// Diagonal propagator blocks.
    pub propagator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig: 1e-6,
            residual: 1e-6,
            intertwining: 1e-5,
            propagator: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub profile: ProfileConfig,
    pub charge: f64,
    pub mass: f64,
    pub p_y: f64,
    /// Off-shell energy for the propagator check.
    pub p0: f64,
    pub grid: GridSection,
    pub n_max: usize,
    /// `first` or `second`.
    pub representation: String,
    pub series_masses: Vec<f64>,
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: ProfileConfig::default(),
            charge: 1.0,
            mass: 1.0,
            p_y: 0.0,
            p0: 0.3,
            grid: GridSection::default(),
            n_max: 8,
            representation: "first".into(),
            series_masses: vec![4.0, 8.0, 16.0],
            tolerances: Tolerances::default(),
            output: None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eb: Option<f64>,
    pub mass: Option<f64>,
    pub p_y: Option<f64>,
    pub levels: Option<usize>,
    pub grid_n: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", p.display()))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(eb) = o.eb {
            // the field strength absorbs the product; the charge stays fixed
            self.profile.b = eb / self.charge;
        }
        if let Some(m) = o.mass {
            self.mass = m;
        }
        if let Some(p) = o.p_y {
            self.p_y = p;
        }
        if let Some(n) = o.levels {
            self.n_max = n;
        }
        if let Some(n) = o.grid_n {
            self.grid.points = n;
        }
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let t = &self.tolerances;
        if [t.eig, t.residual, t.intertwining, t.propagator].iter().any(|v| !(*v > 0.0)) {
            return Err("all tolerances must be positive".into());
        }
        if self.n_max < 1 {
            return Err("n_max must be at least 1".into());
        }
        if self.grid.points < 64 {
            return Err(format!("grid needs at least 64 points, got {}", self.grid.points));
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(format!("mass must be positive, got {}", self.mass));
        }
        if self.charge == 0.0 || !self.charge.is_finite() {
            return Err("charge must be nonzero".into());
        }
        if self.series_masses.len() < 2 || self.series_masses.iter().any(|m| !(*m > 0.0)) {
            return Err("series_masses needs at least two positive values".into());
        }
        self.variant()?;
        Ok(())
    }

    pub fn variant(&self) -> Result<Variant, String> {
        self.representation.parse::<Variant>().map_err(|e| e.to_string())
    }

    pub fn rep(&self) -> Result<GammaRep, String> {
        Ok(make_rep(self.variant()?))
    }

    pub fn profile(&self) -> Result<FieldProfile, String> {
        let p = &self.profile;
        match p.kind.as_str() {
            "uniform" => Ok(FieldProfile::uniform(p.b)),
            "exponential" => {
                let alpha = p.alpha.ok_or("exponential profile needs alpha")?;
                FieldProfile::exponential(p.b, alpha).map_err(|e| e.to_string())
            }
            "tabulated" => {
                let path = p.path.as_ref().ok_or("tabulated profile needs a path")?;
                TabulatedW::from_path(path)
                    .map(FieldProfile::Tabulated)
                    .map_err(|e| format!("{}: {e}", path.display()))
            }
            other => Err(format!("unknown profile kind '{other}'")),
        }
    }

    pub fn slice(&self) -> Result<FieldSlice, String> {
        Ok(FieldSlice::new(self.profile()?, self.charge, self.p_y))
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig {
            points: self.grid.points,
            padding: self.grid.padding,
            decay: self.grid.decay,
            range: None,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("rfw-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn flags_win() {
        let mut c: RunConfig = serde_json::from_str(r#"{"mass": 3.0, "n_max": 4}"#).unwrap();
        c.apply(&Overrides {
            mass: Some(2.0),
            eb: Some(0.5),
            ..Overrides::default()
        });
        assert_eq!(c.mass, 2.0);
        assert_eq!(c.n_max, 4);
        assert_eq!(c.profile.b, 0.5);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"{"n_max": 0}"#,
            r#"{"grid": {"points": 32}}"#,
            r#"{"tolerances": {"eig": 0}}"#,
            r#"{"representation": "third"}"#,
        ];
        for text in bad {
            let c: RunConfig = serde_json::from_str(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"unknown": 1}"#).is_err());
    }
}
