use rayon::prelude::*;
use serde_json::{json, Value};

use rfw_core::clifford::{make_rep, Variant};
use rfw_core::field::{analytic_landau_level, FieldProfile};
use rfw_core::fw::{
    bd_iteration, field_fw, fw_series_energy, restrict_dirac_hamiltonian, transform_hamiltonian,
    verify_main_claim, FwOperator,
};
use rfw_core::propagator::{log_slope, pole_exponent, pole_sweep, project_propagator, write_pole_sweep_csv};
use rfw_core::ritus::{
    orthonormality_defect, spatial_residual, verify_eigen_relation, verify_gp_ep, write_level_matrix_csv,
    write_levels_csv, SliceSolution,
};
use rfw_core::spectral::{
    convergence_study, fmt_sig, write_eigenfunction_csv, write_spectrum_csv, ScalarSpectrum,
};
use rfw_core::Result;

use crate::config::RunConfig;
use crate::report::{csv_bytes, Check, Outcome};

/// Thresholds that do not follow the configurable tolerances.
const ZERO_MODE_TOL: f64 = 1e-8;
const ORTHONORMALITY_TOL: f64 = 1e-8;
const UNITARITY_TOL: f64 = 1e-10;
const COMMUTATOR_TOL: f64 = 1e-9;
const SPECTRUM_INVARIANCE_TOL: f64 = 1e-9;
const REP_AGREEMENT_TOL: f64 = 1e-8;
const MAIN_CLAIM_ZERO_MODE_TOL: f64 = 1e-9;
const POLE_OFFSETS: [f64; 4] = [0.1, 0.03, 0.01, 0.003];

pub struct Context {
    pub cfg: RunConfig,
    pub sol: SliceSolution,
}

impl Context {
    pub fn new(cfg: RunConfig, sol: SliceSolution) -> Self {
        Context { cfg, sol }
    }

    fn other_rep_solution(&self) -> SliceSolution {
        let other = match self.sol.rep.variant {
            Some(Variant::Second) => Variant::First,
            _ => Variant::Second,
        };
        self.sol.with_rep(&make_rep(other))
    }
}

fn grid_json(sol: &SliceSolution) -> Value {
    json!({"x_min": sol.grid.x_min, "x_max": sol.grid.x_max, "points": sol.grid.n, "h": sol.grid.h()})
}

fn zero_mode_spectrum(sol: &SliceSolution) -> Result<(&ScalarSpectrum, &ScalarSpectrum)> {
    let sigma0 = sol.slice.zero_mode_channel(sol.slice.center()?)?;
    Ok(if sigma0 == 1 { (&sol.plus, &sol.minus) } else { (&sol.minus, &sol.plus) })
}

pub fn spectrum(ctx: &Context, out: &mut Outcome) -> Result<()> {
    let sol = &ctx.sol;
    let tol = &ctx.cfg.tolerances;
    let (zero, partner) = zero_mode_spectrum(sol)?;

    if matches!(sol.slice.profile, FieldProfile::Uniform { .. }) {
        let mut worst = 0.0_f64;
        for spec in [&sol.plus, &sol.minus] {
            for (n, k) in spec.eigenvalues.iter().enumerate() {
                let exact = analytic_landau_level(&sol.slice.profile, sol.slice.charge, n, spec.sigma)?;
                worst = worst.max((k - exact).abs());
            }
        }
        out.check(Check::below("landau_max_abs_error", worst, tol.eig));
    }
    let mut pairing = 0.0_f64;
    for n in 1..zero.len() {
        if let Some(b) = partner.eigenvalues.get(n - 1) {
            let a = zero.eigenvalues[n];
            pairing = pairing.max((a - b).abs() / a.abs().max(b.abs()));
        }
    }
    out.check(Check::below("susy_pairing_max_rel", pairing, tol.eig));
    out.check(Check::below("zero_mode_abs", zero.raw_eigenvalues[0].abs(), ZERO_MODE_TOL));

    let n = ctx.cfg.grid.points;
    let points = [n / 4, n / 2, n];
    let study = convergence_study(&sol.slice, zero.sigma, 1, &points, &ctx.cfg.grid_config())?;
    let order = study.last().and_then(|r| r.order).unwrap_or(f64::NAN);
    out.check(Check::within("convergence_order", order, 4.0, 0.5));

    let channels: Vec<Value> = [&sol.plus, &sol.minus]
        .iter()
        .map(|s| json!({"sigma": s.sigma, "k": s.eigenvalues, "raw_k": s.raw_eigenvalues}))
        .collect();
    let rows: Vec<Value> = study
        .iter()
        .map(|r| json!({"points": r.points, "h": r.h, "k": r.k, "error": r.error, "order": r.order}))
        .collect();
    out.sections.insert(
        "spectrum".into(),
        json!({"grid": grid_json(sol), "channels": channels, "convergence": rows}),
    );

    out.files.insert(
        "spectrum.csv".into(),
        csv_bytes(|w| write_spectrum_csv(w, &[&sol.plus, &sol.minus]))?,
    );
    let mut conv = String::from("points,h,k,error,order\n");
    for r in &study {
        let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        conv.push_str(&format!("{},{},{},{},{}\n", r.points, fmt_sig(r.h), fmt_sig(r.k), opt(r.error), opt(r.order)));
    }
    out.files.insert("convergence.csv".into(), conv.into_bytes());
    for spec in [&sol.plus, &sol.minus] {
        for (n, phi) in spec.eigenfunctions.iter().enumerate() {
            let name = format!("phi_sigma{:+}_n{n}.csv", spec.sigma);
            out.files.insert(name, csv_bytes(|w| write_eigenfunction_csv(w, &sol.grid, phi))?);
        }
    }
    Ok(())
}

pub fn verify_ritus(ctx: &Context, out: &mut Outcome) -> Result<()> {
    let sol = &ctx.sol;
    let m = ctx.cfg.mass;
    let tol = &ctx.cfg.tolerances;
    let dirac = sol.dirac()?;
    let levels = sol.on_shell_levels(m)?;
    let residuals: Vec<(f64, f64)> = levels
        .par_iter()
        .map(|l| Ok((verify_eigen_relation(l, &dirac)?, verify_gp_ep(l, &dirac)?)))
        .collect::<Result<_>>()?;
    let mut worst = (0.0_f64, 0.0_f64);
    for (l, &(eig, gp)) in levels.iter().zip(&residuals) {
        worst = (worst.0.max(eig), worst.1.max(gp));
        out.level_field(l.n, "k", json!(l.k));
        out.level_field(l.n, "E_D", json!((l.k + m * m).sqrt()));
        out.level_field(l.n, "residual_eigen", json!(eig));
        out.level_field(l.n, "residual_gpEp", json!(gp));
    }
    out.check(Check::below("eigen_relation_max", worst.0, tol.residual));
    out.check(Check::below("intertwining_max", worst.1, tol.intertwining));
    let annihilation = spatial_residual(&levels[0], &dirac)?;
    out.check(Check::below("zero_mode_annihilation", annihilation, ZERO_MODE_TOL));
    let ortho = orthonormality_defect(&levels)?;
    out.check(Check::below("orthonormality_defect", ortho, ORTHONORMALITY_TOL));
    out.sections.insert(
        "ritus".into(),
        json!({"grid": grid_json(sol), "zero_mode_annihilation": annihilation, "orthonormality_defect": ortho}),
    );

    out.files.insert("levels.csv".into(), csv_bytes(|w| write_levels_csv(w, &levels, m))?);
    for l in &levels {
        out.files.insert(
            format!("ritus_n{}.csv", l.n),
            csv_bytes(|w| write_level_matrix_csv(w, l))?,
        );
    }
    Ok(())
}

fn main_claims(sol: &SliceSolution, fw: &FwOperator, m: f64) -> Result<Vec<f64>> {
    let levels = sol.on_shell_levels(m)?;
    levels.par_iter().map(|l| verify_main_claim(fw, l)).collect()
}

fn block_odd_norm(h: &nalgebra::DMatrix<rfw_core::clifford::C64>, grading: &[f64], start: usize, len: usize) -> f64 {
    let mut s = 0.0;
    for i in start..start + len {
        for j in start..start + len {
            if grading[i] != grading[j] {
                s += h[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

pub fn fw_exact(ctx: &Context, out: &mut Outcome) -> Result<()> {
    let sol = &ctx.sol;
    let m = ctx.cfg.mass;
    let tol = &ctx.cfg.tolerances;
    let n_max = sol.n_max;
    let fw = field_fw(sol, m, n_max)?;
    let unitarity = fw.unitarity_defect()?;
    let commutator = fw.projector_commutator()?;
    let h = restrict_dirac_hamiltonian(&fw)?;
    let before = transform_hamiltonian(&fw.identity_like(), &h)?;
    let after = transform_hamiltonian(&fw, &h)?;
    let target = fw.target_energies();
    let energy_dev = after
        .eigenvalues
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let invariance = after
        .eigenvalues
        .iter()
        .zip(&before.eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut closed: Vec<f64> = fw.closed_form_energies();
    closed.sort_by(f64::total_cmp);
    let closed_dev = after
        .eigenvalues
        .iter()
        .zip(&closed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let odd_ratio = after.odd_part_norm / after.even_part_norm;

    let claims = main_claims(sol, &fw, m)?;
    let other = ctx.other_rep_solution();
    let other_fw = field_fw(&other, m, n_max)?;
    let other_claims = main_claims(&other, &other_fw, m)?;
    let rep_agreement = claims
        .iter()
        .zip(&other_claims)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    for (b, r) in fw.blocks.iter().zip(&claims) {
        out.level_field(b.level, "k", json!(b.k));
        out.level_field(b.level, "E_D", json!((b.k + m * m).sqrt()));
        out.level_field(b.level, "residual_main_claim", json!(r));
        out.level_field(
            b.level,
            "odd_norms",
            json!([
                block_odd_norm(&before.transformed, &fw.grading, b.start, b.len),
                block_odd_norm(&after.transformed, &fw.grading, b.start, b.len)
            ]),
        );
    }

    out.check(Check::below("fw_unitarity_defect", unitarity, UNITARITY_TOL));
    out.check(Check::below("fw_projector_commutator", commutator, COMMUTATOR_TOL));
    out.check(Check::below("fw_energy_max_dev", energy_dev, tol.residual));
    out.check(Check::below("fw_closed_form_max_dev", closed_dev, tol.residual));
    out.check(Check::below("fw_spectrum_invariance", invariance, SPECTRUM_INVARIANCE_TOL));
    out.check(Check::below("fw_odd_over_even", odd_ratio, tol.residual));
    let worst_claim = claims.iter().copied().fold(0.0, f64::max);
    out.check(Check::below("main_claim_max", worst_claim, tol.residual));
    out.check(Check::below("main_claim_zero_mode", claims[0], MAIN_CLAIM_ZERO_MODE_TOL));
    out.check(Check::below("main_claim_rep_agreement", rep_agreement, REP_AGREEMENT_TOL));

    out.sections.insert(
        "fw_exact".into(),
        json!({
            "unitarity_defect": unitarity,
            "projector_commutator": commutator,
            "even_part_norm": after.even_part_norm,
            "odd_part_norm": after.odd_part_norm,
            "eigenvalues": after.eigenvalues,
            "target_energies": target,
            "main_claim_other_rep": other_claims,
        }),
    );
    Ok(())
}

pub fn fw_series(ctx: &Context, out: &mut Outcome) -> Result<()> {
    let sol = &ctx.sol;
    let n_max = sol.n_max;
    let masses = &ctx.cfg.series_masses;
    let tol = &ctx.cfg.tolerances;

    let runs: Vec<Vec<f64>> = masses
        .par_iter()
        .map(|&m| {
            let fw = field_fw(sol, m, n_max)?;
            let h = restrict_dirac_hamiltonian(&fw)?;
            let steps = bd_iteration(&h, &fw.grading, m, 2)?;
            Ok(steps.iter().map(|s| s.odd_part_norm).collect())
        })
        .collect::<Result<_>>()?;
    let lm: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
    let slope = |step: usize| log_slope(&lm, &runs.iter().map(|r| r[step].ln()).collect::<Vec<_>>());
    let (s1, s2) = (slope(1), slope(2));
    out.check(Check::within("bd_one_step_slope", s1, -2.0, 0.2));
    out.check(Check::within("bd_two_step_slope", s2, -4.0, 0.5));

    // one step at very large mass against γ⁰(m + Π̃²/2m)
    let k_top = sol.level(n_max, 0.0)?.k;
    let m_big = 1e3 * k_top.sqrt();
    let fw = field_fw(sol, m_big, n_max)?;
    let h = restrict_dirac_hamiltonian(&fw)?;
    let step = bd_iteration(&h, &fw.grading, m_big, 1)?;
    let t = &step[1].transformed;
    let col_k = &fw.basis.as_ref().expect("field transform").column_k;
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in 0..t.nrows() {
        for j in 0..t.ncols() {
            if fw.grading[i] != fw.grading[j] {
                continue;
            }
            let target = if i == j { fw.grading[i] * (m_big + col_k[i] / (2.0 * m_big)) } else { 0.0 };
            diff += (t[(i, j)] - rfw_core::clifford::C64::from(target)).norm_sqr();
            norm += target * target;
        }
    }
    let taylor = (diff / norm).sqrt();
    out.check(Check::below("bd_large_mass_even_part", taylor, tol.residual));

    let k1 = sol.level(1, 0.0)?.k;
    let energies: Vec<(f64, f64, f64)> = masses
        .iter()
        .map(|&m| Ok((fw_series_energy(k1, m, 2)?, fw_series_energy(k1, m, 3)?, (k1 + m * m).sqrt())))
        .collect::<Result<_>>()?;
    let err3: Vec<f64> = energies.iter().map(|(_, e3, x)| (e3 - x).abs().ln()).collect();
    let s3 = log_slope(&lm, &err3);
    out.check(Check::within("series_order3_slope", s3, -5.0, 0.3));

    let mut bd_csv = String::from("m,step,odd_norm\n");
    for (m, r) in masses.iter().zip(&runs) {
        for (s, v) in r.iter().enumerate() {
            bd_csv.push_str(&format!("{},{s},{}\n", fmt_sig(*m), fmt_sig(*v)));
        }
    }
    out.files.insert("bd_odd_norms.csv".into(), bd_csv.into_bytes());
    let mut e_csv = String::from("m,order,energy,error\n");
    for (m, (e2, e3, x)) in masses.iter().zip(&energies) {
        for (order, e) in [(2, e2), (3, e3)] {
            e_csv.push_str(&format!("{},{order},{},{}\n", fmt_sig(*m), fmt_sig(*e), fmt_sig(e - x)));
        }
    }
    out.files.insert("series_energy.csv".into(), e_csv.into_bytes());

    out.sections.insert(
        "fw_series".into(),
        json!({
            "masses": masses,
            "odd_norms": runs,
            "one_step_slope": s1,
            "two_step_slope": s2,
            "large_mass": m_big,
            "large_mass_even_rel_error": taylor,
            "series_k": k1,
            "order3_error_slope": s3,
        }),
    );
    Ok(())
}

pub fn propagator(ctx: &Context, out: &mut Outcome) -> Result<()> {
    let sol = &ctx.sol;
    let m = ctx.cfg.mass;
    let p0 = ctx.cfg.p0;
    let tol = &ctx.cfg.tolerances;
    let dirac = sol.dirac()?;
    let levels = sol.levels_at(p0)?;
    let proj = project_propagator(&dirac, &levels, p0, m)?;
    let worst = proj.diagonal_errors.iter().copied().fold(0.0, f64::max);
    out.check(Check::below("propagator_diagonal_max", worst, tol.propagator));
    out.check(Check::below("propagator_cross_max", proj.max_cross_norm, tol.residual));

    let other = ctx.other_rep_solution();
    let other_proj = project_propagator(&other.dirac()?, &other.levels_at(p0)?, p0, m)?;
    let sv_devs: Vec<f64> = proj
        .diagonal_blocks
        .iter()
        .zip(&other_proj.diagonal_blocks)
        .map(|(a, b)| {
            let (mut sa, mut sb) = (a.singular_values(), b.singular_values());
            sa.as_mut_slice().sort_by(f64::total_cmp);
            sb.as_mut_slice().sort_by(f64::total_cmp);
            (sa - sb).amax()
        })
        .collect();
    // The zero mode sits in the γ⁰ = +1 slot in one representation and in the
    // γ⁰ = −1 slot in the other, so its single pole moves from +m to −m.
    let sv_dev = sv_devs[1..].iter().copied().fold(0.0, f64::max);
    out.check(Check::below("propagator_rep_singular_values", sv_dev, REP_AGREEMENT_TOL));

    let pole_level = sol.level(1.min(sol.n_max), 0.0)?;
    let sweep = pole_sweep(&dirac, &pole_level, m, &POLE_OFFSETS)?;
    let exponent = pole_exponent(&sweep)?;
    out.check(Check::within("pole_exponent", exponent, 1.0, 0.1));
    out.files.insert("pole_sweep.csv".into(), csv_bytes(|w| write_pole_sweep_csv(w, &sweep))?);

    out.sections.insert(
        "propagator".into(),
        json!({
            "p0": p0,
            "diagonal_errors": proj.diagonal_errors,
            "max_cross_norm": proj.max_cross_norm,
            "rep_singular_value_dev": sv_devs,
            "pole_level": pole_level.n,
            "pole_exponent": exponent,
        }),
    );
    Ok(())
}
