//! End-to-end acceptance run at N=1024, n_max=8, e=B=m=1.
//! Prints one PASS/FAIL line per criterion and fails if any is red.

use std::process::Command;

use rfw_core::clifford::{check_product_identity, clifford_residual, make_rep, Variant};
use rfw_core::field::{analytic_landau_level, FieldProfile, FieldSlice};
use rfw_core::fw::{
    bd_iteration, field_fw, fw_series_energy, restrict_dirac_hamiltonian, transform_hamiltonian, verify_main_claim,
};
use rfw_core::propagator::{log_slope, pole_exponent, pole_sweep, project_propagator};
use rfw_core::ritus::{spatial_residual, verify_eigen_relation, verify_gp_ep, SliceSolution};
use rfw_core::spectral::{convergence_study, GridConfig};

const N: usize = 1024;
const N_MAX: usize = 8;
const M: f64 = 1.0;
const P0: f64 = 0.3;

struct Tally {
    lines: Vec<String>,
    failed: usize,
}

impl Tally {
    fn record(&mut self, id: usize, name: &str, ok: bool, detail: String) {
        let line = format!("{} {id:>2} {name:<24} {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push(line);
        if !ok {
            self.failed += 1;
        }
    }
}

fn max(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn run_cli(dir: &std::path::Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_rfw"))
        .args(["all", "--out"])
        .arg(dir)
        .output()
        .expect("rfw runs");
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(dir.join("report.json")).expect("report written")
}

#[test]
fn acceptance() {
    let mut t = Tally { lines: Vec::new(), failed: 0 };
    let slice = FieldSlice::new(FieldProfile::uniform(1.0), 1.0, 0.0);
    let cfg = GridConfig { points: N, ..GridConfig::default() };
    let first = make_rep(Variant::First);
    let sol = SliceSolution::solve(&slice, &first, N_MAX, &cfg).unwrap();
    let other = sol.with_rep(&make_rep(Variant::Second));
    let dirac = sol.dirac().unwrap();

    // 1
    let reps = [first.clone(), make_rep(Variant::Second)];
    let clifford = max(reps.iter().map(|r| clifford_residual(r).max(check_product_identity(r).max_residual)));
    t.record(1, "clifford", clifford == 0.0, format!("residual={clifford:e}"));

    // 2
    let mut landau = 0.0_f64;
    for spec in [&sol.plus, &sol.minus] {
        for (n, k) in spec.eigenvalues.iter().enumerate() {
            let exact = analytic_landau_level(&slice.profile, 1.0, n, spec.sigma).unwrap();
            landau = landau.max((k - exact).abs());
        }
    }
    let study = convergence_study(&slice, 1, 1, &[N / 4, N / 2, N], &cfg).unwrap();
    let order = study.last().and_then(|r| r.order).unwrap_or(f64::NAN);
    t.record(
        2,
        "landau_spectrum",
        landau < 1e-6 && (order - 4.0).abs() <= 0.5,
        format!("max_abs={landau:.3e} order={order:.3}"),
    );

    // 3
    let pairing = max((1..=N_MAX).map(|n| {
        let (a, b) = (sol.plus.eigenvalues[n], sol.minus.eigenvalues[n - 1]);
        (a - b).abs() / a.abs().max(b.abs())
    }));
    let k0 = sol.plus.raw_eigenvalues[0].abs();
    t.record(
        3,
        "susy_pairing",
        pairing < 1e-6 && k0 < 1e-8,
        format!("max_rel={pairing:.3e} k0={k0:.3e}"),
    );

    let levels = sol.on_shell_levels(M).unwrap();
    // 4
    let eig = max(levels.iter().map(|l| verify_eigen_relation(l, &dirac).unwrap()));
    t.record(4, "ritus_diagonalization", eig < 1e-6, format!("max={eig:.3e}"));

    // 5
    let gp = max(levels.iter().map(|l| verify_gp_ep(l, &dirac).unwrap()));
    let ann = spatial_residual(&levels[0], &dirac).unwrap();
    t.record(
        5,
        "intertwining",
        gp < 1e-5 && ann < 1e-8,
        format!("max={gp:.3e} zero_mode={ann:.3e}"),
    );

    // 6
    let fw = field_fw(&sol, M, N_MAX).unwrap();
    let unitarity = fw.unitarity_defect().unwrap();
    let h = restrict_dirac_hamiltonian(&fw).unwrap();
    let after = transform_hamiltonian(&fw, &h).unwrap();
    // independent target: ±√(k_n+m²) from the analytic Landau levels
    let mut target: Vec<f64> = fw
        .blocks
        .iter()
        .flat_map(|b| (b.start..b.start + b.len).map(move |i| (i, b.level)))
        .map(|(i, n)| fw.grading[i] * (2.0 * n as f64 + M * M).sqrt())
        .collect();
    target.sort_by(f64::total_cmp);
    let energy = max(after.eigenvalues.iter().zip(&target).map(|(a, b)| (a - b).abs()));
    let ratio = after.odd_part_norm / after.even_part_norm;
    t.record(
        6,
        "exact_fw",
        unitarity < 1e-10 && energy < 1e-6 && ratio < 1e-6,
        format!("unitarity={unitarity:.3e} energy={energy:.3e} odd/even={ratio:.3e}"),
    );

    // 7
    let fw_other = field_fw(&other, M, N_MAX).unwrap();
    let claims: Vec<f64> = levels.iter().map(|l| verify_main_claim(&fw, l).unwrap()).collect();
    let claims_other: Vec<f64> = other
        .on_shell_levels(M)
        .unwrap()
        .iter()
        .map(|l| verify_main_claim(&fw_other, l).unwrap())
        .collect();
    let worst = max(claims.iter().chain(&claims_other).copied());
    let agree = max(claims.iter().zip(&claims_other).map(|(a, b)| (a - b).abs()));
    t.record(
        7,
        "main_claim",
        worst < 1e-6 && agree < 1e-8,
        format!("max={worst:.3e} rep_diff={agree:.3e}"),
    );

    // 8
    let masses = [4.0_f64, 8.0, 16.0];
    let lm: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
    let odd: Vec<f64> = masses
        .iter()
        .map(|&m| {
            let fw = field_fw(&sol, m, N_MAX).unwrap();
            let h = restrict_dirac_hamiltonian(&fw).unwrap();
            bd_iteration(&h, &fw.grading, m, 1).unwrap()[1].odd_part_norm.ln()
        })
        .collect();
    let bd = log_slope(&lm, &odd);
    let k1 = 2.0;
    let err3: Vec<f64> = masses
        .iter()
        .map(|&m| (fw_series_energy(k1, m, 3).unwrap() - (k1 + m * m).sqrt()).abs().ln())
        .collect();
    let series = log_slope(&lm, &err3);
    t.record(
        8,
        "series_consistency",
        (bd + 2.0).abs() <= 0.2 && (series + 5.0).abs() <= 0.3,
        format!("bd_slope={bd:.3} series_slope={series:.3}"),
    );

    // 9
    let proj = project_propagator(&dirac, &sol.levels_at(P0).unwrap(), P0, M).unwrap();
    let diag = max(proj.diagonal_errors.iter().copied());
    let sweep = pole_sweep(&dirac, &sol.level(1, 0.0).unwrap(), M, &[0.1, 0.03, 0.01, 0.003]).unwrap();
    let exponent = pole_exponent(&sweep).unwrap();
    t.record(
        9,
        "propagator",
        diag < 1e-5 && proj.max_cross_norm < 1e-6 && (exponent - 1.0).abs() <= 0.1,
        format!("diag={diag:.3e} cross={:.3e} exponent={exponent:.3}", proj.max_cross_norm),
    );

    // 10
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (run_cli(a.path()), run_cli(b.path()));
    t.record(10, "determinism", ra == rb, format!("report_bytes={}", ra.len()));

    assert_eq!(t.failed, 0, "failing criteria:\n{}", t.lines.join("\n"));
}
