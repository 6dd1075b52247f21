//! Reduced-size versions of the two criteria whose stated sizes do not fit
//! in memory. These supplement the acceptance run; they do not replace it.

use nem_core::algorithms::{amp_phase, hessian_descent, AmpOptions, HdOptions, OnsagerCurvature};
use nem_core::linalg::mean_sd;
use nem_core::model::{GaussianMap, MixtureXi};
use nem_core::theory::{
    alpha_hd, amp_state_evolution, amp_target, gamma_star, hd_final_u, u_rs, DEFAULT_AMP_MARGIN, ODE_DEFAULT_STEP,
};

#[test]
fn hessian_descent_tracks_the_ode_at_d40() {
    let xi = MixtureXi::parse("1,0,0,1").unwrap();
    let ahd = alpha_hd(&xi, ODE_DEFAULT_STEP).unwrap();
    let d = 40;
    let mut means = Vec::new();
    for f in [0.5, 0.9, 1.5] {
        let alpha = f * ahd;
        let n = (alpha * d as f64).round() as usize;
        let theory = hd_final_u(alpha, &xi, ODE_DEFAULT_STEP).unwrap();
        let finals: Vec<f64> = (0..4)
            .map(|s| {
                let map = GaussianMap::sample(&xi, n, d, 50 + s).unwrap();
                hessian_descent(&map, &HdOptions::new(0.02, s)).unwrap().final_u()
            })
            .collect();
        let (mean, _) = mean_sd(&finals);
        assert!((mean - theory).abs() <= 0.05 * xi.value(1.0) / 2.0, "α = {alpha}: {mean} vs {theory}");
        means.push(mean);
    }
    assert!(means[0] <= 0.02, "{means:?}");
    assert!(means[2] > means[0] + 0.02, "{means:?}");
}

#[test]
fn linear_amp_reaches_its_fixed_point_on_average() {
    let xi = MixtureXi::parse("1,1").unwrap();
    let (alpha, d, l) = (0.2, 2000, 60);
    let n = (alpha * d as f64).round() as usize;
    let q = amp_target(alpha, &xi, DEFAULT_AMP_MARGIN).unwrap();
    let gamma = gamma_star(q, alpha, &xi).unwrap();
    let se = amp_state_evolution(gamma, &xi, l);
    let mut radii = Vec::new();
    let mut energies = Vec::new();
    for seed in 0..4 {
        let map = GaussianMap::sample(&xi, n, d, 300 + seed).unwrap();
        let out = amp_phase(&map, &AmpOptions { gamma, l, onsager: OnsagerCurvature::default() }).unwrap();
        for (r, s) in out.trace.records.iter().zip(&se) {
            assert!((r.radius_sq - s.0).abs() <= 5.0 / (d as f64).sqrt(), "seed {seed} step {}: {} vs {}", r.step, r.radius_sq, s.0);
        }
        radii.push(out.radius_sq());
        energies.push(out.final_u());
    }
    let (r, _) = mean_sd(&radii);
    let (u, _) = mean_sd(&energies);
    assert!((r - q).abs() <= 0.02, "mean ‖m‖² {r} vs {q}");
    assert!((u - u_rs(q, alpha, &xi)).abs() <= 0.03 * xi.value(1.0), "u {u}");
}
