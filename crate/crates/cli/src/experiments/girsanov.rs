//! Reweighting identities: the interacting law is absolutely continuous
//! with respect to the Brownian ensemble with density exp(rho_n), so
//! E[exp(rho_n)] = 1 and E[exp(rho_n) phi(B)] = E[phi(X)] for bounded
//! functionals phi, including genuinely level-2 ones.

use std::sync::Arc;

use roughchaos_core::lift::lift_k_layer;
use roughchaos_core::particle::{simulate_brownian_ensemble, simulate_ips, ParticleEnsemble};
use roughchaos_core::rates::girsanov_log_density_rho_n;
use roughchaos_core::rng::child_seed;
use roughchaos_core::Result;

use crate::config::ExperimentConfig;
use crate::report::{num, ReportBuilder};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn run(cfg: &ExperimentConfig, report: &mut ReportBuilder) -> Result<()> {
    let d: usize = cfg.get_or("d", 1)?;
    let n: usize = cfg.get_or("n", 2)?;
    let horizon: f64 = cfg.get_or("T", 1.0)?;
    let steps: usize = cfg.get_or("m", 256)?;
    let target: usize = cfg.get_or("target_steps", 64)?;
    let samples: usize = cfg.get_or("samples", 10_000)?;
    let b = Arc::new(cfg.interaction(d)?);
    let law = cfg.initial_law(d)?;
    b.validate_derivatives(child_seed(cfg.seed, 1), 100, 1e-6)?;

    let endpoint_phi = |ens: &ParticleEnsemble| -> f64 {
        let s: f64 = (0..ens.len()).map(|i| ens.path(i).endpoint()[0]).sum();
        s.tanh()
    };
    let area_phi = |ens: &ParticleEnsemble| -> f64 {
        let layers = [ens.path(0).values(), ens.path(1 % ens.len()).values()];
        let lift = lift_k_layer(d, &ens.shared_times(), &layers, target).unwrap();
        let (_, a) = lift.chen_increment(0, target).unwrap();
        let kd = 2 * d;
        let mut levy = 0.0;
        for c in 0..d {
            levy += 0.5 * (a[c * kd + d + c] - a[(d + c) * kd + c]);
        }
        levy.tanh()
    };
    let midpath_phi = |ens: &ParticleEnsemble| -> f64 {
        let mid = ens.steps() / 2;
        (0..ens.len())
            .map(|i| ens.path(i).point(mid)[0])
            .sum::<f64>()
            .sin()
    };

    let mut weights = Vec::with_capacity(samples);
    let mut b_side = vec![Vec::with_capacity(samples); 3];
    for s in 0..samples as u64 {
        let ens = simulate_brownian_ensemble(
            &law,
            n,
            d,
            horizon,
            steps,
            child_seed(child_seed(cfg.seed, 2), s),
        )?;
        let w = girsanov_log_density_rho_n(&ens, &b, target)?.exp();
        weights.push(w);
        b_side[0].push(w * endpoint_phi(&ens));
        b_side[1].push(w * area_phi(&ens));
        b_side[2].push(w * midpath_phi(&ens));
    }
    let mut x_side = vec![Vec::with_capacity(samples); 3];
    for s in 0..samples as u64 {
        let ens = simulate_ips(
            &b,
            &law,
            n,
            horizon,
            steps,
            child_seed(child_seed(cfg.seed, 3), s),
        )?;
        x_side[0].push(endpoint_phi(&ens));
        x_side[1].push(area_phi(&ens));
        x_side[2].push(midpath_phi(&ens));
    }

    let (norm_mean, norm_se) = mean_se(&weights);
    report.insert("normalization_mean", num(norm_mean));
    report.insert("normalization_se", num(norm_se));
    report.criterion(
        "girsanov-normalization",
        (norm_mean - 1.0).abs() < 3.0 * norm_se,
        format!("E[exp(rho_n)] = {norm_mean:.5} +- {norm_se:.5}"),
    );

    let names = ["endpoint-tanh", "cross-area-tanh", "midpath-sin"];
    let mut rows = Vec::new();
    for f in 0..3 {
        let (mb, sb) = mean_se(&b_side[f]);
        let (mx, sx) = mean_se(&x_side[f]);
        let gap = (mb - mx).abs();
        let sigma = (sb * sb + sx * sx).sqrt();
        rows.push(vec![f as f64, mb, mx, gap, sigma]);
        report.criterion(
            &format!("girsanov-functional-{}", names[f]),
            gap < 3.0 * sigma,
            format!("reweighted {mb:.5} vs direct {mx:.5} (3 sigma {:.5})", 3.0 * sigma),
        );
    }
    report.table(
        "girsanov_functionals",
        &["functional", "reweighted", "direct", "gap", "sigma"],
        &rows,
    )?;
    Ok(())
}
