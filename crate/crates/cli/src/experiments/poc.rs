//! Propagation-of-chaos experiment: lifted k-tuples of interacting
//! particles against i.i.d. copies of the limiting diffusion, compared by
//! exact W1 on lift statistics (and on path space at the smallest n).

use std::sync::Arc;

use roughchaos_core::lift::lift_k_layer;
use roughchaos_core::measures::EmpiricalMeasure;
use roughchaos_core::particle::simulate_ips;
use roughchaos_core::rng::{child_seed, stream_rng};
use roughchaos_core::transport::{wasserstein1_rough, GroundMetric};
use roughchaos_core::Result;

use super::{
    distinct_tuple, lift_statistics, mean_field_reference, monotone_up_to_bands,
    w1_with_bootstrap,
};
use crate::config::ExperimentConfig;
use crate::report::{num, ReportBuilder};

pub fn run(cfg: &ExperimentConfig, report: &mut ReportBuilder) -> Result<()> {
    let d: usize = cfg.get_or("d", 1)?;
    let k: usize = cfg.get_or("k", 2)?;
    let horizon: f64 = cfg.get_or("T", 1.0)?;
    let steps: usize = cfg.get_or("m", 256)?;
    let target: usize = cfg.get_or("target_steps", 64)?;
    let tuples: usize = cfg.get_or("tuples", 1000)?;
    let boot_reps: usize = cfg.get_or("bootstrap", 16)?;
    let boot_atoms: usize = cfg.get_or("bootstrap_atoms", 200)?;
    let pathspace_atoms: usize = cfg.get_or("pathspace_atoms", 48)?;
    let n_list = cfg.get_list("n_list")?;
    let alpha = cfg.alpha()?;
    let b = cfg.interaction(d)?;
    let law = cfg.initial_law(d)?;
    b.validate_derivatives(child_seed(cfg.seed, 1), 100, 1e-6)?;

    let reference = mean_field_reference(cfg, &b, &law, k, tuples, steps, target)?;
    super::persist_fixed_point(cfg, report, &reference)?;
    report.insert("mkv_atoms", num(reference.fixed_point.len() as f64));
    report.insert(
        "mkv_trace",
        serde_json::Value::Array(reference.trace.iter().map(|t| num(*t)).collect()),
    );
    let ref_cloud: Vec<Vec<f64>> = reference
        .samples
        .joint_lifts
        .iter()
        .map(|l| lift_statistics(l, k, d))
        .collect();

    let mut rows = Vec::new();
    let mut plot = Vec::new();
    let mut distances = Vec::new();
    let mut sigmas = Vec::new();
    let mut pathspace_value = f64::NAN;
    for (ni, &n) in n_list.iter().enumerate() {
        let ens = simulate_ips(&b, &law, n, horizon, steps, child_seed(cfg.seed, 16 + ni as u64))?;
        let mut rng = stream_rng(cfg.seed, 48 + ni as u64);
        let lifts: Vec<Arc<roughchaos_core::GridRoughPath>> = (0..tuples)
            .map(|_| {
                let idx = distinct_tuple(&mut rng, n, k);
                let layers: Vec<&[f64]> = idx.iter().map(|&i| ens.path(i).values()).collect();
                lift_k_layer(d, &ens.shared_times(), &layers, target).map(Arc::new)
            })
            .collect::<Result<_>>()?;
        let cloud: Vec<Vec<f64>> = lifts.iter().map(|l| lift_statistics(l, k, d)).collect();
        let (w1, sigma) = w1_with_bootstrap(
            &cloud,
            &ref_cloud,
            boot_atoms,
            boot_reps,
            child_seed(cfg.seed, 96 + ni as u64),
        )?;
        if ni == 0 && pathspace_atoms > 0 {
            // exact path-space W1 at the smallest n
            let take = pathspace_atoms.min(tuples);
            let mu = EmpiricalMeasure::uniform(lifts[..take].to_vec())?;
            let nu = EmpiricalMeasure::uniform(
                reference.samples.joint_lifts[..take].to_vec(),
            )?;
            let ground = match cfg.raw.get("pathspace_ground").map(String::as_str) {
                None | Some("homogeneous") => GroundMetric::HomogeneousRough { alpha },
                Some("hoelder") => GroundMetric::HoelderPath { beta: cfg.beta()? },
                Some(other) => {
                    return Err(roughchaos_core::Error::Config(format!(
                        "unknown pathspace ground `{other}`"
                    )))
                }
            };
            let (w, _) = wasserstein1_rough(&mu, &nu, &ground)?;
            pathspace_value = w;
        }
        rows.push(vec![n as f64, w1, sigma]);
        plot.push((n as f64, w1, w1 - 2.0 * sigma, w1 + 2.0 * sigma));
        distances.push(w1);
        sigmas.push(sigma);
    }
    report.table("poc_distances", &["n", "w1", "boot_sigma"], &rows)?;
    report.plot("poc_plot", &plot)?;
    report.insert(
        "distances",
        serde_json::Value::Array(distances.iter().map(|d| num(*d)).collect()),
    );
    report.insert("pathspace_w1_smallest_n", num(pathspace_value));

    let monotone = monotone_up_to_bands(&distances, &sigmas);
    report.criterion(
        "poc-distance-decrease",
        monotone,
        format!("W1 over n {distances:.4?}, bootstrap sigmas {sigmas:.4?}"),
    );
    if pathspace_atoms > 0 {
        report.criterion(
            "poc-pathspace-finite",
            pathspace_value.is_finite() && pathspace_value >= 0.0,
            format!("exact path-space W1 at n = {}: {pathspace_value:.4}", n_list[0]),
        );
    }
    // the cross-area second moment of the reference tuples: for zero
    // interaction this is the Brownian value T^2/4
    if k == 2 {
        let areas: Vec<f64> = ref_cloud.iter().map(|s| s[2 * k]).collect();
        let var = areas.iter().map(|a| a * a).sum::<f64>() / areas.len() as f64;
        report.insert("reference_cross_area_second_moment", num(var));
        if cfg.raw.get("b").map(String::as_str).unwrap_or("zero") == "zero" {
            let expect = horizon * horizon / 4.0 * d as f64;
            let rel = (var - expect).abs() / expect;
            report.criterion(
                "poc-cross-area-variance",
                rel < 0.05 + 3.0 / (areas.len() as f64).sqrt(),
                format!("variance {var:.4} vs {expect:.4}"),
            );
        }
    }
    Ok(())
}
