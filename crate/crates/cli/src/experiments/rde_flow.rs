//! Flow view of the driven equations: one equation per distinct k-tuple of
//! particles, terminal laws compared against the mean-field-driven flow.

use roughchaos_core::lift::lift_k_layer;
use roughchaos_core::particle::simulate_ips;
use roughchaos_core::rng::{child_seed, stream_rng};
use roughchaos_core::{Error, Result};

use super::klayer_rde::{field_from_config, linear_closed_form, terminal_value};
use super::{distinct_tuple, mean_field_reference, monotone_up_to_bands, w1_with_bootstrap};
use crate::config::ExperimentConfig;
use crate::report::{num, ReportBuilder};

pub fn run(cfg: &ExperimentConfig, report: &mut ReportBuilder) -> Result<()> {
    let d: usize = cfg.get_or("d", 1)?;
    if d != 1 {
        return Err(Error::Config(
            "the shipped layered coefficients take d = 1".into(),
        ));
    }
    let k: usize = cfg.get("k")?;
    let horizon: f64 = cfg.get_or("T", 1.0)?;
    let steps: usize = cfg.get_or("m", 256)?;
    let target: usize = cfg.get_or("target_steps", 64)?;
    let tuples: usize = cfg.get_or("tuples", 400)?;
    let boot_reps: usize = cfg.get_or("bootstrap", 16)?;
    let y0: f64 = cfg.get_or("y0", 1.0)?;
    let n_list = cfg.get_list("n_list")?;
    let b = cfg.interaction(d)?;
    let law = cfg.initial_law(d)?;
    let spec = field_from_config(cfg, k)?;

    let reference = mean_field_reference(cfg, &b, &law, k, tuples, steps, target)?;
    let ref_terminals: Vec<Vec<f64>> = reference
        .samples
        .joint_lifts
        .iter()
        .map(|l| terminal_value(&spec, l, y0).map(|v| vec![v]))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut plot = Vec::new();
    let mut distances = Vec::new();
    let mut sigmas = Vec::new();
    let mut closed_form_worst = 0.0_f64;
    for (ni, &n) in n_list.iter().enumerate() {
        if n < k {
            return Err(Error::Config(format!(
                "n = {n} cannot host distinct {k}-tuples"
            )));
        }
        let ens =
            simulate_ips(&b, &law, n, horizon, steps, child_seed(cfg.seed, 700 + ni as u64))?;
        let mut rng = stream_rng(cfg.seed, 740 + ni as u64);
        let mut terminals = Vec::with_capacity(tuples);
        for _ in 0..tuples {
            let idx = distinct_tuple(&mut rng, n, k);
            let layers: Vec<&[f64]> = idx.iter().map(|&i| ens.path(i).values()).collect();
            let lift = lift_k_layer(d, &ens.shared_times(), &layers, target)?;
            let y = terminal_value(&spec, &lift, y0)?;
            if !spec.zero {
                closed_form_worst =
                    closed_form_worst.max((y - linear_closed_form(&spec, &lift, y0)).abs());
            }
            terminals.push(vec![y]);
        }
        let (w1, sigma) = w1_with_bootstrap(
            &terminals,
            &ref_terminals,
            200.min(tuples),
            boot_reps,
            child_seed(cfg.seed, 780 + ni as u64),
        )?;
        rows.push(vec![n as f64, w1, sigma]);
        plot.push((n as f64, w1, w1 - 2.0 * sigma, w1 + 2.0 * sigma));
        distances.push(w1);
        sigmas.push(sigma);
    }
    report.table("rde_flow", &["n", "w1", "boot_sigma"], &rows)?;
    report.plot("rde_flow_plot", &plot)?;
    report.insert(
        "distances",
        serde_json::Value::Array(distances.iter().map(|x| num(*x)).collect()),
    );
    report.criterion(
        "rde-flow-distance-decrease",
        monotone_up_to_bands(&distances, &sigmas),
        format!("terminal-law W1 over n: {distances:.4?}"),
    );
    if !spec.zero {
        let cf_tol: f64 = cfg.get_or("closed_form_tol", 6.0 / target as f64)?;
        report.criterion(
            "rde-flow-closed-form",
            closed_form_worst < cf_tol * y0.abs().max(1.0),
            format!(
                "worst deviation from exp closed form {closed_form_worst:.2e} (gate {cf_tol:.2e})"
            ),
        );
    }
    Ok(())
}
