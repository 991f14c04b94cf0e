//! Differential equations driven by k-layer lifts of particle tuples: the
//! empirical terminal law over all multi-indices (with repetition) against
//! the one driven by i.i.d. limit copies.

use rand::Rng;
use roughchaos_core::calculus::{rde_solve, Bounds, VectorField};
use roughchaos_core::lift::lift_k_layer;
use roughchaos_core::particle::simulate_ips;
use roughchaos_core::rng::{child_seed, stream_rng};
use roughchaos_core::{Error, GridRoughPath, Result};

use super::{mean_field_reference, monotone_up_to_bands, w1_with_bootstrap};
use crate::config::ExperimentConfig;
use crate::report::{num, ReportBuilder};

/// Coefficient for `dY = sum_j theta_j Y o dX^{i_j}` (scalar solution,
/// one driving layer per theta).
pub fn layered_linear_field(thetas: &[f64], domain_bound: f64) -> VectorField {
    let k = thetas.len();
    let th = thetas.to_vec();
    let th2 = thetas.to_vec();
    let sup: f64 = thetas.iter().map(|t| t.abs()).fold(0.0, f64::max) * domain_bound;
    VectorField::new(
        1,
        k,
        1,
        Box::new(move |y, out| {
            for (o, t) in out.iter_mut().zip(&th) {
                *o = t * y[0];
            }
        }),
        Box::new(move |_, out| {
            for (o, t) in out.iter_mut().zip(&th2) {
                *o = *t;
            }
        }),
        Bounds {
            sup_value: sup,
            sup_d1: 1.0,
            sup_d2: 0.0,
        },
    )
}

pub struct FieldSpec {
    pub field: Option<VectorField>,
    pub thetas: Vec<f64>,
    pub zero: bool,
}

pub fn field_from_config(cfg: &ExperimentConfig, k: usize) -> Result<FieldSpec> {
    let kind = cfg.raw.get("f").map(String::as_str).unwrap_or("linear");
    match kind {
        "zero" => Ok(FieldSpec {
            field: None,
            thetas: vec![0.0; k],
            zero: true,
        }),
        "linear" => {
            let thetas = match cfg.raw.get("f_thetas") {
                Some(_) => cfg.get_f64_list("f_thetas")?,
                None => vec![0.5; k],
            };
            if thetas.len() != k {
                return Err(Error::Config(format!(
                    "f_thetas must carry k = {k} entries"
                )));
            }
            let bound: f64 = cfg.get_or("f_domain_bound", 16.0)?;
            Ok(FieldSpec {
                field: Some(layered_linear_field(&thetas, bound)),
                thetas,
                zero: false,
            })
        }
        other => Err(Error::Config(format!(
            "unknown coefficient family `{other}` (expected zero | linear)"
        ))),
    }
}

/// Solve the tuple-driven equation and return the terminal value.
pub fn terminal_value(
    spec: &FieldSpec,
    drive: &GridRoughPath,
    y0: f64,
) -> Result<f64> {
    match &spec.field {
        None => Ok(y0),
        Some(field) => {
            let sol = rde_solve(None, field, drive, &[y0])?;
            Ok(sol.endpoint()[0])
        }
    }
}

/// Closed form for the layered linear field on a geometric drive:
/// `y0 exp(sum_j theta_j (X^j_T - X^j_0))`.
pub fn linear_closed_form(spec: &FieldSpec, drive: &GridRoughPath, y0: f64) -> f64 {
    let (x, _) = drive.chen_increment(0, drive.steps()).unwrap();
    let exponent: f64 = spec.thetas.iter().zip(&x).map(|(t, dx)| t * dx).sum();
    y0 * exponent.exp()
}

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
    let tuple_budget: usize = cfg.get_or("tuples", 400)?;
    let boot_reps: usize = cfg.get_or("bootstrap", 16)?;
    let y0: f64 = cfg.get_or("y0", 1.0)?;
    let n_list = cfg.get_list("n_list")?;
    let b = cfg.interaction(d)?;
    let law = cfg.initial_law(d)?;
    let spec = field_from_config(cfg, k)?;

    // reference: k-tuples of i.i.d. limit copies pushed through the flow
    let reference = mean_field_reference(cfg, &b, &law, k, tuple_budget, steps, target)?;
    let ref_terminals: Vec<Vec<f64>> = reference
        .samples
        .joint_lifts
        .iter()
        .map(|l| terminal_value(&spec, l, y0).map(|v| vec![v]))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut distances = Vec::new();
    let mut sigmas = Vec::new();
    let mut closed_form_worst = 0.0_f64;
    let mut symmetrization_worst = 0.0_f64;
    for (ni, &n) in n_list.iter().enumerate() {
        let ens = simulate_ips(&b, &law, n, horizon, steps, child_seed(cfg.seed, 600 + ni as u64))?;
        // multi-indices with repetition: enumerate when n^k fits the budget
        let exact = n.checked_pow(k as u32).map(|t| t <= tuple_budget) == Some(true);
        let mut rng = stream_rng(cfg.seed, 640 + ni as u64);
        let tuples: Vec<Vec<usize>> = if exact {
            let total = n.pow(k as u32);
            (0..total)
                .map(|flat| {
                    let mut idx = vec![0usize; k];
                    let mut rem = flat;
                    for slot in (0..k).rev() {
                        idx[slot] = rem % n;
                        rem /= n;
                    }
                    idx
                })
                .collect()
        } else {
            (0..tuple_budget)
                .map(|_| (0..k).map(|_| rng.random_range(0..n)).collect())
                .collect()
        };
        let mut terminals = Vec::with_capacity(tuples.len());
        for idx in &tuples {
            let layers: Vec<&[f64]> = idx.iter().map(|&i| ens.path(i).values()).collect();
            let lift = lift_k_layer(d, &ens.shared_times(), &layers, target)?;
            let y = terminal_value(&spec, &lift, y0)?;
            if !spec.zero {
                closed_form_worst = closed_form_worst
                    .max((y - linear_closed_form(&spec, &lift, y0)).abs());
            }
            terminals.push(vec![y]);
        }
        // symmetrization invariance spot check for equal coefficients:
        // reversing the tuple order must not change the solution
        if spec.thetas.windows(2).all(|w| w[0] == w[1]) && !spec.zero && n >= k {
            let fwd: Vec<usize> = (0..k).collect();
            let mut rev = fwd.clone();
            rev.reverse();
            let solve_tuple = |perm: &[usize]| -> Result<f64> {
                let layers: Vec<&[f64]> =
                    perm.iter().map(|&i| ens.path(i).values()).collect();
                let lift = lift_k_layer(d, &ens.shared_times(), &layers, target)?;
                terminal_value(&spec, &lift, y0)
            };
            let y_fwd = solve_tuple(&fwd)?;
            let y_rev = solve_tuple(&rev)?;
            symmetrization_worst = symmetrization_worst.max((y_fwd - y_rev).abs());
        }
        let take = tuples.len().min(ref_terminals.len());
        let (w1, sigma) = w1_with_bootstrap(
            &terminals[..take],
            &ref_terminals[..take],
            200.min(take),
            boot_reps,
            child_seed(cfg.seed, 680 + ni as u64),
        )?;
        rows.push(vec![n as f64, w1, sigma, tuples.len() as f64]);
        distances.push(w1);
        sigmas.push(sigma);
    }
    report.table("klayer_rde", &["n", "w1", "boot_sigma", "tuples"], &rows)?;
    report.insert(
        "distances",
        serde_json::Value::Array(distances.iter().map(|x| num(*x)).collect()),
    );

    report.criterion(
        "klayer-rde-distance-decrease",
        monotone_up_to_bands(&distances, &sigmas),
        format!("terminal-law W1 over n: {distances:.4?}"),
    );
    if !spec.zero {
        // Davie-scheme error against the commuting closed form scales like
        // 1/target on Brownian-like drives; the default gate tracks that
        let cf_tol: f64 = cfg.get_or("closed_form_tol", 6.0 / target as f64)?;
        report.criterion(
            "klayer-rde-closed-form",
            closed_form_worst < cf_tol * y0.abs().max(1.0),
            format!(
                "worst deviation from exp closed form {closed_form_worst:.2e} (gate {cf_tol:.2e})"
            ),
        );
        if spec.thetas.windows(2).all(|w| w[0] == w[1]) {
            report.criterion(
                "klayer-rde-symmetrization",
                symmetrization_worst < 1e-12,
                format!("worst order-swap deviation {symmetrization_worst:.2e}"),
            );
        }
    } else {
        // zero coefficients: all solutions stay at y0, distance exactly 0
        report.criterion(
            "klayer-rde-zero-field",
            distances.iter().all(|d| *d == 0.0),
            format!("distances {distances:?}"),
        );
    }
    Ok(())
}
