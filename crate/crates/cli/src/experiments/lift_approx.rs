//! Piecewise-linear approximation error of the Brownian lift: mean
//! homogeneous distance and the exponential moment across resolutions.

use roughchaos_core::lift::approximation_error_decay;
use roughchaos_core::Result;

use crate::config::ExperimentConfig;
use crate::report::{num, ReportBuilder};

pub fn run(cfg: &ExperimentConfig, report: &mut ReportBuilder) -> Result<()> {
    let d: usize = cfg.get_or("d", 2)?;
    let horizon: f64 = cfg.get_or("T", 1.0)?;
    let samples: usize = cfg.get_or("samples", 1000)?;
    let c_exp: f64 = cfg.get_or("c_exp", 0.1)?;
    let eta: f64 = cfg.get_or("eta", 0.05)?;
    let refine: usize = cfg.get_or("r", 8)?;
    let m_list = cfg.get_list("m_list")?;
    let alpha = cfg.alpha()?;

    let rows = approximation_error_decay(
        d, horizon, alpha, &m_list, samples, c_exp, eta, refine, cfg.seed,
    )?;
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.m as f64, r.mean_distance, r.std_distance, r.exp_moment])
        .collect();
    report.table(
        "lift_approx",
        &["m", "mean_distance", "std_distance", "exp_moment"],
        &table,
    )?;
    report.plot(
        "lift_approx_plot",
        &rows
            .iter()
            .map(|r| {
                let se = r.std_distance / (samples as f64).sqrt();
                (
                    r.m as f64,
                    r.mean_distance,
                    r.mean_distance - 2.0 * se,
                    r.mean_distance + 2.0 * se,
                )
            })
            .collect::<Vec<_>>(),
    )?;

    let means: Vec<f64> = rows.iter().map(|r| r.mean_distance).collect();
    let ses: Vec<f64> = rows
        .iter()
        .map(|r| r.std_distance / (samples as f64).sqrt())
        .collect();
    let decreasing = means
        .windows(2)
        .zip(ses.windows(2))
        .all(|(m, s)| m[1] < m[0] + 2.0 * (s[0] + s[1]));
    report.criterion(
        "lift-approx-decay",
        decreasing,
        format!("mean distances {means:.4?}"),
    );

    let moments: Vec<f64> = rows.iter().map(|r| r.exp_moment).collect();
    let bounded = moments.iter().all(|e| e.is_finite() && *e < 10.0);
    report.criterion(
        "lift-approx-exp-moment-bounded",
        bounded,
        format!("exp moments {moments:.4?}"),
    );

    // decay-order fit of log(mean) against log(m)
    if means.iter().all(|m| *m > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
        let ys: Vec<f64> = means.iter().map(|m| m.ln()).collect();
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        report.insert("decay_order", num(-slope));
    }
    Ok(())
}
