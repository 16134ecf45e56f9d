//! Wall-clock scaling of precompute and apply per scheme.
//!
//! Timings are medians over repetitions; each repetition runs an inner loop
//! long enough to exceed `min_sample_seconds`. Unlike the NMSEE experiments,
//! these numbers are not reproducible bit for bit.

use std::hint::black_box;
use std::time::Instant;

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::CsvRow;
use crate::channel::{build_covariance, ScatteringProfile, UePlacement};
use crate::error::{Error, Result};
use crate::estimators::{
    dft_precompute, iso_basis, iso_precompute, los_precompute, ls_operator, mmse_precompute, EstimatorKind,
    EstimatorOperator,
};
use crate::rng::{complex_gaussian_vector, StreamKey};

const SLOW_CALL_SECONDS: f64 = 1.0;

/// Median seconds per call of `f`.
pub fn time_median<T>(repetitions: usize, min_sample_seconds: f64, mut f: impl FnMut() -> T) -> f64 {
    let start = Instant::now();
    black_box(f());
    let once = start.elapsed().as_secs_f64().max(1e-9);
    let inner = ((min_sample_seconds / once).ceil() as usize).max(1);
    // Calls long enough to time on their own keep the first run as a sample;
    // past a second, three samples are plenty for a median.
    let (first, extra) = if inner == 1 {
        let reps = if once >= SLOW_CALL_SECONDS { repetitions.min(3) } else { repetitions };
        (Some(once), reps.saturating_sub(1))
    } else {
        (None, repetitions)
    };
    let mut samples: Vec<f64> = first
        .into_iter()
        .chain((0..extra).map(|_| {
            let start = Instant::now();
            for _ in 0..inner {
                black_box(f());
            }
            start.elapsed().as_secs_f64() / inner as f64
        }))
        .collect();
    samples.sort_by(f64::total_cmp);
    crate::metrics::quantile_sorted(&samples, 0.5)
}

/// Least-squares slope of `log t` against `log N`.
pub fn loglog_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

const PHASES: [&str; 2] = ["precompute_s", "apply_s"];

pub fn run_bench(config: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    let mut config = config.clone();
    config.experiment = Some(ExperimentKind::Bench);
    config.validate()?;
    let schemes = config.schemes_for(ExperimentKind::Bench);
    let b = &config.bench;
    let params = config.physical.scenario()?;
    let quad = config.physical.quadrature()?;
    let ue = UePlacement::from_horizontal(config.physical.array_height_m, 30.0, 0.3);
    let profile = ScatteringProfile::new(
        ue.elevation,
        config.physical.angular_spread_deg.to_radians(),
        config.physical.pathloss.beta(ue.distance_3d),
    )?;
    let time = |f: &mut dyn FnMut()| time_median(b.repetitions, b.min_sample_seconds, f);

    let mut sizes = b.sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();
    // (scheme, phase) -> [(N, seconds)]
    let mut series: Vec<Vec<Vec<(usize, f64)>>> = vec![vec![Vec::new(); 2]; schemes.len()];
    for &n in &sizes {
        let geom = config.physical.geometry_for_antennas(n)?;
        let cov = build_covariance(&geom, &profile, &quad)?;
        let y = complex_gaussian_vector(
            &mut StreamKey {
                master_seed: config.master_seed,
                experiment: ExperimentKind::Bench.tag(),
                sweep_index: n as u64,
                trial_index: 0,
            }
            .rng(),
            n,
        );
        let cubic_ok = n <= b.max_cubic_precompute_n;
        let dense_ok = n <= b.max_dense_apply_n;
        for (i, &scheme) in schemes.iter().enumerate() {
            let mut op: Option<EstimatorOperator> = None;
            let mut fail: Option<Error> = None;
            let mut record = |phase: usize, t: f64| series[i][phase].push((n, t));
            match scheme {
                EstimatorKind::Mmse => {
                    if !dense_ok {
                        continue;
                    }
                    let r = cov.matrix();
                    if cubic_ok {
                        record(0, time(&mut || match mmse_precompute(&r, &params) {
                            Ok(o) => op = Some(o),
                            Err(e) => fail = Some(e),
                        }));
                    } else {
                        // Apply cost does not depend on the entries.
                        op = Some(EstimatorOperator::from_dense_filter(EstimatorKind::Mmse, r, &params)?);
                    }
                }
                EstimatorKind::Iso => {
                    if !cubic_ok {
                        continue;
                    }
                    let tol = config.estimation.iso_rank_tol;
                    record(0, time(&mut || match iso_basis(&geom, tol) {
                        Ok(basis) => op = Some(iso_precompute(&basis, &params, None)),
                        Err(e) => fail = Some(e),
                    }));
                }
                EstimatorKind::Ls => {
                    record(0, time(&mut || op = Some(ls_operator(n, &params))));
                }
                EstimatorKind::Los => {
                    record(0, time(&mut || {
                        op = Some(los_precompute(&geom, ue.azimuth, ue.elevation, profile.beta(), &params))
                    }));
                }
                EstimatorKind::Dft => {
                    record(0, time(&mut || match dft_precompute(cov.lags(), &params) {
                        Ok(o) => op = Some(o),
                        Err(e) => fail = Some(e),
                    }));
                }
            }
            if let Some(e) = fail {
                return Err(e);
            }
            let op = op.expect("precompute ran at least once");
            let mut apply_err = None;
            let t = time(&mut || {
                if let Err(e) = op.apply(&y) {
                    apply_err = Some(e);
                }
            });
            if let Some(e) = apply_err {
                return Err(e);
            }
            record(1, t);
            log::info!("bench N={n} {scheme} done");
        }
    }

    let mut rows = Vec::new();
    for (i, &scheme) in schemes.iter().enumerate() {
        for (phase, name) in PHASES.iter().enumerate() {
            let pts = &series[i][phase];
            for &(n, t) in pts {
                rows.push(CsvRow {
                    experiment: "bench".into(),
                    scheme: scheme.name().into(),
                    n: Some(n),
                    stat: (*name).into(),
                    value: t,
                    ..Default::default()
                });
            }
            if let Some(slope) = loglog_slope(pts) {
                rows.push(CsvRow {
                    experiment: "bench".into(),
                    scheme: scheme.name().into(),
                    stat: format!("slope_{}", name.trim_end_matches("_s")),
                    value: slope,
                    flags: format!("fit_n={}..{}", pts[0].0, pts[pts.len() - 1].0),
                    ..Default::default()
                });
            }
        }
    }
    Ok(rows)
}
