//! The four NMSEE experiments.
//!
//! Stream layout inside the seed tree of [`crate::rng`]:
//!
//! - fig1, fig2, fig4: drop `d` draws its user placement from
//!   `(seed, experiment, 0, d)`, so every sweep point sees the same users.
//!   Snapshots for sweep point `s` come from `(seed, experiment, s + 1, d)`.
//! - fig3: batch `t` of elevation bin `b` draws its user and snapshots from
//!   `(seed, experiment, b, t)`.
//!
//! Work items run in parallel and are collected in index order, so the output
//! does not depend on the number of worker threads.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::CsvRow;
use crate::channel::{
    build_covariance, draw_ue, pilot_observation, ChannelSampler, QuadratureSpec, ScatteringProfile, ScenarioParams,
    SpatialCovariance, UePlacement, UeSector, UlaGeometry,
};
use crate::covariance::{estimate, noise_subtract, SnapshotBatch};
use crate::error::{Error, Result};
use crate::estimators::{
    dft_precompute, iso_basis, iso_precompute, los_precompute, ls_operator, mmse_precompute,
    mmse_precompute_with_fallback, EstimatorKind, EstimatorOperator, IsoBasis,
};
use crate::metrics::{box_stats, nmsee, ReferenceStatistics};
use crate::rng::StreamKey;

const PERFECT: &str = "perfect";

struct Context {
    kind: ExperimentKind,
    seed: u64,
    params: ScenarioParams,
    quad: QuadratureSpec,
    sector: UeSector,
    height: f64,
    config: ExperimentConfig,
}

impl Context {
    fn new(config: &ExperimentConfig, kind: ExperimentKind) -> Result<Self> {
        let mut config = config.clone();
        config.experiment = Some(kind);
        config.validate()?;
        let p = &config.physical;
        Ok(Context {
            kind,
            seed: config.master_seed,
            params: p.scenario()?,
            quad: p.quadrature()?,
            sector: p.sector(),
            height: p.array_height_m,
            config,
        })
    }

    fn key(&self, sweep: usize, trial: usize) -> StreamKey {
        StreamKey {
            master_seed: self.seed,
            experiment: self.kind.tag(),
            sweep_index: sweep as u64,
            trial_index: trial as u64,
        }
    }

    fn placements(&self) -> Vec<UePlacement> {
        (0..self.config.n_drops)
            .map(|d| draw_ue(&self.sector, self.height, &mut self.key(0, d).rng()))
            .collect()
    }

    fn user(&self, geom: &UlaGeometry, ue: &UePlacement, sigma: f64) -> Result<User> {
        let beta = self.config.physical.pathloss.beta(ue.distance_3d);
        let profile = ScatteringProfile::new(ue.elevation, sigma, beta)?;
        let cov = build_covariance(geom, &profile, &self.quad)?;
        let reference = ReferenceStatistics::new(&cov, &self.params)?;
        Ok(User {
            placement: *ue,
            profile,
            cov,
            reference,
        })
    }

    fn perfect_operator(
        &self,
        scheme: EstimatorKind,
        geom: &UlaGeometry,
        user: &User,
        iso: Option<&IsoBasis>,
    ) -> Result<EstimatorOperator> {
        let p = &self.params;
        match scheme {
            EstimatorKind::Mmse => mmse_precompute(user.reference.r(), p),
            EstimatorKind::Ls => Ok(ls_operator(geom.n_antennas(), p)),
            EstimatorKind::Los => Ok(los_precompute(
                geom,
                user.placement.azimuth,
                user.profile.nominal_elevation(),
                user.profile.beta(),
                p,
            )),
            EstimatorKind::Iso => {
                let basis = iso.ok_or_else(|| Error::invalid("ISO basis missing"))?;
                let scale = self.config.estimation.iso_beta_scale.then(|| user.profile.beta());
                Ok(iso_precompute(basis, p, scale))
            }
            EstimatorKind::Dft => dft_precompute(user.cov.lags(), p),
        }
    }

    /// `max(M)` snapshots, pre-scaled; smaller `M` use prefixes.
    fn snapshots(&self, user: &User, max_m: usize, rng: &mut crate::rng::TrialRng) -> Result<SnapshotBatch> {
        let sampler = ChannelSampler::new(&user.cov, self.config.estimation.clamp_tol)?;
        let obs: Vec<_> = (0..max_m)
            .map(|_| {
                let h = sampler.sample(rng);
                pilot_observation(&h, &self.params, rng)
            })
            .collect();
        SnapshotBatch::from_observations(&obs, self.params.pilot_gain())
    }

    /// Estimator built from `M` snapshots, scored against the true statistics.
    fn estimated_nmsee(&self, scheme: EstimatorKind, batch: &SnapshotBatch, user: &User) -> Result<Scored> {
        let q_hat = estimate(batch, self.config.estimation.covariance_method)?;
        let r_hat = noise_subtract(&q_hat, self.params.snr())?;
        let op = match scheme {
            EstimatorKind::Mmse => mmse_precompute_with_fallback(r_hat.r(), &self.params)?,
            EstimatorKind::Dft => dft_precompute(&r_hat.lags(), &self.params)?,
            other => return Err(Error::invalid(format!("{other} has no estimated-statistics variant"))),
        };
        Scored::new(&op, &user.reference)
    }

    fn wrap<T>(&self, sweep: usize, trial: usize, r: Result<T>) -> Result<T> {
        r.map_err(|e| Error::Trial {
            path: self.key(sweep, trial).path(),
            source: Box::new(e),
        })
    }
}

struct User {
    placement: UePlacement,
    profile: ScatteringProfile,
    cov: SpatialCovariance,
    reference: ReferenceStatistics,
}

#[derive(Debug, Clone, Copy, Default)]
struct Scored {
    value: f64,
    clamped: usize,
    loaded: bool,
}

impl Scored {
    fn new(op: &EstimatorOperator, reference: &ReferenceStatistics) -> Result<Self> {
        let value = nmsee(op, reference)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { row: 0, col: 0 });
        }
        let flags = op.flags();
        Ok(Scored {
            value,
            clamped: flags.clamped_eigenvalues,
            loaded: flags.diagonal_load.is_some(),
        })
    }
}

/// Running mean plus the flag totals that go into the `flags` column.
#[derive(Debug, Clone, Default)]
struct Tally {
    values: Vec<f64>,
    clamped: usize,
    loaded: usize,
}

impl Tally {
    fn push(&mut self, s: Scored) {
        self.values.push(s.value);
        self.clamped += s.clamped;
        self.loaded += s.loaded as usize;
    }

    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    fn flags(&self) -> String {
        let mut parts = Vec::new();
        if self.clamped > 0 {
            parts.push(format!("clamped={}", self.clamped));
        }
        if self.loaded > 0 {
            parts.push(format!("loaded={}", self.loaded));
        }
        parts.join(";")
    }
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

impl Context {
    /// Descriptor columns shared by every row. Degrees and `L/λ = N · d/λ` come
    /// straight from the configuration so that they print exactly.
    fn base_row(&self, scheme: EstimatorKind, geom: &UlaGeometry, sigma_deg: f64) -> CsvRow {
        CsvRow {
            experiment: self.kind.name().to_string(),
            scheme: scheme.name().to_string(),
            n: Some(geom.n_antennas()),
            l_over_lambda: Some(geom.n_antennas() as f64 * self.config.physical.spacing_wavelengths),
            sigma_theta_deg: Some(sigma_deg),
            ..Default::default()
        }
    }
}

fn mean_row(base: CsvRow, tally: &Tally) -> CsvRow {
    CsvRow {
        stat: "mean".into(),
        value: tally.mean(),
        flags: tally.flags(),
        ..base
    }
}

fn iso_for(ctx: &Context, schemes: &[EstimatorKind], geom: &UlaGeometry) -> Result<Option<IsoBasis>> {
    if schemes.contains(&EstimatorKind::Iso) {
        Ok(Some(iso_basis(geom, ctx.config.estimation.iso_rank_tol)?))
    } else {
        Ok(None)
    }
}

/// Perfect-statistics sweep shared by fig1 (aperture) and fig2 (spread).
/// Each point is a geometry and an angular spread in degrees.
fn perfect_sweep(ctx: &Context, points: &[(UlaGeometry, f64)]) -> Result<Vec<CsvRow>> {
    let schemes = ctx.config.schemes_for(ctx.kind);
    let placements = ctx.placements();
    let mut rows = Vec::new();
    for (s, &(ref geom, sigma_deg)) in points.iter().enumerate() {
        let sigma = sigma_deg.to_radians();
        let iso = iso_for(ctx, &schemes, geom)?;
        let per_drop: Vec<Result<Vec<Scored>>> = placements
            .par_iter()
            .enumerate()
            .map(|(d, ue)| {
                ctx.wrap(s + 1, d, (|| {
                    let user = ctx.user(geom, ue, sigma)?;
                    schemes
                        .iter()
                        .map(|&k| Scored::new(&ctx.perfect_operator(k, geom, &user, iso.as_ref())?, &user.reference))
                        .collect()
                })())
            })
            .collect();
        let per_drop = first_error(per_drop)?;
        for (i, &scheme) in schemes.iter().enumerate() {
            let mut tally = Tally::default();
            per_drop.iter().for_each(|v| tally.push(v[i]));
            let base = CsvRow {
                m: Some(PERFECT.into()),
                ..ctx.base_row(scheme, geom, sigma_deg)
            };
            rows.push(mean_row(base, &tally));
        }
    }
    Ok(rows)
}

/// Averaged perfect-statistics NMSEE versus aperture `L/λ`.
pub fn run_fig1(config: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    let ctx = Context::new(config, ExperimentKind::Fig1)?;
    let sigma = ctx.config.physical.angular_spread_deg;
    let points = ctx
        .config
        .sweeps
        .l_over_lambda
        .iter()
        .map(|&l| Ok((ctx.config.physical.geometry_for_aperture(l)?, sigma)))
        .collect::<Result<Vec<_>>>()?;
    perfect_sweep(&ctx, &points)
}

/// Averaged perfect-statistics NMSEE versus angular spread at fixed N.
pub fn run_fig2(config: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    let ctx = Context::new(config, ExperimentKind::Fig2)?;
    let geom = ctx.config.physical.geometry_for_antennas(ctx.config.sweeps.n_antennas)?;
    let points: Vec<_> = ctx
        .config
        .sweeps
        .sigma_theta_deg
        .iter()
        .map(|&s| (geom.clone(), s))
        .collect();
    perfect_sweep(&ctx, &points)
}

/// Edges in degrees of the equal-width elevation bins.
pub fn elevation_bins(config: &ExperimentConfig) -> Vec<(f64, f64)> {
    let (near, far) = config.physical.elevation_range_deg();
    let k = config.sweeps.elevation_bins;
    let w = (far - near) / k as f64;
    (0..k)
        .map(|i| (near + w * i as f64, if i + 1 == k { far } else { near + w * (i + 1) as f64 }))
        .collect()
}

fn box_rows(base: &CsvRow, tally: &Tally, whisker_k: f64) -> Result<Vec<CsvRow>> {
    let b = box_stats(&tally.values, whisker_k)?;
    let stat = |name: &str, value: f64| CsvRow {
        stat: name.into(),
        value,
        flags: tally.flags(),
        ..base.clone()
    };
    let mut rows = vec![
        stat("median", b.median),
        stat("q1", b.q1),
        stat("q3", b.q3),
        stat("whisker_low", b.whisker_low),
        stat("whisker_high", b.whisker_high),
        stat("mean", b.mean),
        stat("n", b.n as f64),
        stat("n_outliers", b.outliers.len() as f64),
        stat("outlier_fraction", b.outlier_fraction()),
    ];
    rows.extend(b.outliers.iter().map(|&o| stat("outlier", o)));
    Ok(rows)
}

/// Per-elevation-bin box statistics of NMSEE with estimated covariances, plus
/// the same statistics with perfect knowledge for reference.
pub fn run_fig3(config: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    let ctx = Context::new(config, ExperimentKind::Fig3)?;
    let schemes = ctx.config.schemes_for(ctx.kind);
    let ms = ctx.config.sweeps.snapshots.clone();
    let max_m = *ms.iter().max().expect("validated non-empty");
    let geom = ctx.config.physical.geometry_for_antennas(ctx.config.sweeps.n_antennas)?;
    let sigma_deg = ctx.config.physical.angular_spread_deg;
    let sigma = sigma_deg.to_radians();
    let bins = elevation_bins(&ctx.config);
    let whisker_k = ctx.config.whisker_k;

    // (bin, M label, scheme) -> tally; M label "perfect" for true statistics.
    let mut tallies: BTreeMap<(usize, usize, usize), Tally> = BTreeMap::new();
    for (b, &(lo, hi)) in bins.iter().enumerate() {
        let slice = ctx.sector.elevation_slice(ctx.height, lo.to_radians(), hi.to_radians())?;
        let batches: Vec<Result<Vec<Scored>>> = (0..ctx.config.n_stat_batches)
            .into_par_iter()
            .map(|t| {
                ctx.wrap(b, t, (|| {
                    let mut rng = ctx.key(b, t).rng();
                    let ue = draw_ue(&slice, ctx.height, &mut rng);
                    let user = ctx.user(&geom, &ue, sigma)?;
                    let snaps = ctx.snapshots(&user, max_m, &mut rng)?;
                    // Layout: perfect per scheme, then per M per scheme.
                    let mut out = Vec::with_capacity(schemes.len() * (ms.len() + 1));
                    for &k in &schemes {
                        out.push(Scored::new(&ctx.perfect_operator(k, &geom, &user, None)?, &user.reference)?);
                    }
                    for &m in &ms {
                        let prefix = snaps.prefix(m)?;
                        for &k in &schemes {
                            out.push(ctx.estimated_nmsee(k, &prefix, &user)?);
                        }
                    }
                    Ok(out)
                })())
            })
            .collect();
        for scored in first_error(batches)? {
            for (j, s) in scored.into_iter().enumerate() {
                let (m_slot, scheme) = (j / schemes.len(), j % schemes.len());
                tallies.entry((b, m_slot, scheme)).or_default().push(s);
            }
        }
    }

    let m_label = |slot: usize| if slot == 0 { PERFECT.to_string() } else { ms[slot - 1].to_string() };
    let mut rows = Vec::new();
    let mut pooled: BTreeMap<(usize, usize), Tally> = BTreeMap::new();
    // Outliers counted against each bin's own whiskers, summed over bins.
    let mut per_bin_outliers: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&(b, slot, scheme), tally) in &tallies {
        let (lo, hi) = bins[b];
        let base = CsvRow {
            theta_bin: Some(super::output::format_float(0.5 * (lo + hi))),
            m: Some(m_label(slot)),
            ..ctx.base_row(schemes[scheme], &geom, sigma_deg)
        };
        let bin_rows = box_rows(&base, tally, whisker_k)?;
        *per_bin_outliers.entry((slot, scheme)).or_default() += bin_rows.iter().filter(|r| r.stat == "outlier").count();
        rows.extend(bin_rows);
        let p = pooled.entry((slot, scheme)).or_default();
        p.values.extend_from_slice(&tally.values);
        p.clamped += tally.clamped;
        p.loaded += tally.loaded;
    }
    for (&(slot, scheme), tally) in &pooled {
        let base = CsvRow {
            theta_bin: Some("pooled".into()),
            m: Some(m_label(slot)),
            ..ctx.base_row(schemes[scheme], &geom, sigma_deg)
        };
        rows.extend(box_rows(&base, tally, whisker_k)?.into_iter().filter(|r| r.stat != "outlier"));
        let k = per_bin_outliers[&(slot, scheme)];
        let stat = |name: &str, value: f64| CsvRow {
            stat: name.into(),
            value,
            flags: tally.flags(),
            ..base.clone()
        };
        rows.push(stat("n_outliers_per_bin", k as f64));
        rows.push(stat("outlier_fraction_per_bin", k as f64 / tally.values.len() as f64));
    }
    Ok(rows)
}

/// Mean NMSEE of the DFT estimator with estimated statistics versus aperture,
/// per snapshot count, plus the perfect-knowledge curve over the same users.
pub fn run_fig4(config: &ExperimentConfig) -> Result<Vec<CsvRow>> {
    let ctx = Context::new(config, ExperimentKind::Fig4)?;
    let ms = ctx.config.sweeps.snapshots.clone();
    let max_m = *ms.iter().max().expect("validated non-empty");
    let sigma_deg = ctx.config.physical.angular_spread_deg;
    let sigma = sigma_deg.to_radians();
    let placements = ctx.placements();
    let scheme = EstimatorKind::Dft;
    let mut rows = Vec::new();
    for (s, &l) in ctx.config.sweeps.l_over_lambda.iter().enumerate() {
        let geom = ctx.config.physical.geometry_for_aperture(l)?;
        let per_drop: Vec<Result<Vec<Scored>>> = placements
            .par_iter()
            .enumerate()
            .map(|(d, ue)| {
                ctx.wrap(s + 1, d, (|| {
                    let mut rng = ctx.key(s + 1, d).rng();
                    let user = ctx.user(&geom, ue, sigma)?;
                    let mut out = vec![Scored::new(&ctx.perfect_operator(scheme, &geom, &user, None)?, &user.reference)?];
                    let snaps = ctx.snapshots(&user, max_m, &mut rng)?;
                    for &m in &ms {
                        out.push(ctx.estimated_nmsee(scheme, &snaps.prefix(m)?, &user)?);
                    }
                    Ok(out)
                })())
            })
            .collect();
        let per_drop = first_error(per_drop)?;
        for slot in 0..=ms.len() {
            let mut tally = Tally::default();
            per_drop.iter().for_each(|v| tally.push(v[slot]));
            let base = CsvRow {
                m: Some(if slot == 0 { PERFECT.to_string() } else { ms[slot - 1].to_string() }),
                ..ctx.base_row(scheme, &geom, sigma_deg)
            };
            rows.push(mean_row(base, &tally));
        }
    }
    Ok(rows)
}
