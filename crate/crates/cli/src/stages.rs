//! Pipeline stages: spectrum → flow → simulate → density → rate, plus the
//! `verify` invariant battery. Each stage writes its own artifacts; the
//! pipeline links them in a manifest.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context as AnyhowContext};

use peano_ldp::characteristics::GFunction;
use peano_ldp::density::{
    estimate_density, fk_bridge, mercer_sum, rate_extract_many, representation_check, RateClass,
};
use peano_ldp::potential::{DriftField, GradientSystem, PotentialV};
use peano_ldp::rates::{
    departure_threshold, estimate_alpha, i1, i2, is_ode_solution, DiscretePath,
};
use peano_ldp::sde::{eps_gamma, simulate, suggested_dt, SdeConfig};
use peano_ldp::spectral::{
    assemble, bottom_spectrum, shoot_1d, GridSpec, SolverOptions, SpectralResult,
};
use peano_ldp::{Potential64, Spectrum64};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::ensemble_io::write_ensemble;
use crate::manifest::Manifest;
use crate::report::{row, write_csv, write_json};

pub struct Context {
    pub resolved: ExperimentConfig,
    pub pot: Potential64,
    pub out_dir: PathBuf,
}

pub fn build_context(
    config_path: &Path,
    out_override: Option<PathBuf>,
    seed_override: Option<u64>,
) -> anyhow::Result<Context> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed_override {
        cfg.sde.master_seed = seed;
    }
    if let Some(out) = out_override {
        cfg.output.dir = out;
    }
    let base = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let pot = cfg.build_potential(&base)?;
    let resolved = cfg.resolved(&pot);
    let out_dir = resolved.output.dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    Ok(Context { resolved, pot, out_dir })
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct DecompositionSummary {
    z: f64,
    p: f64,
    sup_theta2_minus: f64,
    inf_theta1_sq: f64,
}

#[derive(Debug, Serialize)]
struct SpectrumSummary {
    d: usize,
    l: f64,
    n: usize,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    spectral_gap: f64,
    min_psi1: f64,
    a_inf: f64,
    /// 1D only: independent shooting value and its relative distance to the
    /// grid value.
    lambda1_shooting: Option<f64>,
    shooting_rel_diff: Option<f64>,
    decomposition: DecompositionSummary,
}

pub struct SpectrumArtifacts {
    pub spec: Spectrum64,
    pub lambda1: f64,
    pub files: Vec<PathBuf>,
}

pub fn stage_spectrum(ctx: &Context) -> anyhow::Result<SpectrumArtifacts> {
    let cfg = &ctx.resolved;
    let l = cfg.grid.l.expect("resolved");
    let mut grid = GridSpec::<f64>::new(ctx.pot.dim(), l, cfg.grid.n)?;
    grid.cell_centered = cfg.grid.cell_centered;
    let op = assemble(&ctx.pot, &grid, cfg.grid.memory_cap_bytes)?;
    let spec = bottom_spectrum(
        &op,
        cfg.spectrum.k,
        &SolverOptions { tol: cfg.spectrum.tol, max_iter: cfg.spectrum.max_iter },
    )?;
    let lambda1 = spec.eigenvalues[0];

    let (lambda1_shooting, shooting_rel_diff) = if ctx.pot.dim() == 1 {
        let sh = shoot_1d(&ctx.pot, l, (0.5 * lambda1, 1.5 * lambda1))
            .or_else(|_| shoot_1d(&ctx.pot, l, (0.8 * lambda1, 1.2 * lambda1)))?;
        let rel = (sh - lambda1).abs() / sh.abs();
        (Some(sh), Some(rel))
    } else {
        (None, None)
    };

    let dec = ctx.pot.decompose()?;
    let summary = SpectrumSummary {
        d: grid.d,
        l,
        n: grid.n,
        eigenvalues: spec.eigenvalues.clone(),
        residuals: spec.residuals.clone(),
        spectral_gap: spec.eigenvalues.get(1).map(|l2| l2 - lambda1).unwrap_or(f64::NAN),
        min_psi1: spec.min_psi1,
        a_inf: ctx.pot.a_inf(),
        lambda1_shooting,
        shooting_rel_diff,
        decomposition: DecompositionSummary {
            z: dec.z,
            p: dec.p,
            sup_theta2_minus: dec.sup_theta2_minus,
            inf_theta1_sq: dec.inf_theta1_sq,
        },
    };
    let json_path = ctx.out_dir.join("spectrum.json");
    write_json(&json_path, &summary)?;

    let csv_path = ctx.out_dir.join("eigenfunctions.csv");
    let header: String = (0..grid.d)
        .map(|i| format!("x{i}"))
        .chain((1..=spec.k()).map(|j| format!("psi_{j}")))
        .collect::<Vec<_>>()
        .join(",");
    let k = spec.k();
    write_csv(
        &csv_path,
        &header,
        (0..grid.size()).map(|flat| {
            let mut fields = grid.node(flat);
            for j in 0..k {
                fields.push(spec.eigenfunctions[j][flat]);
            }
            row(&fields)
        }),
    )?;
    Ok(SpectrumArtifacts { spec, lambda1, files: vec![json_path, csv_path] })
}

// ---------------------------------------------------------------------------
// flow
// ---------------------------------------------------------------------------

pub fn stage_flow(ctx: &Context, lambda1: f64) -> anyhow::Result<(GFunction<f64>, Vec<PathBuf>)> {
    let cfg = &ctx.resolved;
    let gf = GFunction::build(&ctx.pot, lambda1, cfg.flow.n_angles, cfg.flow.t_max, cfg.flow.r0)?;

    let flows_path = ctx.out_dir.join("flows.csv");
    let d = ctx.pot.dim();
    let header: String = std::iter::once("flow_id".to_string())
        .chain((0..d).map(|i| format!("omega0_{i}")))
        .chain(std::iter::once("t".to_string()))
        .chain((0..d).map(|i| format!("phi_{i}")))
        .collect::<Vec<_>>()
        .join(",");
    let mut rows = Vec::new();
    for (id, flow) in gf.flows().iter().enumerate() {
        for (t, p) in flow.times().iter().zip(flow.points()) {
            let mut fields = vec![id as f64];
            fields.extend_from_slice(&flow.omega0);
            fields.push(*t);
            fields.extend_from_slice(&p);
            rows.push(row(&fields));
        }
    }
    write_csv(&flows_path, &header, rows.into_iter())?;

    // g on log-spaced radii along a subsample of directions
    let g_path = ctx.out_dir.join("g_samples.csv");
    let l = cfg.grid.l.expect("resolved");
    let header: String = (0..d)
        .map(|i| format!("x{i}"))
        .chain(["g".to_string(), "g_asymptotic".to_string()])
        .collect::<Vec<_>>()
        .join(",");
    let stride = (gf.flows().len() / 16).max(1);
    let mut rows = Vec::new();
    for flow in gf.flows().iter().step_by(stride) {
        for j in 0..32 {
            // log-spaced radii from l/100 to 0.9 l
            let r = 0.01 * l * (90.0f64).powf(j as f64 / 31.0);
            let x: Vec<f64> = flow.omega0.iter().map(|&w| w * r).collect();
            let g = gf.eval_g(&x)?;
            let ga = gf.asymptotic_g(&x)?;
            let mut fields = x;
            fields.push(g);
            fields.push(ga);
            rows.push(row(&fields));
        }
    }
    write_csv(&g_path, &header, rows.into_iter())?;
    Ok((gf, vec![flows_path, g_path]))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn stage_simulate(ctx: &Context) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = &ctx.resolved;
    let t_max = cfg.sde.t_max.expect("resolved");
    let mut files = Vec::new();
    for (i, &eps) in cfg.sde.epsilons.iter().enumerate() {
        let dt = suggested_dt(eps, ctx.pot.gamma(), cfg.sde.dt_cap);
        let sde_cfg = SdeConfig {
            epsilon: eps,
            t_max,
            dt,
            n_paths: cfg.sde.n_paths,
            master_seed: cfg.sde.master_seed,
            record_stride: cfg.sde.record_stride,
        };
        let ens = simulate(&ctx.pot, &sde_cfg)?;
        let bin = ctx.out_dir.join(format!("ensemble_eps{i}.bin"));
        write_ensemble(&bin, &ens)?;
        files.push(bin);
        if cfg.sde.write_endpoints {
            let csv = ctx.out_dir.join(format!("endpoints_eps{i}.csv"));
            let d = ens.dim;
            let slice = ens.endpoint_slice(t_max)?;
            let header: String = std::iter::once("path".to_string())
                .chain((0..d).map(|k| format!("x{k}")))
                .collect::<Vec<_>>()
                .join(",");
            write_csv(
                &csv,
                &header,
                (0..sde_cfg.n_paths).map(|p| {
                    let mut fields = vec![p as f64];
                    fields.extend_from_slice(&slice[p * d..(p + 1) * d]);
                    row(&fields)
                }),
            )?;
            files.push(csv);
        }
    }
    Ok(files)
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct KdeSummary {
    p_hat: f64,
    stderr: f64,
    bandwidth: Vec<f64>,
    n_paths: usize,
}

#[derive(Debug, Serialize)]
struct RepresentationSummary {
    epsilon: f64,
    rhs: f64,
    rel_deviation: f64,
    combined_error: f64,
    pass: bool,
    truncation_indicator: Option<f64>,
    warn_small_tau: bool,
    scaling_identity_rel_err: f64,
}

#[derive(Debug, Serialize)]
struct BridgeCheck {
    tau: f64,
    y: Vec<f64>,
    bridge: f64,
    bridge_stderr: f64,
    mercer: f64,
    truncation_indicator: Option<f64>,
    agree_within_combined: bool,
}

#[derive(Debug, Serialize)]
struct DensityTargetReport {
    t: f64,
    x: Vec<f64>,
    kde: KdeSummary,
    representation: Option<RepresentationSummary>,
    representation_error: Option<String>,
    bridge_vs_mercer: Option<BridgeCheck>,
}

pub fn stage_density(ctx: &Context, spec: &SpectralResult<f64>) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = &ctx.resolved;
    let eps = cfg.sde.epsilons[0]; // the mildest rung: both sides computable
    let gamma = ctx.pot.gamma();
    let mut reports = Vec::new();
    for (idx, target) in cfg.targets.iter().enumerate() {
        let dt = suggested_dt(eps, gamma, cfg.sde.dt_cap);
        let sde_cfg = SdeConfig {
            epsilon: eps,
            t_max: target.t,
            dt,
            n_paths: cfg.density.n_paths,
            master_seed: cfg.sde.master_seed.wrapping_add(0xD5A1 + idx as u64),
            record_stride: usize::MAX >> 1,
        };
        let ens = simulate(&ctx.pot, &sde_cfg)?;
        let kde = estimate_density(&ens, target.t, &target.x, cfg.density.bandwidth.as_deref())?;

        let (rep, rep_err) = match representation_check(
            &ctx.pot,
            gamma,
            spec,
            &ens,
            target.t,
            &target.x,
            cfg.density.mercer_k.min(spec.k()),
        ) {
            Ok(r) => (
                Some(RepresentationSummary {
                    epsilon: r.epsilon,
                    rhs: r.rhs,
                    rel_deviation: r.rel_deviation,
                    combined_error: r.combined_error,
                    pass: r.pass,
                    truncation_indicator: r.truncation_indicator,
                    warn_small_tau: r.warn_small_tau,
                    scaling_identity_rel_err: r.scaling_identity_rel_err,
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        };

        // independent kernel cross-check at the rescaled point
        let eg = eps_gamma(eps, gamma);
        let tau = target.t / eg;
        let y: Vec<f64> = target.x.iter().map(|&c| c / (eps * eg.sqrt())).collect();
        let origin = vec![0.0; ctx.pot.dim()];
        let bridge_check = match mercer_sum(spec, tau, &origin, &y, cfg.density.mercer_k.min(spec.k())) {
            Ok(ms) => {
                let (bv, bse) = fk_bridge(
                    &ctx.pot,
                    tau,
                    &origin,
                    &y,
                    cfg.density.n_bridge_samples,
                    cfg.density.n_bridge_steps,
                    cfg.sde.master_seed.wrapping_add(0xB51D6E + idx as u64),
                )?;
                let combined = 3.0
                    * (bse + ms.truncation_indicator.unwrap_or(0.0) * ms.value.abs());
                Some(BridgeCheck {
                    tau,
                    y,
                    bridge: bv,
                    bridge_stderr: bse,
                    mercer: ms.value,
                    truncation_indicator: ms.truncation_indicator,
                    agree_within_combined: (bv - ms.value).abs() <= combined,
                })
            }
            Err(_) => None,
        };

        reports.push(DensityTargetReport {
            t: target.t,
            x: target.x.clone(),
            kde: KdeSummary {
                p_hat: kde.p_hat,
                stderr: kde.stderr,
                bandwidth: kde.bandwidth,
                n_paths: kde.n_paths,
            },
            representation: rep,
            representation_error: rep_err,
            bridge_vs_mercer: bridge_check,
        });
    }
    let json_path = ctx.out_dir.join("density.json");
    write_json(&json_path, &reports)?;

    let csv_path = ctx.out_dir.join("density.csv");
    let d = ctx.pot.dim();
    let header: String = std::iter::once("t".to_string())
        .chain((0..d).map(|i| format!("x{i}")))
        .chain(["p_hat".into(), "stderr".into()])
        .collect::<Vec<_>>()
        .join(",");
    write_csv(
        &csv_path,
        &header,
        reports.iter().map(|r| {
            let mut fields = vec![r.t];
            fields.extend_from_slice(&r.x);
            fields.push(r.kde.p_hat);
            fields.push(r.kde.stderr);
            row(&fields)
        }),
    )?;
    Ok(vec![json_path, csv_path])
}

// ---------------------------------------------------------------------------
// rate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct RateTargetReport {
    t: f64,
    x: Vec<f64>,
    prediction: f64,
    classification: String,
    intercept: Option<f64>,
    intercept_se: Option<f64>,
    plain_intercept: Option<f64>,
    slope: Option<f64>,
    log_coef: Option<f64>,
    r_squared: Option<f64>,
    rel_err: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AlphaRow {
    epsilon: f64,
    weights: Vec<f64>,
    weight_se: Vec<f64>,
    unclassified: f64,
    n_paths: usize,
}

#[derive(Debug, Serialize)]
struct AlphaReportJson {
    t: f64,
    delta: f64,
    n_flows: usize,
    rows: Vec<AlphaRow>,
    unclassified_monotone_3sigma: bool,
}

pub fn stage_rate(ctx: &Context, gf: &GFunction<f64>) -> anyhow::Result<Vec<PathBuf>> {
    let cfg = &ctx.resolved;
    let mut files = Vec::new();

    // group targets by time so each ladder is simulated once
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, tgt) in cfg.targets.iter().enumerate() {
        match groups.iter_mut().find(|(t, _)| *t == tgt.t) {
            Some((_, v)) => v.push(i),
            None => groups.push((tgt.t, vec![i])),
        }
    }
    let tmpl = peano_ldp::density::SimTemplate {
        n_paths: cfg.sde.n_paths,
        master_seed: cfg.sde.master_seed,
        dt_cap: cfg.sde.dt_cap,
        bandwidth: cfg.density.bandwidth.clone(),
    };
    for (t, idxs) in &groups {
        let xs: Vec<Vec<f64>> = idxs.iter().map(|&i| cfg.targets[i].x.clone()).collect();
        let fits = rate_extract_many(gf, *t, &xs, &cfg.sde.epsilons, &tmpl)?;
        for (&i, fit) in idxs.iter().zip(&fits) {
            let csv_path = ctx.out_dir.join(format!("ladder_target{i}.csv"));
            write_csv(
                &csv_path,
                "epsilon,epsilon_gamma,p_hat,stderr,log_p,eps_gamma_log_p",
                fit.rows.iter().map(|r| {
                    row(&[r.epsilon, r.eps_gamma, r.p_hat, r.stderr, r.log_p, r.eg_log_p])
                }),
            )?;
            let json_path = ctx.out_dir.join(format!("rate_target{i}.json"));
            write_json(
                &json_path,
                &RateTargetReport {
                    t: *t,
                    x: cfg.targets[i].x.clone(),
                    prediction: fit.prediction,
                    classification: match fit.classification {
                        RateClass::Fitted => "fitted".into(),
                        RateClass::Diverging => "diverging".into(),
                    },
                    intercept: fit.intercept,
                    intercept_se: fit.intercept_se,
                    plain_intercept: fit.plain_intercept,
                    slope: fit.slope,
                    log_coef: fit.log_coef,
                    r_squared: fit.r_squared,
                    rel_err: fit.rel_err,
                },
            )?;
            files.push(csv_path);
            files.push(json_path);
        }
    }

    // path classification on a finely recorded small ensemble at the
    // smallest ladder epsilon
    let eps_min = *cfg.sde.epsilons.last().unwrap();
    let t_max = cfg.sde.t_max.expect("resolved");
    let dt = suggested_dt(eps_min, ctx.pot.gamma(), cfg.sde.dt_cap);
    let n_steps = (t_max / dt).round() as usize;
    let stride = (n_steps / 128).max(1);
    let n_keep = n_steps - n_steps % stride;
    let class_cfg = SdeConfig {
        epsilon: eps_min,
        t_max,
        dt,
        n_paths: cfg.rates.classify_paths,
        master_seed: cfg.sde.master_seed.wrapping_add(0xC1A55),
        record_stride: stride,
    };
    let ens = simulate(&ctx.pot, &class_cfg)?;
    let thresh = departure_threshold(&ctx.pot, stride as f64 * dt);
    let rates_path = ctx.out_dir.join("rates.csv");
    let mut rows_out = Vec::new();
    let d = ctx.pot.dim();
    for p in 0..class_cfg.n_paths {
        let n_rec = n_keep / stride + 1;
        let times: Vec<f64> = (0..n_rec).map(|k| ens.times()[k]).collect();
        let states: Vec<Vec<f64>> = (0..n_rec).map(|k| ens.state(p, k).to_vec()).collect();
        let path = DiscretePath::new(times, states)?;
        let v1 = i1(&path, &ctx.pot)?;
        let chk = is_ode_solution(&path, &ctx.pot, cfg.rates.solution_tol, thresh);
        let v2 = i2(&path, gf, cfg.rates.solution_tol)?;
        let fmt = |v: peano_ldp::rates::RateValue<f64>| match v.finite() {
            Some(x) => format!("{x}"),
            None => "inf".to_string(),
        };
        rows_out.push(format!(
            "{p},{},{},{},{},{}",
            fmt(v1),
            fmt(v2),
            chk.residual,
            chk.t0,
            if chk.is_solution { "solution" } else { "noisy" }
        ));
        let _ = d;
    }
    write_csv(&rates_path, "path_id,i1,i2,residual,t0,classification", rows_out.into_iter())?;
    files.push(rates_path);

    // endpoint selection weights along the ladder
    let flows_all = gf.flows();
    let stride_f = (flows_all.len() / 32).max(1);
    let flows: Vec<_> = flows_all.iter().step_by(stride_f).cloned().collect();
    let centers: Vec<Vec<f64>> = flows.iter().map(|f| f.position_at(t_max)).collect();
    let mut min_dist = f64::INFINITY;
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            min_dist = min_dist.min(peano_ldp::linalg::dist(&centers[i], &centers[j]));
        }
    }
    let delta = cfg.rates.alpha_delta.unwrap_or(0.4 * min_dist);
    let mut rows = Vec::new();
    let mut prev_un = f64::INFINITY;
    let mut prev_se = 0.0f64;
    let mut monotone = true;
    for (i, &eps) in cfg.sde.epsilons.iter().enumerate() {
        let dt = suggested_dt(eps, ctx.pot.gamma(), cfg.sde.dt_cap);
        let alpha_cfg = SdeConfig {
            epsilon: eps,
            t_max,
            dt,
            n_paths: cfg.rates.alpha_n_paths,
            master_seed: cfg.sde.master_seed.wrapping_add(0xA1FA + i as u64),
            record_stride: usize::MAX >> 1,
        };
        let ens = simulate(&ctx.pot, &alpha_cfg)?;
        let rep = estimate_alpha(&ens, &flows, t_max, delta)?;
        let un_se = (rep.unclassified * (1.0 - rep.unclassified)
            / rep.n_paths as f64)
            .sqrt();
        if rep.unclassified > prev_un + 3.0 * (un_se + prev_se) {
            monotone = false;
        }
        prev_un = rep.unclassified;
        prev_se = un_se;
        rows.push(AlphaRow {
            epsilon: eps,
            weights: rep.weights,
            weight_se: rep.weight_se,
            unclassified: rep.unclassified,
            n_paths: rep.n_paths,
        });
    }
    let alpha_path = ctx.out_dir.join("alpha.json");
    write_json(
        &alpha_path,
        &AlphaReportJson {
            t: t_max,
            delta,
            n_flows: flows.len(),
            rows,
            unclassified_monotone_3sigma: monotone,
        },
    )?;
    files.push(alpha_path);
    Ok(files)
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

const STAGE_ORDER: [&str; 5] = ["spectrum", "flow", "simulate", "density", "rate"];

/// Run the pipeline through `upto` (all stages when `None`); returns the
/// manifest and whether every executed stage succeeded.
pub fn run_pipeline(ctx: &Context, upto: Option<&str>) -> anyhow::Result<(Manifest, bool)> {
    if let Some(name) = upto {
        if !STAGE_ORDER.contains(&name) {
            return Err(anyhow!(
                "unknown stage \"{name}\" (expected one of {STAGE_ORDER:?})"
            ));
        }
    }
    let mut manifest = Manifest::new(&ctx.resolved)?;
    let mut all_ok = true;
    let mut spec_art: Option<SpectrumArtifacts> = None;
    let mut gf: Option<GFunction<f64>> = None;
    let last = upto.unwrap_or("rate");
    let last_idx = STAGE_ORDER.iter().position(|s| *s == last).unwrap();

    for (si, &stage) in STAGE_ORDER.iter().enumerate() {
        if si > last_idx || !all_ok {
            manifest.record_stage(stage, "skipped".into());
            continue;
        }
        let result: anyhow::Result<Vec<PathBuf>> = match stage {
            "spectrum" => stage_spectrum(ctx).map(|a| {
                let files = a.files.clone();
                spec_art = Some(a);
                files
            }),
            "flow" => {
                let lambda1 = spec_art.as_ref().unwrap().lambda1;
                stage_flow(ctx, lambda1).map(|(g, files)| {
                    gf = Some(g);
                    files
                })
            }
            "simulate" => stage_simulate(ctx),
            "density" => stage_density(ctx, &spec_art.as_ref().unwrap().spec),
            "rate" => stage_rate(ctx, gf.as_ref().unwrap()),
            _ => unreachable!(),
        };
        match result {
            Ok(files) => {
                manifest.record_stage(stage, "ok".into());
                for f in files {
                    manifest.record_file(stage, &ctx.out_dir, &f)?;
                }
            }
            Err(e) => {
                manifest.record_stage(stage, format!("failed: {e}"));
                all_ok = false;
            }
        }
    }
    manifest.write(&ctx.out_dir.join("manifest.json"))?;
    Ok((manifest, all_ok))
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct Harness {
    passed: usize,
    failed: usize,
}

impl Harness {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            self.passed += 1;
            println!("PASS  {name} — {detail}");
        } else {
            self.failed += 1;
            println!("FAIL  {name} — {detail}");
        }
    }
}

/// Run the invariant suites against the configured potential.
pub fn run_verify(ctx: &Context) -> anyhow::Result<(usize, usize)> {
    let mut h = Harness { passed: 0, failed: 0 };
    let pot = &ctx.pot;
    let d = pot.dim();
    let gamma = pot.gamma();

    // positivity and derivative consistency of the profile
    {
        let mesh = peano_ldp::sphere::default_mesh::<f64>(d);
        let mut min_theta = f64::INFINITY;
        let mut max_grad_err = 0.0f64;
        for y in mesh.iter().step_by((mesh.len() / 128).max(1)) {
            min_theta = min_theta.min(pot.profile().eval(y));
            let g = pot.profile().grad(y);
            let h_fd = 1e-6;
            for i in 0..d {
                let mut yp = y.clone();
                yp[i] += h_fd;
                let np = peano_ldp::linalg::norm(&yp);
                let yp: Vec<f64> = yp.iter().map(|c| c / np).collect();
                let mut ym = y.clone();
                ym[i] -= h_fd;
                let nm = peano_ldp::linalg::norm(&ym);
                let ym: Vec<f64> = ym.iter().map(|c| c / nm).collect();
                let fd = (pot.profile().eval(&yp) - pot.profile().eval(&ym)) / (2.0 * h_fd);
                max_grad_err = max_grad_err.max((g[i] - fd).abs());
            }
        }
        h.check("profile positivity", min_theta > 0.0, format!("min theta = {min_theta:.6}"));
        h.check(
            "profile gradient consistency",
            max_grad_err < 1e-5,
            format!("max |grad - FD| = {max_grad_err:.2e}"),
        );
    }

    // homogeneity of U and b
    {
        let mut max_u = 0.0f64;
        let mut max_b = 0.0f64;
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let x: Vec<f64> = (0..d).map(|_| rnd() * 4.0 - 2.0).collect();
            if peano_ldp::linalg::norm(&x) < 1e-3 {
                continue;
            }
            let lam = 0.1 + rnd() * 5.0;
            let xl: Vec<f64> = x.iter().map(|&c| lam * c).collect();
            let u_err = (pot.u(&xl) - lam.powf(1.0 + gamma) * pot.u(&x)).abs()
                / pot.u(&xl).abs().max(1e-300);
            max_u = max_u.max(u_err);
            let b = pot.drift(&x);
            let bl = pot.drift(&xl);
            for i in 0..d {
                max_b = max_b.max((bl[i] - lam.powf(gamma) * b[i]).abs() / (bl[i].abs().max(1e-12)));
            }
        }
        h.check("U homogeneity degree 1+gamma", max_u <= 1e-10, format!("max rel err {max_u:.2e}"));
        h.check("drift homogeneity degree gamma", max_b <= 1e-9, format!("max rel err {max_b:.2e}"));
    }

    // decomposition identity
    {
        let dec = pot.decompose()?;
        let mut max_err = 0.0f64;
        let mut v1_min = f64::INFINITY;
        let mut support_ok = true;
        let mut state = 7u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let x: Vec<f64> = (0..d).map(|_| rnd() * 4.0 - 2.0).collect();
            let r = peano_ldp::linalg::norm(&x);
            if r < 1e-2 {
                continue;
            }
            let v = pot.v(&x)?;
            let v1 = dec.v1(&x)?;
            let v2 = dec.v2(&x)?;
            max_err = max_err.max((v1 - v2 - v).abs() / v.abs().max(1.0));
            v1_min = v1_min.min(v1);
            if r > dec.z && v2 != 0.0 {
                support_ok = false;
            }
        }
        h.check("V = V1 - V2 identity", max_err <= 1e-12, format!("max rel err {max_err:.2e}"));
        h.check("V1 nonnegative", v1_min >= 0.0, format!("min V1 = {v1_min:.3e}"));
        h.check("V2 support in ball z", support_ok, format!("z = {}", dec.z));
        let window_ok = dec.p > d as f64 / 2.0 && dec.p < d as f64 / (1.0 - gamma);
        h.check("integrability exponent window", window_ok, format!("p = {}", dec.p));
    }

    // growth bound on simulated paths
    {
        let a_inf = pot.a_inf();
        let cfg = SdeConfig {
            epsilon: 0.3,
            t_max: 1.0,
            dt: 1e-3,
            n_paths: 200,
            master_seed: ctx.resolved.sde.master_seed,
            record_stride: 1000,
        };
        let ens = simulate(pot, &cfg)?;
        let ok = ens.summaries().iter().all(|s| {
            s.sup_x <= (a_inf * cfg.t_max + cfg.epsilon * s.sup_w) * (a_inf * cfg.t_max).exp() + 1e-12
        });
        h.check("Gronwall growth bound", ok, format!("a_inf = {a_inf:.4}, 200 paths"));
    }

    // flow invariants
    {
        let w0 = {
            let mut v = vec![0.0; d];
            v[0] = 1.0;
            v
        };
        let flow = peano_ldp::characteristics::integrate_extremal(
            pot,
            &w0,
            2.0,
            ctx.resolved.flow.r0,
            &peano_ldp::ode::OdeOptions { rtol: 1e-10, atol: 1e-12, ..Default::default() },
        )?;
        let mut increasing = true;
        let mut prev = 0.0;
        for &t in &flow.times() {
            let r = flow.radius_at(t);
            if r <= prev {
                increasing = false;
            }
            prev = r;
        }
        h.check("flow radius strictly increasing", increasing, format!("t_end = {}", flow.t_end()));
        let ratio = flow.radius_at(2.0) / flow.radius_at(1.0);
        let expect = 2.0f64.powf(1.0 / (1.0 - gamma));
        h.check(
            "flow homogeneity 1/(1-gamma)",
            (ratio - expect).abs() < 1e-6 * expect,
            format!("|phi(2t)|/|phi(t)| = {ratio:.8} vs {expect:.8}"),
        );
    }

    // spectral invariants on a coarse grid
    {
        let l = ctx.resolved.grid.l.expect("resolved");
        let n = if d == 1 { 1024 } else if d == 2 { 96 } else { 32 };
        let grid = GridSpec::<f64>::new(d, l, n)?;
        let op = assemble(pot, &grid, ctx.resolved.grid.memory_cap_bytes)?;
        let spec = bottom_spectrum(&op, 2, &SolverOptions::default())?;
        h.check(
            "spectral residuals <= 1e-8",
            spec.residuals.iter().all(|&r| r <= 1e-8),
            format!("{:?}", spec.residuals),
        );
        let rq = spec.rayleigh(&op, 0);
        h.check(
            "Rayleigh quotient matches lambda1",
            (rq - spec.eigenvalues[0]).abs() <= 1e-10 * spec.eigenvalues[0].abs(),
            format!("{rq} vs {}", spec.eigenvalues[0]),
        );
        h.check(
            "spectral gap positive",
            spec.eigenvalues[1] > spec.eigenvalues[0],
            format!("gap = {}", spec.eigenvalues[1] - spec.eigenvalues[0]),
        );
        h.check(
            "ground state positive",
            spec.min_psi1 >= 0.0 || d > 1,
            format!("min psi1 = {:.3e}", spec.min_psi1),
        );

        // g consistency against the spectral lambda1
        let gf = GFunction::build(pot, spec.eigenvalues[0], 64, ctx.resolved.flow.t_max, ctx.resolved.flow.r0)?;
        let pts: Vec<Vec<f64>> = (1..20)
            .map(|i| {
                let mut v = vec![0.0; d];
                v[0] = 0.1 + 0.1 * i as f64;
                v
            })
            .collect();
        let rep = gf.verify_pde(&pts)?;
        h.check(
            "transport PDE residual <= 1e-3 * lambda1",
            rep.max_rel_residual <= 1e-3,
            format!("max rel residual {:.2e}", rep.max_rel_residual),
        );
        h.check("g(0) = 0", gf.eval_g(&vec![0.0; d])? == 0.0, "by convention".into());
    }

    // determinism across worker counts
    {
        let cfg = SdeConfig {
            epsilon: 0.5,
            t_max: 0.25,
            dt: 1e-3,
            n_paths: 64,
            master_seed: ctx.resolved.sde.master_seed,
            record_stride: 50,
        };
        let p1 = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
        let p2 = rayon::ThreadPoolBuilder::new().num_threads(2).build()?;
        let a = p1.install(|| simulate(pot, &cfg))?;
        let b = p2.install(|| simulate(pot, &cfg))?;
        h.check(
            "worker-count-independent ensembles",
            a.raw_states() == b.raw_states(),
            format!("{} paths", cfg.n_paths),
        );
    }

    println!(
        "verify: {} passed, {} failed",
        h.passed, h.failed
    );
    Ok((h.passed, h.failed))
}
