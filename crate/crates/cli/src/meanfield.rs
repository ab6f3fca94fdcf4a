use std::time::SystemTime;

use anyhow::{bail, Result};
use meanfield::{
    find_bsb1_fixed_point, initial_g_ratio, iterate_full_map, k_measure, theorem1_search, theorem2_growth,
    theorem3_verify, wishart, Bsb1Point, GrowthTrace, MeanFieldConfig, SpectralReport,
};
use numkit::{RngStream, SymmetricMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{read_config, Check, MeanfieldArgs};
use crate::exit::VerificationFailed;
use crate::manifest::{ensure_dir, write_json, write_text, Envelope, RunManifest, Timestamps};

/// Strict improvement threshold for the scaling search.
pub const THEOREM1_MARGIN: f64 = 1e-4;
pub const THEOREM1_WIN_FRACTION: f64 = 0.95;
/// Allowed relative gap between measured G growth and `λ_G`.
pub const GROWTH_MATCH: f64 = 0.02;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldSettings {
    pub d: usize,
    pub sigma_b2: f64,
    pub s: Option<Vec<f64>>,
    pub verify: Vec<Check>,
    pub trials: usize,
    pub starts: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub tolerance: f64,
    pub epsilon: f64,
    pub steps: usize,
    pub search_iters: usize,
}

impl Default for MeanfieldSettings {
    fn default() -> Self {
        Self {
            d: 8,
            sigma_b2: 1.0,
            s: None,
            verify: vec![Check::Bsb1, Check::Theorem3],
            trials: 100,
            starts: 10,
            seed: 0,
            fd_step: 1e-5,
            tolerance: 1e-5,
            epsilon: 1e-4,
            steps: 20,
            search_iters: 200,
        }
    }
}

impl MeanfieldSettings {
    pub fn resolve(args: &MeanfieldArgs) -> Result<Self> {
        let mut s: Self = read_config(args.common.config.as_ref())?;
        s.d = args.d.unwrap_or(s.d);
        s.sigma_b2 = args.sigma_b2.unwrap_or(s.sigma_b2);
        if args.s.is_some() {
            s.s = args.s.clone();
        }
        if let Some(v) = &args.verify {
            s.verify = v.clone();
        }
        s.trials = args.trials.unwrap_or(s.trials);
        s.seed = args.seed.unwrap_or(s.seed);
        s.fd_step = args.fd_step.unwrap_or(s.fd_step);
        s.tolerance = args.tolerance.unwrap_or(s.tolerance);
        s.epsilon = args.epsilon.unwrap_or(s.epsilon);
        s.steps = args.steps.unwrap_or(s.steps);
        if let Some(v) = &s.s {
            if v.len() != s.d || v.iter().any(|x| !(*x > 0.0)) {
                bail!("--s needs {} positive entries", s.d);
            }
        }
        MeanFieldConfig::new(s.d, s.sigma_b2)?;
        Ok(s)
    }

    fn wants(&self, c: Check) -> bool {
        self.verify.contains(&c)
    }
}

#[derive(Debug, Serialize)]
pub struct Bsb1Check {
    pub point: Bsb1Point,
    /// `|q* − 2σ_b²|`.
    pub q_error: f64,
    /// Max entry distance of each full-map run from the BSB1 point.
    pub start_distances: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Theorem1Check {
    pub trials: usize,
    pub wins: usize,
    pub ratios: Vec<f64>,
    pub stalled: usize,
    pub identity_ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct Theorem2Check {
    /// Max `|⟨SCS,G⟩/⟨C,G⟩ − K(C,s)|` over the trials.
    pub identity_error: f64,
    pub trace: GrowthTrace,
    pub measured_rate: Option<f64>,
    pub lambda_g: f64,
}

#[derive(Debug, Default, Serialize)]
pub struct MeanfieldReport {
    pub normalized_point: Option<Bsb1Point>,
    pub bsb1: Option<Bsb1Check>,
    pub theorem1: Option<Theorem1Check>,
    pub theorem2: Option<Theorem2Check>,
    pub theorem3: Option<SpectralReport>,
    pub passed: bool,
    pub failures: Vec<String>,
}

fn unit_mean_square(mut s: Vec<f64>) -> Vec<f64> {
    let norm = (s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64).sqrt();
    s.iter_mut().for_each(|x| *x /= norm);
    s
}

pub fn evaluate(settings: &MeanfieldSettings) -> Result<MeanfieldReport> {
    let d = settings.d;
    let plain = MeanFieldConfig::new(d, settings.sigma_b2)?;
    let normed = plain.clone().normalized(true);
    let root = RngStream::new(settings.seed);
    let mut report = MeanfieldReport::default();
    let mut failures = Vec::new();

    let point = find_bsb1_fixed_point(&plain, 1e-12, 10_000)?;
    if settings.wants(Check::Bsb1) {
        let q_error = (point.q - 2.0 * settings.sigma_b2).abs();
        if q_error > 1e-10 {
            failures.push(format!("bsb1: q* = {} differs from 2σ_b² by {q_error:e}", point.q));
        }
        if !(point.residual < 1e-8) {
            failures.push(format!("bsb1: map residual {:e} at the fixed point", point.residual));
        }
        let mut start_distances = Vec::new();
        for k in 0..settings.starts {
            let start = wishart(d, d + 2, &mut root.substream(k as u64));
            let (c, _) = iterate_full_map(&plain, &start, 1e-12, 10_000)?;
            let dist = c.max_abs_diff(&point.matrix);
            if !(dist < 1e-6) {
                failures.push(format!("bsb1: start {k} ends {dist:e} away from the fixed point"));
            }
            start_distances.push(dist);
        }
        report.bsb1 = Some(Bsb1Check {
            point: point.clone(),
            q_error,
            start_distances,
        });
    }

    let spectral = if settings.wants(Check::Theorem3) || settings.wants(Check::Theorem2) {
        let npoint = find_bsb1_fixed_point(&normed, 1e-12, 1_000)?;
        let spec = theorem3_verify(&normed, &npoint.matrix, settings.fd_step, settings.tolerance)?;
        report.normalized_point = Some(npoint);
        Some(spec)
    } else {
        None
    };
    if settings.wants(Check::Theorem3) {
        let spec = spectral.as_ref().expect("computed above");
        failures.extend(spec.failures.iter().map(|f| format!("theorem3: {f}")));
    }

    if settings.wants(Check::Theorem1) {
        let runs: Vec<_> = (0..settings.trials)
            .into_par_iter()
            .map(|k| {
                let c = wishart(d, d + 2, &mut root.substream(1_000 + k as u64));
                theorem1_search(&c, &plain, settings.search_iters, settings.fd_step)
            })
            .collect::<meanfield::Result<_>>()?;
        let ratios: Vec<f64> = runs.iter().map(|r| r.ratio).collect();
        let wins = ratios.iter().filter(|&&r| r <= 1.0 - THEOREM1_MARGIN).count();
        let identity = theorem1_search(&SymmetricMatrix::identity(d), &plain, settings.search_iters, settings.fd_step)?;
        let needed = (THEOREM1_WIN_FRACTION * settings.trials as f64).ceil() as usize;
        if wins < needed {
            failures.push(format!("theorem1: {wins}/{} strict improvements, need {needed}", settings.trials));
        }
        if identity.ratio != 1.0 {
            failures.push(format!("theorem1: C = I gave ratio {}", identity.ratio));
        }
        report.theorem1 = Some(Theorem1Check {
            trials: settings.trials,
            wins,
            stalled: runs.iter().filter(|r| r.stalled).count(),
            ratios,
            identity_ratio: identity.ratio,
        });
    }

    if settings.wants(Check::Theorem2) {
        let mut identity_error: f64 = 0.0;
        for k in 0..settings.trials {
            let mut rng = root.substream(2_000 + k as u64);
            let c = wishart(d, d + 2, &mut rng);
            let s = match &settings.s {
                Some(s) => unit_mean_square(s.clone()),
                None => unit_mean_square((0..d).map(|_| rng.uniform_range(0.2, 2.0)).collect()),
            };
            identity_error = identity_error.max((initial_g_ratio(&c, &s) - k_measure(&c, &s)?).abs());
        }
        if !(identity_error <= 1e-10) {
            failures.push(format!("theorem2: initial G ratio differs from K by {identity_error:e}"));
        }
        let npoint = report.normalized_point.as_ref().expect("computed with the spectrum");
        let trace = theorem2_growth(
            &normed,
            &npoint.matrix,
            &SymmetricMatrix::centering(d),
            settings.epsilon,
            settings.steps,
        )?;
        let lambda_g = spectral.as_ref().expect("computed above").lambda_g();
        let measured_rate = trace.ratios.first().copied();
        match measured_rate {
            Some(r) if (r - lambda_g).abs() <= GROWTH_MATCH * lambda_g.abs() => {}
            Some(r) => failures.push(format!(
                "theorem2: measured G growth {r:e} per step does not match λ_G = {lambda_g:e}"
            )),
            None => failures.push("theorem2: G perturbation vanished before a rate could be measured".into()),
        }
        report.theorem2 = Some(Theorem2Check {
            identity_error,
            trace,
            measured_rate,
            lambda_g,
        });
    }
    report.theorem3 = spectral;
    report.passed = failures.is_empty();
    report.failures = failures;
    Ok(report)
}

pub fn run(args: &MeanfieldArgs) -> Result<()> {
    let started = SystemTime::now();
    let settings = MeanfieldSettings::resolve(args)?;
    let out = &args.common.out;
    ensure_dir(out)?;
    let mut manifest = RunManifest::new("meanfield", &settings, vec![settings.seed])?;
    manifest.outputs.push("meanfield.json".into());
    let report = rayon::ThreadPoolBuilder::new()
        .num_threads(args.common.jobs.max(1))
        .build()?
        .install(|| evaluate(&settings))?;
    if let Some(t2) = &report.theorem2 {
        manifest.outputs.push("growth.csv".into());
        write_text(&out.join("growth.csv"), &t2.trace.to_csv())?;
    }
    #[derive(Serialize)]
    struct Body<'a> {
        report: &'a MeanfieldReport,
    }
    write_json(
        &out.join("meanfield.json"),
        &Envelope {
            manifest: &manifest,
            body: Body { report: &report },
            timing: Timestamps::since(started),
        },
    )?;
    if let Some(p) = &report.bsb1 {
        println!("bsb1: q* = {:.12}, c* = {:.12}, residual {:.2e}", p.point.q, p.point.c, p.point.residual);
    }
    if let Some(s) = &report.theorem3 {
        let show = |name: &str, r: &meanfield::SubspaceReport| match r.eigenvalue {
            Some(l) => println!("{name}: dim {}, λ = {l:.6}, residual {:.2e}", r.dim, r.residual),
            None => println!("{name}: dim {}, empty", r.dim),
        };
        show("V_G", &s.g);
        show("V_L", &s.l);
        show("V_M", &s.m);
    }
    if let Some(t) = &report.theorem1 {
        println!("theorem1: {}/{} strict improvements, C = I ratio {}", t.wins, t.trials, t.identity_ratio);
    }
    if let Some(t) = &report.theorem2 {
        println!(
            "theorem2: identity error {:.2e}, measured rate {:?}, λ_G {:.3e}",
            t.identity_error, t.measured_rate, t.lambda_g
        );
    }
    if !report.passed {
        return Err(VerificationFailed {
            failures: report.failures.clone(),
        }
        .into());
    }
    println!("all checks passed");
    Ok(())
}
