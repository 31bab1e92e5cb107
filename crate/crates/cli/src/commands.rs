use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use polycontract::consistency::{build_consistency_set, check_identifiability, ConsistencySet, Dataset, RankReport};
use polycontract::harness::{generate_dataset, monte_carlo_verify, trajectory_contraction, trajectory_csv, VerificationReport};
use polycontract::parallel::Execution;
use polycontract::synthesis::{
    admit_points, check_certificate, compute_contractive_set, enlarge_directional, enlarge_random, CandidatePolytope,
    Certificate, CertificateReport, EnlargeResult, ModelFamily,
};
use serde::{Deserialize, Serialize};

use crate::artifact::{file_name, load, Loaded, Writer};
use crate::config::RunConfig;
use crate::plot;

/// Whether a command's check passed; only `verify` can fail this way.
pub enum Outcome {
    Pass,
    Fail,
}

pub struct RunContext {
    pub config: RunConfig,
    pub out: PathBuf,
    pub exec: Execution,
}

impl RunContext {
    fn writer(&self) -> Result<Writer> {
        Writer::new(&self.out, self.config.digest())
    }

    fn input(&self, configured: &Option<PathBuf>, default: &str) -> PathBuf {
        configured.clone().unwrap_or_else(|| self.out.join(default))
    }

    fn dataset(&self) -> Result<Loaded<Dataset>> {
        load(&self.input(&self.config.paths.dataset, "dataset.json"), "dataset")
    }

    fn consistency(&self) -> Result<Loaded<ConsistencyData>> {
        load(&self.input(&self.config.paths.consistency, "consistency.json"), "consistency")
    }

    fn certificate(&self) -> Result<Loaded<CertificateData>> {
        load(&self.input(&self.config.paths.certificate, "certificate.json"), "certificate")
    }

    fn family(&self, cs: &ConsistencySet) -> Result<ModelFamily> {
        Ok(ModelFamily::new(&cs.dictionary, cs.vertices.clone(), self.config.shift_bounds.clone(), self.exec)?)
    }
}

#[derive(Serialize, Deserialize)]
pub struct ConsistencyData {
    pub q: usize,
    pub block_counts: Vec<usize>,
    pub rank: RankReport,
    pub set: ConsistencySet,
}

#[derive(Serialize, Deserialize)]
pub struct ScalingSummary {
    pub alpha: f64,
    pub argmin: (usize, usize),
    pub certified_alpha: f64,
    pub state_limit: f64,
    pub capped_pairs: usize,
    pub subproblems: usize,
}

#[derive(Serialize, Deserialize)]
pub struct CertificateData {
    pub scaling: ScalingSummary,
    pub certificate: Certificate,
}

#[derive(Serialize, Deserialize)]
pub struct EnlargeData {
    pub certified_area: f64,
    pub final_area: f64,
    pub result: EnlargeResult,
}

#[derive(Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub runs: usize,
    pub steps: usize,
    pub violations: usize,
    /// Largest `max_i H_i x_k − λ_w^k` seen.
    pub worst_excess: f64,
}

#[derive(Serialize, Deserialize)]
pub struct VerifyData {
    pub passed: bool,
    pub certificate_check: CertificateReport,
    pub monte_carlo: VerificationReport,
    pub trajectories: TrajectorySummary,
}

pub fn simulate(ctx: &RunContext) -> Result<Outcome> {
    let sys = ctx.config.system()?;
    let data = generate_dataset(&sys, ctx.config.records, ctx.config.seed)?;
    let w = ctx.writer()?;
    w.json("dataset.json", "dataset", &[], &data)?;
    w.text("dataset.csv", &data.to_csv())?;
    println!("wrote {} records to {}", data.len(), ctx.out.join("dataset.json").display());
    Ok(Outcome::Pass)
}

pub fn consistency(ctx: &RunContext) -> Result<Outcome> {
    let input = ctx.dataset()?;
    let data = input.data();
    let sys = ctx.config.system()?;
    let out_of_bounds = data.count_out_of_bounds(&sys.state_set, &sys.input_set);
    if out_of_bounds > 0 {
        eprintln!("warning: {out_of_bounds} records lie outside the state or input set");
    }
    let rank = check_identifiability(data, &sys.dictionary);
    if !rank.identifiable() {
        bail!(
            "data matrix has rank {} < {}: the consistency set is unbounded, collect more informative data",
            rank.rank,
            rank.required
        );
    }
    let mut set = build_consistency_set(data, &sys.dictionary, ctx.config.epsilon)?;
    set.enumerate_vertices(ctx.exec)?;
    let out = ConsistencyData { q: set.vertices.len(), block_counts: set.block_counts(), rank, set };
    ctx.writer()?.json("consistency.json", "consistency", &[(&file_name(&input.path), &input.digest)], &out)?;
    println!("q = {} (block vertex counts {:?})", out.q, out.block_counts);
    Ok(Outcome::Pass)
}

pub fn synthesize(ctx: &RunContext) -> Result<Outcome> {
    let input = ctx.consistency()?;
    let cs = &input.data().set;
    let family = ctx.family(cs)?;
    let mut settings = ctx.config.settings()?;
    settings.execution = ctx.exec;
    let omega0 = CandidatePolytope::initial(cs.state_dim(), ctx.config.initial.n_v, ctx.config.initial.radius)?;
    let (scaling, certificate) = compute_contractive_set(&omega0, &family, &settings, &cs.digest())?;
    let summary = ScalingSummary {
        alpha: scaling.alpha,
        argmin: scaling.argmin,
        certified_alpha: scaling.certified_alpha,
        state_limit: scaling.state_limit,
        capped_pairs: scaling.capped_pairs,
        subproblems: family.len() * omega0.vrep.len(),
    };
    println!(
        "alpha = {:.6} (table minimum {:.6} at {:?}), max residual {:.3e}",
        summary.certified_alpha, summary.alpha, summary.argmin, certificate.residuals.max
    );
    let w = ctx.writer()?;
    w.text("certificate_vertices.csv", &certificate.polytope.vrep.to_csv())?;
    let data = CertificateData { scaling: summary, certificate };
    w.json("certificate.json", "certificate", &[(&file_name(&input.path), &input.digest)], &data)?;
    Ok(Outcome::Pass)
}

fn directions(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

pub fn enlarge(ctx: &RunContext) -> Result<Outcome> {
    let cert_in = ctx.certificate()?;
    let cs_in = ctx.consistency()?;
    let cert = &cert_in.data().certificate;
    let family = ctx.family(&cs_in.data().set)?;
    let spec = &ctx.config.enlarge;
    let mut result = enlarge_random(cert, &family, spec.candidates, ctx.config.seed, ctx.exec)?;
    if spec.directions > 0 {
        if cert.polytope.dim() != 2 {
            bail!("directional enlarging is configured for planar systems only");
        }
        let found = enlarge_directional(cert, &family, &directions(spec.directions), ctx.exec)?;
        let mut points = result.candidates.clone();
        points.extend(found.into_iter().filter_map(|d| d.point));
        result = admit_points(cert, &family, &points, ctx.exec)?;
    }
    let certified_area = cert.area()?;
    let final_area = result.areas.last().copied().unwrap_or(certified_area);
    println!(
        "admitted {} of {} candidates; area {:.6} -> {:.6}",
        result.admitted.len(),
        result.candidates.len(),
        certified_area,
        final_area
    );
    let mut csv = String::from("index,x1,x2,u,max_residual\n");
    for a in &result.admitted {
        let coords: Vec<String> = a.point.iter().chain(&a.control).map(|v| v.to_string()).collect();
        csv.push_str(&format!("{},{},{}\n", a.index, coords.join(","), a.max_residual));
    }
    let w = ctx.writer()?;
    w.text("admitted.csv", &csv)?;
    let inputs = [(file_name(&cert_in.path), cert_in.digest.clone()), (file_name(&cs_in.path), cs_in.digest.clone())];
    let inputs: Vec<(&str, &str)> = inputs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    w.json("enlarged.json", "enlarged", &inputs, &EnlargeData { certified_area, final_area, result })?;
    Ok(Outcome::Pass)
}

pub fn verify(ctx: &RunContext) -> Result<Outcome> {
    let cert_in = ctx.certificate()?;
    let cs_in = ctx.consistency()?;
    let cert = &cert_in.data().certificate;
    let family = ctx.family(&cs_in.data().set)?;
    let sys = ctx.config.system()?;
    let check = check_certificate(cert, &family, ctx.exec)?;
    let mc = monte_carlo_verify(cert, &sys, ctx.config.verify.samples, ctx.config.seed, ctx.exec)?;

    let spec = &ctx.config.verify;
    let mut csv = String::new();
    let mut summary = TrajectorySummary { runs: spec.trajectories, steps: spec.steps, violations: 0, worst_excess: f64::NEG_INFINITY };
    if check.passed {
        for k in 0..spec.trajectories as u64 {
            let x0 = cert.polytope.vrep.sample_point(ctx.config.seed.wrapping_add(k));
            let rows = trajectory_contraction(cert, &sys, &x0, spec.steps, ctx.config.seed.wrapping_add(1 << 32).wrapping_add(k))?;
            summary.violations += rows.iter().filter(|r| r.violated).count();
            summary.worst_excess = rows.iter().map(|r| r.level - r.bound).fold(summary.worst_excess, f64::max);
            for (i, line) in trajectory_csv(&rows).lines().enumerate() {
                if i == 0 {
                    if k == 0 {
                        csv.push_str(&format!("run,{line}\n"));
                    }
                } else {
                    csv.push_str(&format!("{k},{line}\n"));
                }
            }
        }
    }
    let passed = check.passed && mc.passed() && summary.violations == 0;
    println!(
        "certificate check {} (max residual {:.3e}); Monte Carlo {} violations in {} samples; trajectories {} violations",
        if check.passed { "passed" } else { "FAILED" },
        check.residuals.max,
        mc.violations,
        mc.samples,
        summary.violations
    );
    let w = ctx.writer()?;
    w.text("trajectories.csv", &csv)?;
    let inputs = [(file_name(&cert_in.path), cert_in.digest.clone()), (file_name(&cs_in.path), cs_in.digest.clone())];
    let inputs: Vec<(&str, &str)> = inputs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let data = VerifyData { passed, certificate_check: check, monte_carlo: mc, trajectories: summary };
    w.json("verify.json", "verification", &inputs, &data)?;
    Ok(if passed { Outcome::Pass } else { Outcome::Fail })
}

pub fn plot(ctx: &RunContext) -> Result<Outcome> {
    let cert_in = ctx.certificate()?;
    let enlarged_path = ctx.input(&ctx.config.paths.enlarged, "enlarged.json");
    let explicit = ctx.config.paths.enlarged.is_some();
    let enlarged: Option<Loaded<EnlargeData>> = if explicit || enlarged_path.exists() {
        Some(load(&enlarged_path, "enlarged")?)
    } else {
        None
    };
    let svg = plot::render(&cert_in.data().certificate, enlarged.as_ref().map(|e| &e.data().result))?;
    let path = ctx.writer()?.text("plot.svg", &svg).context("writing plot")?;
    println!("wrote {}", path.display());
    Ok(Outcome::Pass)
}
