//! End-to-end run on the planar example: data, consistency set, certificate,
//! enlargement and Monte Carlo check.
//!
//! Usage: `cargo run --release --example pipeline -- [seed] [noise] [lambda_w]`

use std::time::Instant;

use polycontract::consistency::build_consistency_set;
use polycontract::geometry::BoxSet;
use polycontract::harness::{generate_dataset, monte_carlo_verify, trajectory_contraction, TrueSystem};
use polycontract::linsolve::InputSet;
use polycontract::parallel::Execution;
use polycontract::synthesis::{admit_points, compute_contractive_set, enlarge_directional, enlarge_random, CandidatePolytope, ModelFamily, SynthesisSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().map_or(Ok(1), |s| s.parse())?;
    let noise: f64 = args.get(1).map_or(Ok(0.4), |s| s.parse())?;
    let lambda_w: f64 = args.get(2).map_or(Ok(0.99), |s| s.parse())?;
    let exec = if args.get(4).is_some_and(|s| s == "seq") { Execution::Sequential } else { Execution::Parallel };
    let candidates: usize = args.get(3).map_or(Ok(20), |s| s.parse())?;

    let mut sys = TrueSystem::planar_example();
    sys.noise = noise;
    let data = generate_dataset(&sys, 30, seed)?;
    let t = Instant::now();
    let mut cs = build_consistency_set(&data, &sys.dictionary, noise)?;
    cs.enumerate_vertices(exec)?;
    println!("q = {} (blocks {:?}) in {:.2?}", cs.vertices.len(), cs.block_counts(), t.elapsed());

    let family = ModelFamily::new(&sys.dictionary, cs.vertices.clone(), None, exec)?;
    println!("shift bounds {:?}", family.shift_bounds);
    let settings = SynthesisSettings::new(
        lambda_w,
        BoxSet::cube(2, noise)?,
        InputSet::Box(sys.input_set.clone()),
        sys.state_set.clone(),
    );
    let mut settings = settings;
    settings.execution = exec;
    let omega0 = CandidatePolytope::regular_polygon(12, 0.25)?;
    let t = Instant::now();
    let (scaling, cert) = compute_contractive_set(&omega0, &family, &settings, &cs.digest())?;
    println!(
        "alpha table min {:.4} at {:?}, state limit {:.3}, joint {:?}, certified {:.4} in {:.2?}",
        scaling.alpha, scaling.argmin, scaling.state_limit, scaling.joint_limits, scaling.certified_alpha, t.elapsed()
    );
    println!("residual max {:.3e}, area {:.4}", cert.residuals.max, cert.area()?);
    let report = monte_carlo_verify(&cert, &sys, 10_000, seed, exec)?;
    println!("monte carlo: {} violations, max margin {:.3e}", report.violations, report.max_margin);
    let (mut bad, mut worst) = (0, f64::NEG_INFINITY);
    for k in 0..100u64 {
        let x0 = cert.polytope.vrep.sample_point(seed.wrapping_mul(1000) + k);
        let rows = trajectory_contraction(&cert, &sys, &x0, 20, seed.wrapping_mul(7919) + k)?;
        bad += rows.iter().filter(|r| r.violated).count();
        worst = rows.iter().map(|r| r.level - r.bound).fold(worst, f64::max);
    }
    println!("trajectories: {bad} violating steps, worst level - bound {worst:.3e}");
    let t = Instant::now();
    let enlarged = enlarge_random(&cert, &family, candidates, seed, exec)?;
    println!("enlarge: {} admitted, areas {:?} in {:.2?}", enlarged.admitted.len(), enlarged.areas, t.elapsed());
    let t = Instant::now();
    let directions: Vec<Vec<f64>> = (0..8)
        .map(|k| {
            let a = std::f64::consts::PI * k as f64 / 4.0;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let found = enlarge_directional(&cert, &family, &directions, exec)?;
    let points: Vec<Vec<f64>> = found.iter().filter_map(|d| d.point.clone()).collect();
    println!("directional points {points:?} in {:.2?}", t.elapsed());
    let grown = admit_points(&cert, &family, &points, exec)?;
    println!("directional: {} admitted, areas {:?}", grown.admitted.len(), grown.areas);
    Ok(())
}
