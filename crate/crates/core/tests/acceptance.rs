//! Acceptance criteria, one check per criterion. Prints one
//! `AC<n> PASS|FAIL: ...` line each and exits non-zero if any fails.
//! `--include-ignored` also runs the 500×500 smoke run.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use walrasian::economy::{
    check_homogeneity, check_walras, consumer_demand, demand_oracle, scarf_excess_demand, Consumer, ExcessDemand,
    ExchangeEconomy, ScarfEconomy, Utility,
};
use walrasian::gen::{generate_economy, initial_prices, GenSpec, Mix, UtilityKind};
use walrasian::kernels::{FeasibleSet, Kernel};
use walrasian::linalg::{dist2, dist_inf, dot, norm2, norm_inf};
use walrasian::tatonnement::{
    equilibrium_certificate, mirror_extratatonnement, mirror_tatonnement, price_problem, StepSize, TatonnementConfig,
};
use walrasian::vi::{self, minty_certificate, SolverConfig, ViProblem};

const CENTER: [f64; 3] = [1.0 / 3.0; 3];
const STARTS: [[f64; 3]; 5] = [[0.5, 0.3, 0.2], [0.1, 0.1, 0.8], [0.7, 0.2, 0.1], [0.2, 0.6, 0.2], [0.05, 0.45, 0.5]];

struct Verdict {
    ac: u32,
    ok: bool,
    detail: String,
}

fn report(ac: u32, ok: bool, detail: String) -> Verdict {
    Verdict { ac, ok, detail }
}

fn scarf_config(horizon: usize) -> TatonnementConfig {
    TatonnementConfig::new(Kernel::euclidean(), StepSize::Auto, horizon)
}

fn ac01_scarf_extratatonnement_converges() -> Verdict {
    let simplex = FeasibleSet::simplex(3).unwrap();
    let mut worst_dist = 0.0f64;
    let mut worst_time = 0.0f64;
    for p0 in STARTS {
        let t = Instant::now();
        let run = mirror_extratatonnement(ScarfEconomy::new(), &simplex, &scarf_config(50_000), &p0).unwrap();
        worst_time = worst_time.max(t.elapsed().as_secs_f64());
        worst_dist = worst_dist.max(dist_inf(&run.best_prices, &CENTER));
    }
    let ok = worst_dist <= 1e-3 && worst_time < 5.0;
    report(
        1,
        ok,
        format!("max l_inf distance {worst_dist:.3e}, slowest run {worst_time:.3}s over {} starts", STARTS.len()),
    )
}

fn ac02_scarf_tatonnement_spirals_out() -> Verdict {
    let simplex = FeasibleSet::simplex(3).unwrap();
    let mut ok = true;
    let mut details = Vec::new();
    for p0 in STARTS {
        let run = mirror_tatonnement(ScarfEconomy::new(), &simplex, &scarf_config(50_000), &p0).unwrap();
        let mut dists: Vec<f64> = run.trace.records.iter().map(|r| dist_inf(&r.x, &CENTER)).collect();
        dists.push(dist_inf(&run.last_prices, &CENTER));
        let initial = dists[0];
        let last = *dists.last().unwrap();
        let tail = &dists[dists.len() / 2..];
        let decreases = tail.windows(2).filter(|w| w[1] < w[0]).count();
        let this_ok = last > initial && decreases == 0;
        ok &= this_ok;
        details.push(format!("d0={initial:.3} dT={last:.3} tail-decreases={decreases}/{}", tail.len() - 1));
    }
    report(2, ok, details.join("; "))
}

fn ac03_rotation_gradient_vs_extragradient() -> Verdict {
    let set = FeasibleSet::cube(2, -10.0, 10.0).unwrap();
    let problem = ViProblem::new(set, vi::rotation_operator(), "rotation");

    let g =
        vi::mirror_gradient_solve(&problem, &SolverConfig::new(0.05, 200, Kernel::euclidean()), &[1.0, 0.0]).unwrap();
    let mut norms: Vec<f64> = g.records.iter().map(|r| norm2(&r.x)).collect();
    norms.push(norm2(&g.last_iterate));
    let mut run = 0;
    let mut longest = 0;
    for w in norms.windows(2) {
        run = if w[1] > w[0] { run + 1 } else { 0 };
        longest = longest.max(run);
    }

    let e = vi::mirror_extragradient_solve(&problem, &SolverConfig::new(0.25, 400, Kernel::euclidean()), &[1.0, 0.0])
        .unwrap();
    let mut xs: Vec<Vec<f64>> = e.records.iter().map(|r| r.x.clone()).collect();
    xs.push(e.last_iterate.clone());
    let mut worst = 0.0f64;
    let mut steps = 0;
    for w in xs.windows(2) {
        if norm2(&w[0]) <= 1e-10 {
            break;
        }
        let ratio = dot(&w[1], &w[1]) / dot(&w[0], &w[0]);
        worst = worst.max((ratio - 0.8125).abs());
        steps += 1;
    }
    let reached = xs.iter().any(|x| norm2(x) <= 1e-10);
    let ok = longest >= 50 && worst <= 1e-6 && reached;
    report(
        3,
        ok,
        format!("gradient norm grew {longest} consecutive steps; extragradient |ratio - 0.8125| <= {worst:.2e} over {steps} steps"),
    )
}

fn ac04_non_minty_scalar_example() -> Verdict {
    let up = ViProblem::new(FeasibleSet::cube(1, 0.0, 3.0).unwrap(), vi::scalar_nonminty_operator(), "1-x^2");
    let t = vi::mirror_extragradient_solve(&up, &SolverConfig::new(0.1, 200, Kernel::euclidean()), &[2.0]).unwrap();
    let mut xs: Vec<f64> = t.records.iter().map(|r| r.x[0]).collect();
    xs.push(t.last_iterate[0]);
    let monotone = xs.windows(2).all(|w| w[1] > w[0] || (w[0] == 3.0 && w[1] == 3.0));
    let reached_top = *xs.last().unwrap() == 3.0;

    let local = ViProblem::new(FeasibleSet::cube(1, -2.0, 0.5).unwrap(), vi::scalar_nonminty_operator(), "1-x^2");
    let t = vi::mirror_extragradient_solve(&local, &SolverConfig::new(0.1, 2000, Kernel::euclidean()), &[0.0]).unwrap();
    let err = (t.best_iterate[0] + 1.0).abs().max((t.last_iterate[0] + 1.0).abs());

    let ok = monotone && reached_top && err <= 1e-6;
    report(
        4,
        ok,
        format!("x0=2 increasing={monotone} reaches 3={reached_top}; x0=0 on [-2,0.5] error to -1 = {err:.2e}"),
    )
}

fn ac05_balanced_economies_minty_at_origin() -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..50 {
        let e = generate_economy(&GenSpec::new(seed, 10, 5, Mix::uniform())).unwrap();
        let problem = price_problem(&e, FeasibleSet::unit_box(5).unwrap()).unwrap();
        let c = minty_certificate(&problem, &[0.0; 5], 1000, seed).unwrap();
        worst = worst.max(c.max_violation);
    }
    let ok = worst <= 1e-8;
    report(5, ok, format!("max violation at origin over 50 economies x 1000 samples = {worst:.3e}"))
}

fn ac06_gap_certifies_walrasian_equilibrium() -> Verdict {
    let box4 = FeasibleSet::unit_box(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pairs = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut small_gaps = 0;
    for seed in 0..50 {
        let e = generate_economy(&GenSpec::new(100 + seed, 5, 4, Mix::uniform())).unwrap();
        let mut points: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        // the tail of a converging run supplies points with small gaps
        let cfg = TatonnementConfig::new(Kernel::entropy(), StepSize::Auto, 5000).with_stop_gap(1e-7);
        let p0 = initial_prices(seed, &box4).unwrap();
        let run = mirror_extratatonnement(&e, &box4, &cfg, &p0).unwrap();
        points.extend(run.trace.records.iter().rev().take(10).map(|r| r.x_half.clone()));
        for p in points {
            let c = equilibrium_certificate(&e, &p, &box4).unwrap();
            worst = worst.max(c.eps_feasibility - c.gap_value).max(c.walras_residual - c.gap_value);
            small_gaps += usize::from(c.gap_value <= 1e-2);
            pairs += 1;
        }
    }
    let ok = pairs >= 1000 && worst <= 1e-9;
    report(6, ok, format!("{pairs} pairs ({small_gaps} with gap <= 1e-2); max residual - gap = {worst:.3e}"))
}

fn oracle_shares(c: &Consumer, p: &[f64], x: &[f64]) -> Vec<f64> {
    let b = dot(p, &c.endowment);
    x.iter().zip(p).map(|(xj, pj)| xj * pj / b).collect()
}

fn ac07_closed_form_demand_matches_oracle() -> Verdict {
    let start = Instant::now();
    let families = [
        Utility::CobbDouglas,
        Utility::Leontief,
        Utility::Ces { rho: -8.0 },
        Utility::Ces { rho: -1.5 },
        Utility::Ces { rho: 0.5 },
        Utility::Ces { rho: 0.9 },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_cells = 0.0f64;
    let mut utility_shortfall = 0.0f64;
    let mut count = 0;
    for i in 0..100 {
        let n = 2 + i % 2;
        let utility = families[i % families.len()];
        let resolution = if n == 2 { 401 } else { 201 };
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let c = Consumer::new(utility, v, e).unwrap();
        let closed = consumer_demand(&c, &p).unwrap();
        let grid = demand_oracle(&c, &p, resolution).unwrap();
        let cell = 1.0 / (resolution - 1) as f64;
        let cells = dist_inf(&oracle_shares(&c, &p, &closed), &oracle_shares(&c, &p, &grid)) / cell;
        worst_cells = worst_cells.max(cells);
        let (uc, ug) = (c.utility_value(&closed), c.utility_value(&grid));
        utility_shortfall = utility_shortfall.max(ug - uc);
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_cells <= 2.0 && utility_shortfall <= 1e-9 && secs < 30.0;
    report(
        7,
        ok,
        format!("{count} instances, worst distance {worst_cells:.2} grid cells, grid beats closed form by {utility_shortfall:.1e}, {secs:.2}s"),
    )
}

fn ac08_best_iterate_rate() -> Verdict {
    let simplex = FeasibleSet::simplex(3).unwrap();
    let mut worst = f64::NEG_INFINITY;
    let mut fits = Vec::new();
    for (i, p0) in STARTS.iter().enumerate() {
        for step in [StepSize::Auto, StepSize::Fixed(0.05)] {
            let cfg = TatonnementConfig::new(Kernel::euclidean(), step, 10_000);
            let run = mirror_extratatonnement(ScarfEconomy::new(), &simplex, &cfg, p0).unwrap();
            let slope = vi::rate_slope(&run.trace).unwrap();
            worst = worst.max(slope);
            fits.push(format!("start{i}/{step:?}: {slope:.2}"));
        }
    }
    let ok = worst <= -0.45;
    report(8, ok, format!("max slope {worst:.3} ({})", fits.join(", ")))
}

fn desk_scale_run(kind: Option<UtilityKind>, seed: u64, n: usize) -> (bool, f64, usize) {
    let mix = kind.map(Mix::only).unwrap_or_else(Mix::uniform);
    let e = generate_economy(&GenSpec::new(seed, n, n, mix)).unwrap();
    let space = FeasibleSet::unit_box(n).unwrap();
    let cfg = TatonnementConfig::new(Kernel::entropy(), StepSize::Auto, 20_000).with_stop_gap(1e-3);
    let p0 = initial_prices(seed, &space).unwrap();
    let run = mirror_extratatonnement(&e, &space, &cfg, &p0).unwrap();
    (run.converged(1e-3), run.pathwise_l_max(), run.trace.iterations)
}

fn ac09_desk_scale_economies_converge() -> Verdict {
    let configs = [
        Some(UtilityKind::CobbDouglas),
        Some(UtilityKind::Leontief),
        Some(UtilityKind::CesSubstitutes),
        Some(UtilityKind::CesComplements),
        None,
    ];
    let mut failures = Vec::new();
    let mut max_iters = 0;
    let mut max_l = 0.0f64;
    for kind in configs {
        for seed in 0..10 {
            let (converged, l, iters) = desk_scale_run(kind, seed, 50);
            max_iters = max_iters.max(iters);
            max_l = max_l.max(l);
            if !converged || !l.is_finite() {
                failures.push(format!("{kind:?}/seed{seed}"));
            }
        }
    }
    let ok = failures.is_empty();
    report(
        9,
        ok,
        format!("50 runs of 50x50, failures {failures:?}, max iterations {max_iters}, max pathwise L {max_l:.3e}"),
    )
}

fn ac09_full_scale_leontief_smoke() -> Verdict {
    let (converged, l, iters) = desk_scale_run(Some(UtilityKind::Leontief), 0, 500);
    report(
        9,
        converged,
        format!("500x500 Leontief seed 0: converged={converged} after {iters} iterations, pathwise L {l:.3e}"),
    )
}

fn ac10_scarf_lipschitz_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..=1.0)).collect();
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..=1.0)).collect();
        let d = dist2(&p, &q);
        if d == 0.0 {
            continue;
        }
        let ratio = dist2(&scarf_excess_demand(&p).unwrap(), &scarf_excess_demand(&q).unwrap()) / d;
        worst = worst.max(ratio);
    }
    let ok = worst <= 12.0 + 1e-9;
    report(10, ok, format!("max Lipschitz ratio over 10^4 pairs in [0.5,1]^3 = {worst:.4}"))
}

fn ac11_homogeneity_and_walras_suites() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut homog_bad = 0;
    let mut walras_bad = 0;
    let mut worst_h = 0.0f64;
    let mut worst_w = 0.0f64;
    for t in 0..500u64 {
        let n = rng.random_range(2..=6);
        let m = rng.random_range(1..=8);
        let economy: ExchangeEconomy = generate_economy(&GenSpec::new(1000 + t, m, n, Mix::uniform())).unwrap();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let lambda = [0.5, 2.0, 10.0][t as usize % 3];
        let z = economy.excess_demand(&p).unwrap();
        let h = check_homogeneity(&economy, &p, lambda).unwrap() / (1.0 + norm_inf(&z));
        worst_h = worst_h.max(h);
        homog_bad += usize::from(h > 1e-9);

        let free = economy.uncapped();
        let zf = free.excess_demand(&p).unwrap();
        let w = check_walras(&free, &p).unwrap() / (1.0 + norm2(&p) * norm2(&zf));
        worst_w = worst_w.max(w);
        walras_bad += usize::from(w > 1e-8);
    }
    let scarf_h = check_homogeneity(&ScarfEconomy::new(), &[0.3, 0.9, 0.4], 3.0).unwrap();
    let ok = homog_bad == 0 && walras_bad == 0 && scarf_h <= 1e-12;
    report(
        11,
        ok,
        format!("500 triples: homogeneity worst {worst_h:.2e} ({homog_bad} bad), Walras worst {worst_w:.2e} ({walras_bad} bad)"),
    )
}

fn main() {
    let checks: [fn() -> Verdict; 11] = [
        ac01_scarf_extratatonnement_converges,
        ac02_scarf_tatonnement_spirals_out,
        ac03_rotation_gradient_vs_extragradient,
        ac04_non_minty_scalar_example,
        ac05_balanced_economies_minty_at_origin,
        ac06_gap_certifies_walrasian_equilibrium,
        ac07_closed_form_demand_matches_oracle,
        ac08_best_iterate_rate,
        ac09_desk_scale_economies_converge,
        ac10_scarf_lipschitz_bound,
        ac11_homogeneity_and_walras_suites,
    ];
    let args: Vec<String> = std::env::args().collect();
    let smoke = args.iter().any(|a| a == "--include-ignored" || a == "--ignored");
    // `cargo test --list` style invocations expect a listing, not a run
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let mut verdicts: Vec<Verdict> = checks.iter().map(|check| check()).collect();
    if smoke {
        verdicts.push(ac09_full_scale_leontief_smoke());
    }
    let mut failed = 0;
    for v in &verdicts {
        println!("AC{} {}: {}", v.ac, if v.ok { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.ok);
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
