// Temporary probe for pipeline behavior; removed before finalizing.
use condreg::dataset::{synth_scale_up, synth_sine};
use condreg::RunConfig;

#[test]
#[ignore]
fn probe_sine_fit() {
    for seed in 10..20u64 {
        let data = synth_sine(1000, 0.05, seed).unwrap();
        let config = RunConfig {
            k: 2,
            mu: 0.5,
            s0: 0.001,
            epsilon: Some(0.15),
            r_init: 5.0,
            r_final: 0.06,
            seed,
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        match condreg::fit(&data, &config) {
            Ok(outcome) => {
                println!(
                    "seed {seed}: {} candidates in {:.1?}, selected = {:?}",
                    outcome.report.candidates.len(),
                    t0.elapsed(),
                    outcome.report.selected_index
                );
                for (i, c) in outcome.report.candidates.iter().enumerate() {
                    let sel = if outcome.report.selected_index == Some(i) { "*" } else { " " };
                    match (&c.dnf, c.coverage, c.cond_loss) {
                        (Some(dnf), Some(cov), Some(loss)) => {
                            let desc: Vec<String> = dnf
                                .terms()
                                .iter()
                                .map(|t| {
                                    t.literals()
                                        .iter()
                                        .map(|l| format!("{}x{}", if l.negated { "!" } else { "" }, l.attr + 1))
                                        .collect::<Vec<_>>()
                                        .join("&")
                                })
                                .collect();
                            println!(
                                "  {sel} u=({:+.3},{:+.3}) cov={cov:.3} loss={loss:.4} dnf={}",
                                c.u[0],
                                c.u[1],
                                desc.join(" | ")
                            );
                        }
                        _ => println!("  {sel} u=({:+.3},{:+.3}) cover failed: {:?}", c.u[0], c.u[1], c.cover_error),
                    }
                }
            }
            Err(e) => println!("seed {seed}: fit failed: {e}"),
        }
    }
}

#[test]
#[ignore]
fn probe_scale_up_fit() {
    let seed: u64 = std::env::var("PROBE_SEED").map(|v| v.parse().unwrap()).unwrap_or(0);
    let s0: f64 = std::env::var("PROBE_S0").map(|v| v.parse().unwrap()).unwrap_or(0.1);
    let cq: f64 = std::env::var("PROBE_CQ").map(|v| v.parse().unwrap()).unwrap_or(8.0);
    let r_init: f64 = std::env::var("PROBE_RINIT").map(|v| v.parse().unwrap()).unwrap_or(100.0);
    let r_final: f64 = std::env::var("PROBE_RFINAL").map(|v| v.parse().unwrap()).unwrap_or(1.0);
    let (data, spec) = synth_scale_up(7, 5, 10000, 0.5, seed).unwrap();
    let config = RunConfig {
        k: 2,
        mu: 0.5,
        s0,
        c_q: cq,
        r_init,
        r_final,
        seed,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    match condreg::fit(&data, &config) {
        Ok(outcome) => {
            let planted: std::collections::HashSet<usize> =
                spec.planted_rows(&data).into_iter().collect();
            println!(
                "{} candidates in {:.1?}; w* = {:?}",
                outcome.report.candidates.len(),
                t0.elapsed(),
                spec.w_star
            );
            for (i, c) in outcome.report.candidates.iter().enumerate() {
                let sel = if outcome.report.selected_index == Some(i) { "*" } else { " " };
                let dist: f64 = c
                    .u
                    .iter()
                    .zip(&spec.w_star)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                match (&c.dnf, c.coverage, c.cond_loss) {
                    (Some(dnf), Some(cov), Some(loss)) => {
                        let covered: std::collections::HashSet<usize> = (0..data.n_rows())
                            .filter(|&r| dnf.satisfies(data.x_row(r)))
                            .collect();
                        let inter = covered.intersection(&planted).count();
                        let overlap = inter as f64 / covered.len().max(planted.len()) as f64;
                        println!(
                            "  {sel} |u-w*|={dist:.2} cov={cov:.3} loss={loss:.1} dnf_terms={} overlap={overlap:.3}",
                            dnf.terms().len()
                        );
                    }
                    _ => println!("  {sel} |u-w*|={dist:.2} cover failed: {:?}", c.cover_error),
                }
            }
        }
        Err(e) => println!("fit failed: {e}"),
    }
}

#[test]
#[ignore]
fn probe_scale_up_initial_sdp() {
    use condreg::loss::QuadLoss;
    use condreg::solver::{solve_soft_sdp, SolverConfig};
    use condreg::terms::{assign_members, disjointify, enumerate_terms, prune_small};
    let (data, _) = synth_scale_up(7, 5, 10000, 0.5, 0).unwrap();
    let terms = assign_members(enumerate_terms(7, 2).unwrap(), &data).unwrap();
    let inst = disjointify(&data, &terms);
    let pruned = prune_small(&inst, 0.025, 0.5, data.n_rows()).unwrap();
    let losses: Vec<QuadLoss> =
        pruned.sub_data.iter().map(|td| QuadLoss::from_term_data(td, 0.0)).collect();
    let m = losses.len();
    let n_prime: f64 = pruned.n_prime as f64;
    println!("m={m} n_prime={n_prime}");
    let c = vec![1.0; m];
    let origin = nalgebra::DVector::zeros(5);
    for s0 in [0.1, 0.001] {
        let lambda = (8.0f64 * 5000.0 * n_prime).sqrt() * 4.0 * s0;
        for tol in [1e-4, 1e-6] {
            let cfg = SolverConfig { tol, max_iter: 100_000 };
            let t0 = std::time::Instant::now();
            match solve_soft_sdp(&losses, &c, lambda, &origin, 30.0, &cfg) {
                Ok(sol) => println!(
                    "s0={s0} tol={tol:.0e}: tr={:.3} iters={} ({:.1?})",
                    sol.y.trace(),
                    sol.iterations,
                    t0.elapsed()
                ),
                Err(condreg::Error::SolverStalled { iterations, residual, .. }) => {
                    println!("s0={s0} tol={tol:.0e}: STALL iters={iterations} resid={residual:.2e} ({:.1?})", t0.elapsed())
                }
                Err(e) => println!("s0={s0} tol={tol:.0e}: {e}"),
            }
        }
    }
}

#[test]
#[ignore]
fn probe_scale_up_wstar_norms() {
    for seed in 0..40u64 {
        let (_, spec) = synth_scale_up(7, 5, 100, 0.5, seed).unwrap();
        let nsq: f64 = spec.w_star.iter().map(|w| w * w).sum();
        if nsq > 240.0 {
            println!("seed {seed}: |w*|^2 = {nsq:.1}");
        }
    }
}

#[test]
#[ignore]
fn probe_paper_size_scale_up() {
    let seed = 1u64;
    let (data, spec) = synth_scale_up(7, 10, 100000, 0.5, seed).unwrap();
    let config = RunConfig {
        k: 2,
        mu: 0.5,
        s0: 0.001,
        c_q: 3.0,
        r_init: 100.0,
        r_final: 1.0,
        gamma: 0.1,
        seed,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    match condreg::fit(&data, &config) {
        Ok(outcome) => {
            let planted: std::collections::HashSet<usize> =
                spec.planted_rows(&data).into_iter().collect();
            println!("{} candidates in {:.1?}", outcome.report.candidates.len(), t0.elapsed());
            for (i, c) in outcome.report.candidates.iter().enumerate() {
                let sel = if outcome.report.selected_index == Some(i) { "*" } else { " " };
                let dist: f64 = c
                    .u
                    .iter()
                    .zip(&spec.w_star)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if let (Some(dnf), Some(cov), Some(loss)) = (&c.dnf, c.coverage, c.cond_loss) {
                    let covered: std::collections::HashSet<usize> = (0..data.n_rows())
                        .filter(|&r| dnf.satisfies(data.x_row(r)))
                        .collect();
                    let inter = covered.intersection(&planted).count();
                    println!(
                        "  {sel} |u-w*|={dist:.2} cov={cov:.3} loss={loss:.1} terms={} recall={:.3} prec={:.3}",
                        dnf.terms().len(),
                        inter as f64 / planted.len() as f64,
                        inter as f64 / covered.len() as f64,
                    );
                } else {
                    println!("  {sel} |u-w*|={dist:.2} cover failed: {:?}", c.cover_error);
                }
            }
        }
        Err(e) => println!("fit failed: {e}"),
    }
}
// appended probe
#[test]
#[ignore]
fn probe_c5_run_a() {
    use condreg::loss::QuadLoss;
    use condreg::soft_regression::{run_soft_regression, MassTarget, SoftRegConfig};
    use condreg::terms::{assign_members, disjointify, enumerate_terms, prune_small, sample_random_dnf};
    use condreg::dataset::synth_line_uniform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(3 ^ 0x5EED_0001);
    let (data, _spec) = loop {
        let dnf = sample_random_dnf(6, 2, 4, &mut rng);
        if let Ok(out) = synth_line_uniform(6, &dnf, 0.25, 1000, -1.5, 5.0, 3) { break out; }
    };
    let terms = assign_members(enumerate_terms(6, 2).unwrap(), &data).unwrap();
    let inst = disjointify(&data, &terms);
    let pruned = prune_small(&inst, 0.025, 0.25, data.n_rows()).unwrap();
    let losses: Vec<QuadLoss> = pruned.sub_data.iter().map(|td| QuadLoss::from_term_data(td, 0.0)).collect();
    let mass = MassTarget { mu_n: 250.0, n_prime: pruned.n_prime as f64 };
    let cfg = SoftRegConfig { record_history: true, ..Default::default() };
    match run_soft_regression(&losses, mass, 0.01, 10.0, &nalgebra::DVector::zeros(1), &cfg) {
        Ok(state) => println!("OK iter={} tr={}", state.iteration, state.y_hat.trace()),
        Err(e) => println!("ERR: {e}"),
    }
}

#[test]
#[ignore]
fn probe_seed2_blocking() {
    use condreg::list_regression::{run_list_regression, ListRegParams};
    use condreg::loss::QuadLoss;
    use condreg::soft_regression::{MassTarget, SoftRegConfig};
    use condreg::terms::{assign_members, disjointify, enumerate_terms, prune_small};
    for seed in [2u64, 5] {
        let (data, spec) = synth_scale_up(7, 5, 10_000, 0.5, seed).unwrap();
        let w_star = nalgebra::DVector::from_column_slice(&spec.w_star);
        println!("seed {seed}: |w*| = {:.2}", w_star.norm());
        let terms = assign_members(enumerate_terms(7, 2).unwrap(), &data).unwrap();
        let inst = disjointify(&data, &terms);
        let pruned = prune_small(&inst, 0.025, 0.5, data.n_rows()).unwrap();
        let losses: Vec<QuadLoss> =
            pruned.sub_data.iter().map(|td| QuadLoss::from_term_data(td, 0.0)).collect();
        let params = ListRegParams {
            mass: MassTarget { mu_n: 5000.0, n_prime: pruned.n_prime as f64 },
            s0: 0.001,
            epsilon: 0.025,
            delta: 0.05,
            r_init: 30.0,
            r_final: 1.5,
            c_q: 3.0,
            c_rho: 1.0,
        };
        let res = run_list_regression(&losses, &params, &SoftRegConfig::default(), seed).unwrap();
        let mut best_term = f64::INFINITY;
        for w in res.w_hat_final.iter().flatten() {
            best_term = best_term.min((w - &w_star).norm());
        }
        println!("  min over assigned terms |w_hat - w*| = {best_term:.2}");
        for (j, u) in res.candidates.iter().enumerate() {
            println!("  candidate {j}: |u - w*| = {:.2}, |u| = {:.2}", (u - &w_star).norm(), u.norm());
        }
    }
}
