//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero on any FAIL.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use condlimit_core::audit::{
    audit, check_dphi_bounds, check_phi_power_bound, check_qr_lemma, gaussian_moment_closed,
    gaussian_moment_quadrature, AssumptionReport, ConstantInputs, ConstantSet, GridSpec, QrStatus,
};
use condlimit_core::conditional::{law_charfn, StandardizationKind};
use condlimit_core::fourier::{conditional_slice, prob_s_eq_m, psi_bartlett, ExperimentSpec};
use condlimit_core::harness::{
    dkw_check, fit_rate, mc_conditional_sample, run_rate_experiment, thread_pool_from_env, write_rate_csv, RateConfig,
    RateRow, THREADS_ENV,
};
use condlimit_core::lattice::TailTolerance;
use condlimit_core::zoo::{
    bose_einstein_oracle, branching_oracle, displacement_enumerate, displacement_histogram, occupancy_joint,
    occupancy_oracle, ModelSpec, Offspring,
};
use condlimit_core::{Error, JointPmf, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn model(s: &str) -> ModelSpec {
    s.parse().expect("model spec")
}

fn joint_of(spec: &ModelSpec) -> Result<JointPmf> {
    Ok(spec.build_joint::<f64>()?.joint)
}

const RATE_GRID: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];
const RATE_MODELS: [&str; 2] = ["occupancy:lambda=1", "bose:p=0.5,f=empty"];

fn audits(spec: &ModelSpec, grid: &[usize]) -> Result<Vec<AssumptionReport>> {
    let joint = joint_of(spec)?;
    grid.iter()
        .map(|&n| {
            let m = spec.default_m(&joint, n)?;
            audit(&ExperimentSpec::new(joint.clone(), n, m, 1.0)?, &GridSpec::default())
        })
        .collect()
}

fn c1_occupancy() -> Result<Outcome> {
    let tol = TailTolerance::DEFAULT;
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=8usize {
        for m in 0..=8usize {
            let mut lambdas = vec![0.5, 1.0];
            if m > 0 {
                lambdas.push(m as f64 / n as f64);
            }
            let oracle = occupancy_oracle(m, n)?;
            for lambda in lambdas {
                let joint = occupancy_joint::<f64>(lambda, tol)?;
                let law = conditional_slice(&joint, n, m as i64)?.law;
                worst = worst.max(law.total_variation(&oracle));
                cases += 1;
            }
        }
    }
    outcome(worst <= 1e-10, format!("max TV {worst:.2e} over {cases} cases (tol 1e-10)"))
}

fn c2_bose() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (fname, f) in [("identity", (|z| z) as fn(i64) -> i64), ("empty", |z| i64::from(z == 0))] {
        for p in ["0.3", "0.5", "0.7"] {
            let joint = joint_of(&model(&format!("bose:p={p},f={fname}")))?;
            for n in 1..=5usize {
                for m in 0..=8usize {
                    let law = conditional_slice(&joint, n, m as i64)?.law;
                    worst = worst.max(law.total_variation(&bose_einstein_oracle(m, n, &f)?));
                    cases += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max TV {worst:.2e} over {cases} cases (tol 1e-10)"))
}

fn c3_branching() -> Result<Outcome> {
    let tol = TailTolerance::DEFAULT;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut impossible = Vec::new();
    for off in [Offspring::Uniform02, Offspring::Poisson1, Offspring::Lazy] {
        let pmf = off.pmf::<f64>(tol)?;
        for n in 1..=6 {
            match branching_oracle(&pmf, n) {
                Ok(r) => {
                    worst = worst.max(r.gap);
                    checked += 1;
                }
                // both conditional laws are undefined, so the equivalence holds vacuously
                Err(Error::IllConditioned { prob: 0.0, .. }) => impossible.push(format!("{off:?} N={n}")),
                Err(e) => return Err(e),
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!(
            "max gap {worst:.2e} over {checked} (law, N) cases (tol 1e-12); P(S_N = N-1) = 0 for {}",
            impossible.join(", ")
        ),
    )
}

fn c4_hashing() -> Result<Outcome> {
    let d3 = displacement_enumerate(3)?;
    let exact3 = (d3.prob(0) - 2.0 / 3.0).abs() < 1e-15 && (d3.prob(1) - 1.0 / 3.0).abs() < 1e-15 && d3.len() == 2;
    let samples = 1_000_000usize;
    let mut worst_z = 0.0f64;
    let mut stray = 0u64;
    for l in 1..=6 {
        let exact = displacement_enumerate(l)?;
        let counts = displacement_histogram(l, samples, 2024)?;
        for (d, &c) in counts.iter().enumerate() {
            let p = exact.prob(d as i64);
            if p == 0.0 {
                stray += c;
                continue;
            }
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            worst_z = worst_z.max((c as f64 / samples as f64 - p).abs() / se);
        }
    }
    outcome(
        exact3 && worst_z <= 4.0 && stray == 0,
        format!("d3 exact: {exact3}; l <= 6 with 1e6 draws: max |z| {worst_z:.2}, draws on null atoms {stray}"),
    )
}

fn c5_bartlett() -> Result<Outcome> {
    let models = [
        "occupancy:lambda=1",
        "bose:p=0.5,f=identity",
        "bose:p=0.5,f=empty",
        "branching:offspring=poisson1,K=0",
        "branching:offspring=uniform02,K=0",
        "branching:offspring=lazy,K=1",
        "forest:mu=0.5,K=1",
        "hashing:mu=0.5,lmax=8,mc=0",
    ];
    let mut worst0 = 0.0f64;
    let mut worst_t = 0.0f64;
    let mut cases = 0;
    for name in models {
        let spec = model(name);
        let joint = joint_of(&spec)?;
        for n in [16usize, 64, 256] {
            let mut m = spec.default_m(&joint, n)?;
            // the {0,2} offspring law has span 2, so S_N = N − 1 is impossible for even N
            if name.contains("uniform02") && m % 2 != 0 {
                m += 1;
            }
            let ex = ExperimentSpec::new(joint.clone(), n, m, 1.0)?;
            let p = ex.prob_m()?;
            let law = ex.conditional()?.law;
            let psi0 = psi_bartlett(&ex, 0.0)?.value;
            worst0 = worst0.max((psi0 - TAU * p).norm() / (TAU * p));
            for t in [0.1, 0.5] {
                let ratio = psi_bartlett(&ex, t)?.value / (TAU * p);
                worst_t = worst_t.max((ratio - law_charfn(&law, t)).norm());
            }
            cases += 1;
        }
    }
    outcome(
        worst0 <= 1e-8 && worst_t <= 1e-8,
        format!("{cases} (model, N) cases: psi(0) rel err {worst0:.2e}, charfn err {worst_t:.2e} (tol 1e-8)"),
    )
}

fn c6_moments() -> Result<Outcome> {
    let grid = [16usize, 32, 64, 128, 256, 512];
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["occupancy:lambda=1", "forest:mu=0.5,K=1"] {
        let spec = model(name);
        let run = run_rate_experiment(&spec, &grid, &RateConfig::default())?;
        let consts = ConstantSet::new(ConstantInputs::from_reports(&audits(&spec, &grid)?))?;
        let dev1 = run.rows.iter().map(|r| r.dev1).fold(0.0, f64::max);
        let dev2 = run.rows.iter().map(|r| r.dev2).fold(0.0, f64::max);
        let ok = run.failures.is_empty()
            && run.rows.len() == grid.len()
            && dev1 <= consts.d1
            && dev2 <= consts.d2
            && dev1 <= 1.0
            && dev2 <= 5.0;
        pass &= ok;
        parts.push(format!("{name}: dev1 {dev1:.3} (d1 {:.3e}), dev2 {dev2:.3} (d2 {:.3e})", consts.d1, consts.d2));
    }
    outcome(pass, parts.join("; "))
}

fn rate_runs() -> Result<Vec<(ModelSpec, Vec<RateRow>)>> {
    RATE_MODELS
        .iter()
        .map(|name| {
            let spec = model(name);
            let run = run_rate_experiment(&spec, &RATE_GRID, &RateConfig::default())?;
            if let Some((n, why)) = run.failures.first() {
                return Err(Error::NumericalFailure(format!("{name} N = {n}: {why}")));
            }
            Ok((spec, run.rows))
        })
        .collect()
}

fn spread(rows: &[RateRow], f: fn(&RateRow) -> f64) -> f64 {
    let upper = &rows[rows.len() / 2..];
    let hi = upper.iter().map(f).fold(f64::MIN, f64::max);
    let lo = upper.iter().map(f).fold(f64::MAX, f64::min);
    hi / lo
}

fn c7_rate(runs: &[(ModelSpec, Vec<RateRow>)]) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (spec, rows) in runs {
        let a = fit_rate(rows, StandardizationKind::Affine)?.slope;
        let b = fit_rate(rows, StandardizationKind::Natural)?.slope;
        let sa = spread(rows, |r| r.scaled_affine);
        let sb = spread(rows, |r| r.scaled_natural);
        let ok = [a, b].iter().all(|s| (-0.65..=-0.35).contains(s)) && sa < 3.0 && sb < 3.0;
        pass &= ok;
        parts.push(format!("{spec}: slopes {a:.3}/{b:.3}, upper-half spread {sa:.3}/{sb:.3}"));
    }
    outcome(pass, parts.join("; "))
}

fn c8_theorem(runs: &[(ModelSpec, Vec<RateRow>)]) -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (spec, rows) in runs {
        let consts = ConstantSet::new(ConstantInputs::from_reports(&audits(spec, &RATE_GRID)?))?;
        let sa = rows.iter().map(|r| r.scaled_affine).fold(0.0, f64::max);
        let sb = rows.iter().map(|r| r.scaled_natural).fold(0.0, f64::max);
        pass &= sa <= consts.c_final && sb <= consts.c_tilde;
        parts.push(format!(
            "{spec}: max scaled {sa:.3} <= C {:.3e}, {sb:.3} <= C~ {:.3e}",
            consts.c_final, consts.c_tilde
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c9_lemmas() -> Result<Outcome> {
    let spec = model("occupancy:lambda=1");
    let joint = joint_of(&spec)?;
    let mut pass = true;
    let mut parts = Vec::new();
    // 1024 is the largest N of the rate grid; 8192 is the first power of two where the QR precondition holds
    for n in [1024usize, 8192] {
        let ex = ExperimentSpec::new(joint.clone(), n, n as i64, 1.0)?;
        let report = audit(&ex, &GridSpec::default())?;
        let power = [1usize, 2, 3]
            .iter()
            .map(|&l| check_phi_power_bound(&ex, &report, l, 200))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let d = check_dphi_bounds(&ex, &report, 200)?;
        let qr = match check_qr_lemma(&ex, &report, 200)? {
            QrStatus::Checked { slack, .. } => {
                pass &= slack >= -1e-12;
                format!("qr {slack:.3e}")
            }
            QrStatus::Skipped { .. } => format!("qr skipped (l1 {:.4}, l2 {:.4} above 12^-1.5)", report.l1, report.l2),
        };
        pass &= power >= -1e-12 && d.first_order >= -1e-12 && d.second_order >= -1e-12;
        parts.push(format!("N={n}: power {power:.3e}, dphi {:.3e}/{:.3e}, {qr}", d.first_order, d.second_order));
    }
    outcome(pass, parts.join("; "))
}

fn c10_mc() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, n, proposals) in
        [("occupancy:lambda=1", 64usize, 1_000_000usize), ("hashing:mu=0.5,lmax=8,mc=0", 32, 1_000_000)]
    {
        let spec = model(name);
        let joint = joint_of(&spec)?;
        let m = spec.default_m(&joint, n)?;
        let exact = conditional_slice(&joint, n, m)?;
        let sample = mc_conditional_sample(&joint, n, m, proposals, 7)?;
        let dkw = dkw_check(&sample.law, &exact.law, sample.accepted, 0.001);
        let p = prob_s_eq_m(&joint.marginal_x(), n, m)?;
        let sigma = (p * (1.0 - p) / sample.proposals as f64).sqrt();
        let z = (sample.accept_rate - p) / sigma;
        pass &= dkw.pass && z.abs() <= 3.0;
        parts.push(format!(
            "{name} N={n}: sup diff {:.4} vs band {:.4} on {} accepted, accept z {z:.2}",
            dkw.sup_diff, dkw.band, sample.accepted
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c11_constants() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for a in [0.01, 0.05, 1.0 / 3.0, 2.0 / 3.0, 1.0, 4.0] {
        for k in 1..=4 {
            let closed = gaussian_moment_closed(k, a);
            worst = worst.max((gaussian_moment_quadrature(k, a)? - closed).abs() / closed);
        }
    }
    let base = ConstantInputs {
        c1: 2.0,
        c2_tilde: 0.1,
        c2: 1.0,
        c3: 2.0,
        c4_tilde: 0.5,
        c4: 0.5,
        c5: 1.0,
        c6: 0.5,
        c7: 0.1,
        eta0: 1.0,
    };
    let set = ConstantSet::new(base)?;
    for chk in &set.integrals {
        worst = worst.max(chk.relative_error());
    }
    let d2_ok = set.d2 == set.d1 * set.d1 + set.d2pp + set.d2ppp;
    // eta = min(2/9 (c4 c5')^{-1}, eta0) on both branches
    let raw_eta = 2.0 / 9.0 / (set.c4_p * set.c5_p);
    let small = ConstantSet::new(ConstantInputs { eta0: raw_eta / 2.0, ..base })?;
    let eta_ok = set.eta == raw_eta && small.eta == raw_eta / 2.0;
    // epsilon = min(2/9 (c2 c3)^{-1}, pi) on both branches
    let eps_ok = set.epsilon == 2.0 / 9.0 / 2.0
        && ConstantSet::new(ConstantInputs { c2: 0.01, c3: 0.01, ..base })?.epsilon == std::f64::consts::PI;
    outcome(
        worst <= 1e-10 && d2_ok && eta_ok && eps_ok,
        format!("integral rel err {worst:.2e} (tol 1e-10); d2 identity {d2_ok}; eta branches {eta_ok}; epsilon branches {eps_ok}"),
    )
}

fn rate_csv_bytes() -> Result<Vec<u8>> {
    let pool = thread_pool_from_env()?;
    pool.install(|| {
        let mut buf = Vec::new();
        for (_, rows) in rate_runs()? {
            write_rate_csv(&rows, &mut buf)?;
        }
        Ok(buf)
    })
}

fn c12_determinism() -> Result<Outcome> {
    let max = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).max(2);
    std::env::set_var(THREADS_ENV, "1");
    let one = rate_csv_bytes()?;
    std::env::set_var(THREADS_ENV, max.to_string());
    let many = rate_csv_bytes()?;
    std::env::remove_var(THREADS_ENV);
    outcome(
        !one.is_empty() && one == many,
        format!("{} bytes with 1 thread vs {max} threads, identical: {}", one.len(), one == many),
    )
}

fn report(k: usize, title: &str, budget: Duration, result: Result<Outcome>, started: Instant) -> bool {
    let elapsed = started.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass && elapsed <= budget, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let tag = if pass { "PASS" } else { "FAIL" };
    println!(
        "{tag} criterion {k:>2} ({title}): {detail} [{:.2} s, budget {} s]",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "occupancy oracle", secs(10), c1_occupancy(), t);
    let t = Instant::now();
    all &= report(2, "Bose-Einstein oracle", secs(10), c2_bose(), t);
    let t = Instant::now();
    all &= report(3, "cycle lemma", secs(30), c3_branching(), t);
    let t = Instant::now();
    all &= report(4, "hashing displacement", secs(60), c4_hashing(), t);
    let t = Instant::now();
    all &= report(5, "Bartlett identity", secs(60), c5_bartlett(), t);
    let t = Instant::now();
    all &= report(6, "moment estimates", secs(300), c6_moments(), t);

    let t = Instant::now();
    let runs = rate_runs();
    let c7 = runs.as_ref().map_err(|e| Error::NumericalFailure(e.to_string())).and_then(|r| c7_rate(r));
    all &= report(7, "rate", secs(600), c7, t);
    let t = Instant::now();
    let c8 = runs.as_ref().map_err(|e| Error::NumericalFailure(e.to_string())).and_then(|r| c8_theorem(r));
    all &= report(8, "theorem constants", secs(600), c8, t);

    let t = Instant::now();
    all &= report(9, "lemma grids", secs(120), c9_lemmas(), t);
    let t = Instant::now();
    all &= report(10, "Monte Carlo", secs(120), c10_mc(), t);
    let t = Instant::now();
    all &= report(11, "constant calculator", secs(1), c11_constants(), t);
    let t = Instant::now();
    all &= report(12, "determinism", secs(1200), c12_determinism(), t);

    if !all {
        println!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
    println!("acceptance: all 12 criteria passed");
}
