//! Fixed-seed property suites with a machine-readable verdict.

use nsregret::analysis::{build_partition, dynamic_regret, regret_decompose, Partition};
use nsregret::datagen::{gen_comparator, gen_labels, gen_paper_example, NoiseKind, NoiseSpec, ProfileKind, SequenceProfile};
use nsregret::learners::LearnerSpec;
use nsregret::meta::{default_meta_zeta, OnlineAlgorithm};
use nsregret::{
    run_protocol, tv_constrained_solve, ComparatorSequence, CurvatureParams, Flh, GlmLink, Loss, MetaKind,
    ProtocolConfig, Pruning,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::oracle::KktLimits;
use super::{out_path, write_json};
use crate::config::ExperimentConfig;
use crate::error::CliResult;

const MAX_DETAILS: usize = 5;

/// Test-only mutations that a suite must catch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    /// Skew FLH weights after every normalization.
    Simplex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub checks: usize,
    pub failures: usize,
    pub pass: bool,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub pass: bool,
    pub suites: Vec<SuiteResult>,
}

struct Suite {
    name: &'static str,
    checks: usize,
    details: Vec<String>,
    failures: usize,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            details: Vec::new(),
            failures: 0,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.details.len() < MAX_DETAILS {
                self.details.push(what());
            }
        }
    }

    fn error(&mut self, e: impl std::fmt::Display) {
        self.check(false, || format!("error: {e}"));
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name.to_string(),
            checks: self.checks,
            failures: self.failures,
            pass: self.failures == 0 && self.checks > 0,
            details: self.details,
        }
    }
}

/// A noisy squared-loss stream in `[−bound, bound]^d` with a piecewise-constant mean.
pub fn squared_stream(seed: u64, n: usize, d: usize, budget: f64, bound: f64) -> nsregret::Result<Vec<Vec<f64>>> {
    let sigma = bound / 4.0;
    let w = gen_comparator(&SequenceProfile {
        kind: ProfileKind::PiecewiseConstant { jumps: 3.min(n - 1).max(1) },
        n,
        d,
        budget,
        bound: bound - sigma,
        seed,
    })?;
    gen_labels(
        &w,
        &NoiseSpec {
            kind: NoiseKind::Uniform { sigma },
            seed: seed ^ 0x5eed,
        },
        bound,
    )
}

pub fn squared_losses(labels: &[Vec<f64>], bound: f64) -> nsregret::Result<Vec<Loss<f64>>> {
    labels.iter().map(|y| Loss::squared(y.clone(), bound)).collect()
}

/// Logistic losses with features in the unit cube and a slowly rotating truth.
pub fn logistic_losses(seed: u64, n: usize, d: usize) -> nsregret::Result<Vec<Loss<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|t| {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0) / (d as f64).sqrt()).collect();
            let phase = std::f64::consts::TAU * t as f64 / n as f64;
            let u: f64 = v.iter().enumerate().map(|(k, x)| x * (phase + k as f64).cos()).sum();
            let label = if rng.gen_bool(1.0 / (1.0 + (-2.0 * u).exp())) { 1.0 } else { -1.0 };
            Loss::glm(GlmLink::Logistic { label }, v)
        })
        .collect()
}

/// FLH interval loss on `[r, s]` (1-based, inclusive) minus the loss of a
/// fresh FTL started at `r`, and the allowance `(ln r + ln(s−r+1))/ζ + 2`.
pub fn meta_regret_gap(
    trace: &nsregret::ExperimentTrace<f64>,
    losses: &[Loss<f64>],
    bound: f64,
    zeta: f64,
    r: usize,
    s: usize,
) -> nsregret::Result<(f64, f64)> {
    let flh: f64 = trace.rounds[r - 1..s].iter().map(|x| x.loss_value).sum();
    let fresh = run_protocol(
        &losses[r - 1..s],
        &ProtocolConfig {
            learner: LearnerSpec::ftl(bound, losses[0].dim())?,
            meta: MetaKind::None,
            meta_zeta: zeta,
        },
    )?;
    let allowance = ((r as f64).ln() + ((s - r + 1) as f64).ln()) / zeta + 2.0;
    Ok((flh - fresh.cumulative_loss(), allowance))
}

/// Tiling, per-bin budget `C_i ≤ B/√n_i` and bin count `M ≤ 8·max(1, n^{1/3}TV^{2/3}B^{−2/3})`.
pub fn partition_violations(p: &Partition<f64>, tv: f64, bound: f64) -> Vec<String> {
    let mut out = Vec::new();
    let n = p.horizon;
    if p.bins.first().map(|b| b.start) != Some(1) || p.bins.last().map(|b| b.end) != Some(n) {
        out.push(format!("bins do not cover [1, {n}]"));
    }
    if p.bins.windows(2).any(|w| w[1].start != w[0].end + 1) {
        out.push("bins are not contiguous".into());
    }
    for b in &p.bins {
        let cap = bound / (b.len() as f64).sqrt();
        if b.tv > cap * (1.0 + 1e-12) {
            out.push(format!("bin [{}, {}] has C_i = {} > B/√n_i = {cap}", b.start, b.end, b.tv));
        }
    }
    let m_cap = 8.0 * (1f64).max((n as f64).cbrt() * tv.powf(2.0 / 3.0) * bound.powf(-2.0 / 3.0));
    if p.bins.len() as f64 > m_cap {
        out.push(format!("{} bins exceed 8·max(1, n^(1/3)TV^(2/3)B^(-2/3)) = {m_cap}", p.bins.len()));
    }
    out
}

fn suite_learner_feasibility() -> SuiteResult {
    let mut suite = Suite::new("learner_feasibility");
    let run = |suite: &mut Suite, cfg: ProtocolConfig<f64>, losses: &[Loss<f64>], half: f64| {
        match run_protocol(losses, &cfg) {
            Ok(tr) => {
                for r in &tr.rounds {
                    suite.check(r.x.iter().all(|v| v.abs() <= half && v.is_finite()), || {
                        format!("{:?}/{:?}: round {} left the box: {:?}", cfg.learner, cfg.meta, r.t, r.x)
                    });
                }
            }
            Err(e) => suite.error(e),
        }
    };
    let bound = 1.0;
    let curv = CurvatureParams::squared(bound).expect("squared constants");
    for seed in 0..3u64 {
        for d in [1usize, 2] {
            let labels = match squared_stream(seed, 200, d, 1.0, bound) {
                Ok(l) => l,
                Err(e) => {
                    suite.error(e);
                    continue;
                }
            };
            let losses = squared_losses(&labels, bound).expect("labels in box");
            for meta in [MetaKind::None, MetaKind::Flh, MetaKind::Aflh] {
                for spec in [
                    LearnerSpec::ftl(bound, d),
                    LearnerSpec::ogd(&curv, d),
                    LearnerSpec::ons(&curv, d),
                ] {
                    let spec = spec.expect("valid spec");
                    let cfg = ProtocolConfig {
                        learner: spec,
                        meta,
                        meta_zeta: default_meta_zeta(&spec, &curv),
                    };
                    run(&mut suite, cfg, &losses, spec.decision_box().half_width);
                }
            }
        }
        let glm = logistic_losses(seed, 200, 2).expect("logistic stream");
        let k = nsregret::fit_glm_constants(&glm, bound).expect("glm constants");
        let gc = nsregret::glm_curvature(k, bound).expect("glm curvature");
        let spec = LearnerSpec::ons(&gc, 2).expect("ons spec");
        for meta in [MetaKind::None, MetaKind::Flh, MetaKind::Aflh] {
            let cfg = ProtocolConfig {
                learner: spec,
                meta,
                meta_zeta: default_meta_zeta(&spec, &gc),
            };
            run(&mut suite, cfg, &glm, spec.decision_box().half_width);
        }
    }
    suite.finish()
}

fn suite_weight_simplex(fault: Option<Fault>) -> SuiteResult {
    let mut suite = Suite::new("weight_simplex");
    let bound = 1.0;
    for (seed, pruning) in [(0u64, Pruning::None), (1, Pruning::Aflh), (2, Pruning::None), (3, Pruning::Aflh)] {
        let labels = match squared_stream(seed, 400, 1, 2.0, bound) {
            Ok(l) => l,
            Err(e) => {
                suite.error(e);
                continue;
            }
        };
        let spec = LearnerSpec::ftl(bound, 1).expect("ftl spec");
        let mut flh = Flh::new(spec, 0.125, pruning).expect("flh");
        if fault == Some(Fault::Simplex) {
            flh.inject_normalization_fault();
        }
        for (t, y) in labels.iter().enumerate() {
            let loss = Loss::squared(y.clone(), bound).expect("label in box");
            if let Err(e) = OnlineAlgorithm::predict(&mut flh).and_then(|_| flh.observe(&loss)) {
                suite.error(e);
                break;
            }
            let w = flh.weights();
            let sum: f64 = w.iter().sum();
            suite.check(w.iter().all(|v| *v >= 0.0) && (sum - 1.0).abs() <= 1e-9, || {
                format!("{pruning:?} seed {seed}: after round {} weights sum to {sum}", t + 1)
            });
        }
    }
    suite.finish()
}

struct Solved {
    u: Vec<Vec<f64>>,
    tv: f64,
}

fn suite_kkt(solved: &mut Vec<Solved>) -> SuiteResult {
    let mut suite = Suite::new("kkt");
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for i in 0..40u64 {
        let n = rng.gen_range(8..=256);
        let d = rng.gen_range(1..=3);
        let budget = rng.gen_range(0.1..4.0);
        let bound = 1.0;
        let labels: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-bound..=bound)).collect()).collect();
        match tv_constrained_solve(&labels, budget, bound) {
            Ok(sol) => {
                let lim = KktLimits::new(1e-6, sol.lambda);
                suite.check(lim.admits(&sol.kkt), || format!("instance {i} (n={n}, d={d}): {:?}", sol.kkt));
                suite.check(sol.tv <= budget * (1.0 + 1e-8) + 1e-12, || {
                    format!("instance {i}: TV {} over budget {budget}", sol.tv)
                });
                solved.push(Solved { tv: sol.tv, u: sol.u });
            }
            Err(e) => suite.error(e),
        }
    }
    for n in [6usize, 8, 16, 64] {
        match gen_paper_example::<f64>(n).and_then(|ex| tv_constrained_solve(&ex.labels, ex.budget, ex.bound).map(|s| (ex, s))) {
            Ok((ex, sol)) => {
                let err = sol.u.iter().flatten().zip(ex.expected_u.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                suite.check(err <= 1e-9 && (sol.lambda - ex.expected_lambda).abs() <= 1e-6, || {
                    format!("example n={n}: |u − u*| = {err}, λ = {}", sol.lambda)
                });
            }
            Err(e) => suite.error(e),
        }
    }
    suite.finish()
}

fn suite_partition(solved: &[Solved]) -> SuiteResult {
    let mut suite = Suite::new("partition_bounds");
    for (i, s) in solved.iter().enumerate() {
        let p = build_partition(&s.u, 1.0);
        let bad = partition_violations(&p, s.tv, 1.0);
        suite.check(bad.is_empty(), || format!("instance {i}: {}", bad.join("; ")));
    }
    suite.finish()
}

fn suite_decomposition() -> SuiteResult {
    let mut suite = Suite::new("decomposition_identity");
    let bound = 1.0;
    for seed in 0..6u64 {
        let n = 128 + 64 * seed as usize;
        let result = (|| -> nsregret::Result<()> {
            let labels = squared_stream(seed, n, 1, 1.5, bound)?;
            let losses = squared_losses(&labels, bound)?;
            let cfg = ProtocolConfig {
                learner: LearnerSpec::ftl(bound, 1)?,
                meta: MetaKind::Flh,
                meta_zeta: 0.125,
            };
            let trace = run_protocol(&losses, &cfg)?;
            let oracle = tv_constrained_solve(&labels, 1.5, bound)?;
            let part = build_partition(&oracle.u, bound);
            let rows = regret_decompose(&trace, &oracle, &part, &losses, 2.0)?;
            let regret = dynamic_regret(&trace, &ComparatorSequence::new(oracle.u.clone())?, &losses)?;
            let total: f64 = rows.iter().map(|r| r.t1 + r.t2 + r.t3).sum();
            let scale = trace.cumulative_loss().max(1.0);
            suite.check((total - regret).abs() <= 1e-8 * scale, || {
                format!("seed {seed}: ΣT = {total} vs regret {regret}")
            });
            for r in &rows {
                suite.check(r.t2 <= 1e-12, || format!("seed {seed} bin {}: T2 = {}", r.bin, r.t2));
            }
            Ok(())
        })();
        if let Err(e) = result {
            suite.error(e);
        }
    }
    suite.finish()
}

fn suite_meta_regret() -> SuiteResult {
    let mut suite = Suite::new("meta_regret_intervals");
    let bound = 1.0;
    let zeta = 0.125;
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for seed in 0..2u64 {
        let n = 600;
        let result = (|| -> nsregret::Result<()> {
            let labels = squared_stream(seed, n, 1, 2.0, bound)?;
            let losses = squared_losses(&labels, bound)?;
            let trace = run_protocol(
                &losses,
                &ProtocolConfig {
                    learner: LearnerSpec::ftl(bound, 1)?,
                    meta: MetaKind::Flh,
                    meta_zeta: zeta,
                },
            )?;
            for _ in 0..15 {
                let r = rng.gen_range(1..=n);
                let s = rng.gen_range(r..=n);
                let (gap, allowance) = meta_regret_gap(&trace, &losses, bound, zeta, r, s)?;
                suite.check(gap <= allowance, || format!("seed {seed} [{r}, {s}]: gap {gap} > {allowance}"));
            }
            Ok(())
        })();
        if let Err(e) = result {
            suite.error(e);
        }
    }
    suite.finish()
}

/// Runs every suite; the report passes when every suite does.
pub fn run_suites(fault: Option<Fault>) -> VerifyReport {
    let mut solved = Vec::new();
    let suites = vec![
        suite_learner_feasibility(),
        suite_weight_simplex(fault),
        suite_kkt(&mut solved),
        suite_partition(&solved),
        suite_decomposition(),
        suite_meta_regret(),
    ];
    VerifyReport {
        schema_version: nsregret::io::SCHEMA_VERSION,
        pass: suites.iter().all(|s| s.pass),
        suites,
    }
}

/// Runs the suites and writes `verify.json`.
pub fn cmd_verify(cfg: &ExperimentConfig, fault: Option<Fault>) -> CliResult<VerifyReport> {
    let report = run_suites(fault);
    write_json(&out_path(cfg, "verify.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_and_fault_is_caught() {
        let ok = run_suites(None);
        assert!(ok.pass, "{ok:#?}");
        assert_eq!(ok.suites.len(), 6);
        let bad = suite_weight_simplex(Some(Fault::Simplex));
        assert!(!bad.pass);
        assert!(bad.failures > 0 && !bad.details.is_empty());
    }
}
