//! One experiment cell: generate data, play the protocol, solve the oracle,
//! measure regret.

use std::time::Instant;

use nsregret::analysis::{build_partition, dynamic_regret, interval_static_regret, Partition};
use nsregret::datagen::{gen_comparator, gen_labels, NoiseSpec, SequenceProfile};
use nsregret::learners::LearnerSpec;
use nsregret::loss::{fit_glm_constants, glm_curvature};
use nsregret::meta::default_meta_zeta;
use nsregret::{
    oracle_general_loss, run_protocol, tv_constrained_solve, ComparatorSequence, CurvatureParams,
    ExperimentTrace, GlmLink, Loss, OracleSolution, ProtocolConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, LearnerKind, LinkKind, LossKind};
use crate::error::{CliError, CliResult};

/// Grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Cell {
    pub n: usize,
    pub budget: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub budget: f64,
    pub learner: LearnerKind,
    pub meta: nsregret::MetaKind,
    pub dynamic_regret: f64,
    /// Largest static regret over the bins of the oracle's key partition.
    pub static_regret_best_interval: f64,
    pub oracle_objective: f64,
    pub lambda: f64,
    pub wall_time_ms: Option<f64>,
}

pub const RESULT_COLUMNS: [&str; 11] = [
    "seed",
    "n",
    "d",
    "C_n",
    "learner",
    "meta",
    "dynamic_regret",
    "static_regret_best_interval",
    "oracle_objective",
    "lambda",
    "wall_time_ms",
];

impl ResultRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.n.to_string(),
            self.d.to_string(),
            self.budget.to_string(),
            enum_name(&self.learner),
            enum_name(&self.meta),
            self.dynamic_regret.to_string(),
            self.static_regret_best_interval.to_string(),
            self.oracle_objective.to_string(),
            self.lambda.to_string(),
            self.wall_time_ms.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}")),
        ]
    }
}

/// Serialized name of a unit enum variant.
pub fn enum_name<E: Serialize>(v: &E) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Losses of one cell together with the data that produced them.
#[derive(Debug, Clone)]
pub struct Instance {
    pub losses: Vec<Loss<f64>>,
    /// Squared-loss labels.
    pub labels: Option<Vec<Vec<f64>>>,
    pub comparator: Option<ComparatorSequence<f64>>,
}

/// Everything a cell produced.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub cell: Cell,
    pub row: ResultRow,
    pub instance: Instance,
    pub trace: ExperimentTrace<f64>,
    pub oracle: OracleSolution<f64>,
    pub partition: Partition<f64>,
    pub curvature: CurvatureParams<f64>,
}

fn derived_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03)) ^ stream
}

pub fn build_instance(cfg: &ExperimentConfig, cell: &Cell) -> CliResult<Instance> {
    if let Some(path) = &cfg.data.file {
        let file = std::fs::File::open(path)
            .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
        let inst = nsregret::io::read_instance(std::io::BufReader::new(file))?;
        let losses = inst
            .labels
            .iter()
            .map(|y| Loss::squared(y.clone(), cfg.bound))
            .collect::<nsregret::Result<Vec<_>>>()?;
        let comparator = inst.comparator.map(ComparatorSequence::new).transpose()?;
        return Ok(Instance {
            losses,
            labels: Some(inst.labels),
            comparator,
        });
    }
    let profile = SequenceProfile {
        kind: cfg.profile_for(cell.n, cell.budget),
        n: cell.n,
        d: cfg.dim,
        budget: cell.budget,
        bound: cfg.comparator_bound(),
        seed: derived_seed(cell.seed, 1),
    };
    let w = gen_comparator(&profile)?;
    match cfg.loss {
        LossKind::Squared => {
            let noise = NoiseSpec {
                kind: cfg.data.noise,
                seed: derived_seed(cell.seed, 2),
            };
            let labels = gen_labels(&w, &noise, cfg.bound)?;
            let losses = labels
                .iter()
                .map(|y| Loss::squared(y.clone(), cfg.bound))
                .collect::<nsregret::Result<Vec<_>>>()?;
            Ok(Instance {
                losses,
                labels: Some(labels),
                comparator: Some(w),
            })
        }
        LossKind::Glm => {
            let losses = glm_losses(cfg, &w, derived_seed(cell.seed, 3))?;
            Ok(Instance {
                losses,
                labels: None,
                comparator: Some(w),
            })
        }
    }
}

/// Features uniform in the cube scaled to `‖v‖₂ ≤ radius`; responses drawn
/// from the link's model at `v_tᵀw_t`.
fn glm_losses(cfg: &ExperimentConfig, w: &ComparatorSequence<f64>, seed: u64) -> CliResult<Vec<Loss<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cfg.dim;
    let scale = cfg.glm.radius / (d as f64).sqrt();
    let sigma = cfg.data.noise.magnitude();
    w.w.iter()
        .map(|wt| {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0) * scale).collect();
            let u: f64 = v.iter().zip(wt).map(|(a, b)| a * b).sum();
            let link = match cfg.glm.link {
                LinkKind::Logistic => {
                    let p = 1.0 / (1.0 + (-u).exp());
                    GlmLink::Logistic {
                        label: if rng.gen_bool(p) { 1.0 } else { -1.0 },
                    }
                }
                LinkKind::Poisson => {
                    let dist = Poisson::new(u.exp()).map_err(|e| CliError::numerical(e.to_string()))?;
                    GlmLink::Poisson { count: dist.sample(&mut rng) }
                }
                LinkKind::Square => GlmLink::Square {
                    target: u + if sigma > 0.0 { rng.gen_range(-sigma..=sigma) } else { 0.0 },
                },
            };
            Ok(Loss::glm(link, v)?)
        })
        .collect()
}

/// Curvature bundle for the instance, with configured overrides applied.
pub fn curvature_for(cfg: &ExperimentConfig, losses: &[Loss<f64>]) -> CliResult<CurvatureParams<f64>> {
    let mut c = match cfg.loss {
        LossKind::Squared => CurvatureParams::squared(cfg.bound)?,
        LossKind::Glm => glm_curvature(fit_glm_constants(losses, cfg.bound)?, cfg.bound)?,
    };
    let o = &cfg.curvature;
    if let Some(v) = o.lipschitz {
        c.lipschitz = v;
    }
    if let Some(v) = o.lipschitz_dagger {
        c.lipschitz_dagger = v;
    }
    if let Some(v) = o.alpha {
        c.alpha = v;
    }
    if let Some(v) = o.beta {
        c.beta = v;
    }
    if let Some(v) = o.strong_convexity {
        c.strong_convexity = v;
    }
    c.validate()?;
    Ok(c)
}

pub fn protocol_config(
    cfg: &ExperimentConfig,
    curvature: &CurvatureParams<f64>,
    dim: usize,
) -> CliResult<ProtocolConfig<f64>> {
    let learner = match cfg.learner {
        LearnerKind::Ftl => LearnerSpec::ftl(cfg.bound, dim)?,
        LearnerKind::Ogd => LearnerSpec::ogd(curvature, dim)?,
        LearnerKind::Ons => LearnerSpec::ons(curvature, dim)?,
    };
    Ok(ProtocolConfig {
        learner,
        meta: cfg.meta,
        meta_zeta: cfg.meta_zeta.unwrap_or_else(|| default_meta_zeta(&learner, curvature)),
    })
}

/// Squared losses use the exact oracle; GLM losses the certified one.
pub fn solve_oracle(cfg: &ExperimentConfig, inst: &Instance, budget: f64) -> CliResult<OracleSolution<f64>> {
    match &inst.labels {
        Some(y) => Ok(tv_constrained_solve(y, budget, cfg.bound)?),
        None => Ok(oracle_general_loss(&inst.losses, budget, cfg.bound, cfg.tol)?),
    }
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> CliResult<CellOutput> {
    let start = Instant::now();
    let instance = build_instance(cfg, cell)?;
    let n = instance.losses.len();
    let d = instance.losses.first().map_or(cfg.dim, Loss::dim);
    let curvature = curvature_for(cfg, &instance.losses)?;
    let protocol = protocol_config(cfg, &curvature, d)?;
    let trace = run_protocol(&instance.losses, &protocol)?;
    let oracle = solve_oracle(cfg, &instance, cell.budget)?;
    let cmp = ComparatorSequence::new(oracle.u.clone())?;
    let regret = dynamic_regret(&trace, &cmp, &instance.losses)?;
    let partition = build_partition(&oracle.u, cfg.bound);
    let mut best_interval = f64::NEG_INFINITY;
    for b in &partition.bins {
        best_interval = best_interval.max(interval_static_regret(&trace, &instance.losses, b.start, b.end, cfg.bound)?);
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let row = ResultRow {
        seed: cell.seed,
        n,
        d,
        budget: cell.budget,
        learner: cfg.learner,
        meta: cfg.meta,
        dynamic_regret: regret,
        static_regret_best_interval: best_interval,
        oracle_objective: oracle.objective,
        lambda: oracle.lambda,
        wall_time_ms: cfg.output.timing.then_some(elapsed),
    };
    Ok(CellOutput {
        cell: *cell,
        row,
        instance,
        trace,
        oracle,
        partition,
        curvature,
    })
}

/// Runs the cells on up to `workers` threads and maps each output through
/// `f` as soon as it is ready; results come back in cell order.
pub fn run_cells_with<R, F>(cfg: &ExperimentConfig, cells: &[Cell], workers: usize, f: F) -> CliResult<Vec<R>>
where
    R: Send,
    F: Fn(CellOutput) -> CliResult<R> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::numerical(format!("cannot start worker pool: {e}")))?;
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|a, b| cell_order(&cells[*a], &cells[*b]));
    pool.install(|| {
        order
            .par_iter()
            .map(|i| run_cell(cfg, &cells[*i]).and_then(&f))
            .collect::<CliResult<Vec<_>>>()
    })
}

pub fn run_cells(cfg: &ExperimentConfig, cells: &[Cell], workers: usize) -> CliResult<Vec<CellOutput>> {
    run_cells_with(cfg, cells, workers, Ok)
}

fn cell_order(a: &Cell, b: &Cell) -> std::cmp::Ordering {
    a.n.cmp(&b.n)
        .then(a.budget.total_cmp(&b.budget))
        .then(a.seed.cmp(&b.seed))
}

/// Cross product of horizons, budgets and seeds, sorted by `(n, C, seed)`.
pub fn cells(cfg: &ExperimentConfig, horizons: &[usize]) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in horizons {
        for &budget in &cfg.budgets {
            for &seed in &cfg.seeds {
                out.push(Cell { n, budget, seed });
            }
        }
    }
    out.sort_by(cell_order);
    out
}
