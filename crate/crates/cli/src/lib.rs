//! Pipeline driver behind the `blockaug` binary: read a Matrix Market system
//! and a plain-text right-hand side, optionally reorder with RCM, partition,
//! augment, solve, and emit a JSON diagnostics report.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 invalid configuration or
//! certificate failure, 3 rank failure (the input was not full rank in the
//! requested mode).

pub mod mm;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use blockaug::{
    augment_cols, augment_rows, make_partition, norm2, oracle, rcm_permutation, AugmentStrategy,
    Axis, OverSolver, PartitionSpec, Perm, SolveError, Threading, UnderSolver,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: unsupported Matrix Market {what}")]
    Unsupported { path: String, what: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("rank failure: {0}")]
    Rank(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Unsupported { .. } => 1,
            CliError::Invalid(_) | CliError::Certificate(_) => 2,
            CliError::Rank(_) => 3,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::RankDeficient { .. } | SolveError::NotPositiveDefinite { .. } => {
                CliError::Rank(e.to_string())
            }
            other => CliError::Invalid(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Under,
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reorder {
    None,
    Rcm,
}

/// Everything the pipeline needs to run once.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub mode: Mode,
    pub blocks: usize,
    pub strategy: AugmentStrategy,
    pub reorder: Reorder,
    pub ortho_tol: f64,
    pub sol_tol: f64,
    pub rank_tol: f64,
    pub compare_oracle: bool,
    pub matrix: PathBuf,
    pub rhs: PathBuf,
    pub out: Option<PathBuf>,
}

/// Per-stage wall-clock timings in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct StageTimings {
    pub read: f64,
    pub reorder: f64,
    pub partition: f64,
    pub augment: f64,
    pub solve: f64,
    pub total: f64,
}

/// Machine-readable run report. Serialization is deterministic apart from
/// the timing block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: String,
    pub rows: usize,
    pub cols: usize,
    pub blocks: usize,
    pub strategy: String,
    pub reorder: String,
    pub q: usize,
    pub orthogonality_defect: f64,
    pub residual_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_y_plus_sz_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
    /// Solution in the original ordering.
    pub solution: Vec<f64>,
    pub timings_ms: StageTimings,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Under => "under",
        Mode::Over => "over",
    }
}

fn strategy_name(s: AugmentStrategy) -> &'static str {
    match s {
        AugmentStrategy::SignAlternating => "sign-alternating",
        AugmentStrategy::Pairwise => "pairwise",
    }
}

fn reorder_name(r: Reorder) -> &'static str {
    match r {
        Reorder::None => "none",
        Reorder::Rcm => "rcm",
    }
}

/// Run the full pipeline once. Writes the report to `config.out` when set.
pub fn run(config: &SolveConfig) -> Result<SolveReport, CliError> {
    let t_total = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let original = mm::read_matrix_market(&config.matrix)?;
    let b = mm::read_vector(&config.rhs)?;
    timings.read = ms(t);

    let (rows, cols) = (original.rows(), original.cols());
    match config.mode {
        Mode::Under if rows > cols => {
            return Err(CliError::Invalid(format!(
                "mode 'under' requires rows <= cols, got {rows}x{cols}"
            )))
        }
        Mode::Over if rows < cols => {
            return Err(CliError::Invalid(format!(
                "mode 'over' requires rows >= cols, got {rows}x{cols}"
            )))
        }
        _ => {}
    }
    if b.len() != rows {
        return Err(CliError::Invalid(format!(
            "right-hand side has {} entries, matrix has {rows} rows",
            b.len()
        )));
    }

    let t = Instant::now();
    let (row_perm, col_perm) = match config.reorder {
        Reorder::None => (Perm::identity(rows), Perm::identity(cols)),
        Reorder::Rcm => rcm_permutation(&original),
    };
    let reordered = original.permuted(&row_perm, &col_perm)?;
    timings.reorder = ms(t);

    let t = Instant::now();
    let (axis, extent) = match config.mode {
        Mode::Under => (Axis::Rows, rows),
        Mode::Over => (Axis::Cols, cols),
    };
    let mut part = make_partition(axis, extent, PartitionSpec::Equal(config.blocks))?;
    part.set_perms(row_perm, col_perm);
    timings.partition = ms(t);

    let t = Instant::now();
    let system = match config.mode {
        Mode::Under => augment_rows(&reordered, &part, config.strategy, config.rank_tol)?,
        Mode::Over => augment_cols(&reordered, &part, config.strategy, config.rank_tol)?,
    };
    let q = system.q();
    let ortho = system.verify_orthogonality(config.ortho_tol);
    if !ortho.pass {
        return Err(CliError::Certificate(format!(
            "augmented blocks are not orthogonal: normalized defect {:.3e} at pair {:?}",
            ortho.max_normalized_product, ortho.worst_pair
        )));
    }
    timings.augment = ms(t);

    let t = Instant::now();
    let b_norm = norm2(&b);
    let report = match config.mode {
        Mode::Under => {
            let solver = UnderSolver::new(system, Threading::Parallel)?;
            let sol = solver.solve(&b)?;
            if sol.residual_norm > config.sol_tol * b_norm {
                return Err(CliError::Certificate(format!(
                    "residual {:.3e} exceeds tolerance {:.3e}",
                    sol.residual_norm,
                    config.sol_tol * b_norm
                )));
            }
            if sol.y_norm > config.sol_tol * norm2(&sol.x).max(1.0) {
                return Err(CliError::Certificate(format!(
                    "augmentation variables did not vanish: |y| = {:.3e}",
                    sol.y_norm
                )));
            }
            timings.solve = ms(t);
            let oracle_gap = if config.compare_oracle {
                Some(under_oracle_gap(&solver, &b, &sol))
            } else {
                None
            };
            let solution = solver.system().partition().unpermute_solution(&sol.x);
            SolveReport {
                mode: mode_name(config.mode).into(),
                rows,
                cols,
                blocks: config.blocks,
                strategy: strategy_name(config.strategy).into(),
                reorder: reorder_name(config.reorder).into(),
                q,
                orthogonality_defect: ortho.max_normalized_product,
                residual_norm: sol.residual_norm,
                y_norm: Some(sol.y_norm),
                gamma_y_plus_sz_norm: None,
                oracle_gap,
                solution,
                timings_ms: StageTimings::default(),
            }
        }
        Mode::Over => {
            let solver = OverSolver::new(system, Threading::Parallel)?;
            let sol = solver.solve(&b)?;
            let defect = norm2(&solver.gamma_y_plus_sz(&sol.y, &sol.z)?);
            if defect > config.sol_tol * norm2(&sol.y).max(1.0) {
                return Err(CliError::Certificate(format!(
                    "augmented stationarity defect |Γy + Sz| = {defect:.3e}"
                )));
            }
            // Normal-equation residual of the original problem.
            let a = solver.system().original();
            let bp = solver.system().partition().permute_rhs(&b);
            let x_reordered = solver
                .system()
                .partition()
                .col_perm()
                .map_or_else(|| sol.x_ls.clone(), |p| p.gather(&sol.x_ls));
            let ax = a.matvec(&x_reordered, false)?;
            let r: Vec<f64> = ax.iter().zip(&bp).map(|(p, q)| p - q).collect();
            let atr = a.matvec(&r, true)?;
            let atb = a.matvec(&bp, true)?;
            if norm2(&atr) > config.sol_tol * norm2(&atb).max(1.0) {
                return Err(CliError::Certificate(format!(
                    "normal-equation residual {:.3e}",
                    norm2(&atr)
                )));
            }
            timings.solve = ms(t);
            let oracle_gap = if config.compare_oracle {
                let reference = oracle::minnorm_ls_solve(&original, &b, config.rank_tol);
                let diff: Vec<f64> = sol
                    .x_ls
                    .iter()
                    .zip(&reference)
                    .map(|(p, q)| p - q)
                    .collect();
                Some(norm2(&diff) / norm2(&reference).max(1e-300))
            } else {
                None
            };
            SolveReport {
                mode: mode_name(config.mode).into(),
                rows,
                cols,
                blocks: config.blocks,
                strategy: strategy_name(config.strategy).into(),
                reorder: reorder_name(config.reorder).into(),
                q,
                orthogonality_defect: ortho.max_normalized_product,
                residual_norm: sol.residual_norm,
                y_norm: None,
                gamma_y_plus_sz_norm: Some(defect),
                oracle_gap,
                solution: sol.x_ls,
                timings_ms: StageTimings::default(),
            }
        }
    };

    let mut report = report;
    timings.total = ms(t_total);
    report.timings_ms = timings;

    if let Some(out) = &config.out {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(out, text + "\n").map_err(|e| CliError::Io {
            path: out.display().to_string(),
            message: e.to_string(),
        })?;
    }
    Ok(report)
}

/// Relative gap between our augmented solution and the dense minimal-norm
/// solve of the assembled augmented system.
fn under_oracle_gap(solver: &UnderSolver, b: &[f64], sol: &blockaug::UnderSolution) -> f64 {
    let abar = solver.system().augmented_matrix().densified();
    let stacked = match solver.assemble_w_dense() {
        None => abar,
        Some(w) => abar.vstack(&w).expect("stack dims"),
    };
    let bp = solver.system().partition().permute_rhs(b);
    let mut rhs = bp;
    rhs.extend(solver.rhs_f(b).expect("rhs_f dims"));
    let reference = oracle::minnorm_ls_solve(&stacked, &rhs, 1e-12);
    let mut ours = sol.x.clone();
    ours.extend_from_slice(&sol.y);
    let diff: Vec<f64> = ours.iter().zip(&reference).map(|(p, q)| p - q).collect();
    norm2(&diff) / norm2(&reference).max(1e-300)
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
