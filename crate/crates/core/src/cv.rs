//! Cross-validated grid search over kernel hyperparameters.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::gp::{GpError, GpModel};
use crate::kernel::KernelParams;
use crate::space::{Bounds, DesignPoint};

/// Score for one grid cell.
#[derive(Debug, Clone)]
pub struct CvCell {
    pub params: KernelParams,
    /// Mean validation RMSE across folds; +inf when every fold failed to
    /// factorize.
    pub mean_rmse: f64,
    /// Per-fold RMSEs of the folds that fitted successfully.
    pub fold_rmses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best: KernelParams,
    pub best_index: usize,
    pub cells: Vec<CvCell>,
}

/// Scores every cell of `grid` by k-fold cross-validation RMSE and returns the
/// lowest-scoring cell, ties broken by grid order.
///
/// Fold assignment is a seeded uniform shuffle followed by contiguous chunks,
/// so results are a pure function of the inputs and `seed`. Cells are scored
/// in parallel; the reduction order is fixed by grid order.
pub fn grid_search_cv(
    xs: &[DesignPoint],
    ys: &[f64],
    grid: &[KernelParams],
    folds: usize,
    seed: u64,
    bounds: &Bounds,
) -> Result<GridSearchOutcome, GpError> {
    if grid.is_empty() {
        return Err(GpError::GridSearch("empty parameter grid".into()));
    }
    if folds < 2 {
        return Err(GpError::GridSearch(format!("folds must be >= 2, got {folds}")));
    }
    if xs.len() < folds {
        return Err(GpError::GridSearch(format!(
            "{} samples cannot fill {folds} folds",
            xs.len()
        )));
    }
    if xs.len() != ys.len() {
        return Err(GpError::InvalidInput(format!("{} inputs but {} outputs", xs.len(), ys.len())));
    }

    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    // Contiguous folds over the shuffled order; the first n % folds chunks
    // take one extra element.
    let base = n / folds;
    let extra = n % folds;
    let mut fold_ranges = Vec::with_capacity(folds);
    let mut start = 0;
    for k in 0..folds {
        let len = base + usize::from(k < extra);
        fold_ranges.push(start..start + len);
        start += len;
    }

    let cells: Vec<CvCell> = grid
        .par_iter()
        .map(|params| {
            let mut fold_rmses = Vec::with_capacity(folds);
            for range in &fold_ranges {
                let val_idx = &order[range.clone()];
                let train_idx: Vec<usize> = order
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| !range.contains(pos))
                    .map(|(_, &i)| i)
                    .collect();

                let train_x: Vec<DesignPoint> = train_idx.iter().map(|&i| xs[i].clone()).collect();
                let train_y: Vec<f64> = train_idx.iter().map(|&i| ys[i]).collect();
                let model = match GpModel::fit(&train_x, &train_y, params, bounds) {
                    Ok(m) => m,
                    Err(_) => continue,
                };
                let val_x: Vec<DesignPoint> = val_idx.iter().map(|&i| xs[i].clone()).collect();
                let preds = model.predict_many(&val_x);
                let sse: f64 = preds
                    .iter()
                    .zip(val_idx)
                    .map(|(p, &i)| (p.mean - ys[i]).powi(2))
                    .sum();
                fold_rmses.push((sse / val_idx.len() as f64).sqrt());
            }
            let mean_rmse = if fold_rmses.is_empty() {
                f64::INFINITY
            } else {
                fold_rmses.iter().sum::<f64>() / fold_rmses.len() as f64
            };
            CvCell { params: *params, mean_rmse, fold_rmses }
        })
        .collect();

    let mut best_index = 0;
    for (i, cell) in cells.iter().enumerate() {
        if cell.mean_rmse < cells[best_index].mean_rmse {
            best_index = i;
        }
    }
    if !cells[best_index].mean_rmse.is_finite() {
        return Err(GpError::GridSearch("every grid cell failed to factorize".into()));
    }

    Ok(GridSearchOutcome { best: cells[best_index].params, best_index, cells })
}
