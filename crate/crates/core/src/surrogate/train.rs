use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::model::{mae_gradient, CciModel, Core, Surrogate};
use super::SurrogateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// `usize::MAX` trains full-batch.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.001, max_epochs: 5000, patience: 125, batch_size: 32, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        let bad = |m: &str| Err(SurrogateError::InvalidConfig(m.into()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return bad("epochs, patience and batch size must be positive");
        }
        if self.patience >= self.max_epochs {
            return bad("patience must be below max_epochs");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:e},{:e}", r.epoch, r.train_loss, r.val_loss);
        }
        out
    }
}

fn mae<C: Core>(core: &C, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let total: f64 =
        pairs.iter().map(|(x, y)| core.forward(x).iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>()).sum();
    total / (pairs.len() * core.n_out()) as f64
}

/// Minibatch Adam on MAE with early stopping on validation MAE (both in
/// normalized output units). The returned model carries the weights of the
/// best validation epoch.
pub fn train<C: Core>(
    model: &mut Surrogate<C>,
    train: &[(Vec<f64>, Vec<f64>)],
    val: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<History, SurrogateError> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(SurrogateError::EmptySplit);
    }
    let norm = |set: &[(Vec<f64>, Vec<f64>)]| -> Result<Vec<(Vec<f64>, Vec<f64>)>, SurrogateError> {
        set.iter()
            .map(|(x, y)| {
                if x.len() != model.n_in() {
                    return Err(SurrogateError::Dimension { expected: model.n_in(), found: x.len() });
                }
                if y.len() != model.n_out() {
                    return Err(SurrogateError::Dimension { expected: model.n_out(), found: y.len() });
                }
                Ok((model.input_norm.apply(x), model.output_norm.apply(y)))
            })
            .collect()
    };
    let (tr, va) = (norm(train)?, norm(val)?);

    let n_params: usize = model.core.params().iter().map(|p| p.len()).sum();
    let mut adam = Adam::new(cfg.learning_rate, n_params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..tr.len()).collect();
    let mut history =
        History { records: Vec::new(), best_epoch: 0, best_val_loss: f64::INFINITY, stopped_early: false };
    let mut best = model.core.clone();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(cfg.batch_size.min(tr.len())) {
            let pairs: Vec<(&[f64], &[f64])> =
                batch.iter().map(|&i| (tr[i].0.as_slice(), tr[i].1.as_slice())).collect();
            let (loss, grad) = mae_gradient(&model.core, &pairs);
            sum += loss * batch.len() as f64;
            adam.step(model.core.params_mut(), grad.params());
        }
        let train_loss = sum / tr.len() as f64;
        let val_loss = mae(&model.core, &va);
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(SurrogateError::NonFinite { epoch, train_loss, val_loss });
        }
        history.records.push(EpochRecord { epoch, train_loss, val_loss });
        if val_loss < history.best_val_loss {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best = model.core.clone();
        } else if epoch - history.best_epoch >= cfg.patience {
            history.stopped_early = true;
            break;
        }
    }
    model.core = best;
    Ok(history)
}

/// [`train`] for CCI models; gradients run through the whole chunk chain.
pub fn train_cci(
    model: &mut CciModel,
    train_set: &[(Vec<f64>, Vec<f64>)],
    val: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<History, SurrogateError> {
    train(model, train_set, val, cfg)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::netlist::Scale;
    use crate::surrogate::{Mlp, Standardizer};

    fn linear_data(n: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let y = vec![0.7 * x[0] - 0.2 * x[1] + 0.1];
                (x, y)
            })
            .collect()
    }

    fn fitted_mlp(data: &[(Vec<f64>, Vec<f64>)], hidden: &[usize], seed: u64) -> Mlp {
        let xs: Vec<Vec<f64>> = data.iter().map(|d| d.0.clone()).collect();
        let ys: Vec<Vec<f64>> = data.iter().map(|d| d.1.clone()).collect();
        Mlp::new(Standardizer::fit(&xs, &[Scale::Linear; 2]), Standardizer::fit(&ys, &[Scale::Linear]), hidden, seed)
    }

    #[test]
    fn learns_noiseless_linear_target() {
        let (tr, va) = (linear_data(200, 1), linear_data(50, 2));
        let mut m = fitted_mlp(&tr, &[], 3);
        let cfg = TrainConfig { max_epochs: 3000, ..TrainConfig::default() };
        let h = train(&mut m, &tr, &va, &cfg).unwrap();
        let val_mae: f64 =
            va.iter().map(|(x, y)| (m.predict(x).unwrap()[0] - y[0]).abs()).sum::<f64>() / va.len() as f64;
        assert!(val_mae < 1e-3, "val MAE {val_mae} after {} epochs", h.records.len());
        assert!(h.records.len() < cfg.max_epochs || h.stopped_early);
    }

    #[test]
    fn stagnant_validation_stops_after_patience() {
        let (tr, va) = (linear_data(40, 1), linear_data(10, 2));
        let mut m = fitted_mlp(&tr, &[4], 3);
        let cfg = TrainConfig { learning_rate: 0.0, patience: 125, max_epochs: 1000, ..TrainConfig::default() };
        let h = train(&mut m, &tr, &va, &cfg).unwrap();
        assert_eq!(h.best_epoch, 1);
        assert_eq!(h.records.len(), 1 + 125);
        assert!(h.stopped_early);
    }

    #[test]
    fn restores_best_weights_and_is_deterministic() {
        let (tr, va) = (linear_data(64, 5), linear_data(16, 6));
        let cfg = TrainConfig { max_epochs: 300, patience: 20, ..TrainConfig::default() };
        let run = || {
            let mut m = fitted_mlp(&tr, &[8, 8], 11);
            let h = train(&mut m, &tr, &va, &cfg).unwrap();
            (m, h)
        };
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(m1, m2);
        assert_eq!(h1.to_csv(), h2.to_csv());
        let min = h1.records.iter().map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(
            mae(
                &m1.core,
                &va.iter().map(|(x, y)| (m1.input_norm.apply(x), m1.output_norm.apply(y))).collect::<Vec<_>>()
            ),
            min
        );
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { patience: 5000, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { learning_rate: f64::NAN, ..ok }.validate().is_err());
    }

    #[test]
    fn non_finite_loss_aborts() {
        let mut tr = linear_data(10, 1);
        tr[0].1[0] = f64::INFINITY;
        let va = linear_data(5, 2);
        let mut m = fitted_mlp(&va, &[], 0);
        let err = train(&mut m, &tr, &va, &TrainConfig { max_epochs: 10, patience: 5, ..TrainConfig::default() });
        assert!(matches!(err, Err(SurrogateError::NonFinite { epoch: 1, .. })));
    }
}
