//! Training-control primitives: Newbob learning-rate scheduling, the greedy
//! layer-wise pretraining schedule and focal loss.
//!
//! Dev scores are "lower is better". Newbob decays the learning rate after an
//! epoch whose relative improvement over the best earlier score,
//! `(best - score) / |best|`, does not exceed the threshold. The first epoch
//! never decays.

use crate::error::{Error, Result};

pub const NEWBOB_DECAY: f64 = 0.9;
pub const INITIAL_LR: f64 = 0.0009;
pub const FOCAL_GAMMA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NewbobState {
    current_lr: f64,
    decay: f64,
    rel_improvement_threshold: f64,
    min_lr: f64,
    history: Vec<(u32, f64)>,
}

impl NewbobState {
    pub fn new(initial_lr: f64, decay: f64, rel_improvement_threshold: f64, min_lr: f64) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::invalid(format!("newbob decay {decay} must lie in (0, 1)")));
        }
        if !(min_lr > 0.0 && initial_lr >= min_lr && initial_lr.is_finite()) {
            return Err(Error::invalid(format!(
                "need initial lr {initial_lr} >= min lr {min_lr} > 0"
            )));
        }
        if !rel_improvement_threshold.is_finite() {
            return Err(Error::invalid("newbob threshold must be finite"));
        }
        Ok(Self {
            current_lr: initial_lr,
            decay,
            rel_improvement_threshold,
            min_lr,
            history: Vec::new(),
        })
    }

    pub fn current_lr(&self) -> f64 {
        self.current_lr
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn threshold(&self) -> f64 {
        self.rel_improvement_threshold
    }

    pub fn min_lr(&self) -> f64 {
        self.min_lr
    }

    /// `(epoch, dev_score)` pairs seen so far.
    pub fn history(&self) -> &[(u32, f64)] {
        &self.history
    }

    pub fn best_score(&self) -> Option<f64> {
        self.history.iter().map(|h| h.1).reduce(f64::min)
    }
}

impl Default for NewbobState {
    fn default() -> Self {
        Self::new(INITIAL_LR, NEWBOB_DECAY, 0.0, 1e-8).expect("defaults are valid")
    }
}

pub fn newbob_step(state: &NewbobState, epoch: u32, dev_score: f64) -> Result<NewbobState> {
    if !dev_score.is_finite() {
        return Err(Error::invalid(format!("dev score {dev_score} is not finite")));
    }
    let mut next = state.clone();
    if let Some(best) = state.best_score() {
        let improvement = if best == 0.0 {
            if dev_score < 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            (best - dev_score) / best.abs()
        };
        if improvement <= state.rel_improvement_threshold {
            next.current_lr = (state.current_lr * state.decay).max(state.min_lr);
        }
    }
    next.history.push((epoch, dev_score));
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PretrainSchedule {
    total_layers: u32,
    epochs_per_stage: u32,
}

impl PretrainSchedule {
    pub fn new(total_layers: u32, epochs_per_stage: u32) -> Result<Self> {
        if total_layers == 0 || epochs_per_stage == 0 {
            return Err(Error::invalid("total_layers and epochs_per_stage must be at least 1"));
        }
        Ok(Self {
            total_layers,
            epochs_per_stage,
        })
    }

    pub fn total_layers(&self) -> u32 {
        self.total_layers
    }

    pub fn epochs_per_stage(&self) -> u32 {
        self.epochs_per_stage
    }

    /// First epoch at which the full stack is active.
    pub fn full_depth_epoch(&self) -> u32 {
        (self.total_layers - 1) * self.epochs_per_stage
    }
}

impl Default for PretrainSchedule {
    fn default() -> Self {
        Self {
            total_layers: 6,
            epochs_per_stage: 1,
        }
    }
}

pub fn active_layers(sched: &PretrainSchedule, epoch: u32) -> u32 {
    sched.total_layers.min(1 + epoch / sched.epochs_per_stage)
}

fn check_focal_args(p: f64, gamma: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("focal loss needs p in (0, 1], got {p}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("focal loss needs gamma >= 0, got {gamma}")));
    }
    Ok(())
}

/// `-(1 - p)^gamma ln p` for the true-class probability `p`.
pub fn focal_loss(p: f64, gamma: f64) -> Result<f64> {
    check_focal_args(p, gamma)?;
    Ok(-(1.0 - p).powf(gamma) * p.ln())
}

/// `d/dp` of [`focal_loss`]:
/// `gamma (1 - p)^(gamma - 1) ln p - (1 - p)^gamma / p`.
pub fn focal_loss_grad(p: f64, gamma: f64) -> Result<f64> {
    check_focal_args(p, gamma)?;
    let q = 1.0 - p;
    // at p = 1 the first term is 0 * ln 1 even when (1 - p)^(gamma - 1) blows up
    let first = if gamma == 0.0 || p == 1.0 {
        0.0
    } else {
        gamma * q.powf(gamma - 1.0) * p.ln()
    };
    Ok(first - q.powf(gamma) / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn replay(state: NewbobState, scores: &[f64]) -> Vec<f64> {
        let mut s = state;
        scores
            .iter()
            .enumerate()
            .map(|(e, &v)| {
                s = newbob_step(&s, e as u32, v).unwrap();
                s.current_lr()
            })
            .collect()
    }

    #[test]
    fn improving_scores_keep_lr() {
        let lrs = replay(NewbobState::default(), &[3.0, 2.5, 2.0, 1.9, 1.8]);
        assert!(lrs.iter().all(|&lr| lr == 0.0009));
    }

    #[test]
    fn stagnation_decays() {
        let lrs = replay(NewbobState::default(), &[2.0, 2.0, 2.0, 2.0]);
        assert!((lrs[3] - 0.0006561).abs() < 1e-12);
        assert_eq!(lrs[0], 0.0009);
    }

    #[test]
    fn threshold_requires_enough_improvement() {
        let s = NewbobState::new(1.0, 0.5, 0.1, 0.01).unwrap();
        // 5% better: below the 10% threshold
        assert_eq!(replay(s.clone(), &[1.0, 0.95]), vec![1.0, 0.5]);
        assert_eq!(replay(s, &[1.0, 0.8]), vec![1.0, 1.0]);
    }

    #[test]
    fn lr_is_clamped_at_floor() {
        let s = NewbobState::new(0.001, 0.9, 0.0, 0.001).unwrap();
        assert!(replay(s, &[1.0, 1.0, 1.0]).iter().all(|&lr| lr == 0.001));
        assert!(NewbobState::new(0.001, 1.0, 0.0, 1e-6).is_err());
        assert!(NewbobState::new(1e-7, 0.9, 0.0, 1e-6).is_err());
        assert!(newbob_step(&NewbobState::default(), 0, f64::NAN).is_err());
    }

    #[test]
    fn newbob_is_pure() {
        let s = NewbobState::default();
        let a = newbob_step(&s, 0, 1.0).unwrap();
        assert!(s.history().is_empty());
        assert_eq!(a.history(), &[(0, 1.0)]);
    }

    #[test]
    fn layer_schedule() {
        let s = PretrainSchedule::default();
        assert_eq!(active_layers(&s, 0), 1);
        assert_eq!(active_layers(&s, 5), 6);
        assert_eq!(active_layers(&s, 50), 6);
        assert_eq!(s.full_depth_epoch(), 5);
        let two = PretrainSchedule::new(6, 2).unwrap();
        assert_eq!(active_layers(&two, 3), 2);
        assert!(PretrainSchedule::new(0, 1).is_err());
    }

    #[test]
    fn focal_special_cases() {
        for g in [0.0, 0.5, 2.0, 5.0] {
            assert_eq!(focal_loss(1.0, g).unwrap(), 0.0);
        }
        for p in [0.01, 0.3, 0.7, 0.99] {
            assert_eq!(focal_loss(p, 0.0).unwrap(), -f64::ln(p));
        }
        assert!(focal_loss(0.0, 2.0).is_err());
        assert!(focal_loss(-0.1, 2.0).is_err());
        assert!(focal_loss(0.5, -1.0).is_err());
        assert!(focal_loss_grad(0.0, 2.0).is_err());
        assert_eq!(focal_loss_grad(1.0, 2.0).unwrap(), 0.0);
        assert_eq!(focal_loss_grad(1.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let h = 1e-6;
        for p in [0.1, 0.5, 0.9] {
            let fd = (focal_loss(p + h, 2.0).unwrap() - focal_loss(p - h, 2.0).unwrap()) / (2.0 * h);
            let g = focal_loss_grad(p, 2.0).unwrap();
            assert!(((g - fd) / fd).abs() < 1e-6, "p={p}: {g} vs {fd}");
        }
    }
}
