/// Smallest drop in validation loss that counts as progress.
pub const MIN_IMPROVEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Tracks the best validation loss and the snapshot taken at that epoch.
#[derive(Debug, Clone)]
pub struct EarlyStopping<S> {
    patience: usize,
    min_improvement: f64,
    best: Option<(usize, f64, S)>,
    stale: usize,
}

impl<S> EarlyStopping<S> {
    pub fn new(patience: usize) -> Self {
        Self::with_threshold(patience, MIN_IMPROVEMENT)
    }

    pub fn with_threshold(patience: usize, min_improvement: f64) -> Self {
        assert!(patience >= 1, "patience must be at least one epoch");
        Self { patience, min_improvement, best: None, stale: 0 }
    }

    /// Records one epoch. `snapshot` runs only when the epoch is a new best.
    ///
    /// Any decrease replaces the kept snapshot, but only a decrease of at
    /// least the threshold resets the patience counter.
    pub fn observe(&mut self, epoch: usize, loss: f64, snapshot: impl FnOnce() -> S) -> StopDecision {
        let (lower, significant) = match &self.best {
            None => (true, true),
            Some((_, best, _)) => (loss < *best, loss < best - self.min_improvement),
        };
        if lower {
            self.best = Some((epoch, loss, snapshot()));
        }
        if significant {
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        if self.stale >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.as_ref().map(|b| b.0)
    }

    pub fn best_loss(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.1)
    }

    pub fn into_best(self) -> Option<(usize, f64, S)> {
        self.best
    }
}
