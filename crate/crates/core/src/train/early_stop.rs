use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    /// New best; keep this epoch's parameters.
    Improved,
    Continue,
    /// `patience` consecutive epochs without improvement.
    Stop,
}

/// Tracks the best validation loss and counts epochs without a strict
/// improvement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    /// A NaN loss never counts as an improvement, even before any best exists.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> Decision {
        let improved = !loss.is_nan() && self.best.is_none_or(|(_, best)| loss < best);
        if improved {
            self.best = Some((epoch, loss));
            self.stale = 0;
            return Decision::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            Decision::Stop
        } else {
            Decision::Continue
        }
    }

    /// `(epoch, loss)` of the best observation so far.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}
