use std::f64::consts::PI;

/// One-cycle learning rate: cosine rise from `start_lr` to `max_lr` over the
/// first `pct_start` of the steps, then cosine decay to `start_lr / final_div`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneCycleSchedule {
    pub start_lr: f64,
    pub max_lr: f64,
    pub total_steps: usize,
    pub pct_start: f64,
    pub final_div: f64,
    step: usize,
}

impl OneCycleSchedule {
    pub fn new(start_lr: f64, max_lr: f64, total_steps: usize) -> Self {
        OneCycleSchedule {
            start_lr,
            max_lr,
            total_steps,
            pct_start: 0.3,
            final_div: 1e4,
            step: 0,
        }
    }

    fn peak_step(&self) -> usize {
        let last = self.total_steps.saturating_sub(1);
        ((self.pct_start * last as f64).round() as usize).min(last)
    }

    /// Learning rate at an arbitrary step; clamps past the end.
    pub fn lr_at(&self, step: usize) -> f64 {
        let last = self.total_steps.saturating_sub(1);
        let step = step.min(last);
        let peak = self.peak_step();
        let anneal = |from: f64, to: f64, frac: f64| {
            if frac <= 0.0 {
                from
            } else if frac >= 1.0 {
                to
            } else {
                to + (from - to) * 0.5 * (1.0 + (PI * frac).cos())
            }
        };
        if step <= peak {
            if peak == 0 {
                return if last == 0 { self.start_lr } else { self.max_lr.max(self.start_lr) };
            }
            anneal(self.start_lr, self.max_lr, step as f64 / peak as f64)
        } else {
            let frac = (step - peak) as f64 / (last - peak) as f64;
            anneal(self.max_lr, self.start_lr / self.final_div, frac)
        }
    }

    pub fn current(&self) -> f64 {
        self.lr_at(self.step)
    }

    pub fn current_step(&self) -> usize {
        self.step
    }

    /// Returns the current rate and advances.
    pub fn next_lr(&mut self) -> f64 {
        let lr = self.current();
        self.step += 1;
        lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_peak() {
        let s = OneCycleSchedule::new(8e-4, 0.01, 1000);
        assert_eq!(s.lr_at(0), 8e-4);
        let max = (0..1000).map(|t| s.lr_at(t)).fold(f64::MIN, f64::max);
        assert!((max - 0.01).abs() < 1e-15);
        assert!(s.lr_at(999) <= 8e-4);
    }

    #[test]
    fn rises_then_falls() {
        let s = OneCycleSchedule::new(1e-5, 5e-5, 200);
        let lrs: Vec<f64> = (0..200).map(|t| s.lr_at(t)).collect();
        let peak = lrs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(lrs[..=peak].windows(2).all(|w| w[1] >= w[0]));
        assert!(lrs[peak..].windows(2).all(|w| w[1] <= w[0]));
    }
}
