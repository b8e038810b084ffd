//! Exponential moving average with the trading-style smoothing factor
//! `alpha = 2 / (period + 1)`.

/// Recursive EMA state. The first sample seeds the average; afterwards
/// `current <- alpha * x + (1 - alpha) * current`.
#[derive(Debug, Clone)]
pub struct Ema {
    period: u32,
    alpha: f64,
    current: Option<f64>,
    count: u64,
}

impl Ema {
    /// `period` is the averaging span in samples, at least 1.
    pub fn new(period: u32) -> Self {
        assert!(period >= 1, "EMA period must be >= 1");
        Ema {
            period,
            alpha: 2.0 / (period as f64 + 1.0),
            current: None,
            count: 0,
        }
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Update with one sample and return the new average.
    pub fn update(&mut self, x: f64) -> f64 {
        let next = match self.current {
            None => x,
            Some(cur) => self.alpha * x + (1.0 - self.alpha) * cur,
        };
        self.current = Some(next);
        self.count += 1;
        next
    }

    pub fn value(&self) -> Option<f64> {
        self.current
    }

    /// True once the average has seen at least a full period of samples.
    pub fn is_warm(&self) -> bool {
        self.count >= self.period as u64
    }
}
