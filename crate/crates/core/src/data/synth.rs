//! Synthetic analog of the TwoPatterns benchmark.
//!
//! Every series is a flat baseline carrying two pulse events, one in each
//! half. An `Up` pulse is a plateau at `-h` followed by a plateau at `+h`;
//! a `Down` pulse is the mirror image. Both return to the baseline. The class
//! is the ordered pair of pulse directions. Event positions and plateau widths
//! are drawn per series, and Gaussian noise is added on top.
//!
//! This imitates the plateau signature of TwoPatterns; it is not the archive
//! data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdf::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pulse {
    Up,
    Down,
}

/// Class index to pulse sequence.
pub fn class_pattern(classes: usize, class: usize) -> [Pulse; 2] {
    use Pulse::*;
    match classes {
        2 => [[Up, Up], [Down, Down]][class],
        _ => [[Up, Up], [Up, Down], [Down, Up], [Down, Down]][class],
    }
}

pub const AMPLITUDE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    pub len: usize,
    pub sigma: f64,
    pub seed: u64,
}

/// Where the two events of one series sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventLayout {
    /// 0-based start and the two plateau widths of each event.
    pub events: [(usize, usize, usize); 2],
}

impl EventLayout {
    /// 0-based indices where the noiseless level changes (the new level's
    /// first sample).
    pub fn boundaries(&self) -> Vec<usize> {
        self.events
            .iter()
            .flat_map(|&(start, w1, w2)| [start, start + w1, start + w1 + w2])
            .collect()
    }
}

fn draw_layout(rng: &mut impl Rng, len: usize) -> EventLayout {
    let half = len / 2;
    let min_w = 3.max(len / 16);
    let max_w = min_w.max(len / 8);
    let mut events = [(0, 0, 0); 2];
    for (k, ev) in events.iter_mut().enumerate() {
        let w1 = rng.random_range(min_w..=max_w);
        let w2 = rng.random_range(min_w..=max_w);
        // Keep two baseline samples on either side of the event, inside its half.
        let lo = k * half + 2;
        let hi = (k + 1) * half - 2 - (w1 + w2);
        let start = rng.random_range(lo..=hi.max(lo));
        *ev = (start, w1, w2);
    }
    EventLayout { events }
}

/// Noiseless levels of a series with the given pulses and layout.
pub fn render(len: usize, pulses: [Pulse; 2], layout: &EventLayout) -> Vec<f64> {
    let mut x = vec![0.0; len];
    for (pulse, &(start, w1, w2)) in pulses.iter().zip(&layout.events) {
        let (first, second) = match pulse {
            Pulse::Up => (-AMPLITUDE, AMPLITUDE),
            Pulse::Down => (AMPLITUDE, -AMPLITUDE),
        };
        x[start..start + w1].fill(first);
        x[start + w1..start + w1 + w2].fill(second);
    }
    x
}

/// Generates `per_class` series for each class, interleaved by class, with
/// their layouts.
pub fn synthesize_with_layouts(cfg: &SynthConfig) -> Result<Vec<(TimeSeries, EventLayout)>> {
    if cfg.classes != 2 && cfg.classes != 4 {
        return Err(Error::InvalidArgument(format!(
            "classes must be 2 or 4, got {}",
            cfg.classes
        )));
    }
    if cfg.len < 32 {
        return Err(Error::InvalidArgument(format!(
            "series length must be at least 32, got {}",
            cfg.len
        )));
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad noise level {}", cfg.sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.sigma).expect("finite non-negative sigma");
    let mut out = Vec::with_capacity(cfg.classes * cfg.per_class);
    for _ in 0..cfg.per_class {
        for class in 0..cfg.classes {
            let layout = draw_layout(&mut rng, cfg.len);
            let mut values = render(cfg.len, class_pattern(cfg.classes, class), &layout);
            if cfg.sigma > 0.0 {
                for v in &mut values {
                    *v += noise.sample(&mut rng);
                }
            }
            out.push((TimeSeries::labeled(values, class)?, layout));
        }
    }
    Ok(out)
}

pub fn synthesize_twopatterns(cfg: &SynthConfig) -> Result<Vec<TimeSeries>> {
    Ok(synthesize_with_layouts(cfg)?
        .into_iter()
        .map(|(ts, _)| ts)
        .collect())
}
