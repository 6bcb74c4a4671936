//! Deterministic rate coding: a pixel's intensity fixes how many of the
//! presentation steps it spikes on, and those spikes are spread evenly.

use crate::error::{Error, Result};

/// Fixed cycle layout for one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PresentationTiming {
    pub presentation_steps: usize,
    pub silence_steps: usize,
    pub label_step: usize,
}

pub const TIMING: PresentationTiming = PresentationTiming {
    presentation_steps: 10,
    silence_steps: 10,
    label_step: 19,
};

pub const PRESENTATION_STEPS: usize = TIMING.presentation_steps;
pub const CYCLE_STEPS: usize = TIMING.presentation_steps + TIMING.silence_steps;

pub const MAX_SPIKES: u8 = PRESENTATION_STEPS as u8;

const _: () = assert!(TIMING.label_step == CYCLE_STEPS - 1);

/// round(intensity * 10 / 255), half-up.
pub fn spike_count(intensity: u32) -> Result<u8> {
    if intensity > 255 {
        return Err(Error::Range(format!(
            "intensity {intensity} outside 0..=255"
        )));
    }
    Ok(spike_count_u8(intensity as u8))
}

#[inline]
pub(crate) fn spike_count_u8(intensity: u8) -> u8 {
    let scaled = 2 * PRESENTATION_STEPS as u32 * intensity as u32 + 255;
    (scaled / 510) as u8
}

/// Whether a pixel with `n` spikes fires at presentation step `t`.
#[inline]
pub fn fires_at(n: u8, t: usize) -> bool {
    let n = n as usize;
    (t + 1) * n / PRESENTATION_STEPS > t * n / PRESENTATION_STEPS
}

/// Active input indices for each presentation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeSchedule {
    steps: Vec<Vec<u16>>,
}

impl SpikeSchedule {
    pub fn step(&self, t: usize) -> &[u16] {
        &self.steps[t]
    }

    pub fn steps(&self) -> impl Iterator<Item = &[u16]> {
        self.steps.iter().map(Vec::as_slice)
    }

    /// Total spikes delivered by input `i` over the window.
    pub fn count_for(&self, i: u16) -> usize {
        self.steps
            .iter()
            .filter(|s| s.binary_search(&i).is_ok())
            .count()
    }

    pub fn total_spikes(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}

pub fn encode(pixels: &[u8]) -> SpikeSchedule {
    let counts: Vec<u8> = pixels.iter().map(|&p| spike_count_u8(p)).collect();
    let steps = (0..PRESENTATION_STEPS)
        .map(|t| {
            counts
                .iter()
                .enumerate()
                .filter(|&(_, &n)| fires_at(n, t))
                .map(|(i, _)| i as u16)
                .collect()
        })
        .collect();
    SpikeSchedule { steps }
}
