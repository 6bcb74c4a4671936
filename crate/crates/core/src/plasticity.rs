//! Dopamine-modulated and anti-Hebbian learning, applied once per image.
//!
//! During the 10 presentation steps every spike is booked: neurons of the
//! label's column go to the reward list, neurons of any other column to the
//! punishment set. At the final silence step (step 19) the dopamine pump
//! acts:
//!
//! * reward list empty: every neuron of the label column gains `d_reward`
//!   (group reward);
//! * otherwise one entry of the reward list, drawn uniformly from the
//!   training rng, gains `d_reward` (single reward / winner-take-all);
//! * each punished neuron loses `d_punish`.
//!
//! With eligibility gating on, only the synapses whose input delivered at
//! least one spike during the presentation window are touched.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::encoder::{self, SpikeSchedule, CYCLE_STEPS, PRESENTATION_STEPS, TIMING};
use crate::error::{Error, Result};
use crate::mnist::LabeledImage;
use crate::network::{Network, NeuronId, StepOutput};

#[derive(Debug, Clone)]
pub struct EpisodeLedger {
    label: usize,
    rew: Vec<NeuronId>,
    pun: BTreeSet<NeuronId>,
    eligible_mask: Vec<bool>,
    eligible: Vec<u16>,
    applied: bool,
}

impl EpisodeLedger {
    pub fn new(label: usize, n_inputs: usize) -> Self {
        Self {
            label,
            rew: Vec::new(),
            pun: BTreeSet::new(),
            eligible_mask: vec![false; n_inputs],
            eligible: Vec::new(),
            applied: false,
        }
    }

    pub fn label(&self) -> usize {
        self.label
    }

    /// Correct-column spikes in firing order; a neuron appears once per spike.
    pub fn rew(&self) -> &[NeuronId] {
        &self.rew
    }

    pub fn pun(&self) -> &BTreeSet<NeuronId> {
        &self.pun
    }

    /// Inputs that spiked at least once so far, in first-spike order.
    pub fn eligible(&self) -> &[u16] {
        &self.eligible
    }

    pub fn record_step(&mut self, fired: &StepOutput, active: &[u16], step: usize) -> Result<()> {
        if step >= PRESENTATION_STEPS {
            return Err(Error::Usage(format!(
                "record_step at step {step}, outside the presentation window"
            )));
        }
        for id in fired.fired_ids() {
            if id.column == self.label {
                self.rew.push(id);
            } else {
                self.pun.insert(id);
            }
        }
        for &i in active {
            let seen = &mut self.eligible_mask[i as usize];
            if !*seen {
                *seen = true;
                self.eligible.push(i);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    SingleReward,
    GroupReward,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlasticityUpdate {
    pub kind: RewardKind,
    pub rewarded: Vec<NeuronId>,
    pub punished: Vec<NeuronId>,
    pub d_reward: f64,
    pub d_punish: f64,
}

impl PlasticityUpdate {
    /// One CSV line: `image,kind,rewarded,n_punished`. Group rewards name the
    /// column as `c:*`.
    pub fn log_line(&self, image_index: usize) -> String {
        let (kind, who) = match self.kind {
            RewardKind::SingleReward => ("single", self.rewarded[0].to_string()),
            RewardKind::GroupReward => ("group", format!("{}:*", self.rewarded[0].column)),
        };
        format!("{image_index},{kind},{who},{}", self.punished.len())
    }
}

pub fn apply_plasticity<R: Rng + ?Sized>(
    net: &mut Network,
    ledger: &mut EpisodeLedger,
    rng: &mut R,
) -> Result<PlasticityUpdate> {
    if ledger.applied {
        return Err(Error::Usage(
            "plasticity already applied for this image".into(),
        ));
    }
    ledger.applied = true;
    net.counters.plasticity_calls += 1;

    let cfg = net.config().clone();
    let all_inputs: Vec<u16>;
    let inputs: &[u16] = if cfg.eligibility_gated {
        &ledger.eligible
    } else {
        all_inputs = (0..cfg.n_inputs as u16).collect();
        &all_inputs
    };

    let label = ledger.label;
    let (kind, rewarded) = if ledger.rew.is_empty() {
        let column: Vec<NeuronId> = (0..cfg.n_micro)
            .map(|micro| NeuronId {
                column: label,
                micro,
            })
            .collect();
        (RewardKind::GroupReward, column)
    } else {
        let candidates: Vec<NeuronId> = if cfg.rew_dedup {
            let mut seen = BTreeSet::new();
            ledger
                .rew
                .iter()
                .copied()
                .filter(|id| seen.insert(*id))
                .collect()
        } else {
            ledger.rew.clone()
        };
        let pick = candidates[rng.random_range(0..candidates.len())];
        (RewardKind::SingleReward, vec![pick])
    };

    for &id in &rewarded {
        net.adjust_resources(id, inputs, cfg.d_reward);
    }
    let punished: Vec<NeuronId> = ledger.pun.iter().copied().collect();
    for &id in &punished {
        net.adjust_resources(id, inputs, -cfg.d_punish);
    }

    Ok(PlasticityUpdate {
        kind,
        rewarded,
        punished,
        d_reward: cfg.d_reward,
        d_punish: cfg.d_punish,
    })
}

/// One training image, advanced a timestep at a time.
pub struct TrainingEpisode {
    schedule: SpikeSchedule,
    ledger: EpisodeLedger,
    out: StepOutput,
    t: usize,
}

impl TrainingEpisode {
    pub fn begin(net: &mut Network, image: &LabeledImage) -> Self {
        if net.config().reset_between_images {
            net.reset_potentials();
        }
        let cfg = net.config();
        Self {
            schedule: encoder::encode(image.pixels()),
            ledger: EpisodeLedger::new(image.label(), cfg.n_inputs),
            out: StepOutput::new(cfg.n_columns, cfg.n_micro),
            t: 0,
        }
    }

    pub fn current_step(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t >= CYCLE_STEPS
    }

    pub fn ledger(&self) -> &EpisodeLedger {
        &self.ledger
    }

    /// Runs timestep `current_step()`. Returns the plasticity update on the
    /// label step, `None` on every other step.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        net: &mut Network,
        rng: &mut R,
    ) -> Result<Option<PlasticityUpdate>> {
        let t = self.t;
        if t >= CYCLE_STEPS {
            return Err(Error::Usage("episode already finished".into()));
        }
        self.t += 1;
        if t < PRESENTATION_STEPS {
            let active = self.schedule.step(t);
            net.forward_step_into(active, &mut self.out);
            self.ledger.record_step(&self.out, active, t)?;
            Ok(None)
        } else {
            net.forward_step_into(&[], &mut self.out);
            if t == TIMING.label_step {
                apply_plasticity(net, &mut self.ledger, rng).map(Some)
            } else {
                Ok(None)
            }
        }
    }
}

pub fn train_on_image<R: Rng + ?Sized>(
    net: &mut Network,
    image: &LabeledImage,
    rng: &mut R,
) -> Result<PlasticityUpdate> {
    let mut episode = TrainingEpisode::begin(net, image);
    let mut update = None;
    while !episode.is_done() {
        if let Some(u) = episode.step(net, rng)? {
            update = Some(u);
        }
    }
    Ok(update.expect("label step is inside the cycle"))
}
