//! The columnar network: one column of plastic LIF neurons per class, all of
//! them fully connected to the input grid.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config;
use crate::encoder::{self, CYCLE_STEPS, PRESENTATION_STEPS};
use crate::error::{Error, Result};
use crate::neuron::{lif_update, LifState, SynapseArray};
use crate::resource::{ResourceFunctionConfig, ResourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Zero,
    Random,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Zero => "zero",
            InitMode::Random => "random",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitMode::Zero),
            "random" => Ok(InitMode::Random),
            other => Err(Error::Config(format!(
                "init_mode must be zero or random, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub n_columns: usize,
    pub n_micro: usize,
    pub n_inputs: usize,
    /// Membrane leak time constant, in timesteps.
    pub tau_v: f64,
    pub resource_fn: ResourceFunctionConfig,
    /// Dopamine quantum added on reward.
    pub d_reward: f64,
    /// Dopamine quantum removed on punishment.
    pub d_punish: f64,
    pub init_mode: InitMode,
    pub init_scale: f64,
    pub seed: u64,
    /// Restrict plasticity to inputs that spiked during the presentation window.
    pub eligibility_gated: bool,
    /// Draw the single-reward winner from distinct neurons instead of from
    /// every recorded spike.
    pub rew_dedup: bool,
    /// Zero all membrane potentials before each training image.
    pub reset_between_images: bool,
}

impl Default for NetworkConfig {
    /// Linear resource function with random initialization; the values are
    /// the sweep winner in `configs/linear_random.cfg`.
    fn default() -> Self {
        Self {
            n_columns: 10,
            n_micro: 15,
            n_inputs: crate::mnist::PIXELS,
            tau_v: 2.8157765542993936,
            resource_fn: ResourceFunctionConfig {
                kind: ResourceKind::Linear,
                w_min: -0.03324745043681342,
                w_max: 0.022845488563284628,
            },
            d_reward: 0.01031634145193685,
            d_punish: 0.01031634145193685,
            init_mode: InitMode::Random,
            init_scale: 0.019620471887373744,
            seed: 0,
            eligibility_gated: true,
            rew_dedup: false,
            reset_between_images: false,
        }
    }
}

impl NetworkConfig {
    pub fn n_neurons(&self) -> usize {
        self.n_columns * self.n_micro
    }

    /// Sets reward and punishment quanta to the same value.
    pub fn with_quantum(mut self, d: f64) -> Self {
        self.d_reward = d;
        self.d_punish = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_columns == 0 || self.n_micro == 0 || self.n_inputs == 0 {
            return Err(Error::Config("network dimensions must be non-zero".into()));
        }
        if self.n_inputs > u16::MAX as usize + 1 {
            return Err(Error::Config(format!(
                "n_inputs {} exceeds 65536",
                self.n_inputs
            )));
        }
        if !(self.tau_v.is_finite() && self.tau_v > 0.0) {
            return Err(Error::Config(format!(
                "tau_v must be positive, got {}",
                self.tau_v
            )));
        }
        self.resource_fn.validate()?;
        for (name, d) in [("d_reward", self.d_reward), ("d_punish", self.d_punish)] {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {d}")));
            }
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::Config(format!(
                "init_scale must be non-negative, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NeuronId {
    pub column: usize,
    pub micro: usize,
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.column, self.micro)
    }
}

/// Fire flags for every neuron after one timestep, column-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutput {
    n_micro: usize,
    fired: Vec<bool>,
}

impl StepOutput {
    pub fn new(n_columns: usize, n_micro: usize) -> Self {
        Self {
            n_micro,
            fired: vec![false; n_columns * n_micro],
        }
    }

    pub fn fired(&self, id: NeuronId) -> bool {
        self.fired[id.column * self.n_micro + id.micro]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.fired
    }

    pub fn fired_ids(&self) -> impl Iterator<Item = NeuronId> + '_ {
        let n_micro = self.n_micro;
        self.fired
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(move |(i, _)| NeuronId {
                column: i / n_micro,
                micro: i % n_micro,
            })
    }

    pub fn count(&self) -> usize {
        self.fired.iter().filter(|&&f| f).count()
    }
}

/// Work counters, not part of the checkpoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub timesteps: u64,
    pub plasticity_calls: u64,
}

#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    states: Vec<LifState>,
    synapses: Vec<SynapseArray>,
    /// The same weights stored input-major (`input * n_neurons + neuron`), so
    /// a spiking input adds one contiguous row to every neuron's drive.
    by_input: Vec<f64>,
    drive: Vec<f64>,
    pub counters: Counters,
}

impl Network {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_neurons() * config.n_inputs;
        let resources: Vec<f64> = match config.init_mode {
            InitMode::Zero => vec![0.0; n],
            InitMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                (0..n)
                    .map(|_| rng.random::<f64>() * config.init_scale)
                    .collect()
            }
        };
        Self::from_resources(config, resources)
    }

    /// Builds a network from flat (column, micro, input)-ordered resources.
    pub fn from_resources(config: NetworkConfig, resources: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let expected = config.n_neurons() * config.n_inputs;
        if resources.len() != expected {
            return Err(Error::Config(format!(
                "expected {expected} resources, got {}",
                resources.len()
            )));
        }
        let state = LifState::new(config.tau_v)?;
        let synapses: Vec<SynapseArray> = resources
            .chunks_exact(config.n_inputs)
            .map(|r| SynapseArray::from_resources(r.to_vec(), &config.resource_fn))
            .collect();
        let n = config.n_neurons();
        let mut by_input = vec![0.0; n * config.n_inputs];
        for (j, syn) in synapses.iter().enumerate() {
            for (i, &w) in syn.weights().iter().enumerate() {
                by_input[i * n + j] = w;
            }
        }
        Ok(Self {
            states: vec![state; n],
            synapses,
            by_input,
            drive: vec![0.0; n],
            config,
            counters: Counters::default(),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn index(&self, id: NeuronId) -> usize {
        debug_assert!(id.column < self.config.n_columns && id.micro < self.config.n_micro);
        id.column * self.config.n_micro + id.micro
    }

    pub fn ids(&self) -> impl Iterator<Item = NeuronId> {
        let (nc, nm) = (self.config.n_columns, self.config.n_micro);
        (0..nc).flat_map(move |column| (0..nm).map(move |micro| NeuronId { column, micro }))
    }

    pub fn state(&self, id: NeuronId) -> &LifState {
        &self.states[self.index(id)]
    }

    pub fn state_mut(&mut self, id: NeuronId) -> &mut LifState {
        let i = self.index(id);
        &mut self.states[i]
    }

    pub fn synapses(&self, id: NeuronId) -> &SynapseArray {
        &self.synapses[self.index(id)]
    }

    /// Sets one resource and re-derives its weight.
    pub fn set_resource(&mut self, id: NeuronId, input: usize, value: f64) {
        let (j, n) = (self.index(id), self.config.n_neurons());
        let syn = &mut self.synapses[j];
        syn.set_resource(input, value, &self.config.resource_fn);
        self.by_input[input * n + j] = syn.weights()[input];
    }

    /// Adds `delta` to the resources of `id` on the listed inputs.
    pub fn adjust_resources(&mut self, id: NeuronId, inputs: &[u16], delta: f64) {
        let (j, n) = (self.index(id), self.config.n_neurons());
        let syn = &mut self.synapses[j];
        syn.adjust(inputs, delta, &self.config.resource_fn);
        for &i in inputs {
            self.by_input[i as usize * n + j] = syn.weights()[i as usize];
        }
    }

    pub fn resources_flat(&self) -> Vec<f64> {
        self.synapses
            .iter()
            .flat_map(|s| s.resources().iter().copied())
            .collect()
    }

    pub fn reset_potentials(&mut self) {
        for s in &mut self.states {
            s.u = 0.0;
        }
    }

    /// Advances every neuron one timestep. No winner-take-all gating: any
    /// number of neurons may fire.
    pub fn forward_step(&mut self, active: &[u16]) -> StepOutput {
        let mut out = StepOutput::new(self.config.n_columns, self.config.n_micro);
        self.forward_step_into(active, &mut out);
        out
    }

    pub fn forward_step_into(&mut self, active: &[u16], out: &mut StepOutput) {
        accumulate_drive(&self.by_input, active, &mut self.drive);
        for ((state, &drive), fired) in self
            .states
            .iter_mut()
            .zip(&self.drive)
            .zip(out.fired.iter_mut())
        {
            *fired = state.step_unchecked(drive);
        }
        self.counters.timesteps += 1;
    }

    pub fn silence_step(&mut self) -> StepOutput {
        self.forward_step(&[])
    }

    pub fn inference(&self, pixels: &[u8]) -> Inference<'_> {
        Inference::new(self, pixels)
    }

    /// Spikes per column over a full 20-step cycle, starting from rest and
    /// leaving the network untouched.
    pub fn column_spike_counts(&self, pixels: &[u8]) -> Vec<u32> {
        let mut run = self.inference(pixels);
        while run.step() {}
        run.into_counts()
    }

    /// OUT readout: the column with the most spikes, lowest index on ties.
    pub fn infer(&self, pixels: &[u8]) -> usize {
        argmax_lowest(&self.column_spike_counts(pixels))
    }

    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = config::network_to_text(&self.config);
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(header.as_bytes())?;
        for dim in [
            self.config.n_columns,
            self.config.n_micro,
            self.config.n_inputs,
        ] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for syn in &self.synapses {
            for r in syn.resources() {
                w.write_all(&r.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_checkpoint(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint file".into()));
        }
        let header_len = read_u32(&mut r)? as usize;
        if r.len() < header_len {
            return Err(Error::Length {
                expected: header_len,
                found: r.len(),
            });
        }
        let header = std::str::from_utf8(&r[..header_len])
            .map_err(|_| Error::Format("checkpoint header is not UTF-8".into()))?;
        let config = config::network_from_text(header)?;
        r = &r[header_len..];
        let dims = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
        if dims.map(|d| d as usize) != [config.n_columns, config.n_micro, config.n_inputs] {
            return Err(Error::Format(format!(
                "checkpoint dimensions {dims:?} disagree with header"
            )));
        }
        let n = config.n_neurons() * config.n_inputs;
        if r.len() != n * 8 {
            return Err(Error::Length {
                expected: n * 8,
                found: r.len(),
            });
        }
        let resources = r
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_resources(config, resources)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_checkpoint_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_bytes(&bytes)
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"COLSNN\x00\x01";

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::Length {
        expected: buf.len(),
        found: r.len(),
    })
}

fn read_u32(r: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn argmax_lowest(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Per-neuron sum of the weights of the active inputs, summed in `active`
/// order (the same order as [`crate::neuron::weighted_input`]).
fn accumulate_drive(by_input: &[f64], active: &[u16], drive: &mut [f64]) {
    let n = drive.len();
    drive.fill(0.0);
    for &i in active {
        let row = &by_input[i as usize * n..(i as usize + 1) * n];
        for (d, &w) in drive.iter_mut().zip(row) {
            *d += w;
        }
    }
}

/// A read-only 20-step inference pass over private membrane state, so it can
/// be advanced one timestep at a time (e.g. for latency measurements).
pub struct Inference<'a> {
    net: &'a Network,
    schedule: encoder::SpikeSchedule,
    potentials: Vec<f64>,
    drive: Vec<f64>,
    counts: Vec<u32>,
    t: usize,
}

impl<'a> Inference<'a> {
    fn new(net: &'a Network, pixels: &[u8]) -> Self {
        Self {
            net,
            schedule: encoder::encode(pixels),
            potentials: vec![0.0; net.config.n_neurons()],
            drive: vec![0.0; net.config.n_neurons()],
            counts: vec![0; net.config.n_columns],
            t: 0,
        }
    }

    pub fn current_step(&self) -> usize {
        self.t
    }

    /// Runs the next timestep; returns false once the cycle is complete.
    pub fn step(&mut self) -> bool {
        if self.t >= CYCLE_STEPS {
            return false;
        }
        let active: &[u16] = if self.t < PRESENTATION_STEPS {
            self.schedule.step(self.t)
        } else {
            &[]
        };
        let decay = self.net.states[0].decay();
        let n_micro = self.net.config.n_micro;
        if active.is_empty() {
            for (potentials, count) in self
                .potentials
                .chunks_exact_mut(n_micro)
                .zip(&mut self.counts)
            {
                for u in potentials {
                    let (next, fired) = lif_update(*u, decay, 0.0);
                    *u = next;
                    *count += fired as u32;
                }
            }
            self.t += 1;
            return self.t < CYCLE_STEPS;
        }
        accumulate_drive(&self.net.by_input, active, &mut self.drive);
        for (potentials, (drive, count)) in self
            .potentials
            .chunks_exact_mut(n_micro)
            .zip(self.drive.chunks_exact(n_micro).zip(&mut self.counts))
        {
            for (u, &x) in potentials.iter_mut().zip(drive) {
                let (next, fired) = lif_update(*u, decay, x);
                *u = next;
                *count += fired as u32;
            }
        }
        self.t += 1;
        self.t < CYCLE_STEPS
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn into_counts(self) -> Vec<u32> {
        self.counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnist::PIXELS;

    fn small(kind: ResourceKind, w_min: f64, init: InitMode) -> NetworkConfig {
        NetworkConfig {
            resource_fn: ResourceFunctionConfig::new(kind, w_min, 0.5).unwrap(),
            init_mode: init,
            init_scale: 0.02,
            tau_v: 5.0,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn zero_init_weights() {
        let classic = Network::new(small(ResourceKind::Classic, -0.3, InitMode::Zero)).unwrap();
        assert!(classic
            .ids()
            .all(|id| classic.synapses(id).weights().iter().all(|&w| w == -0.3)));

        let linear = Network::new(small(ResourceKind::Linear, -0.3, InitMode::Zero)).unwrap();
        assert!(linear
            .ids()
            .all(|id| linear.synapses(id).weights().iter().all(|&w| w == 0.0)));
        assert!(linear.ids().all(|id| linear.state(id).u == 0.0));
    }

    #[test]
    fn random_init_is_seeded() {
        let cfg = small(ResourceKind::Linear, -0.3, InitMode::Random);
        let a = Network::new(cfg.clone()).unwrap();
        let b = Network::new(cfg.clone()).unwrap();
        assert_eq!(a.to_checkpoint_bytes(), b.to_checkpoint_bytes());
        let r = a.resources_flat();
        assert!(r.iter().all(|&x| (0.0..=0.02).contains(&x)));
        assert!(r.iter().any(|&x| x > 0.0));

        let c = Network::new(NetworkConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.resources_flat(), c.resources_flat());
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = NetworkConfig {
            tau_v: 0.0,
            ..NetworkConfig::default()
        };
        assert!(matches!(Network::new(bad), Err(Error::Config(_))));
        let bad = NetworkConfig::default().with_quantum(0.0);
        assert!(Network::new(bad).is_err());
    }

    #[test]
    fn empty_input_on_fresh_network() {
        let mut net = Network::new(small(ResourceKind::Linear, -0.3, InitMode::Zero)).unwrap();
        let out = net.forward_step(&[]);
        assert_eq!(out.count(), 0);
        assert!(net.ids().all(|id| net.state(id).u == 0.0));
    }

    #[test]
    fn driven_neuron_fires() {
        let mut net = Network::new(small(ResourceKind::Linear, -0.3, InitMode::Zero)).unwrap();
        let target = NeuronId {
            column: 4,
            micro: 9,
        };
        let twin = NeuronId {
            column: 7,
            micro: 2,
        };
        for i in 0..4 {
            net.set_resource(target, i, 0.3);
            net.set_resource(twin, i, 0.3);
        }
        let out = net.forward_step(&[0, 1, 2, 3]);
        let fired: Vec<_> = out.fired_ids().collect();
        assert_eq!(fired, vec![target, twin]);
        assert!((net.state(target).u - 0.2).abs() < 1e-12);
        assert_eq!(net.state(target).u, net.state(twin).u);
    }

    #[test]
    fn silence_decay() {
        let mut net = Network::new(NetworkConfig {
            tau_v: 5.0,
            ..small(ResourceKind::Linear, -0.3, InitMode::Zero)
        })
        .unwrap();
        let ids: Vec<_> = net.ids().collect();
        for &id in &ids {
            net.state_mut(id).u = 0.99;
        }
        for _ in 0..10 {
            assert_eq!(net.silence_step().count(), 0);
        }
        let expected = 0.99 * (-2.0f64).exp();
        assert!((expected - 0.134).abs() < 1e-3);
        for &id in &ids {
            assert!((net.state(id).u - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn silence_single_step_decay() {
        // tau chosen so that exp(-1/tau) = 0.9
        let tau = -1.0 / 0.9f64.ln();
        let mut net = Network::new(NetworkConfig {
            tau_v: tau,
            ..small(ResourceKind::Linear, -0.3, InitMode::Zero)
        })
        .unwrap();
        let ids: Vec<_> = net.ids().collect();
        for &id in &ids {
            net.state_mut(id).u = 0.8;
        }
        assert_eq!(net.silence_step().count(), 0);
        for &id in &ids {
            assert!((net.state(id).u - 0.72).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_tie_break() {
        assert_eq!(argmax_lowest(&[3, 9, 1, 0, 0, 0, 0, 0, 0, 0]), 1);
        assert_eq!(argmax_lowest(&[0; 10]), 0);
        assert_eq!(argmax_lowest(&[2, 5, 5]), 1);
    }

    #[test]
    fn zero_network_zero_image_predicts_zero() {
        let net = Network::new(small(ResourceKind::Linear, -0.3, InitMode::Zero)).unwrap();
        assert_eq!(net.column_spike_counts(&[0; PIXELS]), vec![0; 10]);
        assert_eq!(net.infer(&[0; PIXELS]), 0);
    }

    #[test]
    fn hand_wired_column_wins() {
        let mut net = Network::new(small(ResourceKind::Linear, -0.3, InitMode::Zero)).unwrap();
        let mut img = [0u8; PIXELS];
        img[100..120].fill(255);
        for micro in 0..15 {
            for p in 100..120 {
                net.set_resource(NeuronId { column: 6, micro }, p, 0.1);
            }
        }
        // 20 inputs x 0.1 = 2.0 per step: fire every step, residual climbs by 1
        // and keeps firing through the silence window until it drains.
        let counts = net.column_spike_counts(&img);
        let mut u = 0.0f64;
        let decay = (-1.0f64 / 5.0).exp();
        let mut brute = 0;
        for t in 0..20 {
            u = u * decay + if t < 10 { 20.0 * 0.1 } else { 0.0 };
            if u > 1.0 {
                u -= 1.0;
                brute += 1;
            }
        }
        assert_eq!(counts[6], 15 * brute);
        assert!(counts.iter().enumerate().all(|(c, &n)| c == 6 || n == 0));
        assert_eq!(net.infer(&img), 6);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut net = Network::new(small(ResourceKind::Classic, -0.3, InitMode::Random)).unwrap();
        net.set_resource(
            NeuronId {
                column: 0,
                micro: 0,
            },
            0,
            -1.0e-300,
        );
        net.set_resource(
            NeuronId {
                column: 9,
                micro: 14,
            },
            783,
            0.1 + 0.2,
        );
        let bytes = net.to_checkpoint_bytes();
        let back = Network::from_checkpoint_bytes(&bytes).unwrap();
        assert_eq!(back.config(), net.config());
        let (a, b) = (net.resources_flat(), back.resources_flat());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(back.to_checkpoint_bytes(), bytes);

        assert!(Network::from_checkpoint_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(Network::from_checkpoint_bytes(b"garbage!garbage!").is_err());
    }

    #[test]
    fn input_major_copy_tracks_every_update() {
        use crate::neuron::weighted_input;
        let mut net = Network::new(small(ResourceKind::Linear, -0.5, InitMode::Random)).unwrap();
        net.adjust_resources(
            NeuronId {
                column: 2,
                micro: 3,
            },
            &[5, 17, 400],
            -0.3,
        );
        net.adjust_resources(
            NeuronId {
                column: 9,
                micro: 14,
            },
            &[0, 783],
            0.7,
        );
        net.set_resource(
            NeuronId {
                column: 0,
                micro: 0,
            },
            100,
            -2.0,
        );
        let n = net.config.n_neurons();
        for (j, syn) in net.synapses.iter().enumerate() {
            for (i, &w) in syn.weights().iter().enumerate() {
                assert_eq!(net.by_input[i * n + j].to_bits(), w.to_bits());
            }
        }
        let active: Vec<u16> = (0..784).step_by(7).collect();
        let mut drive = vec![0.0; n];
        accumulate_drive(&net.by_input, &active, &mut drive);
        for (d, syn) in drive.iter().zip(&net.synapses) {
            assert_eq!(d.to_bits(), weighted_input(syn, &active).to_bits());
        }
    }
}
