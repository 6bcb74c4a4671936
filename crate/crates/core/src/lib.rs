//! A columnar spiking neural network trained with a local, dopamine-modulated
//! learning rule.
//!
//! Ten columns of fifteen leaky integrate-and-fire neurons watch a 28x28
//! input grid. Images are rate coded into a deterministic spike schedule,
//! presented for 10 timesteps and followed by 10 silent ones. During
//! training the column matching the label is rewarded and wrongly firing
//! neurons are punished at the last step; at inference the column with the
//! most spikes wins.

pub mod bench;
pub mod config;
pub mod encoder;
pub mod error;
pub mod mnist;
pub mod network;
pub mod neuron;
pub mod par;
pub mod plasticity;
pub mod resource;
pub mod trainer;
pub mod viz;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use mnist::{ImageSet, LabeledImage, Split};
pub use network::{InitMode, Network, NetworkConfig, NeuronId, StepOutput};
pub use resource::{ResourceFunctionConfig, ResourceKind};
