//! GuessWhat?! questioner with an ask-vs-guess decision module: data
//! handling, the neural submodels, training, self-play and the dialogue
//! analyses.

pub mod analysis;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod decider;
pub mod error;
pub mod game;
pub mod neuro;
pub mod oracle;
pub mod pipeline;
pub mod profile;
pub mod questioner;
pub mod trainer;

pub use error::{Error, Result};

pub type Tensor32 = neuro::Tensor<f32>;
pub type Tensor64 = neuro::Tensor<f64>;
pub type Oracle32 = oracle::Oracle<f32>;
pub type QGen32 = questioner::QGen<f32>;
pub type Guesser32 = questioner::Guesser<f32>;
pub type Decider32 = decider::Decider<f32>;
