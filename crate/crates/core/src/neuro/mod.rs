//! Minimal deterministic numerical core: tensors, a reverse-mode tape for
//! the layer set the dialogue models use, Adam, and finite-difference
//! gradient checking.

pub mod adam;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod scalar;
pub mod tensor;

pub use adam::{adam_step, Adam, AdamConfig, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use graph::{Activation, Backward, Gradients, Graph, ParamId, ParamStore, Var};
pub use layers::{
    embedding_lookup, glorot, lstm_encode, lstm_step, lstm_step_eager, mlp_apply, register_mlp, Dense, LstmState, LstmVars,
    LstmWeights,
};
pub use scalar::Scalar;
pub use tensor::{argmax, cross_entropy, softmax, softmax_slice, Tensor};
