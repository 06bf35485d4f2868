//! Minimal neural-network kernel: LSTM cells, a binary LSTM cell with
//! cell-state batch normalization, dense layers, L2 losses and SGD.
//! Every backward pass is written out by hand.

mod binary;
pub mod gradcheck;
mod linear;
mod loss;
mod lstm;
mod optim;
mod params;

pub use binary::{
    binary_backward, binary_forward, binary_lstm_step, sign, ste_grad, BatchNorm, BatchStats,
    Binarize, BinaryCache, BinaryStep, CellMode, NormMode, BN_EPSILON, BN_MOMENTUM,
};
pub use linear::Linear;
pub use loss::{l2_distance, l2_rows};
pub use lstm::{sigmoid, GateCache, LstmCache, LstmParams};
pub use optim::{clip_grad_norm, sgd_step, Adam};
pub use params::{uniform_init, uniform_init_vec, ParamSet};

#[cfg(test)]
mod grad_tests;
