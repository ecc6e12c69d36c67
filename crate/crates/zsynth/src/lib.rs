//! Synthesis of fitted one-port impedances into Brune and lossy-Foster
//! circuits, quantization of the Brune circuit, and classical/quantum
//! relaxation analysis of a junction-shunted qubit.

pub mod brune;
pub mod foster;
pub mod io;
pub mod mp;
pub mod poly;
pub mod quant;
pub mod ratmodel;
pub mod response;
