//! File formats, serialization helpers and the command-line driver.

pub mod cli;
pub mod config;
pub mod csv;
pub mod model_json;
pub mod netlist;
pub mod provenance;
pub mod touchstone;

use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::Serializer;

/// Serializes a complex number as `{"re": .., "im": ..}`.
pub fn ser_c64<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Complex", 2)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.end()
}
