//! Chapters of the guide in `book/src`, compiled here so every snippet runs
//! as a doc-test.

#[doc = include_str!("../../../README.md")]
pub mod readme {}

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/pulse_design.md")]
pub mod pulse_design {}

#[doc = include_str!("../../../book/src/cavity_and_snr.md")]
pub mod cavity_and_snr {}

#[doc = include_str!("../../../book/src/floquet.md")]
pub mod floquet {}

#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}

#[doc = include_str!("../../../book/src/genetic.md")]
pub mod genetic {}

#[doc = include_str!("../../../book/src/circuit.md")]
pub mod circuit {}

#[doc = include_str!("../../../book/src/time_optimal.md")]
pub mod time_optimal {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
