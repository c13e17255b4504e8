//! Inverse-engineered longitudinal coupling for fast qubit readout.
//!
//! A qubit coupled longitudinally to a cavity, `g_z(t)·σ^z(a† + a)`,
//! displaces the cavity field up or down depending on the qubit state. This
//! crate designs `g_z(t)` so that the pointer states separate quickly, then
//! predicts the separation and homodyne SNR in closed form and checks the
//! predictions against a brute-force master-equation simulation.
//!
//! Modules, bottom up:
//!
//! * [`modulation`]: waveforms with derivative access.
//! * [`pulse_design`]: the polynomial and trigonometric ansätze, the
//!   g_c → g_z map, boundary checks.
//! * [`cavity`]: mean cavity field and pointer separation.
//! * [`readout`]: homodyne signal, noise, SNR and scaling fits.
//! * [`floquet`]: counter-diabatic term, its rotated-frame and Floquet
//!   emulations, Bessel functions.
//! * [`oracle`]: Lindblad simulation on qubit ⊗ truncated Fock space.
//! * [`genetic`]: genetic search over Fourier-series pulses.
//! * [`circuit`]: transmon/SQUID circuit model.
//! * [`time_optimal`]: bang-bang analysis of the minimal readout time.

pub mod cavity;
pub mod circuit;
pub mod error;
pub mod floquet;
pub mod genetic;
pub mod modulation;
pub mod ode;
pub mod oracle;
pub mod params;
pub mod pulse_design;
pub mod quadrature;
pub mod readout;
pub mod time_optimal;

pub use error::{ReadoutError, Result};
pub use modulation::{Derivatives, Modulation, ModulationKind};
pub use params::SystemParams;
