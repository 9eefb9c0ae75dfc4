//! Evidential multi-criteria decision analysis: AHP criterion weights,
//! possibilistic evaluations mapped onto a frame of discernment, evidential
//! fusion (Dempster, PCR5/PCR6, DSm classic) and belief-based decisions.

pub mod ahp;
pub mod decision;
pub mod frame;
pub mod fusion;
pub mod mapping;
pub mod mass;
pub mod pipeline;
pub mod possibility;

pub use decision::{Strategy, TieBreak};
pub use frame::{Frame, FocalElement, Mode};
pub use fusion::Rule;
pub use mass::MassFunction;
