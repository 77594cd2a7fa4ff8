//! Two-asset Hawkes "flocking" model for paired high-frequency price
//! processes.
//!
//! Each asset has an up and a down tick component. Excitation depends on
//! whether an event moves its asset toward or away from the other one, so
//! the two prices are pulled together. The crate covers simulation
//! ([`sim`]), maximum-likelihood calibration ([`estimate`]), tick-data
//! ingest ([`ingest`]), branching-ratio risk ([`risk`]), rolling copula
//! CoVaR ([`covar`]) and the per-day batch driver ([`pipeline`]).

pub mod covar;
pub mod diagnostics;
pub mod dist;
pub mod estimate;
pub mod ingest;
pub mod io;
pub mod model;
pub mod optim;
pub mod pipeline;
pub mod recovery;
pub mod risk;
pub mod sim;
