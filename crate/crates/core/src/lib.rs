//! Multi-terminal quantum transport through a finite scatterer coupled to
//! semi-infinite single-channel tight-binding leads.
//!
//! The on-shell transition matrix is obtained by an exact finite-rank
//! reduction of the Lippmann-Schwinger equation ([`scattering`]). Charge and
//! energy currents and the entropy production follow from Landauer-Buttiker
//! integrals over the open-channel energies ([`transport`]). The optional
//! [`quench`] module evolves a truncated system after a sudden coupling and
//! provides an independent check of the steady currents.

pub mod leads;
pub mod model;
#[cfg(feature = "quench")]
pub mod quench;
pub mod scattering;
pub mod transport;

pub use model::{
    band, open_channels, validate_model, LeadId, LeadSpec, LeadVector, ModelDescription, ModelError,
    ReservoirState, SystemModel,
};
pub use scattering::{ScatteringError, ScatteringSolver, SMatrix, TMatrix, Tolerances};
pub use transport::{QuadratureSettings, TransportError, TransportResult};
