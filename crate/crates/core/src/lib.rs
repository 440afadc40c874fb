//! Compositional active inference over finite polynomial interfaces.
//!
//! Interfaces are finite polynomials ([`Polynomial`]) and wirings are
//! dependent lenses ([`Lens`]). Generative models are stochastic dependent
//! Moore machines ([`systems::GenSystem`]) that can be rewired along lenses
//! and placed in parallel. An [`agent::Agent`] pairs a model with a controller
//! that filters beliefs and selects typed actions by expected free energy;
//! agents compose hierarchically. [`meta`] bundles interfaces and models into
//! one category whose morphisms are changes of structure.

pub mod agent;
pub mod category;
pub mod error;
pub mod finset;
pub mod hom;
pub mod laws;
pub mod lens;
pub mod meta;
pub mod poly;
pub mod random;
pub mod rng;
pub mod stoch;
pub mod systems;

pub use agent::{Agent, Belief, HierAgent};
pub use category::{FinCategory, Morphism};
pub use error::{Error, Result};
pub use finset::FinSet;
pub use hom::HomPolynomial;
pub use lens::Lens;
pub use poly::Polynomial;
pub use stoch::{Channel, Dist};
pub use systems::{GenSystem, MooreSystem, PrioredGenSystem};
