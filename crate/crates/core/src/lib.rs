//! Rate-compatible information reconciliation over the binary symmetric
//! channel.
//!
//! Rate algebra and ensemble arithmetic are generic over [`scalar::Scalar`]
//! (`f32`, `f64` or the exact [`Rational`]); decoding and density evolution
//! over floating types. The aliases below fix the usual choices.

pub mod channel;
pub mod codes;
pub mod decoder;
pub mod density_evolution;
pub mod prng;
pub mod protocol;
pub mod rate_adapt;
pub mod scalar;
pub mod sim;

pub use num_rational::Ratio;

/// Exact rational scalar for rate algebra.
pub type Rational = Ratio<i64>;

/// Degree distribution with `f64` coefficients.
pub type Ensemble = codes::DegreeDistribution<f64>;
/// Degree distribution with exact coefficients.
pub type ExactEnsemble = codes::DegreeDistribution<Rational>;
pub type Density = density_evolution::QuantizedDensity<f64>;
pub type DeSettings = density_evolution::DeConfig<f64>;
pub type Channel = density_evolution::EnsembleChannel<f64>;
pub type Decoder = decoder::DecoderConfig<f64>;
