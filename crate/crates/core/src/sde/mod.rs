//! Noise streams and integrators for the second-order fast–slow system.

pub mod averaged;
pub mod ensemble;
pub mod integrate;
pub mod lemma;
pub mod momentum;
pub mod noise;
pub mod path;

pub use averaged::{hermite_at, resample_hermite, simulate_averaged, simulate_averaged_with};
pub use ensemble::run_ensemble;
pub use integrate::{
    macro_grid, simulate_first_order, simulate_frozen, simulate_second_order, simulate_tracks, Anchor, FastGrid, FastSource,
    InitialState, PathKind, RunConfig, DEFAULT_FAST_FACTOR,
};
pub use lemma::{check_integration_by_parts, LemmaReport};
pub use momentum::{step_momentum_exp, ExpDampingWeight};
pub use noise::{brownian_increments, derive_seed, splitmix64, NoiseStream, NoiseTally};
pub use path::{interpolate, SamplePath};
