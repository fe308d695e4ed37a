//! Laplacian, Markov operator and the restricted spectral data of the
//! natural representation on `ℓᵖ(X)`.
//!
//! Everything is computed per component; random starts come from
//! per-component ChaCha streams so results do not depend on scheduling.

pub mod amplify;
pub mod gap;
pub mod kazhdan;
pub mod lp;
pub mod markov;
pub mod params;
pub mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use amplify::{amplified_invariants_check, amplified_system, AmplifiedCheck};
pub use gap::{dense_restricted_norm, restricted_gap_l2, GapMethod, GapOptions, GapResult};
pub use kazhdan::{kazhdan_component, kazhdan_iterate, KazhdanOptions, KazhdanTable};
pub use lp::{conjugate, interpolation_upper, restricted_gap_lp, LpInterval, LpOptions};
pub use markov::{laplacian, markov, IdentityMode, InvariantProjector, MarkovOperator};
pub use params::{
    c_bound, modulus_lp, relate_parameters, s_bound, sample_witness, Given, ModulusFunction, ParameterBounds,
};
pub use report::{spectral_report, uniform_gap_verdict, ComponentSpectrum, SpectralOptions, SpectralReport, Verdict};

/// Purpose tags separating the random streams of one seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Gap = 1,
    Lp = 2,
    Witness = 3,
    Decompose = 4,
    Mazur = 5,
}

/// Deterministic generator for `(seed, purpose, component)`.
pub fn component_rng(seed: u64, stream: Stream, component: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 40) | component as u64);
    rng
}
