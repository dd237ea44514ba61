//! Shared fixtures for the benchmarks.

use ambc_core::signal::{draw_ambient, noise_vector};
use ambc_core::{AmbientSpec, BdSymbol, CVector, CompositeChannel, SampleMatrix, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Composite channel and `|s|^2` of the default scenario at `gamma_db`.
pub fn default_link(gamma_db: f64) -> (Scenario, CompositeChannel, f64) {
    let sc = Scenario { gamma_db, ..Scenario::default() };
    let cc = sc.composite().expect("default scenario is valid");
    let s2 = sc.s_amplitude().powi(2);
    (sc, cc, s2)
}

/// `l` preamble observations of `g(x0) s + n` at the default geometry.
pub fn preamble(l: usize, seed: u64) -> SampleMatrix {
    let (sc, cc, _) = default_link(28.0);
    let spec = AmbientSpec::new(sc.ambient, 1.0).expect("unit power");
    let amp = sc.s_amplitude();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<CVector> = (0..l)
        .map(|_| cc.g(BdSymbol::X0) * (draw_ambient(&spec, &mut rng) * amp) + noise_vector(sc.n_r, &mut rng))
        .collect();
    SampleMatrix::from_columns(&cols).expect("columns share a length")
}
