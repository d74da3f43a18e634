//! Seeded random fields, used by property tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;

/// Hermitian field with independent uniform coefficients on the 2/3 sphere
/// (or on every non-Nyquist mode when `dealiased` is false). The zero mode
/// is left at zero.
pub fn random_hermitian(grid: &Grid, components: usize, seed: u64, dealiased: bool) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid, components);
    for c in 0..components {
        let comp = f.component_mut(c);
        for idx in 1..grid.len() {
            let m = grid.mirror(idx);
            if m < idx || grid.is_nyquist(idx) || (dealiased && !grid.is_retained(idx)) {
                continue;
            }
            let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            comp[idx] = v;
            comp[m] = v.conj();
        }
    }
    f
}
