//! Forward and inverse discrete Fourier transforms on the periodic grid.
//!
//! Two real fields are transformed per complex FFT (`a + i b`), and the
//! forward split `(Z(k) ± conj Z(-k)) / 2` makes the returned coefficients
//! exactly Hermitian, bit for bit. Every line FFT is independent, so the
//! parallel split over lines never changes the result.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::Fft;

use super::field::{PhysicalField, SpectralField};
use super::grid::Grid;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Forward transform of a real field. Rejects NaN/Inf samples.
pub fn forward_transform(f: &PhysicalField) -> Result<SpectralField> {
    if let Some((component, index)) = f.first_non_finite() {
        return Err(Error::NonFinite { component, index });
    }
    let refs: Vec<&[f64]> = f.comps().iter().map(|c| c.as_slice()).collect();
    Ok(SpectralField::from_parts(
        f.grid(),
        forward_real(f.grid(), &refs),
        false,
    ))
}

/// Inverse transform to real samples. Rejects coefficients that are not
/// Hermitian-symmetric, since they would describe a complex field.
pub fn inverse_transform(g: &SpectralField) -> Result<PhysicalField> {
    g.validate_hermitian()?;
    Ok(inverse_unchecked(g))
}

pub(crate) fn inverse_unchecked(g: &SpectralField) -> PhysicalField {
    let refs: Vec<&[Complex64]> = g.comps().iter().map(|c| c.as_slice()).collect();
    PhysicalField::from_parts(g.grid(), inverse_real(g.grid(), &refs))
}

/// Fourier coefficients of each real input array.
pub(crate) fn forward_real(grid: &Grid, inputs: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let scale = 1.0 / grid.len() as f64;
    let mut out = Vec::with_capacity(inputs.len());
    for pair in inputs.chunks(2) {
        let mut z: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        fft_nd(grid, &mut z, grid.forward_plan());
        for v in z.iter_mut() {
            *v *= scale;
        }
        let mut first = vec![ZERO; z.len()];
        let mut second = if pair.len() == 2 {
            vec![ZERO; z.len()]
        } else {
            Vec::new()
        };
        for idx in 0..z.len() {
            let zk = z[idx];
            let zm = z[grid.mirror(idx)].conj();
            first[idx] = (zk + zm) * 0.5;
            if pair.len() == 2 {
                let d = zk - zm;
                // d / (2i) written as a component swap so the split stays exactly Hermitian
                second[idx] = Complex64::new(0.5 * d.im, -0.5 * d.re);
            }
        }
        out.push(first);
        if pair.len() == 2 {
            out.push(second);
        }
    }
    out
}

/// Real samples of each Hermitian coefficient array. Imaginary round-off is dropped.
pub(crate) fn inverse_real(grid: &Grid, inputs: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(inputs.len());
    for pair in inputs.chunks(2) {
        let mut z: Vec<Complex64> = match pair {
            [a, b] => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| Complex64::new(x.re - y.im, x.im + y.re))
                .collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        fft_nd(grid, &mut z, grid.inverse_plan());
        out.push(z.iter().map(|v| v.re).collect());
        if pair.len() == 2 {
            out.push(z.iter().map(|v| v.im).collect());
        }
    }
    out
}

/// Unnormalized multi-dimensional FFT in place, row-major layout.
fn fft_nd(grid: &Grid, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
    let n = grid.n();
    let dim = grid.dim();
    let scratch_len = plan.get_inplace_scratch_len();
    let lines = data.len() / n;
    let per_task = (lines / (4 * rayon::current_num_threads())).max(1);

    for axis in (0..dim).rev() {
        let inner = n.pow((dim - 1 - axis) as u32);
        if inner == 1 {
            data.par_chunks_mut(per_task * n).for_each_init(
                || vec![ZERO; scratch_len],
                |scratch, chunk| plan.process_with_scratch(chunk, scratch),
            );
        } else {
            let block = n * inner;
            data.par_chunks_mut(block).for_each_init(
                || (vec![ZERO; block], vec![ZERO; scratch_len]),
                |(tmp, scratch), blk| {
                    for r in 0..n {
                        for c in 0..inner {
                            tmp[c * n + r] = blk[r * inner + c];
                        }
                    }
                    plan.process_with_scratch(tmp, scratch);
                    for r in 0..n {
                        for c in 0..inner {
                            blk[r * inner + c] = tmp[c * n + r];
                        }
                    }
                },
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// Direct O(N^2) DFT with the same normalization, used as an oracle.
    fn naive_dft(grid: &Grid, f: &[f64]) -> Vec<Complex64> {
        let len = grid.len();
        (0..len)
            .map(|k| {
                let xi = grid.wavevector_int(k);
                let mut acc = ZERO;
                for p in 0..len {
                    let x = grid.point(p);
                    let phase: f64 = (0..grid.dim())
                        .map(|d| xi[d] as f64 * x[d] * 2.0 * PI / grid.box_length())
                        .sum();
                    acc += Complex64::from_polar(f[p], -phase);
                }
                acc / len as f64
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 3] {
            let grid = Grid::periodic(dim, 4).unwrap();
            let f = PhysicalField::from_fn(&grid, 3, |_, out| {
                for v in out.iter_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
            });
            let g = forward_transform(&f).unwrap();
            for c in 0..3 {
                let want = naive_dft(&grid, f.component(c));
                for (a, b) in g.component(c).iter().zip(&want) {
                    assert!((a - b).norm() < 1e-14, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn forward_output_is_exactly_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let grid = Grid::periodic(3, 8).unwrap();
        let f = PhysicalField::from_fn(&grid, 3, |_, out| {
            for v in out.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        });
        let g = forward_transform(&f).unwrap();
        assert_eq!(g.hermitian_defect().1, 0.0);
    }

    #[test]
    fn rejects_non_finite_input() {
        let grid = Grid::periodic(2, 4).unwrap();
        let mut f = PhysicalField::zeros(&grid, 2);
        f.component_mut(1)[5] = f64::NAN;
        match forward_transform(&f) {
            Err(Error::NonFinite { component, index }) => {
                assert_eq!((component, index), (1, 5));
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn rejects_broken_symmetry() {
        let grid = Grid::periodic(2, 8).unwrap();
        let mut g = SpectralField::zeros(&grid, 1);
        let idx = grid.index_of(&[1, 0]).unwrap();
        g.component_mut(0)[idx] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            inverse_transform(&g),
            Err(Error::NotHermitian { .. })
        ));
    }
}
