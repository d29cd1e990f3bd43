//! Approximation of a `[0,1]`-valued density by a characteristic function.
//!
//! The grid is tiled by blocks of diameter below the requested scale. Inside
//! each block the mass is gathered into a centered sub-box of the same aspect,
//! rounded to whole cells.

use serde::Serialize;

use super::GridDensity;
use crate::error::{Error, Result};

/// Bookkeeping returned by [`rectangle_quantize`].
#[derive(Clone, Debug, Serialize)]
pub struct QuantizeReport {
    /// Block side length in cells.
    pub block_cells: usize,
    /// Diameter of a full block; bounds the L-infinity transport distance.
    pub block_diameter: f64,
    pub mass_in: f64,
    pub mass_out: f64,
    pub blocks: usize,
}

pub fn rectangle_quantize(rho: &GridDensity, cell_diam: f64) -> Result<(GridDensity, QuantizeReport)> {
    rho.check_unit_bounded(1e-9)?;
    let spec = rho.spec().clone();
    let d = spec.dimension();
    let h = spec.cell_size;
    let sqrt_d = (d as f64).sqrt();
    // Largest block with diameter strictly below cell_diam.
    let mut b = (cell_diam / (h * sqrt_d)).floor() as usize;
    while b > 0 && b as f64 * h * sqrt_d >= cell_diam {
        b -= 1;
    }
    if b == 0 {
        return Err(Error::ResolutionTooCoarse(format!(
            "cell diameter {cell_diam} below grid cell diagonal {}",
            h * sqrt_d
        )));
    }
    let nblocks: Vec<usize> = spec.dims.iter().map(|&n| n.div_ceil(b)).collect();
    let total_blocks: usize = nblocks.iter().product();
    let mut out = vec![0.0; spec.n_cells()];
    let src = rho.values();

    for blk in 0..total_blocks {
        // Block multi-index, row-major.
        let mut rem = blk;
        let mut bidx = vec![0; d];
        for ax in (0..d).rev() {
            bidx[ax] = rem % nblocks[ax];
            rem /= nblocks[ax];
        }
        let lo: Vec<usize> = (0..d).map(|ax| bidx[ax] * b).collect();
        let len: Vec<usize> = (0..d).map(|ax| b.min(spec.dims[ax] - lo[ax])).collect();
        let ncells: usize = len.iter().product();
        let cell_at = |k: usize, sub: &[usize]| -> usize {
            let mut r = k;
            let mut idx = vec![0; d];
            for ax in (0..d).rev() {
                idx[ax] = lo[ax] + r % sub[ax];
                r /= sub[ax];
            }
            spec.flatten(&idx)
        };

        let mut mass = 0.0;
        let mut binary = true;
        for k in 0..ncells {
            let v = src[cell_at(k, &len)];
            mass += v;
            if v.abs() > 1e-12 && (v - 1.0).abs() > 1e-12 {
                binary = false;
            }
        }
        if binary {
            for k in 0..ncells {
                let c = cell_at(k, &len);
                out[c] = if src[c] > 0.5 { 1.0 } else { 0.0 };
            }
            continue;
        }
        let n_fill = (mass.round() as usize).min(ncells);
        if n_fill == 0 {
            continue;
        }
        // Homothetic sub-box with at least n_fill cells, centered in the block.
        let s = (n_fill as f64 / ncells as f64).powf(1.0 / d as f64);
        let mut side: Vec<usize> =
            len.iter().map(|&l| ((s * l as f64).ceil() as usize).clamp(1, l)).collect();
        while side.iter().product::<usize>() < n_fill {
            let ax = (0..d).min_by_key(|&ax| side[ax] * 1000 / len[ax]).unwrap();
            side[ax] = (side[ax] + 1).min(len[ax]);
        }
        let off: Vec<usize> = (0..d).map(|ax| (len[ax] - side[ax]) / 2).collect();
        for k in 0..n_fill {
            let mut r = k;
            let mut idx = vec![0; d];
            for ax in (0..d).rev() {
                idx[ax] = lo[ax] + off[ax] + r % side[ax];
                r /= side[ax];
            }
            out[spec.flatten(&idx)] = 1.0;
        }
    }

    let q = GridDensity::new(spec, out)?;
    let report = QuantizeReport {
        block_cells: b,
        block_diameter: b as f64 * h * sqrt_d,
        mass_in: rho.mass(),
        mass_out: q.mass(),
        blocks: total_blocks,
    };
    Ok((q, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;

    #[test]
    fn boxes_are_fixed_points() {
        let spec = GridSpec::cube(2, 0.0, 1.0, 40).unwrap();
        let rho = GridDensity::indicator(spec, |x| (0.2..0.55).contains(&x[0]) && (0.1..0.7).contains(&x[1])).unwrap();
        let (q, _) = rectangle_quantize(&rho, 0.2).unwrap();
        assert_eq!(q, rho);
    }

    #[test]
    fn half_density_mass() {
        let spec = GridSpec::cube(2, -0.5, 1.5, 80).unwrap();
        let rho = GridDensity::from_fn(spec, |x| {
            if (0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]) { 0.5 } else { 0.0 }
        })
        .unwrap();
        let (q, rep) = rectangle_quantize(&rho, 0.2).unwrap();
        assert!(q.values().iter().all(|&v| v == 0.0 || v == 1.0));
        assert!((q.mass() - 0.5).abs() <= rep.blocks as f64 * 0.5 * q.cell_volume());
        assert!((rep.mass_in - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_coarse() {
        let spec = GridSpec::cube(2, 0.0, 1.0, 10).unwrap();
        let rho = GridDensity::zeros(spec);
        assert!(matches!(rectangle_quantize(&rho, 0.1), Err(Error::ResolutionTooCoarse(_))));
    }
}
