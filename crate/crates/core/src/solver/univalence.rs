use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::chain::Nodes;
use crate::error::{Error, Result};
use crate::grid::{DomainGeometry, SampledField};

fn margin_of(hp: &[C64], hpp: &[C64], nodes: &Nodes, grid: &crate::grid::ComplexGrid) -> Result<f64> {
    let scale = hp.iter().zip(&nodes.inside).filter(|(_, &i)| i).map(|(v, _)| v.norm()).fold(0.0, f64::max);
    let mut margin = 0.0_f64;
    for k in 0..hp.len() {
        if !nodes.inside[k] {
            continue;
        }
        if hp[k].norm() <= 1e-12 * scale || !hp[k].norm().is_finite() {
            return Err(Error::Degenerate(grid.node(k)));
        }
        margin = margin.max((hpp[k] / hp[k]).norm() * nodes.dist[k]);
    }
    Ok(margin)
}

/// sup |h''/h'| dist(w, boundary) over the domain nodes, with h sampled on
/// the (parameter) lattice and derivatives by finite differences.
pub fn univalence_margin(h: &SampledField, geometry: &DomainGeometry) -> Result<f64> {
    let nodes = Nodes::new(&h.grid, geometry)?;
    let (hp, _) = nodes.w_derivatives(h);
    let (hpp, _) = nodes.w_derivatives(&hp);
    margin_of(&hp.values, &hpp.values, &nodes, &h.grid)
}

/// The same margin from closed-form h' and h'' evaluated at the domain points.
pub fn univalence_margin_from(
    hp: impl Fn(C64) -> C64,
    hpp: impl Fn(C64) -> C64,
    grid: &std::sync::Arc<crate::grid::ComplexGrid>,
    geometry: &DomainGeometry,
) -> Result<f64> {
    let nodes = Nodes::new(grid, geometry)?;
    let pts: Vec<C64> = grid.nodes().iter().map(|&z| geometry.node_data(z).map_or(z, |d| d.0)).collect();
    let a: Vec<C64> = pts.iter().map(|&w| hp(w)).collect();
    let b: Vec<C64> = pts.iter().map(|&w| hpp(w)).collect();
    margin_of(&a, &b, &nodes, grid)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InjectivityReport {
    pub pairs: usize,
    pub violations: usize,
    /// Smallest image distance among pairs at least `separation` apart in the source.
    pub min_image_distance: f64,
}

/// Draws random pairs of nodes in `mask` farther than `separation` apart
/// and counts those whose images are closer than 1e-9.
pub fn injectivity_sample(
    f: &SampledField,
    mask: &[bool],
    pairs: usize,
    separation: f64,
    seed: u64,
) -> InjectivityReport {
    let pool: Vec<usize> = (0..f.len()).filter(|&k| mask[k]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut min_image_distance = f64::INFINITY;
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < pairs && pool.len() > 1 && attempts < 100 * pairs {
        attempts += 1;
        let a = pool[rng.gen_range(0..pool.len())];
        let b = pool[rng.gen_range(0..pool.len())];
        if (f.grid.node(a) - f.grid.node(b)).norm() <= separation {
            continue;
        }
        drawn += 1;
        let d = (f.values[a] - f.values[b]).norm();
        min_image_distance = min_image_distance.min(d);
        if d < 1e-9 {
            violations += 1;
        }
    }
    InjectivityReport { pairs: drawn, violations, min_image_distance }
}
