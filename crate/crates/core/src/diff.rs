//! Finite-difference Wirtinger derivatives on square lattices and strips.
//!
//! Interior nodes use fourth-order central stencils; where the stencil would
//! leave the lattice or the mask the order drops to a central or one-sided
//! second-order stencil.

use num_complex::Complex64 as C64;

use crate::grid::SampledField;

fn axis_derivative(
    values: &[C64],
    len: usize,
    stride: usize,
    h: f64,
    periodic: bool,
    mask: Option<&[bool]>,
) -> Vec<C64> {
    let total = values.len();
    let mut out = vec![C64::new(0.0, 0.0); total];
    let zero = C64::new(0.0, 0.0);
    for k in 0..total {
        if let Some(m) = mask {
            if !m[k] {
                continue;
            }
        }
        // position along the axis and index of the line start
        let (pos, base) = if stride == 1 { (k % len, k - k % len) } else { (k / stride, k % stride) };
        let at = |off: isize| -> Option<C64> {
            let p = pos as isize + off;
            let p = if periodic {
                p.rem_euclid(len as isize) as usize
            } else if p < 0 || p >= len as isize {
                return None;
            } else {
                p as usize
            };
            let idx = if stride == 1 { base + p } else { p * stride + base };
            match mask {
                Some(m) if !m[idx] => None,
                _ => Some(values[idx]),
            }
        };
        let f0 = values[k];
        let (m2, m1, p1, p2) = (at(-2), at(-1), at(1), at(2));
        out[k] = match (m2, m1, p1, p2) {
            (Some(a), Some(b), Some(c), Some(d)) => (a - b * 8.0 + c * 8.0 - d) / (12.0 * h),
            (_, Some(b), Some(c), _) => (c - b) / (2.0 * h),
            (_, _, Some(c), Some(d)) => (f0 * -3.0 + c * 4.0 - d) / (2.0 * h),
            (Some(a), Some(b), _, _) => (f0 * 3.0 - b * 4.0 + a) / (2.0 * h),
            (_, _, Some(c), None) => (c - f0) / h,
            (_, Some(b), None, _) => (f0 - b) / h,
            _ => zero,
        };
    }
    out
}

/// (f_z, f_zbar) of a field on a square lattice (x fast, y slow) or a strip
/// (phi fast and periodic, xi slow).
pub fn wirtinger(field: &SampledField, mask: Option<&[bool]>) -> (SampledField, SampledField) {
    let g = &field.grid;
    let (n, rows) = (g.n(), g.rows());
    let fast = axis_derivative(&field.values, n, 1, g.spacing(), g.is_strip(), mask);
    let slow = axis_derivative(&field.values, rows, n, g.row_spacing(), false, mask);
    let i = C64::new(0.0, 1.0);
    let (dx, dy): (&[C64], &[C64]) = if g.is_strip() { (&slow, &fast) } else { (&fast, &slow) };
    let fz = dx.iter().zip(dy).map(|(&a, &b)| (a - i * b) * 0.5).collect();
    let fzb = dx.iter().zip(dy).map(|(&a, &b)| (a + i * b) * 0.5).collect();
    (
        SampledField { grid: g.clone(), values: fz, label: format!("{}_z", field.label) },
        SampledField { grid: g.clone(), values: fzb, label: format!("{}_zbar", field.label) },
    )
}
