//! Exact 3-D hypervolume for minimization fronts.

use crate::objectives::ObjectiveVector;

/// Volume of the union of boxes `[p, reference]` over the points of `front`.
///
/// Points not weakly dominating `reference` are dropped with a warning.
/// Sweeps slabs along the third objective and measures the 2-D staircase of
/// each slab, which is exact and `O(n² log n)`.
pub fn hypervolume(front: &[ObjectiveVector], reference: &ObjectiveVector) -> f64 {
    let r = reference.as_array();
    let mut pts: Vec<[f64; 3]> = front
        .iter()
        .map(ObjectiveVector::as_array)
        .filter(|p| p.iter().zip(&r).all(|(x, y)| x <= y))
        .collect();
    let dropped = front.len() - pts.len();
    if dropped > 0 {
        log::warn!("hypervolume: ignored {dropped} point(s) outside the reference box");
    }
    if pts.is_empty() {
        log::warn!("hypervolume: no points inside the reference box");
        return 0.0;
    }

    pts.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    for i in 0..pts.len() {
        let top = pts.get(i + 1).map_or(r[2], |p| p[2]);
        let depth = top - pts[i][2];
        if depth > 0.0 {
            volume += staircase_area(&pts[..=i], r[0], r[1]) * depth;
        }
    }
    volume
}

fn staircase_area(pts: &[[f64; 3]], rx: f64, ry: f64) -> f64 {
    let mut xy: Vec<(f64, f64)> = pts.iter().map(|p| (p[0], p[1])).collect();
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut floor = ry;
    for (x, y) in xy {
        if y < floor {
            area += (rx - x) * (floor - y);
            floor = y;
        }
    }
    area
}
