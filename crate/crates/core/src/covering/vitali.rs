use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::grid::{Cylinder, SpaceTimeGrid};

/// A core U_i with its dilation Ũ_i and size key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitaliItem {
    pub core: Cylinder,
    pub dilated: Cylinder,
    pub key: f64,
}

fn order_key(a: &VitaliItem, b: &VitaliItem) -> Ordering {
    b.key
        .total_cmp(&a.key)
        .then(a.core.t0.total_cmp(&b.core.t0))
        .then_with(|| {
            a.core.center.iter().zip(&b.core.center).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
        })
        .then(b.core.radius.total_cmp(&a.core.radius))
        .then(b.core.tau.total_cmp(&a.core.tau))
}

/// Greedy disjoint selection in decreasing key order; ties go to the smaller
/// base point (t, x), then the larger core, then the smaller input index.
/// Returns indices into `items` in selection order.
pub fn vitali_select(n: usize, items: &[VitaliItem]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&i, &j| order_key(&items[i], &items[j]).then(i.cmp(&j)));
    let mut selected: Vec<usize> = Vec::new();
    for i in order {
        if selected.iter().all(|&j| !items[j].core.intersects(n, &items[i].core)) {
            selected.push(i);
        }
    }
    selected
}

/// Nodewise verification of a selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    /// Selected cores pairwise disjoint.
    pub disjoint: bool,
    /// Nodes inside some input core.
    pub input_nodes: usize,
    /// Of those, nodes outside every selected dilation.
    pub uncovered_nodes: usize,
    /// Dual-cell measure of the input union.
    pub union_measure: f64,
    /// Σ |U_i| over the selection.
    pub core_measure_sum: f64,
    /// union_measure / core_measure_sum.
    pub constant: f64,
    /// max |Ũ_i| / |U_i| over the selection.
    pub max_dilation_ratio: f64,
}

/// Dual-cell volume of a node.
pub fn node_volume(grid: &SpaceTimeGrid, node: usize) -> f64 {
    let ns = grid.space_nodes();
    let (k, s) = (node / ns, node % ns);
    let (a, b) = grid.time_cell(k);
    let idx = grid.unravel(s);
    (0..grid.n).map(|ax| {
        let (l, r) = grid.cell_extent(ax, idx[ax]);
        r - l
    }).product::<f64>()
        * (b - a)
}

/// Checks disjointness of the selected cores and nodewise coverage of the inputs by the dilations.
pub fn check_cover(grid: &SpaceTimeGrid, items: &[VitaliItem], selected: &[usize]) -> CoverCheck {
    let n = grid.n;
    let mut disjoint = true;
    for (a, &i) in selected.iter().enumerate() {
        for &j in &selected[a + 1..] {
            if items[i].core.intersects(n, &items[j].core) {
                disjoint = false;
            }
        }
    }
    let ns = grid.space_nodes();
    let mut input_nodes = 0;
    let mut uncovered_nodes = 0;
    let mut union_measure = 0.0;
    for node in 0..grid.node_count() {
        let x = grid.node_point(node % ns);
        let t = grid.time(node / ns);
        if items.iter().any(|it| it.core.contains(n, &x, t)) {
            input_nodes += 1;
            union_measure += node_volume(grid, node);
            if !selected.iter().any(|&i| items[i].dilated.contains(n, &x, t)) {
                uncovered_nodes += 1;
            }
        }
    }
    let core_measure_sum: f64 = selected.iter().map(|&i| items[i].core.measure(n)).sum();
    let max_dilation_ratio = selected
        .iter()
        .map(|&i| items[i].dilated.measure(n) / items[i].core.measure(n))
        .fold(0.0, f64::max);
    CoverCheck {
        disjoint,
        input_nodes,
        uncovered_nodes,
        union_measure,
        core_measure_sum,
        constant: if core_measure_sum > 0.0 { union_measure / core_measure_sum } else { 0.0 },
        max_dilation_ratio,
    }
}

/// Parabolic cylinder (t ± s/2) × B_{√s}(x) with its dilation at height 2c₁s.
pub fn parabolic_item(center: crate::grid::Point, t0: f64, s: f64, c1: f64) -> VitaliItem {
    let d = 2.0 * c1 * s;
    VitaliItem {
        core: Cylinder::construction(center, t0, s, s.sqrt()),
        dilated: Cylinder::construction(center, t0, d, d.sqrt()),
        key: s,
    }
}

/// Engulfing constant of the parabolic family: intersecting Q(s, x), Q(s, y) give Q(s, x) ⊂ Q(9s, y).
pub const PARABOLIC_C1: f64 = 9.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::point;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_items(seed: u64, count: usize) -> Vec<VitaliItem> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let c = point(&[rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]);
                parabolic_item(c, rng.gen_range(0.0..1.0), rng.gen_range(0.0005..0.01), PARABOLIC_C1)
            })
            .collect()
    }

    #[test]
    fn single_and_disjoint_pairs() {
        let a = parabolic_item(point(&[0.0]), 0.0, 0.04, PARABOLIC_C1);
        assert_eq!(vitali_select(1, &[a]), vec![0]);
        let b = parabolic_item(point(&[1.0]), 0.0, 0.01, PARABOLIC_C1);
        assert_eq!(vitali_select(1, &[b, a]), vec![1, 0]);
        let c = parabolic_item(point(&[0.1]), 0.0, 0.01, PARABOLIC_C1);
        assert_eq!(vitali_select(1, &[c, a]), vec![1]);
    }

    #[test]
    fn random_family_is_covered() {
        let grid = SpaceTimeGrid::new(&[-0.5, -0.5], &[1.5, 1.5], &[64, 64], (-0.5, 1.5), 64).unwrap();
        let items = random_items(3, 200);
        let sel = vitali_select(2, &items);
        let chk = check_cover(&grid, &items, &sel);
        assert!(chk.disjoint);
        assert_eq!(chk.uncovered_nodes, 0);
        assert!(chk.input_nodes > 0 && chk.constant > 0.0);
    }

    #[test]
    fn selection_ignores_input_order() {
        let items = random_items(8, 120);
        let sel: Vec<VitaliItem> = vitali_select(2, &items).iter().map(|&i| items[i]).collect();
        let mut shuffled = items.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let sel2: Vec<VitaliItem> = vitali_select(2, &shuffled).iter().map(|&i| shuffled[i]).collect();
        assert_eq!(sel, sel2);
    }
}
