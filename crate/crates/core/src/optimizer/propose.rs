use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::geometry::{ArrayLayout, Axis, ElementKind, GridPoint};
use crate::scalar::Scalar;

/// Attempts made before a proposal gives up and reports stagnation.
pub const MAX_ATTEMPTS: usize = 32;

/// Kind of change a proposal applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Spacing order permuted along `axis` for one group.
    Shuffle { kind: ElementKind, axis: Axis },
    /// `kind[index]` moved by `delta` grid steps along `axis`.
    Perturb { kind: ElementKind, index: usize, axis: Axis, delta: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<T: Scalar> {
    pub layout: ArrayLayout<T>,
    pub change: Option<Move>,
    /// No feasible change was found; `layout` is the unmodified input.
    pub stagnated: bool,
}

fn axes<T: Scalar>(layout: &ArrayLayout<T>) -> Vec<Axis> {
    Axis::BOTH.into_iter().filter(|&a| layout.grid().nodes(a) > 1).collect()
}

/// Permutes consecutive spacings along `axis` inside each segment delimited by the lowest
/// element and by enforced elements, so every segment keeps its end points.
pub(crate) fn shuffle_spacings<R: Rng + ?Sized>(
    points: &mut [GridPoint],
    enforced: &HashSet<GridPoint>,
    axis: Axis,
    rng: &mut R,
) {
    let n = points.len();
    if n < 3 {
        return;
    }
    let other = match axis {
        Axis::Azimuth => Axis::Elevation,
        Axis::Elevation => Axis::Azimuth,
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (points[i].along(axis), points[i].along(other), i));
    let coords: Vec<i64> = order.iter().map(|&i| points[i].along(axis)).collect();
    let mut gaps: Vec<i64> = coords.windows(2).map(|w| w[1] - w[0]).collect();

    let mut bounds: Vec<usize> = vec![0];
    bounds.extend((1..n - 1).filter(|&r| enforced.contains(&points[order[r]])));
    bounds.push(n - 1);
    for w in bounds.windows(2) {
        gaps[w[0]..w[1]].shuffle(rng);
    }

    let mut c = coords[0];
    for (r, &i) in order.iter().enumerate() {
        if r > 0 {
            c += gaps[r - 1];
        }
        match axis {
            Axis::Azimuth => points[i].m = c,
            Axis::Elevation => points[i].n = c,
        }
    }
}

/// Draws one candidate neighbor of `current`.
///
/// Each attempt picks a group with free elements uniformly, then either shuffles that
/// group's spacing order along a random axis or moves one free element by `1..=intensity`
/// grid steps along a random axis (intensity 0 disables perturbation). Attempts that leave the grid, collide,
/// overlap, enter a forbidden zone or change nothing are discarded.
pub fn propose_candidate<T: Scalar, R: Rng + ?Sized>(
    current: &ArrayLayout<T>,
    rng: &mut R,
    intensity: usize,
) -> Proposal<T> {
    let unchanged = || Proposal { layout: current.clone(), change: None, stagnated: true };
    let free = |kind: ElementKind| {
        let enforced: HashSet<GridPoint> = current.enforced(kind).iter().copied().collect();
        current.positions(kind).iter().filter(|p| !enforced.contains(p)).count()
    };
    let kinds: Vec<ElementKind> = [ElementKind::Tx, ElementKind::Rx].into_iter().filter(|&k| free(k) > 0).collect();
    let axes = axes(current);
    if kinds.is_empty() || axes.is_empty() {
        return unchanged();
    }

    for _ in 0..MAX_ATTEMPTS {
        let kind = *kinds.choose(rng).expect("non-empty");
        let shuffle = rng.gen_bool(0.5) || intensity == 0;
        let axis = *axes.choose(rng).expect("non-empty");
        let enforced: HashSet<GridPoint> = current.enforced(kind).iter().copied().collect();
        let mut points = current.positions(kind).to_vec();
        let change = if shuffle {
            shuffle_spacings(&mut points, &enforced, axis, rng);
            Move::Shuffle { kind, axis }
        } else {
            let movable: Vec<usize> = (0..points.len()).filter(|&i| !enforced.contains(&points[i])).collect();
            let index = *movable.choose(rng).expect("group has free elements");
            let step = rng.gen_range(1..=intensity as i64);
            let delta = if rng.gen_bool(0.5) { step } else { -step };
            let p = &mut points[index];
            match axis {
                Axis::Azimuth => p.m += delta,
                Axis::Elevation => p.n += delta,
            }
            Move::Perturb { kind, index, axis, delta }
        };
        if points.as_slice() == current.positions(kind) {
            continue;
        }
        let (tx, rx) = match kind {
            ElementKind::Tx => (points, current.rx().to_vec()),
            ElementKind::Rx => (current.tx().to_vec(), points),
        };
        if let Ok(layout) = current.with_positions(tx, rx) {
            if layout.is_feasible() {
                return Proposal { layout, change: Some(change), stagnated: false };
            }
        }
    }
    unchanged()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{spacing_ecdf, ElementSize, GridSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[i64]) -> Vec<GridPoint> {
        points.iter().map(|&m| GridPoint::new(m, 0)).collect()
    }

    fn layout(tx: &[i64], rx: &[i64], enforced_tx: &[i64]) -> ArrayLayout<f64> {
        let grid = GridSpec::new(0.5, 0.5, 40, 1).unwrap();
        let size = ElementSize::new(0.5, 0.5).unwrap();
        ArrayLayout::builder(grid, size, size)
            .tx(line(tx))
            .rx(line(rx))
            .enforced_tx(line(enforced_tx))
            .build()
            .unwrap()
    }

    #[test]
    fn shuffle_keeps_segment_end_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let enforced: HashSet<GridPoint> = line(&[5]).into_iter().collect();
        for _ in 0..50 {
            let mut p = line(&[0, 1, 5, 12, 22]);
            shuffle_spacings(&mut p, &enforced, Axis::Azimuth, &mut rng);
            let mut m: Vec<i64> = p.iter().map(|q| q.m).collect();
            m.sort_unstable();
            assert_eq!((m[0], m[2], m[4]), (0, 5, 22));
            let mut gaps: Vec<i64> = m.windows(2).map(|w| w[1] - w[0]).collect();
            gaps.sort_unstable();
            assert_eq!(gaps, vec![1, 4, 7, 10]);
        }
    }

    #[test]
    fn shuffle_preserves_ecdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let before = [0, 1, 5, 12, 22];
        let xs = |p: &[GridPoint]| {
            let mut v: Vec<f64> = p.iter().map(|q| q.m as f64 * 0.5).collect();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        let reference = spacing_ecdf(&xs(&line(&before))).unwrap();
        let mut p = line(&before);
        shuffle_spacings(&mut p, &HashSet::new(), Axis::Azimuth, &mut rng);
        assert_eq!(spacing_ecdf(&xs(&p)).unwrap(), reference);
    }

    #[test]
    fn all_enforced_stagnates() {
        let mut l = layout(&[0, 3], &[10, 20], &[0, 3]);
        l = ArrayLayout::builder(*l.grid(), *l.tx_size(), *l.rx_size())
            .tx(line(&[0, 3]))
            .rx(line(&[10, 20]))
            .enforced_tx(line(&[0, 3]))
            .enforced_rx(line(&[10, 20]))
            .build()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = propose_candidate(&l, &mut rng, 3);
        assert!(p.stagnated);
        assert_eq!(p.layout, l);
    }

    #[test]
    fn perturbation_moves_one_element_within_intensity() {
        let l = layout(&[0, 4, 9], &[15, 22, 30, 37], &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut perturbs = 0;
        for _ in 0..200 {
            let p = propose_candidate(&l, &mut rng, 3);
            assert!(!p.stagnated);
            assert!(p.layout.is_feasible());
            if let Some(Move::Perturb { kind, index, delta, .. }) = p.change {
                perturbs += 1;
                let (a, b) = (l.positions(kind), p.layout.positions(kind));
                let diffs: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
                assert_eq!(diffs, vec![index]);
                assert!((1..=3).contains(&delta.abs()));
                assert_eq!(b[index].m - a[index].m, delta);
            }
        }
        assert!(perturbs > 50);
    }

    #[test]
    fn enforced_elements_never_move() {
        let l = layout(&[0, 4, 9, 15], &[20, 25], &[4, 15]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut cur = l;
        for _ in 0..300 {
            cur = propose_candidate(&cur, &mut rng, 2).layout;
            for p in line(&[4, 15]) {
                assert!(cur.tx().contains(&p));
            }
        }
    }
}
