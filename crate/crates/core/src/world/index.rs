//! Uniform hash grid over point indices, plus a coarse block set for fast
//! rejection in empty space.

use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use nalgebra::Vector3;

type Key = [i32; 3];

/// Cells per block edge in the coarse set.
const BLOCK: i32 = 8;

#[derive(Debug, Clone)]
pub(crate) struct GridIndex {
    origin: Vector3<f64>,
    cell: f64,
    /// Point indices grouped by cell.
    order: Vec<u32>,
    cells: HashMap<Key, (u32, u32)>,
    blocks: HashSet<Key>,
}

fn axis_key(x: f64, origin: f64, cell: f64) -> i32 {
    let k = libm::floor((x - origin) / cell);
    k.clamp(f64::from(i32::MIN / 2), f64::from(i32::MAX / 2)) as i32
}

fn block_of(k: &Key) -> Key {
    [
        k[0].div_euclid(BLOCK),
        k[1].div_euclid(BLOCK),
        k[2].div_euclid(BLOCK),
    ]
}

#[inline]
fn dist2(p: &Vector3<f64>, q: &[f32; 3]) -> f64 {
    let dx = f64::from(q[0]) - p.x;
    let dy = f64::from(q[1]) - p.y;
    let dz = f64::from(q[2]) - p.z;
    dx * dx + dy * dy + dz * dz
}

impl GridIndex {
    pub(crate) fn build(points: &[[f32; 3]], origin: Vector3<f64>, cell: f64) -> Self {
        let mut keyed: Vec<(Key, u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (Self::key_with(origin, cell, &super::to_vec(p)), i as u32))
            .collect();
        keyed.sort_unstable();
        let mut cells = HashMap::new();
        let mut blocks = HashSet::new();
        let mut start = 0usize;
        while start < keyed.len() {
            let key = keyed[start].0;
            let mut end = start + 1;
            while end < keyed.len() && keyed[end].0 == key {
                end += 1;
            }
            cells.insert(key, (start as u32, (end - start) as u32));
            blocks.insert(block_of(&key));
            start = end;
        }
        Self {
            origin,
            cell,
            order: keyed.into_iter().map(|(_, i)| i).collect(),
            cells,
            blocks,
        }
    }

    fn key_with(origin: Vector3<f64>, cell: f64, p: &Vector3<f64>) -> Key {
        [
            axis_key(p.x, origin.x, cell),
            axis_key(p.y, origin.y, cell),
            axis_key(p.z, origin.z, cell),
        ]
    }

    fn key(&self, p: &Vector3<f64>) -> Key {
        Self::key_with(self.origin, self.cell, p)
    }

    /// Index of some point within `radius` of `p` (`< radius` when
    /// `strict`), skipping `exclude`.
    pub(crate) fn find_within(
        &self,
        points: &[[f32; 3]],
        p: &Vector3<f64>,
        radius: f64,
        exclude: Option<usize>,
        strict: bool,
    ) -> Option<usize> {
        let r2 = radius * radius;
        let hit = |q: &[f32; 3]| {
            let d = dist2(p, q);
            if strict {
                d < r2
            } else {
                d <= r2
            }
        };
        let lo = self.key(&(p - Vector3::repeat(radius)));
        let hi = self.key(&(p + Vector3::repeat(radius)));
        let span = |a: usize| (i64::from(hi[a]) - i64::from(lo[a]) + 1) as u64;
        let n_cells = span(0).saturating_mul(span(1)).saturating_mul(span(2));

        if n_cells > points.len() as u64 {
            return points
                .iter()
                .enumerate()
                .find(|(i, q)| Some(*i) != exclude && hit(q))
                .map(|(i, _)| i);
        }

        let (blo, bhi) = (block_of(&lo), block_of(&hi));
        let any_block = (blo[0]..=bhi[0]).any(|x| {
            (blo[1]..=bhi[1]).any(|y| (blo[2]..=bhi[2]).any(|z| self.blocks.contains(&[x, y, z])))
        });
        if !any_block {
            return None;
        }

        // Cells whose box is farther than the radius cannot hold a hit; the
        // slack keeps the pruning conservative under rounding.
        let prune = r2 * (1.0 + 1e-9) + 1e-12;
        for x in lo[0]..=hi[0] {
            let dx = self.axis_gap(p.x, self.origin.x, x);
            for y in lo[1]..=hi[1] {
                let dy = self.axis_gap(p.y, self.origin.y, y);
                if dx * dx + dy * dy > prune {
                    continue;
                }
                for z in lo[2]..=hi[2] {
                    let dz = self.axis_gap(p.z, self.origin.z, z);
                    if dx * dx + dy * dy + dz * dz > prune {
                        continue;
                    }
                    let Some(&(start, len)) = self.cells.get(&[x, y, z]) else {
                        continue;
                    };
                    for &i in &self.order[start as usize..(start + len) as usize] {
                        let i = i as usize;
                        if Some(i) != exclude && hit(&points[i]) {
                            return Some(i);
                        }
                    }
                }
            }
        }
        None
    }

    /// Distance from coordinate `v` to cell `k` along one axis.
    fn axis_gap(&self, v: f64, origin: f64, k: i32) -> f64 {
        let lo = origin + f64::from(k) * self.cell;
        let hi = lo + self.cell;
        if v < lo {
            lo - v
        } else if v > hi {
            v - hi
        } else {
            0.0
        }
    }
}
