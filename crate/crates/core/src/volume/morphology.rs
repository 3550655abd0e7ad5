//! Binary morphology on mask volumes: 6-connected dilation and 26-connected
//! largest-component extraction.

use std::collections::VecDeque;

use crate::volume::{Volume3, VolumeKind};

/// Morphological dilation with the 6-connected (face-adjacent) structuring
/// element applied `radius` times. `radius = 0` returns the mask unchanged.
pub fn dilate(mask: &Volume3, radius: usize) -> Volume3 {
    assert_eq!(
        mask.kind(),
        VolumeKind::Mask,
        "dilate requires a mask volume"
    );
    let (nx, ny, nz) = mask.dims();
    let mut cur = mask.bits();
    let mut next = cur.clone();
    for _ in 0..radius {
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let i = x + nx * (y + ny * z);
                    let set = cur[i]
                        || (x > 0 && cur[i - 1])
                        || (x + 1 < nx && cur[i + 1])
                        || (y > 0 && cur[i - nx])
                        || (y + 1 < ny && cur[i + nx])
                        || (z > 0 && cur[i - nx * ny])
                        || (z + 1 < nz && cur[i + nx * ny]);
                    next[i] = set;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Volume3::mask_from_bits(mask.dims(), mask.spacing(), &cur)
}

/// Keeps only the largest 26-connected foreground component. Ties go to the
/// component whose first voxel has the smallest flat index; an empty mask
/// stays empty.
pub fn largest_connected_component(mask: &Volume3) -> Volume3 {
    assert_eq!(
        mask.kind(),
        VolumeKind::Mask,
        "largest_connected_component requires a mask volume"
    );
    let (nx, ny, nz) = mask.dims();
    let bits = mask.bits();
    let mut visited = vec![false; bits.len()];
    let mut best: Vec<usize> = Vec::new();

    for start in 0..bits.len() {
        if !bits[start] || visited[start] {
            continue;
        }
        // Flood fill one component. Components are discovered in flat-index
        // order, so a strict size comparison keeps the earliest on ties.
        let mut component = Vec::new();
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            component.push(i);
            let x = i % nx;
            let y = (i / nx) % ny;
            let z = i / (nx * ny);
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 && dz == 0 {
                            continue;
                        }
                        let (qx, qy, qz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                        if qx < 0 || qy < 0 || qz < 0 {
                            continue;
                        }
                        let (qx, qy, qz) = (qx as usize, qy as usize, qz as usize);
                        if qx >= nx || qy >= ny || qz >= nz {
                            continue;
                        }
                        let j = qx + nx * (qy + ny * qz);
                        if bits[j] && !visited[j] {
                            visited[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        if component.len() > best.len() {
            best = component;
        }
    }

    let mut out = vec![false; bits.len()];
    for i in best {
        out[i] = true;
    }
    Volume3::mask_from_bits(mask.dims(), mask.spacing(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SP: (f64, f64, f64) = (1.0, 1.0, 1.0);

    fn empty_mask(n: usize) -> Volume3 {
        Volume3::mask_from_bits((n, n, n), SP, &vec![false; n * n * n])
    }

    #[test]
    fn dilate_empty_stays_empty() {
        let m = empty_mask(4);
        assert_eq!(dilate(&m, 1).foreground_count(), 0);
    }

    #[test]
    fn dilate_center_voxel_grows_to_face_neighbors() {
        let mut bits = vec![false; 512];
        let m = empty_mask(8);
        bits[m.index(4, 4, 4)] = true;
        let m = Volume3::mask_from_bits((8, 8, 8), SP, &bits);
        let d = dilate(&m, 1);
        assert_eq!(d.foreground_count(), 7);
        assert!(d.is_foreground(d.index(4, 4, 4)));
        assert!(d.is_foreground(d.index(3, 4, 4)));
        assert!(d.is_foreground(d.index(5, 4, 4)));
        assert!(d.is_foreground(d.index(4, 3, 4)));
        assert!(d.is_foreground(d.index(4, 5, 4)));
        assert!(d.is_foreground(d.index(4, 4, 3)));
        assert!(d.is_foreground(d.index(4, 4, 5)));
    }

    #[test]
    fn dilate_full_mask_is_identity() {
        let m = Volume3::mask_from_bits((3, 3, 3), SP, &[true; 27]);
        assert_eq!(dilate(&m, 3).foreground_count(), 27);
    }

    #[test]
    fn lcc_empty_stays_empty() {
        let m = empty_mask(4);
        assert_eq!(largest_connected_component(&m).foreground_count(), 0);
    }

    #[test]
    fn lcc_keeps_larger_of_two_components() {
        // 5-voxel bar and a 3-voxel bar, well separated in a 6^3 volume.
        let m = empty_mask(6);
        let mut bits = vec![false; 216];
        for x in 0..5 {
            bits[m.index(x, 0, 0)] = true;
        }
        for x in 0..3 {
            bits[m.index(x, 5, 5)] = true;
        }
        let m = Volume3::mask_from_bits((6, 6, 6), SP, &bits);
        let keep = largest_connected_component(&m);
        assert_eq!(keep.foreground_count(), 5);
        assert!(keep.is_foreground(keep.index(0, 0, 0)));
        assert!(!keep.is_foreground(keep.index(0, 5, 5)));
    }

    #[test]
    fn lcc_single_component_is_identity() {
        let m = empty_mask(5);
        let mut bits = vec![false; 125];
        // Diagonal chain: 26-connected but not 6-connected.
        for d in 0..4 {
            bits[m.index(d, d, d)] = true;
        }
        let m = Volume3::mask_from_bits((5, 5, 5), SP, &bits);
        assert_eq!(largest_connected_component(&m), m);
    }

    #[test]
    fn lcc_tie_keeps_earliest_component() {
        let m = empty_mask(6);
        let mut bits = vec![false; 216];
        bits[m.index(0, 0, 0)] = true;
        bits[m.index(5, 5, 5)] = true;
        let m = Volume3::mask_from_bits((6, 6, 6), SP, &bits);
        let keep = largest_connected_component(&m);
        assert_eq!(keep.foreground_count(), 1);
        assert!(keep.is_foreground(0));
    }
}
