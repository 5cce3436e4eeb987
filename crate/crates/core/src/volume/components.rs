// SPDX-License-Identifier: Apache-2.0

//! 6-connected component filtering of binary label volumes.

use std::collections::VecDeque;

use super::Volume;

/// Keeps only the largest 6-connected foreground component.
///
/// Any nonzero voxel counts as foreground; the output is binary. Among
/// equally large components the one containing the smallest flat index
/// wins. An all-background input is returned unchanged.
pub fn largest_connected_component(label: &Volume<u8>) -> Volume<u8> {
    let [nx, ny, nz] = label.dims();
    let voxels = label.voxels();
    let mut component = vec![0u32; voxels.len()];
    let mut queue = VecDeque::new();
    let mut next_id = 0u32;
    // (id, size); components are discovered in increasing order of their
    // smallest flat index, so a strict comparison implements the tie rule.
    let mut best: Option<(u32, usize)> = None;

    for seed in 0..voxels.len() {
        if voxels[seed] == 0 || component[seed] != 0 {
            continue;
        }
        next_id += 1;
        component[seed] = next_id;
        queue.push_back(seed);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let x = i % nx;
            let y = (i / nx) % ny;
            let z = i / (nx * ny);
            let mut visit = |j: usize| {
                if voxels[j] != 0 && component[j] == 0 {
                    component[j] = next_id;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < nx {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - nx);
            }
            if y + 1 < ny {
                visit(i + nx);
            }
            if z > 0 {
                visit(i - nx * ny);
            }
            if z + 1 < nz {
                visit(i + nx * ny);
            }
        }
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((next_id, size));
        }
    }

    match best {
        None => label.clone(),
        Some((keep, _)) => {
            let out: Vec<u8> = component.iter().map(|&c| u8::from(c == keep)).collect();
            Volume::from_parts(*label.geometry(), out).expect("same geometry")
        }
    }
}
