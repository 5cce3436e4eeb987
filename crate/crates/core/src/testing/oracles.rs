// SPDX-License-Identifier: Apache-2.0

//! Brute-force reference implementations. These deliberately take a
//! different route from the production code (union-find instead of BFS,
//! per-split rescans instead of cumulative sums, explicit corner weights
//! instead of nested lerps) and are only suitable for small inputs.

use crate::volume::{Geometry, Volume};

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Foreground components under 6-connectivity, each as a sorted list of
/// flat indices, ordered by their smallest index.
pub fn components_6(vol: &Volume<u8>) -> Vec<Vec<usize>> {
    let [nx, ny, nz] = vol.dims();
    let n = nx * ny * nz;
    let fg = |x: usize, y: usize, z: usize| *vol.get([x, y, z]) != 0;
    let mut parent: Vec<usize> = (0..n).collect();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !fg(x, y, z) {
                    continue;
                }
                let i = vol.index([x, y, z]);
                let mut neighbours = Vec::new();
                if x + 1 < nx && fg(x + 1, y, z) {
                    neighbours.push(vol.index([x + 1, y, z]));
                }
                if y + 1 < ny && fg(x, y + 1, z) {
                    neighbours.push(vol.index([x, y + 1, z]));
                }
                if z + 1 < nz && fg(x, y, z + 1) {
                    neighbours.push(vol.index([x, y, z + 1]));
                }
                for j in neighbours {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &v) in vol.voxels().iter().enumerate() {
        if v != 0 {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Largest 6-connected component, ties to the one with the smallest index.
pub fn largest_component(vol: &Volume<u8>) -> Volume<u8> {
    let comps = components_6(vol);
    let Some(best) = comps.iter().reduce(|best, c| if c.len() > best.len() { c } else { best }) else {
        return vol.clone();
    };
    let mut out = vec![0u8; vol.voxels().len()];
    for &i in best {
        out[i] = 1;
    }
    Volume::from_parts(*vol.geometry(), out).unwrap()
}

/// Otsu split by exhaustive scan: for every candidate bin `k`, voxels are
/// reclassified from scratch and the between-class variance compared as an
/// exact fraction. Returns `(k, threshold)`, or `None` for fewer than two
/// distinct values.
pub fn otsu_exhaustive(vol: &Volume<f32>) -> Option<(usize, f32)> {
    let values: Vec<f64> = vol.voxels().iter().map(|&v| f64::from(v)).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return None;
    }
    let bin = |v: f64| (((v - lo) / (hi - lo) * 256.0).floor() as i64).clamp(0, 255) as u128;
    let bins: Vec<u128> = values.iter().map(|&v| bin(v)).collect();
    let mut best: Option<(u128, u128, usize)> = None;
    for k in 0..255u128 {
        let (mut w0, mut s0, mut w1, mut s1) = (0u128, 0u128, 0u128, 0u128);
        for &b in &bins {
            if b <= k {
                w0 += 1;
                s0 += b;
            } else {
                w1 += 1;
                s1 += b;
            }
        }
        if w0 == 0 || w1 == 0 {
            continue;
        }
        // w0*w1*(m0 - m1)^2 = (s0*w1 - s1*w0)^2 / (w0*w1)
        let d = (s0 * w1).abs_diff(s1 * w0);
        let (num, den) = (d * d, w0 * w1);
        let better = match best {
            None => true,
            Some((bn, bd, _)) => num * bd > bn * den,
        };
        if better {
            best = Some((num, den, k as usize));
        }
    }
    let (_, _, k) = best?;
    Some((k, (lo + (k + 1) as f64 * (hi - lo) / 256.0) as f32))
}

/// Trilinear resampling as an explicit weighted sum over the 8 corners.
pub fn trilinear(vol: &Volume<f64>, target: [usize; 3]) -> Vec<f64> {
    let dims = vol.dims();
    let pos = |a: usize, i: usize| {
        let p = (i as f64 + 0.5) * dims[a] as f64 / target[a] as f64 - 0.5;
        p.clamp(0.0, (dims[a] - 1) as f64)
    };
    let g = Geometry::new(target, [1.0; 3], [0.0; 3]).unwrap();
    Volume::from_fn(g, |[x, y, z]| {
        let p = [pos(0, x), pos(1, y), pos(2, z)];
        let mut acc = 0.0;
        for corner in 0..8 {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..3 {
                let lo = p[a].floor();
                let t = p[a] - lo;
                let upper = corner >> a & 1 == 1;
                idx[a] = if upper { (lo as usize + 1).min(dims[a] - 1) } else { lo as usize };
                w *= if upper { t } else { 1.0 - t };
            }
            acc += w * vol.get(idx);
        }
        acc
    })
    .into_voxels()
}
