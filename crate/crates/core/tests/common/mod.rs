//! Brute-force reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use rand::Rng;
use uvsam_core::Mesh;

pub const NONE: u32 = u32::MAX;

/// Owner of every texel center found by testing all faces in index order.
///
/// Corners are snapped to 1/65536 pixel. On-edge centers are resolved by
/// symbolic perturbation: the center is nudged by `(δ, δ·ε)` with
/// `0 < ε ≪ δ → 0`, i.e. right and a hair down.
pub fn occupancy(mesh: &Mesh, width: usize, height: usize) -> Vec<u32> {
    let snapped: Vec<Option<[(i128, i128); 3]>> = mesh
        .uv_corners()
        .iter()
        .map(|uv| {
            let cross = (uv[1][0] - uv[0][0]) * (uv[2][1] - uv[0][1])
                - (uv[2][0] - uv[0][0]) * (uv[1][1] - uv[0][1]);
            if 0.5 * cross.abs() < 1e-12 {
                return None;
            }
            let q = uv.map(|c| {
                let x = c[0] * width as f64;
                let y = (1.0 - c[1]) * height as f64;
                ((x * 65536.0).round() as i128, (y * 65536.0).round() as i128)
            });
            (orient(q[0], q[1], q[2]) != 0).then_some(q)
        })
        .collect();

    let mut out = vec![NONE; width * height];
    for row in 0..height {
        for col in 0..width {
            let p = (col as i128 * 65536 + 32768, row as i128 * 65536 + 32768);
            for (face, q) in snapped.iter().enumerate() {
                if let Some(q) = q {
                    if contains(q, p) {
                        out[row * width + col] = face as u32;
                        break;
                    }
                }
            }
        }
    }
    out
}

fn orient(a: (i128, i128), b: (i128, i128), p: (i128, i128)) -> i128 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Point-in-triangle with the perturbation tie rule, for either winding.
pub fn contains(q: &[(i128, i128); 3], p: (i128, i128)) -> bool {
    let s = orient(q[0], q[1], q[2]).signum();
    (0..3).all(|i| {
        let (a, b) = (q[i], q[(i + 1) % 3]);
        let key = (
            s * orient(a, b, p),
            s * -(b.1 - a.1),
            s * (b.0 - a.0),
        );
        key > (0, 0, 0)
    })
}

/// How many faces' triangles contain each texel center under the tie rule.
pub fn containment_counts(mesh: &Mesh, width: usize, height: usize) -> Vec<usize> {
    let tris: Vec<[(i128, i128); 3]> = mesh
        .uv_corners()
        .iter()
        .map(|uv| {
            uv.map(|c| {
                (
                    (c[0] * width as f64 * 65536.0).round() as i128,
                    ((1.0 - c[1]) * height as f64 * 65536.0).round() as i128,
                )
            })
        })
        .filter(|q| orient(q[0], q[1], q[2]) != 0)
        .collect();
    let mut out = vec![0; width * height];
    for row in 0..height {
        for col in 0..width {
            let p = (col as i128 * 65536 + 32768, row as i128 * 65536 + 32768);
            out[row * width + col] = tris.iter().filter(|q| contains(q, p)).count();
        }
    }
    out
}

/// uv coordinate that is either arbitrary or sits on the texel-center /
/// texel-corner lattice of a `res`-texel atlas, so edges hit centers often.
fn random_uv(rng: &mut impl Rng, res: usize) -> f64 {
    match rng.random_range(0..3) {
        0 => rng.random::<f64>(),
        1 => (rng.random_range(0..res) as f64 + 0.5) / res as f64,
        _ => rng.random_range(0..=res) as f64 / res as f64,
    }
}

/// Arbitrary triangles over a shared vertex pool: overlaps, shared edges,
/// both windings and the occasional degenerate face.
pub fn random_soup(rng: &mut impl Rng, max_faces: usize, res: usize) -> Mesh {
    let nv = rng.random_range(3..=24);
    let uvs: Vec<[f64; 2]> = (0..nv)
        .map(|_| [random_uv(rng, res), random_uv(rng, res)])
        .collect();
    let verts: Vec<[f64; 3]> = uvs.iter().map(|uv| [uv[0], uv[1], 0.0]).collect();
    let nf = rng.random_range(1..=max_faces);
    let mut faces = Vec::new();
    let mut corners = Vec::new();
    while faces.len() < nf {
        let f = [
            rng.random_range(0..nv) as u32,
            rng.random_range(0..nv) as u32,
            rng.random_range(0..nv) as u32,
        ];
        if f[0] == f[1] && f[1] == f[2] {
            continue;
        }
        corners.push(f.map(|i| uvs[i as usize]));
        faces.push(f);
    }
    Mesh::new(verts, faces, corners).unwrap()
}

/// A non-overlapping triangulation of a jittered `n × m` grid with random
/// diagonals. Grid lines sit on texel boundaries or texel centers.
pub fn random_tiling(rng: &mut impl Rng, n: usize, m: usize, res: usize) -> Mesh {
    let off = if rng.random_bool(0.5) { 0.5 } else { 0.0 };
    let step_u = ((res - 4) / n) as f64;
    let step_v = ((res - 4) / m) as f64;
    let mut pts = vec![[0.0; 2]; (n + 1) * (m + 1)];
    for j in 0..=m {
        for i in 0..=n {
            let mut u = 2.0 + i as f64 * step_u + off;
            let mut v = 2.0 + j as f64 * step_v + off;
            if i > 0 && i < n && j > 0 && j < m && rng.random_bool(0.5) {
                u += rng.random_range(-0.2..0.2) * step_u;
                v += rng.random_range(-0.2..0.2) * step_v;
            }
            pts[j * (n + 1) + i] = [u / res as f64, v / res as f64];
        }
    }
    let idx = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    let mut faces = Vec::new();
    for j in 0..m {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if rng.random_bool(0.5) {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    let corners = faces.iter().map(|f| f.map(|i| pts[i as usize])).collect();
    let verts = pts.iter().map(|p| [p[0], p[1], 0.0]).collect();
    Mesh::new(verts, faces, corners).unwrap()
}

/// Spectral angle by the textbook formula, one scalar loop per texel.
pub fn angle(u: &[f64], v: &[f64]) -> Option<f64> {
    let mut dot = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
    }
    for i in 0..v.len() {
        vv += v[i] * v[i];
    }
    if uu == 0.0 || vv == 0.0 {
        return None;
    }
    let mut c = dot / (uu * vv).sqrt();
    if c > 1.0 {
        c = 1.0;
    }
    if c < -1.0 {
        c = -1.0;
    }
    Some(c.acos())
}

/// Naive double loop over rows and columns; -1 marks undefined.
pub fn sam(data: &[f64], valid: &[bool], width: usize, height: usize, reference: &[f64]) -> Vec<f64> {
    let b = reference.len();
    let mut out = vec![-1.0; width * height];
    for row in 0..height {
        for col in 0..width {
            let t = row * width + col;
            if valid[t] {
                if let Some(a) = angle(&data[t * b..(t + 1) * b], reference) {
                    out[t] = a;
                }
            }
        }
    }
    out
}

/// Exhaustive argmin over references with the lowest-index tie rule; -1 for
/// unclassified.
pub fn labels(
    data: &[f64],
    valid: &[bool],
    refs: &[Vec<f64>],
    theta_max: f64,
) -> Vec<i32> {
    let b = refs[0].len();
    valid
        .iter()
        .enumerate()
        .map(|(t, &ok)| {
            if !ok {
                return -1;
            }
            let angles: Vec<Option<f64>> =
                refs.iter().map(|r| angle(&data[t * b..(t + 1) * b], r)).collect();
            let mut best = -1i32;
            let mut best_angle = f64::INFINITY;
            for (k, a) in angles.iter().enumerate() {
                if let Some(a) = *a {
                    if a < best_angle {
                        best_angle = a;
                        best = k as i32;
                    }
                }
            }
            if best >= 0 && best_angle <= theta_max {
                best
            } else {
                -1
            }
        })
        .collect()
}
