use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::Mesh;
use crate::geom::{distance, midpoint, signed_volume};

// Local edge numbering: 01, 02, 03, 12, 13, 23. Edge `e` and `5 - e` are
// opposite, so the three octahedron diagonals are (1,4), (2,3) and (0,5).
const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
const DIAGONALS: [usize; 3] = [1, 2, 0];

pub(super) fn refine(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices().to_vec();
    let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut tets = Vec::with_capacity(8 * mesh.n_tets());

    for t in mesh.tets() {
        let mut m = [0usize; 6];
        for (slot, e) in m.iter_mut().zip(LOCAL_EDGES) {
            let (a, b) = (t[e[0]], t[e[1]]);
            let key = (a.min(b), a.max(b));
            *slot = *midpoints.entry(key).or_insert_with(|| {
                vertices.push(midpoint(&vertices[a], &vertices[b]));
                vertices.len() - 1
            });
        }

        let corners = [
            [t[0], m[0], m[1], m[2]],
            [m[0], t[1], m[3], m[4]],
            [m[1], m[3], t[2], m[5]],
            [m[2], m[4], m[5], t[3]],
        ];

        // Shortest diagonal of the inner octahedron; ties resolved in the
        // fixed order of DIAGONALS.
        let mut diag = DIAGONALS[0];
        let mut best = f64::INFINITY;
        for d in DIAGONALS {
            let len = distance(&vertices[m[d]], &vertices[m[5 - d]]);
            if len < best * (1.0 - 1e-12) {
                best = len;
                diag = d;
            }
        }
        let others: Vec<usize> = DIAGONALS.iter().copied().filter(|&d| d != diag).collect();
        let (p, s) = (others[0], others[1]);
        let ring = [m[p], m[s], m[5 - p], m[5 - s]];

        let inner = (0..4).map(|i| [m[diag], m[5 - diag], ring[i], ring[(i + 1) % 4]]);
        for mut child in corners.into_iter().chain(inner) {
            if signed_volume(child.map(|v| &vertices[v])) < 0.0 {
                child.swap(2, 3);
            }
            tets.push(child);
        }
    }

    Mesh::from_parts(mesh.domain().clone(), vertices, tets, mesh.level() + 1)
        .expect("red refinement of a valid mesh is valid")
}
