use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Mesh, TET_EDGES};
use crate::geom::{add, distance, scale, signed_volume};
use crate::{Error, Point, Result};

const MAX_HALVINGS: usize = 40;

pub(super) fn perturb(mesh: &Mesh, sigma: f64, seed: u64) -> Result<Mesh> {
    if !(0.0..=0.3).contains(&sigma) {
        return Err(Error::Mesh(alloc::format!(
            "perturbation magnitude {sigma} outside [0, 0.3]"
        )));
    }
    if sigma == 0.0 {
        return Ok(mesh.clone());
    }
    let n = mesh.n_vertices();
    let mut vertices = mesh.vertices().to_vec();

    let mut shortest = alloc::vec![f64::INFINITY; n];
    let mut incident: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for (c, t) in mesh.tets().iter().enumerate() {
        for e in TET_EDGES {
            let (a, b) = (t[e[0]], t[e[1]]);
            let len = distance(&vertices[a], &vertices[b]);
            shortest[a] = shortest[a].min(len);
            shortest[b] = shortest[b].min(len);
        }
        for &v in t {
            incident[v].push(c);
        }
    }

    for v in 0..n {
        if mesh.is_boundary_vertex(v) {
            continue;
        }
        let mut step = scale(&unit_ball_sample(seed, v as u64), sigma * shortest[v]);
        let origin = vertices[v];
        for _ in 0..MAX_HALVINGS {
            vertices[v] = add(&origin, &step);
            let valid = incident[v].iter().all(|&c| {
                signed_volume(mesh.tets()[c].map(|w| &vertices[w])) > 0.0
            });
            if valid {
                break;
            }
            step = scale(&step, 0.5);
            vertices[v] = origin;
        }
    }

    Mesh::from_parts(
        mesh.domain().clone(),
        vertices,
        mesh.tets().to_vec(),
        mesh.level(),
    )
}

/// Uniform sample of the closed unit ball from the stream `(seed, index)`.
fn unit_ball_sample(seed: u64, index: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    loop {
        let p: Point = core::array::from_fn(|_| 2.0 * rng.random::<f64>() - 1.0);
        if p.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1.0 {
            return p;
        }
    }
}
