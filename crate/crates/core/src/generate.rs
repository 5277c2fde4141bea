//! Seeded random instances for the verification suite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Edge, Facility, Network, OdPair, PlanarPoint, ProblemInstance, Vertex};

/// Size limits of generated instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorLimits {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub max_facilities: usize,
    pub max_pairs: usize,
}

impl Default for GeneratorLimits {
    fn default() -> Self {
        Self {
            max_vertices: 6,
            max_edges: 8,
            max_facilities: 5,
            max_pairs: 20,
        }
    }
}

fn point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> PlanarPoint {
    PlanarPoint::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi))
}

/// Connected network on 3..=`max_vertices` vertices in `[0, 10]^2`, with
/// O/D pairs whose acceptance levels are strictly below the facility
/// distance.
pub fn random_instance(seed: u64, limits: &GeneratorLimits) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.gen_range(3..=limits.max_vertices.max(3));
    let vertices: Vec<Vertex> = (0..nv)
        .map(|id| Vertex {
            id,
            position: point(&mut rng, 0.0, 10.0),
        })
        .collect();

    let length = |rng: &mut ChaCha8Rng, u: usize, w: usize| {
        let base = vertices[u].position.dist(&vertices[w].position);
        if rng.gen_bool(0.3) {
            base * rng.gen_range(1.0..1.4)
        } else {
            base
        }
    };
    let mut edges = Vec::new();
    let mut order: Vec<usize> = (0..nv).collect();
    order.shuffle(&mut rng);
    for k in 1..nv {
        let w = order[k];
        let u = order[rng.gen_range(0..k)];
        let len = length(&mut rng, u, w);
        edges.push(Edge { u, w, length: len });
    }
    let target = rng.gen_range(edges.len()..=limits.max_edges.max(edges.len()));
    let mut candidates: Vec<(usize, usize)> = (0..nv)
        .flat_map(|u| (u + 1..nv).map(move |w| (u, w)))
        .filter(|&(u, w)| !edges.iter().any(|e| (e.u.min(e.w), e.u.max(e.w)) == (u, w)))
        .collect();
    candidates.shuffle(&mut rng);
    for (u, w) in candidates.into_iter().take(target - edges.len()) {
        let len = length(&mut rng, u, w);
        edges.push(Edge { u, w, length: len });
    }

    let nf = rng.gen_range(2..=limits.max_facilities.max(2));
    let facilities: Vec<Facility> = (0..nf)
        .map(|id| Facility {
            id,
            position: point(&mut rng, -2.0, 12.0),
        })
        .collect();

    let mut ordered: Vec<(usize, usize)> = (0..nf)
        .flat_map(|i| (0..nf).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    ordered.shuffle(&mut rng);
    let symmetric = rng.gen_bool(0.5);
    let np = rng.gen_range(1..=limits.max_pairs.min(ordered.len()));
    let mut pairs: Vec<OdPair> = Vec::new();
    for (i, j) in ordered {
        if pairs.len() >= np {
            break;
        }
        if pairs.iter().any(|p| (p.origin, p.dest) == (i, j)) {
            continue;
        }
        let dist = facilities[i].position.dist(&facilities[j].position);
        let pair = OdPair {
            origin: i,
            dest: j,
            weight: f64::from(rng.gen_range(1u8..=5)),
            acceptance: dist * rng.gen_range(0.7..0.99),
        };
        pairs.push(pair);
        if symmetric && pairs.len() < np && !pairs.iter().any(|p| (p.origin, p.dest) == (j, i)) {
            pairs.push(OdPair {
                origin: j,
                dest: i,
                ..pair
            });
        }
    }

    ProblemInstance {
        facilities,
        pairs,
        network: Network { vertices, edges },
        alpha: rng.gen_range(0.2..0.6),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    #[test]
    fn instances_are_valid_and_reproducible() {
        let limits = GeneratorLimits::default();
        for seed in 0..50 {
            let inst = random_instance(seed, &limits);
            let report = validate_instance(&inst);
            assert!(report.is_valid(), "seed {seed}: {report}");
            assert!(inst.network.vertices.len() <= 6);
            assert!(inst.network.edges.len() <= 8);
            assert!(inst.facilities.len() <= 5);
            assert!(inst.pairs.len() <= 20);
            assert_eq!(inst, random_instance(seed, &limits));
        }
    }
}
