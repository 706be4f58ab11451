//! Simulation of fuzzy pairwise constraint groups from labeled data:
//! random sample pairs receive a strength whose magnitude depends on
//! nearest-neighbor structure and whose sign follows (or contradicts)
//! the class labels.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::FdcError;
use crate::linalg::squared_distance;
use crate::types::{ConstraintSet, Dataset};

/// Whether generated signs follow the labels, contradict them, or half each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correctness {
    AllOpposite,
    HalfHalf,
    AllCorrect,
}

/// Constraint-group recipe.
#[derive(Debug, Clone)]
pub struct GroupSpec {
    /// Number of pairs as a multiple of the sample count (ceiling taken).
    pub fraction: f64,
    pub correctness: Correctness,
    /// Neighborhood size for the strength rule.
    pub knn: usize,
    pub seed: u64,
}

impl GroupSpec {
    pub fn new(fraction: f64, correctness: Correctness, seed: u64) -> Self {
        GroupSpec {
            fraction,
            correctness,
            knn: 10,
            seed,
        }
    }
}

fn knn_sets(data: &Dataset, knn: usize) -> Vec<BTreeSet<usize>> {
    let m = data.len();
    (0..m)
        .map(|i| {
            let mut others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                squared_distance(data.sample(i), data.sample(a))
                    .total_cmp(&squared_distance(data.sample(i), data.sample(b)))
                    .then(a.cmp(&b))
            });
            others.into_iter().take(knn).collect()
        })
        .collect()
}

fn draw_open_unit(rng: &mut impl Rng) -> f64 {
    // (0, 1): rejects the measure-zero endpoint so strengths stay nonzero.
    loop {
        let v: f64 = rng.random_range(0.0..1.0);
        if v > 0.0 {
            return v;
        }
    }
}

/// Samples distinct unordered pairs and assigns fuzzy strengths.
///
/// For a same-class pair: `0.5 + U[0,0.5)` when either sample is in the
/// other's neighborhood, else a positive `U(0,1)`. For a different-class
/// pair: `-0.5 - U[0,0.5)` when neither is in the other's neighborhood,
/// else a negative `U(-1,0)`. "Opposite" groups flip the sign after
/// generation; half-and-half groups flip exactly `floor(n/2)` random pairs.
pub fn generate_constraints(
    data: &Dataset,
    truth: &[usize],
    spec: &GroupSpec,
) -> Result<ConstraintSet, FdcError> {
    let m = data.len();
    if truth.len() != m {
        return Err(FdcError::DimensionMismatch {
            field: "truth",
            detail: format!("{} labels for {} samples", truth.len(), m),
        });
    }
    if spec.fraction.is_nan() || spec.fraction <= 0.0 {
        return Err(FdcError::BadParameter {
            field: "fraction",
            reason: format!("{} must be > 0", spec.fraction),
        });
    }
    let n_pairs = libm::ceil(spec.fraction * m as f64) as usize;
    let available = m * (m - 1) / 2;
    if n_pairs > available {
        return Err(FdcError::NotEnoughPairs {
            requested: n_pairs,
            available,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pairs: Vec<(usize, usize)> = if n_pairs * 3 >= available {
        // Dense request: enumerate and partially shuffle.
        let mut all: Vec<(usize, usize)> = Vec::with_capacity(available);
        for p in 0..m {
            for q in (p + 1)..m {
                all.push((p, q));
            }
        }
        for i in 0..n_pairs {
            let j = rng.random_range(i..all.len());
            all.swap(i, j);
        }
        all.truncate(n_pairs);
        all
    } else {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(n_pairs);
        while out.len() < n_pairs {
            let p = rng.random_range(0..m);
            let q = rng.random_range(0..m);
            if p == q {
                continue;
            }
            let key = (p.min(q), p.max(q));
            if seen.insert(key) {
                out.push(key);
            }
        }
        out
    };

    let neighbors = knn_sets(data, spec.knn);
    let mut strengths: Vec<f64> = Vec::with_capacity(n_pairs);
    for &(p, q) in &pairs {
        let same_class = truth[p] == truth[q];
        let near = neighbors[p].contains(&q) || neighbors[q].contains(&p);
        let s = if same_class {
            if near {
                0.5 + rng.random_range(0.0..0.5)
            } else {
                draw_open_unit(&mut rng)
            }
        } else if !near {
            -0.5 - rng.random_range(0.0..0.5)
        } else {
            -draw_open_unit(&mut rng)
        };
        strengths.push(s);
    }

    match spec.correctness {
        Correctness::AllCorrect => {}
        Correctness::AllOpposite => {
            for s in &mut strengths {
                *s = -*s;
            }
        }
        Correctness::HalfHalf => {
            let mut order: Vec<usize> = (0..n_pairs).collect();
            for i in 0..n_pairs {
                let j = rng.random_range(i..n_pairs);
                order.swap(i, j);
            }
            for &idx in order.iter().take(n_pairs / 2) {
                strengths[idx] = -strengths[idx];
            }
        }
    }

    ConstraintSet::new(
        pairs
            .iter()
            .zip(&strengths)
            .map(|(&(p, q), &s)| (p, q, s))
            .collect::<Vec<_>>(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid_data(m: usize) -> (Dataset, Vec<usize>) {
        // Two well-separated groups so classes align with geometry.
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let side = if i < m / 2 { 0.0 } else { 50.0 };
                vec![side + (i % 7) as f64, (i % 5) as f64]
            })
            .collect();
        let truth: Vec<usize> = (0..m).map(|i| usize::from(i >= m / 2)).collect();
        (Dataset::from_rows(&rows).unwrap(), truth)
    }

    #[test]
    fn correct_group_signs_follow_classes() {
        let (data, truth) = grid_data(30);
        let spec = GroupSpec::new(0.5, Correctness::AllCorrect, 9);
        let cons = generate_constraints(&data, &truth, &spec).unwrap();
        assert_eq!(cons.len(), 15);
        for c in cons.constraints() {
            assert!(c.s != 0.0 && c.s.abs() <= 1.0);
            let same = truth[c.p] == truth[c.q];
            assert_eq!(c.s > 0.0, same, "pair ({},{})", c.p, c.q);
        }
    }

    #[test]
    fn neighbor_pairs_get_strong_magnitudes() {
        let (data, truth) = grid_data(30);
        let neighbors = knn_sets(&data, 10);
        let spec = GroupSpec::new(1.0, Correctness::AllCorrect, 21);
        let cons = generate_constraints(&data, &truth, &spec).unwrap();
        for c in cons.constraints() {
            let near = neighbors[c.p].contains(&c.q) || neighbors[c.q].contains(&c.p);
            let same = truth[c.p] == truth[c.q];
            if same && near {
                assert!((0.5..1.0).contains(&c.s));
            }
            if !same && !near {
                assert!((-1.0..=-0.5).contains(&c.s));
            }
        }
    }

    #[test]
    fn opposite_group_flips_every_sign() {
        let (data, truth) = grid_data(24);
        let correct = generate_constraints(
            &data,
            &truth,
            &GroupSpec::new(0.4, Correctness::AllCorrect, 7),
        )
        .unwrap();
        let opposite = generate_constraints(
            &data,
            &truth,
            &GroupSpec::new(0.4, Correctness::AllOpposite, 7),
        )
        .unwrap();
        assert_eq!(correct.len(), opposite.len());
        for (a, b) in correct.constraints().iter().zip(opposite.constraints()) {
            assert_eq!((a.p, a.q), (b.p, b.q));
            assert_eq!(a.s, -b.s);
        }
    }

    #[test]
    fn half_group_flips_exactly_half() {
        let (data, truth) = grid_data(40);
        let correct = generate_constraints(
            &data,
            &truth,
            &GroupSpec::new(0.5, Correctness::AllCorrect, 3),
        )
        .unwrap();
        let half = generate_constraints(
            &data,
            &truth,
            &GroupSpec::new(0.5, Correctness::HalfHalf, 3),
        )
        .unwrap();
        let flipped = correct
            .constraints()
            .iter()
            .zip(half.constraints())
            .filter(|(a, b)| a.s == -b.s)
            .count();
        assert_eq!(flipped, correct.len() / 2);
    }

    #[test]
    fn generation_is_reproducible() {
        let (data, truth) = grid_data(26);
        let spec = GroupSpec::new(0.3, Correctness::AllCorrect, 77);
        let a = generate_constraints(&data, &truth, &spec).unwrap();
        let b = generate_constraints(&data, &truth, &spec).unwrap();
        assert_eq!(a.constraints(), b.constraints());
    }

    #[test]
    fn too_many_pairs_is_an_error() {
        let (data, truth) = grid_data(6);
        let spec = GroupSpec::new(10.0, Correctness::AllCorrect, 1);
        assert!(matches!(
            generate_constraints(&data, &truth, &spec),
            Err(FdcError::NotEnoughPairs { .. })
        ));
    }
}
