//! Evaluation machinery: hard-label extraction, adjusted Rand index and
//! normalized mutual information (both reported on a 0..100 scale),
//! matching-based accuracy, the permutation-minimized rank Hamming
//! distance between fuzzy matrices, and rank-position accuracies.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::FdcError;
use crate::types::MembershipMatrix;

/// Cluster ids by row argmax; ties break to the lowest index. Ids are
/// zero-based throughout the crate.
pub fn harden(u: &MembershipMatrix) -> Vec<usize> {
    (0..u.len())
        .map(|i| {
            let row = u.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn relabel_dense(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let next = map.len();
        let id = *map.entry(l).or_insert(next);
        out.push(id);
    }
    (out, map.len())
}

struct Contingency {
    counts: Vec<Vec<usize>>,
    a_sizes: Vec<usize>,
    b_sizes: Vec<usize>,
    total: usize,
}

fn contingency(a: &[usize], b: &[usize]) -> Contingency {
    debug_assert_eq!(a.len(), b.len());
    let (a, ka) = relabel_dense(a);
    let (b, kb) = relabel_dense(b);
    let mut counts = vec![vec![0usize; kb]; ka];
    let mut a_sizes = vec![0usize; ka];
    let mut b_sizes = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(&b) {
        counts[x][y] += 1;
        a_sizes[x] += 1;
        b_sizes[y] += 1;
    }
    Contingency {
        counts,
        a_sizes,
        b_sizes,
        total: a.len(),
    }
}

fn comb2(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * (n - 1.0)
}

/// Adjusted Rand index mapped linearly from [-1, 1] onto [0, 100].
pub fn ari_pct(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "label lengths differ");
    let c = contingency(pred, truth);
    let sum_cells: f64 = c.counts.iter().flatten().map(|&n| comb2(n)).sum();
    let sum_a: f64 = c.a_sizes.iter().map(|&n| comb2(n)).sum();
    let sum_b: f64 = c.b_sizes.iter().map(|&n| comb2(n)).sum();
    let total = comb2(c.total);
    let raw = if total == 0.0 {
        1.0
    } else {
        let expected = sum_a * sum_b / total;
        let max_index = 0.5 * (sum_a + sum_b);
        let denom = max_index - expected;
        if denom.abs() < 1e-15 {
            if (sum_cells - expected).abs() < 1e-15 {
                1.0
            } else {
                0.0
            }
        } else {
            (sum_cells - expected) / denom
        }
    };
    50.0 * (raw + 1.0)
}

fn entropy(sizes: &[usize], total: usize) -> f64 {
    let t = total as f64;
    sizes
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let p = n as f64 / t;
            -p * libm::log(p)
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization of
/// the entropies, on a 0..100 scale. Two constant labelings count as a
/// perfect match.
pub fn nmi_pct(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "label lengths differ");
    let c = contingency(pred, truth);
    let t = c.total as f64;
    let mut mi = 0.0;
    for (x, row) in c.counts.iter().enumerate() {
        for (y, &n) in row.iter().enumerate() {
            if n > 0 {
                let p = n as f64 / t;
                mi += p * libm::log(p * t * t / (c.a_sizes[x] as f64 * c.b_sizes[y] as f64));
            }
        }
    }
    let h = entropy(&c.a_sizes, c.total) + entropy(&c.b_sizes, c.total);
    if h <= 0.0 {
        return 100.0;
    }
    100.0 * (2.0 * mi / h).clamp(0.0, 1.0)
}

/// Minimum-cost assignment on a square cost matrix; returns per-column
/// matched rows. Potentials-based Hungarian method, exact on integers.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched = vec![0usize; n + 1]; // matched[j] = row on column j (1-based)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).map(|j| matched[j] - 1).collect()
}

/// Fraction of samples correctly labeled under the best one-to-one
/// cluster-to-class assignment, on a 0..100 scale.
pub fn accuracy_pct(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "label lengths differ");
    let c = contingency(pred, truth);
    let n = c.counts.len().max(c.counts.first().map_or(0, Vec::len));
    if c.total == 0 || n == 0 {
        return 100.0;
    }
    // Pad to square and negate counts: maximum matching as min cost.
    let mut cost = vec![vec![0i64; n]; n];
    for (x, row) in c.counts.iter().enumerate() {
        for (y, &cnt) in row.iter().enumerate() {
            cost[x][y] = -(cnt as i64);
        }
    }
    let row_of = hungarian(&cost);
    let mut correct = 0i64;
    for (j, &i) in row_of.iter().enumerate() {
        if i < c.counts.len() && j < c.counts[i].len() {
            correct += c.counts[i][j] as i64;
        }
    }
    100.0 * correct as f64 / c.total as f64
}

/// Cluster indices of one fuzzy row ordered by descending membership;
/// ties break to the lower cluster index.
fn ranking(row: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    idx
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    fn heap(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n <= 1 {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            heap(n - 1, cur, out);
            if n.is_multiple_of(2) {
                cur.swap(i, n - 1);
            } else {
                cur.swap(0, n - 1);
            }
        }
    }
    heap(k, &mut cur, &mut out);
    out
}

/// Average rank-vector Hamming distance without any relabeling: the
/// fraction of rank positions whose cluster indices differ, averaged
/// over rows, with predicted cluster ids taken as-is.
pub fn average_rank_hamming(u_pred: &MembershipMatrix, u_truth: &MembershipMatrix) -> f64 {
    debug_assert_eq!(u_pred.len(), u_truth.len());
    debug_assert_eq!(u_pred.k(), u_truth.k());
    let m = u_pred.len();
    let k = u_pred.k();
    let mut total = 0.0;
    for i in 0..m {
        let rp = ranking(u_pred.row(i));
        let rt = ranking(u_truth.row(i));
        let mismatches = rp.iter().zip(&rt).filter(|(a, b)| a != b).count();
        total += mismatches as f64 / k as f64;
    }
    total / m as f64
}

const MAX_PERMUTATION_K: usize = 8;

/// Minimal average Hamming distance between the ranked fuzzy matrices
/// over all cluster-index permutations of the predicted matrix. A
/// column permutation of either argument therefore costs nothing.
pub fn mahd(u_pred: &MembershipMatrix, u_truth: &MembershipMatrix) -> Result<f64, FdcError> {
    if u_pred.len() != u_truth.len() || u_pred.k() != u_truth.k() {
        return Err(FdcError::DimensionMismatch {
            field: "memberships",
            detail: alloc::format!(
                "{}x{} vs {}x{}",
                u_pred.len(),
                u_pred.k(),
                u_truth.len(),
                u_truth.k()
            ),
        });
    }
    let k = u_pred.k();
    if k > MAX_PERMUTATION_K {
        return Err(FdcError::TooManyClusters {
            k,
            max: MAX_PERMUTATION_K,
        });
    }
    let m = u_pred.len();
    let truth_ranks: Vec<Vec<usize>> = (0..m).map(|i| ranking(u_truth.row(i))).collect();
    let pred_ranks: Vec<Vec<usize>> = (0..m).map(|i| ranking(u_pred.row(i))).collect();
    let mut best = f64::INFINITY;
    let mut permuted = vec![0.0; k];
    for pi in permutations(k) {
        let mut total = 0.0;
        for i in 0..m {
            // Relabel predicted clusters by pi. When pi maps distinct
            // old ids to distinct new ids the ranking's values permute,
            // except ties, which re-break by the new index.
            let row = u_pred.row(i);
            let mut has_tie = false;
            for w in pred_ranks[i].windows(2) {
                if row[w[0]] == row[w[1]] {
                    has_tie = true;
                    break;
                }
            }
            let rp: Vec<usize> = if has_tie {
                for (old, &new) in pi.iter().enumerate() {
                    permuted[new] = row[old];
                }
                ranking(&permuted)
            } else {
                pred_ranks[i].iter().map(|&c| pi[c]).collect()
            };
            let mismatches = rp.iter().zip(&truth_ranks[i]).filter(|(a, b)| a != b).count();
            total += mismatches as f64 / k as f64;
        }
        best = best.min(total / m as f64);
    }
    Ok(best)
}

/// Rank-position accuracies: entry `j` is the matching accuracy between
/// the labels given by the (j+1)-th largest membership of each row in
/// the prediction and in the ground truth.
pub fn lia_accuracy(
    u_pred: &MembershipMatrix,
    u_truth: &MembershipMatrix,
    k_star: usize,
) -> Result<Vec<f64>, FdcError> {
    if u_pred.k() < k_star || u_truth.k() < k_star {
        return Err(FdcError::DimensionMismatch {
            field: "k_star",
            detail: alloc::format!(
                "k_star {k_star} exceeds column counts {} / {}",
                u_pred.k(),
                u_truth.k()
            ),
        });
    }
    if u_pred.len() != u_truth.len() {
        return Err(FdcError::DimensionMismatch {
            field: "memberships",
            detail: alloc::format!("{} vs {} rows", u_pred.len(), u_truth.len()),
        });
    }
    let m = u_pred.len();
    let pred_ranks: Vec<Vec<usize>> = (0..m).map(|i| ranking(u_pred.row(i))).collect();
    let truth_ranks: Vec<Vec<usize>> = (0..m).map(|i| ranking(u_truth.row(i))).collect();
    let mut out = Vec::with_capacity(k_star);
    for pos in 0..k_star {
        let pred_labels: Vec<usize> = pred_ranks.iter().map(|r| r[pos]).collect();
        let truth_labels: Vec<usize> = truth_ranks.iter().map(|r| r[pos]).collect();
        out.push(accuracy_pct(&pred_labels, &truth_labels));
    }
    Ok(out)
}

/// Bundle of every evaluation criterion for one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub ari_pct: f64,
    pub nmi_pct: f64,
    pub acc_pct: f64,
    /// Present only when a fuzzy ground-truth matrix was supplied.
    pub mahd: Option<f64>,
    pub lia_acc: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn harden_argmax_and_ties() {
        let u = MembershipMatrix::from_rows(&[
            vec![0.7, 0.3],
            vec![0.5, 0.5],
            vec![0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(harden(&u), vec![0, 0, 1]);
    }

    #[test]
    fn ari_on_identical_and_permuted_labelings() {
        let truth = vec![0, 0, 1, 1, 2, 2];
        assert!((ari_pct(&truth, &truth) - 100.0).abs() < 1e-12);
        let permuted = vec![2, 2, 0, 0, 1, 1];
        assert!((ari_pct(&permuted, &truth) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn ari_of_independent_labelings_is_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let m = 120;
        let mut acc = 0.0;
        let draws = 1000;
        for _ in 0..draws {
            let a: Vec<usize> = (0..m).map(|_| rng.random_range(0..3)).collect();
            let b: Vec<usize> = (0..m).map(|_| rng.random_range(0..3)).collect();
            acc += ari_pct(&a, &b);
        }
        let mean = acc / draws as f64;
        assert!((mean - 50.0).abs() < 1.0, "mean {mean}");
    }

    #[test]
    fn nmi_trivial_cases() {
        let truth = vec![0, 0, 1, 1];
        assert!((nmi_pct(&truth, &truth) - 100.0).abs() < 1e-12);
        let constant = vec![0, 0, 0, 0];
        assert!(nmi_pct(&constant, &truth).abs() < 1e-12);
        let flipped = vec![1, 1, 0, 0];
        assert!((nmi_pct(&flipped, &truth) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_trivial_cases() {
        let truth = vec![0, 0, 1, 1];
        let permuted = vec![1, 1, 0, 0];
        assert!((accuracy_pct(&permuted, &truth) - 100.0).abs() < 1e-12);
        let orthogonal = vec![0, 1, 0, 1];
        assert!((accuracy_pct(&orthogonal, &truth) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn accuracy_matches_exhaustive_assignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let m = rng.random_range(6..40);
            let kp = rng.random_range(1..5usize);
            let kt = rng.random_range(1..5usize);
            let pred: Vec<usize> = (0..m).map(|_| rng.random_range(0..kp)).collect();
            let truth: Vec<usize> = (0..m).map(|_| rng.random_range(0..kt)).collect();
            let fast = accuracy_pct(&pred, &truth);
            // Exhaustive scan over injections of pred ids into max-side ids.
            let c = contingency(&pred, &truth);
            let n = c.counts.len().max(c.counts[0].len());
            let perms = permutations(n);
            let mut best = 0usize;
            for pi in &perms {
                let mut correct = 0usize;
                for (x, row) in c.counts.iter().enumerate() {
                    let y = pi[x];
                    if y < row.len() {
                        correct += row[y];
                    }
                }
                best = best.max(correct);
            }
            let oracle = 100.0 * best as f64 / m as f64;
            assert!(
                (fast - oracle).abs() < 1e-9,
                "hungarian {fast} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn mahd_zero_on_identity_and_column_permutations() {
        let u = MembershipMatrix::from_rows(&[
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.1, 0.2, 0.7],
        ])
        .unwrap();
        assert_eq!(mahd(&u, &u).unwrap(), 0.0);
        // Columns rotated by one.
        let rotated = MembershipMatrix::from_rows(&[
            vec![0.1, 0.6, 0.3],
            vec![0.3, 0.2, 0.5],
            vec![0.7, 0.1, 0.2],
        ])
        .unwrap();
        assert_eq!(mahd(&rotated, &u).unwrap(), 0.0);
    }

    #[test]
    fn rank_reversal_maximizes_the_unrelabeled_distance() {
        let truth = MembershipMatrix::from_rows(&[
            vec![0.8, 0.2],
            vec![0.3, 0.7],
            vec![0.6, 0.4],
        ])
        .unwrap();
        let reversed = MembershipMatrix::from_rows(&[
            vec![0.2, 0.8],
            vec![0.7, 0.3],
            vec![0.4, 0.6],
        ])
        .unwrap();
        assert!((average_rank_hamming(&reversed, &truth) - 1.0).abs() < 1e-15);
        // The permutation-minimized distance absorbs a global swap.
        assert_eq!(mahd(&reversed, &truth).unwrap(), 0.0);
    }

    #[test]
    fn mahd_matches_a_naive_reimplementation() {
        // Independent route: materialize the permuted matrix and rank
        // it from scratch for every permutation.
        fn naive(u_pred: &MembershipMatrix, u_truth: &MembershipMatrix) -> f64 {
            let (m, k) = (u_pred.len(), u_pred.k());
            let mut best = f64::INFINITY;
            for pi in permutations(k) {
                let mut total = 0.0;
                for i in 0..m {
                    let mut permuted = vec![0.0; k];
                    for (old, &new) in pi.iter().enumerate() {
                        permuted[new] = u_pred.row(i)[old];
                    }
                    let rp = ranking(&permuted);
                    let rt = ranking(u_truth.row(i));
                    let mism = rp.iter().zip(&rt).filter(|(a, b)| a != b).count();
                    total += mism as f64 / k as f64;
                }
                best = best.min(total / m as f64);
            }
            best
        }
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let m = rng.random_range(2..10);
            let k = rng.random_range(2..5usize);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    // Quantized values make exact ties common.
                    let mut r: Vec<f64> = (0..k)
                        .map(|_| (rng.random_range(0..4) as f64) + 1.0)
                        .collect();
                    let s: f64 = r.iter().sum();
                    r.iter_mut().for_each(|v| *v /= s);
                    r
                })
                .collect();
            let truth_rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    let mut r: Vec<f64> = (0..k)
                        .map(|_| (rng.random_range(0..4) as f64) + 1.0)
                        .collect();
                    let s: f64 = r.iter().sum();
                    r.iter_mut().for_each(|v| *v /= s);
                    r
                })
                .collect();
            let pred = MembershipMatrix::from_rows(&rows).unwrap();
            let truth = MembershipMatrix::from_rows(&truth_rows).unwrap();
            let fast = mahd(&pred, &truth).unwrap();
            let slow = naive(&pred, &truth);
            assert!((fast - slow).abs() < 1e-15, "{fast} vs {slow}");
            assert!((0.0..=1.0).contains(&fast));
        }
    }

    #[test]
    fn mahd_rejects_large_k() {
        let u = MembershipMatrix::from_rows(&[vec![1.0 / 9.0; 9]]).unwrap();
        assert!(matches!(
            mahd(&u, &u),
            Err(FdcError::TooManyClusters { k: 9, .. })
        ));
    }

    #[test]
    fn lia_first_position_matches_hardened_accuracy() {
        let pred = MembershipMatrix::from_rows(&[
            vec![0.5, 0.4, 0.1],
            vec![0.1, 0.6, 0.3],
            vec![0.2, 0.3, 0.5],
            vec![0.9, 0.05, 0.05],
        ])
        .unwrap();
        let truth = MembershipMatrix::from_rows(&[
            vec![0.6, 0.2, 0.2],
            vec![0.2, 0.2, 0.6],
            vec![0.1, 0.8, 0.1],
            vec![0.7, 0.2, 0.1],
        ])
        .unwrap();
        let lia = lia_accuracy(&pred, &truth, 3).unwrap();
        let direct = accuracy_pct(&harden(&pred), &harden(&truth));
        assert!((lia[0] - direct).abs() < 1e-12);
        assert_eq!(lia.len(), 3);
        let identical = lia_accuracy(&truth, &truth, 3).unwrap();
        for v in identical {
            assert!((v - 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn harden_commutes_with_column_permutation() {
        // Holds for tie-free rows; at exact ties the lowest-index rule
        // deliberately wins and is not permutation-equivariant.
        let u = MembershipMatrix::from_rows(&[
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.1, 0.2, 0.7],
            vec![0.45, 0.35, 0.2],
        ])
        .unwrap();
        // Columns rotated by pi: old column j lands at pi[j].
        let pi = [2usize, 0, 1];
        let mut rotated_rows = Vec::new();
        for i in 0..u.len() {
            let row = u.row(i);
            let mut new_row = vec![0.0; 3];
            for (old, &new) in pi.iter().enumerate() {
                new_row[new] = row[old];
            }
            rotated_rows.push(new_row);
        }
        let rotated = MembershipMatrix::from_rows(&rotated_rows).unwrap();
        let direct = harden(&rotated);
        let relabeled: Vec<usize> = harden(&u).into_iter().map(|l| pi[l]).collect();
        assert_eq!(direct, relabeled);
    }

    #[test]
    fn metric_label_permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let m = rng.random_range(10..40);
            let pred: Vec<usize> = (0..m).map(|_| rng.random_range(0..4)).collect();
            let truth: Vec<usize> = (0..m).map(|_| rng.random_range(0..3)).collect();
            let relabel = [2usize, 0, 3, 1];
            let pred2: Vec<usize> = pred.iter().map(|&l| relabel[l]).collect();
            assert!((ari_pct(&pred, &truth) - ari_pct(&pred2, &truth)).abs() < 1e-12);
            assert!((nmi_pct(&pred, &truth) - nmi_pct(&pred2, &truth)).abs() < 1e-12);
            assert!(
                (accuracy_pct(&pred, &truth) - accuracy_pct(&pred2, &truth)).abs() < 1e-12
            );
        }
    }
}
