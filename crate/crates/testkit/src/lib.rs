//! Seeded random instance generators and slow, direct reference
//! implementations used to check `concord-core` in tests.
//!
//! Oracles only read the public data types; they never call the algorithms
//! they are used to check.

pub mod gen;
pub mod matching;
pub mod sequential;
pub mod voting;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every permutation of `0..n`, lexicographic.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// All `k`-element subsets of `0..n`.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// L1 distance after the best relabelling of `b`'s components onto `a`'s.
/// Returns the distance and the permutation used (`a[i]` paired with `b[perm[i]]`).
pub fn best_aligned_l1(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, Vec<usize>) {
    assert_eq!(a.len(), b.len());
    permutations(a.len())
        .into_iter()
        .map(|p| {
            let d: f64 = a
                .iter()
                .enumerate()
                .map(|(i, x)| x.iter().zip(&b[p[i]]).map(|(u, v)| (u - v).abs()).sum::<f64>())
                .sum();
            (d, p)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("at least one permutation")
}
