//! Direct reference implementations of the voting rules.

use std::collections::BTreeSet;

use concord_core::PreferenceProfile;

/// Ballots as group lists over alternative indices, unranked alternatives
/// appended as a bottom group.
#[derive(Clone, Debug)]
pub struct RawProfile {
    pub ids: Vec<String>,
    pub ballots: Vec<(u64, Vec<Vec<usize>>)>,
}

impl RawProfile {
    pub fn from_profile(p: &PreferenceProfile) -> Self {
        let ids: Vec<String> = p.alternatives().iter().map(|a| a.id.as_str().to_string()).collect();
        let idx = |s: &str| ids.iter().position(|x| x == s).expect("known alternative");
        let ballots = p
            .ballots()
            .iter()
            .map(|b| {
                let mut groups: Vec<Vec<usize>> = b
                    .order
                    .groups()
                    .iter()
                    .map(|g| g.iter().map(|a| idx(a.as_str())).collect())
                    .collect();
                let seen: BTreeSet<usize> = groups.iter().flatten().copied().collect();
                let rest: Vec<usize> = (0..ids.len()).filter(|i| !seen.contains(i)).collect();
                if !rest.is_empty() {
                    groups.push(rest);
                }
                (b.weight, groups)
            })
            .collect();
        RawProfile { ids, ballots }
    }

    pub fn m(&self) -> usize {
        self.ids.len()
    }

    pub fn n(&self) -> u64 {
        self.ballots.iter().map(|b| b.0).sum()
    }

    pub fn names(&self, set: &BTreeSet<usize>) -> BTreeSet<String> {
        set.iter().map(|&i| self.ids[i].clone()).collect()
    }

    /// Rank position of every alternative in ballot `b` (group index).
    pub fn positions(&self, b: usize) -> Vec<usize> {
        let mut pos = vec![0; self.m()];
        for (g, group) in self.ballots[b].1.iter().enumerate() {
            for &a in group {
                pos[a] = g;
            }
        }
        pos
    }

    /// `n[x][y]`: weight of ballots ranking x strictly above y.
    pub fn pairwise(&self) -> Vec<Vec<u64>> {
        let m = self.m();
        let mut n = vec![vec![0; m]; m];
        for b in 0..self.ballots.len() {
            let pos = self.positions(b);
            for x in 0..m {
                for y in 0..m {
                    if pos[x] < pos[y] {
                        n[x][y] += self.ballots[b].0;
                    }
                }
            }
        }
        n
    }
}

fn lcm_upto(m: usize) -> i128 {
    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    (1..=m as i128).fold(1, |acc, k| acc / gcd(acc, k) * k)
}

/// Positional scores scaled by `lcm(1..=m)` so tie averaging stays integral.
/// `vector[j]` is the score of position j (0 = top).
pub fn scaled_positional_scores(p: &RawProfile, vector: &[i128]) -> Vec<i128> {
    let scale = lcm_upto(p.m().max(1));
    let mut scores = vec![0i128; p.m()];
    for (w, groups) in &p.ballots {
        let mut start = 0;
        for g in groups {
            let span: i128 = vector[start..start + g.len()].iter().sum();
            for &a in g {
                scores[a] += *w as i128 * span * scale / g.len() as i128;
            }
            start += g.len();
        }
    }
    scores
}

pub fn positional_winners(p: &RawProfile, vector: &[i128]) -> BTreeSet<usize> {
    let s = scaled_positional_scores(p, vector);
    let best = s.iter().copied().max().unwrap_or(0);
    (0..s.len()).filter(|&i| s[i] == best).collect()
}

pub fn plurality_vector(m: usize) -> Vec<i128> {
    (0..m).map(|j| i128::from(j == 0)).collect()
}

pub fn borda_vector(m: usize) -> Vec<i128> {
    (0..m).map(|j| (m - 1 - j) as i128).collect()
}

pub fn veto_vector(m: usize) -> Vec<i128> {
    (0..m).map(|j| i128::from(j + 1 < m)).collect()
}

/// STV winners under every elimination order of tied-lowest alternatives.
/// Plain recursion, no memo, exact integer arithmetic.
pub fn stv_all_winners(p: &RawProfile) -> BTreeSet<usize> {
    let scale = lcm_upto(p.m().max(1));
    let mut out = BTreeSet::new();
    fn go(p: &RawProfile, scale: i128, remaining: Vec<usize>, out: &mut BTreeSet<usize>) {
        if remaining.len() == 1 {
            out.insert(remaining[0]);
            return;
        }
        let mut score = vec![0i128; p.m()];
        for (w, groups) in &p.ballots {
            let top: Vec<usize> = groups
                .iter()
                .map(|g| g.iter().copied().filter(|a| remaining.contains(a)).collect::<Vec<_>>())
                .find(|g| !g.is_empty())
                .unwrap_or_default();
            for &a in &top {
                score[a] += *w as i128 * scale / top.len() as i128;
            }
        }
        let total = p.n() as i128 * scale;
        if let Some(&maj) = remaining.iter().find(|&&a| 2 * score[a] > total) {
            out.insert(maj);
            return;
        }
        let low = remaining.iter().map(|&a| score[a]).min().expect("non-empty");
        for &x in remaining.iter().filter(|&&a| score[a] == low) {
            go(p, scale, remaining.iter().copied().filter(|&a| a != x).collect(), out);
        }
    }
    go(p, scale, (0..p.m()).collect(), &mut out);
    out
}

fn reaches(adj: &[Vec<bool>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend((0..adj.len()).filter(|&w| adj[v][w]));
        }
    }
    false
}

/// Ranked pairs winners under every order of equal-margin pairs: the
/// cartesian product of all permutations of each margin block.
pub fn ranked_pairs_all_winners(p: &RawProfile) -> BTreeSet<usize> {
    let m = p.m();
    let n = p.pairwise();
    let mut pairs: Vec<(i64, usize, usize)> = Vec::new();
    for x in 0..m {
        for y in 0..m {
            let margin = n[x][y] as i64 - n[y][x] as i64;
            if margin > 0 {
                pairs.push((margin, x, y));
            }
        }
    }
    pairs.sort_by_key(|p| std::cmp::Reverse(p.0));
    let mut blocks: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut last = None;
    for (margin, x, y) in pairs {
        if last != Some(margin) {
            blocks.push(Vec::new());
            last = Some(margin);
        }
        blocks.last_mut().expect("just pushed").push((x, y));
    }
    let perms: Vec<Vec<Vec<usize>>> =
        blocks.iter().map(|b| crate::permutations(b.len())).collect();
    let mut choice = vec![0usize; blocks.len()];
    let mut out = BTreeSet::new();
    loop {
        let mut adj = vec![vec![false; m]; m];
        for (b, block) in blocks.iter().enumerate() {
            for &i in &perms[b][choice[b]] {
                let (x, y) = block[i];
                if !reaches(&adj, y, x) {
                    adj[x][y] = true;
                }
            }
        }
        for v in 0..m {
            if (0..m).all(|u| !adj[u][v]) {
                out.insert(v);
            }
        }
        // odometer over block permutations
        let mut b = 0;
        loop {
            if b == blocks.len() {
                return out;
            }
            choice[b] += 1;
            if choice[b] < perms[b].len() {
                break;
            }
            choice[b] = 0;
            b += 1;
        }
    }
}

/// Smallest number of unit ballots that must be replaced by arbitrary linear
/// orders to change the winner set, by exhaustive search up to `max_k`.
/// `None` if no change is found within `max_k`.
pub fn mov_brute(
    p: &RawProfile,
    max_k: usize,
    winners: &dyn Fn(&RawProfile) -> BTreeSet<usize>,
) -> Option<u64> {
    let m = p.m();
    let units: Vec<Vec<Vec<usize>>> = p
        .ballots
        .iter()
        .flat_map(|(w, g)| std::iter::repeat_n(g.clone(), *w as usize))
        .collect();
    let base = winners(p);
    let orders: Vec<Vec<Vec<usize>>> = crate::permutations(m)
        .into_iter()
        .map(|o| o.into_iter().map(|a| vec![a]).collect())
        .collect();
    for k in 1..=max_k.min(units.len()) {
        for replaced in crate::combinations(units.len(), k) {
            // multisets of k orders
            let mut pick = vec![0usize; k];
            loop {
                let mut ballots: Vec<(u64, Vec<Vec<usize>>)> = units
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !replaced.contains(i))
                    .map(|(_, g)| (1, g.clone()))
                    .collect();
                ballots.extend(pick.iter().map(|&o| (1, orders[o].clone())));
                let q = RawProfile { ids: p.ids.clone(), ballots };
                if winners(&q) != base {
                    return Some(k as u64);
                }
                if !next_multiset(&mut pick, orders.len()) {
                    break;
                }
            }
        }
    }
    None
}

/// Advances a non-decreasing index vector to the next multiset over `0..n`.
fn next_multiset(pick: &mut [usize], n: usize) -> bool {
    for i in (0..pick.len()).rev() {
        if pick[i] + 1 < n {
            pick[i] += 1;
            let v = pick[i];
            for p in &mut pick[i + 1..] {
                *p = v;
            }
            return true;
        }
    }
    false
}
