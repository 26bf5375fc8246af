//! Ranked pairs with every ordering of equal-margin pairs explored.
//!
//! Only strictly positive margins are locked. Pairs with equal margin form a
//! block; a universe fixes one permutation of each block. Within a block the
//! search first settles every pair whose fate does not depend on the order:
//! pairs that already close a cycle are dropped, and pairs lying on no cycle of
//! `locked + rest of block` are locked. It branches only on what remains.

use std::collections::HashSet;

use super::{PutOutcome, RuleError, MAX_PUT_ALTERNATIVES};
use crate::preference::{NormalizedProfile, PairwiseMatrix};

type Pair = (usize, usize);

/// Positive-margin pairs grouped into blocks of equal margin, largest first.
/// Pairs inside a block are in lexicographic order.
pub(crate) fn margin_blocks(matrix: &PairwiseMatrix) -> Vec<Vec<Pair>> {
    let m = matrix.len();
    let mut pairs: Vec<(i64, Pair)> = Vec::new();
    for x in 0..m {
        for y in 0..m {
            let margin = matrix.margin(x, y);
            if x != y && margin > 0 {
                pairs.push((margin, (x, y)));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut blocks: Vec<Vec<Pair>> = Vec::new();
    let mut last = None;
    for (margin, pair) in pairs {
        if last == Some(margin) {
            blocks.last_mut().expect("block exists").push(pair);
        } else {
            blocks.push(vec![pair]);
            last = Some(margin);
        }
    }
    blocks
}

/// Directed graph over at most 64 vertices as out-neighbour bitmasks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Graph(Vec<u64>);

impl Graph {
    pub(crate) fn new(m: usize) -> Self {
        Graph(vec![0; m])
    }

    pub(crate) fn add(&mut self, (x, y): Pair) {
        self.0[x] |= 1 << y;
    }

    pub(crate) fn reaches(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = 1u64 << from;
        let mut frontier = seen;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.0[v];
            }
            next &= !seen;
            if next >> to & 1 == 1 {
                return true;
            }
            seen |= next;
            frontier = next;
        }
        false
    }

    /// Locks `pair` unless it closes a cycle.
    pub(crate) fn try_lock(&mut self, pair: Pair) -> bool {
        if self.reaches(pair.1, pair.0) {
            false
        } else {
            self.add(pair);
            true
        }
    }

    /// Vertices without incoming edges.
    pub(crate) fn sources(&self) -> u64 {
        let m = self.0.len();
        let has_incoming = self.0.iter().fold(0u64, |acc, &out| acc | out);
        let all = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        all & !has_incoming
    }
}

fn check(profile: &NormalizedProfile) -> Result<(), RuleError> {
    let m = profile.alternative_count();
    if m == 0 {
        return Err(RuleError::NoAlternatives);
    }
    if m > MAX_PUT_ALTERNATIVES {
        return Err(RuleError::TooManyAlternatives {
            got: m,
            max: MAX_PUT_ALTERNATIVES,
        });
    }
    if profile.voter_count() == 0 {
        return Err(RuleError::EmptyProfile);
    }
    Ok(())
}

/// Settles order-independent pairs of the current block in place.
fn reduce(graph: &mut Graph, rest: &mut Vec<Pair>) {
    loop {
        let before = rest.len();
        rest.retain(|&(x, y)| !graph.reaches(y, x));
        let mut superset = graph.clone();
        for &p in rest.iter() {
            superset.add(p);
        }
        let mut kept = Vec::with_capacity(rest.len());
        for &(x, y) in rest.iter() {
            if superset.reaches(y, x) {
                kept.push((x, y));
            } else {
                graph.add((x, y));
            }
        }
        *rest = kept;
        if rest.len() == before {
            return;
        }
    }
}

pub fn ranked_pairs_put_normalized(profile: &NormalizedProfile) -> Result<PutOutcome, RuleError> {
    check(profile)?;
    let m = profile.alternative_count();
    let blocks = margin_blocks(&PairwiseMatrix::from_normalized(profile));

    let mut winners = 0u64;
    let mut visited: HashSet<(usize, Vec<Pair>, Graph)> = HashSet::new();
    let mut stack: Vec<(usize, Vec<Pair>, Graph)> = vec![(0, Vec::new(), Graph::new(m))];
    while let Some((mut block, mut rest, mut graph)) = stack.pop() {
        reduce(&mut graph, &mut rest);
        while rest.is_empty() && block < blocks.len() {
            rest = blocks[block].clone();
            block += 1;
            reduce(&mut graph, &mut rest);
        }
        if !visited.insert((block, rest.clone(), graph.clone())) {
            continue;
        }
        if rest.is_empty() {
            winners |= graph.sources();
            continue;
        }
        for (i, &pair) in rest.iter().enumerate().rev() {
            let mut child = graph.clone();
            child.add(pair);
            let mut remaining = rest.clone();
            remaining.remove(i);
            stack.push((block, remaining, child));
        }
    }
    Ok(PutOutcome {
        winners: (0..m).filter(|&x| winners >> x & 1 == 1).collect(),
        nodes: visited.len() as u64,
    })
}

/// Ranked pairs with each block processed in lexicographic pair order.
/// Returns every source of the resulting graph.
pub fn ranked_pairs_fixed_order(profile: &NormalizedProfile) -> Result<Vec<usize>, RuleError> {
    check(profile)?;
    let m = profile.alternative_count();
    let mut graph = Graph::new(m);
    for block in margin_blocks(&PairwiseMatrix::from_normalized(profile)) {
        for pair in block {
            graph.try_lock(pair);
        }
    }
    let sources = graph.sources();
    Ok((0..m).filter(|&x| sources >> x & 1 == 1).collect())
}
