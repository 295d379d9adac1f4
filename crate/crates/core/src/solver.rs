//! Exact maximum sum-free subsets of a small set `A` by branch and bound over
//! its Schur-triple hypergraph.
//!
//! Every solution `x + y = z` inside `A` becomes a constraint: the set
//! `{x, y, z}` (or `{x, z}` when `x = y`) may not be fully chosen. The zero
//! element is never chosen since `0 + 0 = 0`.

use serde::Serialize;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::set::ElementSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaxSumFree {
    pub size: usize,
    /// All maximizers when enumeration was requested, otherwise one of them.
    /// Each is sorted; the list is in lexicographic order.
    pub maximizers: Vec<Vec<usize>>,
}

struct Search {
    n: usize,
    /// Constraints containing each local vertex.
    incident: Vec<Vec<u64>>,
    constraints: Vec<u64>,
    order: Vec<usize>,
    enumerate_all: bool,
    best: usize,
    found: Vec<u64>,
}

impl Search {
    fn can_include(&self, v: usize, chosen: u64) -> bool {
        let with = chosen | 1 << v;
        self.incident[v].iter().all(|&c| c & !with != 0)
    }

    /// Undecided count minus a greedy packing of constraints that still need
    /// an undecided member dropped.
    fn bound(&self, chosen: u64, undecided: u64) -> usize {
        let mut used = 0u64;
        let mut packed = 0usize;
        for &c in &self.constraints {
            let open = c & undecided;
            if open != 0 && c & !(chosen | undecided) == 0 && open & used == 0 {
                used |= open;
                packed += 1;
            }
        }
        chosen.count_ones() as usize + undecided.count_ones() as usize - packed
    }

    fn run(&mut self, depth: usize, chosen: u64, undecided: u64) {
        let bound = self.bound(chosen, undecided);
        if bound < self.best || (!self.enumerate_all && bound == self.best && !self.found.is_empty()) {
            return;
        }
        if depth == self.order.len() {
            let size = chosen.count_ones() as usize;
            if size > self.best || self.found.is_empty() {
                self.best = size;
                self.found.clear();
            }
            if size == self.best && (self.enumerate_all || self.found.is_empty()) {
                self.found.push(chosen);
            }
            return;
        }
        let v = self.order[depth];
        let rest = undecided & !(1 << v);
        if self.can_include(v, chosen) {
            self.run(depth + 1, chosen | 1 << v, rest);
        }
        self.run(depth + 1, chosen, rest);
    }
}

/// Maximum sum-free subsets of `a`. With `enumerate_all`, every maximizer is
/// returned exactly once.
pub fn max_sum_free(g: &AbelianGroup, a: &ElementSet, enumerate_all: bool, caps: &Caps) -> Result<MaxSumFree> {
    let cap = if enumerate_all {
        caps.solver_enumerate
    } else {
        caps.solver_size
    };
    let cap = cap.min(64);
    let members: Vec<usize> = a.iter().filter(|&x| x != g.zero()).collect();
    if members.len() > cap {
        return Err(Error::SolverCapExceeded {
            size: members.len(),
            cap,
        });
    }
    let n = members.len();
    let local = |x: usize| members.binary_search(&x).ok();
    let mut constraints = Vec::new();
    for i in 0..n {
        for j in i..n {
            if let Some(l) = local(g.add_idx(members[i], members[j])) {
                constraints.push(1u64 << i | 1u64 << j | 1u64 << l);
            }
        }
    }
    constraints.sort_unstable_by_key(|c| (c.count_ones(), *c));
    constraints.dedup();
    let mut incident = vec![Vec::new(); n];
    for &c in &constraints {
        for (v, list) in incident.iter_mut().enumerate() {
            if c >> v & 1 == 1 {
                list.push(c);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(incident[v].len()), v));
    let mut search = Search {
        n,
        incident,
        constraints,
        order,
        enumerate_all,
        best: 0,
        found: Vec::new(),
    };
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    search.run(0, 0, all);
    let mut maximizers: Vec<Vec<usize>> = search
        .found
        .iter()
        .map(|&mask| {
            (0..search.n)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| members[i])
                .collect()
        })
        .collect();
    maximizers.sort();
    Ok(MaxSumFree {
        size: search.best,
        maximizers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sumfree::is_sum_free;

    fn z(moduli: &[u64]) -> AbelianGroup {
        AbelianGroup::from_written(moduli, 1 << 24).unwrap()
    }

    /// Every subset of `a`, largest sum-free ones kept.
    fn brute(g: &AbelianGroup, a: &[usize]) -> (usize, Vec<Vec<usize>>) {
        let mut best = 0;
        let mut sets = Vec::new();
        for mask in 0u64..1 << a.len() {
            let s: Vec<usize> = (0..a.len()).filter(|&i| mask >> i & 1 == 1).map(|i| a[i]).collect();
            if s.len() < best {
                continue;
            }
            if is_sum_free(g, &ElementSet::from_indices(g.size(), s.iter().copied())).sum_free {
                if s.len() > best {
                    best = s.len();
                    sets.clear();
                }
                sets.push(s);
            }
        }
        sets.sort();
        (best, sets)
    }

    #[test]
    fn examples() {
        let caps = Caps::default();
        let g = z(&[10]);
        let r = max_sum_free(&g, &ElementSet::full(10), true, &caps).unwrap();
        assert_eq!(r.size, 5);
        let odd: Vec<usize> = [1, 3, 5, 7, 9]
            .iter()
            .map(|&e| g.index_from_written(&[e]).unwrap())
            .collect();
        let mut odd_sorted = odd.clone();
        odd_sorted.sort();
        assert_eq!(r.maximizers, vec![odd_sorted]);

        let g = z(&[2, 4]);
        let r = max_sum_free(&g, &ElementSet::full(8), true, &caps).unwrap();
        assert_eq!((r.size, r.maximizers.len()), (4, 3));

        let r = max_sum_free(&g, &ElementSet::empty(8), true, &caps).unwrap();
        assert_eq!(
            r,
            MaxSumFree {
                size: 0,
                maximizers: vec![vec![]]
            }
        );
    }

    #[test]
    fn cap_is_enforced() {
        let g = z(&[64]);
        let caps = Caps {
            solver_enumerate: 10,
            ..Caps::default()
        };
        assert_eq!(
            max_sum_free(&g, &ElementSet::full(64), true, &caps),
            Err(Error::SolverCapExceeded { size: 63, cap: 10 })
        );
    }

    #[test]
    fn matches_brute_force_on_random_subsets() {
        let caps = Caps::default();
        for g in [z(&[12]), z(&[2, 6]), z(&[2, 2, 4]), z(&[16]), z(&[14])] {
            let size = g.size();
            let mut state = 0x9e37_79b9_7f4a_7c15u64;
            for _ in 0..40 {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let a: Vec<usize> = (0..size).filter(|&i| (state >> (i % 61)) & 1 == 1).collect();
                let set = ElementSet::from_indices(size, a.iter().copied());
                let (best, sets) = brute(&g, &a);
                let r = max_sum_free(&g, &set, true, &caps).unwrap();
                assert_eq!(r.size, best);
                assert_eq!(r.maximizers, sets);
                assert_eq!(max_sum_free(&g, &set, false, &caps).unwrap().size, best);
            }
        }
    }
}
