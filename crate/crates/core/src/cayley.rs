//! Cayley graphs `G_S` on the odd coset and the graph `H_W` on the even subgroup.
//!
//! `G_S` has vertex set `O` and an edge `{y, z}`, `y != z`, whenever `y + z`,
//! `y - z` or `z - y` lies in `S`. Loops are never edges; vertices `y` with
//! `y + y in S` are reported separately as the doubling set.

use itertools::Itertools;
use serde::Serialize;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::group::{stats_of_indices, AbelianGroup};
use crate::index2::{compute_w, Index2Subgroup};
use crate::set::ElementSet;

#[derive(Debug, Clone)]
pub struct CayleyGraph {
    pub vertices: Vec<usize>,
    pub generators: Vec<usize>,
    /// Neighbor lists indexed by dense index; empty for non-vertices.
    pub adjacency: Vec<Vec<usize>>,
    pub edge_count: u64,
    /// Vertices `y` with `y + y` in the generator set.
    pub doubling: Vec<usize>,
}

impl CayleyGraph {
    pub fn max_degree(&self) -> usize {
        self.vertices
            .iter()
            .map(|&v| self.adjacency[v].len())
            .max()
            .unwrap_or(0)
    }

    /// `hist[d]` = number of vertices of degree `d`.
    pub fn degree_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.max_degree() + 1];
        for &v in &self.vertices {
            hist[self.adjacency[v].len()] += 1;
        }
        hist
    }

    /// Edges as `(y, z)` with `y < z`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .vertices
            .iter()
            .flat_map(|&y| self.adjacency[y].iter().filter(move |&&z| y < z).map(move |&z| (y, z)))
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// True when no edge has both endpoints in `set`.
    pub fn is_independent(&self, set: &ElementSet) -> bool {
        set.iter().all(|y| self.adjacency[y].iter().all(|&z| !set.contains(z)))
    }
}

/// Neighbors of `y` in `G_S`, deduplicated, in no particular order.
pub(crate) fn neighbors_into(g: &AbelianGroup, y: usize, s: &[usize], out: &mut Vec<usize>) {
    out.clear();
    for &x in s {
        for z in [g.sub_idx(x, y), g.sub_idx(y, x), g.add_idx(y, x)] {
            if z != y && !out.contains(&z) {
                out.push(z);
            }
        }
    }
}

fn check_generators(sub: &Index2Subgroup, s: &[usize]) -> Result<()> {
    let size = sub.group().size();
    for &x in s {
        if x >= size || !sub.is_even(x) {
            return Err(Error::GeneratorNotEven(x));
        }
    }
    Ok(())
}

pub fn build_cayley(sub: &Index2Subgroup, s: &[usize]) -> Result<CayleyGraph> {
    check_generators(sub, s)?;
    let g = sub.group();
    let generators: Vec<usize> = s.iter().copied().sorted_unstable().dedup().collect();
    let vertices = sub.odd_elements();
    let mut adjacency = vec![Vec::new(); g.size()];
    let mut edge_count = 0u64;
    let mut doubling = Vec::new();
    let mut buf = Vec::new();
    for &y in &vertices {
        neighbors_into(g, y, &generators, &mut buf);
        buf.sort_unstable();
        edge_count += buf.iter().filter(|&&z| z > y).count() as u64;
        adjacency[y] = buf.clone();
        if generators.contains(&g.double_idx(y)) {
            doubling.push(y);
        }
    }
    Ok(CayleyGraph {
        vertices,
        generators,
        adjacency,
        edge_count,
        doubling,
    })
}

/// `e(G_S)` without materializing adjacency. `odd` must list `O`.
pub fn edge_count(g: &AbelianGroup, odd: &[usize], s: &[usize]) -> u64 {
    let mut buf = Vec::with_capacity(3 * s.len());
    let mut count = 0u64;
    for &y in odd {
        neighbors_into(g, y, s, &mut buf);
        count += buf.iter().filter(|&&z| z > y).count() as u64;
    }
    count
}

/// Precomputed quantities for the closed-form count of `e(G_x)`.
#[derive(Debug, Clone)]
pub struct EdgeFormula {
    n: i64,
    r_even: i64,
    r_odd: i64,
    in_w: ElementSet,
}

impl EdgeFormula {
    pub fn new(sub: &Index2Subgroup) -> Self {
        let g = sub.group();
        EdgeFormula {
            n: g.n() as i64,
            r_even: sub.r_even() as i64,
            r_odd: sub.r_odd() as i64,
            in_w: ElementSet::from_indices(g.size(), compute_w(sub)),
        }
    }

    /// `2 e(G_x) = 2n - r(O) - r(E) [x in W] + (n - r(O)) [x not in R(G)]`.
    pub fn doubled(&self, g: &AbelianGroup, x: usize) -> i64 {
        let in_w = self.in_w.contains(x) as i64;
        let not_r = (!g.is_self_inverse(x)) as i64;
        2 * self.n - self.r_odd - self.r_even * in_w + (self.n - self.r_odd) * not_r
    }

    pub fn in_w(&self, x: usize) -> bool {
        self.in_w.contains(x)
    }
}

/// Closed-form `e(G_x)` for `0 != x in E`.
pub fn edge_count_formula(sub: &Index2Subgroup, x: usize) -> Result<u64> {
    if x == 0 {
        return Err(Error::ZeroGenerator);
    }
    check_generators(sub, &[x])?;
    let doubled = EdgeFormula::new(sub).doubled(sub.group(), x);
    debug_assert!(doubled >= 0 && doubled % 2 == 0);
    Ok((doubled / 2) as u64)
}

/// The four cells of the `e(G_x)` case table, doubled to stay integral:
/// rows `x in W` / `x not in W`, columns `x in R(G)` / `x not in R(G)`.
pub fn edge_table_doubled(n: i64, r_even: i64, r_odd: i64) -> [[i64; 2]; 2] {
    [
        [2 * n - r_odd - r_even, 3 * n - 2 * r_odd - r_even],
        [2 * n - r_odd, 3 * n - 2 * r_odd],
    ]
}

/// `E(G_x)` as sorted `(y, z)` pairs with `y < z`.
pub fn edge_set(g: &AbelianGroup, odd: &[usize], x: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let mut buf = Vec::new();
    for &y in odd {
        neighbors_into(g, y, &[x], &mut buf);
        edges.extend(buf.iter().filter(|&&z| z > y).map(|&z| (y, z)));
    }
    edges.sort_unstable();
    edges
}

fn sorted_intersection_len(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// `|E(G_x) n E(G_y)|` for `x, y in E \ {0}` with `x not in {y, -y}`.
pub fn pairwise_intersection(sub: &Index2Subgroup, x: usize, y: usize) -> Result<usize> {
    if x == 0 || y == 0 {
        return Err(Error::ZeroGenerator);
    }
    check_generators(sub, &[x, y])?;
    let g = sub.group();
    if x == y || x == g.neg_idx(y) {
        return Err(Error::DegeneratePair);
    }
    let odd = sub.odd_elements();
    Ok(sorted_intersection_len(&edge_set(g, &odd, x), &edge_set(g, &odd, y)))
}

pub(crate) fn intersection_of_edge_sets(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    sorted_intersection_len(a, b)
}

/// `e(H_W[S])`: unordered pairs `{x, y}` in `S`, `x != y`, with `x + y in W`.
pub fn hw_induced_edges(g: &AbelianGroup, in_w: impl Fn(usize) -> bool, s: &[usize]) -> u64 {
    let mut count = 0;
    for (i, &x) in s.iter().enumerate() {
        for &y in &s[i + 1..] {
            if x != y && in_w(g.add_idx(x, y)) {
                count += 1;
            }
        }
    }
    count
}

/// Adjacency of `H_W` on `E`: `x ~ y` iff `x != y` and `x + y in W`.
pub fn build_hw(sub: &Index2Subgroup) -> Vec<Vec<usize>> {
    let g = sub.group();
    let w = compute_w(sub);
    let mut adjacency = vec![Vec::new(); g.size()];
    for x in sub.even_elements() {
        let mut nbrs: Vec<usize> = w.iter().map(|&t| g.sub_idx(t, x)).filter(|&y| y != x).collect();
        nbrs.sort_unstable();
        nbrs.dedup();
        adjacency[x] = nbrs;
    }
    adjacency
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeBounds {
    pub e: u64,
    pub k: usize,
    pub r_s: usize,
    /// `((3k - r(S))/2) n`, doubled.
    pub upper_doubled: i64,
    pub upper_ok: bool,
    /// Sum over `x in S` of `e(G_x)`.
    pub sum_single: u64,
    /// `e(G_S) >= sum e(G_x) / 2` and every `e(G_x) >= max{n - r(G), n/2}`.
    pub lower_ok: bool,
    /// `((3k - r(S))/2) n - k r(G) - 2 r(E) e(H_W[S])`, doubled.
    pub proof_lower_doubled: i64,
    pub proof_lower_ok: bool,
    pub hw_edges: u64,
}

/// Checks the two-sided edge bounds for `0 not in S`, `m(S) = 0`.
pub fn edge_bounds_check(sub: &Index2Subgroup, s: &[usize], _delta: f64) -> Result<EdgeBounds> {
    check_generators(sub, s)?;
    if s.contains(&0) {
        return Err(Error::ZeroGenerator);
    }
    let g = sub.group();
    let stats = stats_of_indices(g, s);
    if stats.m_count != 0 {
        return Err(Error::PairedGenerators);
    }
    let odd = sub.odd_elements();
    let formula = EdgeFormula::new(sub);
    Ok(edge_bounds_with(g, sub, &odd, &formula, s))
}

pub(crate) fn edge_bounds_with(
    g: &AbelianGroup,
    sub: &Index2Subgroup,
    odd: &[usize],
    formula: &EdgeFormula,
    s: &[usize],
) -> EdgeBounds {
    let n = g.n() as i64;
    let k = s.len();
    let r_s = s.iter().filter(|&&x| g.is_self_inverse(x)).count();
    let e = edge_count(g, odd, s);
    let upper_doubled = (3 * k as i64 - r_s as i64) * n;
    let singles: Vec<u64> = s.iter().map(|&x| edge_count(g, odd, &[x])).collect();
    let sum_single: u64 = singles.iter().sum();
    let floor_ok = singles
        .iter()
        .all(|&ex| 2 * ex as i64 >= (2 * (n - g.r() as i64)).max(n));
    let lower_ok = 2 * e >= sum_single && floor_ok;
    let hw_edges = hw_induced_edges(g, |t| formula.in_w(t), s);
    let proof_lower_doubled = upper_doubled - 2 * k as i64 * g.r() as i64 - 4 * sub.r_even() as i64 * hw_edges as i64;
    EdgeBounds {
        e,
        k,
        r_s,
        upper_doubled,
        upper_ok: 2 * e as i64 <= upper_doubled,
        sum_single,
        lower_ok,
        proof_lower_doubled,
        proof_lower_ok: 2 * e as i64 >= proof_lower_doubled,
        hw_edges,
    }
}

/// Elements of `E \ {0}` in dense order.
pub(crate) fn nonzero_evens(sub: &Index2Subgroup) -> Vec<usize> {
    sub.even_elements().into_iter().filter(|&x| x != 0).collect()
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Visits every `k`-subset of `E \ {0}` with `m(S) = 0`, in lexicographic
/// order of dense indices.
pub fn for_each_generator_set(sub: &Index2Subgroup, k: usize, caps: &Caps, mut f: impl FnMut(&[usize])) -> Result<()> {
    let candidates = nonzero_evens(sub);
    let size = binomial_u128(candidates.len() as u64, k as u64);
    if size > caps.enumeration as u128 {
        return Err(Error::EnumerationTooLarge {
            size,
            cap: caps.enumeration,
        });
    }
    let g = sub.group();
    for s in candidates.iter().copied().combinations(k) {
        if stats_of_indices(g, &s).m_count == 0 {
            f(&s);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `r(G) <= delta n`.
    SmallR,
    /// `r(G) > delta n`.
    LargeR,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseBucket {
    pub s: usize,
    /// Sets with `e(G_S) < (s + 1)(n - r(O)/2)`.
    pub count: u64,
    /// `(12/delta)^k (n/k)^s`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceptionalSets {
    pub regime: Regime,
    /// Every `S` with `e(G_S) <= ((3k - r(S))/2 - a k) n`.
    pub sets: Vec<Vec<usize>>,
    /// `(6/delta^2)^k (n/k)^(k - (a/2 - delta) k)`; it only applies in the
    /// small-`r` regime with `4 delta <= a <= 1`.
    pub small_r_bound: f64,
    pub small_r_bound_applies: bool,
    pub buckets: Vec<SparseBucket>,
    /// True when every applicable count is within its bound.
    pub within_bounds: bool,
}

/// Exhaustively lists generator sets with too few edges.
pub fn enumerate_exceptional_sets(
    sub: &Index2Subgroup,
    k: usize,
    a: f64,
    delta: f64,
    caps: &Caps,
) -> Result<ExceptionalSets> {
    let g = sub.group();
    let n = g.n() as f64;
    let regime = if (g.r() as f64) <= delta * n {
        Regime::SmallR
    } else {
        Regime::LargeR
    };
    let mut sets = Vec::new();
    let mut bucket_counts = vec![0u64; k + 1];
    if k > 0 {
        let odd = sub.odd_elements();
        let half_edge = n - sub.r_odd() as f64 / 2.0;
        for_each_generator_set(sub, k, caps, |s| {
            let e = edge_count(g, &odd, s) as f64;
            let r_s = s.iter().filter(|&&x| g.is_self_inverse(x)).count() as f64;
            if e <= ((3.0 * k as f64 - r_s) / 2.0 - a * k as f64) * n {
                sets.push(s.to_vec());
            }
            for (bucket, count) in bucket_counts.iter_mut().enumerate() {
                if e < (bucket as f64 + 1.0) * half_edge {
                    *count += 1;
                }
            }
        })?;
    }
    let kf = k as f64;
    let ratio = if k > 0 { n / kf } else { 1.0 };
    let small_r_bound = (6.0 / (delta * delta)).powf(kf) * ratio.powf(kf - (a / 2.0 - delta) * kf);
    let small_r_bound_applies = regime == Regime::SmallR && 4.0 * delta <= a && a <= 1.0;
    let buckets: Vec<SparseBucket> = if k == 0 {
        Vec::new()
    } else {
        bucket_counts
            .iter()
            .enumerate()
            .map(|(s, &count)| SparseBucket {
                s,
                count,
                bound: (12.0 / delta).powf(kf) * ratio.powf(s as f64),
            })
            .collect()
    };
    let mut within_bounds = true;
    if small_r_bound_applies && sets.len() as f64 > small_r_bound {
        within_bounds = false;
    }
    if regime == Regime::LargeR && buckets.iter().any(|b| b.count as f64 > b.bound) {
        within_bounds = false;
    }
    Ok(ExceptionalSets {
        regime,
        sets,
        small_r_bound,
        small_r_bound_applies,
        buckets,
        within_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index2::enumerate_index2_subgroups;

    fn z(moduli: &[u64]) -> AbelianGroup {
        AbelianGroup::from_written(moduli, 1 << 24).unwrap()
    }

    fn w(g: &AbelianGroup, c: &[u64]) -> usize {
        g.index_from_written(c).unwrap()
    }

    /// Brute-force oracle: scan all unordered pairs of O.
    fn brute_edges(g: &AbelianGroup, sub: &Index2Subgroup, s: &[usize]) -> u64 {
        let odd = sub.odd_elements();
        let mut count = 0;
        for (i, &y) in odd.iter().enumerate() {
            for &z in &odd[i + 1..] {
                if s.contains(&g.add_idx(y, z)) || s.contains(&g.sub_idx(y, z)) || s.contains(&g.sub_idx(z, y)) {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn build_cayley_examples() {
        let caps = Caps::default();
        let g = z(&[4]);
        let sub = &enumerate_index2_subgroups(&g, &caps).unwrap()[0];
        let graph = build_cayley(sub, &[w(&g, &[2])]).unwrap();
        assert_eq!(graph.edge_count, 1);
        assert_eq!(graph.edges(), vec![(w(&g, &[1]), w(&g, &[3]))]);

        let g = z(&[6]);
        let sub = &enumerate_index2_subgroups(&g, &caps).unwrap()[0];
        let graph = build_cayley(sub, &[w(&g, &[2])]).unwrap();
        assert_eq!(graph.edge_count, 3);
        assert_eq!(graph.edge_count, brute_edges(&g, sub, &[w(&g, &[2])]));
        assert_eq!(graph.degree_histogram(), vec![0, 0, 3]);
        assert_eq!(build_cayley(sub, &[]).unwrap().edge_count, 0);
        assert_eq!(
            build_cayley(sub, &[w(&g, &[1])]).unwrap_err(),
            Error::GeneratorNotEven(w(&g, &[1]))
        );
    }

    #[test]
    fn doubling_set_is_tracked_but_not_an_edge() {
        let g = z(&[4]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        let graph = build_cayley(&sub, &[w(&g, &[2])]).unwrap();
        assert_eq!(graph.doubling, vec![w(&g, &[1]), w(&g, &[3])]);
        assert!(graph.vertices.iter().all(|&v| !graph.neighbors(v).contains(&v)));
    }

    #[test]
    fn formula_examples() {
        let g = z(&[4]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        assert_eq!(edge_count_formula(&sub, w(&g, &[2])).unwrap(), 1);
        assert_eq!(edge_count_formula(&sub, 0), Err(Error::ZeroGenerator));
        let g = z(&[6]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        assert_eq!(edge_count_formula(&sub, w(&g, &[2])).unwrap(), 3);
        assert_eq!(edge_count_formula(&sub, w(&g, &[4])).unwrap(), 3);
    }

    #[test]
    fn table_matches_formula_cases() {
        for g in [z(&[2, 2, 2, 2]), z(&[2, 4, 4]), z(&[8, 2])] {
            for sub in enumerate_index2_subgroups(&g, &Caps::default()).unwrap() {
                let f = EdgeFormula::new(&sub);
                let t = edge_table_doubled(g.n() as i64, sub.r_even() as i64, sub.r_odd() as i64);
                for x in nonzero_evens(&sub) {
                    let row = if f.in_w(x) { 0 } else { 1 };
                    let col = if g.is_self_inverse(x) { 0 } else { 1 };
                    assert_eq!(t[row][col], f.doubled(&g, x));
                }
            }
        }
    }

    #[test]
    fn intersections() {
        let g = z(&[6]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        assert_eq!(
            pairwise_intersection(&sub, w(&g, &[2]), w(&g, &[4])),
            Err(Error::DegeneratePair)
        );
        let g = z(&[12]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        let mut wset: Vec<u64> = compute_w(&sub).iter().map(|&i| g.written_coords(i)[0]).collect();
        wset.sort();
        assert_eq!(wset, vec![2, 6, 10]);
        assert_eq!(pairwise_intersection(&sub, w(&g, &[2]), w(&g, &[6])).unwrap(), 0);
        // 2 + 4 = 6 is in W; the overlap is computed from the edge sets.
        let both = pairwise_intersection(&sub, w(&g, &[2]), w(&g, &[4])).unwrap();
        assert!(both as u64 <= 2 * sub.r_even());
    }

    #[test]
    fn bounds_examples() {
        let g = z(&[6]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        let b = edge_bounds_check(&sub, &[w(&g, &[2])], 0.1).unwrap();
        assert_eq!((b.e, b.k, b.r_s, b.upper_doubled), (3, 1, 0, 9));
        assert!(b.upper_ok && b.lower_ok && b.proof_lower_ok);
        assert_eq!(
            edge_bounds_check(&sub, &[w(&g, &[2]), w(&g, &[4])], 0.1),
            Err(Error::PairedGenerators)
        );
        assert_eq!(edge_bounds_check(&sub, &[0], 0.1), Err(Error::ZeroGenerator));
        let g = z(&[4]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        let b = edge_bounds_check(&sub, &[w(&g, &[2])], 0.1).unwrap();
        assert_eq!((b.e, b.r_s, b.upper_doubled), (1, 1, 4));
        assert!(b.upper_ok);
    }

    #[test]
    fn exceptional_examples() {
        let caps = Caps::default();
        let g = z(&[6]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        assert!(enumerate_exceptional_sets(&sub, 1, 1.0, 0.1, &caps)
            .unwrap()
            .sets
            .is_empty());
        let g = z(&[4]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        let ex = enumerate_exceptional_sets(&sub, 1, 0.4, 0.1, &caps).unwrap();
        assert_eq!(ex.sets, vec![vec![w(&g, &[2])]]);
        let ex = enumerate_exceptional_sets(&sub, 0, 0.4, 0.1, &caps).unwrap();
        assert!(ex.sets.is_empty() && ex.buckets.is_empty());
    }

    #[test]
    fn enumeration_cap() {
        let g = z(&[256]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        let caps = Caps {
            enumeration: 1000,
            ..Caps::default()
        };
        assert!(matches!(
            enumerate_exceptional_sets(&sub, 3, 0.5, 0.1, &caps),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn hw_degree_bound() {
        for g in [z(&[12]), z(&[2, 4, 3]), z(&[2, 2, 2, 2])] {
            for sub in enumerate_index2_subgroups(&g, &Caps::default()).unwrap() {
                let w = compute_w(&sub);
                let hw = build_hw(&sub);
                assert!(hw.iter().all(|nb| nb.len() <= w.len()));
            }
        }
    }
}
