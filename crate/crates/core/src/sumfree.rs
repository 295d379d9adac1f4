//! Sum-free predicates, safe elements, the local-improvement event `B_k` and
//! good-triple extraction.

use itertools::Itertools;
use serde::Serialize;

use crate::caps::Caps;
use crate::cayley::{binomial_u128, neighbors_into};
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::index2::{odd_coset, Index2Subgroup};
use crate::set::ElementSet;

/// Result of a sum-freeness test. `witness` is a Schur triple `(x, y, z)`
/// with `x + y = z`, `x <= y`, all in the set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SumFreeCertificate {
    pub sum_free: bool,
    pub witness: Option<(usize, usize, usize)>,
}

/// Scans all pairs `x <= y` of `b`. The witness returned is the first in
/// lexicographic order of `(x, y)`.
pub fn is_sum_free(g: &AbelianGroup, b: &ElementSet) -> SumFreeCertificate {
    let members = b.to_vec();
    for (i, &x) in members.iter().enumerate() {
        for &y in &members[i..] {
            let z = g.add_idx(x, y);
            if b.contains(z) {
                return SumFreeCertificate {
                    sum_free: false,
                    witness: Some((x, y, z)),
                };
            }
        }
    }
    SumFreeCertificate {
        sum_free: true,
        witness: None,
    }
}

/// Which sums make an even element unsafe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Safety {
    /// `(A n O) + {x}` sum-free, so `a + a = x` also counts.
    #[default]
    Strict,
    /// `A n O` independent in `G_x`; sums `a + a` are ignored.
    Independence,
}

/// Elements of `E` that some pair of `a_odd` rules out: `a + b` and `a - b`
/// for `a != b`, plus `a + a` under strict safety.
pub(crate) fn unsafe_evens(g: &AbelianGroup, a_odd: &[usize], safety: Safety) -> ElementSet {
    let mut out = ElementSet::empty(g.size());
    for (i, &a) in a_odd.iter().enumerate() {
        if safety == Safety::Strict {
            out.insert(g.double_idx(a));
        }
        for &b in &a_odd[i + 1..] {
            out.insert(g.add_idx(a, b));
            out.insert(g.sub_idx(a, b));
            out.insert(g.sub_idx(b, a));
        }
    }
    out
}

/// `S^E(A) = {x in E \ {0} : (A n O) + {x} sum-free}`.
pub fn safe_elements(sub: &Index2Subgroup, a: &ElementSet) -> ElementSet {
    safe_elements_with(sub, a, Safety::Strict)
}

pub fn safe_elements_with(sub: &Index2Subgroup, a: &ElementSet, safety: Safety) -> ElementSet {
    let g = sub.group();
    let a_odd: Vec<usize> = a.iter().filter(|&x| sub.is_odd(x)).collect();
    let mut safe = sub.even_set().difference(&unsafe_evens(g, &a_odd, safety));
    safe.remove(g.zero());
    safe
}

/// `|S^E(A)|` without building the even set.
pub fn safe_count(sub: &Index2Subgroup, a_odd: &[usize], safety: Safety) -> usize {
    let g = sub.group();
    let blocked = unsafe_evens(g, a_odd, safety);
    // Every blocked element is even; zero is blocked by any a - a style sum
    // only when a_odd has a self-inverse pair, so handle it explicitly.
    let blocked_nonzero = blocked.len() - blocked.contains(g.zero()) as usize;
    g.n() as usize - 1 - blocked_nonzero
}

/// `Y_u(A) = S^E(A) \ S^E(A + {u})` for `u in O \ A`.
pub fn difference_set(sub: &Index2Subgroup, a: &ElementSet, u: usize) -> Result<ElementSet> {
    if u >= sub.group().size() || !sub.is_odd(u) {
        return Err(Error::NotInOddCoset(u));
    }
    if a.contains(u) {
        return Err(Error::VertexInA(u));
    }
    let mut bigger = a.clone();
    bigger.insert(u);
    Ok(safe_elements(sub, a).difference(&safe_elements(sub, &bigger)))
}

/// A witness `(S, T)` of `B_k`: `|S| = k >= |T|` and `((A n O) + S) \ T` sum-free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BkWitness {
    pub s: Vec<usize>,
    pub t: Vec<usize>,
}

/// Minimum vertex cover of size at most `budget`, by branching on a vertex of
/// maximum degree. `adj` is over local indices; `alive` marks the remaining
/// vertices.
fn vertex_cover(adj: &[Vec<usize>], alive: &mut [bool], budget: usize, chosen: &mut Vec<usize>) -> bool {
    let degree = |v: usize, alive: &[bool]| adj[v].iter().filter(|&&w| alive[w]).count();
    let mut best = None;
    let mut edges = 0usize;
    for v in 0..adj.len() {
        if !alive[v] {
            continue;
        }
        let d = degree(v, alive);
        edges += d;
        if d > 0 && best.is_none_or(|(_, bd)| d > bd) {
            best = Some((v, d));
        }
    }
    let Some((v, d)) = best else { return true };
    // Each chosen vertex covers at most d edges.
    if budget == 0 || edges / 2 > budget * d {
        return false;
    }
    alive[v] = false;
    chosen.push(v);
    if vertex_cover(adj, alive, budget - 1, chosen) {
        alive[v] = true;
        return true;
    }
    chosen.pop();
    let nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| alive[w]).collect();
    let mut found = false;
    if nbrs.len() <= budget {
        for &w in &nbrs {
            alive[w] = false;
        }
        let mark = chosen.len();
        chosen.extend(&nbrs);
        found = vertex_cover(adj, alive, budget - nbrs.len(), chosen);
        if !found {
            chosen.truncate(mark);
        }
        for &w in &nbrs {
            alive[w] = true;
        }
    }
    alive[v] = true;
    found
}

/// Smallest `T` with `|T| <= budget` such that `((A n O) + S) \ T` is sum-free,
/// given that `S` itself is sum-free.
fn smallest_removal(g: &AbelianGroup, a_odd: &[usize], s: &[usize], budget: usize) -> Option<Vec<usize>> {
    let pos = |x: usize| a_odd.binary_search(&x).ok();
    let mut forced = Vec::new();
    let mut adj = vec![Vec::new(); a_odd.len()];
    let mut buf = Vec::new();
    for (i, &y) in a_odd.iter().enumerate() {
        if s.contains(&g.double_idx(y)) {
            forced.push(i);
        }
        neighbors_into(g, y, s, &mut buf);
        for &z in &buf {
            if let Some(j) = pos(z) {
                adj[i].push(j);
            }
        }
    }
    if forced.len() > budget {
        return None;
    }
    let mut alive = vec![true; a_odd.len()];
    for &f in &forced {
        alive[f] = false;
    }
    for extra in 0..=budget - forced.len() {
        let mut chosen = Vec::new();
        if vertex_cover(&adj, &mut alive, extra, &mut chosen) {
            let mut t: Vec<usize> = forced.iter().chain(&chosen).map(|&i| a_odd[i]).collect();
            t.sort_unstable();
            return Some(t);
        }
    }
    None
}

/// Decides `B_k(A)`: is there `S` in `A n E` with `|S| = k` and `T` in `A n O`
/// with `|T| <= k` such that `((A n O) + S) \ T` is sum-free? Candidates `S`
/// are tried in lexicographic order; the first witness is returned with a
/// smallest `T`.
pub fn bk_event(sub: &Index2Subgroup, a: &ElementSet, k: usize, caps: &Caps) -> Result<Option<BkWitness>> {
    let g = sub.group();
    let a_even: Vec<usize> = a.iter().filter(|&x| sub.is_even(x)).collect();
    let a_odd: Vec<usize> = a.iter().filter(|&x| sub.is_odd(x)).collect();
    let size = binomial_u128(a_even.len() as u64, k as u64);
    if size > caps.enumeration as u128 {
        return Err(Error::EnumerationTooLarge {
            size,
            cap: caps.enumeration,
        });
    }
    if k == 0 || a_even.len() < k {
        return Ok(None);
    }
    for s in a_even.iter().copied().combinations(k) {
        if !is_sum_free(g, &ElementSet::from_indices(g.size(), s.iter().copied())).sum_free {
            continue;
        }
        if let Some(t) = smallest_removal(g, &a_odd, &s, k) {
            return Ok(Some(BkWitness { s, t }));
        }
    }
    Ok(None)
}

/// `(S, T, U)` with `S` in `A n E`, `|S| = k`; `T, U` disjoint in `A n O`,
/// `|U| <= |T| <= k`; `(A n O) \ T` independent in `G_S`; `T` inside `N(U)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodTriple {
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub u: Vec<usize>,
    pub k: usize,
}

fn neighbor_lists(g: &AbelianGroup, a_odd: &[usize], s: &[usize]) -> Vec<Vec<usize>> {
    let mut buf = Vec::new();
    a_odd
        .iter()
        .map(|&y| {
            neighbors_into(g, y, s, &mut buf);
            let mut v = buf.clone();
            v.sort_unstable();
            v
        })
        .collect()
}

/// Turns a witness of `B_k` into a good triple. `T` is first shrunk, in
/// increasing order, to an inclusion-minimal set keeping `(A n O) \ T`
/// independent in `G_S`; then a maximal matching from `T` into `(A n O) \ T`
/// is built greedily in dense-index order and `U` is its far side.
pub fn extract_good_triple(sub: &Index2Subgroup, a: &ElementSet, s: &[usize], t: &[usize]) -> Result<GoodTriple> {
    let g = sub.group();
    let a_odd: Vec<usize> = a.iter().filter(|&x| sub.is_odd(x)).collect();
    let in_s = |x: usize| s.contains(&x);
    let valid_parts = s.iter().all(|&x| x < g.size() && a.contains(x) && sub.is_even(x))
        && t.iter().all(|&x| x < g.size() && a.contains(x) && sub.is_odd(x))
        && s.iter().all_unique()
        && t.iter().all_unique()
        && t.len() <= s.len();
    if !valid_parts {
        return Err(Error::NotAWitness);
    }
    let mut kept = ElementSet::from_indices(g.size(), a_odd.iter().copied());
    for &x in t {
        kept.remove(x);
    }
    for &x in s {
        kept.insert(x);
    }
    if !is_sum_free(g, &kept).sum_free || in_s(g.zero()) {
        return Err(Error::NotAWitness);
    }

    let nbrs = neighbor_lists(g, &a_odd, s);
    let local = |x: usize| a_odd.binary_search(&x).expect("odd element of A");
    let mut in_t = vec![false; a_odd.len()];
    for &x in t {
        in_t[local(x)] = true;
    }
    // Drop x from T when every neighbor of x in A n O is still in T.
    let mut order: Vec<usize> = t.to_vec();
    order.sort_unstable();
    for &x in &order {
        let i = local(x);
        let isolated = nbrs[i].iter().all(|&z| match a_odd.binary_search(&z) {
            Ok(j) => in_t[j],
            Err(_) => true,
        });
        if isolated {
            in_t[i] = false;
        }
    }
    let t_min: Vec<usize> = (0..a_odd.len()).filter(|&i| in_t[i]).map(|i| a_odd[i]).collect();

    let mut matched = vec![false; a_odd.len()];
    let mut u = Vec::new();
    for &x in &t_min {
        let partner = nbrs[local(x)].iter().find_map(|&z| match a_odd.binary_search(&z) {
            Ok(j) if !in_t[j] && !matched[j] => Some(j),
            _ => None,
        });
        if let Some(j) = partner {
            matched[j] = true;
            u.push(a_odd[j]);
        }
    }
    u.sort_unstable();
    let mut s_sorted = s.to_vec();
    s_sorted.sort_unstable();
    let triple = GoodTriple {
        k: s.len(),
        s: s_sorted,
        t: t_min,
        u,
    };
    debug_assert!(check_good_triple(sub, a, &triple));
    Ok(triple)
}

/// Replays conditions (i)-(iv) of a good triple.
pub fn check_good_triple(sub: &Index2Subgroup, a: &ElementSet, triple: &GoodTriple) -> bool {
    let g = sub.group();
    let a_odd: Vec<usize> = a.iter().filter(|&x| sub.is_odd(x)).collect();
    let cond_i = triple.s.len() == triple.k && triple.s.iter().all(|&x| a.contains(x) && sub.is_even(x));
    let in_a_odd = |x: &usize| a.contains(*x) && sub.is_odd(*x);
    let cond_ii = triple.t.iter().all(in_a_odd)
        && triple.u.iter().all(in_a_odd)
        && triple.t.iter().all(|x| !triple.u.contains(x))
        && triple.u.len() <= triple.t.len()
        && triple.t.len() <= triple.k;
    let rest: Vec<usize> = a_odd.iter().copied().filter(|x| !triple.t.contains(x)).collect();
    let rest_set = ElementSet::from_indices(g.size(), rest.iter().copied());
    let mut buf = Vec::new();
    let cond_iii = rest.iter().all(|&y| {
        neighbors_into(g, y, &triple.s, &mut buf);
        buf.iter().all(|&z| !rest_set.contains(z))
    });
    let cond_iv = triple.t.iter().all(|&y| {
        neighbors_into(g, y, &triple.s, &mut buf);
        buf.iter().any(|z| triple.u.contains(z))
    });
    cond_i && cond_ii && cond_iii && cond_iv
}

/// `A n O` for the subgroup's odd coset.
pub fn odd_part(sub: &Index2Subgroup, a: &ElementSet) -> ElementSet {
    a.intersection(&odd_coset(sub))
}
