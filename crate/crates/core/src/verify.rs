//! Self-checks over small groups and the hypergeometric grid, reported as
//! one entry per battery. Failures are data, not errors.

use std::time::Instant;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::cayley::{
    edge_count, edge_set, for_each_generator_set, hw_induced_edges, intersection_of_edge_sets, neighbors_into,
    nonzero_evens, EdgeFormula,
};
use crate::cover::{all_preimage_counts, cover_analysis};
use crate::group::{all_groups_up_to, AbelianGroup};
use crate::hypergeom::{
    binom_ratio_asymptotic, binom_ratio_with, gaussian_lattice_limit, gaussian_lattice_sum, HypergeomContext,
    LogFactorials,
};
use crate::index2::{enumerate_index2_subgroups, Index2Subgroup};
use crate::sampling::{sample_elements, SampleLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

/// Deliberate faults for checking that the batteries can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Adds one to the closed-form `e(G_x)`.
    EdgeFormulaOffByOne,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub entries: Vec<VerifyEntry>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&VerifyEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

struct Sizes {
    edge_formula: u64,
    census: u64,
    edge_bounds_n: u64,
    edge_bounds_k: usize,
    pairs_n: u64,
    sums_n: u64,
    sums_k: usize,
    covers: u64,
    hypergeom_mc_trials: u64,
}

impl Sizes {
    fn of(level: Level) -> Sizes {
        match level {
            Level::Fast => Sizes {
                edge_formula: 128,
                census: 256,
                edge_bounds_n: 16,
                edge_bounds_k: 3,
                pairs_n: 32,
                sums_n: 16,
                sums_k: 3,
                covers: 16,
                hypergeom_mc_trials: 20_000,
            },
            Level::Full => Sizes {
                edge_formula: 512,
                census: 1024,
                edge_bounds_n: 64,
                edge_bounds_k: 3,
                pairs_n: 64,
                sums_n: 64,
                sums_k: 3,
                covers: 24,
                hypergeom_mc_trials: 100_000,
            },
        }
    }
}

type Outcome = std::result::Result<String, String>;

fn run(entries: &mut Vec<VerifyEntry>, name: &str, seed: u64, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = f();
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    entries.push(VerifyEntry {
        name: name.into(),
        passed,
        detail,
        seconds,
        seed,
    });
}

fn groups_with_n_up_to(n: u64) -> Vec<AbelianGroup> {
    all_groups_up_to(2 * n)
}

fn for_each_sub(max_order: u64, mut f: impl FnMut(&Index2Subgroup) -> Outcome) -> Outcome {
    let caps = Caps::default();
    let mut subs = 0usize;
    for g in all_groups_up_to(max_order) {
        for sub in enumerate_index2_subgroups(&g, &caps).map_err(|e| e.to_string())? {
            f(&sub)?;
            subs += 1;
        }
    }
    Ok(format!("{subs} subgroups"))
}

fn edge_formula_battery(max_order: u64, mutation: Mutation) -> Outcome {
    let mut checked = 0u64;
    let detail = for_each_sub(max_order, |sub| {
        let g = sub.group();
        let odd = sub.odd_elements();
        let formula = EdgeFormula::new(sub);
        let mut buf = Vec::new();
        for x in nonzero_evens(sub) {
            let mut closed = formula.doubled(g, x);
            if mutation == Mutation::EdgeFormulaOffByOne {
                closed += 2;
            }
            let brute = edge_count(g, &odd, &[x]) as i64;
            if closed != 2 * brute {
                return Err(format!(
                    "{} I={} x={}: formula {}/2, brute {brute}",
                    g.canonical_name(),
                    sub.label(),
                    g.format_element(x),
                    closed
                ));
            }
            for &y in &odd {
                neighbors_into(g, y, &[x], &mut buf);
                if buf.len() > 3 {
                    return Err(format!(
                        "{} I={} x={}: degree {}",
                        g.canonical_name(),
                        sub.label(),
                        g.format_element(x),
                        buf.len()
                    ));
                }
            }
            checked += 1;
        }
        Ok(String::new())
    })?;
    Ok(format!("{detail}, {checked} generators"))
}

fn census_battery(max_order: u64) -> Outcome {
    let caps = Caps::default();
    let mut total = 0u64;
    for g in all_groups_up_to(max_order) {
        let subs = enumerate_index2_subgroups(&g, &caps).map_err(|e| e.to_string())?;
        if subs.len() as u64 != g.r() - 1 {
            return Err(format!(
                "{}: {} subgroups, r(G) - 1 = {}",
                g.canonical_name(),
                subs.len(),
                g.r() - 1
            ));
        }
        for sub in &subs {
            let members = sub.even_elements();
            if members.len() as u64 != g.n() {
                return Err(format!(
                    "{} I={}: |H| = {}",
                    g.canonical_name(),
                    sub.label(),
                    members.len()
                ));
            }
            for &a in &members {
                for &b in &members {
                    if !sub.is_even(g.sub_idx(a, b)) {
                        return Err(format!("{} I={}: not closed", g.canonical_name(), sub.label()));
                    }
                }
            }
        }
        total += subs.len() as u64;
    }
    Ok(format!("{total} subgroups"))
}

/// Upper bound, `e(G_S) >= sum e(G_x) / 2` and the single-generator floor.
/// `E(G_x)` for every `x in E \ {0}` as bitsets over pairs of odd-coset
/// positions, so unions and intersections over `S` are word operations.
struct EdgeBits {
    bits: Vec<FixedBitSet>,
    singles: Vec<u64>,
}

impl EdgeBits {
    fn new(g: &AbelianGroup, odd: &[usize], evens: &[usize]) -> Self {
        let mut local = vec![usize::MAX; g.size()];
        for (i, &y) in odd.iter().enumerate() {
            local[y] = i;
        }
        let width = odd.len() * odd.len();
        let mut bits = vec![FixedBitSet::new(); g.size()];
        let mut singles = vec![0; g.size()];
        for &x in evens {
            let mut b = FixedBitSet::with_capacity(width);
            for (y, z) in edge_set(g, odd, x) {
                b.insert(local[y] * odd.len() + local[z]);
            }
            singles[x] = b.count_ones(..) as u64;
            bits[x] = b;
        }
        EdgeBits { bits, singles }
    }

    fn union_count(&self, s: &[usize]) -> u64 {
        let mut acc = self.bits[s[0]].clone();
        for &x in &s[1..] {
            acc.union_with(&self.bits[x]);
        }
        acc.count_ones(..) as u64
    }

    fn common(&self, x: usize, y: usize) -> u64 {
        self.bits[x].intersection_count(&self.bits[y]) as u64
    }
}

/// Upper bound, half-sum lower bound, single-generator floor and the proof's
/// lower bound for every generator set with `m(S) = 0` and `|S| <= max_k`.
fn edge_bounds_battery(max_n: u64, max_k: usize) -> Outcome {
    let caps = Caps {
        enumeration: u64::MAX,
        ..Caps::default()
    };
    let mut sets = 0u64;
    let mut failure = None;
    for g in groups_with_n_up_to(max_n) {
        let (n, r) = (g.n() as i64, g.r() as i64);
        for sub in enumerate_index2_subgroups(&g, &caps).map_err(|e| e.to_string())? {
            let odd = sub.odd_elements();
            let formula = EdgeFormula::new(&sub);
            let evens = nonzero_evens(&sub);
            let table = EdgeBits::new(&g, &odd, &evens);
            for &x in &evens {
                if table.singles[x] != edge_count(&g, &odd, &[x]) {
                    return Err(format!(
                        "{} I={}: bitset count differs at x={x}",
                        g.canonical_name(),
                        sub.label()
                    ));
                }
            }
            for k in 1..=max_k {
                for_each_generator_set(&sub, k, &caps, |s| {
                    sets += 1;
                    let e = table.union_count(s) as i64;
                    let r_s = s.iter().filter(|&&x| g.is_self_inverse(x)).count() as i64;
                    let upper = (3 * k as i64 - r_s) * n;
                    let sum_single: u64 = s.iter().map(|&x| table.singles[x]).sum();
                    let floor_ok = s.iter().all(|&x| 2 * table.singles[x] as i64 >= (2 * (n - r)).max(n));
                    let hw = hw_induced_edges(&g, |t| formula.in_w(t), s) as i64;
                    let proof_lower = upper - 2 * k as i64 * r - 4 * sub.r_even() as i64 * hw;
                    let ok = 2 * e <= upper && 2 * e >= sum_single as i64 && floor_ok && 2 * e >= proof_lower;
                    if failure.is_none() && !ok {
                        failure = Some(format!(
                            "{} I={} S={s:?}: 2e={} upper={upper} singles={sum_single} proof_lower={proof_lower}",
                            g.canonical_name(),
                            sub.label(),
                            2 * e
                        ));
                    }
                })
                .map_err(|e| e.to_string())?;
            }
        }
    }
    failure.map_or(Ok(format!("{sets} generator sets")), Err)
}

/// Intersections of `E(G_x)` and `E(G_y)`: nonempty only if `x + y in W`,
/// and at most `2 r(E)`.
fn pairs_battery(max_n: u64) -> Outcome {
    let mut pairs = 0u64;
    let detail = for_each_sub(2 * max_n, |sub| {
        let g = sub.group();
        let odd = sub.odd_elements();
        let formula = EdgeFormula::new(sub);
        let evens = nonzero_evens(sub);
        let sets: Vec<Vec<(usize, usize)>> = evens.iter().map(|&x| edge_set(g, &odd, x)).collect();
        for i in 0..evens.len() {
            for j in i + 1..evens.len() {
                let (x, y) = (evens[i], evens[j]);
                if x == g.neg_idx(y) {
                    continue;
                }
                let common = intersection_of_edge_sets(&sets[i], &sets[j]);
                if common > 0 && !formula.in_w(g.add_idx(x, y)) {
                    return Err(format!(
                        "{} I={}: x+y not in W for x={x} y={y}",
                        g.canonical_name(),
                        sub.label()
                    ));
                }
                if common as u64 > 2 * sub.r_even() {
                    return Err(format!(
                        "{} I={}: {common} common edges for x={x} y={y}",
                        g.canonical_name(),
                        sub.label()
                    ));
                }
                pairs += 1;
            }
        }
        Ok(String::new())
    })?;
    Ok(format!("{detail}, {pairs} pairs"))
}

/// `sum_{x != y in S} |E(G_x) n E(G_y)| <= 2 r(E) e(H_W[S])`, the sum over
/// unordered pairs.
fn intersection_sum_battery(max_n: u64, max_k: usize) -> Outcome {
    let caps = Caps {
        enumeration: u64::MAX,
        ..Caps::default()
    };
    let mut sets = 0u64;
    let mut failure = None;
    for g in groups_with_n_up_to(max_n) {
        for sub in enumerate_index2_subgroups(&g, &caps).map_err(|e| e.to_string())? {
            let odd = sub.odd_elements();
            let formula = EdgeFormula::new(&sub);
            let table = EdgeBits::new(&g, &odd, &nonzero_evens(&sub));
            for k in 2..=max_k {
                for_each_generator_set(&sub, k, &caps, |s| {
                    let mut lhs = 0u64;
                    let mut hw = 0u64;
                    for (i, &x) in s.iter().enumerate() {
                        for &y in &s[i + 1..] {
                            lhs += table.common(x, y);
                            hw += formula.in_w(g.add_idx(x, y)) as u64;
                        }
                    }
                    sets += 1;
                    if failure.is_none() && lhs > 2 * sub.r_even() * hw {
                        failure = Some(format!(
                            "{} I={} S={s:?}: {lhs} > 2*{}*{hw}",
                            g.canonical_name(),
                            sub.label(),
                            sub.r_even()
                        ));
                    }
                })
                .map_err(|e| e.to_string())?;
            }
        }
    }
    failure.map_or(Ok(format!("{sets} generator sets")), Err)
}

/// No cover-maximal set of size at most 3 contains `{a, -a}` with `a != -a`.
fn cover_pairs_battery(max_order: u64) -> Outcome {
    let caps = Caps::default();
    let mut checked = 0u64;
    let detail = for_each_sub(max_order, |sub| {
        let g = sub.group();
        let evens = nonzero_evens(sub);
        for u in sub.odd_elements() {
            for &a in &evens {
                let b = g.neg_idx(a);
                if b <= a {
                    continue;
                }
                let mut zs = vec![vec![a, b]];
                zs.extend(evens.iter().filter(|&&c| c != a && c != b).map(|&c| vec![a, b, c]));
                for z in zs {
                    let rec = cover_analysis(sub, u, &z, &caps).map_err(|e| e.to_string())?;
                    if rec.is_cover_maximal {
                        return Err(format!(
                            "{} I={} u={u}: {z:?} is cover-maximal",
                            g.canonical_name(),
                            sub.label()
                        ));
                    }
                    checked += 1;
                }
            }
        }
        Ok(String::new())
    })?;
    Ok(format!("{detail}, {checked} sets"))
}

/// Every `Z` has at most `12^|Z|` preimages under `g`.
fn preimage_battery(max_order: u64) -> Outcome {
    let caps = Caps {
        cover: 20,
        ..Caps::default()
    };
    let mut worst = 0.0f64;
    let detail = for_each_sub(max_order, |sub| {
        let g = sub.group();
        for u in sub.odd_elements() {
            for (z, count) in all_preimage_counts(sub, u, &caps).map_err(|e| e.to_string())? {
                let bound = 12f64.powi(z.len() as i32);
                worst = worst.max(count as f64 / bound);
                if count as f64 > bound {
                    return Err(format!(
                        "{} I={} u={u}: Z={z:?} has {count} preimages",
                        g.canonical_name(),
                        sub.label()
                    ));
                }
            }
        }
        Ok(String::new())
    })?;
    Ok(format!("{detail}, worst count/bound {worst:.4}"))
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn binom_ratio_battery() -> Outcome {
    let (n, a) = (1_000_000u64, 10_000u64);
    let lf = LogFactorials::new(2 * n);
    let mut worst = 0.0f64;
    for b in [0u64, 20, 50] {
        let exact = binom_ratio_with(&lf, n, a, b);
        let asym = binom_ratio_asymptotic(a, b).map_err(|e| e.to_string())?;
        worst = worst.max(relative_error(asym, exact));
    }
    if worst <= 0.01 {
        Ok(format!("max relative error {worst:.5}"))
    } else {
        Err(format!("max relative error {worst:.5} > 0.01"))
    }
}

/// The tail asymptotics are checked where `k^2 / n` is small.
fn tail_battery() -> Outcome {
    let ctx = HypergeomContext::new(1_000_000, 10_000, 150).map_err(|e| e.to_string())?;
    let (exact, asym) = (ctx.tail_exact(), ctx.tail_asymptotic());
    let err = relative_error(asym, exact);
    let detail = format!("n=1e6 m=1e4 k=150: exact {exact:.6e}, asymptotic {asym:.6e}, relative error {err:.4}");
    if err <= 0.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pair_ratio_battery() -> Outcome {
    let ctx = HypergeomContext::new(100_000, 10_000, 150).map_err(|e| e.to_string())?;
    let report = ctx.moments().map_err(|e| e.to_string())?;
    let detail = format!("joint/product {:.5}, remainder {:.2e}", report.ratio, report.remainder);
    if (0.9..=1.1).contains(&report.ratio) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lattice_battery() -> Outcome {
    let m = 10_000.0;
    let err = relative_error(gaussian_lattice_sum(m), gaussian_lattice_limit(m));
    if err <= 0.001 {
        Ok(format!("relative error {err:.3e}"))
    } else {
        Err(format!("relative error {err:.3e} > 0.001"))
    }
}

/// Exact tail against the empirical frequency under the `m`-uniform law.
fn hypergeom_mc_battery(trials: u64, seed: u64) -> Outcome {
    let g = AbelianGroup::from_written(&[100], u64::MAX).map_err(|e| e.to_string())?;
    let sub = Index2Subgroup::from_mask(&g, 1).map_err(|e| e.to_string())?;
    let (n, m) = (50u64, 20u64);
    let law = SampleLaw::MUniform { m };
    let mut counts = vec![0u64; m as usize + 1];
    for t in 0..trials {
        let a = sample_elements(&g, &law, seed, t).map_err(|e| e.to_string())?;
        counts[a.iter().filter(|&x| sub.is_odd(x)).count()] += 1;
    }
    let ctx = HypergeomContext::new(n, m, 0).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for k in 0..=5i64 {
        let c = ctx.with_k(k);
        let exact = c.tail_exact();
        let threshold = c.threshold(k).max(0) as usize;
        let hits: u64 = counts.iter().skip(threshold).sum();
        let est = hits as f64 / trials as f64;
        let hw = 1.96 * (exact * (1.0 - exact) / trials as f64).sqrt();
        if (est - exact).abs() > 3.0 * hw {
            return Err(format!(
                "k={k}: exact {exact:.5}, empirical {est:.5}, half-width {hw:.5}"
            ));
        }
        detail.push(format!("k={k}: {exact:.4}/{est:.4}"));
    }
    Ok(detail.join(", "))
}

pub fn verify_all(level: Level, seed: u64) -> VerifyReport {
    verify_all_with(level, seed, Mutation::None)
}

pub fn verify_all_with(level: Level, seed: u64, mutation: Mutation) -> VerifyReport {
    let sizes = Sizes::of(level);
    let mut entries = Vec::new();
    let e = &mut entries;
    run(e, "edge_formula", seed, || {
        edge_formula_battery(sizes.edge_formula, mutation)
    });
    run(e, "subgroup_census", seed, || census_battery(sizes.census));
    run(e, "edge_bounds", seed, || {
        edge_bounds_battery(sizes.edge_bounds_n, sizes.edge_bounds_k)
    });
    run(e, "intersection_pairs", seed, || pairs_battery(sizes.pairs_n));
    run(e, "intersection_sum", seed, || {
        intersection_sum_battery(sizes.sums_n, sizes.sums_k)
    });
    run(e, "cover_pairs", seed, || cover_pairs_battery(sizes.covers));
    run(e, "preimage_bound", seed, || preimage_battery(sizes.covers));
    run(e, "binom_ratio", seed, binom_ratio_battery);
    run(e, "hypergeom_tail", seed, tail_battery);
    run(e, "pair_ratio", seed, pair_ratio_battery);
    run(e, "gaussian_lattice", seed, lattice_battery);
    run(e, "hypergeom_monte_carlo", seed, || {
        hypergeom_mc_battery(sizes.hypergeom_mc_trials, seed)
    });
    VerifyReport { level, seed, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_batteries_pass() {
        assert!(edge_formula_battery(32, Mutation::None).is_ok());
        assert!(census_battery(64).is_ok());
        assert!(edge_bounds_battery(8, 3).is_ok());
        assert!(pairs_battery(16).is_ok());
        assert!(intersection_sum_battery(8, 3).is_ok());
        assert!(cover_pairs_battery(12).is_ok());
        assert!(preimage_battery(12).is_ok());
    }

    #[test]
    fn mutation_is_caught() {
        let out = edge_formula_battery(16, Mutation::EdgeFormulaOffByOne);
        assert!(out.unwrap_err().contains("formula"));
    }
}
