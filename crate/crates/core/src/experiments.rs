//! Threshold profiles and the Monte Carlo sweeps: safe-element proxies for the
//! 0-statement, local-improvement events for the 1-statement, concentration of
//! the safe count, and the nice maximal coset check.
//!
//! Trial `t` at every grid point uses stream `(seed, t)`, so samples at
//! different `p` are coupled and every estimate is a pure function of the
//! configuration. Counts are integers, so parallel aggregation cannot change
//! the output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::caps::Caps;
use crate::cayley::EdgeFormula;
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::index2::{enumerate_index2_subgroups, is_nice, Index2Subgroup};
use crate::sampling::{half_width, sample_elements, SampleLaw};
use crate::set::ElementSet;
use crate::solver::max_sum_free;
use crate::sumfree::{bk_event, safe_count, unsafe_evens, Safety};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `alpha <= 5/6`.
    Third,
    /// `alpha > 5/6` and `beta < delta`.
    AlphaMinusHalf,
    /// `beta >= delta`.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdProfile {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub lambda: f64,
    pub p_star: f64,
    pub branch: Branch,
}

/// `alpha = ln r(G) / ln n`, `beta = r(G) / n`, and
/// `lambda = 1/3` if `alpha <= 5/6`, `alpha - 1/2` if `alpha > 5/6` and
/// `beta < delta`, `2 / (4 - beta)` if `beta >= delta`;
/// `p* = sqrt(lambda ln n / n)`.
pub fn compute_profile(g: &AbelianGroup, delta: f64) -> Result<ThresholdProfile> {
    if g.n() < 2 {
        return Err(Error::RangeError(format!("n = {} is below 2", g.n())));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::RangeError(format!("delta = {delta} is not in (0, 1)")));
    }
    let n = g.n() as f64;
    let r = g.r() as f64;
    let alpha = r.ln() / n.ln();
    let beta = r / n;
    let (lambda, branch) = if beta >= delta {
        (2.0 / (4.0 - beta), Branch::Dense)
    } else if alpha > 5.0 / 6.0 {
        (alpha - 0.5, Branch::AlphaMinusHalf)
    } else {
        (1.0 / 3.0, Branch::Third)
    };
    // When beta >= delta and alpha <= 5/6 hold at once (tiny n), the
    // one-third case takes precedence over the dense one.
    let (lambda, branch) = if branch == Branch::Dense && alpha <= 5.0 / 6.0 {
        (1.0 / 3.0, Branch::Third)
    } else {
        (lambda, branch)
    };
    Ok(ThresholdProfile {
        alpha,
        beta,
        delta,
        lambda,
        p_star: (lambda * n.ln() / n).sqrt(),
        branch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Zero,
    One,
    Concentration,
    Nicemax,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Zero => "zero",
            Experiment::One => "one",
            Experiment::Concentration => "concentration",
            Experiment::Nicemax => "nicemax",
        }
    }
}

/// One CSV row: `p,event,estimate,half_width,trials,seed`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub event: String,
    pub estimate: f64,
    pub half_width: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub experiment: Experiment,
    pub p_grid: Vec<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn series(&self, event: &str) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.event == event).collect()
    }

    pub fn estimate(&self, event: &str, p: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.event == event && r.p == p)
    }

    /// First `p` where `event` reaches 1/2, by linear interpolation.
    pub fn crossing_p(&self, event: &str) -> Option<f64> {
        let s = self.series(event);
        if s.first()?.estimate >= 0.5 {
            return Some(s[0].p);
        }
        s.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            (a.estimate < 0.5 && b.estimate >= 0.5)
                .then(|| a.p + (0.5 - a.estimate) / (b.estimate - a.estimate) * (b.p - a.p))
        })
    }

    /// Names of the events, in row order of first appearance.
    pub fn events(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.event) {
                names.push(r.event.clone());
            }
        }
        names
    }
}

/// Sums over trials of per-event counts and squared counts; integer so the
/// reduction order is irrelevant.
#[derive(Debug, Clone, Default, PartialEq)]
struct Tally {
    sums: Vec<u64>,
    squares: Vec<u128>,
}

impl Tally {
    fn new(k: usize) -> Self {
        Tally {
            sums: vec![0; k],
            squares: vec![0; k],
        }
    }

    fn add(mut self, values: &[u64]) -> Self {
        for (i, &v) in values.iter().enumerate() {
            self.sums[i] += v;
            self.squares[i] += v as u128 * v as u128;
        }
        self
    }

    fn merge(mut self, other: Tally) -> Self {
        for i in 0..self.sums.len() {
            self.sums[i] += other.sums[i];
            self.squares[i] += other.squares[i];
        }
        self
    }

    fn mean(&self, i: usize, trials: u64) -> f64 {
        self.sums[i] as f64 / trials as f64
    }

    /// Sample variance of the per-trial values.
    fn variance(&self, i: usize, trials: u64) -> f64 {
        if trials < 2 {
            return 0.0;
        }
        let t = trials as f64;
        let mean = self.mean(i, trials);
        ((self.squares[i] as f64 - t * mean * mean) / (t - 1.0)).max(0.0)
    }
}

/// Runs `per_trial` on every trial at law `p`-random and tallies the values.
fn tally_trials(
    g: &AbelianGroup,
    law: &SampleLaw,
    k: usize,
    trials: u64,
    seed: u64,
    per_trial: impl Fn(&ElementSet) -> Result<Vec<u64>> + Sync,
) -> Result<Tally> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    law.validate(g)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let a = sample_elements(g, law, seed, t)?;
            per_trial(&a)
        })
        .try_fold(|| Tally::new(k), |acc, v| Ok::<_, Error>(acc.add(&v?)))
        .try_reduce(|| Tally::new(k), |a, b| Ok(a.merge(b)))
}

fn indicator_row(p: f64, event: &str, tally: &Tally, i: usize, trials: u64, seed: u64) -> SweepRow {
    let estimate = tally.mean(i, trials);
    SweepRow {
        p,
        event: event.into(),
        estimate,
        half_width: half_width(estimate, trials),
        trials,
        seed,
    }
}

fn mean_row(p: f64, event: &str, tally: &Tally, i: usize, trials: u64, seed: u64) -> SweepRow {
    SweepRow {
        p,
        event: event.into(),
        estimate: tally.mean(i, trials),
        half_width: 1.96 * (tally.variance(i, trials) / trials as f64).sqrt(),
        trials,
        seed,
    }
}

/// Is some element of `A n E` safe for `A`?
fn exists_safe_in_a(sub: &Index2Subgroup, a_odd: &[usize], a_even: &[usize], safety: Safety) -> bool {
    let g = sub.group();
    let blocked = unsafe_evens(g, a_odd, safety);
    a_even.iter().any(|&x| x != g.zero() && !blocked.contains(x))
}

fn split(sub: &Index2Subgroup, a: &ElementSet) -> (Vec<usize>, Vec<usize>) {
    a.iter().partition(|&x| sub.is_odd(x))
}

/// Per `p`: mean `|S^E(A)|`, `P(some x in A n E is safe)` and `P(not B_1)`,
/// i.e. no single swap of an even element for at most one odd one keeps
/// `A n O` as large and sum-free.
#[allow(clippy::too_many_arguments)]
pub fn zero_statement_sweep(
    g: &AbelianGroup,
    sub: &Index2Subgroup,
    p_grid: &[f64],
    trials: u64,
    seed: u64,
    delta: f64,
    safety: Safety,
    caps: &Caps,
) -> Result<SweepResult> {
    if !is_nice(g, sub, delta) {
        return Err(Error::NotNice);
    }
    let mut rows = Vec::new();
    for &p in p_grid {
        let law = SampleLaw::PRandom { p };
        let tally = tally_trials(g, &law, 3, trials, seed, |a| {
            let (a_odd, a_even) = split(sub, a);
            let count = safe_count(sub, &a_odd, safety) as u64;
            let exists = exists_safe_in_a(sub, &a_odd, &a_even, safety);
            // A safe element of A n E already witnesses B_1.
            let b1 = exists || bk_event(sub, a, 1, caps)?.is_some();
            Ok(vec![count, exists as u64, (!b1) as u64])
        })?;
        rows.push(mean_row(p, "mean_safe", &tally, 0, trials, seed));
        rows.push(indicator_row(p, "exists_safe_in_A", &tally, 1, trials, seed));
        rows.push(indicator_row(p, "not_b1", &tally, 2, trials, seed));
    }
    Ok(SweepResult {
        experiment: Experiment::Zero,
        p_grid: p_grid.to_vec(),
        rows,
    })
}

/// Index of the first subgroup whose odd coset meets `A` most.
fn maximizing_coset(subs: &[Index2Subgroup], a: &ElementSet) -> usize {
    let mut best = (0usize, 0usize);
    for (i, sub) in subs.iter().enumerate() {
        let c = a.iter().filter(|&x| sub.is_odd(x)).count();
        if c > best.1 || i == 0 {
            best = (i, c);
        }
    }
    best.0
}

/// Largest order on which the exact `A n O in SF(A)` event is evaluated.
pub const EXACT_ONE_LIMIT: u64 = 20;

/// Per `p`, for the odd coset maximizing `|A n O|` (first in subgroup order):
/// `P(some x in A n E is safe)` and `P(B_k)` for `k = 1..=k_max`. On groups of
/// order at most 20 also the exact event that some `A n O` is a maximum
/// sum-free subset of `A`.
pub fn one_statement_sweep(
    g: &AbelianGroup,
    p_grid: &[f64],
    k_max: usize,
    trials: u64,
    seed: u64,
    safety: Safety,
    caps: &Caps,
) -> Result<SweepResult> {
    let subs = enumerate_index2_subgroups(g, caps)?;
    let exact = g.order() <= EXACT_ONE_LIMIT;
    let width = 1 + k_max + exact as usize;
    let mut rows = Vec::new();
    for &p in p_grid {
        let law = SampleLaw::PRandom { p };
        let tally = tally_trials(g, &law, width, trials, seed, |a| {
            let sub = &subs[maximizing_coset(&subs, a)];
            let (a_odd, a_even) = split(sub, a);
            let mut values = vec![exists_safe_in_a(sub, &a_odd, &a_even, safety) as u64];
            for k in 1..=k_max {
                values.push(bk_event(sub, a, k, caps)?.is_some() as u64);
            }
            if exact {
                let best = max_sum_free(g, a, false, caps)?.size;
                values.push((a_odd.len() == best) as u64);
            }
            Ok(values)
        })?;
        rows.push(indicator_row(p, "exists_safe_in_A", &tally, 0, trials, seed));
        for k in 1..=k_max {
            rows.push(indicator_row(p, &format!("b{k}"), &tally, k, trials, seed));
        }
        if exact {
            rows.push(indicator_row(p, "coset_in_sf", &tally, 1 + k_max, trials, seed));
        }
    }
    Ok(SweepResult {
        experiment: Experiment::One,
        p_grid: p_grid.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRecord {
    pub p: f64,
    pub trials: u64,
    pub mean: f64,
    pub std_error: f64,
    /// Fraction of trials with `|S^E(A)| <= mean / 2`.
    pub below_half: f64,
    pub below_half_width: f64,
    /// `sum_{x in E \ {0}} (1 - p^2)^{e(G_x)}`, times `(1 - p)^{d(x)}` under
    /// strict safety where `d(x) = |{a in O : a + a = x}|`.
    pub fkg_bound: f64,
    pub mean_ok: bool,
}

/// FKG lower bound on `E|S^E(A)|` for `p`-random `A`.
pub fn fkg_safe_bound(sub: &Index2Subgroup, p: f64, safety: Safety) -> f64 {
    let g = sub.group();
    let formula = EdgeFormula::new(sub);
    let mut doubles = vec![0u32; g.size()];
    if safety == Safety::Strict {
        for a in sub.odd_elements() {
            doubles[g.double_idx(a)] += 1;
        }
    }
    let q = 1.0 - p * p;
    sub.even_elements()
        .into_iter()
        .filter(|&x| x != g.zero())
        .map(|x| {
            let e = formula.doubled(g, x) / 2;
            q.powi(e as i32) * (1.0 - p).powi(doubles[x] as i32)
        })
        .sum()
}

/// Empirical law of `|S^E(A)|` at `p`: mean, standard error, and the
/// frequency of falling to half the mean, compared with the FKG bound.
pub fn concentration_experiment(
    sub: &Index2Subgroup,
    p: f64,
    trials: u64,
    seed: u64,
    safety: Safety,
) -> Result<ConcentrationRecord> {
    let g = sub.group();
    let law = SampleLaw::PRandom { p };
    law.validate(g)?;
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let counts: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let a = sample_elements(g, &law, seed, t)?;
            let (a_odd, _) = split(sub, &a);
            Ok(safe_count(sub, &a_odd, safety) as u64)
        })
        .collect::<Result<_>>()?;
    let tally = counts.iter().fold(Tally::new(1), |acc, &c| acc.add(&[c]));
    let mean = tally.mean(0, trials);
    let std_error = (tally.variance(0, trials) / trials as f64).sqrt();
    let below = counts.iter().filter(|&&c| c as f64 <= mean / 2.0).count() as f64 / trials as f64;
    let fkg_bound = fkg_safe_bound(sub, p, safety);
    Ok(ConcentrationRecord {
        p,
        trials,
        mean,
        std_error,
        below_half: below,
        below_half_width: half_width(below, trials),
        fkg_bound,
        mean_ok: mean >= fkg_bound - 3.0 * std_error,
    })
}

pub fn concentration_sweep(
    sub: &Index2Subgroup,
    p_grid: &[f64],
    trials: u64,
    seed: u64,
    safety: Safety,
) -> Result<SweepResult> {
    let mut rows = Vec::new();
    for &p in p_grid {
        let r = concentration_experiment(sub, p, trials, seed, safety)?;
        let row = |event: &str, estimate: f64, half_width: f64| SweepRow {
            p,
            event: event.into(),
            estimate,
            half_width,
            trials,
            seed,
        };
        rows.push(row("mean_safe", r.mean, 1.96 * r.std_error));
        rows.push(row("below_half_mean", r.below_half, r.below_half_width));
        rows.push(row("fkg_lower_bound", r.fkg_bound, 0.0));
    }
    Ok(SweepResult {
        experiment: Experiment::Concentration,
        p_grid: p_grid.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NiceMaxRecord {
    pub p: f64,
    pub omega: f64,
    pub delta: f64,
    pub trials: u64,
    /// `r(G) <= delta n`: every subgroup is nice.
    pub trivial_case: bool,
    pub not_nice: usize,
    /// Some odd coset maximizing `|A n O|` has a nice subgroup.
    pub some_max_nice: f64,
    /// Every non-nice subgroup has `|A n O| <= pn + omega sqrt(pn)`.
    pub event_a: f64,
    /// Some nice subgroup has `|A n O| >= pn + omega sqrt(pn)`.
    pub event_b: f64,
    pub joint: f64,
}

pub fn nice_maximal_coset_check(
    g: &AbelianGroup,
    p: f64,
    omega: f64,
    delta: f64,
    trials: u64,
    seed: u64,
    caps: &Caps,
) -> Result<NiceMaxRecord> {
    let subs = enumerate_index2_subgroups(g, caps)?;
    let nice: Vec<bool> = subs.iter().map(|s| is_nice(g, s, delta)).collect();
    let pn = p * g.n() as f64;
    let level = pn + omega * pn.sqrt();
    let law = SampleLaw::PRandom { p };
    let tally = tally_trials(g, &law, 4, trials, seed, |a| {
        let counts: Vec<usize> = subs.iter().map(|s| a.iter().filter(|&x| s.is_odd(x)).count()).collect();
        let best = counts.iter().copied().max().unwrap_or(0);
        let some_max_nice = counts.iter().zip(&nice).any(|(&c, &ok)| c == best && ok);
        let ev_a = counts.iter().zip(&nice).all(|(&c, &ok)| ok || c as f64 <= level);
        let ev_b = counts.iter().zip(&nice).any(|(&c, &ok)| ok && c as f64 >= level);
        Ok(vec![
            some_max_nice as u64,
            ev_a as u64,
            ev_b as u64,
            (ev_a && ev_b) as u64,
        ])
    })?;
    Ok(NiceMaxRecord {
        p,
        omega,
        delta,
        trials,
        trivial_case: g.r() as f64 <= delta * g.n() as f64,
        not_nice: nice.iter().filter(|&&ok| !ok).count(),
        some_max_nice: tally.mean(0, trials),
        event_a: tally.mean(1, trials),
        event_b: tally.mean(2, trials),
        joint: tally.mean(3, trials),
    })
}

pub fn nicemax_sweep(
    g: &AbelianGroup,
    p_grid: &[f64],
    omega: f64,
    delta: f64,
    trials: u64,
    seed: u64,
    caps: &Caps,
) -> Result<SweepResult> {
    let mut rows = Vec::new();
    for &p in p_grid {
        let r = nice_maximal_coset_check(g, p, omega, delta, trials, seed, caps)?;
        for (event, est) in [
            ("some_max_nice", r.some_max_nice),
            ("event_a", r.event_a),
            ("event_b", r.event_b),
            ("joint", r.joint),
        ] {
            rows.push(SweepRow {
                p,
                event: event.into(),
                estimate: est,
                half_width: half_width(est, trials),
                trials,
                seed,
            });
        }
    }
    Ok(SweepResult {
        experiment: Experiment::Nicemax,
        p_grid: p_grid.to_vec(),
        rows,
    })
}

/// CSV with header `p,event,estimate,half_width,trials,seed`, LF endings.
/// Floats use Rust's shortest round-trip formatting.
pub fn write_csv(result: &SweepResult, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in &result.rows {
        w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    if result.rows.is_empty() {
        w.write_record(["p", "event", "estimate", "half_width", "trials", "seed"])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(result: &SweepResult) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(result, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
