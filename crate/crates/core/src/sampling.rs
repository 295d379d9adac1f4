//! Random subsets under the p-random, m-uniform and skewed laws, plus
//! Monte Carlo and exact oracles for the Janson and FKG inequalities.
//!
//! Each trial draws from its own ChaCha8 stream: the key comes from the seed,
//! the stream id is the trial number and the word position is the draw
//! counter. For the Bernoulli laws element `i` always consumes draw `i`, so
//! samples at different `p` are coupled monotonically.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::set::{ElementSet, SampleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleLaw {
    /// Each element independently with probability `p`.
    PRandom { p: f64 },
    /// A uniformly random `m`-subset.
    MUniform { m: u64 },
    /// Odd-coset elements of `H_I` (`I` given by `mask`) with probability
    /// `p1`, elements of `H_I` with probability `p2`.
    Skewed { p1: f64, p2: f64, mask: u64 },
}

impl SampleLaw {
    /// `p1 = (1 - delta) p` on the odd coset, `p2 = (1 + delta) p` on `H_I`.
    pub fn skewed(p: f64, delta: f64, mask: u64) -> SampleLaw {
        SampleLaw::Skewed {
            p1: (1.0 - delta) * p,
            p2: (1.0 + delta) * p,
            mask,
        }
    }

    pub fn validate(&self, g: &AbelianGroup) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidLaw(format!("{name} = {p} is not in [0, 1]")))
            }
        };
        match *self {
            SampleLaw::PRandom { p } => prob("p", p),
            SampleLaw::MUniform { m } => {
                if m > g.order() {
                    Err(Error::InvalidLaw(format!("m = {m} exceeds |G| = {}", g.order())))
                } else {
                    Ok(())
                }
            }
            SampleLaw::Skewed { p1, p2, mask } => {
                prob("p1", p1)?;
                prob("p2", p2)?;
                let k = g.rank2();
                if mask == 0 || (k < 64 && mask >> k != 0) {
                    return Err(Error::InvalidLaw(format!("mask {mask:#b} for {k} even factors")));
                }
                Ok(())
            }
        }
    }
}

/// The random stream of one trial.
pub fn trial_stream(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A uniform in `[0, 1)` with 53 random bits.
pub fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn parity(g: &AbelianGroup, mask: u64, x: usize) -> u64 {
    let mut m = mask;
    let mut total = 0;
    while m != 0 {
        total += g.residue(x, m.trailing_zeros() as usize);
        m &= m - 1;
    }
    total & 1
}

/// Elements only; see [`sample`].
pub fn sample_elements(g: &AbelianGroup, law: &SampleLaw, seed: u64, trial: u64) -> Result<ElementSet> {
    law.validate(g)?;
    let size = g.size();
    let mut rng = trial_stream(seed, trial);
    let mut out = ElementSet::empty(size);
    match *law {
        SampleLaw::PRandom { p } => {
            for i in 0..size {
                if unit(&mut rng) < p {
                    out.insert(i);
                }
            }
        }
        SampleLaw::Skewed { p1, p2, mask } => {
            for i in 0..size {
                let p = if parity(g, mask, i) == 1 { p1 } else { p2 };
                if unit(&mut rng) < p {
                    out.insert(i);
                }
            }
        }
        SampleLaw::MUniform { m } => {
            // Partial Fisher-Yates: the first m slots end up a uniform m-subset.
            let mut perm: Vec<usize> = (0..size).collect();
            for i in 0..m as usize {
                let j = i + (rng.next_u64() % (size - i) as u64) as usize;
                perm.swap(i, j);
                out.insert(perm[i]);
            }
        }
    }
    Ok(out)
}

/// Deterministic in `(law, seed, trial)`.
pub fn sample(g: &AbelianGroup, law: &SampleLaw, seed: u64, trial: u64) -> Result<SampleSet> {
    Ok(SampleSet {
        elements: sample_elements(g, law, seed, trial)?,
        law: law.clone(),
        seed,
        trial,
    })
}

/// 95% normal-approximation half-width of a proportion.
pub fn half_width(estimate: f64, trials: u64) -> f64 {
    1.96 * (estimate * (1.0 - estimate) / trials as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Estimate {
        let estimate = successes as f64 / trials as f64;
        Estimate {
            successes,
            trials,
            estimate,
            half_width: half_width(estimate, trials),
        }
    }
}

/// Monte Carlo estimate of `P(event)` over trials `0..trials`. Trials run in
/// parallel; the result depends only on the seed.
pub fn empirical_event_probability(
    g: &AbelianGroup,
    law: &SampleLaw,
    event: impl Fn(&ElementSet) -> bool + Sync,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    law.validate(g)?;
    let successes = (0..trials)
        .into_par_iter()
        .map(|t| sample_elements(g, law, seed, t).map(|a| event(&a) as u64))
        .sum::<Result<u64>>()?;
    Ok(Estimate::from_counts(successes, trials))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JansonBound {
    pub mu: f64,
    /// Sum over unordered overlapping pairs `{i, j}` of `p^|B_i u B_j|`.
    pub delta: f64,
    /// `min(1, exp(-mu + Delta))`.
    pub bound: f64,
    /// `exp(-c mu^2 / Delta)` when requested and applicable.
    pub second_form: Option<f64>,
}

/// Janson's upper bound on `P(no B_i inside X_p)`.
pub fn janson_bound(sets: &[Vec<usize>], p: f64, c: Option<f64>) -> Result<JansonBound> {
    if sets.iter().any(|b| b.is_empty()) {
        return Err(Error::EmptyJansonSet);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::RangeError(format!("p = {p}")));
    }
    let sorted: Vec<Vec<usize>> = sets
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b.dedup();
            b
        })
        .collect();
    let mu: f64 = sorted.iter().map(|b| p.powi(b.len() as i32)).sum();
    let mut delta = 0.0;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            let common = sorted[i].iter().filter(|x| sorted[j].binary_search(x).is_ok()).count();
            if common > 0 {
                delta += p.powi((sorted[i].len() + sorted[j].len() - common) as i32);
            }
        }
    }
    let bound = (delta - mu).exp().min(1.0);
    let second_form = match c {
        None => None,
        Some(c) => {
            if c <= 0.0 || c > 0.25 || 2.0 * c * mu > delta || delta == 0.0 {
                return Err(Error::SecondFormInapplicable);
            }
            Some((-c * mu * mu / delta).exp())
        }
    };
    Ok(JansonBound {
        mu,
        delta,
        bound,
        second_form,
    })
}

/// Exact `P(no B_i inside X_p)` by summing over all subsets of the ground set
/// spanned by the `B_i`. Only for small ground sets.
pub fn exact_avoidance(sets: &[Vec<usize>], p: f64) -> Result<f64> {
    let mut ground: Vec<usize> = sets.iter().flatten().copied().collect();
    ground.sort_unstable();
    ground.dedup();
    if ground.len() > 24 {
        return Err(Error::EnumerationTooLarge {
            size: 1 << ground.len(),
            cap: 1 << 24,
        });
    }
    let masks: Vec<u32> = sets
        .iter()
        .map(|b| {
            b.iter()
                .map(|x| 1u32 << ground.binary_search(x).unwrap())
                .fold(0, |a, b| a | b)
        })
        .collect();
    let mut total = 0.0;
    for chosen in 0u32..1 << ground.len() {
        if masks.iter().all(|&b| b & chosen != b) {
            let k = chosen.count_ones() as i32;
            total += p.powi(k) * (1.0 - p).powi(ground.len() as i32 - k);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkgReport {
    pub joint: f64,
    pub marginals: Vec<f64>,
    pub product: f64,
    /// Three combined standard errors of `joint - product`.
    pub slack: f64,
    pub holds: bool,
}

/// Empirical FKG check for the decreasing events `{B_i not inside A}`:
/// joint frequency against the product of marginal frequencies, with three
/// combined standard errors of slack (delta method for the product).
pub fn fkg_check(g: &AbelianGroup, law: &SampleLaw, sets: &[Vec<usize>], trials: u64, seed: u64) -> Result<FkgReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    law.validate(g)?;
    let k = sets.len();
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let a = sample_elements(g, law, seed, t)?;
            let avoid: Vec<u64> = sets
                .iter()
                .map(|b| (!b.iter().all(|&x| a.contains(x))) as u64)
                .collect();
            let joint = avoid.iter().all(|&v| v == 1) as u64;
            Ok((joint, avoid))
        })
        .try_fold(
            || (0u64, vec![0u64; k]),
            |(j, mut m), r: Result<(u64, Vec<u64>)>| {
                let (dj, dm) = r?;
                for (acc, d) in m.iter_mut().zip(dm) {
                    *acc += d;
                }
                Ok::<_, Error>((j + dj, m))
            },
        )
        .try_reduce(
            || (0u64, vec![0u64; k]),
            |(j1, m1), (j2, m2)| Ok((j1 + j2, m1.iter().zip(&m2).map(|(a, b)| a + b).collect())),
        )?;
    let t = trials as f64;
    let joint = counts.0 as f64 / t;
    let marginals: Vec<f64> = counts.1.iter().map(|&c| c as f64 / t).collect();
    let product: f64 = marginals.iter().product();
    let var_joint = joint * (1.0 - joint) / t;
    // Var(prod q_i) ~ prod^2 * sum (1 - q_i) / (q_i T)
    let var_prod = if product > 0.0 {
        product * product * marginals.iter().map(|&q| (1.0 - q) / (q * t)).sum::<f64>()
    } else {
        0.0
    };
    let slack = 3.0 * (var_joint + var_prod).sqrt();
    Ok(FkgReport {
        holds: joint >= product - slack,
        joint,
        marginals,
        product,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::edge_set;
    use crate::index2::Index2Subgroup;

    fn z(moduli: &[u64]) -> AbelianGroup {
        AbelianGroup::from_written(moduli, 1 << 24).unwrap()
    }

    #[test]
    fn extreme_p() {
        let g = z(&[10]);
        for t in 0..20 {
            assert!(sample_elements(&g, &SampleLaw::PRandom { p: 0.0 }, 7, t)
                .unwrap()
                .is_empty());
            assert_eq!(
                sample_elements(&g, &SampleLaw::PRandom { p: 1.0 }, 7, t).unwrap().len(),
                10
            );
        }
        assert!(matches!(
            sample(&g, &SampleLaw::PRandom { p: 1.5 }, 0, 0),
            Err(Error::InvalidLaw(_))
        ));
        assert!(matches!(
            sample(&g, &SampleLaw::MUniform { m: 11 }, 0, 0),
            Err(Error::InvalidLaw(_))
        ));
    }

    #[test]
    fn deterministic_per_trial() {
        let g = z(&[2, 4, 8]);
        let law = SampleLaw::PRandom { p: 0.3 };
        let a = sample(&g, &law, 42, 17).unwrap();
        let b = sample(&g, &law, 42, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.elements, sample(&g, &law, 42, 18).unwrap().elements);
    }

    #[test]
    fn monotone_coupling_in_p() {
        let g = z(&[64]);
        for t in 0..50 {
            let small = sample_elements(&g, &SampleLaw::PRandom { p: 0.2 }, 3, t).unwrap();
            let large = sample_elements(&g, &SampleLaw::PRandom { p: 0.5 }, 3, t).unwrap();
            assert!(small.is_subset(&large));
        }
    }

    #[test]
    fn m_uniform_frequencies() {
        let g = z(&[10]);
        let law = SampleLaw::MUniform { m: 5 };
        let trials = 10_000u64;
        let mut hits = [0u64; 10];
        for t in 0..trials {
            let a = sample_elements(&g, &law, 11, t).unwrap();
            assert_eq!(a.len(), 5);
            for x in a.iter() {
                hits[x] += 1;
            }
        }
        for h in hits {
            assert!((h as f64 / trials as f64 - 0.5).abs() <= 0.02);
        }
    }

    #[test]
    fn skewed_uses_coset_probabilities() {
        let g = z(&[6]);
        let law = SampleLaw::Skewed {
            p1: 0.0,
            p2: 1.0,
            mask: 1,
        };
        let a = sample_elements(&g, &law, 1, 0).unwrap();
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        assert_eq!(a, sub.even_set());
    }

    #[test]
    fn empty_sample_probability() {
        let g = z(&[4]);
        let est = empirical_event_probability(&g, &SampleLaw::PRandom { p: 0.5 }, |a| a.is_empty(), 20_000, 5).unwrap();
        assert!((est.estimate - 1.0 / 16.0).abs() <= 3.0 * est.half_width.max(1e-3));
        assert_eq!(
            empirical_event_probability(&g, &SampleLaw::PRandom { p: 0.5 }, |_| true, 0, 5),
            Err(Error::ZeroTrials)
        );
    }

    fn g2_edges_z6() -> Vec<Vec<usize>> {
        let g = z(&[6]);
        let sub = Index2Subgroup::from_mask(&g, 1).unwrap();
        let two = g.index_from_written(&[2]).unwrap();
        edge_set(&g, &sub.odd_elements(), two)
            .into_iter()
            .map(|(y, z)| vec![y, z])
            .collect()
    }

    #[test]
    fn independence_probability_matches_exhaustive() {
        let g = z(&[6]);
        let edges = g2_edges_z6();
        let exact = exact_avoidance(&edges, 0.5).unwrap();
        // A triangle: independent sets of K3 have weight (1 + 3) / 8.
        assert!((exact - 0.5).abs() < 1e-12);
        let est = empirical_event_probability(
            &g,
            &SampleLaw::PRandom { p: 0.5 },
            |a| edges.iter().all(|e| !(a.contains(e[0]) && a.contains(e[1]))),
            40_000,
            9,
        )
        .unwrap();
        assert!((est.estimate - exact).abs() <= 3.0 * est.half_width);
    }

    #[test]
    fn janson_examples() {
        let disjoint = vec![vec![0, 1], vec![2, 3]];
        let j = janson_bound(&disjoint, 0.5, None).unwrap();
        assert_eq!(j.delta, 0.0);
        assert!((j.bound - (-0.5f64).exp()).abs() < 1e-15);

        let tri = g2_edges_z6();
        let j = janson_bound(&tri, 0.5, None).unwrap();
        assert!((j.mu - 0.75).abs() < 1e-15);
        // Three overlapping edge pairs, each spanning the 3 vertices.
        assert!((j.delta - 3.0 * 0.125).abs() < 1e-15);
        assert!(j.bound >= exact_avoidance(&tri, 0.5).unwrap());

        let j = janson_bound(&[vec![4, 9]], 0.1, None).unwrap();
        assert!((j.mu - 0.01).abs() < 1e-15);
        assert!((j.bound - (-0.01f64).exp()).abs() < 1e-15);

        assert_eq!(janson_bound(&[vec![]], 0.1, None), Err(Error::EmptyJansonSet));
        assert_eq!(
            janson_bound(&disjoint, 0.5, Some(0.25)),
            Err(Error::SecondFormInapplicable)
        );
        let second = janson_bound(&tri, 0.5, Some(0.25)).unwrap().second_form.unwrap();
        assert!(second >= exact_avoidance(&tri, 0.5).unwrap());
    }

    #[test]
    fn janson_dominates_exact_on_small_families() {
        // Edge families of G_x for every x in small groups, several p.
        for moduli in [&[6u64][..], &[8], &[2, 4], &[12], &[2, 2, 2]] {
            let g = z(moduli);
            for mask in 1..g.r() {
                let sub = Index2Subgroup::from_mask(&g, mask).unwrap();
                let odd = sub.odd_elements();
                for x in crate::cayley::nonzero_evens(&sub) {
                    let fam: Vec<Vec<usize>> = edge_set(&g, &odd, x).into_iter().map(|(a, b)| vec![a, b]).collect();
                    for p in [0.1, 0.3, 0.5, 0.8] {
                        let exact = exact_avoidance(&fam, p).unwrap();
                        let j = janson_bound(&fam, p, None).unwrap();
                        assert!(j.bound >= exact - 1e-12);
                        for c in [0.05, 0.25] {
                            if let Ok(jb) = janson_bound(&fam, p, Some(c)) {
                                assert!(jb.second_form.unwrap() >= exact - 1e-12);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fkg_examples() {
        let g = z(&[6]);
        let law = SampleLaw::PRandom { p: 0.5 };
        let single = fkg_check(&g, &law, &[vec![0, 1]], 5000, 1).unwrap();
        assert!(single.holds && (single.joint - single.product).abs() < 1e-15);
        let disjoint = fkg_check(&g, &law, &[vec![0, 1], vec![2, 3]], 20_000, 2).unwrap();
        assert!(disjoint.holds && (disjoint.joint - disjoint.product).abs() <= disjoint.slack);
        let tri = g2_edges_z6();
        let r = fkg_check(&g, &law, &tri, 20_000, 3).unwrap();
        assert!(r.holds);
        // Exact: joint 1/2 against product (3/4)^3 = 27/64.
        let exact_joint = exact_avoidance(&tri, 0.5).unwrap();
        assert!(exact_joint > 0.75f64.powi(3));
        assert!((r.joint - exact_joint).abs() <= r.slack);
    }
}
