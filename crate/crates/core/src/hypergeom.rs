//! Exact and asymptotic hypergeometric quantities for `m`-uniform subsets of a
//! group of order `2n` split into an odd coset and its subgroup, each of
//! size `n`.
//!
//! All binomials go through a table of `ln k!` built with compensated
//! summation and are exponentiated last. Offsets are measured from `m/2`;
//! for odd `m` the tail at level `k` starts at the count `ceil(m/2) + k`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::AbelianGroup;

/// `ln k!` for `k = 0..=max`.
#[derive(Debug, Clone)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max: u64) -> Self {
        let mut table = Vec::with_capacity(max as usize + 1);
        table.push(0.0);
        let (mut sum, mut carry) = (0.0f64, 0.0f64);
        for k in 1..=max {
            // Kahan summation of ln 1 + ... + ln k.
            let y = (k as f64).ln() - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
            table.push(sum);
        }
        LogFactorials { table }
    }

    pub fn max(&self) -> u64 {
        self.table.len() as u64 - 1
    }

    pub fn ln_factorial(&self, k: u64) -> f64 {
        self.table[k as usize]
    }

    /// `ln C(n, k)`, `-inf` when `k` is outside `[0, n]`.
    pub fn ln_binom(&self, n: i64, k: i64) -> f64 {
        if k < 0 || n < 0 || k > n {
            return f64::NEG_INFINITY;
        }
        self.table[n as usize] - self.table[k as usize] - self.table[(n - k) as usize]
    }
}

/// `C(N, a + b) C(N, a - b) / C(2N, 2a)`.
pub fn binom_ratio_exact(n: u64, a: u64, b: u64) -> Result<f64> {
    if b > a || a > n {
        return Err(Error::RangeError(format!(
            "need 0 <= b <= a <= N, got N={n} a={a} b={b}"
        )));
    }
    let lf = LogFactorials::new(2 * n);
    Ok(binom_ratio_with(&lf, n, a, b))
}

pub fn binom_ratio_with(lf: &LogFactorials, n: u64, a: u64, b: u64) -> f64 {
    let (n, a, b) = (n as i64, a as i64, b as i64);
    (lf.ln_binom(n, a + b) + lf.ln_binom(n, a - b) - lf.ln_binom(2 * n, 2 * a)).exp()
}

/// `exp(-b^2 / a) / sqrt(pi a)`.
pub fn binom_ratio_asymptotic(a: u64, b: u64) -> Result<f64> {
    if a == 0 || b > a {
        return Err(Error::RangeError(format!("need 0 <= b <= a, a > 0, got a={a} b={b}")));
    }
    let (a, b) = (a as f64, b as f64);
    Ok((-b * b / a).exp() / (PI * a).sqrt())
}

/// `sum_{x in Z} exp(-2 x^2 / m)`.
pub fn gaussian_lattice_sum(m: f64) -> f64 {
    let mut total = 1.0;
    let mut x = 1.0f64;
    loop {
        let term = (-2.0 * x * x / m).exp();
        if term < 1e-18 {
            break;
        }
        total += 2.0 * term;
        x += 1.0;
    }
    total
}

/// `sqrt(pi m / 2)`.
pub fn gaussian_lattice_limit(m: f64) -> f64 {
    (PI * m / 2.0).sqrt()
}

#[derive(Debug, Clone)]
pub struct HypergeomContext {
    pub n: u64,
    pub m: u64,
    pub k: i64,
    lf: Arc<LogFactorials>,
}

impl HypergeomContext {
    pub fn new(n: u64, m: u64, k: i64) -> Result<Self> {
        if n == 0 || m > 2 * n {
            return Err(Error::RangeError(format!(
                "need n >= 1 and 0 <= m <= 2n, got n={n} m={m}"
            )));
        }
        Ok(HypergeomContext {
            n,
            m,
            k,
            lf: Arc::new(LogFactorials::new(2 * n)),
        })
    }

    /// Same table, different level.
    pub fn with_k(&self, k: i64) -> Self {
        HypergeomContext { k, ..self.clone() }
    }

    pub fn with_m(&self, m: u64) -> Result<Self> {
        if m > 2 * self.n {
            return Err(Error::RangeError(format!("m={m} exceeds 2n={}", 2 * self.n)));
        }
        Ok(HypergeomContext { m, ..self.clone() })
    }

    pub fn log_factorials(&self) -> &LogFactorials {
        &self.lf
    }

    /// `P(|A n O| = t)`.
    pub fn pmf(&self, t: i64) -> f64 {
        let (n, m) = (self.n as i64, self.m as i64);
        (self.lf.ln_binom(n, t) + self.lf.ln_binom(n, m - t) - self.lf.ln_binom(2 * n, m)).exp()
    }

    /// First count in the tail at level `k`.
    pub fn threshold(&self, k: i64) -> i64 {
        (self.m as i64 + 1) / 2 + k
    }

    fn support(&self) -> (i64, i64) {
        let (n, m) = (self.n as i64, self.m as i64);
        ((m - n).max(0), n.min(m))
    }

    /// `sum_t P(|A n O| = t)` over the whole support.
    pub fn total_mass(&self) -> f64 {
        let (lo, hi) = self.support();
        (lo..=hi).map(|t| self.pmf(t)).sum()
    }

    /// `P(|A n O| >= m/2 + k)`, summed from the smallest terms up.
    pub fn tail_exact(&self) -> f64 {
        let (lo, hi) = self.support();
        let start = self.threshold(self.k).max(lo);
        if start > hi {
            return 0.0;
        }
        (start..=hi).rev().map(|t| self.pmf(t)).sum()
    }

    /// `sqrt(2 / (pi m)) sum_{x >= k} exp(-2 x^2 / m)`, with half-integer
    /// offsets `x` when `m` is odd.
    pub fn tail_asymptotic(&self) -> f64 {
        let m = self.m as f64;
        let shift = if self.m % 2 == 1 { 0.5 } else { 0.0 };
        let mut x = self.k as f64 + shift;
        let mut total = 0.0;
        // Below zero the terms grow, so walk up to the peak first.
        loop {
            let term = (-2.0 * x * x / m).exp();
            if x > 0.0 && term < 1e-300 {
                break;
            }
            total += term;
            x += 1.0;
            if x > m {
                break;
            }
        }
        (2.0 / (PI * m)).sqrt() * total
    }

    /// `(sqrt(m) / k) exp(-2 k^2 / m)`, the order of magnitude of the tail for
    /// `1 << k << m << k^2`; `None` for `k <= 0`.
    pub fn tail_theta_reference(&self) -> Option<f64> {
        if self.k <= 0 {
            return None;
        }
        let (m, k) = (self.m as f64, self.k as f64);
        Some(m.sqrt() / k * (-2.0 * k * k / m).exp())
    }

    /// Tail at every level `k = 0, 1, ...` up to the top of the support,
    /// index `k` holding `P(|A n O| >= m/2 + k)`.
    pub fn tails_from_zero(&self) -> Vec<f64> {
        let (_, hi) = self.support();
        let start = self.threshold(0);
        let mut tails = vec![0.0; (hi - start + 2).max(1) as usize];
        let mut acc = 0.0;
        for t in (start..=hi).rev() {
            acc += self.pmf(t);
            tails[(t - start) as usize] = acc;
        }
        tails
    }

    /// `P(M_k(O) and M_k(O'))` for two distinct odd cosets, whose four
    /// intersections with `A`'s ambient blocks each have size `n/2`.
    pub fn pair_probability_exact(&self) -> Result<PairProbability> {
        if !self.n.is_multiple_of(2) || !self.m.is_multiple_of(4) {
            return Err(Error::DivisibilityError(format!(
                "need n even and m divisible by 4, got n={} m={}",
                self.n, self.m
            )));
        }
        let lf = &self.lf;
        let (n, q, k) = (self.n as i64, self.m as i64 / 4, self.k);
        let h = n / 2;
        let radius = (6.0 * (self.m as f64).sqrt()).ceil() as i64;
        let ln_total = lf.ln_binom(2 * n, 4 * q);
        let mut event = 0.0;
        let mut box_mass = 0.0;
        let mut zs = vec![0.0; (2 * radius + 2) as usize];
        for s in -2 * radius..=2 * radius {
            // s = x + y: |A n O| = m/2 + s.
            let ln_s = lf.ln_binom(n, 2 * q + s) + lf.ln_binom(n, 2 * q - s) - ln_total;
            if ln_s == f64::NEG_INFINITY {
                continue;
            }
            let p_s = ln_s.exp();
            let ln_x_norm = lf.ln_binom(n, 2 * q + s);
            let ln_z_norm = lf.ln_binom(n, 2 * q - s);
            // z given s, |z| <= radius; suffix sums for the condition z >= k - x.
            let mut acc = 0.0;
            for z in (-radius..=radius).rev() {
                let ln = lf.ln_binom(h, q + z) + lf.ln_binom(h, q - s - z) - ln_z_norm;
                acc += if ln == f64::NEG_INFINITY { 0.0 } else { ln.exp() };
                zs[(z + radius) as usize] = acc;
            }
            zs[(2 * radius + 1) as usize] = 0.0;
            let z_box = zs[0];
            let suffix = |from: i64| -> f64 {
                if from <= -radius {
                    z_box
                } else if from > radius {
                    0.0
                } else {
                    zs[(from + radius) as usize]
                }
            };
            let mut x_box = 0.0;
            let mut x_event = 0.0;
            let x_lo = (s - radius).max(-radius);
            let x_hi = (s + radius).min(radius);
            for x in x_lo..=x_hi {
                let ln = lf.ln_binom(h, q + x) + lf.ln_binom(h, q + s - x) - ln_x_norm;
                if ln == f64::NEG_INFINITY {
                    continue;
                }
                let p_x = ln.exp();
                x_box += p_x;
                if s >= k {
                    x_event += p_x * suffix(k - x);
                }
            }
            box_mass += p_s * x_box * z_box;
            event += p_s * x_event;
        }
        Ok(PairProbability {
            value: event,
            remainder: (1.0 - box_mass).max(0.0),
            radius,
        })
    }

    /// `4 sqrt(2) / (pi m)^(3/2) * sum over (x, y, z) with x + y >= k and
    /// x + z >= k of exp(-2((x+y)^2 + (x+z)^2 + (y+z)^2) / m)`, evaluated
    /// through the parity split of `(x + y, x + z, y + z)`.
    pub fn pair_probability_asymptotic(&self) -> f64 {
        let m = self.m as f64;
        let (mut even, mut odd) = (0.0, 0.0);
        let mut a = self.k as f64;
        loop {
            let term = (-2.0 * a * a / m).exp();
            if a > 0.0 && term < 1e-300 {
                break;
            }
            if (a as i64).rem_euclid(2) == 0 {
                even += term;
            } else {
                odd += term;
            }
            a += 1.0;
        }
        let (mut c_even, mut c_odd) = (1.0, 0.0);
        let mut c = 1.0f64;
        loop {
            let term = 2.0 * (-2.0 * c * c / m).exp();
            if term < 1e-300 {
                break;
            }
            if c as i64 % 2 == 0 {
                c_even += term;
            } else {
                c_odd += term;
            }
            c += 1.0;
        }
        let lattice = (even * even + odd * odd) * c_even + 2.0 * even * odd * c_odd;
        4.0 * 2f64.sqrt() / (PI * m).powf(1.5) * lattice
    }

    pub fn moments(&self) -> Result<MomentReport> {
        let exact_first = self.tail_exact();
        let pair = self.pair_probability_exact()?;
        let product = exact_first * exact_first;
        Ok(MomentReport {
            exact_first,
            asymptotic_first: self.tail_asymptotic(),
            exact_pair: pair.value,
            asymptotic_pair: self.pair_probability_asymptotic(),
            product,
            ratio: pair.value / product,
            remainder: pair.remainder,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairProbability {
    pub value: f64,
    /// Probability mass outside the summation box; bounds the truncation error.
    pub remainder: f64,
    pub radius: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    /// `P(M_k(O))`, i.e. `E[X_k] / (r(G) - 1)`.
    pub exact_first: f64,
    pub asymptotic_first: f64,
    pub exact_pair: f64,
    pub asymptotic_pair: f64,
    pub product: f64,
    pub ratio: f64,
    pub remainder: f64,
}

/// `E[X_k] = (r(G) - 1) P(M_k(O))`: every odd coset has the same law.
pub fn expected_xk(g: &AbelianGroup, ctx: &HypergeomContext) -> Result<f64> {
    if ctx.n != g.n() {
        return Err(Error::RangeError(format!("context n={} but group n={}", ctx.n, g.n())));
    }
    Ok((g.r() - 1) as f64 * ctx.tail_exact())
}

/// Minimal `b >= 0` with `E[X_b] <= n^gamma`, or 0 when `r(G) <= n^gamma`.
pub fn select_b(g: &AbelianGroup, m: u64, gamma: f64) -> Result<u64> {
    if gamma <= 0.0 {
        return Err(Error::RangeError(format!("gamma = {gamma}")));
    }
    let limit = (g.n() as f64).powf(gamma);
    if g.r() as f64 <= limit {
        return Ok(0);
    }
    let ctx = HypergeomContext::new(g.n(), m, 0)?;
    let count = (g.r() - 1) as f64;
    let b = ctx
        .tails_from_zero()
        .iter()
        .position(|&t| count * t <= limit)
        .expect("the tail vanishes past the support");
    Ok(b as u64)
}

/// `|E[X_k] - E[X_{k+h}]| / E[X_k]`; the coset count cancels.
pub fn stability_ratio(ctx: &HypergeomContext, h: i64) -> f64 {
    let base = ctx.tail_exact();
    (base - ctx.with_k(ctx.k + h).tail_exact()).abs() / base
}
