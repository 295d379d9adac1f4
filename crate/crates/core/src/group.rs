//! Finite abelian groups of even order as direct sums of cyclic groups.
//!
//! A group is kept in canonical form `Z_{2^a_1} + ... + Z_{2^a_k} + Z_{q_1} + ...`
//! with `a_1 <= ... <= a_k` and odd `q_1 <= q_2 <= ...`. Odd factors are never
//! merged by CRT, so the positions of the even factors are exactly the index
//! positions used to describe index-2 subgroups.
//!
//! Elements are addressed by a dense index in `[0, |G|)`: the mixed-radix
//! number whose digits are the residues, even factors first and the first
//! factor most significant.

use serde::Serialize;

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::set::ElementSet;

/// One cyclic factor as the user wrote it, e.g. `Z12`, and where its 2-part and
/// odd part ended up in the canonical factor list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WrittenFactor {
    pub modulus: u64,
    pub even_slot: Option<usize>,
    pub odd_slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbelianGroup {
    even_exponents: Vec<u32>,
    odd_moduli: Vec<u64>,
    moduli: Vec<u64>,
    strides: Vec<u64>,
    order: u64,
    written: Vec<WrittenFactor>,
}

/// An element given by its residues together with its dense index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub residues: Vec<u64>,
    pub index: usize,
}

/// Order-2 statistics of a subset `X`: `r_count = |{x in X : x = -x}|` and
/// `m_count` = number of pairs `{x, -x}` inside `X` with `x != -x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubsetStats {
    pub r_count: usize,
    pub m_count: usize,
}

/// Builds a group with the default element cap.
pub fn make_group(even_exponents: &[u32], odd_moduli: &[u64]) -> Result<AbelianGroup> {
    make_group_with_cap(even_exponents, odd_moduli, Caps::default().elements)
}

pub fn make_group_with_cap(even_exponents: &[u32], odd_moduli: &[u64], cap: u64) -> Result<AbelianGroup> {
    let written: Vec<u64> = even_exponents
        .iter()
        .map(|&a| {
            if a == 0 || a >= 63 {
                Err(Error::InvalidFactor(format!("2^{a}")))
            } else {
                Ok(1u64 << a)
            }
        })
        .chain(odd_moduli.iter().map(|&q| Ok(q)))
        .collect::<Result<_>>()?;
    for &q in odd_moduli {
        if q < 3 || q % 2 == 0 {
            return Err(Error::InvalidFactor(format!("odd modulus {q}")));
        }
    }
    AbelianGroup::from_written(&written, cap)
}

impl AbelianGroup {
    /// Builds the group `Z_{m_1} + ... + Z_{m_t}` from written cyclic moduli,
    /// splitting each modulus into its 2-part and odd part.
    pub fn from_written(moduli: &[u64], cap: u64) -> Result<AbelianGroup> {
        // (value, written position)
        let mut evens: Vec<(u32, usize)> = Vec::new();
        let mut odds: Vec<(u64, usize)> = Vec::new();
        let mut order: u128 = 1;
        for (pos, &m) in moduli.iter().enumerate() {
            if m < 2 {
                return Err(Error::InvalidFactor(format!("Z{m}")));
            }
            let a = m.trailing_zeros();
            let q = m >> a;
            if a > 0 {
                evens.push((a, pos));
            }
            if q > 1 {
                odds.push((q, pos));
            }
            order = order.saturating_mul(m as u128);
        }
        if evens.is_empty() {
            return Err(Error::EmptyEvenPart);
        }
        if order > cap as u128 {
            return Err(Error::OrderOverflow { order, cap });
        }
        evens.sort();
        odds.sort();
        let mut written: Vec<WrittenFactor> = moduli
            .iter()
            .map(|&modulus| WrittenFactor {
                modulus,
                even_slot: None,
                odd_slot: None,
            })
            .collect();
        for (slot, &(_, pos)) in evens.iter().enumerate() {
            written[pos].even_slot = Some(slot);
        }
        for (slot, &(_, pos)) in odds.iter().enumerate() {
            written[pos].odd_slot = Some(evens.len() + slot);
        }
        let even_exponents: Vec<u32> = evens.iter().map(|&(a, _)| a).collect();
        let odd_moduli: Vec<u64> = odds.iter().map(|&(q, _)| q).collect();
        let factor_moduli: Vec<u64> = even_exponents
            .iter()
            .map(|&a| 1u64 << a)
            .chain(odd_moduli.iter().copied())
            .collect();
        let mut strides = vec![1u64; factor_moduli.len()];
        for i in (0..factor_moduli.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * factor_moduli[i + 1];
        }
        Ok(AbelianGroup {
            even_exponents,
            odd_moduli,
            moduli: factor_moduli,
            strides,
            order: order as u64,
            written,
        })
    }

    pub fn even_exponents(&self) -> &[u32] {
        &self.even_exponents
    }

    pub fn odd_moduli(&self) -> &[u64] {
        &self.odd_moduli
    }

    /// Canonical factor moduli, even factors first.
    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn written_factors(&self) -> &[WrittenFactor] {
        &self.written
    }

    /// Number of even cyclic factors, `k`.
    pub fn rank2(&self) -> usize {
        self.even_exponents.len()
    }

    /// `|G| = 2n`.
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn size(&self) -> usize {
        self.order as usize
    }

    pub fn n(&self) -> u64 {
        self.order / 2
    }

    /// `r(G) = 2^k`, the number of elements with `x = -x`.
    pub fn r(&self) -> u64 {
        1u64 << self.rank2()
    }

    /// Canonical name such as `Z2*Z4*Z3`.
    pub fn canonical_name(&self) -> String {
        self.moduli
            .iter()
            .map(|m| format!("Z{m}"))
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn zero(&self) -> usize {
        0
    }

    pub fn residues(&self, index: usize) -> Vec<u64> {
        self.moduli
            .iter()
            .zip(&self.strides)
            .map(|(&m, &s)| (index as u64 / s) % m)
            .collect()
    }

    pub fn residue(&self, index: usize, factor: usize) -> u64 {
        (index as u64 / self.strides[factor]) % self.moduli[factor]
    }

    pub fn index_of(&self, residues: &[u64]) -> Result<usize> {
        if residues.len() != self.moduli.len() {
            return Err(Error::ElementOutOfRange(format!(
                "expected {} residues, got {}",
                self.moduli.len(),
                residues.len()
            )));
        }
        let mut index = 0u64;
        for ((&r, &m), &s) in residues.iter().zip(&self.moduli).zip(&self.strides) {
            if r >= m {
                return Err(Error::ElementOutOfRange(format!("residue {r} >= modulus {m}")));
            }
            index += r * s;
        }
        Ok(index as usize)
    }

    pub fn element(&self, index: usize) -> GroupElement {
        GroupElement {
            residues: self.residues(index),
            index,
        }
    }

    pub fn element_from_residues(&self, residues: &[u64]) -> Result<GroupElement> {
        let index = self.index_of(residues)?;
        Ok(GroupElement {
            residues: residues.to_vec(),
            index,
        })
    }

    /// Dense index of the element written in the user's coordinates, one
    /// coordinate per written factor (CRT-split into the canonical factors).
    pub fn index_from_written(&self, coords: &[u64]) -> Result<usize> {
        if coords.len() != self.written.len() {
            return Err(Error::ElementOutOfRange(format!(
                "expected {} coordinates, got {}",
                self.written.len(),
                coords.len()
            )));
        }
        let mut residues = vec![0u64; self.moduli.len()];
        for (c, w) in coords.iter().zip(&self.written) {
            if *c >= w.modulus {
                return Err(Error::ElementOutOfRange(format!(
                    "coordinate {c} >= modulus {}",
                    w.modulus
                )));
            }
            if let Some(slot) = w.even_slot {
                residues[slot] = c % self.moduli[slot];
            }
            if let Some(slot) = w.odd_slot {
                residues[slot] = c % self.moduli[slot];
            }
        }
        self.index_of(&residues)
    }

    /// Inverse of [`Self::index_from_written`].
    pub fn written_coords(&self, index: usize) -> Vec<u64> {
        let residues = self.residues(index);
        self.written
            .iter()
            .map(|w| match (w.even_slot, w.odd_slot) {
                (Some(e), Some(o)) => crt(residues[e], self.moduli[e], residues[o], self.moduli[o]),
                (Some(e), None) => residues[e],
                (None, Some(o)) => residues[o],
                (None, None) => 0,
            })
            .collect()
    }

    /// Written coordinates rendered as `4` or `(1,3)`.
    pub fn format_element(&self, index: usize) -> String {
        let coords = self.written_coords(index);
        if coords.len() == 1 {
            coords[0].to_string()
        } else {
            let parts: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
            format!("({})", parts.join(","))
        }
    }

    pub fn add_idx(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a as u64, b as u64);
        let mut out = 0u64;
        let mut place = 1u64;
        for &m in self.moduli.iter().rev() {
            let d = (a % m + b % m) % m;
            out += d * place;
            place *= m;
            a /= m;
            b /= m;
        }
        out as usize
    }

    pub fn neg_idx(&self, a: usize) -> usize {
        let mut a = a as u64;
        let mut out = 0u64;
        let mut place = 1u64;
        for &m in self.moduli.iter().rev() {
            let d = a % m;
            out += ((m - d) % m) * place;
            place *= m;
            a /= m;
        }
        out as usize
    }

    pub fn sub_idx(&self, a: usize, b: usize) -> usize {
        self.add_idx(a, self.neg_idx(b))
    }

    pub fn double_idx(&self, a: usize) -> usize {
        self.add_idx(a, a)
    }

    pub fn is_self_inverse(&self, a: usize) -> bool {
        self.double_idx(a) == 0
    }

    fn check(&self, x: &GroupElement) -> Result<()> {
        let index = self.index_of(&x.residues)?;
        if index != x.index {
            return Err(Error::ElementOutOfRange(format!(
                "dense index {} does not match residues {:?}",
                x.index, x.residues
            )));
        }
        Ok(())
    }

    pub fn add(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.element(self.add_idx(x.index, y.index)))
    }

    pub fn neg(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        Ok(self.element(self.neg_idx(x.index)))
    }

    /// Every element exactly once, in dense-index order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.size()).map(move |i| self.element(i))
    }

    /// `R(G)` as a set.
    pub fn self_inverse_set(&self) -> ElementSet {
        ElementSet::from_indices(self.size(), (0..self.size()).filter(|&i| self.is_self_inverse(i)))
    }
}

/// The `c` in `[0, m1*m2)` with `c = r1 (mod m1)`, `c = r2 (mod m2)`, coprime moduli.
fn crt(r1: u64, m1: u64, r2: u64, m2: u64) -> u64 {
    let inv = mod_inverse(m1 % m2, m2);
    let diff = (r2 + m2 - r1 % m2) % m2;
    let t = ((diff as u128 * inv as u128) % m2 as u128) as u64;
    r1 + m1 * t
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    old_s.rem_euclid(m as i128) as u64
}

pub fn r_of_set(g: &AbelianGroup, x: &ElementSet) -> usize {
    x.iter().filter(|&i| g.is_self_inverse(i)).count()
}

pub fn m_of_set(g: &AbelianGroup, x: &ElementSet) -> usize {
    x.iter()
        .filter(|&i| {
            let neg = g.neg_idx(i);
            neg != i && i < neg && x.contains(neg)
        })
        .count()
}

pub fn subset_stats(g: &AbelianGroup, x: &ElementSet) -> SubsetStats {
    SubsetStats {
        r_count: r_of_set(g, x),
        m_count: m_of_set(g, x),
    }
}

/// `r(S)` and `m(S)` for a list of distinct dense indices.
pub fn stats_of_indices(g: &AbelianGroup, s: &[usize]) -> SubsetStats {
    let r_count = s.iter().filter(|&&x| g.is_self_inverse(x)).count();
    let mut m_count = 0;
    for (i, &x) in s.iter().enumerate() {
        let neg = g.neg_idx(x);
        if neg != x && s[i + 1..].contains(&neg) {
            m_count += 1;
        }
    }
    SubsetStats { r_count, m_count }
}

/// Non-decreasing lists of positive integers summing to `total`.
fn additive_partitions(total: u32, min_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if total == 0 {
        out.push(prefix.clone());
        return;
    }
    for part in min_part..=total {
        prefix.push(part);
        additive_partitions(total - part, part, prefix, out);
        prefix.pop();
    }
}

/// Non-decreasing lists of odd factors `>= 3` whose product is `value`.
fn multiplicative_partitions(value: u64, min_factor: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if value == 1 {
        out.push(prefix.clone());
        return;
    }
    let mut f = min_factor;
    while f <= value {
        if value.is_multiple_of(f) {
            prefix.push(f);
            multiplicative_partitions(value / f, f, prefix, out);
            prefix.pop();
        }
        f += 2;
    }
}

/// Every canonical presentation of an abelian group of even order at most
/// `max_order`: all partitions of the 2-exponent times all factorizations of
/// the odd part into odd cyclic factors. Isomorphic groups whose odd parts are
/// factored differently (e.g. `Z2*Z15` and `Z2*Z3*Z5`) are both listed.
pub fn all_groups_up_to(max_order: u64) -> Vec<AbelianGroup> {
    let mut groups = Vec::new();
    for order in (2..=max_order).step_by(2) {
        let t = order.trailing_zeros();
        let q = order >> t;
        let mut evens = Vec::new();
        additive_partitions(t, 1, &mut Vec::new(), &mut evens);
        let mut odds = Vec::new();
        multiplicative_partitions(q, 3, &mut Vec::new(), &mut odds);
        for e in &evens {
            for o in &odds {
                groups.push(make_group_with_cap(e, o, u64::MAX).expect("valid factors"));
            }
        }
    }
    groups
}
