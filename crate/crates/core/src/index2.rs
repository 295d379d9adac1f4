//! Index-2 subgroups `E = H_I`, their odd cosets `O = G \ E`, and the doubling
//! set `W = {a + a : a in O}`.
//!
//! Every index-2 subgroup is `H_I = {x : sum_{i in I} x_i = 0 (mod 2)}` for a
//! non-empty set `I` of even-factor positions, and distinct `I` give distinct
//! subgroups, so there are exactly `r(G) - 1` of them.

use crate::caps::Caps;
use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::set::ElementSet;

/// Membership tables are materialized up to this group order.
pub const MATERIALIZE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct Index2Subgroup<'g> {
    group: &'g AbelianGroup,
    mask: u64,
    members: Option<ElementSet>,
    r_even: u64,
    r_odd: u64,
}

impl<'g> Index2Subgroup<'g> {
    /// `H_I` for `I` given as a bitmask over even-factor positions.
    pub fn from_mask(group: &'g AbelianGroup, mask: u64) -> Result<Self> {
        let k = group.rank2();
        if mask == 0 || (k < 64 && mask >> k != 0) {
            return Err(Error::InvalidIndexSet(format!("mask {mask:#b} for {k} even factors")));
        }
        let mut sub = Index2Subgroup {
            group,
            mask,
            members: None,
            r_even: 0,
            r_odd: 0,
        };
        // R(G) is the set of elements with residues in {0, 2^(a-1)} on the even
        // factors and 0 elsewhere. Small R(G) is scanned directly; otherwise
        // the count uses that only a_i = 1 positions in I change parity.
        let r = group.r();
        if r <= 1 << 12 {
            let halves: Vec<u64> = group.even_exponents().iter().map(|&a| 1u64 << (a - 1)).collect();
            let mut residues = vec![0u64; group.moduli().len()];
            for pattern in 0..r {
                for (i, &h) in halves.iter().enumerate() {
                    residues[i] = if pattern >> i & 1 == 1 { h } else { 0 };
                }
                let x = group.index_of(&residues).expect("valid residues");
                if sub.parity(x) == 0 {
                    sub.r_even += 1;
                } else {
                    sub.r_odd += 1;
                }
            }
        } else {
            let flips = (0..k).any(|i| mask >> i & 1 == 1 && group.even_exponents()[i] == 1);
            (sub.r_even, sub.r_odd) = if flips { (r / 2, r / 2) } else { (r, 0) };
        }
        if group.order() <= MATERIALIZE_LIMIT {
            let size = group.size();
            let members = ElementSet::from_indices(size, (0..size).filter(|&x| sub.parity(x) == 0));
            sub.members = Some(members);
        }
        Ok(sub)
    }

    pub fn from_positions(group: &'g AbelianGroup, positions: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &p in positions {
            if p >= group.rank2() || p >= 64 {
                return Err(Error::InvalidIndexSet(format!("position {p}")));
            }
            mask |= 1 << p;
        }
        Self::from_mask(group, mask)
    }

    fn parity(&self, x: usize) -> u64 {
        let mut total = 0u64;
        let mut m = self.mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            total += self.group.residue(x, i);
            m &= m - 1;
        }
        total & 1
    }

    pub fn group(&self) -> &'g AbelianGroup {
        self.group
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Positions in `I`, increasing.
    pub fn positions(&self) -> Vec<usize> {
        (0..64).filter(|&i| self.mask >> i & 1 == 1).collect()
    }

    /// `I` rendered as `0+2`.
    pub fn label(&self) -> String {
        self.positions()
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn is_even(&self, x: usize) -> bool {
        match &self.members {
            Some(m) => m.contains(x),
            None => self.parity(x) == 0,
        }
    }

    pub fn is_odd(&self, x: usize) -> bool {
        !self.is_even(x)
    }

    /// `r(E)`.
    pub fn r_even(&self) -> u64 {
        self.r_even
    }

    /// `r(O)`.
    pub fn r_odd(&self) -> u64 {
        self.r_odd
    }

    pub fn even_set(&self) -> ElementSet {
        match &self.members {
            Some(m) => m.clone(),
            None => {
                let size = self.group.size();
                ElementSet::from_indices(size, (0..size).filter(|&x| self.parity(x) == 0))
            }
        }
    }

    pub fn even_elements(&self) -> Vec<usize> {
        (0..self.group.size()).filter(|&x| self.is_even(x)).collect()
    }

    pub fn odd_elements(&self) -> Vec<usize> {
        (0..self.group.size()).filter(|&x| self.is_odd(x)).collect()
    }
}

/// All `H_I`, `I` non-empty, ordered by the bitmask of `I`.
pub fn enumerate_index2_subgroups<'g>(g: &'g AbelianGroup, caps: &Caps) -> Result<Vec<Index2Subgroup<'g>>> {
    let count = g.r() - 1;
    if count > caps.subgroups {
        return Err(Error::SubgroupCountOverflow {
            count,
            cap: caps.subgroups,
        });
    }
    (1..=count).map(|mask| Index2Subgroup::from_mask(g, mask)).collect()
}

/// `O = G \ E`.
pub fn odd_coset(sub: &Index2Subgroup) -> ElementSet {
    sub.even_set().complement()
}

/// `W = {a + a : a in O}`, sorted by dense index.
pub fn compute_w(sub: &Index2Subgroup) -> Vec<usize> {
    let g = sub.group();
    let mut seen = ElementSet::empty(g.size());
    for a in (0..g.size()).filter(|&a| sub.is_odd(a)) {
        seen.insert(g.double_idx(a));
    }
    seen.to_vec()
}

/// `E` is nice when `r(G) <= delta * n` or `r(O) = r(E)`.
pub fn is_nice(g: &AbelianGroup, sub: &Index2Subgroup, delta: f64) -> bool {
    (g.r() as f64) <= delta * g.n() as f64 || sub.r_odd() == sub.r_even()
}

pub fn count_not_nice(g: &AbelianGroup, delta: f64, caps: &Caps) -> Result<usize> {
    Ok(enumerate_index2_subgroups(g, caps)?
        .iter()
        .filter(|s| !is_nice(g, s, delta))
        .count())
}
