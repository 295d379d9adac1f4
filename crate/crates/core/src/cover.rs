//! Covers of sets `Z` inside `E \ {0}` seen from a vertex `u` of the odd coset.
//!
//! `Y` (inside `O`) covers `Z` when every `z in Z` has some `y in Y` with `uy`
//! an edge of `G_z`, i.e. `Y` hits every neighborhood `N_{G_z}(u)`. `Z` is
//! cover-maximal when no cover is smaller than `Z`, and `g(Z)` is a largest
//! cover-maximal subset of `Z`, ties going to the lexicographically least list
//! of dense indices.

use serde::Serialize;

use crate::caps::Caps;
use crate::cayley::{neighbors_into, nonzero_evens};
use crate::error::{Error, Result};
use crate::index2::Index2Subgroup;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverRecord {
    pub u: usize,
    pub z: Vec<usize>,
    pub min_cover_size: usize,
    pub is_cover_maximal: bool,
    pub g_z: Vec<usize>,
}

/// Minimum cover sizes for every subset of `universe` (bit `i` = `universe[i]`).
struct CoverTable {
    universe: Vec<usize>,
    min_cover: Vec<u8>,
}

impl CoverTable {
    fn new(sub: &Index2Subgroup, u: usize, universe: Vec<usize>) -> Self {
        let g = sub.group();
        let m = universe.len();
        // For each candidate y in O, the set of z it covers.
        let mut hits: Vec<(usize, u32)> = Vec::new();
        let mut buf = Vec::new();
        for (i, &z) in universe.iter().enumerate() {
            neighbors_into(g, u, &[z], &mut buf);
            for &y in &buf {
                match hits.iter_mut().find(|(c, _)| *c == y) {
                    Some((_, mask)) => *mask |= 1 << i,
                    None => hits.push((y, 1 << i)),
                }
            }
        }
        let by_z: Vec<Vec<u32>> = (0..m)
            .map(|i| hits.iter().filter(|(_, h)| h >> i & 1 == 1).map(|&(_, h)| h).collect())
            .collect();
        let mut min_cover = vec![0u8; 1 << m];
        for mask in 1usize..1 << m {
            let low = mask.trailing_zeros() as usize;
            min_cover[mask] = 1 + by_z[low]
                .iter()
                .map(|&h| min_cover[mask & !(h as usize)])
                .min()
                .expect("every z has a neighbor of u");
        }
        CoverTable { universe, min_cover }
    }

    fn is_cover_maximal(&self, mask: usize) -> bool {
        self.min_cover[mask] as u32 >= mask.count_ones()
    }

    /// `g` of the subset `mask`, as a submask.
    fn choose(&self, mask: usize) -> usize {
        let mut best = 0usize;
        let mut sub = mask;
        loop {
            if self.is_cover_maximal(sub) {
                let (a, b) = (sub.count_ones(), best.count_ones());
                if a > b || (a == b && lex_less(sub, best)) {
                    best = sub;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
        best
    }

    fn elements(&self, mask: usize) -> Vec<usize> {
        (0..self.universe.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| self.universe[i])
            .collect()
    }
}

/// For equal-size masks over a sorted universe: is the sorted list of `a`
/// lexicographically smaller than that of `b`?
fn lex_less(a: usize, b: usize) -> bool {
    let d = a ^ b;
    d != 0 && a & d & d.wrapping_neg() != 0
}

fn check_u(sub: &Index2Subgroup, u: usize) -> Result<()> {
    if u >= sub.group().size() || !sub.is_odd(u) {
        return Err(Error::NotInOddCoset(u));
    }
    Ok(())
}

fn sorted_z(sub: &Index2Subgroup, z: &[usize]) -> Result<Vec<usize>> {
    let size = sub.group().size();
    let mut z = z.to_vec();
    z.sort_unstable();
    z.dedup();
    for &x in &z {
        if x == 0 {
            return Err(Error::ZeroGenerator);
        }
        if x >= size || !sub.is_even(x) {
            return Err(Error::GeneratorNotEven(x));
        }
    }
    Ok(z)
}

pub fn cover_analysis(sub: &Index2Subgroup, u: usize, z: &[usize], caps: &Caps) -> Result<CoverRecord> {
    check_u(sub, u)?;
    let z = sorted_z(sub, z)?;
    let cap = caps.cover.min(20);
    if z.len() > cap {
        return Err(Error::CoverCapExceeded { size: z.len(), cap });
    }
    let table = CoverTable::new(sub, u, z.clone());
    let full = (1usize << z.len()) - 1;
    let min_cover_size = table.min_cover[full] as usize;
    let g_z = table.elements(table.choose(full));
    Ok(CoverRecord {
        u,
        is_cover_maximal: min_cover_size >= z.len(),
        z,
        min_cover_size,
        g_z,
    })
}

/// Number of `Z'` inside `E \ {0}` with `g(Z') = Z`.
pub fn count_preimages(sub: &Index2Subgroup, u: usize, z: &[usize], caps: &Caps) -> Result<u64> {
    check_u(sub, u)?;
    let z = sorted_z(sub, z)?;
    let universe = nonzero_evens(sub);
    let free = universe.len() - z.len();
    let cap = caps.cover.min(20);
    if universe.len() > cap {
        return Err(Error::CoverCapExceeded {
            size: universe.len(),
            cap,
        });
    }
    if (1u128 << free) > caps.enumeration as u128 {
        return Err(Error::EnumerationTooLarge {
            size: 1 << free,
            cap: caps.enumeration,
        });
    }
    let target: usize = z
        .iter()
        .map(|x| 1usize << universe.binary_search(x).expect("z is a nonzero even element"))
        .sum();
    let table = CoverTable::new(sub, u, universe);
    let full = table.min_cover.len() - 1;
    let rest = full & !target;
    let mut count = 0u64;
    let mut extra = rest;
    loop {
        if table.choose(target | extra) == target {
            count += 1;
        }
        if extra == 0 {
            break;
        }
        extra = (extra - 1) & rest;
    }
    Ok(count)
}

/// `(|Z|, count)` for every `Z` in `E \ {0}` that is some `g(Z')`, computed by
/// one pass over all `Z'`. Used for exhaustive checks of the `12^|Z|` bound.
pub fn all_preimage_counts(sub: &Index2Subgroup, u: usize, caps: &Caps) -> Result<Vec<(Vec<usize>, u64)>> {
    check_u(sub, u)?;
    let universe = nonzero_evens(sub);
    let cap = caps.cover.min(20);
    if universe.len() > cap {
        return Err(Error::CoverCapExceeded {
            size: universe.len(),
            cap,
        });
    }
    let table = CoverTable::new(sub, u, universe);
    let mut counts = vec![0u64; table.min_cover.len()];
    for mask in 0..table.min_cover.len() {
        counts[table.choose(mask)] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(mask, &c)| (table.elements(mask), c))
        .collect())
}
