//! Size caps shared by every module. Defaults can be overridden through the
//! `SUMFREE_LAB_CAPS` environment variable, e.g.
//! `SUMFREE_LAB_CAPS="elements=65536,enumeration=1000000"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CAPS_ENV: &str = "SUMFREE_LAB_CAPS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Largest group order that may be materialized.
    pub elements: u64,
    /// Largest number of index-2 subgroups that may be enumerated.
    pub subgroups: u64,
    /// Largest number of candidate sets an exhaustive search may visit.
    pub enumeration: u64,
    /// Largest |A| for which all maximum sum-free subsets are enumerated.
    pub solver_enumerate: usize,
    /// Largest |A| for which the maximum sum-free size is computed.
    pub solver_size: usize,
    /// Largest |Z| accepted by cover analysis.
    pub cover: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            elements: 1 << 24,
            subgroups: 1 << 20,
            enumeration: 10_000_000,
            solver_enumerate: 40,
            solver_size: 60,
            cover: 12,
        }
    }
}

impl Caps {
    /// Parses a comma-separated `key=value` list on top of the defaults.
    pub fn parse_overrides(s: &str) -> Result<Caps> {
        let mut caps = Caps::default();
        let mut offset = 0;
        for item in s.split(',') {
            let start = offset;
            offset += item.len() + 1;
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::parse(start, format!("expected key=value, got {item:?}")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(start, format!("bad cap value in {item:?}")))?;
            match key.trim() {
                "elements" => caps.elements = value,
                "subgroups" => caps.subgroups = value,
                "enumeration" => caps.enumeration = value,
                "solver_enumerate" => caps.solver_enumerate = value as usize,
                "solver_size" => caps.solver_size = value as usize,
                "cover" => caps.cover = value as usize,
                other => return Err(Error::parse(start, format!("unknown cap {other:?}"))),
            }
        }
        Ok(caps)
    }

    /// Defaults, overridden by `SUMFREE_LAB_CAPS` when it is set.
    pub fn from_env() -> Result<Caps> {
        match std::env::var(CAPS_ENV) {
            Ok(s) => Caps::parse_overrides(&s),
            Err(_) => Ok(Caps::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_on_top_of_defaults() {
        let caps = Caps::parse_overrides("elements=1024, cover=8").unwrap();
        assert_eq!(caps.elements, 1024);
        assert_eq!(caps.cover, 8);
        assert_eq!(caps.enumeration, Caps::default().enumeration);
        assert_eq!(Caps::parse_overrides("").unwrap(), Caps::default());
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        assert!(matches!(Caps::parse_overrides("bogus=1"), Err(Error::Parse { .. })));
        assert!(matches!(Caps::parse_overrides("elements"), Err(Error::Parse { .. })));
        assert!(matches!(Caps::parse_overrides("elements=x"), Err(Error::Parse { .. })));
    }
}
