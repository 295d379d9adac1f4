//! Text formats accepted on the command line and in run configurations.
//!
//! Every parser reports the byte offset of the first offending character.

use crate::error::{Error, Result};
use crate::group::AbelianGroup;
use crate::index2::Index2Subgroup;
use crate::sampling::{sample_elements, SampleLaw};

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Self {
        Cursor { s, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn number(&mut self) -> Result<u64> {
        let start = self.pos;
        while matches!(self.peek(), Some('0'..='9')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        self.s[start..self.pos]
            .parse()
            .map_err(|_| Error::parse(start, "number does not fit in 64 bits"))
    }

    fn at_end(&self) -> bool {
        self.pos == self.s.len()
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.pos, message)
    }
}

/// Written cyclic moduli of `Z2^3*Z{2^4}*Z9`: `^` after a plain modulus
/// repeats the factor, inside braces it is a power.
pub fn parse_moduli(s: &str) -> Result<Vec<u64>> {
    let mut c = Cursor::new(s);
    let mut moduli = Vec::new();
    loop {
        c.skip_ws();
        if !c.eat('Z') {
            return Err(c.error("expected 'Z'"));
        }
        let start = c.pos;
        let modulus = if c.eat('{') {
            c.skip_ws();
            let base = c.number()?;
            c.skip_ws();
            let value = if c.eat('^') {
                c.skip_ws();
                let e = c.number()?;
                u32::try_from(e)
                    .ok()
                    .and_then(|e| base.checked_pow(e))
                    .ok_or_else(|| Error::parse(start, "modulus overflows 64 bits"))?
            } else {
                base
            };
            c.skip_ws();
            c.expect('}')?;
            value
        } else {
            c.number()?
        };
        if modulus < 2 {
            return Err(Error::parse(start, format!("modulus {modulus} is below 2")));
        }
        let mut copies = 1;
        if c.eat('^') {
            let at = c.pos;
            copies = c.number()?;
            if copies == 0 || copies > 64 {
                return Err(Error::parse(at, format!("repeat count {copies} is not in 1..=64")));
            }
        }
        moduli.extend(std::iter::repeat_n(modulus, copies as usize));
        c.skip_ws();
        if c.at_end() {
            return Ok(moduli);
        }
        c.expect('*')?;
    }
}

pub fn parse_group_spec(s: &str, cap: u64) -> Result<AbelianGroup> {
    AbelianGroup::from_written(&parse_moduli(s)?, cap)
}

/// Elements in written coordinates, `1,3,5` on a cyclic group or
/// `(0,1),(1,2)` in general, optionally wrapped in braces. Returns sorted,
/// deduplicated dense indices.
pub fn parse_elements(g: &AbelianGroup, s: &str) -> Result<Vec<usize>> {
    let mut c = Cursor::new(s);
    c.skip_ws();
    let braced = c.eat('{');
    let mut out = Vec::new();
    c.skip_ws();
    let closes = |c: &Cursor| if braced { c.peek() == Some('}') } else { c.at_end() };
    if !closes(&c) {
        loop {
            c.skip_ws();
            let start = c.pos;
            let coords = if c.eat('(') {
                let mut coords = Vec::new();
                loop {
                    c.skip_ws();
                    coords.push(c.number()?);
                    c.skip_ws();
                    if c.eat(')') {
                        break;
                    }
                    c.expect(',')?;
                }
                coords
            } else {
                vec![c.number()?]
            };
            let x = g
                .index_from_written(&coords)
                .map_err(|e| Error::parse(start, e.to_string()))?;
            out.push(x);
            c.skip_ws();
            if closes(&c) {
                break;
            }
            c.expect(',')?;
        }
    }
    if braced {
        c.expect('}')?;
        c.skip_ws();
    }
    if !c.at_end() {
        return Err(c.error("trailing input"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Either an explicit element list or `random:<p>:<seed>`, a `p`-random
/// subset drawn as trial 0 of `seed`.
pub fn parse_set(g: &AbelianGroup, s: &str) -> Result<Vec<usize>> {
    match s.trim().strip_prefix("random:") {
        Some(rest) => {
            let offset = s.len() - s.trim_start().len() + "random:".len();
            let (p, seed) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(offset, "expected random:<p>:<seed>"))?;
            let p = parse_f64(p, offset)?;
            let seed_at = offset + p_len(rest);
            let seed: u64 = seed.trim().parse().map_err(|_| Error::parse(seed_at, "bad seed"))?;
            Ok(sample_elements(g, &SampleLaw::PRandom { p }, seed, 0)?.to_vec())
        }
        None => parse_elements(g, s),
    }
}

fn p_len(rest: &str) -> usize {
    rest.find(':').map_or(rest.len(), |i| i + 1)
}

fn parse_f64(s: &str, at: usize) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::parse(at, format!("bad number {:?}", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::parse(at, "number is not finite"));
    }
    Ok(v)
}

/// `p:<f>`, `m:<int>` or `pm:<f>:<delta>`; the skewed law uses the index set
/// `mask`.
pub fn parse_law(s: &str, mask: u64) -> Result<SampleLaw> {
    let s = s.trim();
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| Error::parse(0, "expected <kind>:<value>"))?;
    let at = kind.len() + 1;
    let law = match kind {
        "p" => SampleLaw::PRandom {
            p: parse_f64(rest, at)?,
        },
        "m" => SampleLaw::MUniform {
            m: rest.trim().parse().map_err(|_| Error::parse(at, "bad m"))?,
        },
        "pm" => {
            let (p, delta) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(at, "expected pm:<p>:<delta>"))?;
            let p = parse_f64(p, at)?;
            let delta = parse_f64(delta, at + p_len(rest))?;
            SampleLaw::skewed(p, delta, mask)
        }
        _ => return Err(Error::parse(0, format!("unknown law {kind:?}"))),
    };
    match law {
        SampleLaw::PRandom { p } | SampleLaw::Skewed { p1: p, .. } if !(0.0..=1.0).contains(&p) => {
            Err(Error::parse(at, format!("probability {p} is not in [0, 1]")))
        }
        SampleLaw::Skewed { p2, .. } if !(0.0..=1.0).contains(&p2) => {
            Err(Error::parse(at, format!("probability {p2} is not in [0, 1]")))
        }
        law => Ok(law),
    }
}

/// Longest accepted density grid.
pub const MAX_GRID: usize = 10_000;

/// `a:b:steps` (inclusive, evenly spaced) or a comma list. Entries of a list
/// may end in `p*` to scale the threshold `p_star`, e.g. `0.75p*`.
pub fn parse_p_grid(s: &str, p_star: Option<f64>) -> Result<Vec<f64>> {
    let trimmed = s.trim();
    let parts: Vec<&str> = trimmed.split(':').collect();
    let grid = if parts.len() == 3 {
        let a = parse_f64(parts[0], 0)?;
        let b = parse_f64(parts[1], parts[0].len() + 1)?;
        let at = parts[0].len() + parts[1].len() + 2;
        let steps: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(at, "bad step count"))?;
        match steps {
            0 => return Err(Error::parse(at, "step count must be positive")),
            n if n > MAX_GRID => return Err(Error::parse(at, format!("more than {MAX_GRID} grid points"))),
            1 => vec![a],
            _ => (0..steps)
                .map(|i| a + (b - a) * i as f64 / (steps - 1) as f64)
                .collect(),
        }
    } else if parts.len() == 1 {
        let mut offset = 0;
        let mut grid = Vec::new();
        for item in trimmed.split(',') {
            let value = match item.trim().strip_suffix("p*") {
                Some(factor) => {
                    let p_star = p_star.ok_or_else(|| Error::parse(offset, "p* is not defined here"))?;
                    parse_f64(factor, offset)? * p_star
                }
                None => parse_f64(item, offset)?,
            };
            grid.push(value);
            offset += item.len() + 1;
        }
        grid
    } else {
        return Err(Error::parse(0, "expected a:b:steps or a comma list"));
    };
    if grid.len() > MAX_GRID {
        return Err(Error::parse(0, format!("more than {MAX_GRID} grid points")));
    }
    if let Some(bad) = grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::parse(0, format!("p = {bad} is not in [0, 1]")));
    }
    Ok(grid)
}

/// Index set `I` as `0+2`, `0,2` or a single position.
pub fn parse_subgroup<'g>(g: &'g AbelianGroup, s: &str) -> Result<Index2Subgroup<'g>> {
    let mut positions = Vec::new();
    let mut offset = 0;
    for item in s.split(['+', ',']) {
        let p: usize = item
            .trim()
            .parse()
            .map_err(|_| Error::parse(offset, format!("bad position {:?}", item.trim())))?;
        positions.push(p);
        offset += item.len() + 1;
    }
    Index2Subgroup::from_positions(g, &positions)
}
