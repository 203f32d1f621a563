//! (d,2)-hash families and the sampling grids built from them.
//!
//! A family is a list of 2-colourings of the variables such that every pair of
//! distinct variables gets different colours under at least one member. For
//! every member `h`, the grid `χ(h)` spans the plane of its two colour
//! indicators; `χ_diag` runs along the main diagonal of the cube.

use std::collections::HashSet;
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_ATTEMPTS: usize = 32;

/// `max(1, ceil(c_prime · ln d))`.
pub fn target_size(d: usize, c_prime: f64) -> usize {
    ((c_prime * (d as f64).ln()).ceil() as usize).max(1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashFamily {
    d: usize,
    /// One bit-vector per member; a set bit means colour 2.
    members: Vec<Vec<u64>>,
}

/// Draws a separating family of `target_size` colourings of `[d]`.
///
/// Each variable receives a uniformly random codeword in `{1,2}^target_size`,
/// redrawn until it differs from all earlier ones; member `b` colours a
/// variable by bit `b` of its codeword. This is the i.i.d. uniform family
/// conditioned on separation. The result is re-verified exhaustively.
pub fn build_hash_family<R: Rng + ?Sized>(d: usize, target_size: usize, rng: &mut R) -> Result<HashFamily> {
    if d < 2 || target_size == 0 {
        return Err(Error::Config(format!("hash family needs d >= 2 and size >= 1 (d = {d}, size = {target_size})")));
    }
    if target_size < 64 && (1u64 << target_size) < d as u64 {
        return Err(Error::HashConstruction { d, size: target_size });
    }
    let words = d.div_ceil(64);
    for _ in 0..MAX_ATTEMPTS {
        let mut used = HashSet::with_capacity(d);
        let mut members = vec![vec![0u64; words]; target_size];
        for i in 0..d {
            let code = loop {
                let c: u64 = rng.gen::<u64>() & mask(target_size);
                if used.insert(c) {
                    break c;
                }
            };
            for (b, m) in members.iter_mut().enumerate() {
                if code >> b & 1 == 1 {
                    m[i / 64] |= 1 << (i % 64);
                }
            }
        }
        let family = HashFamily { d, members };
        if family.separates_all_pairs() {
            return Ok(family);
        }
    }
    Err(Error::HashConstruction { d, size: target_size })
}

fn mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

impl HashFamily {
    /// Family from explicit colourings with values in `{1, 2}`.
    pub fn from_colorings(d: usize, colorings: &[Vec<u8>]) -> Result<Self> {
        let words = d.div_ceil(64);
        let mut members = Vec::with_capacity(colorings.len());
        for h in colorings {
            if h.len() != d || h.iter().any(|&c| c != 1 && c != 2) {
                return Err(Error::Config("colourings must have length d and values in {1, 2}".into()));
            }
            let mut bits = vec![0u64; words];
            for (i, &c) in h.iter().enumerate() {
                if c == 2 {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            members.push(bits);
        }
        Ok(Self { d, members })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Colour (1 or 2) that member `h` assigns to variable `i`.
    #[inline]
    pub fn color(&self, h: usize, i: usize) -> u8 {
        1 + (self.members[h][i / 64] >> (i % 64) & 1) as u8
    }

    /// Exhaustive check over all pairs `i < j`.
    pub fn separates_all_pairs(&self) -> bool {
        (0..self.d).all(|i| (i + 1..self.d).all(|j| self.separates(i, j)))
    }

    pub fn separates(&self, i: usize, j: usize) -> bool {
        (0..self.len()).any(|h| self.color(h, i) != self.color(h, j))
    }

    /// Colour indicators `(e1, e2)` of member `h`.
    pub fn indicator_vectors<T: Real>(&self, h: usize) -> Result<(Vec<T>, Vec<T>)> {
        if h >= self.len() {
            return Err(Error::IndexOutOfRange { index: h, size: self.len() });
        }
        let e2: Vec<T> = (0..self.d).map(|i| if self.color(h, i) == 2 { T::one() } else { T::zero() }).collect();
        let e1 = e2.iter().map(|&v| T::one() - v).collect();
        Ok((e1, e2))
    }
}

/// Points of a sampling grid, each a full vector in `[-1, 1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid<T> {
    pub points: Vec<Vec<T>>,
    pub origin_hash: Option<usize>,
    /// For grids built from hash members: `(member, index within χ(member))` of each point.
    pub sources: Vec<(usize, usize)>,
}

impl<T: Real> SampleGrid<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One row per point: index followed by the nonzero `coordinate:value` pairs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "point,coordinates")?;
        for (i, p) in self.points.iter().enumerate() {
            let pairs: Vec<String> =
                p.iter().enumerate().filter(|(_, v)| **v != T::zero()).map(|(j, v)| format!("{j}:{v}")).collect();
            writeln!(w, "{i},{}", pairs.join(" "))?;
        }
        Ok(())
    }
}

fn levels<T: Real>(m: usize) -> Vec<T> {
    let mm = m as i64;
    (-mm..=mm).map(|j| T::lit(j as f64 / m as f64)).collect()
}

/// `χ(h)`: all `(2m_x+1)²` points `c1·e1(h) + c2·e2(h)`, `c1` varying slowest.
pub fn hessian_grid<T: Real>(family: &HashFamily, h: usize, m_x: usize) -> Result<SampleGrid<T>> {
    if m_x == 0 {
        return Err(Error::Config("m_x must be at least 1".into()));
    }
    if h >= family.len() {
        return Err(Error::IndexOutOfRange { index: h, size: family.len() });
    }
    let lv = levels::<T>(m_x);
    let mut points = Vec::with_capacity(lv.len() * lv.len());
    for &c1 in &lv {
        for &c2 in &lv {
            points.push((0..family.d()).map(|i| if family.color(h, i) == 1 { c1 } else { c2 }).collect());
        }
    }
    let sources = (0..points.len()).map(|i| (h, i)).collect();
    Ok(SampleGrid { points, origin_hash: Some(h), sources })
}

/// `χ_diag`: `2m'_x+1` points `(x, …, x)` with `x` equispaced in `[-1, 1]`.
pub fn diagonal_grid<T: Real>(m_x: usize, d: usize) -> Result<SampleGrid<T>> {
    if m_x == 0 {
        return Err(Error::Config("m'_x must be at least 1".into()));
    }
    let points = levels::<T>(m_x).into_iter().map(|x| vec![x; d]).collect();
    Ok(SampleGrid { points, origin_hash: None, sources: Vec::new() })
}

/// Union of `χ(h)` over the family with duplicates removed, in first-seen order.
pub fn interaction_grid<T: Real>(family: &HashFamily, m_x: usize) -> Result<SampleGrid<T>> {
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut points = Vec::new();
    let mut sources = Vec::new();
    let scale = T::from_usize_lossy(m_x);
    for h in 0..family.len() {
        for (i, p) in hessian_grid::<T>(family, h, m_x)?.points.into_iter().enumerate() {
            let key: Vec<i64> = p.iter().map(|&v| (v * scale).round().to_i64().unwrap_or(0)).collect();
            if seen.insert(key) {
                points.push(p);
                sources.push((h, i));
            }
        }
    }
    Ok(SampleGrid { points, origin_hash: None, sources })
}
