//! Occupation-number bases for bosonic Fock spaces over `K` modes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

/// Default refusal threshold for basis dimensions.
pub const DEFAULT_DIMENSION_CAP: usize = 2_000_000;

/// Which occupation vectors a basis contains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Exactly `particles` bosons.
    Sector { particles: usize },
    /// At most `cutoff` bosons: the truncated Fock space `F^{≤cutoff}`.
    Truncated { cutoff: usize },
}

/// Occupation vectors `(n_1, …, n_K)` with an index map in both directions.
///
/// Vectors are ordered by total particle number and, within each sector,
/// reverse-lexicographically: `(N,0,…,0)` comes first and `(0,…,0,N)` last.
#[derive(Clone, Debug)]
pub struct OccupationBasis {
    modes: usize,
    kind: BasisKind,
    occupations: Vec<u8>,
    totals: Vec<usize>,
    index: HashMap<Box<[u8]>, usize>,
}

/// `C(n, k)` in floating point, adequate for dimension checks.
fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Dimension of the `N`-particle sector over `K` modes.
pub fn sector_dimension(modes: usize, particles: usize) -> f64 {
    if modes == 0 {
        return if particles == 0 { 1.0 } else { 0.0 };
    }
    binomial(particles + modes - 1, modes - 1)
}

/// Dimension of `F^{≤M}` over `K` modes.
pub fn truncated_dimension(modes: usize, cutoff: usize) -> f64 {
    binomial(cutoff + modes, modes)
}

fn push_sector(modes: usize, particles: usize, out: &mut Vec<u8>) {
    let mut current = vec![0u8; modes];
    fn recurse(pos: usize, remaining: usize, current: &mut [u8], out: &mut Vec<u8>) {
        let last = current.len() - 1;
        if pos == last {
            current[pos] = remaining as u8;
            out.extend_from_slice(current);
            return;
        }
        for n in (0..=remaining).rev() {
            current[pos] = n as u8;
            recurse(pos + 1, remaining - n, current, out);
        }
    }
    if modes == 0 {
        return;
    }
    recurse(0, particles, &mut current, out);
}

impl OccupationBasis {
    pub fn sector(modes: usize, particles: usize, cap: usize) -> Result<Self> {
        Self::build(modes, BasisKind::Sector { particles }, cap)
    }

    pub fn truncated(modes: usize, cutoff: usize, cap: usize) -> Result<Self> {
        Self::build(modes, BasisKind::Truncated { cutoff }, cap)
    }

    fn build(modes: usize, kind: BasisKind, cap: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("K", "at least one mode is required"));
        }
        let (dim, max_total) = match kind {
            BasisKind::Sector { particles } => (sector_dimension(modes, particles), particles),
            BasisKind::Truncated { cutoff } => (truncated_dimension(modes, cutoff), cutoff),
        };
        if max_total > u8::MAX as usize {
            return Err(invalid("cutoff", "occupations above 255 are not supported"));
        }
        if dim > cap as f64 {
            return Err(LabError::BasisTooLarge { dim: dim as usize, cap });
        }
        let mut occupations = Vec::with_capacity(dim as usize * modes);
        let mut totals = Vec::with_capacity(dim as usize);
        match kind {
            BasisKind::Sector { particles } => {
                push_sector(modes, particles, &mut occupations);
                totals.resize(dim as usize, particles);
            }
            BasisKind::Truncated { cutoff } => {
                for k in 0..=cutoff {
                    let before = occupations.len() / modes;
                    push_sector(modes, k, &mut occupations);
                    totals.resize(totals.len() + occupations.len() / modes - before, k);
                }
            }
        }
        let index = occupations
            .chunks_exact(modes)
            .enumerate()
            .map(|(i, occ)| (occ.to_vec().into_boxed_slice(), i))
            .collect();
        Ok(Self {
            modes,
            kind,
            occupations,
            totals,
            index,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.totals.len()
    }

    /// Largest particle number present in the basis.
    pub fn max_total(&self) -> usize {
        match self.kind {
            BasisKind::Sector { particles } => particles,
            BasisKind::Truncated { cutoff } => cutoff,
        }
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        &self.occupations[i * self.modes..(i + 1) * self.modes]
    }

    pub fn total(&self, i: usize) -> usize {
        self.totals[i]
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.occupations.chunks_exact(self.modes)
    }

    /// Index of the vacuum, if present.
    pub fn vacuum_index(&self) -> Option<usize> {
        self.index_of(&vec![0u8; self.modes])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_order_and_size() {
        let b = OccupationBasis::sector(3, 2, DEFAULT_DIMENSION_CAP).unwrap();
        let occ: Vec<Vec<u8>> = b.iter().map(|o| o.to_vec()).collect();
        assert_eq!(
            occ,
            vec![
                vec![2, 0, 0],
                vec![1, 1, 0],
                vec![1, 0, 1],
                vec![0, 2, 0],
                vec![0, 1, 1],
                vec![0, 0, 2]
            ]
        );
        for (i, o) in b.iter().enumerate() {
            assert_eq!(b.index_of(o), Some(i));
        }
    }

    #[test]
    fn truncated_is_graded_by_number() {
        let b = OccupationBasis::truncated(4, 3, DEFAULT_DIMENSION_CAP).unwrap();
        assert_eq!(b.dim(), 35);
        assert_eq!(b.vacuum_index(), Some(0));
        let totals: Vec<usize> = (0..b.dim()).map(|i| b.total(i)).collect();
        assert!(totals.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..b.dim() {
            assert_eq!(b.occupation(i).iter().map(|&n| n as usize).sum::<usize>(), b.total(i));
        }
    }

    #[test]
    fn dimensions_match_binomials() {
        for k in 1..6 {
            for n in 0..6 {
                let s = OccupationBasis::sector(k, n, DEFAULT_DIMENSION_CAP).unwrap();
                assert_eq!(s.dim() as f64, sector_dimension(k, n));
                let t = OccupationBasis::truncated(k, n, DEFAULT_DIMENSION_CAP).unwrap();
                assert_eq!(t.dim() as f64, truncated_dimension(k, n));
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let err = OccupationBasis::sector(30, 10, 1000).unwrap_err();
        assert!(matches!(err, LabError::BasisTooLarge { .. }));
    }
}
