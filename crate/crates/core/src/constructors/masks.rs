use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise disjoint index sets `γ_m = {k ≥ 1 : γ_{m,k} = 1}`, `m ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskFamily {
    /// `γ_m = {k : ν₂(k) = m - 1}`.
    TwoAdic,
    /// `γ_m = {k : k ≡ m - 1 (mod modulus)}`, for `m ≤ modulus`.
    Residue { modulus: u64 },
    /// Finite truncations of the masks, validated for disjointness.
    Explicit { sets: Vec<Vec<u64>> },
}

impl Default for MaskFamily {
    fn default() -> Self {
        MaskFamily::TwoAdic
    }
}

impl MaskFamily {
    pub fn validate(&self, m_max: u64) -> Result<()> {
        match self {
            MaskFamily::TwoAdic => Ok(()),
            MaskFamily::Residue { modulus } => {
                if *modulus == 0 || m_max > *modulus {
                    return Err(Error::invalid(format!("residue masks mod {modulus} support at most {modulus} members")));
                }
                Ok(())
            }
            MaskFamily::Explicit { sets } => {
                if (sets.len() as u64) < m_max {
                    return Err(Error::invalid(format!("{} masks given, {m_max} needed", sets.len())));
                }
                let mut seen = std::collections::BTreeMap::new();
                for (m, set) in sets.iter().enumerate() {
                    if set.is_empty() || set.contains(&0) {
                        return Err(Error::invalid(format!("mask {} must be a nonempty subset of k ≥ 1", m + 1)));
                    }
                    for &k in set {
                        if let Some(prev) = seen.insert(k, m + 1) {
                            if prev != m + 1 {
                                return Err(Error::violation("mask disjointness", vec![prev as u64, m as u64 + 1], format!("both contain k = {k}")));
                            }
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// `γ_{m,k}`, for `m, k ≥ 1`.
    pub fn contains(&self, m: u64, k: u64) -> bool {
        match self {
            MaskFamily::TwoAdic => k.trailing_zeros() as u64 + 1 == m,
            MaskFamily::Residue { modulus } => k % modulus == (m - 1) % modulus,
            MaskFamily::Explicit { sets } => sets.get(m as usize - 1).is_some_and(|s| s.contains(&k)),
        }
    }

    /// `γ_m ∩ [1, k_max]`.
    pub fn members(&self, m: u64, k_max: u64) -> Vec<u64> {
        (1..=k_max).filter(|&k| self.contains(m, k)).collect()
    }
}
