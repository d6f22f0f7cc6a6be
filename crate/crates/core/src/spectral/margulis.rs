use crate::error::{PlateauError, Result};
use crate::group::{primitive_root, GroupElement, MarkedGroup};
use crate::sphere::{act, chordal_distance, SphereVector};

/// Elements `γ_0..γ_J` of a free group, with one witness per consecutive
/// pair: a unit vector displaced by less than `α` by both elements.
#[derive(Debug, Clone)]
pub struct MargulisChain {
    pub elements: Vec<GroupElement>,
    pub witnesses: Vec<SphereVector>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainVerdict {
    /// All primitive roots agree up to inversion.
    CommonCyclic { root: GroupElement },
    /// The first consecutive pair whose roots differ.
    Violation {
        index: usize,
        left: GroupElement,
        right: GroupElement,
    },
}

/// Validates every witness against `alpha`, then compares primitive roots.
pub fn margulis_chain_check(group: &MarkedGroup, chain: &MargulisChain, alpha: f64) -> Result<ChainVerdict> {
    let n = chain.elements.len();
    if n == 0 {
        return Err(PlateauError::InvalidArgument("chain is empty".into()));
    }
    if chain.witnesses.len() + 1 != n {
        return Err(PlateauError::InvalidArgument(format!(
            "{n} elements need {} witnesses, got {}",
            n - 1,
            chain.witnesses.len()
        )));
    }
    if chain.elements.iter().any(|g| group.is_identity(g)) {
        return Err(PlateauError::IdentityInput);
    }
    for (j, u) in chain.witnesses.iter().enumerate() {
        if u.group() != group {
            return Err(PlateauError::GroupMismatch(format!("witness {j}")));
        }
        for g in &chain.elements[j..j + 2] {
            let d = chordal_distance(&act(g, u)?, u)?;
            if d >= alpha {
                return Err(PlateauError::InvalidWitness(format!(
                    "witness {j} is displaced by {d:.6} ≥ α = {alpha} under {}",
                    group.format_element(g)
                )));
            }
        }
    }
    let roots = chain
        .elements
        .iter()
        .map(|g| primitive_root(group, g).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    for j in 1..n {
        let (x, y) = (&roots[j - 1], &roots[j]);
        if x != y && *x != group.inv(y) {
            return Ok(ChainVerdict::Violation {
                index: j - 1,
                left: x.clone(),
                right: y.clone(),
            });
        }
    }
    Ok(ChainVerdict::CommonCyclic { root: roots[0].clone() })
}
