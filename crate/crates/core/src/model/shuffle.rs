use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::object::{ArticulatedObject, StateVector};
use crate::scalar::Scalar;

/// Reorders parts so that new position `k` holds old part `permutation[k]`,
/// relabeling part ids to their new positions.
pub fn permute_parts<T: Scalar>(object: &ArticulatedObject<T>, permutation: &[usize]) -> Result<ArticulatedObject<T>> {
    let n = object.parts.len();
    let mut seen = vec![false; n];
    if permutation.len() != n || permutation.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Parameter(format!("{permutation:?} is not a permutation of 0..{n}")));
    }
    object.index_of_ids()?;
    // old id -> new id
    let mut new_id = std::collections::HashMap::with_capacity(n);
    for (k, &old) in permutation.iter().enumerate() {
        new_id.insert(object.parts[old].part_id, k);
    }
    let remap = |id: usize| -> Result<usize> {
        new_id.get(&id).copied().ok_or_else(|| Error::Structure(format!("unknown part id {id}")))
    };
    let parts = permutation
        .iter()
        .enumerate()
        .map(|(k, &old)| {
            let mut p = object.parts[old].clone();
            p.part_id = k;
            p.parent_id = p.parent_id.map(remap).transpose()?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ArticulatedObject {
        parts,
        root_id: remap(object.root_id)?,
        category: object.category.clone(),
        normalization: object.normalization.clone(),
    })
}

/// Seeded random part order, returned with the permutation used.
pub fn shuffle_parts_with_permutation<T: Scalar>(
    object: &ArticulatedObject<T>,
    seed: u64,
) -> Result<(ArticulatedObject<T>, Vec<usize>)> {
    let mut perm: Vec<usize> = (0..object.parts.len()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((permute_parts(object, &perm)?, perm))
}

pub fn shuffle_parts<T: Scalar>(object: &ArticulatedObject<T>, seed: u64) -> Result<ArticulatedObject<T>> {
    shuffle_parts_with_permutation(object, seed).map(|(o, _)| o)
}

pub fn invert_permutation(permutation: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; permutation.len()];
    for (k, &old) in permutation.iter().enumerate() {
        inv[old] = k;
    }
    inv
}

/// Reorders a state vector the same way [`permute_parts`] reorders parts.
pub fn permute_states<T: Scalar>(states: &StateVector<T>, permutation: &[usize]) -> StateVector<T> {
    StateVector(permutation.iter().map(|&old| states.0[old]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::chain;
    use crate::model::kinematics::forward_kinematics;
    use crate::model::validate::validate_object;

    #[test]
    fn single_part_unchanged() {
        let obj = chain(1);
        assert_eq!(shuffle_parts(&obj, 42).unwrap(), obj);
    }

    #[test]
    fn inverse_permutation_restores_order() {
        let obj = chain(5);
        let (shuffled, perm) = shuffle_parts_with_permutation(&obj, 3).unwrap();
        assert_ne!(perm, vec![0, 1, 2, 3, 4]);
        let back = permute_parts(&shuffled, &invert_permutation(&perm)).unwrap();
        assert_eq!(back, obj);
    }

    #[test]
    fn shuffled_chain_preserves_kinematics() {
        let obj = chain(4);
        let states = StateVector(vec![0.0, 0.3, 0.9, 0.5]);
        let (shuffled, perm) = shuffle_parts_with_permutation(&obj, 11).unwrap();
        assert!(validate_object(&shuffled).is_valid());
        let fk = forward_kinematics(&obj, &states).unwrap();
        let fk_s = forward_kinematics(&shuffled, &permute_states(&states, &perm)).unwrap();
        for (k, &old) in perm.iter().enumerate() {
            assert!(fk_s[k].max_abs_diff(&fk[old]) < 1e-12);
        }
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(permute_parts(&chain(3), &[0, 0, 1]).is_err());
        assert!(permute_parts(&chain(3), &[0, 1]).is_err());
    }
}
