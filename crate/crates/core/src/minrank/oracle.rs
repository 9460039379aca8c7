use std::collections::BTreeSet;

use super::{subsets_by_size, MinrankError};
use crate::codes::{eligible_transmitter, EmbeddedIndexCode, Transmission};
use crate::gf::{EchelonBasis, GfVector};
use crate::model::EicpInstance;

/// Subsets the oracle may visit before giving up.
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

const POOL_GUARD: u128 = 1 << 20;

/// Outcome of the shortest-code search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    /// Shortest decodable length, or `l_max + 1` when none was found.
    pub length: usize,
    pub found: bool,
    pub subsets_checked: u64,
    pub code: Option<EmbeddedIndexCode>,
}

/// Every nonzero vector some user could transmit, scaled so its first
/// nonzero coordinate is 1, deduplicated.
pub fn transmission_pool(inst: &EicpInstance) -> Result<Vec<GfVector>, MinrankError> {
    let q = inst.q();
    let m = inst.num_messages();
    let total = inst
        .all_side_info()
        .iter()
        .map(|k| q.checked_pow(k.len() as u32).unwrap_or(u128::MAX))
        .fold(0u128, u128::saturating_add);
    if total > POOL_GUARD {
        return Err(MinrankError::PoolTooLarge { guard: POOL_GUARD });
    }
    let mut seen: BTreeSet<(usize, Vec<usize>, Vec<u8>)> = BTreeSet::new();
    let nonzero: Vec<u8> = q.elements().filter(|&a| a != 0).collect();
    for k in inst.all_side_info() {
        for s in subsets_by_size(k).into_iter().filter(|s| !s.is_empty()) {
            // leading coordinate fixed to 1
            let free = s.len() - 1;
            let count = nonzero.len().pow(free as u32);
            for code in 0..count {
                let mut coords = vec![0u8; m];
                coords[s[0]] = 1;
                let mut c = code;
                for &x in &s[1..] {
                    coords[x] = nonzero[c % nonzero.len()];
                    c /= nonzero.len();
                }
                seen.insert((s.len(), s.clone(), coords));
            }
        }
    }
    Ok(seen
        .into_iter()
        .map(|(_, _, c)| GfVector::new(q, c.into_iter().map(i64::from)))
        .collect())
}

/// Shortest code, over pool subsets, that every user decodes. Tries
/// lengths 0..=`l_max` in turn.
pub fn minrank_oracle(
    inst: &EicpInstance,
    l_max: usize,
    budget: u64,
) -> Result<OracleOutcome, MinrankError> {
    let users: Vec<usize> = (0..inst.num_users()).collect();
    minrank_oracle_for_users(inst, &users, l_max, budget)
}

struct OracleSearch<'a> {
    inst: &'a EicpInstance,
    pool: &'a [GfVector],
    users: &'a [usize],
    budget: u64,
    checked: u64,
}

impl OracleSearch<'_> {
    // `per_user[k]` spans the chosen columns with K_{users[k]} coordinates
    // zeroed; `all` spans the chosen columns themselves.
    fn dfs(
        &mut self,
        start: usize,
        left: usize,
        all: &EchelonBasis,
        per_user: &[EchelonBasis],
        chosen: &mut Vec<usize>,
        length: usize,
    ) -> Result<bool, MinrankError> {
        self.checked += 1;
        if self.checked > self.budget {
            return Err(MinrankError::OracleBudget {
                length,
                budget: self.budget,
            });
        }
        if left == 0 {
            let q = self.inst.q();
            let m = self.inst.num_messages();
            return Ok(self.users.iter().zip(per_user).all(|(&u, b)| {
                b.in_span(&GfVector::unit(q, m, self.inst.demand(u)))
                    .expect("dimensions agree")
            }));
        }
        for idx in start..=self.pool.len() - left {
            let w = &self.pool[idx];
            // dependent columns never shorten a code
            let (next_all, grew) = all.inserted(w).expect("dimensions agree");
            if !grew {
                continue;
            }
            let next_users: Vec<EchelonBasis> = self
                .users
                .iter()
                .zip(per_user)
                .map(|(&u, b)| {
                    let mut p = w.clone();
                    for &k in self.inst.side_info(u) {
                        p.set(k, 0);
                    }
                    b.inserted(&p).expect("dimensions agree").0
                })
                .collect();
            chosen.push(idx);
            if self.dfs(idx + 1, left - 1, &next_all, &next_users, chosen, length)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
}

/// [`minrank_oracle`] where only the listed users (0-based) must decode.
pub fn minrank_oracle_for_users(
    inst: &EicpInstance,
    users: &[usize],
    l_max: usize,
    budget: u64,
) -> Result<OracleOutcome, MinrankError> {
    let q = inst.q();
    let m = inst.num_messages();
    let pool = transmission_pool(inst)?;
    let mut search = OracleSearch {
        inst,
        pool: &pool,
        users,
        budget,
        checked: 0,
    };
    let empty = EchelonBasis::new(q, m);
    let per_user = vec![empty.clone(); users.len()];
    for length in 0..=l_max.min(pool.len()) {
        let mut chosen = Vec::new();
        if search.dfs(0, length, &empty, &per_user, &mut chosen, length)? {
            let transmissions = chosen
                .iter()
                .map(|&i| {
                    let w = &pool[i];
                    let t = eligible_transmitter(inst, &w.support(), None)
                        .expect("pool vectors have a holder");
                    Transmission::new(t, w.clone())
                })
                .collect();
            return Ok(OracleOutcome {
                length,
                found: true,
                subsets_checked: search.checked,
                code: Some(EmbeddedIndexCode::new(q, m, transmissions).expect("pool is nonzero")),
            });
        }
    }
    Ok(OracleOutcome {
        length: l_max + 1,
        found: false,
        subsets_checked: search.checked,
        code: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::codes::verify_code;

    #[test]
    fn examples() {
        let e1 = catalog::example_1();
        let o = minrank_oracle(&e1, 4, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(o.length, 3);
        assert!(verify_code(o.code.as_ref().unwrap(), &e1).unwrap().overall);
        let e2 = catalog::example_2();
        assert_eq!(
            minrank_oracle(&e2, 4, DEFAULT_ORACLE_BUDGET)
                .unwrap()
                .length,
            3
        );
    }

    #[test]
    fn common_demand_needs_one() {
        let inst = EicpInstance::from_one_based(2, 3, &[&[1], &[2], &[3, 1]], &[3, 3, 2]).unwrap();
        let users = [0, 1];
        let o = minrank_oracle_for_users(&inst, &users, 3, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(o.length, 1);
    }

    #[test]
    fn sentinel_when_bound_too_small() {
        let o = minrank_oracle(&catalog::example_1(), 2, DEFAULT_ORACLE_BUDGET).unwrap();
        assert!(!o.found);
        assert_eq!(o.length, 3);
        assert!(matches!(
            minrank_oracle(&catalog::example_1(), 4, 3),
            Err(MinrankError::OracleBudget { .. })
        ));
    }

    #[test]
    fn pool_is_projective() {
        let q = crate::gf::FieldOrder::new(3).unwrap();
        let inst = catalog::example_2().with_field(q);
        let pool = transmission_pool(&inst).unwrap();
        for w in &pool {
            assert_eq!(w, &w.projective_normal());
        }
        // K = {2,3},{1,3},{4},{1,2}: 4 + 4 + 1 + 4 minus shared singletons
        assert_eq!(pool.len(), 4 + 4 + 1 + 4 - 3);
    }
}
