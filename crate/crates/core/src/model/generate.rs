use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{validate, EicpInstance, ModelError};
use crate::gf::FieldOrder;
use crate::graphs::SideInfoBipartiteGraph;

const MAX_ATTEMPTS: usize = 200;
const MAX_REPAIR_PASSES: usize = 64;

/// Default cap on the number of demand vectors [`enumerate_demands`] yields.
pub const DEFAULT_DEMAND_GUARD: u128 = 1_000_000;

type Membership = Vec<Vec<bool>>;

fn check_sizes(n: usize, m: usize) -> Result<(), ModelError> {
    if n < 2 || m < 2 {
        return Err(ModelError::InvalidParameter(format!(
            "need N >= 2 and M >= 2 (got N={n}, M={m})"
        )));
    }
    Ok(())
}

// Nudges a membership matrix toward the three side-information constraints.
// Returns true once no pass changes anything.
fn repair(knows: &mut Membership, rng: &mut ChaCha8Rng) -> bool {
    let n = knows.len();
    let m = knows[0].len();
    for _ in 0..MAX_REPAIR_PASSES {
        let mut changed = false;
        for row in knows.iter_mut() {
            if row.iter().all(|&b| b) {
                row[rng.gen_range(0..m)] = false;
                changed = true;
            }
        }
        for x in 0..m {
            let holders: Vec<usize> = (0..n).filter(|&i| knows[i][x]).collect();
            if holders.len() == n {
                knows[rng.gen_range(0..n)][x] = false;
                changed = true;
            } else if holders.is_empty() {
                // prefer users that would not become omniscient
                let roomy: Vec<usize> = (0..n)
                    .filter(|&i| knows[i].iter().filter(|&&b| b).count() + 1 < m)
                    .collect();
                let pool = if roomy.is_empty() {
                    (0..n).collect()
                } else {
                    roomy
                };
                knows[*pool.choose(rng).unwrap()][x] = true;
                changed = true;
            }
        }
        if !changed {
            return true;
        }
    }
    false
}

fn finish(
    q: FieldOrder,
    knows: &Membership,
    rng: &mut ChaCha8Rng,
) -> Result<EicpInstance, ModelError> {
    let m = knows[0].len();
    let side_info: Vec<Vec<usize>> = knows
        .iter()
        .map(|row| (0..m).filter(|&x| row[x]).collect())
        .collect();
    let demands = knows
        .iter()
        .map(|row| {
            let missing: Vec<usize> = (0..m).filter(|&x| !row[x]).collect();
            *missing.choose(rng).expect("repaired user misses a message")
        })
        .collect();
    EicpInstance::new(q, m, side_info, demands)
}

/// Random instance: each user holds each message independently with
/// probability `density`, then repair passes enforce the side-information
/// constraints and demands are drawn uniformly from what each user lacks.
pub fn gen_random(
    n: usize,
    m: usize,
    q: FieldOrder,
    density: f64,
    seed: u64,
) -> Result<EicpInstance, ModelError> {
    check_sizes(n, m)?;
    if !(density > 0.0 && density < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "density must lie in (0, 1), got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let mut knows: Membership = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_bool(density)).collect())
            .collect();
        if !repair(&mut knows, &mut rng) {
            continue;
        }
        let inst = finish(q, &knows, &mut rng)?;
        if validate(&inst).is_valid() {
            return Ok(inst);
        }
    }
    Err(ModelError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
    })
}

/// Heavy-overlap instance in the spirit of vehicles that overheard the same
/// roadside broadcast: a fraction `overlap` of the messages is popular and
/// held by each user with probability `overlap`; every other message sits
/// with a single random user. Only connected side-information graphs are
/// returned.
pub fn gen_vanet(
    n: usize,
    m: usize,
    q: FieldOrder,
    overlap: f64,
    seed: u64,
) -> Result<EicpInstance, ModelError> {
    check_sizes(n, m)?;
    if !(0.5..1.0).contains(&overlap) {
        return Err(ModelError::InvalidParameter(format!(
            "overlap must lie in [0.5, 1), got {overlap}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let popular = ((overlap * m as f64).round() as usize).clamp(1, m);
    for _ in 0..MAX_ATTEMPTS {
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let mut knows: Membership = vec![vec![false; m]; n];
        for (rank, &x) in order.iter().enumerate() {
            if rank < popular {
                for row in knows.iter_mut() {
                    row[x] = rng.gen_bool(overlap);
                }
            } else {
                knows[rng.gen_range(0..n)][x] = true;
            }
        }
        if !repair(&mut knows, &mut rng) {
            continue;
        }
        let inst = finish(q, &knows, &mut rng)?;
        if validate(&inst).is_valid() && SideInfoBipartiteGraph::from_instance(&inst).is_connected()
        {
            return Ok(inst);
        }
    }
    Err(ModelError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
    })
}

/// Every demand vector compatible with the side information, in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct DemandIter {
    choices: Vec<Vec<usize>>,
    cursor: Option<Vec<usize>>,
}

impl Iterator for DemandIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Self::Item> {
        let cur = self.cursor.as_mut()?;
        let out: Vec<usize> = cur
            .iter()
            .zip(&self.choices)
            .map(|(&c, ch)| ch[c])
            .collect();
        // odometer, last user fastest
        let mut pos = cur.len();
        loop {
            if pos == 0 {
                self.cursor = None;
                break;
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < self.choices[pos].len() {
                break;
            }
            cur[pos] = 0;
        }
        Some(out)
    }
}

/// Enumerates D(G_S): all `d` with `d_i` outside `K_i`. Fails when the
/// product of the choice counts exceeds `guard`.
pub fn enumerate_demands(
    side_info: &[Vec<usize>],
    num_messages: usize,
    guard: u128,
) -> Result<DemandIter, ModelError> {
    let choices: Vec<Vec<usize>> = side_info
        .iter()
        .map(|k| (0..num_messages).filter(|x| !k.contains(x)).collect())
        .collect();
    let product = choices
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    if product > guard {
        return Err(ModelError::EnumerationTooLarge { product, guard });
    }
    let cursor = (product > 0).then(|| vec![0; choices.len()]);
    Ok(DemandIter { choices, cursor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn random_is_deterministic_and_valid() {
        let q = FieldOrder::BINARY;
        let a = gen_random(4, 4, q, 0.5, 7).unwrap();
        let b = gen_random(4, 4, q, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert!(validate(&a).is_valid());
        for seed in 0..200 {
            let inst = gen_random(5, 4, q, 0.4, seed).unwrap();
            assert!(validate(&inst).is_valid(), "{inst}");
        }
    }

    #[test]
    fn dense_random_caps_side_info() {
        let inst = gen_random(3, 3, FieldOrder::BINARY, 0.9, 1).unwrap();
        assert!(inst.all_side_info().iter().all(|k| k.len() <= 2));
        assert!(validate(&inst).is_valid());
    }

    #[test]
    fn random_rejects_bad_parameters() {
        let q = FieldOrder::BINARY;
        assert!(gen_random(1, 4, q, 0.5, 0).is_err());
        assert!(gen_random(4, 4, q, 1.0, 0).is_err());
        assert!(gen_random(4, 4, q, 0.0, 0).is_err());
    }

    #[test]
    fn vanet_is_connected_valid_and_deterministic() {
        let q = FieldOrder::BINARY;
        let inst = gen_vanet(6, 6, q, 0.7, 3).unwrap();
        assert!(SideInfoBipartiteGraph::from_instance(&inst).is_connected());
        assert!(validate(&inst).is_valid());
        assert_eq!(inst, gen_vanet(6, 6, q, 0.7, 3).unwrap());
        for seed in 0..50 {
            let inst = gen_vanet(5, 7, q, 0.8, seed).unwrap();
            assert!(validate(&inst).is_valid());
        }
        assert!(gen_vanet(6, 6, q, 0.2, 3).is_err());
    }

    #[test]
    fn demand_enumeration_counts() {
        let e2 = catalog::example_2();
        let all: Vec<_> = enumerate_demands(e2.all_side_info(), 4, DEFAULT_DEMAND_GUARD)
            .unwrap()
            .collect();
        assert_eq!(all.len(), 2 * 2 * 3 * 2);
        assert_eq!(all[0], vec![0, 1, 0, 2]);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, all);
        for d in &all {
            for (i, &x) in d.iter().enumerate() {
                assert!(!e2.knows(i, x));
            }
        }

        let uniprior = vec![vec![0], vec![1], vec![2]];
        assert_eq!(enumerate_demands(&uniprior, 3, 100).unwrap().count(), 8);
    }

    #[test]
    fn demand_enumeration_guard() {
        let k = vec![vec![]; 8];
        assert!(matches!(
            enumerate_demands(&k, 8, 1000),
            Err(ModelError::EnumerationTooLarge {
                product: 16777216,
                ..
            })
        ));
    }
}
