//! Named instances from the literature and parametric families used by tests,
//! experiments and the CLI.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gf::FieldOrder;
use crate::model::{validate, EicpInstance};

/// Four users over F_2 with an optimal code of length 3.
pub fn example_1() -> EicpInstance {
    EicpInstance::from_one_based(2, 4, &[&[1], &[1, 2, 3], &[2, 4], &[4]], &[2, 4, 1, 3])
        .expect("example 1")
}

/// Four users over F_2 whose candidate sets have sizes 3, 3, 1, 1.
pub fn example_2() -> EicpInstance {
    EicpInstance::from_one_based(2, 4, &[&[2, 3], &[1, 3], &[4], &[1, 2]], &[1, 2, 3, 4])
        .expect("example 2")
}

/// Seven-user single unicast instance combining a covered B_{4,4} on users
/// 1..4 (covering user 7) with an uncovered B_{3,3} on users 5..7.
///
/// The tree cover needs 4 transmissions here, the bi-clique cover 3.
pub fn example_3() -> EicpInstance {
    EicpInstance::from_one_based(
        2,
        7,
        &[
            &[2, 3, 4],
            &[1, 3, 4],
            &[1, 2, 4],
            &[1, 2, 3],
            &[6, 7],
            &[5, 7],
            &[1, 2, 3, 4, 5, 6],
        ],
        &[1, 2, 3, 4, 5, 6, 7],
    )
    .expect("example 3")
}

/// Single unicast instance whose side-information graph is exactly the
/// regular tree T_{n,n}: user i knows x_{i+1}, x_{i+2} for i < n and user n
/// knows x_1 (indices mod n, 1-based).
pub fn regular_tree(n: usize, q: FieldOrder) -> EicpInstance {
    assert!(n >= 3, "regular trees need n >= 3");
    let mut side_info: Vec<Vec<usize>> =
        (0..n - 1).map(|i| vec![(i + 1) % n, (i + 2) % n]).collect();
    side_info.push(vec![0]);
    EicpInstance::new(q, n, side_info, (0..n).collect()).expect("regular tree")
}

/// Bi-clique B_{n,n}: user i knows every x_j with j != i, demands x_i.
///
/// With `covered`, a user n+1 knowing x_1..x_n is added. It demands an extra
/// message x_{n+1} held by user 1, which keeps the instance valid (nobody
/// holds everything) and single unicast.
pub fn biclique(n: usize, covered: bool, q: FieldOrder) -> EicpInstance {
    assert!(n >= 2, "bi-cliques need n >= 2");
    let mut side_info: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).collect())
        .collect();
    if !covered {
        return EicpInstance::new(q, n, side_info, (0..n).collect()).expect("bi-clique");
    }
    side_info[0].push(n);
    side_info.push((0..n).collect());
    EicpInstance::new(q, n + 1, side_info, (0..=n).collect()).expect("covered bi-clique")
}

/// Random single uniprior instance: user i holds exactly one message, all
/// distinct, and demands some other message.
pub fn random_single_uniprior(n: usize, q: FieldOrder, seed: u64) -> EicpInstance {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut held: Vec<usize> = (0..n).collect();
    held.shuffle(&mut rng);
    let demands = held
        .iter()
        .map(|&h| {
            let mut d = rng.gen_range(0..n - 1);
            if d >= h {
                d += 1;
            }
            d
        })
        .collect();
    EicpInstance::new(q, n, held.into_iter().map(|h| vec![h]).collect(), demands)
        .expect("single uniprior")
}

/// Random spanning tree on n users + n messages, with a single unicast
/// demand assignment. Returns `None` if no valid instance turned up within a
/// bounded number of draws.
pub fn random_tree_sueicp(n: usize, q: FieldOrder, seed: u64) -> Option<EicpInstance> {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let mut side_info = vec![Vec::new(); n];
        let mut users_in = vec![rng.gen_range(0..n)];
        let mut msgs_in: Vec<usize> = Vec::new();
        let mut users_out: Vec<usize> = (0..n).filter(|u| *u != users_in[0]).collect();
        let mut msgs_out: Vec<usize> = (0..n).collect();
        while !users_out.is_empty() || !msgs_out.is_empty() {
            let pick_msg = users_out.is_empty()
                || (!msgs_out.is_empty() && (msgs_in.is_empty() || rng.gen_bool(0.5)));
            if pick_msg {
                let x = msgs_out.swap_remove(rng.gen_range(0..msgs_out.len()));
                let u = *users_in.choose(&mut rng).unwrap();
                side_info[u].push(x);
                msgs_in.push(x);
            } else {
                let u = users_out.swap_remove(rng.gen_range(0..users_out.len()));
                let x = *msgs_in.choose(&mut rng).unwrap();
                side_info[u].push(x);
                users_in.push(u);
            }
        }
        let mut demands: Vec<usize> = (0..n).collect();
        for _ in 0..200 {
            demands.shuffle(&mut rng);
            if demands
                .iter()
                .enumerate()
                .all(|(i, d)| !side_info[i].contains(d))
            {
                let inst = EicpInstance::new(q, n, side_info.clone(), demands.clone()).ok()?;
                if validate(&inst).is_valid() {
                    return Some(inst);
                }
                break;
            }
        }
    }
    None
}
