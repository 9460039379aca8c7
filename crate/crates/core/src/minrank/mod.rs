//! Minrank of an embedded index coding instance: per-user candidate sets,
//! an exact branch-and-bound, an unpruned enumeration, an independent
//! shortest-code oracle and operation counts.

mod complexity;
mod oracle;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{eligible_transmitter, EmbeddedIndexCode, Transmission};
use crate::gf::{EchelonBasis, FieldOrder, GfError, GfMatrix, GfVector};
use crate::graphs::BipartiteProblemGraph;
use crate::model::EicpInstance;

pub use complexity::{complexity_report, ComplexityReport, OldDefinitionCount};
pub use oracle::{
    minrank_oracle, minrank_oracle_for_users, transmission_pool, OracleOutcome,
    DEFAULT_ORACLE_BUDGET,
};

/// Per-user cap on q^{|K_i|}.
pub const DEFAULT_CANDIDATE_GUARD: u128 = 1 << 20;

/// Cap on the product of candidate-set sizes for unpruned enumeration.
pub const DEFAULT_PRODUCT_LIMIT: u128 = 1_000_000;

// rank and chosen candidate index per slot
type Leaf = (usize, Vec<usize>);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MinrankError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("user {user}: {count} coefficient patterns exceed the candidate guard {guard}")]
    CandidateExplosion {
        user: usize,
        count: u128,
        guard: u128,
    },
    #[error("branch-and-bound exceeded {guard} nodes")]
    NodeGuard { guard: u64 },
    #[error("unpruned enumeration of {product} matrices exceeds the limit {limit}")]
    ProductTooLarge { product: u128, limit: u128 },
    #[error("oracle exceeded its budget of {budget} subsets at length {length}")]
    OracleBudget { length: usize, budget: u64 },
    #[error("oracle transmission pool exceeds {guard} vectors")]
    PoolTooLarge { guard: u128 },
}

/// Admissible vectors e_{d_i} + v_i for one user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub user: usize,
    pub vectors: Vec<GfVector>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn supports(&self) -> Vec<Vec<usize>> {
        self.vectors.iter().map(GfVector::support).collect()
    }
}

// All sorted subsets of `set`, ordered by size then lexicographically.
fn subsets_by_size(set: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u64..1 << set.len())
        .map(|mask| {
            set.iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect();
    out.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn sorted_with(mut s: Vec<usize>, x: usize) -> Vec<usize> {
    let pos = s.binary_search(&x).unwrap_or_else(|p| p);
    s.insert(pos, x);
    s
}

/// Candidate set of one user.
pub fn candidates_for_user(
    inst: &EicpInstance,
    user: usize,
    guard: u128,
) -> Result<CandidateSet, MinrankError> {
    let q = inst.q();
    let m = inst.num_messages();
    let k = inst.side_info(user);
    let d = inst.demand(user);
    let count = q.checked_pow(k.len() as u32).unwrap_or(u128::MAX);
    if count > guard {
        return Err(MinrankError::CandidateExplosion {
            user: user + 1,
            count,
            guard,
        });
    }
    let nonzero: Vec<u8> = q.elements().filter(|&a| a != 0).collect();
    let mut vectors = Vec::new();
    for s in subsets_by_size(k) {
        let support = sorted_with(s.clone(), d);
        if inst.holders_of(&support, Some(user)).next().is_none() {
            continue;
        }
        // odometer over nonzero coefficients on s
        let mut digits = vec![0usize; s.len()];
        loop {
            let mut v = GfVector::unit(q, m, d);
            for (&x, &dg) in s.iter().zip(&digits) {
                v.set(x, nonzero[dg] as i64);
            }
            vectors.push(v);
            let mut pos = digits.len();
            let mut done = true;
            while pos > 0 {
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < nonzero.len() {
                    done = false;
                    break;
                }
                digits[pos] = 0;
            }
            if done {
                break;
            }
        }
    }
    Ok(CandidateSet { user, vectors })
}

/// Candidate sets of every user, in user order.
pub fn build_candidates(inst: &EicpInstance) -> Result<Vec<CandidateSet>, MinrankError> {
    build_candidates_with(inst, DEFAULT_CANDIDATE_GUARD)
}

pub fn build_candidates_with(
    inst: &EicpInstance,
    guard: u128,
) -> Result<Vec<CandidateSet>, MinrankError> {
    (0..inst.num_users())
        .map(|u| candidates_for_user(inst, u, guard))
        .collect()
}

/// Supports {d_i} ∪ S with S ⊆ K_i that fit inside some other user's
/// out-neighborhood, read off the problem graph.
pub fn graph_candidate_supports(pg: &BipartiteProblemGraph) -> Vec<Vec<Vec<usize>>> {
    let g = pg.side_graph();
    (0..g.num_users())
        .map(|i| {
            let d = pg.user_in(i)[0];
            subsets_by_size(pg.user_out(i))
                .into_iter()
                .map(|s| sorted_with(s, d))
                .filter(|a| {
                    (0..g.num_users()).any(|j| j != i && a.iter().all(|&x| g.has_edge(j, x)))
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinrankOptions {
    pub parallel: bool,
    pub node_guard: u64,
    pub candidate_guard: u128,
}

impl Default for MinrankOptions {
    fn default() -> Self {
        MinrankOptions {
            parallel: false,
            node_guard: crate::node_guard(),
            candidate_guard: DEFAULT_CANDIDATE_GUARD,
        }
    }
}

impl MinrankOptions {
    pub fn parallel() -> Self {
        MinrankOptions {
            parallel: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinrankStats {
    pub nodes_explored: u64,
    pub candidate_sizes: Vec<usize>,
    pub candidates_total: usize,
    /// Number of distinct candidate vectors across users.
    pub candidates_distinct: usize,
    /// prod |C_i|.
    pub product_size: u128,
    /// q^{sum |K_i|}.
    pub bound_new_def: Option<u128>,
    /// q^{sum |K_i|^2} (q^{sum |K_i|} + 1).
    pub bound_old_def_pair: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinrankResult {
    pub kappa: usize,
    /// One chosen vector per user (in the order the users were given).
    pub witness: Vec<GfVector>,
    pub users: Vec<usize>,
    pub stats: MinrankStats,
}

#[derive(Serialize)]
struct MinrankJson<'a> {
    kappa: usize,
    witness: Vec<&'a [u8]>,
    stats: &'a MinrankStats,
}

impl MinrankResult {
    /// `{"kappa": .., "witness": [[..], ..], "stats": {..}}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(MinrankJson {
            kappa: self.kappa,
            witness: self.witness.iter().map(GfVector::coords).collect(),
            stats: &self.stats,
        })
        .expect("result serializes")
    }

    pub fn witness_matrix(&self) -> GfMatrix {
        let q = self
            .witness
            .first()
            .map_or(FieldOrder::BINARY, GfVector::field);
        let m = self.witness.first().map_or(0, GfVector::len);
        GfMatrix::from_rows(q, m, &self.witness).expect("witness rows agree")
    }
}

// A search slot: users sharing one candidate set.
struct Slot {
    users: Vec<usize>,
    vectors: Vec<GfVector>,
}

struct Search<'a> {
    slots: &'a [Slot],
    guard: u64,
    nodes: &'a AtomicU64,
    bound: &'a AtomicUsize,
}

#[derive(Clone)]
struct Node {
    depth: usize,
    basis: EchelonBasis,
    choice: Vec<usize>,
}

impl Search<'_> {
    fn tick(&self) -> Result<(), MinrankError> {
        if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.guard {
            return Err(MinrankError::NodeGuard { guard: self.guard });
        }
        Ok(())
    }

    fn first_in_span(&self, slot: usize, basis: &EchelonBasis) -> Option<usize> {
        self.slots[slot]
            .vectors
            .iter()
            .position(|v| basis.in_span(v).expect("dimensions agree"))
    }

    // Depth-first search below `node`. With `split`, nodes reaching that depth
    // are collected instead of explored.
    fn dfs(
        &self,
        node: &mut Node,
        best: &mut Option<Leaf>,
        split: Option<(usize, &mut Vec<Node>)>,
    ) -> Result<(), MinrankError> {
        self.tick()?;
        let r = node.basis.rank();
        if r >= self.bound.load(Ordering::Relaxed) {
            return Ok(());
        }
        let n = self.slots.len();
        let mut completion = Vec::new();
        for s in node.depth..n {
            match self.first_in_span(s, &node.basis) {
                Some(idx) => completion.push(idx),
                None => break,
            }
        }
        if node.depth + completion.len() == n {
            if self.bound.fetch_min(r, Ordering::Relaxed) > r {
                let mut choice = node.choice.clone();
                choice.extend(completion);
                *best = Some((r, choice));
            }
            return Ok(());
        }
        if r + 1 >= self.bound.load(Ordering::Relaxed) {
            return Ok(());
        }
        if let Some((depth, frontier)) = split {
            if node.depth == depth {
                frontier.push(node.clone());
                return Ok(());
            }
            return self.branch(
                node,
                best,
                Some((depth, frontier)),
                completion.first().copied(),
            );
        }
        self.branch(node, best, None, completion.first().copied())
    }

    fn branch(
        &self,
        node: &mut Node,
        best: &mut Option<Leaf>,
        mut split: Option<(usize, &mut Vec<Node>)>,
        in_span: Option<usize>,
    ) -> Result<(), MinrankError> {
        let slot = node.depth;
        if let Some(idx) = in_span {
            // a free choice dominates every alternative
            node.depth += 1;
            node.choice.push(idx);
            let res = self.dfs(node, best, split.as_mut().map(|(d, f)| (*d, &mut **f)));
            node.choice.pop();
            node.depth -= 1;
            return res;
        }
        for (idx, v) in self.slots[slot].vectors.iter().enumerate() {
            let (basis, _) = node.basis.inserted(v).expect("dimensions agree");
            let mut child = Node {
                depth: slot + 1,
                basis,
                choice: node.choice.clone(),
            };
            child.choice.push(idx);
            self.dfs(
                &mut child,
                best,
                split.as_mut().map(|(d, f)| (*d, &mut **f)),
            )?;
        }
        Ok(())
    }
}

fn make_slots(sets: &[CandidateSet]) -> Vec<Slot> {
    let mut slots: Vec<Slot> = Vec::new();
    for c in sets {
        match slots.iter_mut().find(|s| s.vectors == c.vectors) {
            Some(s) => s.users.push(c.user),
            None => slots.push(Slot {
                users: vec![c.user],
                vectors: c.vectors.clone(),
            }),
        }
    }
    slots.sort_by(|a, b| {
        a.vectors
            .len()
            .cmp(&b.vectors.len())
            .then(a.users[0].cmp(&b.users[0]))
    });
    slots
}

fn stats_for(inst: &EicpInstance, sets: &[CandidateSet], nodes: u64) -> MinrankStats {
    let sizes: Vec<usize> = sets.iter().map(CandidateSet::len).collect();
    let distinct: BTreeSet<&GfVector> = sets.iter().flat_map(|c| c.vectors.iter()).collect();
    let report = complexity_report_from(inst, &sizes);
    MinrankStats {
        nodes_explored: nodes,
        candidates_total: sizes.iter().sum(),
        candidates_distinct: distinct.len(),
        candidate_sizes: sizes,
        product_size: report.actual,
        bound_new_def: report.bound_new_def,
        bound_old_def_pair: report.old_def_total,
    }
}

fn complexity_report_from(inst: &EicpInstance, sizes: &[usize]) -> ComplexityReport {
    complexity::report_with_sizes(inst, sizes)
}

fn search_sets(
    inst: &EicpInstance,
    sets: Vec<CandidateSet>,
    opts: MinrankOptions,
) -> Result<MinrankResult, MinrankError> {
    let q = inst.q();
    let m = inst.num_messages();
    let slots = make_slots(&sets);
    let users: Vec<usize> = sets.iter().map(|c| c.user).collect();
    // e_{d_i} is always the first candidate
    let uniq = users
        .iter()
        .map(|&u| inst.demand(u))
        .collect::<BTreeSet<_>>()
        .len();
    let uncoded: Vec<usize> = vec![0; slots.len()];
    let nodes = AtomicU64::new(0);

    let run = |bound: usize| -> Result<Option<Leaf>, MinrankError> {
        let bound = AtomicUsize::new(bound);
        let search = Search {
            slots: &slots,
            guard: opts.node_guard,
            nodes: &nodes,
            bound: &bound,
        };
        let mut best = None;
        let mut root = Node {
            depth: 0,
            basis: EchelonBasis::new(q, m),
            choice: Vec::new(),
        };
        search.dfs(&mut root, &mut best, None)?;
        Ok(best)
    };

    let best = if opts.parallel && slots.len() > 1 {
        let bound = AtomicUsize::new(uniq);
        let search = Search {
            slots: &slots,
            guard: opts.node_guard,
            nodes: &nodes,
            bound: &bound,
        };
        let target = 4 * rayon::current_num_threads().max(1);
        let mut frontier = Vec::new();
        let mut seed_best = None;
        for depth in 1..=slots.len() {
            frontier.clear();
            seed_best = None;
            let mut root = Node {
                depth: 0,
                basis: EchelonBasis::new(q, m),
                choice: Vec::new(),
            };
            bound.store(uniq, Ordering::Relaxed);
            search.dfs(&mut root, &mut seed_best, Some((depth, &mut frontier)))?;
            if frontier.len() >= target {
                break;
            }
        }
        let results: Vec<Result<Option<Leaf>, MinrankError>> = frontier
            .into_par_iter()
            .map(|mut node| {
                let mut local = None;
                search.dfs(&mut node, &mut local, None)?;
                Ok(local)
            })
            .collect();
        for r in results {
            r?;
        }
        let kappa = bound.load(Ordering::Relaxed);
        let _ = seed_best;
        if kappa < uniq {
            // deterministic re-selection of the first optimal witness
            run(kappa + 1)?
        } else {
            None
        }
    } else {
        run(uniq)?
    };

    let (kappa, choice) = best.unwrap_or((uniq, uncoded));
    let mut witness = vec![GfVector::zero(q, m); sets.len()];
    for (slot, &idx) in slots.iter().zip(&choice) {
        for &u in &slot.users {
            let pos = users
                .iter()
                .position(|&x| x == u)
                .expect("slot user listed");
            witness[pos] = slot.vectors[idx].clone();
        }
    }
    let stats = stats_for(inst, &sets, nodes.load(Ordering::Relaxed));
    Ok(MinrankResult {
        kappa,
        witness,
        users,
        stats,
    })
}

/// Exact minrank by branch-and-bound over the candidate sets.
pub fn minrank_bnb(
    inst: &EicpInstance,
    opts: MinrankOptions,
) -> Result<MinrankResult, MinrankError> {
    let users: Vec<usize> = (0..inst.num_users()).collect();
    minrank_bnb_for_users(inst, &users, opts)
}

/// Minimum rank of one admissible vector per listed user (0-based); other
/// users still count as transmitters.
pub fn minrank_bnb_for_users(
    inst: &EicpInstance,
    users: &[usize],
    opts: MinrankOptions,
) -> Result<MinrankResult, MinrankError> {
    let sets = users
        .iter()
        .map(|&u| candidates_for_user(inst, u, opts.candidate_guard))
        .collect::<Result<Vec<_>, _>>()?;
    search_sets(inst, sets, opts)
}

/// Every stacked matrix (row i = user i's choice), last user varying
/// fastest.
pub fn stacked_matrices(inst: &EicpInstance, limit: u128) -> Result<Vec<GfMatrix>, MinrankError> {
    let sets = build_candidates(inst)?;
    let product = sets
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    if product > limit {
        return Err(MinrankError::ProductTooLarge { product, limit });
    }
    let q = inst.q();
    let m = inst.num_messages();
    let mut out = Vec::with_capacity(product as usize);
    let mut digits = vec![0usize; sets.len()];
    loop {
        let rows: Vec<GfVector> = sets
            .iter()
            .zip(&digits)
            .map(|(c, &d)| c.vectors[d].clone())
            .collect();
        out.push(GfMatrix::from_rows(q, m, &rows)?);
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < sets[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveOutcome {
    pub kappa: usize,
    pub evaluations: u128,
    pub witness: GfMatrix,
}

/// Minimum rank over the full product of candidate sets, no pruning.
pub fn minrank_exhaustive(
    inst: &EicpInstance,
    limit: u128,
) -> Result<ExhaustiveOutcome, MinrankError> {
    let mats = stacked_matrices(inst, limit)?;
    let evaluations = mats.len() as u128;
    let (kappa, witness) = mats
        .into_iter()
        .map(|w| (w.rank(), w))
        .min_by_key(|(r, _)| *r)
        .expect("product is nonempty");
    Ok(ExhaustiveOutcome {
        kappa,
        evaluations,
        witness,
    })
}

/// Code of length kappa: each first-seen independent witness row is sent by
/// the smallest-index eligible user other than its owner.
pub fn extract_code(result: &MinrankResult, inst: &EicpInstance) -> EmbeddedIndexCode {
    let q = inst.q();
    let m = inst.num_messages();
    let mut basis = EchelonBasis::new(q, m);
    let mut transmissions = Vec::new();
    for (&owner, v) in result.users.iter().zip(&result.witness) {
        if basis.insert(v).expect("dimensions agree") {
            let t = eligible_transmitter(inst, &v.support(), Some(owner))
                .expect("candidates have a transmitter");
            transmissions.push(Transmission::new(t, v.clone()));
        }
    }
    EmbeddedIndexCode::new(q, m, transmissions).expect("witness rows are nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::codes::verify_code;

    #[test]
    fn example_two_candidates() {
        let inst = catalog::example_2();
        let sets = build_candidates(&inst).unwrap();
        let sizes: Vec<usize> = sets.iter().map(CandidateSet::len).collect();
        assert_eq!(sizes, vec![3, 3, 1, 1]);
        assert_eq!(sets[0].supports(), vec![vec![0], vec![0, 1], vec![0, 2]]);
        assert!(sets
            .iter()
            .all(|c| c.vectors[0] == GfVector::unit(inst.q(), 4, inst.demand(c.user))));
    }

    #[test]
    fn example_one_user_three() {
        let inst = catalog::example_1();
        let c = candidates_for_user(&inst, 2, DEFAULT_CANDIDATE_GUARD).unwrap();
        assert_eq!(c.supports(), vec![vec![0], vec![0, 1]]);
    }

    #[test]
    fn kappa_of_examples() {
        for parallel in [false, true] {
            let opts = MinrankOptions {
                parallel,
                ..MinrankOptions::default()
            };
            let r1 = minrank_bnb(&catalog::example_1(), opts).unwrap();
            assert_eq!(r1.kappa, 3);
            assert_eq!(r1.witness_matrix().rank(), 3);
            let r2 = minrank_bnb(&catalog::example_2(), opts).unwrap();
            assert_eq!(r2.kappa, 3);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let q = FieldOrder::BINARY;
        for seed in 0..40 {
            let inst = crate::model::gen_random(6, 6, q, 0.5, seed).unwrap();
            let a = minrank_bnb(&inst, MinrankOptions::default()).unwrap();
            let b = minrank_bnb(&inst, MinrankOptions::parallel()).unwrap();
            assert_eq!(a.kappa, b.kappa);
            assert_eq!(a.witness, b.witness, "{inst}");
        }
    }

    #[test]
    fn extracted_codes_verify() {
        for inst in [
            catalog::example_1(),
            catalog::example_2(),
            catalog::example_3(),
        ] {
            let r = minrank_bnb(&inst, MinrankOptions::default()).unwrap();
            let code = extract_code(&r, &inst);
            assert_eq!(code.len(), r.kappa);
            assert!(verify_code(&code, &inst).unwrap().overall, "{inst}");
        }
        let e2 = catalog::example_2();
        let r = minrank_bnb(&e2, MinrankOptions::default()).unwrap();
        assert_eq!(r.witness[0], r.witness[1]);
        assert_eq!(r.witness[0].support(), vec![0, 1]);
    }

    #[test]
    fn guards_fail_loudly() {
        let inst = catalog::example_3();
        assert!(matches!(
            build_candidates_with(&inst, 16),
            Err(MinrankError::CandidateExplosion {
                user: 7,
                count: 64,
                ..
            })
        ));
        let tight = MinrankOptions {
            node_guard: 1,
            ..MinrankOptions::default()
        };
        assert!(matches!(
            minrank_bnb(&catalog::example_1(), tight),
            Err(MinrankError::NodeGuard { guard: 1 })
        ));
        assert!(matches!(
            minrank_exhaustive(&inst, 10),
            Err(MinrankError::ProductTooLarge { .. })
        ));
    }

    #[test]
    fn graph_supports_match_candidates() {
        for inst in [
            catalog::example_1(),
            catalog::example_2(),
            catalog::example_3(),
        ] {
            let pg = BipartiteProblemGraph::from_instance(&inst);
            let fam = graph_candidate_supports(&pg);
            let sets = build_candidates(&inst).unwrap();
            for (f, c) in fam.iter().zip(&sets) {
                assert_eq!(f, &c.supports());
            }
        }
        let e2 = BipartiteProblemGraph::from_instance(&catalog::example_2());
        assert_eq!(
            graph_candidate_supports(&e2)[0],
            vec![vec![0], vec![0, 1], vec![0, 2]]
        );
    }

    #[test]
    fn result_json_shape() {
        let r = minrank_bnb(&catalog::example_1(), MinrankOptions::default()).unwrap();
        let v = r.to_json();
        assert_eq!(v["kappa"], 3);
        assert_eq!(v["witness"].as_array().unwrap().len(), 4);
        assert!(v["stats"]["nodes_explored"].as_u64().unwrap() > 0);
    }
}
