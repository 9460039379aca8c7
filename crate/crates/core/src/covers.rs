//! Tree-cover and bi-clique-cover transmission schemes for single unicast
//! instances.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CodeFile, EmbeddedIndexCode, Transmission};
use crate::gf::GfVector;
use crate::graphs::{
    all_bicliques, search_covered_pairs, search_regular_trees, search_single_edges, GraphError,
    SideInfoBipartiteGraph, StructureKind, StructureWitness, DEFAULT_N_MAX,
};
use crate::minrank::{
    minrank_bnb, minrank_oracle, MinrankError, MinrankOptions, DEFAULT_ORACLE_BUDGET,
};
use crate::model::{classify, EicpInstance};

/// Largest N for the exhaustive cover search.
pub const EXACT_COVER_MAX: usize = 8;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("cover schemes need a single unicast instance (M = N, distinct demands)")]
    NotSingleUnicast,
    #[error("message {message} has no holder besides its demander")]
    Uncoverable { message: usize },
    #[error("exact cover limited to N <= {max} (got {n})")]
    TooLargeForExact { n: usize, max: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Minrank(#[from] MinrankError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Tree,
    Biclique,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverCounts {
    /// Structures in the cover.
    #[serde(rename = "K")]
    pub k: usize,
    /// Single-edge structures.
    #[serde(rename = "K_e")]
    pub k_e: usize,
    pub length: usize,
}

/// Informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverFlags {
    /// Every bi-clique of size >= 2 in the cover has a covering user.
    pub all_bicliques_covered: Option<bool>,
    /// Every user decodes from one transmission plus its side information.
    pub task_based: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverPlan {
    pub scheme: Scheme,
    pub structures: Vec<StructureWitness>,
    pub code: EmbeddedIndexCode,
    pub counts: CoverCounts,
    pub flags: CoverFlags,
}

#[derive(Serialize)]
struct PlanJson {
    scheme: Scheme,
    structures: Vec<StructureWitness>,
    code: CodeFile,
    counts: CoverCounts,
    flags: CoverFlags,
}

impl CoverPlan {
    /// JSON with 1-based indices.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PlanJson {
            scheme: self.scheme,
            structures: self
                .structures
                .iter()
                .map(StructureWitness::one_based)
                .collect(),
            code: CodeFile::from_code(&self.code),
            counts: self.counts,
            flags: self.flags,
        })
        .expect("plan serializes")
    }
}

// Instance with message j renamed to the index of the user demanding it.
struct Relabeled {
    graph: SideInfoBipartiteGraph,
    identity: Vec<usize>,
    // relabeled message -> original message
    msg_map: Vec<usize>,
}

fn relabel(inst: &EicpInstance) -> Result<Relabeled, CoverError> {
    if !classify(inst).single_unicast {
        return Err(CoverError::NotSingleUnicast);
    }
    let n = inst.num_users();
    let mut demander = vec![0; n];
    for (u, &d) in inst.demands().iter().enumerate() {
        demander[d] = u;
    }
    let side: Vec<Vec<usize>> = inst
        .all_side_info()
        .iter()
        .map(|k| k.iter().map(|&x| demander[x]).collect())
        .collect();
    Ok(Relabeled {
        graph: SideInfoBipartiteGraph::from_side_info(n, &side),
        identity: (0..n).collect(),
        msg_map: inst.demands().to_vec(),
    })
}

fn mask_of(w: &StructureWitness) -> u32 {
    w.messages.iter().fold(0, |m, &x| m | 1 << x)
}

// (length, count), last structure index, mask before it
type CoverState = ((usize, usize), usize, u32);

// Minimum (length, count) exact cover of all n messages, first-found on ties.
fn exact_cover(n: usize, candidates: &[StructureWitness]) -> Option<Vec<usize>> {
    let full = (1u32 << n) - 1;
    let masks: Vec<u32> = candidates.iter().map(mask_of).collect();
    let mut best: Vec<Option<CoverState>> = vec![None; 1 << n];
    best[0] = Some(((0, 0), usize::MAX, 0));
    for mask in 0..full {
        let Some(((len, k), _, _)) = best[mask as usize] else {
            continue;
        };
        let low = (!mask).trailing_zeros();
        for (i, (&s, w)) in masks.iter().zip(candidates).enumerate() {
            if s & (1 << low) == 0 || s & mask != 0 {
                continue;
            }
            let next = (mask | s) as usize;
            let score = (len + w.cost(), k + 1);
            if best[next].is_none_or(|(b, _, _)| score < b) {
                best[next] = Some((score, i, mask));
            }
        }
    }
    let mut picks = Vec::new();
    let mut cur = full;
    while cur != 0 {
        let (_, i, prev) = best[cur as usize]?;
        picks.push(i);
        cur = prev;
    }
    picks.reverse();
    Some(picks)
}

fn greedy_cover(candidates: &[StructureWitness]) -> Vec<usize> {
    let mut used = BTreeSet::new();
    let mut picks = Vec::new();
    for (i, w) in candidates.iter().enumerate() {
        if w.messages.iter().all(|x| !used.contains(x)) {
            used.extend(w.messages.iter().copied());
            picks.push(i);
        }
    }
    picks
}

fn structure_code(w: &StructureWitness, q: crate::gf::FieldOrder, n: usize) -> Vec<Transmission> {
    let b = &w.messages;
    let sum = |xs: &[usize]| GfVector::indicator(q, n, xs);
    match w.kind {
        StructureKind::SingleEdge => vec![Transmission::new(
            w.covering_user.expect("single edges name a transmitter"),
            sum(&[b[0]]),
        )],
        StructureKind::CoveredPair => vec![Transmission::new(
            w.covering_user.expect("covered pairs name a covering user"),
            sum(b),
        )],
        StructureKind::RegularTree => {
            let k = b.len();
            (0..k - 1)
                .map(|i| Transmission::new(w.users[i], sum(&[b[(i + 1) % k], b[(i + 2) % k]])))
                .collect()
        }
        StructureKind::BiClique => match w.covering_user {
            Some(t) if w.covered => vec![Transmission::new(t, sum(b))],
            _ => vec![
                Transmission::new(w.users[0], sum(&b[1..])),
                Transmission::new(w.users[1], sum(&[b[0]])),
            ],
        },
    }
}

fn task_based(code: &EmbeddedIndexCode, inst: &EicpInstance) -> bool {
    (0..inst.num_users()).all(|u| {
        code.transmissions().iter().any(|t| {
            let single = code
                .with_transmissions(vec![t.clone()])
                .expect("same shape");
            crate::codes::can_decode(&single, inst, u)
        })
    })
}

fn finish(
    inst: &EicpInstance,
    rel: &Relabeled,
    scheme: Scheme,
    chosen: Vec<StructureWitness>,
) -> CoverPlan {
    let q = inst.q();
    let n = inst.num_users();
    let mut transmissions = Vec::new();
    for w in &chosen {
        for t in structure_code(w, q, n) {
            // relabeled coordinate j is original message msg_map[j]
            let mut coeffs = GfVector::zero(q, n);
            for j in t.coeffs.support() {
                coeffs.set(rel.msg_map[j], t.coeffs.get(j) as i64);
            }
            transmissions.push(Transmission::new(t.transmitter, coeffs));
        }
    }
    let code = EmbeddedIndexCode::new(q, n, transmissions).expect("structure codes are nonzero");
    let user_map: Vec<usize> = (0..n).collect();
    let structures: Vec<StructureWitness> = chosen
        .iter()
        .map(|w| w.relabeled(&user_map, &rel.msg_map))
        .collect();
    let k = structures.len();
    let k_e = structures
        .iter()
        .filter(|w| w.kind == StructureKind::SingleEdge)
        .count();
    let bicliques: Vec<&StructureWitness> = structures
        .iter()
        .filter(|w| w.kind == StructureKind::BiClique)
        .collect();
    let flags = CoverFlags {
        all_bicliques_covered: (scheme == Scheme::Biclique)
            .then(|| bicliques.iter().all(|w| w.covered)),
        task_based: task_based(&code, inst),
    };
    CoverPlan {
        scheme,
        counts: CoverCounts {
            k,
            k_e,
            length: code.len(),
        },
        structures,
        code,
        flags,
    }
}

fn singles(rel: &Relabeled) -> Result<Vec<StructureWitness>, CoverError> {
    let s = search_single_edges(&rel.graph, &rel.identity, &rel.identity);
    if s.len() < rel.identity.len() {
        let covered: BTreeSet<usize> = s.iter().map(|w| w.messages[0]).collect();
        let j = (0..rel.identity.len())
            .find(|j| !covered.contains(j))
            .unwrap();
        return Err(CoverError::Uncoverable {
            message: rel.msg_map[j] + 1,
        });
    }
    Ok(s)
}

fn select(
    n: usize,
    exact: bool,
    candidates: Vec<StructureWitness>,
) -> Result<Vec<StructureWitness>, CoverError> {
    let picks = if exact {
        if n > EXACT_COVER_MAX {
            return Err(CoverError::TooLargeForExact {
                n,
                max: EXACT_COVER_MAX,
            });
        }
        exact_cover(n, &candidates).expect("single edges always complete a cover")
    } else {
        greedy_cover(&candidates)
    };
    let mut chosen: Vec<StructureWitness> =
        picks.into_iter().map(|i| candidates[i].clone()).collect();
    chosen.sort_by(|a, b| {
        b.size()
            .cmp(&a.size())
            .then_with(|| a.sorted_messages().cmp(&b.sorted_messages()))
    });
    Ok(chosen)
}

/// Cover by regular trees, covered pairs and single edges.
///
/// Every structure other than a single edge saves exactly one transmission,
/// so the greedy mode takes small structures first to fit in as many as
/// possible; `exact` minimizes the length by dynamic programming.
pub fn tree_cover(inst: &EicpInstance, exact: bool) -> Result<CoverPlan, CoverError> {
    let rel = relabel(inst)?;
    let n = inst.num_users();
    let n_max = if exact { n } else { n.min(DEFAULT_N_MAX) };
    let mut trees = search_regular_trees(
        &rel.graph,
        &rel.identity,
        &rel.identity,
        n_max,
        crate::node_guard(),
    )?;
    let mut candidates = search_covered_pairs(&rel.graph, &rel.identity, &rel.identity);
    // smallest trees first, lexicographic within a size
    trees.sort_by(|a, b| {
        a.size()
            .cmp(&b.size())
            .then_with(|| a.sorted_messages().cmp(&b.sorted_messages()))
    });
    candidates.extend(trees);
    candidates.extend(singles(&rel)?);
    let chosen = select(n, exact, candidates)?;
    Ok(finish(inst, &rel, Scheme::Tree, chosen))
}

/// Cover by bi-cliques (covered ones cost one transmission, others two) and
/// single edges. Greedy mode takes the largest bi-clique first, covered
/// before uncovered; `exact` minimizes the length.
pub fn biclique_cover(inst: &EicpInstance, exact: bool) -> Result<CoverPlan, CoverError> {
    let rel = relabel(inst)?;
    let n = inst.num_users();
    let n_max = if exact { n } else { n.min(DEFAULT_N_MAX) };
    let mut candidates = all_bicliques(
        &rel.graph,
        &rel.identity,
        &rel.identity,
        n_max,
        crate::node_guard(),
    )?;
    candidates.sort_by(|a, b| {
        b.size()
            .cmp(&a.size())
            .then(b.covered.cmp(&a.covered))
            .then_with(|| a.sorted_messages().cmp(&b.sorted_messages()))
    });
    candidates.extend(singles(&rel)?);
    let chosen = select(n, exact, candidates)?;
    Ok(finish(inst, &rel, Scheme::Biclique, chosen))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeComparison {
    pub tree_len: usize,
    pub biclique_len: usize,
    pub kappa: usize,
    /// Shortest code found by the oracle, when it finished within budget.
    pub oracle_len: Option<usize>,
    /// kappa <= min(tree_len, biclique_len).
    pub kappa_within_schemes: bool,
}

/// Both covers (exact when N allows) beside the minrank and the oracle.
pub fn compare_schemes(inst: &EicpInstance) -> Result<SchemeComparison, CoverError> {
    let exact = inst.num_users() <= EXACT_COVER_MAX;
    let tree_len = tree_cover(inst, exact)?.counts.length;
    let biclique_len = biclique_cover(inst, exact)?.counts.length;
    let kappa = minrank_bnb(inst, MinrankOptions::default())?.kappa;
    let best = tree_len.min(biclique_len);
    let oracle_len = minrank_oracle(inst, best, DEFAULT_ORACLE_BUDGET)
        .ok()
        .filter(|o| o.found)
        .map(|o| o.length);
    Ok(SchemeComparison {
        tree_len,
        biclique_len,
        kappa,
        oracle_len,
        kappa_within_schemes: kappa <= best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::codes::verify_code;
    use crate::gf::FieldOrder;
    use crate::graphs::verify_structure;

    fn check(plan: &CoverPlan, inst: &EicpInstance) {
        assert!(verify_code(&plan.code, inst).unwrap().overall, "{inst}");
        let g = SideInfoBipartiteGraph::from_instance(inst);
        let mut seen = BTreeSet::new();
        for w in &plan.structures {
            assert!(verify_structure(&g, w), "{w:?}");
            for &x in &w.messages {
                assert!(seen.insert(x));
            }
        }
        assert_eq!(seen.len(), inst.num_messages());
        let n = inst.num_users();
        match plan.scheme {
            Scheme::Tree => assert_eq!(plan.counts.length, n - plan.counts.k + plan.counts.k_e),
            Scheme::Biclique => {
                let sum: usize = plan.structures.iter().map(|w| w.cost()).sum();
                assert_eq!(plan.counts.length, sum);
                assert!(plan.counts.k <= sum && sum <= 2 * plan.counts.k);
            }
        }
    }

    #[test]
    fn tree_t44() {
        let inst = catalog::regular_tree(4, FieldOrder::BINARY);
        for exact in [false, true] {
            let plan = tree_cover(&inst, exact).unwrap();
            check(&plan, &inst);
            assert_eq!(plan.counts.length, 3);
        }
        let plan = tree_cover(&inst, true).unwrap();
        let sent: Vec<Vec<usize>> = plan
            .code
            .transmissions()
            .iter()
            .map(|t| t.coeffs.support())
            .collect();
        assert_eq!(sent, vec![vec![1, 2], vec![2, 3], vec![0, 3]]);
        assert!(!plan.flags.task_based);
    }

    #[test]
    fn example_three() {
        let inst = catalog::example_3();
        let tree = tree_cover(&inst, true).unwrap();
        check(&tree, &inst);
        assert_eq!(tree.counts.length, 4);
        assert_eq!(tree.counts.k, 3);
        let greedy = tree_cover(&inst, false).unwrap();
        check(&greedy, &inst);
        assert_eq!(greedy.counts.length, 4);
        for exact in [false, true] {
            let bc = biclique_cover(&inst, exact).unwrap();
            check(&bc, &inst);
            assert_eq!(bc.counts.length, 3);
            assert_eq!(bc.counts.k, 2);
            assert_eq!(bc.flags.all_bicliques_covered, Some(false));
            assert!(bc.flags.task_based);
        }
        let cmp = compare_schemes(&inst).unwrap();
        assert_eq!((cmp.tree_len, cmp.biclique_len, cmp.kappa), (4, 3, 3));
        assert_eq!(cmp.oracle_len, Some(3));
    }

    #[test]
    fn bicliques_cost() {
        let q = FieldOrder::BINARY;
        let covered = catalog::biclique(4, true, q);
        let plan = biclique_cover(&covered, true).unwrap();
        check(&plan, &covered);
        // the extra demand of the covering user costs one more
        assert_eq!(plan.counts.length, 2);
        assert_eq!(plan.structures[0].size(), 4);
        assert!(plan.structures[0].covered);
        assert_eq!(plan.structures[0].cost(), 1);

        let bare = catalog::biclique(4, false, q);
        let plan = biclique_cover(&bare, false).unwrap();
        check(&plan, &bare);
        assert_eq!(plan.counts.length, 2);
        let sent: Vec<Vec<usize>> = plan
            .code
            .transmissions()
            .iter()
            .map(|t| t.coeffs.support())
            .collect();
        assert_eq!(sent, vec![vec![1, 2, 3], vec![0]]);
    }

    #[test]
    fn no_pairs_means_uncoded() {
        let inst = EicpInstance::from_one_based(2, 3, &[&[2], &[3], &[1]], &[1, 2, 3]).unwrap();
        for exact in [false, true] {
            let t = tree_cover(&inst, exact).unwrap();
            check(&t, &inst);
            assert_eq!((t.counts.length, t.counts.k, t.counts.k_e), (3, 3, 3));
            let b = biclique_cover(&inst, exact).unwrap();
            check(&b, &inst);
            assert_eq!(b.counts.length, 3);
        }
    }

    #[test]
    fn permuted_demands_relabel() {
        let inst = catalog::example_3();
        // same graph, demands rotated
        let perm: Vec<usize> = vec![1, 2, 3, 0, 5, 6, 4];
        let side: Vec<Vec<usize>> = inst
            .all_side_info()
            .iter()
            .map(|k| k.iter().map(|&x| perm[x]).collect())
            .collect();
        let moved = EicpInstance::new(inst.q(), 7, side, perm.clone()).unwrap();
        let t = tree_cover(&moved, true).unwrap();
        check(&t, &moved);
        assert_eq!(t.counts.length, 4);
        let b = biclique_cover(&moved, true).unwrap();
        check(&b, &moved);
        assert_eq!(b.counts.length, 3);
    }

    #[test]
    fn rejects_non_unicast() {
        assert!(matches!(
            tree_cover(
                &catalog::example_1().with_demands(vec![1, 3, 0, 0]).unwrap(),
                false
            ),
            Err(CoverError::NotSingleUnicast)
        ));
    }

    #[test]
    fn plan_json() {
        let plan = biclique_cover(&catalog::example_3(), true).unwrap();
        let v = plan.to_json();
        assert_eq!(v["counts"]["length"], 3);
        assert_eq!(v["counts"]["K"], 2);
        assert_eq!(v["structures"][0]["kind"], "biclique");
        assert_eq!(
            v["structures"][0]["messages"],
            serde_json::json!([1, 2, 3, 4])
        );
    }
}
