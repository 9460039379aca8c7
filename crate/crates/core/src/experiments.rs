//! Reproducible experiment drivers. Each returns a tabular report with a
//! pass/fail verdict and, on failure, the first counterexample instance.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog;
use crate::codes::verify_code;
use crate::covers::{biclique_cover, tree_cover, CoverError, EXACT_COVER_MAX};
use crate::gf::FieldOrder;
use crate::graphs::{canonical_form, prune_degree_one, uniq_demanded, SideInfoBipartiteGraph};
use crate::minrank::{
    minrank_bnb, minrank_bnb_for_users, minrank_oracle, minrank_oracle_for_users, MinrankError,
    MinrankOptions, DEFAULT_ORACLE_BUDGET,
};
use crate::model::{
    enumerate_demands, gen_random, validate, EicpInstance, InstanceFile, ModelError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Minrank(#[from] MinrankError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] crate::graphs::GraphError),
    #[error("{0}")]
    Parameter(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub reason: String,
    pub instance: InstanceFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn new(name: &str, parameters: &[(&str, String)], columns: &[&str]) -> Self {
        ExperimentReport {
            name: name.to_string(),
            parameters: parameters
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            verdict: Verdict {
                pass: true,
                counterexample: None,
            },
            notes: Vec::new(),
        }
    }

    fn fail(&mut self, reason: String, inst: &EicpInstance) {
        if self.verdict.pass {
            self.verdict.counterexample = Some(Counterexample {
                reason,
                instance: InstanceFile::from_instance(inst),
            });
        }
        self.verdict.pass = false;
    }

    /// Header line, one line per row, then `#` comment lines for the
    /// verdict and notes.
    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out.push_str(&format!(
            "# verdict\t{}\n",
            if self.verdict.pass { "pass" } else { "fail" }
        ));
        if let Some(c) = &self.verdict.counterexample {
            out.push_str(&format!("# counterexample\t{}\n", c.reason));
            out.push_str(&format!(
                "# instance\t{}\n",
                serde_json::to_string(&c.instance).expect("instance serializes")
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("# note\t{n}\n"));
        }
        out
    }
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tsv())
    }
}

fn side_info_text(side: &[Vec<usize>]) -> String {
    let parts: Vec<String> = side
        .iter()
        .map(|k| {
            let k: Vec<String> = k.iter().map(|x| (x + 1).to_string()).collect();
            format!("{{{}}}", k.join(","))
        })
        .collect();
    parts.join(" ")
}

/// Side-information graphs on N users and M messages where every message is
/// held, nobody holds everything and no message is everywhere, one per
/// isomorphism class, in canonical order.
pub fn side_info_classes(
    n: usize,
    m: usize,
) -> Result<Vec<SideInfoBipartiteGraph>, ExperimentError> {
    if n * m > 20 {
        return Err(ExperimentError::Parameter(format!(
            "exhaustive enumeration limited to N*M <= 20 (got {n}x{m})"
        )));
    }
    let mut classes: BTreeMap<Vec<u8>, SideInfoBipartiteGraph> = BTreeMap::new();
    for bits in 0u64..1 << (n * m) {
        let side: Vec<Vec<usize>> = (0..n)
            .map(|u| (0..m).filter(|x| bits >> (u * m + x) & 1 == 1).collect())
            .collect();
        let g = SideInfoBipartiteGraph::from_side_info(m, &side);
        let ok = (0..m).all(|x| g.message_degree(x) > 0 && g.message_degree(x) < n)
            && (0..n).all(|u| g.user_degree(u) < m);
        if !ok {
            continue;
        }
        let key = canonical_form(&g, 8)?;
        classes.entry(key).or_insert(g);
    }
    Ok(classes.into_values().collect())
}

// Valid instances over `g`, one per demand vector, in lexicographic order.
fn instances_over(
    g: &SideInfoBipartiteGraph,
    q: FieldOrder,
) -> Result<Vec<EicpInstance>, ExperimentError> {
    let m = g.num_messages();
    let mut out = Vec::new();
    for d in enumerate_demands(g.side_info(), m, crate::model::DEFAULT_DEMAND_GUARD)? {
        let inst = EicpInstance::new(q, m, g.side_info().to_vec(), d)?;
        if validate(&inst).is_valid() {
            out.push(inst);
        }
    }
    Ok(out)
}

/// All N = M = 3 side-information classes: connectivity against whether some
/// demand with all three messages requested admits fewer than three
/// transmissions.
pub fn fig5() -> Result<ExperimentReport, ExperimentError> {
    let q = FieldOrder::BINARY;
    let mut report = ExperimentReport::new(
        "fig5",
        &[("N", "3".into()), ("M", "3".into()), ("q", "2".into())],
        &[
            "class",
            "side_info",
            "connected",
            "demands",
            "min_kappa",
            "min_oracle",
        ],
    );
    let classes = side_info_classes(3, 3)?;
    let mut connected_count = 0;
    for (idx, g) in classes.iter().enumerate() {
        let connected = g.is_connected();
        connected_count += usize::from(connected);
        let mut min_kappa = usize::MAX;
        let mut min_oracle = usize::MAX;
        let mut count = 0;
        let mut first = None;
        for inst in instances_over(g, q)? {
            if inst.uniq_demands() != 3 {
                continue;
            }
            count += 1;
            let kappa = minrank_bnb(&inst, MinrankOptions::default())?.kappa;
            let oracle = minrank_oracle(&inst, 3, DEFAULT_ORACLE_BUDGET)?.length;
            if kappa < min_kappa {
                min_kappa = kappa;
                first = Some(inst.clone());
            }
            min_oracle = min_oracle.min(oracle);
        }
        let gain = min_kappa < 3;
        if gain != connected {
            let inst = first.expect("class has a uniq-3 demand");
            report.fail(
                format!(
                    "class {} connected={connected} but min kappa {min_kappa}",
                    idx + 1
                ),
                &inst,
            );
        }
        let show = |v: usize| {
            if v == usize::MAX {
                "-".to_string()
            } else {
                v.to_string()
            }
        };
        report.rows.push(vec![
            (idx + 1).to_string(),
            side_info_text(g.side_info()),
            connected.to_string(),
            count.to_string(),
            show(min_kappa),
            show(min_oracle),
        ]);
    }
    report.notes.push(format!(
        "{} classes, {} connected (empty side information allowed)",
        classes.len(),
        connected_count
    ));
    if classes.len() != 8 || connected_count != 2 {
        report.verdict.pass = false;
    }
    Ok(report)
}

#[derive(Debug, Clone, Default)]
struct ScanTally {
    checked: usize,
    hypothesis_holds: usize,
    violations: usize,
    all_demanded_checked: usize,
    all_demanded_violations: usize,
    oracle_violations: usize,
    non_necessity: usize,
    first_violation: Option<(String, EicpInstance)>,
    first_oracle_violation: Option<EicpInstance>,
    first_non_necessity: Option<EicpInstance>,
}

impl ScanTally {
    fn absorb(&mut self, other: ScanTally) {
        self.checked += other.checked;
        self.hypothesis_holds += other.hypothesis_holds;
        self.violations += other.violations;
        self.all_demanded_checked += other.all_demanded_checked;
        self.all_demanded_violations += other.all_demanded_violations;
        self.oracle_violations += other.oracle_violations;
        self.non_necessity += other.non_necessity;
        if self.first_violation.is_none() {
            self.first_violation = other.first_violation;
        }
        if self.first_oracle_violation.is_none() {
            self.first_oracle_violation = other.first_oracle_violation;
        }
        if self.first_non_necessity.is_none() {
            self.first_non_necessity = other.first_non_necessity;
        }
    }
}

fn scan_instance(inst: &EicpInstance, connected: bool) -> Result<ScanTally, ExperimentError> {
    let mut t = ScanTally {
        checked: 1,
        ..ScanTally::default()
    };
    let g = SideInfoBipartiteGraph::from_instance(inst);
    let pruned = prune_degree_one(&g);
    let uniq = inst.uniq_demands();
    let hypothesis = uniq_demanded(inst.demands(), pruned.x_prime()) == pruned.x_prime().len();
    let all_demanded = uniq == inst.num_messages();
    if !(connected && (hypothesis || all_demanded)) && connected {
        return Ok(t);
    }
    let kappa = minrank_bnb(inst, MinrankOptions::default())?.kappa;
    if !connected {
        if kappa < uniq {
            t.non_necessity = 1;
            t.first_non_necessity = Some(inst.clone());
        }
        return Ok(t);
    }
    let oracle = minrank_oracle(inst, uniq, DEFAULT_ORACLE_BUDGET)?.length;
    if hypothesis {
        t.hypothesis_holds = 1;
        if kappa >= uniq {
            t.violations = 1;
            t.first_violation = Some((
                format!(
                    "connected, uniq(d on X') = |X'| = {}, kappa = {kappa} >= uniq(d) = {uniq} (shortest code {oracle})",
                    pruned.x_prime().len()
                ),
                inst.clone(),
            ));
        }
        if oracle >= uniq {
            t.oracle_violations = 1;
            t.first_oracle_violation = Some(inst.clone());
        }
    }
    if all_demanded {
        t.all_demanded_checked = 1;
        if kappa >= inst.num_messages() {
            t.all_demanded_violations = 1;
            if t.first_violation.is_none() {
                t.first_violation = Some((
                    format!(
                        "connected, all {} messages demanded, kappa = {kappa} (shortest code {oracle})",
                        inst.num_messages()
                    ),
                    inst.clone(),
                ));
            }
        }
    }
    Ok(t)
}

/// Checks kappa < uniq(d) on connected side-information graphs whenever every
/// message of X' is demanded, and kappa < M whenever all M messages are
/// demanded. Exhaustive over isomorphism classes when N, M <= 4; otherwise
/// `samples` random instances per (N, M).
pub fn theorem2(
    n_max: usize,
    m_max: usize,
    q: FieldOrder,
    samples: usize,
    seed: u64,
) -> Result<ExperimentReport, ExperimentError> {
    let exhaustive = n_max <= 4 && m_max <= 4;
    let mut report = ExperimentReport::new(
        "theorem2",
        &[
            ("N_max", n_max.to_string()),
            ("M_max", m_max.to_string()),
            ("q", q.get().to_string()),
            (
                "mode",
                if exhaustive { "exhaustive" } else { "sampled" }.into(),
            ),
            ("samples", samples.to_string()),
            ("seed", seed.to_string()),
        ],
        &[
            "N",
            "M",
            "classes",
            "instances",
            "hypothesis_holds",
            "violations",
            "all_demanded_checked",
            "all_demanded_violations",
            "shortest_code_violations",
            "disconnected_with_gain",
        ],
    );
    let mut total = ScanTally::default();
    for n in 2..=n_max {
        for m in 2..=m_max {
            let (classes, instances): (usize, Vec<(EicpInstance, bool)>) = if exhaustive {
                let classes = side_info_classes(n, m)?;
                let mut all = Vec::new();
                for g in &classes {
                    let connected = g.is_connected();
                    for inst in instances_over(g, q)? {
                        all.push((inst, connected));
                    }
                }
                (classes.len(), all)
            } else {
                let mut all = Vec::new();
                for s in 0..samples as u64 {
                    let s = seed ^ (s << 16) ^ ((n as u64) << 40) ^ ((m as u64) << 48);
                    if let Ok(inst) = gen_random(n, m, q, 0.5, s) {
                        let connected = SideInfoBipartiteGraph::from_instance(&inst).is_connected();
                        all.push((inst, connected));
                    }
                }
                (0, all)
            };
            let tallies: Vec<Result<ScanTally, ExperimentError>> = instances
                .par_iter()
                .map(|(inst, connected)| scan_instance(inst, *connected))
                .collect();
            let mut cell = ScanTally::default();
            for t in tallies {
                cell.absorb(t?);
            }
            report.rows.push(vec![
                n.to_string(),
                m.to_string(),
                classes.to_string(),
                cell.checked.to_string(),
                cell.hypothesis_holds.to_string(),
                cell.violations.to_string(),
                cell.all_demanded_checked.to_string(),
                cell.all_demanded_violations.to_string(),
                cell.oracle_violations.to_string(),
                cell.non_necessity.to_string(),
            ]);
            total.absorb(cell);
        }
    }
    if let Some((reason, inst)) = total.first_violation.clone() {
        report.fail(reason, &inst);
    }
    report.notes.push(format!(
        "kappa violations: {} (X' demanded), {} (all demanded); shortest-code violations: {}",
        total.violations, total.all_demanded_violations, total.oracle_violations
    ));
    if let Some(inst) = &total.first_non_necessity {
        report.notes.push(format!(
            "disconnected instance with kappa < uniq(d): {}",
            serde_json::to_string(&InstanceFile::from_instance(inst)).expect("serializes")
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Tree,
    Biclique,
}

/// Sweeps over canonical regular trees or bi-cliques.
///
/// Trees: kappa = n - 1, the tree cover has length n - 1 and verifies, and
/// no code of length n - 2 exists; random spanning trees on n + n vertices
/// are added with kappa <= n - 1 checked. Bi-cliques: restricted to the
/// bi-clique's own users, kappa = 2 - I(covered), one fewer is infeasible,
/// and the cover code verifies.
pub fn lemma_sweep(
    kind: SweepKind,
    n_lo: usize,
    n_hi: usize,
    random_trees: usize,
) -> Result<ExperimentReport, ExperimentError> {
    let q = FieldOrder::BINARY;
    match kind {
        SweepKind::Tree => {
            if n_lo < 3 || n_hi > 6 {
                return Err(ExperimentError::Parameter(format!(
                    "tree sweep needs 3 <= n <= 6 (got {n_lo}..{n_hi})"
                )));
            }
            let mut report = ExperimentReport::new(
                "lemma-sweep",
                &[
                    ("kind", "tree".into()),
                    ("n", format!("{n_lo}..{n_hi}")),
                    ("random_trees", random_trees.to_string()),
                ],
                &[
                    "instance",
                    "n",
                    "kappa",
                    "scheme_length",
                    "code_verifies",
                    "shortest_code",
                    "n_minus_2_feasible",
                ],
            );
            for n in n_lo..=n_hi {
                let inst = catalog::regular_tree(n, q);
                let kappa = minrank_bnb(&inst, MinrankOptions::default())?.kappa;
                let plan = tree_cover(&inst, n <= EXACT_COVER_MAX)?;
                let verifies = verify_code(&plan.code, &inst)
                    .expect("same instance")
                    .overall;
                let shortest = minrank_oracle(&inst, n - 1, DEFAULT_ORACLE_BUDGET)?;
                let below = minrank_oracle(&inst, n - 2, DEFAULT_ORACLE_BUDGET)?.found;
                report.rows.push(vec![
                    format!("T{n},{n}"),
                    n.to_string(),
                    kappa.to_string(),
                    plan.counts.length.to_string(),
                    verifies.to_string(),
                    shortest.length.to_string(),
                    below.to_string(),
                ]);
                if kappa != n - 1 || plan.counts.length != n - 1 || !verifies || below {
                    report.fail(
                        format!(
                            "T{n},{n}: kappa {kappa}, scheme {}, verifies {verifies}, length {} feasible {below}",
                            plan.counts.length,
                            n - 2
                        ),
                        &inst,
                    );
                }
                for seed in 0..random_trees as u64 {
                    let Some(t) = catalog::random_tree_sueicp(n, q, seed) else {
                        continue;
                    };
                    let kappa = minrank_bnb(&t, MinrankOptions::default())?.kappa;
                    let shortest = minrank_oracle(&t, n - 1, DEFAULT_ORACLE_BUDGET)?;
                    report.rows.push(vec![
                        format!("random-tree seed={seed}"),
                        n.to_string(),
                        kappa.to_string(),
                        "-".into(),
                        "-".into(),
                        shortest.length.to_string(),
                        "-".into(),
                    ]);
                    if kappa > n - 1 {
                        report.fail(
                            format!("random tree on {n}+{n} vertices: kappa {kappa} > {}", n - 1),
                            &t,
                        );
                    }
                }
            }
            Ok(report)
        }
        SweepKind::Biclique => {
            if n_lo < 2 || n_hi > 5 {
                return Err(ExperimentError::Parameter(format!(
                    "bi-clique sweep needs 2 <= n <= 5 (got {n_lo}..{n_hi})"
                )));
            }
            let mut report = ExperimentReport::new(
                "lemma-sweep",
                &[
                    ("kind", "biclique".into()),
                    ("n", format!("{n_lo}..{n_hi}")),
                ],
                &[
                    "instance",
                    "n",
                    "covered",
                    "kappa_biclique_users",
                    "one_fewer_feasible",
                    "code_verifies",
                    "kappa_all_users",
                ],
            );
            for n in n_lo..=n_hi {
                for covered in [false, true] {
                    let inst = catalog::biclique(n, covered, q);
                    let users: Vec<usize> = (0..n).collect();
                    let want = 2 - usize::from(covered);
                    let kappa =
                        minrank_bnb_for_users(&inst, &users, MinrankOptions::default())?.kappa;
                    let below =
                        minrank_oracle_for_users(&inst, &users, want - 1, DEFAULT_ORACLE_BUDGET)?
                            .found;
                    let plan = biclique_cover(&inst, inst.num_users() <= EXACT_COVER_MAX)?;
                    let verifies = verify_code(&plan.code, &inst)
                        .expect("same instance")
                        .overall;
                    let whole = minrank_bnb(&inst, MinrankOptions::default())?.kappa;
                    report.rows.push(vec![
                        format!("B{n},{n}{}", if covered { "^c" } else { "" }),
                        n.to_string(),
                        covered.to_string(),
                        kappa.to_string(),
                        below.to_string(),
                        verifies.to_string(),
                        whole.to_string(),
                    ]);
                    if kappa != want || below || !verifies {
                        report.fail(
                            format!("B{n},{n} covered={covered}: kappa {kappa}, expected {want}"),
                            &inst,
                        );
                    }
                }
            }
            Ok(report)
        }
    }
}
