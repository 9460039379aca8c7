//! Side-information graphs, the directed problem graph, degree-one pruning,
//! structure detection and canonical labeling.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::EicpInstance;

/// Largest N or M accepted by [`canonical_form`].
pub const DEFAULT_CANONICAL_GUARD: usize = 8;

/// Largest structure searched for by default.
pub const DEFAULT_N_MAX: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("canonical form limited to N, M <= {guard} (got N={users}, M={messages})")]
    CanonicalGuard {
        users: usize,
        messages: usize,
        guard: usize,
    },
    #[error("structure search exceeded {guard} nodes")]
    SearchBudget { guard: u64 },
}

/// Undirected users-versus-messages possession graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SideInfoBipartiteGraph {
    user_adj: Vec<Vec<usize>>,
    msg_adj: Vec<Vec<usize>>,
}

impl SideInfoBipartiteGraph {
    pub fn from_side_info(num_messages: usize, side_info: &[Vec<usize>]) -> Self {
        let user_adj: Vec<Vec<usize>> = side_info
            .iter()
            .map(|k| {
                k.iter()
                    .copied()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect()
            })
            .collect();
        let mut msg_adj = vec![Vec::new(); num_messages];
        for (u, k) in user_adj.iter().enumerate() {
            for &x in k {
                msg_adj[x].push(u);
            }
        }
        SideInfoBipartiteGraph { user_adj, msg_adj }
    }

    pub fn from_instance(inst: &EicpInstance) -> Self {
        Self::from_side_info(inst.num_messages(), inst.all_side_info())
    }

    pub fn num_users(&self) -> usize {
        self.user_adj.len()
    }

    pub fn num_messages(&self) -> usize {
        self.msg_adj.len()
    }

    /// K_i, sorted.
    pub fn user_neighbors(&self, user: usize) -> &[usize] {
        &self.user_adj[user]
    }

    /// Holders of a message, sorted.
    pub fn message_neighbors(&self, message: usize) -> &[usize] {
        &self.msg_adj[message]
    }

    pub fn side_info(&self) -> &[Vec<usize>] {
        &self.user_adj
    }

    pub fn has_edge(&self, user: usize, message: usize) -> bool {
        self.user_adj[user].binary_search(&message).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.user_adj.iter().map(Vec::len).sum()
    }

    pub fn message_degree(&self, message: usize) -> usize {
        self.msg_adj[message].len()
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.user_adj[user].len()
    }

    /// Copy with one edge removed (no-op if absent).
    pub fn without_edge(&self, user: usize, message: usize) -> Self {
        let mut side = self.user_adj.clone();
        side[user].retain(|&x| x != message);
        Self::from_side_info(self.num_messages(), &side)
    }

    /// True iff all N + M vertices lie in one component.
    pub fn is_connected(&self) -> bool {
        let users: Vec<usize> = (0..self.num_users()).collect();
        let msgs: Vec<usize> = (0..self.num_messages()).collect();
        connected_on(&self.user_adj, &users, &msgs)
    }
}

// BFS restricted to the given users and messages (`adj` may mention others;
// they are ignored).
fn connected_on(user_adj: &[Vec<usize>], users: &[usize], msgs: &[usize]) -> bool {
    let total = users.len() + msgs.len();
    if total <= 1 {
        return true;
    }
    let m = msgs.iter().max().map_or(0, |x| x + 1);
    let mut msg_ok = vec![false; m];
    for &x in msgs {
        msg_ok[x] = true;
    }
    let mut msg_adj = vec![Vec::new(); m];
    for &u in users {
        for &x in &user_adj[u] {
            if x < m && msg_ok[x] {
                msg_adj[x].push(u);
            }
        }
    }
    let mut seen_u = vec![false; user_adj.len()];
    let mut seen_x = vec![false; m];
    let mut queue = VecDeque::new();
    let mut reached = 0;
    if let Some(&u) = users.first() {
        seen_u[u] = true;
        queue.push_back((true, u));
    } else {
        seen_x[msgs[0]] = true;
        queue.push_back((false, msgs[0]));
    }
    while let Some((is_user, v)) = queue.pop_front() {
        reached += 1;
        if is_user {
            for &x in &user_adj[v] {
                if x < m && msg_ok[x] && !seen_x[x] {
                    seen_x[x] = true;
                    queue.push_back((false, x));
                }
            }
        } else {
            for &u in &msg_adj[v] {
                if !seen_u[u] {
                    seen_u[u] = true;
                    queue.push_back((true, u));
                }
            }
        }
    }
    reached == total
}

/// Directed problem graph: side edges u_i -> x_j for j in K_i, demand edges
/// x_{d_j} -> u_j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteProblemGraph {
    side: SideInfoBipartiteGraph,
    demands: Vec<usize>,
    demanders: Vec<Vec<usize>>,
}

/// One arc of the problem graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arc {
    UserToMessage { user: usize, message: usize },
    MessageToUser { message: usize, user: usize },
}

impl BipartiteProblemGraph {
    pub fn from_instance(inst: &EicpInstance) -> Self {
        let mut demanders = vec![Vec::new(); inst.num_messages()];
        for (u, &d) in inst.demands().iter().enumerate() {
            demanders[d].push(u);
        }
        BipartiteProblemGraph {
            side: SideInfoBipartiteGraph::from_instance(inst),
            demands: inst.demands().to_vec(),
            demanders,
        }
    }

    pub fn side_graph(&self) -> &SideInfoBipartiteGraph {
        &self.side
    }

    pub fn user_out(&self, user: usize) -> &[usize] {
        self.side.user_neighbors(user)
    }

    pub fn user_in(&self, user: usize) -> &[usize] {
        std::slice::from_ref(&self.demands[user])
    }

    /// Users demanding the message.
    pub fn message_out(&self, message: usize) -> &[usize] {
        &self.demanders[message]
    }

    /// Users holding the message.
    pub fn message_in(&self, message: usize) -> &[usize] {
        self.side.message_neighbors(message)
    }

    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs = Vec::new();
        for u in 0..self.side.num_users() {
            for &x in self.side.user_neighbors(u) {
                arcs.push(Arc::UserToMessage {
                    user: u,
                    message: x,
                });
            }
        }
        for (u, &d) in self.demands.iter().enumerate() {
            arcs.push(Arc::MessageToUser {
                message: d,
                user: u,
            });
        }
        arcs
    }
}

/// G_S with its degree-one message vertices removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrunedGraph {
    base: SideInfoBipartiteGraph,
    x_prime: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
}

impl PrunedGraph {
    pub fn base(&self) -> &SideInfoBipartiteGraph {
        &self.base
    }

    /// X', sorted.
    pub fn x_prime(&self) -> &[usize] {
        &self.x_prime
    }

    /// Messages dropped by pruning, sorted.
    pub fn removed(&self) -> Vec<usize> {
        (0..self.base.num_messages())
            .filter(|x| self.x_prime.binary_search(x).is_err())
            .collect()
    }

    /// Neighbors of a user inside X'.
    pub fn adjacency(&self, user: usize) -> &[usize] {
        &self.adjacency[user]
    }

    /// Connectivity of the induced graph on U and X'.
    pub fn is_connected(&self) -> bool {
        let users: Vec<usize> = (0..self.base.num_users()).collect();
        connected_on(&self.adjacency, &users, &self.x_prime)
    }
}

/// Removes every message vertex of degree exactly 1.
///
/// User vertices are never removed, so message degrees inside the result
/// equal those in `g` and a single pass is a fixed point.
pub fn prune_degree_one(g: &SideInfoBipartiteGraph) -> PrunedGraph {
    let x_prime: Vec<usize> = (0..g.num_messages())
        .filter(|&x| g.message_degree(x) != 1)
        .collect();
    let adjacency: Vec<Vec<usize>> = g
        .side_info()
        .iter()
        .map(|k| {
            k.iter()
                .copied()
                .filter(|x| x_prime.binary_search(x).is_ok())
                .collect()
        })
        .collect();
    let pruned = PrunedGraph {
        base: g.clone(),
        x_prime,
        adjacency,
    };
    debug_assert!(pruned.x_prime.iter().all(|&x| pruned
        .adjacency
        .iter()
        .filter(|k| k.contains(&x))
        .count()
        != 1));
    pruned
}

/// Number of distinct demanded messages lying in `subset`.
pub fn uniq_demanded(demands: &[usize], subset: &[usize]) -> usize {
    let subset: BTreeSet<usize> = subset.iter().copied().collect();
    demands
        .iter()
        .filter(|d| subset.contains(d))
        .collect::<BTreeSet<_>>()
        .len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    SingleEdge,
    CoveredPair,
    RegularTree,
    #[serde(rename = "biclique")]
    BiClique,
}

/// A located structure. `users[i]` demands `messages[i]`.
///
/// For `SingleEdge` the covering user is the transmitter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructureWitness {
    pub kind: StructureKind,
    pub users: Vec<usize>,
    pub messages: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covering_user: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub covered: bool,
}

impl StructureWitness {
    pub fn size(&self) -> usize {
        self.messages.len()
    }

    /// Transmissions the structure needs in its cover scheme.
    pub fn cost(&self) -> usize {
        match self.kind {
            StructureKind::SingleEdge | StructureKind::CoveredPair => 1,
            StructureKind::RegularTree => self.size() - 1,
            StructureKind::BiClique => 2 - usize::from(self.covered),
        }
    }

    pub fn sorted_messages(&self) -> Vec<usize> {
        let mut m = self.messages.clone();
        m.sort_unstable();
        m
    }

    /// Same witness with every index shifted to 1-based.
    pub fn one_based(&self) -> Self {
        StructureWitness {
            kind: self.kind,
            users: self.users.iter().map(|u| u + 1).collect(),
            messages: self.messages.iter().map(|x| x + 1).collect(),
            covering_user: self.covering_user.map(|u| u + 1),
            covered: self.covered,
        }
    }

    /// Applies index maps to users and messages.
    pub fn relabeled(&self, user_map: &[usize], msg_map: &[usize]) -> Self {
        StructureWitness {
            kind: self.kind,
            users: self.users.iter().map(|&u| user_map[u]).collect(),
            messages: self.messages.iter().map(|&x| msg_map[x]).collect(),
            covering_user: self.covering_user.map(|u| user_map[u]),
            covered: self.covered,
        }
    }
}

fn distinct(v: &[usize]) -> bool {
    v.iter().collect::<BTreeSet<_>>().len() == v.len()
}

/// Checks that the witness's edge pattern is present in `g`.
pub fn verify_structure(g: &SideInfoBipartiteGraph, w: &StructureWitness) -> bool {
    let n = w.messages.len();
    if n == 0 || w.users.len() != n || !distinct(&w.users) || !distinct(&w.messages) {
        return false;
    }
    if w.users.iter().any(|&u| u >= g.num_users())
        || w.messages.iter().any(|&x| x >= g.num_messages())
        || w.covering_user.is_some_and(|t| t >= g.num_users())
    {
        return false;
    }
    let a = &w.users;
    let b = &w.messages;
    let covers = |t: usize| !a.contains(&t) && b.iter().all(|&x| g.has_edge(t, x));
    match w.kind {
        StructureKind::SingleEdge => {
            n == 1
                && !g.has_edge(a[0], b[0])
                && w.covering_user
                    .is_some_and(|t| t != a[0] && g.has_edge(t, b[0]))
        }
        StructureKind::CoveredPair => {
            n == 2
                && w.covered
                && g.has_edge(a[0], b[1])
                && g.has_edge(a[1], b[0])
                && w.covering_user.is_some_and(covers)
        }
        StructureKind::RegularTree => {
            n >= 3
                && (0..n).all(|i| g.has_edge(a[i], b[(i + 1) % n]))
                && (0..n - 1).all(|i| g.has_edge(a[i], b[(i + 2) % n]))
        }
        StructureKind::BiClique => {
            let pattern = (0..n).all(|i| (0..n).all(|j| (i == j) != g.has_edge(a[i], b[j])));
            let cover_ok = match (w.covered, w.covering_user) {
                (true, Some(t)) => covers(t),
                (false, None) => true,
                _ => false,
            };
            n >= 2 && pattern && cover_ok
        }
    }
}

// Maps each pool message to its unique demanding user; messages with zero or
// several demanders are dropped.
fn demander_map(
    g: &SideInfoBipartiteGraph,
    demands: &[usize],
    pool: &[usize],
) -> (Vec<usize>, Vec<Option<usize>>) {
    let mut who = vec![None; g.num_messages()];
    let mut count = vec![0usize; g.num_messages()];
    for (u, &d) in demands.iter().enumerate() {
        who[d] = Some(u);
        count[d] += 1;
    }
    let pool: Vec<usize> = pool
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|&x| x < g.num_messages() && count[x] == 1)
        .collect();
    (pool, who)
}

fn covering_user(g: &SideInfoBipartiteGraph, users: &[usize], msgs: &[usize]) -> Option<usize> {
    (0..g.num_users()).find(|t| !users.contains(t) && msgs.iter().all(|&x| g.has_edge(*t, x)))
}

fn largest_first(mut found: Vec<StructureWitness>) -> Vec<StructureWitness> {
    found.sort_by(|p, q| {
        q.size()
            .cmp(&p.size())
            .then_with(|| p.sorted_messages().cmp(&q.sorted_messages()))
    });
    found
}

/// All regular trees T_{n,n} with 3 <= n <= `n_max` on messages from `pool`,
/// one witness per message set, largest first.
///
/// `demands[u]` is the message user `u` demands; each tree user is the
/// demander of the corresponding tree message.
pub fn search_regular_trees(
    g: &SideInfoBipartiteGraph,
    demands: &[usize],
    pool: &[usize],
    n_max: usize,
    node_guard: u64,
) -> Result<Vec<StructureWitness>, GraphError> {
    let (pool, who) = demander_map(g, demands, pool);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut found = Vec::new();
    let mut nodes = 0u64;
    let mut seq: Vec<usize> = Vec::new();

    struct Ctx<'a> {
        g: &'a SideInfoBipartiteGraph,
        who: &'a [Option<usize>],
        pool: &'a [usize],
        n_max: usize,
        guard: u64,
    }

    fn user(ctx: &Ctx, x: usize) -> usize {
        ctx.who[x].expect("pool messages have a demander")
    }

    fn dfs(
        ctx: &Ctx,
        seq: &mut Vec<usize>,
        nodes: &mut u64,
        seen: &mut BTreeSet<Vec<usize>>,
        found: &mut Vec<StructureWitness>,
    ) -> Result<(), GraphError> {
        *nodes += 1;
        if *nodes > ctx.guard {
            return Err(GraphError::SearchBudget { guard: ctx.guard });
        }
        let k = seq.len();
        if k >= 3 {
            let b0 = seq[0];
            if ctx.g.has_edge(user(ctx, seq[k - 1]), b0)
                && ctx.g.has_edge(user(ctx, seq[k - 2]), b0)
            {
                let mut key = seq.clone();
                key.sort_unstable();
                if seen.insert(key) {
                    found.push(StructureWitness {
                        kind: StructureKind::RegularTree,
                        users: seq.iter().map(|&x| user(ctx, x)).collect(),
                        messages: seq.clone(),
                        covering_user: None,
                        covered: false,
                    });
                }
            }
        }
        if k == ctx.n_max {
            return Ok(());
        }
        for &x in ctx.pool {
            if seq.contains(&x) {
                continue;
            }
            if k >= 1 && !ctx.g.has_edge(user(ctx, seq[k - 1]), x) {
                continue;
            }
            if k >= 2 && !ctx.g.has_edge(user(ctx, seq[k - 2]), x) {
                continue;
            }
            seq.push(x);
            dfs(ctx, seq, nodes, seen, found)?;
            seq.pop();
        }
        Ok(())
    }

    let ctx = Ctx {
        g,
        who: &who,
        pool: &pool,
        n_max,
        guard: node_guard,
    };
    if n_max >= 3 {
        dfs(&ctx, &mut seq, &mut nodes, &mut seen, &mut found)?;
    }
    Ok(largest_first(found))
}

/// Pairs {a, b} whose demanders know each other's message and a third user
/// holding both, ascending.
pub fn search_covered_pairs(
    g: &SideInfoBipartiteGraph,
    demands: &[usize],
    pool: &[usize],
) -> Vec<StructureWitness> {
    let (pool, who) = demander_map(g, demands, pool);
    let mut found = Vec::new();
    for (i, &a) in pool.iter().enumerate() {
        for &b in &pool[i + 1..] {
            let (ua, ub) = (who[a].unwrap(), who[b].unwrap());
            if !(g.has_edge(ua, b) && g.has_edge(ub, a)) {
                continue;
            }
            if let Some(t) = covering_user(g, &[ua, ub], &[a, b]) {
                found.push(StructureWitness {
                    kind: StructureKind::CoveredPair,
                    users: vec![ua, ub],
                    messages: vec![a, b],
                    covering_user: Some(t),
                    covered: true,
                });
            }
        }
    }
    found
}

/// One single-edge witness per pool message that some non-demander holds.
pub fn search_single_edges(
    g: &SideInfoBipartiteGraph,
    demands: &[usize],
    pool: &[usize],
) -> Vec<StructureWitness> {
    let (pool, who) = demander_map(g, demands, pool);
    pool.iter()
        .filter_map(|&x| {
            let a = who[x].unwrap();
            let t = g.message_neighbors(x).iter().copied().find(|&t| t != a)?;
            (!g.has_edge(a, x)).then(|| StructureWitness {
                kind: StructureKind::SingleEdge,
                users: vec![a],
                messages: vec![x],
                covering_user: Some(t),
                covered: false,
            })
        })
        .collect()
}

fn biclique_witness(
    g: &SideInfoBipartiteGraph,
    who: &[Option<usize>],
    msgs: &[usize],
) -> StructureWitness {
    let users: Vec<usize> = msgs.iter().map(|&x| who[x].unwrap()).collect();
    let cover = covering_user(g, &users, msgs);
    StructureWitness {
        kind: StructureKind::BiClique,
        users,
        messages: msgs.to_vec(),
        covering_user: cover,
        covered: cover.is_some(),
    }
}

// Cliques of size >= 2 in the mutual-knowledge graph, in lexicographic
// order of their sorted message lists.
fn mutual_cliques(
    g: &SideInfoBipartiteGraph,
    who: &[Option<usize>],
    pool: &[usize],
    n_max: usize,
    node_guard: u64,
) -> Result<Vec<Vec<usize>>, GraphError> {
    let mutual =
        |a: usize, b: usize| g.has_edge(who[a].unwrap(), b) && g.has_edge(who[b].unwrap(), a);
    let mut out = Vec::new();
    let mut nodes = 0u64;
    let mut stack: Vec<(Vec<usize>, usize)> = pool
        .iter()
        .enumerate()
        .rev()
        .map(|(i, &x)| (vec![x], i + 1))
        .collect();
    while let Some((clique, next)) = stack.pop() {
        nodes += 1;
        if nodes > node_guard {
            return Err(GraphError::SearchBudget { guard: node_guard });
        }
        if clique.len() >= 2 {
            out.push(clique.clone());
        }
        if clique.len() == n_max {
            continue;
        }
        for j in (next..pool.len()).rev() {
            let y = pool[j];
            if clique.iter().all(|&x| mutual(x, y)) {
                let mut c = clique.clone();
                c.push(y);
                stack.push((c, j + 1));
            }
        }
    }
    Ok(out)
}

/// Every bi-clique B_{n,n}, 2 <= n <= `n_max`, on pool messages, annotated
/// with its smallest covering user.
pub fn all_bicliques(
    g: &SideInfoBipartiteGraph,
    demands: &[usize],
    pool: &[usize],
    n_max: usize,
    node_guard: u64,
) -> Result<Vec<StructureWitness>, GraphError> {
    let (pool, who) = demander_map(g, demands, pool);
    Ok(mutual_cliques(g, &who, &pool, n_max, node_guard)?
        .iter()
        .map(|c| biclique_witness(g, &who, c))
        .collect())
}

/// Maximal bi-cliques (with respect to the `n_max` cap), largest first.
/// Pool messages in no bi-clique come back as single-edge witnesses.
pub fn search_bicliques(
    g: &SideInfoBipartiteGraph,
    demands: &[usize],
    pool: &[usize],
    n_max: usize,
    node_guard: u64,
) -> Result<Vec<StructureWitness>, GraphError> {
    let (pool_v, who) = demander_map(g, demands, pool);
    let cliques = mutual_cliques(g, &who, &pool_v, n_max, node_guard)?;
    let mutual =
        |a: usize, b: usize| g.has_edge(who[a].unwrap(), b) && g.has_edge(who[b].unwrap(), a);
    let mut found = Vec::new();
    let mut in_some = BTreeSet::new();
    for c in &cliques {
        in_some.extend(c.iter().copied());
        let extendable = c.len() < n_max
            && pool_v
                .iter()
                .any(|&y| !c.contains(&y) && c.iter().all(|&x| mutual(x, y)));
        if !extendable {
            found.push(biclique_witness(g, &who, c));
        }
    }
    let lonely: Vec<usize> = pool_v
        .into_iter()
        .filter(|x| !in_some.contains(x))
        .collect();
    found.extend(search_single_edges(g, demands, &lonely));
    Ok(largest_first(found))
}

/// Canonical byte string of `g` under independent user and message
/// permutations: `[N, M, columns...]`, each column a user bitmask, minimized
/// over user orderings.
pub fn canonical_form(g: &SideInfoBipartiteGraph, guard: usize) -> Result<Vec<u8>, GraphError> {
    let n = g.num_users();
    let m = g.num_messages();
    if n > guard.min(8) || m > guard {
        return Err(GraphError::CanonicalGuard {
            users: n,
            messages: m,
            guard,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<Vec<u8>> = None;
    let mut cols = vec![0u8; m];
    loop {
        for (x, col) in cols.iter_mut().enumerate() {
            *col = g
                .message_neighbors(x)
                .iter()
                .fold(0u8, |acc, &u| acc | (1 << perm[u]));
        }
        cols.sort_unstable();
        if best.as_ref().is_none_or(|b| cols.as_slice() < &b[2..]) {
            let mut key = vec![n as u8, m as u8];
            key.extend_from_slice(&cols);
            best = Some(key);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(best.unwrap_or_else(|| vec![n as u8, m as u8]))
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
