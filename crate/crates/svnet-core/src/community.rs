//! Cluster detection by two-level map-equation minimization.
//!
//! The map equation for an undirected weighted graph uses strength-
//! proportional visit rates `p_a = s_a / 2W` and module exit rates
//! `q_m = cut(m) / 2W`. The codelength of a partition M is
//!
//! `L(M) = plogp(q) - 2 sum_m plogp(q_m) + sum_m plogp(p_m) - sum_a plogp(p_a)`
//!
//! with `p_m = q_m + sum_{a in m} p_a`, all logs base 2. Optimization is a
//! seeded two-phase greedy (node moves until no improvement, then module
//! aggregation, repeated to a fixpoint), with restarts; an exhaustive
//! enumerator over all set partitions serves as an oracle on small graphs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::num::{plogp, Real};
use crate::Weight;

/// Undirected simple graph with positive edge weights.
#[derive(Debug, Clone)]
pub struct WeightedGraph<F: Real = Weight> {
    n: usize,
    edges: Vec<(u32, u32, F)>,
    strengths: Vec<F>,
    total_weight: F,
}

impl<F: Real> WeightedGraph<F> {
    pub fn new(n: usize, edges: Vec<(u32, u32, F)>) -> Result<WeightedGraph<F>> {
        let mut canonical = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            if u == v {
                return Err(Error::Domain(format!("self-loop on node {u}")));
            }
            if u.max(v) as usize >= n {
                return Err(Error::Domain(format!(
                    "edge ({u}, {v}) references a node outside the graph"
                )));
            }
            if !(w > F::zero()) {
                return Err(Error::Domain(format!(
                    "edge ({u}, {v}) must have positive weight, got {w:?}"
                )));
            }
            canonical.push((u.min(v), u.max(v), w));
        }
        canonical.sort_unstable_by_key(|e| (e.0, e.1));
        if canonical.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::Domain("duplicate edge in simple graph".into()));
        }
        let mut strengths = vec![F::zero(); n];
        let mut total_weight = F::zero();
        for &(u, v, w) in &canonical {
            strengths[u as usize] = strengths[u as usize] + w;
            strengths[v as usize] = strengths[v as usize] + w;
            total_weight = total_weight + w;
        }
        Ok(WeightedGraph {
            n,
            edges: canonical,
            strengths,
            total_weight,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32, F)] {
        &self.edges
    }

    pub fn strength(&self, node: u32) -> F {
        self.strengths[node as usize]
    }

    pub fn total_weight(&self) -> F {
        self.total_weight
    }

    pub fn non_isolated(&self) -> Vec<u32> {
        (0..self.n as u32)
            .filter(|&u| self.strengths[u as usize] > F::zero())
            .collect()
    }
}

/// Assignment of nodes to clusters with contiguous ids from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<F: Real = Weight> {
    assignment: Vec<u32>,
    n_clusters: usize,
    codelength: Option<F>,
}

impl<F: Real> Partition<F> {
    /// Build from arbitrary labels; cluster ids are renumbered to be
    /// contiguous from 0 in order of first appearance.
    pub fn from_labels(labels: &[u32]) -> Partition<F> {
        let (assignment, n_clusters) = normalize_labels(labels);
        Partition {
            assignment,
            n_clusters,
            codelength: None,
        }
    }

    pub fn singletons(n: usize) -> Partition<F> {
        Partition {
            assignment: (0..n as u32).collect(),
            n_clusters: n,
            codelength: None,
        }
    }

    pub fn single_module(n: usize) -> Partition<F> {
        Partition {
            assignment: vec![0; n],
            n_clusters: usize::from(n > 0),
            codelength: None,
        }
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn cluster_of(&self, node: u32) -> u32 {
        self.assignment[node as usize]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    /// Codelength in bits per step, when this partition came out of an
    /// evaluation or a detection run.
    pub fn codelength(&self) -> Option<F> {
        self.codelength
    }

    /// Members of each cluster, ascending inside each cluster.
    pub fn clusters(&self) -> Vec<Vec<u32>> {
        let mut clusters = vec![Vec::new(); self.n_clusters];
        for (node, &c) in self.assignment.iter().enumerate() {
            clusters[c as usize].push(node as u32);
        }
        clusters
    }
}

fn normalize_labels(labels: &[u32]) -> (Vec<u32>, usize) {
    let mut remap: FxHashMap<u32, u32> = FxHashMap::default();
    let mut next = 0u32;
    let assignment = labels
        .iter()
        .map(|&l| {
            *remap.entry(l).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect();
    (assignment, next as usize)
}

/// Renumber clusters by descending size, ties by smallest member.
fn relabel_by_size(labels: &[u32]) -> (Vec<u32>, usize) {
    let (labels, k) = normalize_labels(labels);
    let mut size = vec![0usize; k];
    let mut first = vec![u32::MAX; k];
    for (node, &c) in labels.iter().enumerate() {
        size[c as usize] += 1;
        first[c as usize] = first[c as usize].min(node as u32);
    }
    let mut order: Vec<u32> = (0..k as u32).collect();
    order.sort_by_key(|&c| (usize::MAX - size[c as usize], first[c as usize]));
    let mut rank = vec![0u32; k];
    for (r, &c) in order.iter().enumerate() {
        rank[c as usize] = r as u32;
    }
    (labels.iter().map(|&c| rank[c as usize]).collect(), k)
}

/// Node visit rates `p_a = strength(a) / 2W`.
///
/// Isolated nodes get rate zero; they take no part in detection and are
/// reported as singletons.
pub fn visit_rates<F: Real>(g: &WeightedGraph<F>) -> Result<Vec<F>> {
    if !(g.total_weight > F::zero()) {
        return Err(Error::Domain(
            "visit rates need positive total edge weight".into(),
        ));
    }
    let two_w = g.total_weight + g.total_weight;
    Ok(g.strengths.iter().map(|&s| s / two_w).collect())
}

/// Map-equation codelength of a raw label assignment, in bits.
fn codelength_of_labels<F: Real>(g: &WeightedGraph<F>, labels: &[u32]) -> Result<F> {
    if labels.len() != g.n {
        return Err(Error::Domain(format!(
            "partition covers {} nodes but the graph has {}",
            labels.len(),
            g.n
        )));
    }
    if !(g.total_weight > F::zero()) {
        // no flow to encode
        return Ok(F::zero());
    }
    let two_w = g.total_weight + g.total_weight;
    let k = labels.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    // accumulate in weight units and divide once, keeping simple ratios exact
    let mut cut_w = vec![F::zero(); k];
    let mut strength_sum = vec![F::zero(); k];
    for (node, &c) in labels.iter().enumerate() {
        strength_sum[c as usize] = strength_sum[c as usize] + g.strengths[node];
    }
    for &(u, v, w) in &g.edges {
        let (cu, cv) = (labels[u as usize], labels[v as usize]);
        if cu != cv {
            cut_w[cu as usize] = cut_w[cu as usize] + w;
            cut_w[cv as usize] = cut_w[cv as usize] + w;
        }
    }
    let q_w: F = cut_w.iter().copied().sum();
    let mut l = plogp(q_w / two_w);
    for m in 0..k {
        l = l - (plogp(cut_w[m] / two_w) + plogp(cut_w[m] / two_w));
        l = l + plogp((cut_w[m] + strength_sum[m]) / two_w);
    }
    for &s in &g.strengths {
        l = l - plogp(s / two_w);
    }
    Ok(l)
}

/// Two-level map-equation codelength of a partition, in bits.
pub fn map_equation<F: Real>(g: &WeightedGraph<F>, part: &Partition<F>) -> Result<F> {
    codelength_of_labels(g, part.assignment())
}

/// Normalized flow view used by the optimizer: node visit rates plus
/// symmetric adjacency in flow units (`w / 2W`). Aggregated levels fold
/// intra-module flow into the node rates, so no self-loops appear.
#[derive(Clone)]
struct FlowGraph<F: Real> {
    flow: Vec<F>,
    adj: Vec<Vec<(u32, F)>>,
    ext: Vec<F>,
}

impl<F: Real> FlowGraph<F> {
    fn from_graph(g: &WeightedGraph<F>, nodes: &[u32]) -> FlowGraph<F> {
        let two_w = g.total_weight + g.total_weight;
        let mut local = vec![u32::MAX; g.n];
        for (pos, &node) in nodes.iter().enumerate() {
            local[node as usize] = pos as u32;
        }
        let flow: Vec<F> = nodes
            .iter()
            .map(|&node| g.strengths[node as usize] / two_w)
            .collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        for &(u, v, w) in &g.edges {
            let (lu, lv) = (local[u as usize], local[v as usize]);
            let f = w / two_w;
            adj[lu as usize].push((lv, f));
            adj[lv as usize].push((lu, f));
        }
        let ext = adj
            .iter()
            .map(|nb| nb.iter().map(|&(_, f)| f).sum())
            .collect();
        FlowGraph { flow, adj, ext }
    }

    fn len(&self) -> usize {
        self.flow.len()
    }

    fn aggregate(&self, labels: &[u32], k: usize) -> FlowGraph<F> {
        let mut flow = vec![F::zero(); k];
        for (node, &c) in labels.iter().enumerate() {
            flow[c as usize] = flow[c as usize] + self.flow[node];
        }
        let mut between: BTreeMap<(u32, u32), F> = BTreeMap::new();
        for (node, nb) in self.adj.iter().enumerate() {
            let cu = labels[node];
            for &(v, f) in nb {
                if node < v as usize {
                    let cv = labels[v as usize];
                    if cu != cv {
                        let key = (cu.min(cv), cu.max(cv));
                        *between.entry(key).or_insert(F::zero()) =
                            between.get(&key).copied().unwrap_or(F::zero()) + f;
                    }
                }
            }
        }
        let mut adj = vec![Vec::new(); k];
        for (&(a, b), &f) in &between {
            adj[a as usize].push((b, f));
            adj[b as usize].push((a, f));
        }
        let ext = adj
            .iter()
            .map(|nb| nb.iter().map(|&(_, f)| f).sum())
            .collect();
        FlowGraph { flow, adj, ext }
    }
}

/// One full greedy pass: sweeps of single-node moves, then aggregation,
/// repeated until neither phase merges anything.
fn louvain_map<F: Real>(fg: &FlowGraph<F>, rng: &mut ChaCha20Rng) -> Vec<u32> {
    let mut final_labels: Vec<u32> = (0..fg.len() as u32).collect();
    let mut level = fg.clone();
    loop {
        let (labels, k) = local_moving(&level, rng);
        if k == level.len() {
            break;
        }
        for l in final_labels.iter_mut() {
            *l = labels[*l as usize];
        }
        if k == 1 {
            break;
        }
        level = level.aggregate(&labels, k);
    }
    final_labels
}

/// Sweep nodes in seeded random order, moving each to the neighboring
/// module (or a vacated one) that lowers the codelength the most; ties go
/// to the lowest module id. Repeats until a full sweep accepts no move.
fn local_moving<F: Real>(level: &FlowGraph<F>, rng: &mut ChaCha20Rng) -> (Vec<u32>, usize) {
    let n = level.len();
    let eps = F::from_f64_lossy(1e-12);
    let mut label: Vec<u32> = (0..n as u32).collect();
    let mut cut: Vec<F> = level.ext.clone();
    let mut sum_p: Vec<F> = level.flow.clone();
    let mut size: Vec<u32> = vec![1; n];
    let mut q_total: F = cut.iter().copied().sum();
    let mut empties: Vec<u32> = Vec::new();
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut flow_to: FxHashMap<u32, F> = FxHashMap::default();

    let mut sweeps = 0;
    loop {
        order.shuffle(rng);
        let mut moved = false;
        for &u in &order {
            let cur = label[u as usize];
            flow_to.clear();
            for &(v, f) in &level.adj[u as usize] {
                let m = label[v as usize];
                *flow_to.entry(m).or_insert(F::zero()) =
                    flow_to.get(&m).copied().unwrap_or(F::zero()) + f;
            }
            let d_u = level.ext[u as usize];
            let p_u = level.flow[u as usize];
            let k_cur = flow_to.get(&cur).copied().unwrap_or(F::zero());

            let mut candidates: Vec<u32> =
                flow_to.keys().copied().filter(|&m| m != cur).collect();
            candidates.sort_unstable();
            // a vacated module is a candidate when u is not already alone
            let empty_candidate = if size[cur as usize] > 1 {
                empties.last().copied()
            } else {
                None
            };
            if let Some(e) = empty_candidate {
                candidates.push(e);
            }

            let mut best: Option<(F, u32)> = None;
            for &target in &candidates {
                let k_new = flow_to.get(&target).copied().unwrap_or(F::zero());
                let delta = move_delta(
                    q_total,
                    cut[cur as usize],
                    sum_p[cur as usize],
                    cut[target as usize],
                    sum_p[target as usize],
                    p_u,
                    d_u,
                    k_cur,
                    k_new,
                );
                if best.map_or(true, |(b, _)| delta < b - eps) {
                    best = Some((delta, target));
                }
            }

            if let Some((delta, target)) = best {
                if delta < -eps {
                    let k_new = flow_to.get(&target).copied().unwrap_or(F::zero());
                    cut[cur as usize] =
                        (cut[cur as usize] - d_u + k_cur + k_cur).max(F::zero());
                    cut[target as usize] =
                        (cut[target as usize] + d_u - k_new - k_new).max(F::zero());
                    q_total = (q_total + (k_cur + k_cur) - (k_new + k_new)).max(F::zero());
                    sum_p[cur as usize] = sum_p[cur as usize] - p_u;
                    sum_p[target as usize] = sum_p[target as usize] + p_u;
                    size[cur as usize] -= 1;
                    size[target as usize] += 1;
                    if Some(target) == empty_candidate {
                        empties.pop();
                    }
                    if size[cur as usize] == 0 {
                        cut[cur as usize] = F::zero();
                        sum_p[cur as usize] = F::zero();
                        empties.push(cur);
                    }
                    label[u as usize] = target;
                    moved = true;
                }
            }
        }
        sweeps += 1;
        if !moved || sweeps >= 200 {
            break;
        }
    }
    normalize_labels(&label)
}

/// Codelength change from moving one node between modules;
/// partition-independent terms cancel out.
#[allow(clippy::too_many_arguments)]
fn move_delta<F: Real>(
    q_total: F,
    cut_a: F,
    sum_p_a: F,
    cut_b: F,
    sum_p_b: F,
    p_u: F,
    d_u: F,
    k_a: F,
    k_b: F,
) -> F {
    let cut_a_new = (cut_a - d_u + k_a + k_a).max(F::zero());
    let cut_b_new = (cut_b + d_u - k_b - k_b).max(F::zero());
    let q_new = (q_total + (k_a + k_a) - (k_b + k_b)).max(F::zero());
    let pa = cut_a + sum_p_a;
    let pb = cut_b + sum_p_b;
    let pa_new = cut_a_new + sum_p_a - p_u;
    let pb_new = cut_b_new + sum_p_b + p_u;
    let two = F::one() + F::one();
    (plogp(q_new) - plogp(q_total)) - two * (plogp(cut_a_new) - plogp(cut_a) + plogp(cut_b_new) - plogp(cut_b))
        + (plogp(pa_new) - plogp(pa) + plogp(pb_new) - plogp(pb))
}

/// Expand a partition of the non-isolated nodes to all nodes, relabeled by
/// descending cluster size, isolated singletons appended after.
fn expand_assignment(n: usize, non_isolated: &[u32], labels: &[u32]) -> Vec<u32> {
    let (labels, k) = relabel_by_size(labels);
    let mut assignment = vec![u32::MAX; n];
    for (pos, &node) in non_isolated.iter().enumerate() {
        assignment[node as usize] = labels[pos];
    }
    let mut next = k as u32;
    for slot in assignment.iter_mut() {
        if *slot == u32::MAX {
            *slot = next;
            next += 1;
        }
    }
    assignment
}

/// Greedy map-equation minimization with seeded restarts.
///
/// Deterministic for a fixed `(graph, seed, restarts)`: restart `r` uses
/// stream `r` of the seeded generator and the best run is chosen by
/// `(codelength, restart index)`. The result never codes worse than the
/// all-singletons or the single-module partition.
pub fn detect_communities<F: Real>(
    g: &WeightedGraph<F>,
    seed: u64,
    restarts: u32,
) -> Result<Partition<F>> {
    if restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    if g.n == 0 {
        return Ok(Partition {
            assignment: Vec::new(),
            n_clusters: 0,
            codelength: Some(F::zero()),
        });
    }
    let non_isolated = g.non_isolated();
    if non_isolated.is_empty() {
        // edgeless graph: nothing to encode
        return Ok(Partition {
            assignment: (0..g.n as u32).collect(),
            n_clusters: g.n,
            codelength: Some(F::zero()),
        });
    }

    let fg = FlowGraph::from_graph(g, &non_isolated);
    let m = fg.len();

    let mut candidates: Vec<Vec<u32>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            louvain_map(&fg, &mut rng)
        })
        .collect();
    // baselines guarantee the advertised bounds even if greedy stalls
    candidates.push(vec![0; m]);
    candidates.push((0..m as u32).collect());

    let mut best: Option<(F, Vec<u32>)> = None;
    for labels in candidates {
        let assignment = expand_assignment(g.n, &non_isolated, &labels);
        let l = codelength_of_labels(g, &assignment)?;
        if best.as_ref().map_or(true, |(bl, _)| l < *bl) {
            best = Some((l, assignment));
        }
    }
    let (codelength, assignment) = best.expect("at least the baselines were evaluated");
    let (assignment, n_clusters) = normalize_labels(&assignment);
    Ok(Partition {
        assignment,
        n_clusters,
        codelength: Some(codelength),
    })
}

/// Global map-equation minimum by enumerating every set partition of the
/// non-isolated nodes. Refuses graphs with more than 10 such nodes.
pub fn exhaustive_best_partition<F: Real>(g: &WeightedGraph<F>) -> Result<Partition<F>> {
    let non_isolated = g.non_isolated();
    if non_isolated.len() > 10 {
        return Err(Error::Refused(format!(
            "exhaustive search over {} non-isolated nodes exceeds the limit of 10",
            non_isolated.len()
        )));
    }
    if g.n == 0 {
        return Ok(Partition {
            assignment: Vec::new(),
            n_clusters: 0,
            codelength: Some(F::zero()),
        });
    }
    if non_isolated.is_empty() {
        return Ok(Partition {
            assignment: (0..g.n as u32).collect(),
            n_clusters: g.n,
            codelength: Some(F::zero()),
        });
    }

    let m = non_isolated.len();
    let mut best: Option<(F, Vec<u32>)> = None;
    let mut rgs = vec![0u32; m];
    loop {
        let assignment = expand_assignment(g.n, &non_isolated, &rgs);
        let l = codelength_of_labels(g, &assignment)?;
        if best.as_ref().map_or(true, |(bl, _)| l < *bl) {
            best = Some((l, assignment));
        }
        // next restricted growth string
        let mut i = m - 1;
        loop {
            if i == 0 {
                let (codelength, assignment) = best.expect("at least one partition evaluated");
                let (assignment, n_clusters) = normalize_labels(&assignment);
                return Ok(Partition {
                    assignment,
                    n_clusters,
                    codelength: Some(codelength),
                });
            }
            let max_prefix = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= max_prefix {
                rgs[i] += 1;
                rgs[i + 1..].fill(0);
                break;
            }
            i -= 1;
        }
    }
}

/// Normalized mutual information between two label vectors over the same
/// node set, using arithmetic-mean normalization.
pub fn nmi<F: Real>(a: &[u32], b: &[u32]) -> Result<F> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "label vectors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Domain("no common nodes to compare".into()));
    }
    let n = a.len() as f64;
    let mut joint: FxHashMap<(u32, u32), u64> = FxHashMap::default();
    let mut ca: FxHashMap<u32, u64> = FxHashMap::default();
    let mut cb: FxHashMap<u32, u64> = FxHashMap::default();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0) += 1;
        *ca.entry(x).or_insert(0) += 1;
        *cb.entry(y).or_insert(0) += 1;
    }
    let entropy = |counts: &FxHashMap<u32, u64>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_a = entropy(&ca);
    let h_b = entropy(&cb);
    if h_a == 0.0 && h_b == 0.0 {
        // both trivial partitions over the same nodes: identical
        return Ok(F::one());
    }
    let mut mutual = 0.0;
    for (&(x, y), &c) in &joint {
        let pxy = c as f64 / n;
        let px = ca[&x] as f64 / n;
        let py = cb[&y] as f64 / n;
        mutual += pxy * (pxy / (px * py)).ln();
    }
    let value = (2.0 * mutual / (h_a + h_b)).clamp(0.0, 1.0);
    Ok(F::from_f64_lossy(value))
}

/// Inclusion of one cluster of the first partition in the best-matching
/// cluster of the second.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterInclusion {
    pub cluster_a: u32,
    pub size: usize,
    /// Cluster of the second partition holding the largest share.
    pub best_b: u32,
    pub overlap: usize,
    pub fraction: f64,
    /// More than 75% of the members are in `best_b`.
    pub over_75: bool,
    /// More than 90% of the members are in `best_b`.
    pub over_90: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionComparison<F: Real = Weight> {
    pub nmi: F,
    pub inclusions: Vec<ClusterInclusion>,
}

/// NMI plus a per-cluster inclusiveness report of `a` into `b`.
///
/// Both partitions must cover the same node universe.
pub fn compare_partitions<F: Real>(
    a: &Partition<F>,
    b: &Partition<F>,
) -> Result<PartitionComparison<F>> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "partitions cover different node sets ({} vs {} nodes)",
            a.len(),
            b.len()
        )));
    }
    let nmi = nmi::<F>(a.assignment(), b.assignment())?;
    let mut inclusions = Vec::with_capacity(a.n_clusters());
    for (cluster_a, members) in a.clusters().into_iter().enumerate() {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &node in &members {
            *counts.entry(b.cluster_of(node)).or_insert(0) += 1;
        }
        let (&best_b, &overlap) = counts
            .iter()
            .max_by_key(|&(&id, &c)| (c, std::cmp::Reverse(id)))
            .expect("clusters are non-empty");
        let fraction = overlap as f64 / members.len() as f64;
        inclusions.push(ClusterInclusion {
            cluster_a: cluster_a as u32,
            size: members.len(),
            best_b,
            overlap,
            fraction,
            over_75: fraction > 0.75,
            over_90: fraction > 0.90,
        });
    }
    Ok(PartitionComparison { nmi, inclusions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k4() -> WeightedGraph {
        WeightedGraph::new(
            4,
            vec![
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap()
    }

    fn two_triangles_with_bridge() -> WeightedGraph {
        WeightedGraph::new(
            6,
            vec![
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn graph_validation() {
        assert!(WeightedGraph::<f64>::new(2, vec![(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::<f64>::new(2, vec![(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::<f64>::new(2, vec![(0, 1, -2.0)]).is_err());
        assert!(WeightedGraph::<f64>::new(2, vec![(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        assert!(WeightedGraph::<f64>::new(2, vec![(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn visit_rates_examples() {
        let rates = visit_rates(&k4()).unwrap();
        assert_eq!(rates, vec![0.25; 4]);

        let path = WeightedGraph::new(2, vec![(0, 1, 5.0)]).unwrap();
        assert_eq!(visit_rates(&path).unwrap(), vec![0.5, 0.5]);

        let star = WeightedGraph::new(
            4,
            vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)],
        )
        .unwrap();
        let rates = visit_rates(&star).unwrap();
        assert_eq!(rates[0], 0.5);
        for leaf in 1..4 {
            assert!((rates[leaf] - 1.0 / 6.0).abs() < 1e-15);
        }
        let total: f64 = rates.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);

        let edgeless = WeightedGraph::<f64>::new(3, vec![]).unwrap();
        assert!(visit_rates(&edgeless).is_err());
    }

    #[test]
    fn k4_codelengths_are_exact() {
        let g = k4();
        let single: f64 = map_equation(&g, &Partition::single_module(4)).unwrap();
        assert_eq!(single, 2.0);
        let singletons: f64 = map_equation(&g, &Partition::singletons(4)).unwrap();
        assert_eq!(singletons, 4.0);
    }

    #[test]
    fn uncovered_node_is_a_domain_error() {
        let g = k4();
        let short = Partition::from_labels(&[0, 0, 1]);
        assert!(map_equation(&g, &short).is_err());
    }

    #[test]
    fn triangles_partition_beats_trivial_partitions() {
        let g = two_triangles_with_bridge();
        let triangles: f64 =
            map_equation(&g, &Partition::from_labels(&[0, 0, 0, 1, 1, 1])).unwrap();
        let single: f64 = map_equation(&g, &Partition::single_module(6)).unwrap();
        let singletons: f64 = map_equation(&g, &Partition::singletons(6)).unwrap();
        assert!(triangles < single);
        assert!(triangles < singletons);
    }

    #[test]
    fn detect_two_disjoint_triangles() {
        let g = WeightedGraph::new(
            6,
            vec![
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
            ],
        )
        .unwrap();
        let part = detect_communities(&g, 1, 5).unwrap();
        assert_eq!(part.n_clusters(), 2);
        assert_eq!(part.cluster_of(0), part.cluster_of(1));
        assert_eq!(part.cluster_of(0), part.cluster_of(2));
        assert_eq!(part.cluster_of(3), part.cluster_of(4));
        assert_ne!(part.cluster_of(0), part.cluster_of(3));
    }

    #[test]
    fn detect_k4_single_module() {
        let part = detect_communities(&k4(), 0, 5).unwrap();
        assert_eq!(part.n_clusters(), 1);
        assert_eq!(part.codelength(), Some(2.0));
    }

    #[test]
    fn detect_single_edge_merges() {
        let g = WeightedGraph::new(2, vec![(0, 1, 3.0)]).unwrap();
        let part = detect_communities(&g, 0, 3).unwrap();
        assert_eq!(part.n_clusters(), 1);
        assert_eq!(part.codelength(), Some(1.0));
    }

    #[test]
    fn detect_isolated_nodes_become_trailing_singletons() {
        let g = WeightedGraph::new(5, vec![(1, 3, 1.0)]).unwrap();
        let part = detect_communities(&g, 0, 3).unwrap();
        // cluster 0 is the detected pair; 0, 2, 4 are singletons after it
        assert_eq!(part.cluster_of(1), 0);
        assert_eq!(part.cluster_of(3), 0);
        assert_eq!(part.n_clusters(), 4);
        let mut singleton_ids = vec![part.cluster_of(0), part.cluster_of(2), part.cluster_of(4)];
        singleton_ids.sort_unstable();
        assert_eq!(singleton_ids, vec![1, 2, 3]);
    }

    #[test]
    fn detect_empty_and_edgeless() {
        let empty = WeightedGraph::<f64>::new(0, vec![]).unwrap();
        let part = detect_communities(&empty, 0, 2).unwrap();
        assert!(part.is_empty());

        let edgeless = WeightedGraph::<f64>::new(3, vec![]).unwrap();
        let part = detect_communities(&edgeless, 0, 2).unwrap();
        assert_eq!(part.n_clusters(), 3);

        assert!(detect_communities(&k4(), 0, 0).is_err());
    }

    #[test]
    fn detect_never_beats_oracle_and_matches_on_small_graphs() {
        use rand::Rng;
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..25 {
            let n = rng.gen_range(4..=8usize);
            let mut edges = Vec::new();
            // random connected-ish graph: a spine plus random extras
            for v in 1..n as u32 {
                let u = rng.gen_range(0..v);
                edges.push((u, v, rng.gen_range(1..=4) as f64));
            }
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if rng.gen_bool(0.3) && !edges.iter().any(|e| (e.0, e.1) == (u, v)) {
                        edges.push((u, v, rng.gen_range(1..=4) as f64));
                    }
                }
            }
            let g = WeightedGraph::new(n, edges).unwrap();
            let exact = exhaustive_best_partition(&g).unwrap();
            let greedy = detect_communities(&g, 12345, 20).unwrap();
            let le = exact.codelength().unwrap();
            let lg = greedy.codelength().unwrap();
            assert!(lg >= le - 1e-12, "greedy below the global optimum");
            assert!(
                (lg - le).abs() < 1e-9,
                "greedy {lg} missed optimum {le} on {n} nodes"
            );
        }
    }

    #[test]
    fn detect_is_deterministic() {
        let g = two_triangles_with_bridge();
        let a = detect_communities(&g, 7, 8).unwrap();
        let b = detect_communities(&g, 7, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn codelength_invariant_under_weight_scaling() {
        let g = two_triangles_with_bridge();
        let scaled = WeightedGraph::new(
            6,
            g.edges().iter().map(|&(u, v, w)| (u, v, w * 17.0)).collect(),
        )
        .unwrap();
        for labels in [[0u32, 0, 0, 1, 1, 1], [0, 1, 2, 3, 4, 5], [0, 0, 0, 0, 0, 0]] {
            let a: f64 = map_equation(&g, &Partition::from_labels(&labels)).unwrap();
            let b: f64 = map_equation(&scaled, &Partition::from_labels(&labels)).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_examples() {
        let part = exhaustive_best_partition(&k4()).unwrap();
        assert_eq!(part.n_clusters(), 1);
        assert_eq!(part.codelength(), Some(2.0));

        let triangle =
            WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let part = exhaustive_best_partition(&triangle).unwrap();
        assert_eq!(part.n_clusters(), 1);

        let empty = WeightedGraph::<f64>::new(0, vec![]).unwrap();
        assert!(exhaustive_best_partition(&empty).unwrap().is_empty());

        let mut edges = Vec::new();
        for u in 0..11u32 {
            for v in (u + 1)..11 {
                edges.push((u, v, 1.0));
            }
        }
        let big = WeightedGraph::new(11, edges).unwrap();
        assert!(matches!(
            exhaustive_best_partition(&big),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn nmi_and_inclusiveness() {
        let a: Partition = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        let same = compare_partitions(&a, &a).unwrap();
        assert_eq!(same.nmi, 1.0);
        for inc in &same.inclusions {
            assert_eq!(inc.fraction, 1.0);
            assert!(inc.over_75 && inc.over_90);
        }

        let one: Partition = Partition::single_module(6);
        let cmp = compare_partitions(&one, &a).unwrap();
        assert_eq!(cmp.nmi, 0.0);

        // 10-member cluster with 8 members in one target cluster
        let mut labels_a = vec![0u32; 10];
        labels_a.extend([1, 1]);
        let mut labels_b = vec![0u32; 8];
        labels_b.extend([1, 1, 1, 1]);
        let pa: Partition = Partition::from_labels(&labels_a);
        let pb: Partition = Partition::from_labels(&labels_b);
        let cmp = compare_partitions(&pa, &pb).unwrap();
        let inc = &cmp.inclusions[0];
        assert_eq!(inc.size, 10);
        assert!((inc.fraction - 0.8).abs() < 1e-12);
        assert!(inc.over_75 && !inc.over_90);

        let short: Partition = Partition::from_labels(&[0, 1]);
        assert!(compare_partitions(&pa, &short).is_err());
    }

    #[test]
    fn nmi_bounds() {
        use rand::Rng;
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(2..40);
            let a: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let b: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let v: f64 = nmi(&a, &b).unwrap();
            assert!((0.0..=1.0).contains(&v));
            let self_v: f64 = nmi(&a, &a).unwrap();
            assert!((self_v - 1.0).abs() < 1e-12);
        }
        assert!(nmi::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn works_in_f32() {
        let g = WeightedGraph::<f32>::new(
            4,
            vec![
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        let l: f32 = map_equation(&g, &Partition::single_module(4)).unwrap();
        assert_eq!(l, 2.0);
        let part = detect_communities(&g, 0, 4).unwrap();
        assert_eq!(part.n_clusters(), 1);
    }
}
