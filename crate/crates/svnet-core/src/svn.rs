//! The statistically validated network and its multi-links.
//!
//! A multi-link between two investors carries up to nine simultaneously
//! validated state-pair co-occurrences, stored as a 9-bit mask in the
//! canonical order (b,b), (b,s), (b,bs), (s,b), (s,s), (s,bs), (bs,b),
//! (bs,s), (bs,bs) relative to the `i < j` orientation of the pair.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::community::WeightedGraph;
use crate::error::{Error, Result};
use crate::market_data::{Category, Dataset};
use crate::state_encoding::TradeState;
use crate::validation::{Correction, PairTest};
use crate::Weight;

/// 9-bit co-occurrence combination mask. 512 values are possible; the nine
/// most populated patterns carry the conventional labels C1 to C9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CombinationMask(u16);

const MASK_ALL: u16 = 0x1ff;
/// Bits validating opposite trading actions: (b,s) and (s,b).
const ANTI_DIAGONAL: u16 = (1 << 1) | (1 << 3);

/// The nine labeled patterns of the most populated combinations, with the
/// color used for link rendering.
const LABELED: [(&str, u16, &str); 9] = [
    ("C1", 1 << 0, "magenta"),
    ("C2", 1 << 4, "green"),
    ("C3", 1 << 8, "apricot"),
    ("C4", (1 << 0) | (1 << 4), "black"),
    ("C5", 1 << 2, "blue"),
    ("C6", 1 << 5, "orange"),
    ("C7", 1 << 3, "tan"),
    ("C8", (1 << 0) | (1 << 4) | (1 << 8), "brown"),
    ("C9", (1 << 2) | (1 << 5), "purple"),
];

fn transpose_bits(bits: u16) -> u16 {
    let mut out = 0u16;
    for a in 0..3 {
        for b in 0..3 {
            if bits & (1 << (3 * a + b)) != 0 {
                out |= 1 << (3 * b + a);
            }
        }
    }
    out
}

impl CombinationMask {
    pub const EMPTY: CombinationMask = CombinationMask(0);

    pub fn from_bits(bits: u16) -> Result<CombinationMask> {
        if bits > MASK_ALL {
            return Err(Error::Domain(format!(
                "combination mask {bits:#b} uses more than 9 bits"
            )));
        }
        Ok(CombinationMask(bits))
    }

    fn bit(state_i: TradeState, state_j: TradeState) -> u16 {
        1 << (3 * state_i.index() + state_j.index())
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn set(&mut self, state_i: TradeState, state_j: TradeState) {
        self.0 |= Self::bit(state_i, state_j);
    }

    pub fn contains(self, state_i: TradeState, state_j: TradeState) -> bool {
        self.0 & Self::bit(state_i, state_j) != 0
    }

    /// The same combination seen from the other endpoint: bit (P,Q)
    /// becomes bit (Q,P).
    pub fn transpose(self) -> CombinationMask {
        CombinationMask(transpose_bits(self.0))
    }

    /// Number of validated co-occurrences; the link weight.
    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    /// Mask with the opposite-action bits (b,s) and (s,b) cleared.
    pub fn without_opposite(self) -> CombinationMask {
        CombinationMask(self.0 & !ANTI_DIAGONAL)
    }

    pub fn has_opposite(self) -> bool {
        self.0 & ANTI_DIAGONAL != 0
    }

    /// Validated state pairs, in canonical order.
    pub fn pairs(self) -> impl Iterator<Item = (TradeState, TradeState)> {
        let bits = self.0;
        (0..9usize).filter_map(move |k| {
            (bits & (1 << k) != 0).then(|| {
                (
                    TradeState::from_index(k / 3),
                    TradeState::from_index(k % 3),
                )
            })
        })
    }

    /// Conventional label when the mask (or its transpose) matches one of
    /// the nine Table patterns.
    pub fn label(self) -> Option<&'static str> {
        let t = transpose_bits(self.0);
        LABELED
            .iter()
            .find(|&&(_, bits, _)| self.0 == bits || t == bits)
            .map(|&(name, _, _)| name)
    }

    /// Rendering color of the labeled patterns.
    pub fn color(self) -> Option<&'static str> {
        let t = transpose_bits(self.0);
        LABELED
            .iter()
            .find(|&&(_, bits, _)| self.0 == bits || t == bits)
            .map(|&(_, _, color)| color)
    }

    /// Look up a labeled pattern by name (`"C1"` to `"C9"`).
    pub fn from_label(label: &str) -> Option<CombinationMask> {
        LABELED
            .iter()
            .find(|&&(name, _, _)| name == label)
            .map(|&(_, bits, _)| CombinationMask(bits))
    }
}

impl fmt::Display for CombinationMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:09b}", self.0)
    }
}

impl FromStr for CombinationMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<CombinationMask> {
        if s.len() != 9 {
            return Err(Error::Domain(format!(
                "combination mask {s:?} must be 9 binary digits"
            )));
        }
        let bits = u16::from_str_radix(s, 2)
            .map_err(|_| Error::Domain(format!("combination mask {s:?} is not binary")))?;
        CombinationMask::from_bits(bits)
    }
}

/// A validated multi-link between investors `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiLink {
    pub i: u32,
    pub j: u32,
    pub mask: CombinationMask,
}

impl MultiLink {
    /// Weight of the link: the population count of its mask.
    pub fn weight(&self) -> u32 {
        self.mask.weight()
    }
}

/// Investors as nodes, multi-links as edges.
#[derive(Debug, Clone)]
pub struct ValidatedNetwork {
    ids: Vec<String>,
    categories: Vec<Category>,
    links: Vec<MultiLink>,
    correction: Correction,
}

impl ValidatedNetwork {
    /// Assemble a network from node metadata and links; links are
    /// canonicalized, validated against self-links and duplicate pairs.
    pub fn from_parts(
        ids: Vec<String>,
        categories: Vec<Category>,
        links: Vec<MultiLink>,
        correction: Correction,
    ) -> Result<ValidatedNetwork> {
        if ids.len() != categories.len() {
            return Err(Error::Domain(
                "node ids and categories must have equal length".into(),
            ));
        }
        let mut canonical: Vec<MultiLink> = Vec::with_capacity(links.len());
        for link in links {
            if link.i == link.j {
                return Err(Error::Domain(format!(
                    "self-link on node {} is not allowed",
                    link.i
                )));
            }
            if link.mask.is_empty() {
                return Err(Error::Domain(format!(
                    "empty mask on link ({}, {})",
                    link.i, link.j
                )));
            }
            if (link.i.max(link.j) as usize) >= ids.len() {
                return Err(Error::Domain(format!(
                    "link ({}, {}) references a node outside the network",
                    link.i, link.j
                )));
            }
            canonical.push(if link.i < link.j {
                link
            } else {
                MultiLink {
                    i: link.j,
                    j: link.i,
                    mask: link.mask.transpose(),
                }
            });
        }
        canonical.sort_unstable_by_key(|l| (l.i, l.j));
        if canonical.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::Domain(
                "more than one multi-link for the same pair".into(),
            ));
        }
        Ok(ValidatedNetwork {
            ids,
            categories,
            links: canonical,
            correction,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, node: u32) -> &str {
        &self.ids[node as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.ids.iter().position(|x| x == id).map(|i| i as u32)
    }

    pub fn category(&self, node: u32) -> Category {
        self.categories[node as usize]
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn links(&self) -> &[MultiLink] {
        &self.links
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn correction(&self) -> Correction {
        self.correction
    }
}

/// Build the validated network from one correction run's surviving tests.
///
/// Orientation is normalized: a validated `(state_j, state_i)` arriving as
/// a `(j, i)` test sets the transposed bit of the `i < j` link.
pub fn assemble_network(
    validated: &[PairTest],
    ds: &Dataset,
    correction: Correction,
) -> Result<ValidatedNetwork> {
    let mut masks: BTreeMap<(u32, u32), CombinationMask> = BTreeMap::new();
    for test in validated {
        if test.i == test.j {
            return Err(Error::Domain(format!(
                "validated test pairs investor {} with itself",
                test.i
            )));
        }
        let (key, state_i, state_j) = if test.i < test.j {
            ((test.i, test.j), test.state_i, test.state_j)
        } else {
            ((test.j, test.i), test.state_j, test.state_i)
        };
        masks.entry(key).or_default().set(state_i, state_j);
    }
    let links = masks
        .into_iter()
        .map(|((i, j), mask)| MultiLink { i, j, mask })
        .collect();
    ValidatedNetwork::from_parts(
        ds.ids().to_vec(),
        ds.categories().to_vec(),
        links,
        correction,
    )
}

/// Remove the co-occurrence validations of opposite trading actions.
///
/// Only the (b,s) and (s,b) bits are cleared; links whose mask empties are
/// dropped, mixed masks keep their same-direction evidence. Idempotent.
pub fn strip_opposite_links(net: &ValidatedNetwork) -> ValidatedNetwork {
    let links = net
        .links
        .iter()
        .filter_map(|l| {
            let mask = l.mask.without_opposite();
            (!mask.is_empty()).then_some(MultiLink { mask, ..*l })
        })
        .collect();
    ValidatedNetwork {
        ids: net.ids.clone(),
        categories: net.categories.clone(),
        links,
        correction: net.correction,
    }
}

/// One row of the combination census.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusRow {
    pub mask: CombinationMask,
    pub label: Option<&'static str>,
    pub color: Option<&'static str>,
    pub count: u64,
    pub percent: f64,
}

/// Census of co-occurrence combinations over the network's links.
#[derive(Debug, Clone, Default)]
pub struct Census {
    counts: BTreeMap<CombinationMask, u64>,
    total: u64,
}

impl Census {
    pub fn count_of(&self, mask: CombinationMask) -> u64 {
        self.counts.get(&mask).copied().unwrap_or(0)
    }

    /// Number of distinct combinations observed.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Rows sorted by descending count, then mask.
    pub fn rows(&self) -> Vec<CensusRow> {
        let mut rows: Vec<CensusRow> = self
            .counts
            .iter()
            .map(|(&mask, &count)| CensusRow {
                mask,
                label: mask.label(),
                color: mask.color(),
                count,
                percent: if self.total == 0 {
                    0.0
                } else {
                    100.0 * count as f64 / self.total as f64
                },
            })
            .collect();
        rows.sort_by(|a, b| b.count.cmp(&a.count).then(a.mask.cmp(&b.mask)));
        rows
    }
}

/// Count how many links carry each distinct combination mask.
pub fn combination_census(net: &ValidatedNetwork) -> Census {
    let mut counts: BTreeMap<CombinationMask, u64> = BTreeMap::new();
    for link in &net.links {
        *counts.entry(link.mask).or_insert(0) += 1;
    }
    Census {
        total: net.links.len() as u64,
        counts,
    }
}

/// Weighted undirected simple graph over the network's nodes, one edge per
/// multi-link with weight equal to the mask population count.
pub fn link_weight_graph(net: &ValidatedNetwork) -> WeightedGraph {
    let edges = net
        .links
        .iter()
        .map(|l| (l.i, l.j, l.weight() as Weight))
        .collect::<Vec<_>>();
    WeightedGraph::new(net.n_nodes(), edges).expect("validated links form a simple graph")
}

/// Connected components over multi-links, any mask bit connecting.
#[derive(Debug, Clone)]
pub struct Components {
    /// Components sorted by descending size, members ascending.
    pub components: Vec<Vec<u32>>,
}

impl Components {
    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.len()).collect()
    }
}

pub fn connected_components(net: &ValidatedNetwork) -> Components {
    let n = net.n_nodes();
    let mut parent: Vec<u32> = (0..n as u32).collect();

    fn find(parent: &mut [u32], x: u32) -> u32 {
        let mut root = x;
        while parent[root as usize] != root {
            root = parent[root as usize];
        }
        let mut cur = x;
        while parent[cur as usize] != root {
            let next = parent[cur as usize];
            parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    for link in &net.links {
        let a = find(&mut parent, link.i);
        let b = find(&mut parent, link.j);
        if a != b {
            parent[a.max(b) as usize] = a.min(b);
        }
    }

    let mut groups: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for node in 0..n as u32 {
        groups.entry(find(&mut parent, node)).or_default().push(node);
    }
    let mut components: Vec<Vec<u32>> = groups.into_values().collect();
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    Components { components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Dataset;
    use std::collections::BTreeMap as Map;

    fn tiny_dataset(n: u32) -> Dataset {
        let calendar = vec![chrono::NaiveDate::from_ymd_opt(2001, 6, 1).unwrap()];
        let rows = (0..n)
            .map(|i| (format!("inv{i:02}"), 0u32, 1u64, 0u64))
            .collect();
        Dataset::from_day_rows(rows, calendar, &Map::new(), &Map::new())
            .unwrap()
            .0
    }

    fn test_pair(i: u32, j: u32, si: TradeState, sj: TradeState) -> PairTest {
        PairTest {
            i,
            j,
            state_i: si,
            state_j: sj,
            t: 10,
            n_p: 2,
            n_q: 2,
            n_pq: 2,
            p_value: 1e-9,
        }
    }

    use TradeState::{Buy, BuySell, Sell};

    #[test]
    fn mask_labels_and_weights() {
        let c = |label: &str| CombinationMask::from_label(label).unwrap();
        assert_eq!(c("C1").weight(), 1);
        assert_eq!(c("C4").weight(), 2);
        assert_eq!(c("C8").weight(), 3);
        assert_eq!(c("C9").weight(), 2);
        assert_eq!(c("C4").label(), Some("C4"));
        assert_eq!(c("C4").color(), Some("black"));
        // transposed orientation keeps the label
        assert_eq!(c("C5").transpose().label(), Some("C5"));
        assert_eq!(c("C9").transpose().label(), Some("C9"));
        assert_eq!(c("C7").transpose().label(), Some("C7"));
        // a mixed mask has no label
        let mut mixed = CombinationMask::EMPTY;
        mixed.set(Buy, Buy);
        mixed.set(Buy, BuySell);
        assert_eq!(mixed.label(), None);
        assert_eq!(CombinationMask::from_bits(0x200).is_err(), true);
    }

    #[test]
    fn mask_roundtrips_as_binary_string() {
        let c4 = CombinationMask::from_label("C4").unwrap();
        let s = c4.to_string();
        assert_eq!(s, "000010001");
        assert_eq!(s.parse::<CombinationMask>().unwrap(), c4);
        assert!("xyz".parse::<CombinationMask>().is_err());
        assert!("111111111111".parse::<CombinationMask>().is_err());
    }

    #[test]
    fn assemble_c4_from_two_validations() {
        let ds = tiny_dataset(3);
        let tests = vec![test_pair(1, 2, Buy, Buy), test_pair(1, 2, Sell, Sell)];
        let net = assemble_network(&tests, &ds, Correction::Bonferroni).unwrap();
        assert_eq!(net.n_links(), 1);
        let link = net.links()[0];
        assert_eq!(link.mask.label(), Some("C4"));
        assert_eq!(link.weight(), 2);
    }

    #[test]
    fn assemble_single_validation_is_c1() {
        let ds = tiny_dataset(3);
        let net =
            assemble_network(&[test_pair(1, 2, Buy, Buy)], &ds, Correction::Fdr).unwrap();
        assert_eq!(net.links()[0].mask.label(), Some("C1"));
        assert_eq!(net.links()[0].weight(), 1);
    }

    #[test]
    fn assemble_empty_keeps_nodes() {
        let ds = tiny_dataset(4);
        let net = assemble_network(&[], &ds, Correction::Bonferroni).unwrap();
        assert_eq!(net.n_nodes(), 4);
        assert_eq!(net.n_links(), 0);
    }

    #[test]
    fn orientation_is_normalized_on_assembly() {
        let ds = tiny_dataset(3);
        // (1_b, 2_s) listed canonically vs. the same validation listed as (2_s, 1_b)
        let forward =
            assemble_network(&[test_pair(1, 2, Buy, Sell)], &ds, Correction::Fdr).unwrap();
        let reversed =
            assemble_network(&[test_pair(2, 1, Sell, Buy)], &ds, Correction::Fdr).unwrap();
        assert_eq!(forward.links(), reversed.links());
        // a validated (j_b, i_s) sets the (s, b) bit of the i < j link
        let net =
            assemble_network(&[test_pair(2, 1, Buy, Sell)], &ds, Correction::Fdr).unwrap();
        assert!(net.links()[0].mask.contains(Sell, Buy));
    }

    #[test]
    fn self_link_rejected() {
        let ds = tiny_dataset(3);
        assert!(assemble_network(&[test_pair(1, 1, Buy, Buy)], &ds, Correction::Fdr).is_err());
    }

    #[test]
    fn strip_removes_opposite_only_links() {
        let ds = tiny_dataset(4);
        let tests = vec![
            test_pair(0, 1, Sell, Buy), // C7: removed entirely
            test_pair(1, 2, Buy, Buy),  // C4 with the next one: untouched
            test_pair(1, 2, Sell, Sell),
            test_pair(2, 3, Buy, Buy), // mixed: reduced to C1
            test_pair(2, 3, Buy, Sell),
        ];
        let net = assemble_network(&tests, &ds, Correction::Fdr).unwrap();
        assert_eq!(net.n_links(), 3);
        let stripped = strip_opposite_links(&net);
        assert_eq!(stripped.n_links(), 2);
        let l12 = stripped.links().iter().find(|l| (l.i, l.j) == (1, 2)).unwrap();
        assert_eq!(l12.mask.label(), Some("C4"));
        let l23 = stripped.links().iter().find(|l| (l.i, l.j) == (2, 3)).unwrap();
        assert_eq!(l23.mask.label(), Some("C1"));
        assert_eq!(l23.weight(), 1);
        // idempotent
        let twice = strip_opposite_links(&stripped);
        assert_eq!(twice.links(), stripped.links());
        // weight equals mask population count everywhere
        for l in stripped.links() {
            assert_eq!(l.weight(), l.mask.weight());
        }
    }

    #[test]
    fn census_counts() {
        let ds = tiny_dataset(8);
        let tests = vec![
            test_pair(0, 1, Buy, Buy),
            test_pair(2, 3, Buy, Buy),
            test_pair(4, 5, Buy, Buy),
        ];
        let net = assemble_network(&tests, &ds, Correction::Fdr).unwrap();
        let census = combination_census(&net);
        assert_eq!(census.distinct(), 1);
        assert_eq!(census.count_of(CombinationMask::from_label("C1").unwrap()), 3);
        assert_eq!(census.total(), 3);

        let empty = assemble_network(&[], &ds, Correction::Fdr).unwrap();
        assert_eq!(combination_census(&empty).distinct(), 0);

        let tests = vec![
            test_pair(0, 1, Buy, Buy),
            test_pair(2, 3, Sell, Sell),
            test_pair(4, 5, Buy, Buy),
            test_pair(4, 5, Sell, Sell),
        ];
        let net = assemble_network(&tests, &ds, Correction::Fdr).unwrap();
        let census = combination_census(&net);
        assert_eq!(census.distinct(), 3);
        for row in census.rows() {
            assert_eq!(row.count, 1);
        }
    }

    #[test]
    fn weight_graph_from_masks() {
        let ds = tiny_dataset(4);
        let tests = vec![
            test_pair(0, 1, Buy, Buy),
            test_pair(0, 1, Sell, Sell),
            test_pair(0, 1, BuySell, BuySell), // C8 -> weight 3
            test_pair(2, 3, Buy, Buy),         // C1 -> weight 1
        ];
        let net = assemble_network(&tests, &ds, Correction::Fdr).unwrap();
        let g = link_weight_graph(&net);
        let mut weights: Vec<f64> = g.edges().iter().map(|e| e.2).collect();
        weights.sort_by(f64::total_cmp);
        assert_eq!(weights, vec![1.0, 3.0]);
    }

    #[test]
    fn components_examples() {
        let ds = tiny_dataset(4);
        let chain = assemble_network(
            &[test_pair(1, 2, Buy, Buy), test_pair(2, 3, Buy, Buy)],
            &ds,
            Correction::Fdr,
        )
        .unwrap();
        let comps = connected_components(&chain);
        assert_eq!(comps.sizes(), vec![3, 1]);
        assert_eq!(comps.components[0], vec![1, 2, 3]);

        let none = assemble_network(&[], &ds, Correction::Fdr).unwrap();
        assert_eq!(connected_components(&none).sizes(), vec![1, 1, 1, 1]);

        let two = assemble_network(
            &[test_pair(0, 1, Buy, Buy), test_pair(2, 3, Buy, Buy)],
            &ds,
            Correction::Fdr,
        )
        .unwrap();
        assert_eq!(connected_components(&two).sizes(), vec![2, 2]);
    }
}
