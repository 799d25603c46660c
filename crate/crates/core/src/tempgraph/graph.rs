use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::Dataset;
use crate::model::{Address, Transaction};
use crate::tempgraph::window::Partition;

/// How degrees are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Number of distinct counterparties in each direction.
    #[default]
    Distinct,
    /// Number of transactions in each direction.
    TxCount,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Distinct => "distinct",
            Metric::TxCount => "txcount",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distinct" => Ok(Metric::Distinct),
            "txcount" | "tx_count" => Ok(Metric::TxCount),
            other => Err(format!("unknown metric {other:?} (distinct|txcount)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
    #[default]
    Total,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
            Direction::Total => "total",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            "total" => Ok(Direction::Total),
            other => Err(format!("unknown direction {other:?} (in|out|total)")),
        }
    }
}

/// Directed multigraph snapshot for one window. Parallel transactions
/// between the same ordered pair collapse into one edge with a count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowGraph {
    index: usize,
    vertices: HashSet<Address>,
    edges: HashMap<(Address, Address), u64>,
    tx_total: u64,
}

impl WindowGraph {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn vertices(&self) -> &HashSet<Address> {
        &self.vertices
    }

    pub fn edges(&self) -> &HashMap<(Address, Address), u64> {
        &self.edges
    }

    pub fn edge_count(&self, from: &Address, to: &Address) -> u64 {
        self.edges.get(&(*from, *to)).copied().unwrap_or(0)
    }

    /// Recipient-bearing transactions in the window.
    pub fn tx_total(&self) -> u64 {
        self.tx_total
    }
}

/// Builds `G_t` from a window's transactions. Contract creations add their
/// sender as a vertex but no edge; self-transfers add a `(v, v)` edge.
pub fn build_window_graph<'a>(
    index: usize,
    txs: impl IntoIterator<Item = &'a Transaction>,
) -> WindowGraph {
    let mut g = WindowGraph {
        index,
        vertices: HashSet::new(),
        edges: HashMap::new(),
        tx_total: 0,
    };
    for tx in txs {
        g.vertices.insert(tx.from);
        if let Some(to) = tx.to {
            g.vertices.insert(to);
            *g.edges.entry((tx.from, to)).or_insert(0) += 1;
            g.tx_total += 1;
        }
    }
    g
}

/// Builds one graph per window, in parallel.
pub fn build_window_graphs(ds: &Dataset, partition: &Partition) -> Vec<WindowGraph> {
    partition
        .windows
        .par_iter()
        .map(|w| build_window_graph(w.index, w.transactions(ds)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DegreeRecord {
    pub account: Address,
    pub indegree: u64,
    pub outdegree: u64,
    pub total: u64,
    pub metric: Metric,
}

impl DegreeRecord {
    pub fn zero(account: Address, metric: Metric) -> Self {
        Self {
            account,
            indegree: 0,
            outdegree: 0,
            total: 0,
            metric,
        }
    }

    pub fn get(&self, direction: Direction) -> u64 {
        match direction {
            Direction::In => self.indegree,
            Direction::Out => self.outdegree,
            Direction::Total => self.total,
        }
    }
}

/// Degree of every vertex of one window graph, keyed by account.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTable {
    pub window: usize,
    pub metric: Metric,
    records: BTreeMap<Address, DegreeRecord>,
}

impl DegreeTable {
    pub fn new(
        window: usize,
        metric: Metric,
        records: impl IntoIterator<Item = DegreeRecord>,
    ) -> Self {
        Self {
            window,
            metric,
            records: records.into_iter().map(|r| (r.account, r)).collect(),
        }
    }

    pub fn get(&self, account: &Address) -> Option<&DegreeRecord> {
        self.records.get(account)
    }

    /// Degree in `direction`, zero for accounts absent from the window.
    pub fn degree(&self, account: &Address, direction: Direction) -> u64 {
        self.get(account).map_or(0, |r| r.get(direction))
    }

    /// Records in address order.
    pub fn iter(&self) -> impl Iterator<Item = &DegreeRecord> {
        self.records.values()
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Address> {
        self.records.keys()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sum(&self, direction: Direction) -> u64 {
        self.iter().map(|r| r.get(direction)).sum()
    }
}

pub fn degree_table(g: &WindowGraph, metric: Metric) -> DegreeTable {
    let mut records: HashMap<Address, DegreeRecord> = g
        .vertices
        .iter()
        .map(|&v| (v, DegreeRecord::zero(v, metric)))
        .collect();
    for (&(from, to), &count) in &g.edges {
        let w = match metric {
            Metric::Distinct => 1,
            Metric::TxCount => count,
        };
        records
            .get_mut(&from)
            .expect("edge endpoint is a vertex")
            .outdegree += w;
        records
            .get_mut(&to)
            .expect("edge endpoint is a vertex")
            .indegree += w;
    }
    for r in records.values_mut() {
        r.total = r.indegree + r.outdegree;
    }
    DegreeTable {
        window: g.index,
        metric,
        records: records.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TxHash;

    fn a(n: u8) -> Address {
        Address::from_bytes([n; 20])
    }

    fn tx(h: u8, from: u8, to: Option<u8>) -> Transaction {
        Transaction::new(
            TxHash::from_bytes([h; 32]),
            1,
            1_644_451_200,
            a(from),
            to.map(a),
            None,
        )
        .unwrap()
    }

    #[test]
    fn parallel_edges_collapse_with_counts() {
        let txs = [tx(1, 1, Some(2)), tx(2, 1, Some(2)), tx(3, 1, Some(3))];
        let g = build_window_graph(1, &txs);
        assert_eq!(g.vertices().len(), 3);
        assert_eq!(g.edges().len(), 2);
        assert_eq!(g.edge_count(&a(1), &a(2)), 2);
        assert_eq!(g.edge_count(&a(1), &a(3)), 1);
        assert_eq!(g.tx_total(), 3);

        let distinct = degree_table(&g, Metric::Distinct);
        assert_eq!(distinct.degree(&a(1), Direction::Out), 2);
        assert_eq!(distinct.degree(&a(2), Direction::In), 1);
        let counted = degree_table(&g, Metric::TxCount);
        assert_eq!(counted.degree(&a(1), Direction::Out), 3);
        assert_eq!(counted.degree(&a(2), Direction::In), 2);
        assert_eq!(counted.sum(Direction::In), 3);
    }

    #[test]
    fn creation_only_sender_is_isolated_vertex() {
        let g = build_window_graph(1, &[tx(1, 1, None)]);
        assert_eq!(g.vertices().len(), 1);
        assert!(g.edges().is_empty());
        assert_eq!(g.tx_total(), 0);
        let t = degree_table(&g, Metric::Distinct);
        assert_eq!(
            t.get(&a(1)),
            Some(&DegreeRecord::zero(a(1), Metric::Distinct))
        );
    }

    #[test]
    fn self_loop_counts_both_directions() {
        let g = build_window_graph(1, &[tx(1, 1, Some(1))]);
        for metric in [Metric::Distinct, Metric::TxCount] {
            let t = degree_table(&g, metric);
            let r = t.get(&a(1)).unwrap();
            assert_eq!((r.indegree, r.outdegree, r.total), (1, 1, 2));
        }
    }

    #[test]
    fn metric_and_direction_parse() {
        assert_eq!("txcount".parse::<Metric>().unwrap(), Metric::TxCount);
        assert_eq!("out".parse::<Direction>().unwrap(), Direction::Out);
        assert!("both".parse::<Direction>().is_err());
    }
}
