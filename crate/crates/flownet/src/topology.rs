//! Directed multigraph topology with a single origin/destination pair.
//!
//! Nodes are `0..=n` with the origin at 0 and the destination at n.
//! Parallel links are first-class; all per-link storage throughout the
//! crate is keyed by the dense `link_id`, never by (tail, head).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub link_id: usize,
    pub tail_node: usize,
    pub head_node: usize,
}

#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    links: Vec<Link>,          // indexed by link_id
    out_links: Vec<Vec<usize>>, // per node, ascending link_id
    in_links: Vec<Vec<usize>>,
    topo_order: Vec<usize>,    // nodes; every link goes earlier → later
}

impl Topology {
    /// Validates and orders a raw node/link list.
    ///
    /// Checks: dense unique link ids, node indices in range, acyclicity,
    /// origin = exactly node 0, destination = exactly node n, and a path
    /// from every node to the destination.
    pub fn new(node_count: usize, links: Vec<Link>) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::MultipleDestinations { nodes: vec![] });
        }
        let m = links.len();
        let mut by_id: Vec<Option<Link>> = vec![None; m];
        for link in &links {
            if link.link_id >= m {
                return Err(Error::LinkIdsNotDense {
                    reason: format!("id {} with only {} links", link.link_id, m),
                });
            }
            if by_id[link.link_id].is_some() {
                return Err(Error::LinkIdsNotDense { reason: format!("duplicate id {}", link.link_id) });
            }
            for node in [link.tail_node, link.head_node] {
                if node >= node_count {
                    return Err(Error::NodeIndexOutOfRange { link: link.link_id, node, node_count });
                }
            }
            if link.tail_node == link.head_node {
                return Err(Error::CycleDetected);
            }
            by_id[link.link_id] = Some(*link);
        }
        let links: Vec<Link> = by_id.into_iter().map(|l| l.expect("dense ids")).collect();

        let mut out_links = vec![Vec::new(); node_count];
        let mut in_links = vec![Vec::new(); node_count];
        for link in &links {
            out_links[link.tail_node].push(link.link_id);
            in_links[link.head_node].push(link.link_id);
        }

        // Kahn's algorithm first: a cycle diagnosis beats a missing-origin
        // one when both apply. Smallest ready node first for determinism.
        let mut indegree: Vec<usize> = (0..node_count).map(|v| in_links[v].len()).collect();
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> =
            (0..node_count).filter(|&v| indegree[v] == 0).map(std::cmp::Reverse).collect();
        let mut topo_order = Vec::with_capacity(node_count);
        while let Some(std::cmp::Reverse(v)) = ready.pop() {
            topo_order.push(v);
            for &e in &out_links[v] {
                let head = links[e].head_node;
                indegree[head] -= 1;
                if indegree[head] == 0 {
                    ready.push(std::cmp::Reverse(head));
                }
            }
        }
        if topo_order.len() != node_count {
            return Err(Error::CycleDetected);
        }

        let destination = node_count - 1;
        let origins: Vec<usize> = (0..node_count).filter(|&v| in_links[v].is_empty()).collect();
        if origins != [0] {
            return Err(Error::MultipleOrigins { nodes: origins });
        }
        let sinks: Vec<usize> = (0..node_count).filter(|&v| out_links[v].is_empty()).collect();
        if sinks != [destination] {
            return Err(Error::MultipleDestinations { nodes: sinks });
        }

        // Reverse reachability from the destination.
        let mut reaches = vec![false; node_count];
        reaches[destination] = true;
        let mut stack = vec![destination];
        while let Some(v) = stack.pop() {
            for &e in &in_links[v] {
                let tail = links[e].tail_node;
                if !reaches[tail] {
                    reaches[tail] = true;
                    stack.push(tail);
                }
            }
        }
        if let Some(node) = (0..node_count).find(|&v| !reaches[v]) {
            return Err(Error::NodeWithoutPathToDestination { node });
        }

        Ok(Topology { node_count, links, out_links, in_links, topo_order })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn destination(&self) -> usize {
        self.node_count - 1
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, link_id: usize) -> &Link {
        &self.links[link_id]
    }

    /// Outgoing link ids of `v`, ascending.
    pub fn out_links(&self, v: usize) -> &[usize] {
        &self.out_links[v]
    }

    /// Incoming link ids of `v`, ascending.
    pub fn in_links(&self, v: usize) -> &[usize] {
        &self.in_links[v]
    }

    /// Nodes ordered so every link goes from an earlier to a later entry.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }
}

/// Convenience constructor from (tail, head) pairs; ids follow list order.
pub fn topology_from_pairs(node_count: usize, pairs: &[(usize, usize)]) -> Result<Topology> {
    let links = pairs
        .iter()
        .enumerate()
        .map(|(link_id, &(tail_node, head_node))| Link { link_id, tail_node, head_node })
        .collect();
    Topology::new(node_count, links)
}
