use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ndarray::Array2;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::InteractionMatrix;

/// Permutation of the interaction matrix into block lower triangular form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    /// `permutation[r]` is the original species at position `r`.
    pub permutation: Vec<usize>,
    /// Species of each diagonal block, ascending, in block order.
    pub blocks: Vec<Vec<usize>>,
    /// Blocks, counted from 1, with no other nonzero block in their row.
    pub i_set: Vec<usize>,
    /// Blocks, counted from 1, with no other nonzero block in their column.
    pub j_set: Vec<usize>,
    /// Edge relation used, `adjacency[i][j]` for `i -> j`.
    pub adjacency: Vec<Vec<bool>>,
}

impl BlockStructure {
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Block (counted from 0) containing `species`.
    pub fn block_of(&self, species: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&species))
            .expect("species belongs to a block")
    }

    /// `M` with rows and columns reordered by the permutation.
    pub fn permuted(&self, m: &Array2<f64>) -> Array2<f64> {
        let p = &self.permutation;
        Array2::from_shape_fn(m.dim(), |(r, c)| m[[p[r], p[c]]])
    }

    /// Every edge points to the same or an earlier block.
    pub fn is_block_lower_triangular(&self) -> bool {
        let n = self.adjacency.len();
        (0..n)
            .all(|i| (0..n).all(|j| !self.adjacency[i][j] || self.block_of(j) <= self.block_of(i)))
    }
}

fn graph(adj: &[Vec<bool>]) -> DiGraph<(), ()> {
    let n = adj.len();
    let mut g = DiGraph::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    g
}

fn components(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    tarjan_scc(&graph(adj))
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|v| v.index()).collect();
            c.sort_unstable();
            c
        })
        .collect()
}

/// The edge graph is strongly connected; a single species is irreducible.
pub fn is_irreducible(m: &InteractionMatrix) -> bool {
    m.dim() <= 1 || components(&m.adjacency()).len() == 1
}

pub fn block_triangularize(m: &InteractionMatrix) -> BlockStructure {
    let adjacency = m.adjacency();
    let n = adjacency.len();
    let comps = components(&adjacency);
    let k = comps.len();
    let mut comp_of = vec![0; n];
    for (c, members) in comps.iter().enumerate() {
        for &i in members {
            comp_of[i] = c;
        }
    }
    // depends[a][b]: block a is driven by block b, so b must come first
    let mut depends = vec![vec![false; k]; k];
    for i in 0..n {
        for j in 0..n {
            if adjacency[i][j] && comp_of[i] != comp_of[j] {
                depends[comp_of[i]][comp_of[j]] = true;
            }
        }
    }
    let mut pending: Vec<usize> = depends
        .iter()
        .map(|r| r.iter().filter(|&&d| d).count())
        .collect();
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..k)
        .filter(|&c| pending[c] == 0)
        .map(|c| Reverse((comps[c][0], c)))
        .collect();
    let mut order = Vec::with_capacity(k);
    while let Some(Reverse((_, c))) = ready.pop() {
        order.push(c);
        for a in 0..k {
            if depends[a][c] {
                pending[a] -= 1;
                if pending[a] == 0 {
                    ready.push(Reverse((comps[a][0], a)));
                }
            }
        }
    }
    let blocks: Vec<Vec<usize>> = order.iter().map(|&c| comps[c].clone()).collect();
    let permutation = blocks.iter().flatten().copied().collect();
    let i_set = order
        .iter()
        .enumerate()
        .filter(|&(_, &c)| !depends[c].iter().any(|&d| d))
        .map(|(pos, _)| pos + 1)
        .collect();
    let j_set = order
        .iter()
        .enumerate()
        .filter(|&(_, &c)| !(0..k).any(|a| depends[a][c]))
        .map(|(pos, _)| pos + 1)
        .collect();
    BlockStructure {
        permutation,
        blocks,
        i_set,
        j_set,
        adjacency,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn matrix(a: Array2<f64>) -> InteractionMatrix {
        InteractionMatrix::from_values(a)
    }

    #[test]
    fn irreducibility_examples() {
        assert!(is_irreducible(&matrix(array![[0.0]])));
        assert!(is_irreducible(&matrix(array![[0.0, 1.0], [1.0, 0.0]])));
        assert!(!is_irreducible(&matrix(array![[0.0, 0.0], [1.0, 0.0]])));
    }

    #[test]
    fn decoupled_gives_singletons() {
        let bs = block_triangularize(&matrix(Array2::zeros((3, 3))));
        assert_eq!(bs.k(), 3);
        assert_eq!(bs.sizes(), vec![1, 1, 1]);
        assert_eq!(bs.i_set, vec![1, 2, 3]);
        assert_eq!(bs.j_set, vec![1, 2, 3]);
        assert_eq!(bs.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn irreducible_gives_one_block() {
        let bs = block_triangularize(&matrix(array![
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 2.0],
            [3.0, 0.0, 0.0]
        ]));
        assert_eq!(bs.k(), 1);
        assert_eq!(bs.i_set, vec![1]);
        assert_eq!(bs.j_set, vec![1]);
    }

    #[test]
    fn two_blocks_with_one_way_coupling() {
        // species 3 is driven by species 1; {1, 2} coupled both ways
        let m = matrix(array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.0, 0.0]]);
        let bs = block_triangularize(&m);
        assert_eq!(bs.blocks, vec![vec![0, 1], vec![2]]);
        assert_eq!(bs.i_set, vec![1]);
        assert_eq!(bs.j_set, vec![2]);
        let pm = bs.permuted(m.values());
        assert_eq!(pm[[0, 2]], 0.0);
        assert_eq!(pm[[1, 2]], 0.0);
        assert!(bs.is_block_lower_triangular());
    }

    #[test]
    fn dependency_comes_first_regardless_of_index() {
        // species 1 is driven by species 2
        let bs = block_triangularize(&matrix(array![[0.0, 1.0], [0.0, 0.0]]));
        assert_eq!(bs.permutation, vec![1, 0]);
        assert_eq!(bs.i_set, vec![1]);
        assert_eq!(bs.j_set, vec![2]);
    }

    #[test]
    fn tiny_entries_are_not_edges() {
        let m = matrix(array![[0.0, 1e-12], [1.0, 0.0]]);
        assert!(!is_irreducible(&m));
    }
}
