//! Block (2-connected component) decomposition of valid clusters.

use super::{Edge, GraphError, LabeledGraph};

/// One maximal 2-connected subgraph.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    /// Labels in ascending order.
    pub vertices: Vec<usize>,
    /// Edges in lexicographic order.
    pub edges: Vec<Edge>,
}

impl Block {
    /// The block as a graph on `1..=k`, relabelled in ascending label order.
    /// The relabelling is monotone, so edge orientations are preserved.
    pub fn compact(&self) -> LabeledGraph {
        let pos = |v: usize| self.vertices.binary_search(&v).expect("block vertex") + 1;
        LabeledGraph::new(self.vertices.len(), self.edges.iter().map(|&(i, j)| (pos(i), pos(j))))
            .expect("block edges are simple")
    }
}

/// Tree of blocks glued at cut vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTree {
    pub blocks: Vec<Block>,
    pub cut_vertices: Vec<usize>,
    /// `(block index, cut vertex)` incidences of the block-cut tree.
    pub links: Vec<(usize, usize)>,
}

impl BlockTree {
    /// Checks `|E| = Σ|E(B)|` and `|V| = 1 + Σ(|V(B)| - 1)`.
    pub fn accounting_holds(&self, g: &LabeledGraph) -> bool {
        let edges: usize = self.blocks.iter().map(|b| b.edges.len()).sum();
        let verts: usize = 1 + self.blocks.iter().map(|b| b.vertices.len() - 1).sum::<usize>();
        edges == g.edge_count() && verts == g.n()
    }
}

/// Splits a valid cluster into its blocks (Tarjan's edge-stack traversal).
/// Blocks are ordered by their smallest edge.
pub fn block_decomposition(g: &LabeledGraph) -> Result<BlockTree, GraphError> {
    if !g.is_valid() {
        return Err(match g.bridges().first() {
            Some(&(i, j)) if g.is_connected() => GraphError::Bridge(i, j),
            _ if !g.is_connected() => GraphError::Disconnected,
            _ => GraphError::Invalid("fewer than three vertices".into()),
        });
    }
    let n = g.n();
    if g.edge_count() == 0 {
        return Ok(BlockTree { blocks: Vec::new(), cut_vertices: Vec::new(), links: Vec::new() });
    }
    let inc = g.incidence();
    let mut disc = vec![0usize; n + 1];
    let mut low = vec![0usize; n + 1];
    let mut timer = 0;
    let mut edge_stack: Vec<usize> = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();

    timer += 1;
    disc[1] = timer;
    low[1] = timer;
    let mut stack: Vec<(usize, Option<usize>, usize)> = vec![(1, None, 0)];
    while let Some(top) = stack.last_mut() {
        let (v, parent_edge, slot) = *top;
        if slot < inc[v].len() {
            top.2 += 1;
            let (w, e) = inc[v][slot];
            if Some(e) == parent_edge {
                continue;
            }
            if disc[w] == 0 {
                edge_stack.push(e);
                timer += 1;
                disc[w] = timer;
                low[w] = timer;
                stack.push((w, Some(e), 0));
            } else if disc[w] < disc[v] {
                edge_stack.push(e);
                low[v] = low[v].min(disc[w]);
            }
        } else {
            stack.pop();
            if let (Some(e), Some(&(p, _, _))) = (parent_edge, stack.last()) {
                low[p] = low[p].min(low[v]);
                if low[v] >= disc[p] {
                    let mut block = Vec::new();
                    while let Some(x) = edge_stack.pop() {
                        block.push(x);
                        if x == e {
                            break;
                        }
                    }
                    blocks.push(block);
                }
            }
        }
    }

    let mut out: Vec<Block> = blocks
        .into_iter()
        .map(|mut idx| {
            idx.sort_unstable();
            let edges: Vec<Edge> = idx.iter().map(|&e| g.edges()[e]).collect();
            let mut vertices: Vec<usize> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
            vertices.sort_unstable();
            vertices.dedup();
            Block { vertices, edges }
        })
        .collect();
    out.sort_by(|a, b| a.edges[0].cmp(&b.edges[0]));

    let mut membership = vec![0usize; n + 1];
    for b in &out {
        for &v in &b.vertices {
            membership[v] += 1;
        }
    }
    let cut_vertices: Vec<usize> = (1..=n).filter(|&v| membership[v] > 1).collect();
    let links = out
        .iter()
        .enumerate()
        .flat_map(|(k, b)| {
            b.vertices.iter().filter(|v| membership[**v] > 1).map(move |&v| (k, v)).collect::<Vec<_>>()
        })
        .collect();
    Ok(BlockTree { blocks: out, cut_vertices, links })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_is_one_block() {
        let g = LabeledGraph::cycle(3).unwrap();
        let t = block_decomposition(&g).unwrap();
        assert_eq!(t.blocks.len(), 1);
        assert!(t.cut_vertices.is_empty());
        assert!(t.accounting_holds(&g));
    }

    #[test]
    fn bowtie_has_cut_vertex_three() {
        let g = LabeledGraph::new(5, [(1, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5)]).unwrap();
        let t = block_decomposition(&g).unwrap();
        assert_eq!(t.blocks.len(), 2);
        assert_eq!(t.cut_vertices, vec![3]);
        assert_eq!(t.links, vec![(0, 3), (1, 3)]);
        assert_eq!(t.blocks[1].compact().to_string(), "3;1-2,1-3,2-3");
        assert!(t.accounting_holds(&g));
    }

    #[test]
    fn complete_four_graph_single_block() {
        let g = LabeledGraph::complete(4);
        let t = block_decomposition(&g).unwrap();
        assert_eq!(t.blocks.len(), 1);
        assert_eq!(t.blocks[0].edges.len(), 6);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let pendant = LabeledGraph::new(4, [(1, 2), (1, 3), (2, 3), (1, 4)]).unwrap();
        assert_eq!(block_decomposition(&pendant), Err(GraphError::Bridge(1, 4)));
        let split = LabeledGraph::new(6, [(1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (5, 6)]).unwrap();
        assert_eq!(block_decomposition(&split), Err(GraphError::Disconnected));
    }

    #[test]
    fn single_vertex_has_no_blocks() {
        let t = block_decomposition(&LabeledGraph::empty(1)).unwrap();
        assert!(t.blocks.is_empty());
        assert!(t.accounting_holds(&LabeledGraph::empty(1)));
    }
}
