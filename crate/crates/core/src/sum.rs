//! Deterministic pairwise (tree) summation.
//!
//! [`pairwise_sum`] splits a slice at `len / 2` recursively and adds the two
//! halves left-to-right. [`PairwiseTree`] keeps every partial sum of that same
//! recursion so a handful of updated terms can be re-summed in
//! `O(updated · log n)`, and its [`total`](PairwiseTree::total) is
//! bit-identical to `pairwise_sum` over the current terms.

use std::ops::Add;

use num_traits::Zero;

pub fn pairwise_sum<V>(terms: &[V]) -> V
where
    V: Copy + Zero + Add<Output = V>,
{
    match terms.len() {
        0 => V::zero(),
        1 => terms[0],
        n => {
            let (left, right) = terms.split_at(n / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

const NO_PARENT: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Node<V> {
    value: V,
    left: usize,
    right: usize,
    parent: usize,
}

/// Pairwise summation tree with point updates.
#[derive(Debug, Clone)]
pub struct PairwiseTree<V> {
    nodes: Vec<Node<V>>,
    leaves: Vec<usize>,
    root: Option<usize>,
}

impl<V> PairwiseTree<V>
where
    V: Copy + Zero + Add<Output = V>,
{
    pub fn new(terms: &[V]) -> Self {
        let mut tree = PairwiseTree {
            nodes: Vec::with_capacity(2 * terms.len()),
            leaves: vec![0; terms.len()],
            root: None,
        };
        if !terms.is_empty() {
            let root = tree.build(terms, 0, NO_PARENT);
            tree.root = Some(root);
        }
        tree
    }

    fn build(&mut self, terms: &[V], offset: usize, parent: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            value: V::zero(),
            left: NO_PARENT,
            right: NO_PARENT,
            parent,
        });
        if terms.len() == 1 {
            self.nodes[id].value = terms[0];
            self.leaves[offset] = id;
            return id;
        }
        let mid = terms.len() / 2;
        let left = self.build(&terms[..mid], offset, id);
        let right = self.build(&terms[mid..], offset + mid, id);
        let value = self.nodes[left].value + self.nodes[right].value;
        let node = &mut self.nodes[id];
        node.left = left;
        node.right = right;
        node.value = value;
        id
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn term(&self, index: usize) -> V {
        self.nodes[self.leaves[index]].value
    }

    /// Replaces one term and refreshes the partial sums above it.
    pub fn set(&mut self, index: usize, value: V) {
        let mut id = self.leaves[index];
        self.nodes[id].value = value;
        id = self.nodes[id].parent;
        while id != NO_PARENT {
            let Node { left, right, parent, .. } = self.nodes[id];
            self.nodes[id].value = self.nodes[left].value + self.nodes[right].value;
            id = parent;
        }
    }

    pub fn total(&self) -> V {
        self.root.map_or_else(V::zero, |root| self.nodes[root].value)
    }
}
