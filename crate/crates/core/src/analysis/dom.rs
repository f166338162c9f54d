//! Dominator trees.
//!
//! Uses the iterative two-finger algorithm of Cooper, Harvey, and Kennedy
//! over reverse post-order numbers.

use super::cfg::{reverse_postorder, Cfg};
use crate::ir::Block;

#[derive(Clone, Debug)]
pub struct DomTree {
    entry: usize,
    /// Immediate dominator per node; `None` for unreachable nodes. The entry
    /// is its own immediate dominator.
    idom: Vec<Option<usize>>,
    rpo: Vec<usize>,
    rpo_index: Vec<usize>,
}

const UNREACHED: usize = usize::MAX;

impl DomTree {
    /// Compute dominators of a dense graph.
    pub fn compute(entry: usize, succs: &[Vec<usize>]) -> DomTree {
        let n = succs.len();
        let rpo = reverse_postorder(entry, succs);
        let mut rpo_index = vec![UNREACHED; n];
        for (i, &b) in rpo.iter().enumerate() {
            rpo_index[b] = i;
        }
        let mut preds = vec![vec![]; n];
        for (b, ss) in succs.iter().enumerate() {
            if rpo_index[b] == UNREACHED {
                continue;
            }
            for &s in ss {
                preds[s].push(b);
            }
        }
        let mut idom: Vec<Option<usize>> = vec![None; n];
        idom[entry] = Some(entry);
        let intersect = |idom: &[Option<usize>], mut a: usize, mut b: usize| {
            while a != b {
                while rpo_index[a] > rpo_index[b] {
                    a = idom[a].unwrap();
                }
                while rpo_index[b] > rpo_index[a] {
                    b = idom[b].unwrap();
                }
            }
            a
        };
        let mut changed = true;
        while changed {
            changed = false;
            for &b in rpo.iter().skip(1) {
                let mut new: Option<usize> = None;
                for &p in &preds[b] {
                    if idom[p].is_none() {
                        continue;
                    }
                    new = Some(match new {
                        None => p,
                        Some(x) => intersect(&idom, p, x),
                    });
                }
                if new.is_some() && idom[b] != new {
                    idom[b] = new;
                    changed = true;
                }
            }
        }
        DomTree {
            entry,
            idom,
            rpo,
            rpo_index,
        }
    }

    pub fn from_cfg(cfg: &Cfg) -> DomTree {
        DomTree::compute(cfg.entry.index(), &cfg.dense_succs())
    }

    pub fn is_reachable(&self, n: usize) -> bool {
        self.idom.get(n).map_or(false, Option::is_some)
    }

    /// Immediate dominator; the entry maps to itself.
    pub fn idom(&self, n: usize) -> Option<usize> {
        self.idom.get(n).copied().flatten()
    }

    pub fn dominates(&self, a: usize, b: usize) -> bool {
        if !self.is_reachable(a) || !self.is_reachable(b) {
            return false;
        }
        let mut x = b;
        loop {
            if x == a {
                return true;
            }
            if x == self.entry {
                return false;
            }
            x = self.idom[x].unwrap();
        }
    }

    /// Closest common dominator of two reachable nodes.
    pub fn common_dominator(&self, mut a: usize, mut b: usize) -> Option<usize> {
        if !self.is_reachable(a) || !self.is_reachable(b) {
            return None;
        }
        while a != b {
            while self.rpo_index[a] > self.rpo_index[b] {
                a = self.idom[a].unwrap();
            }
            while self.rpo_index[b] > self.rpo_index[a] {
                b = self.idom[b].unwrap();
            }
        }
        Some(a)
    }

    /// Reachable nodes in reverse post-order.
    pub fn rpo(&self) -> &[usize] {
        &self.rpo
    }

    pub fn rpo_number(&self, n: usize) -> Option<usize> {
        match self.rpo_index.get(n) {
            Some(&i) if i != UNREACHED => Some(i),
            _ => None,
        }
    }

    // Block-typed conveniences.

    pub fn block_dominates(&self, a: Block, b: Block) -> bool {
        self.dominates(a.index(), b.index())
    }

    pub fn block_idom(&self, b: Block) -> Option<Block> {
        self.idom(b.index()).map(|i| Block(i as u32))
    }

    pub fn common_block_dominator(&self, a: Block, b: Block) -> Option<Block> {
        self.common_dominator(a.index(), b.index())
            .map(|i| Block(i as u32))
    }

    /// Children of each node in the dominator tree, in reverse post-order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]; self.idom.len()];
        for &b in &self.rpo {
            if b != self.entry {
                out[self.idom[b].unwrap()].push(b);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond() {
        // A -> {B, C} -> D
        let g = vec![vec![1, 2], vec![3], vec![3], vec![]];
        let d = DomTree::compute(0, &g);
        assert_eq!(d.idom(3), Some(0));
        assert_eq!(d.idom(1), Some(0));
        assert!(d.dominates(0, 3));
        assert!(!d.dominates(1, 3));
        assert_eq!(d.common_dominator(1, 2), Some(0));
    }

    #[test]
    fn chain_and_unreachable() {
        let g = vec![vec![1], vec![2], vec![], vec![1]];
        let d = DomTree::compute(0, &g);
        assert_eq!(d.idom(2), Some(1));
        assert_eq!(d.idom(1), Some(0));
        assert!(!d.is_reachable(3));
        assert!(!d.dominates(3, 1));
    }
}
