//! Control-flow graphs of functions and processes.

use crate::ir::{Block, UnitData};

/// Successor and predecessor edges derived from block terminators.
///
/// Edge lists are indexed by block arena index; predecessors appear once per
/// distinct predecessor block.
#[derive(Clone, Debug)]
pub struct Cfg {
    pub entry: Block,
    pub blocks: Vec<Block>,
    succs: Vec<Vec<Block>>,
    preds: Vec<Vec<Block>>,
}

pub fn build_cfg(unit: &UnitData) -> Result<Cfg, String> {
    if unit.is_entity() {
        return Err(format!("{} is an entity and has no control flow", unit.name));
    }
    let entry = unit.entry().ok_or_else(|| format!("{} has no blocks", unit.name))?;
    let n = unit.block_capacity();
    let mut succs = vec![vec![]; n];
    let mut preds: Vec<Vec<Block>> = vec![vec![]; n];
    let blocks: Vec<Block> = unit.blocks().collect();
    for &b in &blocks {
        for s in unit.successors(b) {
            if !unit.is_block_live(s) {
                continue;
            }
            if !succs[b.index()].contains(&s) {
                succs[b.index()].push(s);
            }
            if !preds[s.index()].contains(&b) {
                preds[s.index()].push(b);
            }
        }
    }
    Ok(Cfg {
        entry,
        blocks,
        succs,
        preds,
    })
}

impl Cfg {
    pub fn succs(&self, b: Block) -> &[Block] {
        &self.succs[b.index()]
    }

    pub fn preds(&self, b: Block) -> &[Block] {
        &self.preds[b.index()]
    }

    pub fn has_edge(&self, from: Block, to: Block) -> bool {
        self.succs(from).contains(&to)
    }

    pub fn capacity(&self) -> usize {
        self.succs.len()
    }

    /// Reachable blocks in reverse post-order from the entry.
    pub fn rpo(&self) -> Vec<Block> {
        let succ_idx: Vec<Vec<usize>> = self
            .succs
            .iter()
            .map(|ss| ss.iter().map(|b| b.index()).collect())
            .collect();
        reverse_postorder(self.entry.index(), &succ_idx)
            .into_iter()
            .map(|i| Block(i as u32))
            .collect()
    }

    /// Edge list as dense indices, for the graph algorithms.
    pub fn dense_succs(&self) -> Vec<Vec<usize>> {
        self.succs
            .iter()
            .map(|ss| ss.iter().map(|b| b.index()).collect())
            .collect()
    }
}

/// Reverse post-order of the nodes reachable from `entry`.
pub fn reverse_postorder(entry: usize, succs: &[Vec<usize>]) -> Vec<usize> {
    let mut visited = vec![false; succs.len()];
    let mut post = Vec::with_capacity(succs.len());
    // Iterative DFS keeping the next successor index per stack entry.
    let mut stack = vec![(entry, 0usize)];
    visited[entry] = true;
    while let Some(top) = stack.last_mut() {
        let node = top.0;
        if let Some(&s) = succs[node].get(top.1) {
            top.1 += 1;
            if !visited[s] {
                visited[s] = true;
                stack.push((s, 0));
            }
        } else {
            post.push(node);
            stack.pop();
        }
    }
    post.reverse();
    post
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textio::parse_module;

    #[test]
    fn edges_follow_terminators() {
        let m = parse_module(
            "proc @p (i1$ %c) -> () {\n%a:\n  %v = prb i1$ %c\n  br %v, %b, %a\n%b:\n  wait %b, %c\n}",
        )
        .unwrap();
        let (_, u) = m.units().next().unwrap();
        let cfg = build_cfg(u).unwrap();
        let (a, b) = (cfg.blocks[0], cfg.blocks[1]);
        assert_eq!(cfg.succs(a), &[b, a]);
        assert_eq!(cfg.preds(a), &[a]);
        assert_eq!(cfg.succs(b), &[b]);
        assert_eq!(cfg.rpo(), vec![a, b]);
    }

    #[test]
    fn entity_rejected() {
        let m = parse_module("entity @e () -> () {}").unwrap();
        let (_, u) = m.units().next().unwrap();
        assert!(build_cfg(u).is_err());
    }
}
