//! Temporal regions.
//!
//! A temporal region (TR) is a set of blocks that execute within one instant
//! of physical time. Regions are delimited by `wait`:
//!
//! 1. the entry block and every block with a `wait`-terminated predecessor
//!    start a new region;
//! 2. a block whose predecessors all lie in one region joins that region;
//! 3. a block whose predecessors lie in distinct regions starts a new one.
//!
//! Back edges make a single pass insufficient, so the assignment is iterated
//! with a growing set of blocks forced to start a region.

use super::cfg::{build_cfg, Cfg};
use crate::ir::{Block, Opcode, UnitData};
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemporalRegion {
    /// The unique block through which the region is entered.
    pub head: Block,
    /// Member blocks in reverse post-order; the head comes first.
    pub blocks: Vec<Block>,
    /// Blocks ending in `wait`, `halt`, or `ret`, or branching to a block in
    /// another region.
    pub exiting: Vec<Block>,
}

#[derive(Clone, Debug)]
pub struct TemporalRegionMap {
    block_tr: Vec<Option<usize>>,
    regions: Vec<TemporalRegion>,
}

impl TemporalRegionMap {
    /// Region of a block; `None` for unreachable blocks.
    pub fn tr_of(&self, b: Block) -> Option<usize> {
        self.block_tr.get(b.index()).copied().flatten()
    }

    pub fn regions(&self) -> &[TemporalRegion] {
        &self.regions
    }

    pub fn region(&self, tr: usize) -> &TemporalRegion {
        &self.regions[tr]
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn is_head(&self, b: Block) -> bool {
        self.tr_of(b).map_or(false, |t| self.regions[t].head == b)
    }
}

fn ends_in_wait(unit: &UnitData, b: Block) -> bool {
    unit.terminator(b)
        .map_or(false, |t| unit.opcode(t) == Opcode::Wait)
}

/// Assign temporal regions to the blocks of a control-flow unit.
pub fn temporal_regions(unit: &UnitData) -> Result<TemporalRegionMap, String> {
    let cfg = build_cfg(unit)?;
    Ok(temporal_regions_of(unit, &cfg))
}

pub fn temporal_regions_of(unit: &UnitData, cfg: &Cfg) -> TemporalRegionMap {
    let rpo = cfg.rpo();
    let n = cfg.capacity();
    let mut reachable = vec![false; n];
    for &b in &rpo {
        reachable[b.index()] = true;
    }
    let mut forced: HashSet<Block> = HashSet::new();
    forced.insert(cfg.entry);
    for &b in &rpo {
        if cfg.preds(b).iter().any(|&p| reachable[p.index()] && ends_in_wait(unit, p)) {
            forced.insert(b);
        }
    }
    // `head[b]` names a region by its head block.
    let mut head: Vec<Option<Block>> = vec![None; n];
    loop {
        head.iter_mut().for_each(|h| *h = None);
        for &b in &rpo {
            if forced.contains(&b) {
                head[b.index()] = Some(b);
                continue;
            }
            let mut seen: Option<Block> = None;
            let mut distinct = false;
            for &p in cfg.preds(b) {
                if let Some(h) = head[p.index()] {
                    match seen {
                        None => seen = Some(h),
                        Some(s) if s != h => distinct = true,
                        _ => {}
                    }
                }
            }
            head[b.index()] = match (seen, distinct) {
                (Some(h), false) => Some(h),
                _ => Some(b),
            };
        }
        // Back edges were ignored above; any block whose predecessors now
        // disagree with it must start its own region.
        let mut grew = false;
        for &b in &rpo {
            let h = head[b.index()].unwrap();
            if h == b {
                continue;
            }
            if cfg
                .preds(b)
                .iter()
                .any(|&p| reachable[p.index()] && head[p.index()] != Some(h))
            {
                forced.insert(b);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let mut block_tr = vec![None; n];
    let mut regions: Vec<TemporalRegion> = vec![];
    let mut head_id: Vec<Option<usize>> = vec![None; n];
    for &b in &rpo {
        let h = head[b.index()].unwrap();
        let id = *head_id[h.index()].get_or_insert_with(|| {
            regions.push(TemporalRegion {
                head: h,
                blocks: vec![],
                exiting: vec![],
            });
            regions.len() - 1
        });
        block_tr[b.index()] = Some(id);
        regions[id].blocks.push(b);
    }
    for &b in &rpo {
        let id = block_tr[b.index()].unwrap();
        let term_exits = unit.terminator(b).map_or(false, |t| {
            matches!(unit.opcode(t), Opcode::Wait | Opcode::Halt | Opcode::Ret)
        });
        if term_exits || cfg.succs(b).iter().any(|s| block_tr[s.index()] != Some(id)) {
            regions[id].exiting.push(b);
        }
    }
    TemporalRegionMap { block_tr, regions }
}
