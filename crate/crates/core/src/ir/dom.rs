//! Dominator tree (Cooper, Harvey and Kennedy's iterative algorithm).

use std::collections::BTreeMap;

use super::types::{BlockId, IrFunction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomTree {
    /// Immediate dominator of every reachable block; the entry maps to itself.
    pub idom: BTreeMap<BlockId, BlockId>,
    pub rpo: Vec<BlockId>,
}

impl DomTree {
    pub fn compute(f: &IrFunction) -> Self {
        let rpo = f.reverse_postorder();
        let order: BTreeMap<BlockId, usize> =
            rpo.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let preds = f.predecessors();
        let entry = f.entry();
        let mut idom: BTreeMap<BlockId, BlockId> = BTreeMap::new();
        idom.insert(entry, entry);
        let mut changed = true;
        while changed {
            changed = false;
            for &b in rpo.iter().skip(1) {
                let mut new_idom: Option<BlockId> = None;
                for &p in &preds[&b] {
                    if !idom.contains_key(&p) {
                        continue;
                    }
                    new_idom = Some(match new_idom {
                        None => p,
                        Some(cur) => intersect(&idom, &order, p, cur),
                    });
                }
                let new_idom = new_idom.expect("reachable block has a processed predecessor");
                if idom.get(&b) != Some(&new_idom) {
                    idom.insert(b, new_idom);
                    changed = true;
                }
            }
        }
        DomTree { idom, rpo }
    }

    pub fn is_reachable(&self, b: BlockId) -> bool {
        self.idom.contains_key(&b)
    }

    /// Whether `a` dominates `b` (reflexive). Unreachable blocks dominate nothing.
    pub fn dominates(&self, a: BlockId, b: BlockId) -> bool {
        let Some(mut cur) = self.idom.get(&b).map(|_| b) else {
            return false;
        };
        loop {
            if cur == a {
                return true;
            }
            let up = self.idom[&cur];
            if up == cur {
                return false;
            }
            cur = up;
        }
    }

    pub fn children(&self, b: BlockId) -> Vec<BlockId> {
        self.rpo
            .iter()
            .copied()
            .filter(|&c| c != b && self.idom.get(&c) == Some(&b))
            .collect()
    }
}

fn intersect(
    idom: &BTreeMap<BlockId, BlockId>,
    order: &BTreeMap<BlockId, usize>,
    mut a: BlockId,
    mut b: BlockId,
) -> BlockId {
    while a != b {
        while order[&a] > order[&b] {
            a = idom[&a];
        }
        while order[&b] > order[&a] {
            b = idom[&b];
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::Visibility;
    use crate::ir::types::{Block, BranchOrigin, Instr, Op};
    use crate::model::{JumpType, Provenance};

    fn term(op: Op) -> Instr {
        Instr {
            id: 0,
            op,
            prov: Provenance::synthetic(),
            jump: JumpType::Regular,
            modifier_depth: 0,
        }
    }

    fn func(edges: &[(BlockId, &[BlockId])]) -> IrFunction {
        let blocks = edges
            .iter()
            .map(|(id, succ)| {
                let op = match succ {
                    [] => Op::Return(None),
                    [t] => Op::Jump(*t),
                    [a, b] => Op::Branch {
                        cond: 0,
                        then_to: *a,
                        else_to: *b,
                        origin: BranchOrigin::Plain,
                    },
                    _ => unreachable!(),
                };
                Block {
                    id: *id,
                    instrs: vec![term(op)],
                }
            })
            .collect();
        IrFunction {
            name: "f".into(),
            contract: 0,
            arity: 0,
            visibility: Visibility::External,
            returns_value: false,
            blocks,
            next_block: 10,
        }
    }

    #[test]
    fn diamond() {
        let f = func(&[(0, &[1, 2]), (1, &[3]), (2, &[3]), (3, &[])]);
        let d = DomTree::compute(&f);
        for b in 0..4 {
            assert!(d.dominates(0, b));
        }
        assert_eq!(d.idom[&3], 0);
        assert!(!d.dominates(1, 3));
        assert!(!d.dominates(2, 3));
        let mut kids = d.children(0);
        kids.sort();
        assert_eq!(kids, vec![1, 2, 3]);
    }

    #[test]
    fn loop_and_unreachable() {
        let f = func(&[(0, &[1]), (1, &[2, 3]), (2, &[1]), (3, &[]), (4, &[3])]);
        let d = DomTree::compute(&f);
        assert_eq!(d.idom[&2], 1);
        assert_eq!(d.idom[&3], 1);
        assert!(!d.is_reachable(4));
        assert!(!d.dominates(4, 3));
    }
}
