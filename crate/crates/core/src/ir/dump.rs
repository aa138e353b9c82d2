//! Textual IR listing, one instruction per line.

use std::fmt::Write;

use super::types::{BranchOrigin, Instr, IrModule, Op};
use crate::frontend::ast::Visibility;
use crate::model::JumpType;

pub fn dump_module(m: &IrModule) -> String {
    let mut out = String::new();
    for f in &m.functions {
        let vis = match f.visibility {
            Visibility::External => "external",
            Visibility::Internal => "internal",
        };
        let _ = writeln!(out, "function {}/{} {} {{", f.name, f.arity, vis);
        for b in &f.blocks {
            let _ = writeln!(out, "bb{}:", b.id);
            for i in &b.instrs {
                let _ = writeln!(out, "  {}", dump_instr(m, i));
            }
        }
        out.push_str("}\n");
    }
    out
}

fn list(vals: &[u32]) -> String {
    vals.iter()
        .map(|v| format!("%{v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn dump_instr(m: &IrModule, i: &Instr) -> String {
    let body = match &i.op {
        Op::Const(c) => format!("const {c}"),
        Op::Copy(a) => format!("copy %{a}"),
        Op::Binary(op, a, b) => format!("{} %{a}, %{b}", op.name()),
        Op::Cmp(op, a, b) => format!("cmp {} %{a}, %{b}", op.name()),
        Op::Not(a) => format!("not %{a}"),
        Op::Caller => "caller".to_string(),
        Op::Param(n) => format!("param {n}"),
        Op::LoadState { slot } => format!("load_state @{}", slot_name(m, *slot)),
        Op::StoreState { slot, value } => {
            format!("store_state @{} <- %{value}", slot_name(m, *slot))
        }
        Op::LoadKey { slot, key } => format!("load_key @{}[%{key}]", slot_name(m, *slot)),
        Op::StoreKey { slot, key, value } => {
            format!("store_key @{}[%{key}] <- %{value}", slot_name(m, *slot))
        }
        Op::Call { func, args } => {
            let name = m.functions.get(*func).map_or("?", |f| f.name.as_str());
            format!("call @{name}({})", list(args))
        }
        Op::Phi(inc) => {
            let parts: Vec<String> = inc.iter().map(|(b, v)| format!("[bb{b}: %{v}]")).collect();
            format!("phi {}", parts.join(", "))
        }
        Op::EmitEvent { event, args } => {
            let name = m
                .events
                .get(*event as usize)
                .map_or("?", |e| e.name.as_str());
            format!("emit_event {name}({})", list(args))
        }
        Op::ZkConstraint { index } => format!("zk_constraint {index}"),
        Op::Jump(t) => format!("jump bb{t}"),
        Op::Branch {
            cond,
            then_to,
            else_to,
            origin,
        } => {
            let tag = match origin {
                BranchOrigin::Plain => "",
                BranchOrigin::Require(_) => " require",
                BranchOrigin::DivGuard => " divguard",
                BranchOrigin::ForLoop => " for",
            };
            format!("branch %{cond}, bb{then_to}, bb{else_to}{tag}")
        }
        Op::Return(Some(v)) => format!("return %{v}"),
        Op::Return(None) => "return".to_string(),
        Op::Revert { message } => {
            let s = m.strings.get(*message as usize).map_or("?", |s| s.as_str());
            format!("revert {s:?}")
        }
    };
    let span = i
        .prov
        .primary_span
        .map_or_else(|| "-".to_string(), |s| s.to_string());
    let mut line = format!(
        "%{} = {body}  ; {span} conf={} md={}",
        i.id,
        i.prov.confidence.code(),
        i.modifier_depth
    );
    if let Some(k) = i.prov.zk_constraint {
        let _ = write!(line, " zk={k}");
    }
    if i.jump != JumpType::Regular {
        let _ = write!(line, " j={}", i.jump.as_char());
    }
    if !i.prov.inline_chain.is_empty() {
        let chain: Vec<String> = i.prov.inline_chain.iter().map(|s| s.to_string()).collect();
        let _ = write!(line, " via={}", chain.join(","));
    }
    line
}

fn slot_name(m: &IrModule, slot: u16) -> String {
    m.state
        .get(slot as usize)
        .map_or_else(|| format!("slot{slot}"), |s| s.name.clone())
}
