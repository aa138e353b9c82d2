//! Statement registry: statement ids, their spans and a statement-level CFG.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use super::ast::*;
use super::resolve::{ResolvedUnit, Symbol};
use crate::model::{SourceSpan, SpanSet, StatementId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    VarDecl,
    Assign,
    If,
    While,
    For,
    Require,
    Emit,
    Return,
    Expr,
    /// A modifier invocation with arguments; evaluating them is a step of its own.
    ModifierCall,
    /// The implicit return at the closing brace of a function body.
    Exit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Sequence,
    Branch,
    LoopBack,
    Call,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Owner {
    Function(usize),
    Modifier(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatementInfo {
    pub span: SourceSpan,
    pub kind: StatementKind,
    pub owner: Owner,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatementRegistry {
    pub statements: BTreeMap<StatementId, StatementInfo>,
    pub edges: BTreeSet<(StatementId, StatementId, EdgeKind)>,
    /// Every span an instruction may legitimately carry: statements, expressions,
    /// parameters and modifier invocations.
    pub spans: SpanSet,
    /// First statement executed by each function (index into the symbol table).
    pub entries: Vec<StatementId>,
    succ: BTreeMap<StatementId, Vec<StatementId>>,
}

impl StatementRegistry {
    pub fn span(&self, id: StatementId) -> Option<SourceSpan> {
        self.statements.get(&id).map(|s| s.span)
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn successors(&self, id: StatementId) -> &[StatementId] {
        self.succ.get(&id).map_or(&[], |v| v.as_slice())
    }

    pub fn has_edge(&self, from: StatementId, to: StatementId) -> bool {
        self.successors(from).contains(&to)
    }

    /// Whether `to` can be reached from `from` along one or more CFG edges.
    pub fn reaches(&self, from: StatementId, to: StatementId) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<StatementId> = self.successors(from).iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                queue.extend(self.successors(n).iter().copied());
            }
        }
        false
    }

    /// The innermost statement whose span contains `span`.
    pub fn statement_of_span(&self, span: SourceSpan) -> Option<StatementId> {
        self.statements
            .iter()
            .filter(|(_, s)| s.span.contains(span))
            .min_by_key(|(id, s)| (s.span.length, **id))
            .map(|(id, _)| *id)
    }
}

const ENTRY: StatementId = StatementId::MAX;

type Preds = Vec<(StatementId, EdgeKind)>;

pub fn build_statement_registry(unit: &ResolvedUnit) -> StatementRegistry {
    let mut b = Builder {
        unit,
        reg: StatementRegistry::default(),
        entry_hits: Vec::new(),
        returns: Vec::new(),
        calls: Vec::new(),
    };
    b.register_spans();

    let mut exits = Vec::new();
    for fi in 0..unit.symbols.functions.len() {
        let f = unit.function(fi);
        b.reg.statements.insert(
            f.exit.id,
            StatementInfo {
                span: f.exit.span,
                kind: StatementKind::Exit,
                owner: Owner::Function(fi),
            },
        );
        b.entry_hits.clear();
        let out = b.expand(fi, 0, vec![(ENTRY, EdgeKind::Sequence)]);
        b.connect(&out, f.exit.id);
        let entry = b.entry_hits.first().copied().unwrap_or(f.exit.id);
        b.reg.entries.push(entry);
        exits.push(f.exit.id);
    }
    for (stmt, callee) in std::mem::take(&mut b.calls) {
        let entry = b.reg.entries[callee];
        b.edge(stmt, entry, EdgeKind::Call);
        b.edge(exits[callee], stmt, EdgeKind::Call);
    }
    for &(from, to, _) in &b.reg.edges {
        let v = b.reg.succ.entry(from).or_default();
        if !v.contains(&to) {
            v.push(to);
        }
    }
    b.reg
}

struct Builder<'u> {
    unit: &'u ResolvedUnit,
    reg: StatementRegistry,
    entry_hits: Vec<StatementId>,
    /// Pending `return` statements of the function body currently being expanded.
    returns: Vec<Preds>,
    calls: Vec<(StatementId, usize)>,
}

impl Builder<'_> {
    fn register_spans(&mut self) {
        let ast = &self.unit.ast;
        let mut spans = SpanSet::default();
        let stmt = |s: &Stmt, spans: &mut SpanSet| {
            walk_stmts(s, &mut |s| {
                if s.kind.is_statement() {
                    spans.insert(s.span);
                }
            });
            walk_stmt_exprs(s, &mut |e| {
                spans.insert(e.span);
            });
        };
        for (_, f) in ast.functions() {
            for p in &f.params {
                spans.insert(p.span);
            }
            for inv in &f.modifiers {
                spans.insert(inv.span);
                for a in &inv.args {
                    walk_expr(a, &mut |e| {
                        spans.insert(e.span);
                    });
                }
            }
            for s in &f.body.stmts {
                stmt(s, &mut spans);
            }
            spans.insert(f.exit.span);
        }
        for (_, m) in ast.modifiers() {
            for p in &m.params {
                spans.insert(p.span);
            }
            for s in &m.body.stmts {
                stmt(s, &mut spans);
            }
        }
        self.reg.spans = spans;
    }

    fn edge(&mut self, from: StatementId, to: StatementId, kind: EdgeKind) {
        if from == ENTRY {
            self.entry_hits.push(to);
        } else {
            self.reg.edges.insert((from, to, kind));
        }
    }

    fn connect(&mut self, preds: &Preds, to: StatementId) {
        for &(from, kind) in preds {
            self.edge(from, to, kind);
        }
    }

    fn add(&mut self, id: StatementId, span: SourceSpan, kind: StatementKind, owner: Owner) {
        self.reg
            .statements
            .insert(id, StatementInfo { span, kind, owner });
    }

    /// Expands modifier `level` of function `fi` (or its body once all modifiers are used).
    fn expand(&mut self, fi: usize, level: usize, preds: Preds) -> Preds {
        let f = self.unit.function(fi);
        if level == f.modifiers.len() {
            self.returns.push(Vec::new());
            let mut out = self.block(&f.body, Owner::Function(fi), preds, fi, level);
            out.extend(self.returns.pop().unwrap());
            return out;
        }
        let inv = &f.modifiers[level];
        let mut preds = preds;
        if !inv.args.is_empty() {
            self.add(
                inv.id,
                inv.span,
                StatementKind::ModifierCall,
                Owner::Function(fi),
            );
            self.connect(&preds, inv.id);
            for a in &inv.args {
                self.note_calls(inv.id, a);
            }
            preds = vec![(inv.id, EdgeKind::Sequence)];
        }
        let Some(Symbol::Modifier(mi)) = self.unit.binding(inv.id) else {
            return preds;
        };
        let md = self.unit.modifier(mi);
        self.block(&md.body, Owner::Modifier(mi), preds, fi, level)
    }

    fn block(
        &mut self,
        b: &Block,
        owner: Owner,
        mut preds: Preds,
        fi: usize,
        level: usize,
    ) -> Preds {
        for s in &b.stmts {
            preds = self.stmt(s, owner, preds, fi, level);
        }
        preds
    }

    fn note_calls(&mut self, stmt: StatementId, e: &Expr) {
        walk_expr(e, &mut |x| {
            if let Some(Symbol::Function(callee)) = self.unit.binding(x.id) {
                if matches!(x.kind, ExprKind::Call { .. }) {
                    self.calls.push((stmt, callee));
                }
            }
        });
    }

    fn simple(
        &mut self,
        s: &Stmt,
        kind: StatementKind,
        owner: Owner,
        preds: &Preds,
        exprs: &[&Expr],
    ) {
        self.add(s.id, s.span, kind, owner);
        self.connect(preds, s.id);
        for e in exprs {
            self.note_calls(s.id, e);
        }
    }

    fn stmt(&mut self, s: &Stmt, owner: Owner, preds: Preds, fi: usize, level: usize) -> Preds {
        let seq = vec![(s.id, EdgeKind::Sequence)];
        match &s.kind {
            StmtKind::VarDecl { init, .. } => {
                let exprs: Vec<&Expr> = init.iter().collect();
                self.simple(s, StatementKind::VarDecl, owner, &preds, &exprs);
                seq
            }
            StmtKind::Assign { target, value } => {
                self.simple(s, StatementKind::Assign, owner, &preds, &[target, value]);
                seq
            }
            StmtKind::Require { cond, .. } => {
                self.simple(s, StatementKind::Require, owner, &preds, &[cond]);
                vec![(s.id, EdgeKind::Branch)]
            }
            StmtKind::Emit { args, .. } => {
                let exprs: Vec<&Expr> = args.iter().collect();
                self.simple(s, StatementKind::Emit, owner, &preds, &exprs);
                seq
            }
            StmtKind::Expr(e) => {
                self.simple(s, StatementKind::Expr, owner, &preds, &[e]);
                seq
            }
            StmtKind::Return(e) => {
                let exprs: Vec<&Expr> = e.iter().collect();
                self.simple(s, StatementKind::Return, owner, &preds, &exprs);
                if let Some(pending) = self.returns.last_mut() {
                    pending.push((s.id, EdgeKind::Sequence));
                }
                Vec::new()
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.simple(s, StatementKind::If, owner, &preds, &[cond]);
                let branch = vec![(s.id, EdgeKind::Branch)];
                let mut out = self.stmt(then_branch, owner, branch.clone(), fi, level);
                match else_branch {
                    Some(e) => out.extend(self.stmt(e, owner, branch, fi, level)),
                    None => out.extend(branch),
                }
                out
            }
            StmtKind::While { cond, body } => {
                self.simple(s, StatementKind::While, owner, &preds, &[cond]);
                let body_out = self.stmt(body, owner, vec![(s.id, EdgeKind::Branch)], fi, level);
                self.back_edges(&body_out, s.id);
                vec![(s.id, EdgeKind::Branch)]
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                let preds = match init {
                    Some(i) => self.stmt(i, owner, preds, fi, level),
                    None => preds,
                };
                self.simple(s, StatementKind::For, owner, &preds, &[cond]);
                let mut body_out =
                    self.stmt(body, owner, vec![(s.id, EdgeKind::Branch)], fi, level);
                if let Some(st) = step {
                    body_out = self.stmt(st, owner, body_out, fi, level);
                }
                self.back_edges(&body_out, s.id);
                vec![(s.id, EdgeKind::Branch)]
            }
            StmtKind::Block(b) => self.block(b, owner, preds, fi, level),
            StmtKind::Placeholder => self.expand(fi, level + 1, preds),
        }
    }

    fn back_edges(&mut self, preds: &Preds, header: StatementId) {
        for &(from, _) in preds {
            self.edge(from, header, EdgeKind::LoopBack);
        }
    }
}
