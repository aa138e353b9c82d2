//! Name resolution: binds identifiers, calls, modifier invocations and emits.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::ast::*;
use crate::model::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown name `{name}` at {span}")]
    UnknownName { name: String, span: SourceSpan },
    #[error("ambiguous overload of `{name}` at {span}")]
    AmbiguousOverload { name: String, span: SourceSpan },
    #[error("duplicate definition of `{name}` at {span}")]
    DuplicateDefinition { name: String, span: SourceSpan },
    #[error("external function `{name}` cannot be called internally ({span})")]
    ExternalCall { name: String, span: SourceSpan },
    #[error("`{name}` expects {expected} arguments, {found} given ({span})")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        span: SourceSpan,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    StateVar(usize),
    /// A parameter or local variable, identified by its declaring node.
    Local(NodeId),
    Function(usize),
    Modifier(usize),
    Event(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVarInfo {
    pub name: String,
    pub contract: usize,
    pub ty: TypeName,
    pub node: NodeId,
    pub slot: u16,
    /// Position of the declaration in `contracts[contract].members`.
    pub member: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionInfo {
    pub name: String,
    pub contract: usize,
    pub member: usize,
    pub node: NodeId,
    pub arity: usize,
    pub visibility: Visibility,
    pub returns: Option<TypeName>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifierInfo {
    pub name: String,
    pub contract: usize,
    pub member: usize,
    pub node: NodeId,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventInfo {
    pub name: String,
    pub contract: usize,
    pub node: NodeId,
    pub params: Vec<TypeName>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    pub contracts: Vec<String>,
    pub state_vars: Vec<StateVarInfo>,
    pub functions: Vec<FunctionInfo>,
    pub modifiers: Vec<ModifierInfo>,
    pub events: Vec<EventInfo>,
}

/// A parsed source unit together with its name bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedUnit {
    pub ast: SourceUnit,
    pub symbols: SymbolTable,
    /// Identifier/index-base expressions, call expressions, modifier invocations and emit statements.
    pub bindings: BTreeMap<NodeId, Symbol>,
    /// Declared type of every local and parameter.
    pub local_types: BTreeMap<NodeId, TypeName>,
}

impl ResolvedUnit {
    pub fn function(&self, idx: usize) -> &Function {
        let info = &self.symbols.functions[idx];
        match &self.ast.contracts[info.contract].members[info.member] {
            Member::Function(f) => f,
            _ => unreachable!("function index points at a non-function member"),
        }
    }

    pub fn modifier(&self, idx: usize) -> &ModifierDef {
        let info = &self.symbols.modifiers[idx];
        match &self.ast.contracts[info.contract].members[info.member] {
            Member::Modifier(m) => m,
            _ => unreachable!("modifier index points at a non-modifier member"),
        }
    }

    pub fn state_var(&self, idx: usize) -> &StateVar {
        let info = &self.symbols.state_vars[idx];
        match &self.ast.contracts[info.contract].members[info.member] {
            Member::StateVar(v) => v,
            _ => unreachable!("state index points at a non-state member"),
        }
    }

    pub fn binding(&self, node: NodeId) -> Option<Symbol> {
        self.bindings.get(&node).copied()
    }

    /// External functions keyed by `name/arity`.
    pub fn external_functions(&self) -> impl Iterator<Item = (usize, &FunctionInfo)> {
        self.symbols
            .functions
            .iter()
            .enumerate()
            .filter(|(_, f)| f.visibility == Visibility::External)
    }
}

pub fn resolve(ast: SourceUnit) -> Result<ResolvedUnit, ResolveError> {
    let mut symbols = SymbolTable::default();
    let dup = |name: &str, span: SourceSpan| ResolveError::DuplicateDefinition {
        name: name.to_string(),
        span,
    };
    for (ci, c) in ast.contracts.iter().enumerate() {
        if symbols.contracts.contains(&c.name.name) {
            return Err(dup(&c.name.name, c.name.span));
        }
        symbols.contracts.push(c.name.name.clone());
        let mut names: HashMap<&str, &'static str> = HashMap::new();
        for (mi, m) in c.members.iter().enumerate() {
            match m {
                Member::StateVar(v) => {
                    if names.insert(&v.name.name, "var").is_some() {
                        return Err(dup(&v.name.name, v.name.span));
                    }
                    let slot = symbols.state_vars.len() as u16;
                    symbols.state_vars.push(StateVarInfo {
                        name: v.name.name.clone(),
                        contract: ci,
                        ty: v.ty.clone(),
                        node: v.id,
                        slot,
                        member: mi,
                    });
                }
                Member::Function(f) => {
                    if let Some(kind) = names.get(f.name.name.as_str()) {
                        if *kind != "fn" {
                            return Err(dup(&f.name.name, f.name.span));
                        }
                    }
                    names.insert(&f.name.name, "fn");
                    let clash = symbols.functions.iter().any(|g| {
                        g.name == f.name.name
                            && g.arity == f.params.len()
                            && (g.contract == ci
                                || (g.visibility == Visibility::External
                                    && f.visibility == Visibility::External))
                    });
                    if clash {
                        return Err(ResolveError::AmbiguousOverload {
                            name: f.name.name.clone(),
                            span: f.name.span,
                        });
                    }
                    symbols.functions.push(FunctionInfo {
                        name: f.name.name.clone(),
                        contract: ci,
                        member: mi,
                        node: f.id,
                        arity: f.params.len(),
                        visibility: f.visibility,
                        returns: f.returns.clone(),
                    });
                }
                Member::Modifier(md) => {
                    if names.insert(&md.name.name, "mod").is_some() {
                        return Err(dup(&md.name.name, md.name.span));
                    }
                    symbols.modifiers.push(ModifierInfo {
                        name: md.name.name.clone(),
                        contract: ci,
                        member: mi,
                        node: md.id,
                        arity: md.params.len(),
                    });
                }
                Member::Event(ev) => {
                    if names.insert(&ev.name.name, "event").is_some() {
                        return Err(dup(&ev.name.name, ev.name.span));
                    }
                    symbols.events.push(EventInfo {
                        name: ev.name.name.clone(),
                        contract: ci,
                        node: ev.id,
                        params: ev.params.iter().map(|p| p.ty.clone()).collect(),
                    });
                }
            }
        }
    }

    let mut r = Resolver {
        symbols: &symbols,
        bindings: BTreeMap::new(),
        local_types: BTreeMap::new(),
        scopes: Vec::new(),
        contract: 0,
    };
    for (ci, c) in ast.contracts.iter().enumerate() {
        r.contract = ci;
        for m in &c.members {
            match m {
                Member::StateVar(v) => {
                    if let Some(e) = &v.init {
                        r.expr(e)?;
                    }
                }
                Member::Function(f) => {
                    r.scopes.push(HashMap::new());
                    for p in &f.params {
                        r.declare(&p.name, p.id, &p.ty)?;
                    }
                    for inv in &f.modifiers {
                        let idx = symbols
                            .modifiers
                            .iter()
                            .position(|md| md.contract == ci && md.name == inv.name.name)
                            .ok_or_else(|| ResolveError::UnknownName {
                                name: inv.name.name.clone(),
                                span: inv.name.span,
                            })?;
                        if symbols.modifiers[idx].arity != inv.args.len() {
                            return Err(ResolveError::ArityMismatch {
                                name: inv.name.name.clone(),
                                expected: symbols.modifiers[idx].arity,
                                found: inv.args.len(),
                                span: inv.span,
                            });
                        }
                        r.bindings.insert(inv.id, Symbol::Modifier(idx));
                        for a in &inv.args {
                            r.expr(a)?;
                        }
                    }
                    r.block(&f.body)?;
                    r.scopes.pop();
                }
                Member::Modifier(md) => {
                    r.scopes.push(HashMap::new());
                    for p in &md.params {
                        r.declare(&p.name, p.id, &p.ty)?;
                    }
                    r.block(&md.body)?;
                    r.scopes.pop();
                }
                Member::Event(ev) => {
                    for p in &ev.params {
                        r.local_types.insert(p.id, p.ty.clone());
                    }
                }
            }
        }
    }
    let bindings = r.bindings;
    let local_types = r.local_types;
    Ok(ResolvedUnit {
        ast,
        symbols,
        bindings,
        local_types,
    })
}

struct Resolver<'s> {
    symbols: &'s SymbolTable,
    bindings: BTreeMap<NodeId, Symbol>,
    local_types: BTreeMap<NodeId, TypeName>,
    scopes: Vec<HashMap<String, NodeId>>,
    contract: usize,
}

impl Resolver<'_> {
    fn declare(&mut self, name: &Ident, node: NodeId, ty: &TypeName) -> Result<(), ResolveError> {
        let scope = self.scopes.last_mut().expect("scope");
        if scope.insert(name.name.clone(), node).is_some() {
            return Err(ResolveError::DuplicateDefinition {
                name: name.name.clone(),
                span: name.span,
            });
        }
        self.local_types.insert(node, ty.clone());
        Ok(())
    }

    fn lookup(&self, name: &str, span: SourceSpan) -> Result<Symbol, ResolveError> {
        for scope in self.scopes.iter().rev() {
            if let Some(&node) = scope.get(name) {
                return Ok(Symbol::Local(node));
            }
        }
        self.symbols
            .state_vars
            .iter()
            .position(|v| v.contract == self.contract && v.name == name)
            .map(Symbol::StateVar)
            .ok_or_else(|| ResolveError::UnknownName {
                name: name.to_string(),
                span,
            })
    }

    fn block(&mut self, b: &Block) -> Result<(), ResolveError> {
        self.scopes.push(HashMap::new());
        for s in &b.stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ResolveError> {
        match &s.kind {
            StmtKind::VarDecl { ty, name, init } => {
                if let Some(e) = init {
                    self.expr(e)?;
                }
                self.declare(name, s.id, ty)?;
            }
            StmtKind::Assign { target, value } => {
                self.expr(target)?;
                self.expr(value)?;
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond)?;
                self.scoped_stmt(then_branch)?;
                if let Some(e) = else_branch {
                    self.scoped_stmt(e)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond)?;
                self.scoped_stmt(body)?;
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.scopes.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                self.expr(cond)?;
                if let Some(st) = step {
                    self.stmt(st)?;
                }
                self.scoped_stmt(body)?;
                self.scopes.pop();
            }
            StmtKind::Require { cond, .. } => self.expr(cond)?,
            StmtKind::Emit { event, args } => {
                let idx = self
                    .symbols
                    .events
                    .iter()
                    .position(|e| e.contract == self.contract && e.name == event.name)
                    .ok_or_else(|| ResolveError::UnknownName {
                        name: event.name.clone(),
                        span: event.span,
                    })?;
                let expected = self.symbols.events[idx].params.len();
                if expected != args.len() {
                    return Err(ResolveError::ArityMismatch {
                        name: event.name.clone(),
                        expected,
                        found: args.len(),
                        span: s.span,
                    });
                }
                self.bindings.insert(s.id, Symbol::Event(idx));
                for a in args {
                    self.expr(a)?;
                }
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e)?;
                }
            }
            StmtKind::Expr(e) => self.expr(e)?,
            StmtKind::Block(b) => self.block(b)?,
            StmtKind::Placeholder => {}
        }
        Ok(())
    }

    fn scoped_stmt(&mut self, s: &Stmt) -> Result<(), ResolveError> {
        self.scopes.push(HashMap::new());
        let r = self.stmt(s);
        self.scopes.pop();
        r
    }

    fn expr(&mut self, e: &Expr) -> Result<(), ResolveError> {
        match &e.kind {
            ExprKind::Ident(name) => {
                let sym = self.lookup(name, e.span)?;
                self.bindings.insert(e.id, sym);
            }
            ExprKind::Binary(_, l, r) => {
                self.expr(l)?;
                self.expr(r)?;
            }
            ExprKind::Unary(_, x) => self.expr(x)?,
            ExprKind::Call { callee, args } => {
                let candidates: Vec<usize> = self
                    .symbols
                    .functions
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| f.contract == self.contract && f.name == callee.name)
                    .map(|(i, _)| i)
                    .collect();
                if candidates.is_empty() {
                    return Err(ResolveError::UnknownName {
                        name: callee.name.clone(),
                        span: callee.span,
                    });
                }
                let by_arity: Vec<usize> = candidates
                    .iter()
                    .copied()
                    .filter(|&i| self.symbols.functions[i].arity == args.len())
                    .collect();
                let idx = match by_arity.as_slice() {
                    [] => {
                        return Err(ResolveError::UnknownName {
                            name: format!("{}/{}", callee.name, args.len()),
                            span: callee.span,
                        })
                    }
                    [one] => *one,
                    _ => {
                        return Err(ResolveError::AmbiguousOverload {
                            name: callee.name.clone(),
                            span: e.span,
                        })
                    }
                };
                if self.symbols.functions[idx].visibility == Visibility::External {
                    return Err(ResolveError::ExternalCall {
                        name: callee.name.clone(),
                        span: e.span,
                    });
                }
                self.bindings.insert(e.id, Symbol::Function(idx));
                for a in args {
                    self.expr(a)?;
                }
            }
            ExprKind::Index { base, index } => {
                self.expr(base)?;
                self.expr(index)?;
            }
            ExprKind::Number(_) | ExprKind::Bool(_) | ExprKind::MsgSender => {}
        }
        Ok(())
    }
}
