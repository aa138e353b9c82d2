//! MiniSol syntax tree. Every node carries a dense pre-order `NodeId` and its source span.

use std::fmt;

use crate::model::SourceSpan;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeName {
    Uint,
    Bool,
    Address,
    Mapping(Box<TypeName>, Box<TypeName>),
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::Uint => write!(f, "uint"),
            TypeName::Bool => write!(f, "bool"),
            TypeName::Address => write!(f, "address"),
            TypeName::Mapping(k, v) => write!(f, "mapping({k} => {v})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub id: NodeId,
    pub span: SourceSpan,
    pub contracts: Vec<Contract>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contract {
    pub id: NodeId,
    pub span: SourceSpan,
    pub name: Ident,
    pub members: Vec<Member>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Member {
    StateVar(StateVar),
    Function(Function),
    Modifier(ModifierDef),
    Event(EventDef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVar {
    pub id: NodeId,
    pub span: SourceSpan,
    pub ty: TypeName,
    pub name: Ident,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub id: NodeId,
    pub span: SourceSpan,
    pub ty: TypeName,
    pub name: Ident,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Visibility {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub id: NodeId,
    pub span: SourceSpan,
    pub name: Ident,
    pub params: Vec<Param>,
    pub modifiers: Vec<ModifierInvocation>,
    pub visibility: Visibility,
    pub returns: Option<TypeName>,
    pub body: Block,
    /// The implicit exit statement, located at the closing brace of the body.
    pub exit: ExitStmt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExitStmt {
    pub id: NodeId,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifierInvocation {
    pub id: NodeId,
    pub span: SourceSpan,
    pub name: Ident,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifierDef {
    pub id: NodeId,
    pub span: SourceSpan,
    pub name: Ident,
    pub params: Vec<Param>,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDef {
    pub id: NodeId,
    pub span: SourceSpan,
    pub name: Ident,
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: NodeId,
    pub span: SourceSpan,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: NodeId,
    pub span: SourceSpan,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl {
        ty: TypeName,
        name: Ident,
        init: Option<Expr>,
    },
    Assign {
        target: Expr,
        value: Expr,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Expr,
        step: Option<Box<Stmt>>,
        body: Box<Stmt>,
    },
    Require {
        cond: Expr,
        message: Option<String>,
    },
    Emit {
        event: Ident,
        args: Vec<Expr>,
    },
    Return(Option<Expr>),
    Expr(Expr),
    Block(Block),
    Placeholder,
}

impl StmtKind {
    /// Whether this node counts as a source statement for mapping purposes.
    pub fn is_statement(&self) -> bool {
        !matches!(self, StmtKind::Block(_) | StmtKind::Placeholder)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    BitOr,
    BitXor,
    BitAnd,
    Shl,
    Shr,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::BitAnd => "&",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub id: NodeId,
    pub span: SourceSpan,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Number(u64),
    Bool(bool),
    Ident(String),
    MsgSender,
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Call { callee: Ident, args: Vec<Expr> },
    Index { base: Box<Expr>, index: Box<Expr> },
}

/// Assigns dense pre-order node ids.
pub fn renumber(unit: &mut SourceUnit) {
    let mut next = 0u32;
    let mut take = || {
        let id = next;
        next += 1;
        id
    };
    unit.id = take();
    for c in &mut unit.contracts {
        c.id = take();
        for m in &mut c.members {
            match m {
                Member::StateVar(v) => {
                    v.id = take();
                    if let Some(e) = &mut v.init {
                        renumber_expr(e, &mut take);
                    }
                }
                Member::Function(f) => {
                    f.id = take();
                    for p in &mut f.params {
                        p.id = take();
                    }
                    for inv in &mut f.modifiers {
                        inv.id = take();
                        for a in &mut inv.args {
                            renumber_expr(a, &mut take);
                        }
                    }
                    renumber_block(&mut f.body, &mut take);
                    f.exit.id = take();
                }
                Member::Modifier(md) => {
                    md.id = take();
                    for p in &mut md.params {
                        p.id = take();
                    }
                    renumber_block(&mut md.body, &mut take);
                }
                Member::Event(ev) => {
                    ev.id = take();
                    for p in &mut ev.params {
                        p.id = take();
                    }
                }
            }
        }
    }
}

fn renumber_block(b: &mut Block, take: &mut impl FnMut() -> NodeId) {
    b.id = take();
    for s in &mut b.stmts {
        renumber_stmt(s, take);
    }
}

fn renumber_stmt(s: &mut Stmt, take: &mut impl FnMut() -> NodeId) {
    s.id = take();
    match &mut s.kind {
        StmtKind::VarDecl { init, .. } => {
            if let Some(e) = init {
                renumber_expr(e, take);
            }
        }
        StmtKind::Assign { target, value } => {
            renumber_expr(target, take);
            renumber_expr(value, take);
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            renumber_expr(cond, take);
            renumber_stmt(then_branch, take);
            if let Some(e) = else_branch {
                renumber_stmt(e, take);
            }
        }
        StmtKind::While { cond, body } => {
            renumber_expr(cond, take);
            renumber_stmt(body, take);
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            if let Some(i) = init {
                renumber_stmt(i, take);
            }
            renumber_expr(cond, take);
            if let Some(st) = step {
                renumber_stmt(st, take);
            }
            renumber_stmt(body, take);
        }
        StmtKind::Require { cond, .. } => renumber_expr(cond, take),
        StmtKind::Emit { args, .. } => {
            for a in args {
                renumber_expr(a, take);
            }
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                renumber_expr(e, take);
            }
        }
        StmtKind::Expr(e) => renumber_expr(e, take),
        StmtKind::Block(b) => renumber_block(b, take),
        StmtKind::Placeholder => {}
    }
}

fn renumber_expr(e: &mut Expr, take: &mut impl FnMut() -> NodeId) {
    e.id = take();
    match &mut e.kind {
        ExprKind::Binary(_, l, r) => {
            renumber_expr(l, take);
            renumber_expr(r, take);
        }
        ExprKind::Unary(_, x) => renumber_expr(x, take),
        ExprKind::Call { args, .. } => {
            for a in args {
                renumber_expr(a, take);
            }
        }
        ExprKind::Index { base, index } => {
            renumber_expr(base, take);
            renumber_expr(index, take);
        }
        _ => {}
    }
}

impl SourceUnit {
    pub fn functions(&self) -> impl Iterator<Item = (&Contract, &Function)> {
        self.contracts.iter().flat_map(|c| {
            c.members.iter().filter_map(move |m| match m {
                Member::Function(f) => Some((c, f)),
                _ => None,
            })
        })
    }

    pub fn modifiers(&self) -> impl Iterator<Item = (&Contract, &ModifierDef)> {
        self.contracts.iter().flat_map(|c| {
            c.members.iter().filter_map(move |m| match m {
                Member::Modifier(md) => Some((c, md)),
                _ => None,
            })
        })
    }

    pub fn state_vars(&self) -> impl Iterator<Item = (&Contract, &StateVar)> {
        self.contracts.iter().flat_map(|c| {
            c.members.iter().filter_map(move |m| match m {
                Member::StateVar(v) => Some((c, v)),
                _ => None,
            })
        })
    }

    pub fn events(&self) -> impl Iterator<Item = (&Contract, &EventDef)> {
        self.contracts.iter().flat_map(|c| {
            c.members.iter().filter_map(move |m| match m {
                Member::Event(e) => Some((c, e)),
                _ => None,
            })
        })
    }
}

/// Pre-order walk over every expression below a statement, including nested statements.
pub fn walk_stmt_exprs<'a>(s: &'a Stmt, f: &mut impl FnMut(&'a Expr)) {
    match &s.kind {
        StmtKind::VarDecl { init, .. } => {
            if let Some(e) = init {
                walk_expr(e, f);
            }
        }
        StmtKind::Assign { target, value } => {
            walk_expr(target, f);
            walk_expr(value, f);
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => {
            walk_expr(cond, f);
            walk_stmt_exprs(then_branch, f);
            if let Some(e) = else_branch {
                walk_stmt_exprs(e, f);
            }
        }
        StmtKind::While { cond, body } => {
            walk_expr(cond, f);
            walk_stmt_exprs(body, f);
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            if let Some(i) = init {
                walk_stmt_exprs(i, f);
            }
            walk_expr(cond, f);
            if let Some(st) = step {
                walk_stmt_exprs(st, f);
            }
            walk_stmt_exprs(body, f);
        }
        StmtKind::Require { cond, .. } => walk_expr(cond, f),
        StmtKind::Emit { args, .. } => args.iter().for_each(|a| walk_expr(a, f)),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                walk_expr(e, f);
            }
        }
        StmtKind::Expr(e) => walk_expr(e, f),
        StmtKind::Block(b) => b.stmts.iter().for_each(|s| walk_stmt_exprs(s, f)),
        StmtKind::Placeholder => {}
    }
}

pub fn walk_expr<'a>(e: &'a Expr, f: &mut impl FnMut(&'a Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Binary(_, l, r) => {
            walk_expr(l, f);
            walk_expr(r, f);
        }
        ExprKind::Unary(_, x) => walk_expr(x, f),
        ExprKind::Call { args, .. } => args.iter().for_each(|a| walk_expr(a, f)),
        ExprKind::Index { base, index } => {
            walk_expr(base, f);
            walk_expr(index, f);
        }
        _ => {}
    }
}

/// Pre-order walk over a statement and all nested statements (blocks included).
pub fn walk_stmts<'a>(s: &'a Stmt, f: &mut impl FnMut(&'a Stmt)) {
    f(s);
    match &s.kind {
        StmtKind::If {
            then_branch,
            else_branch,
            ..
        } => {
            walk_stmts(then_branch, f);
            if let Some(e) = else_branch {
                walk_stmts(e, f);
            }
        }
        StmtKind::While { body, .. } => walk_stmts(body, f),
        StmtKind::For {
            init, step, body, ..
        } => {
            if let Some(i) = init {
                walk_stmts(i, f);
            }
            if let Some(st) = step {
                walk_stmts(st, f);
            }
            walk_stmts(body, f);
        }
        StmtKind::Block(b) => b.stmts.iter().for_each(|s| walk_stmts(s, f)),
        _ => {}
    }
}
