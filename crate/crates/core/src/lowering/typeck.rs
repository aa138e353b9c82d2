//! Type discipline for uint/bool/address/mapping and the missing-return check.

use thiserror::Error;

use crate::frontend::ast::*;
use crate::frontend::{ResolvedUnit, Symbol};
use crate::model::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type error at {span}: {message}")]
    Mismatch { span: SourceSpan, message: String },
    #[error("missing return in `{function}` ({span})")]
    MissingReturn { function: String, span: SourceSpan },
}

fn mismatch(span: SourceSpan, message: impl Into<String>) -> TypeError {
    TypeError::Mismatch {
        span,
        message: message.into(),
    }
}

/// Result type of an expression; `None` for calls to functions without a return value.
type Ty = Option<TypeName>;

pub fn typecheck(unit: &ResolvedUnit) -> Result<(), TypeError> {
    let cx = Checker { unit };
    for (_, v) in unit.ast.state_vars() {
        if let TypeName::Mapping(k, val) = &v.ty {
            if matches!(**k, TypeName::Mapping(..)) || matches!(**val, TypeName::Mapping(..)) {
                return Err(mismatch(v.span, "nested mappings are not supported"));
            }
        }
        if let Some(init) = &v.init {
            let ok = matches!(
                (&init.kind, &v.ty),
                (ExprKind::Number(_), TypeName::Uint) | (ExprKind::Bool(_), TypeName::Bool)
            );
            if !ok {
                return Err(mismatch(
                    init.span,
                    "state initializers must be literals of the declared type",
                ));
            }
        }
    }
    for (_, ev) in unit.ast.events() {
        for p in &ev.params {
            if matches!(p.ty, TypeName::Mapping(..)) {
                return Err(mismatch(p.span, "mappings cannot be event parameters"));
            }
        }
    }
    for (_, md) in unit.ast.modifiers() {
        cx.params(&md.params)?;
        cx.block(&md.body, Ctx::Modifier)?;
    }
    for (_, f) in unit.ast.functions() {
        cx.params(&f.params)?;
        if matches!(f.returns, Some(TypeName::Mapping(..))) {
            return Err(mismatch(f.name.span, "functions cannot return mappings"));
        }
        for inv in &f.modifiers {
            if let Some(Symbol::Modifier(mi)) = unit.binding(inv.id) {
                let md = unit.modifier(mi);
                for (a, p) in inv.args.iter().zip(&md.params) {
                    cx.expect(a, &p.ty)?;
                }
            }
        }
        cx.block(&f.body, Ctx::Function(f.returns.as_ref()))?;
        if f.returns.is_some() && !always_returns(&f.body.stmts) {
            return Err(TypeError::MissingReturn {
                function: f.name.name.clone(),
                span: f.exit.span,
            });
        }
    }
    Ok(())
}

/// Whether every path through `stmts` ends in a `return`.
pub fn always_returns(stmts: &[Stmt]) -> bool {
    stmts.iter().any(stmt_returns)
}

fn stmt_returns(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Return(_) => true,
        StmtKind::Block(b) => always_returns(&b.stmts),
        StmtKind::If {
            then_branch,
            else_branch: Some(e),
            ..
        } => stmt_returns(then_branch) && stmt_returns(e),
        _ => false,
    }
}

#[derive(Clone, Copy)]
enum Ctx<'a> {
    Function(Option<&'a TypeName>),
    Modifier,
}

struct Checker<'u> {
    unit: &'u ResolvedUnit,
}

impl Checker<'_> {
    fn params(&self, ps: &[Param]) -> Result<(), TypeError> {
        for p in ps {
            if matches!(p.ty, TypeName::Mapping(..)) {
                return Err(mismatch(p.span, "mappings cannot be parameters"));
            }
        }
        Ok(())
    }

    fn block(&self, b: &Block, ctx: Ctx) -> Result<(), TypeError> {
        b.stmts.iter().try_for_each(|s| self.stmt(s, ctx))
    }

    fn stmt(&self, s: &Stmt, ctx: Ctx) -> Result<(), TypeError> {
        match &s.kind {
            StmtKind::VarDecl { ty, init, .. } => {
                if matches!(ty, TypeName::Mapping(..)) {
                    return Err(mismatch(s.span, "mappings can only be state variables"));
                }
                if let Some(e) = init {
                    self.expect(e, ty)?;
                }
            }
            StmtKind::Assign { target, value } => {
                let t = match &target.kind {
                    ExprKind::Ident(_) | ExprKind::Index { .. } => self.value_ty(target)?,
                    _ => return Err(mismatch(target.span, "invalid assignment target")),
                };
                self.expect(value, &t)?;
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expect(cond, &TypeName::Bool)?;
                self.stmt(then_branch, ctx)?;
                if let Some(e) = else_branch {
                    self.stmt(e, ctx)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.expect(cond, &TypeName::Bool)?;
                self.stmt(body, ctx)?;
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i, ctx)?;
                }
                self.expect(cond, &TypeName::Bool)?;
                if let Some(st) = step {
                    self.stmt(st, ctx)?;
                }
                self.stmt(body, ctx)?;
            }
            StmtKind::Require { cond, .. } => self.expect(cond, &TypeName::Bool)?,
            StmtKind::Emit { args, .. } => {
                if let Some(Symbol::Event(ei)) = self.unit.binding(s.id) {
                    let params = &self.unit.symbols.events[ei].params;
                    for (a, p) in args.iter().zip(params) {
                        self.expect(a, p)?;
                    }
                }
            }
            StmtKind::Return(e) => match (ctx, e) {
                (Ctx::Modifier, _) => {
                    return Err(mismatch(s.span, "return is not allowed in a modifier"))
                }
                (Ctx::Function(None), Some(e)) => {
                    return Err(mismatch(e.span, "function has no return value"))
                }
                (Ctx::Function(Some(_)), None) => {
                    return Err(mismatch(s.span, "missing return value"))
                }
                (Ctx::Function(Some(t)), Some(e)) => self.expect(e, t)?,
                (Ctx::Function(None), None) => {}
            },
            StmtKind::Expr(e) => {
                self.ty(e)?;
            }
            StmtKind::Block(b) => self.block(b, ctx)?,
            StmtKind::Placeholder => {
                if let Ctx::Function(_) = ctx {
                    return Err(mismatch(s.span, "`_;` outside a modifier"));
                }
            }
        }
        Ok(())
    }

    fn expect(&self, e: &Expr, want: &TypeName) -> Result<(), TypeError> {
        let got = self.value_ty(e)?;
        if &got != want {
            return Err(mismatch(e.span, format!("expected {want}, found {got}")));
        }
        Ok(())
    }

    /// Type of an expression used as a value: must exist and must not be a mapping.
    fn value_ty(&self, e: &Expr) -> Result<TypeName, TypeError> {
        match self.ty(e)? {
            None => Err(mismatch(e.span, "expression has no value")),
            Some(TypeName::Mapping(..)) => Err(mismatch(e.span, "mapping used as a value")),
            Some(t) => Ok(t),
        }
    }

    fn symbol_ty(&self, e: &Expr) -> Ty {
        match self.unit.binding(e.id)? {
            Symbol::StateVar(i) => Some(self.unit.symbols.state_vars[i].ty.clone()),
            Symbol::Local(n) => self.unit.local_types.get(&n).cloned(),
            _ => None,
        }
    }

    fn ty(&self, e: &Expr) -> Result<Ty, TypeError> {
        use BinaryOp::*;
        Ok(Some(match &e.kind {
            ExprKind::Number(_) => TypeName::Uint,
            ExprKind::Bool(_) => TypeName::Bool,
            ExprKind::MsgSender => TypeName::Address,
            ExprKind::Ident(_) => self
                .symbol_ty(e)
                .ok_or_else(|| mismatch(e.span, "identifier is not a value"))?,
            ExprKind::Unary(UnaryOp::Not, x) => {
                self.expect(x, &TypeName::Bool)?;
                TypeName::Bool
            }
            ExprKind::Unary(UnaryOp::Neg, x) => {
                self.expect(x, &TypeName::Uint)?;
                TypeName::Uint
            }
            ExprKind::Binary(op, l, r) => match op {
                Or | And => {
                    self.expect(l, &TypeName::Bool)?;
                    self.expect(r, &TypeName::Bool)?;
                    TypeName::Bool
                }
                Eq | Ne => {
                    let lt = self.value_ty(l)?;
                    self.expect(r, &lt)?;
                    TypeName::Bool
                }
                Lt | Gt | Le | Ge => {
                    self.expect(l, &TypeName::Uint)?;
                    self.expect(r, &TypeName::Uint)?;
                    TypeName::Bool
                }
                BitOr | BitXor | BitAnd | Shl | Shr | Add | Sub | Mul | Div | Mod => {
                    self.expect(l, &TypeName::Uint)?;
                    self.expect(r, &TypeName::Uint)?;
                    TypeName::Uint
                }
            },
            ExprKind::Call { args, .. } => {
                let Some(Symbol::Function(fi)) = self.unit.binding(e.id) else {
                    return Err(mismatch(e.span, "unresolved call"));
                };
                let f = self.unit.function(fi);
                for (a, p) in args.iter().zip(&f.params) {
                    self.expect(a, &p.ty)?;
                }
                return Ok(f.returns.clone());
            }
            ExprKind::Index { base, index } => {
                let Some(TypeName::Mapping(k, v)) = (match base.kind {
                    ExprKind::Ident(_) => self.symbol_ty(base),
                    _ => None,
                }) else {
                    return Err(mismatch(base.span, "only mappings can be indexed"));
                };
                self.expect(index, &k)?;
                *v
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::analyze;

    fn check(src: &str) -> Result<(), TypeError> {
        typecheck(&analyze(src, 0).unwrap())
    }

    #[test]
    fn accepts_voting_shapes() {
        check(
            "contract V { mapping(address => bool) hasVoted; \
             function verify(uint p) internal returns (bool) { return p != 0; } \
             function vote(uint p) external { require(!hasVoted[msg.sender], \"Already voted\"); \
             require(verify(p), \"Invalid proof\"); hasVoted[msg.sender] = true; } }",
        )
        .unwrap();
    }

    #[test]
    fn rejects_mixed_operands() {
        assert!(matches!(
            check("contract C { function f(bool b) external returns (uint) { return b + 1; } }"),
            Err(TypeError::Mismatch { .. })
        ));
        assert!(matches!(
            check("contract C { function f(uint a) external { if (a) { } } }"),
            Err(TypeError::Mismatch { .. })
        ));
        assert!(matches!(
            check("contract C { mapping(uint => uint) m; function f() external { m = 1; } }"),
            Err(TypeError::Mismatch { .. })
        ));
    }

    #[test]
    fn missing_return() {
        assert!(matches!(
            check("contract C { function f(uint a) external returns (uint) { if (a > 1) { return 1; } } }"),
            Err(TypeError::MissingReturn { .. })
        ));
        check("contract C { function f(uint a) external returns (uint) { if (a > 1) { return 1; } else { return 2; } } }")
            .unwrap();
    }

    #[test]
    fn modifier_rules() {
        assert!(
            check("contract C { modifier m { return; _; } function f() m external { } }").is_err()
        );
        assert!(check("contract C { uint x = true; }").is_err());
        check("contract C { uint x = 5; bool b = true; }").unwrap();
    }
}
