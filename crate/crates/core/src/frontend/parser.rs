//! Recursive-descent parser for MiniSol. The first error aborts the parse.

use thiserror::Error;

use super::ast::*;
use super::lexer::{Keyword, Token, TokenKind};
use crate::model::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {span}: expected {}, found {found}", expected.join(" | "))]
pub struct SyntaxError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

type PResult<T> = Result<T, SyntaxError>;

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    file: u32,
    eof: u32,
}

pub fn parse(tokens: &[Token], file: u32, source_len: u32) -> Result<SourceUnit, SyntaxError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        file,
        eof: source_len,
    };
    let mut unit = p.source_unit()?;
    renumber(&mut unit);
    Ok(unit)
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + k)
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn prev_end(&self) -> u32 {
        self.tokens[self.pos - 1].span.end()
    }

    fn span_from(&self, start: u32) -> SourceSpan {
        SourceSpan::new(start, self.prev_end() - start, self.file)
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let (span, found) = match self.peek() {
            Some(t) => (t.span, format!("{:?}", t.text)),
            None => (
                SourceSpan::new(self.eof, 0, self.file),
                "end of input".to_string(),
            ),
        };
        Err(SyntaxError {
            span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Punct(q), .. }) if *q == p)
    }

    fn is_kw(&self, kw: Keyword) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Keyword(k), .. }) if *k == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<&'t Token> {
        if self.is_punct(p) {
            Ok(self.bump())
        } else {
            self.error(&[&format!("'{p}'")])
        }
    }

    fn expect_kw(&mut self, kw: Keyword, text: &str) -> PResult<&'t Token> {
        if self.is_kw(kw) {
            Ok(self.bump())
        } else {
            self.error(&[&format!("'{text}'")])
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                Ok(Ident {
                    name: t.text.clone(),
                    span: t.span,
                })
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn source_unit(&mut self) -> PResult<SourceUnit> {
        let mut contracts = Vec::new();
        loop {
            contracts.push(self.contract()?);
            if self.peek().is_none() {
                break;
            }
        }
        let span = SourceSpan::new(0, self.eof.max(1), self.file);
        Ok(SourceUnit {
            id: 0,
            span,
            contracts,
        })
    }

    fn contract(&mut self) -> PResult<Contract> {
        let start = self.expect_kw(Keyword::Contract, "contract")?.span.start;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.is_punct("}") {
            members.push(self.member()?);
        }
        self.bump();
        Ok(Contract {
            id: 0,
            span: self.span_from(start),
            name,
            members,
        })
    }

    fn starts_type(&self) -> bool {
        self.is_kw(Keyword::Uint)
            || self.is_kw(Keyword::Bool)
            || self.is_kw(Keyword::Address)
            || self.is_kw(Keyword::Mapping)
    }

    fn member(&mut self) -> PResult<Member> {
        if self.is_kw(Keyword::Function) {
            return self.function().map(Member::Function);
        }
        if self.is_kw(Keyword::Modifier) {
            return self.modifier_def().map(Member::Modifier);
        }
        if self.is_kw(Keyword::Event) {
            let start = self.bump().span.start;
            let name = self.ident()?;
            self.expect_punct("(")?;
            let params = self.param_list()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(Member::Event(EventDef {
                id: 0,
                span: self.span_from(start),
                name,
                params,
            }));
        }
        if self.starts_type() {
            let start = self.peek().unwrap().span.start;
            let ty = self.type_name()?;
            let name = self.ident()?;
            let init = if self.eat_punct("=") {
                Some(self.expr()?)
            } else {
                None
            };
            self.expect_punct(";")?;
            return Ok(Member::StateVar(StateVar {
                id: 0,
                span: self.span_from(start),
                ty,
                name,
                init,
            }));
        }
        self.error(&["'function'", "'modifier'", "'event'", "type", "'}'"])
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        if self.eat_kw(Keyword::Uint) {
            return Ok(TypeName::Uint);
        }
        if self.eat_kw(Keyword::Bool) {
            return Ok(TypeName::Bool);
        }
        if self.eat_kw(Keyword::Address) {
            return Ok(TypeName::Address);
        }
        if self.eat_kw(Keyword::Mapping) {
            self.expect_punct("(")?;
            let k = self.type_name()?;
            self.expect_punct("=>")?;
            let v = self.type_name()?;
            self.expect_punct(")")?;
            return Ok(TypeName::Mapping(Box::new(k), Box::new(v)));
        }
        self.error(&["'uint'", "'bool'", "'address'", "'mapping'"])
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        let mut params = Vec::new();
        if self.is_punct(")") {
            return Ok(params);
        }
        loop {
            let start = match self.peek() {
                Some(t) => t.span.start,
                None => return self.error(&["type"]),
            };
            let ty = self.type_name()?;
            let name = self.ident()?;
            params.push(Param {
                id: 0,
                span: self.span_from(start),
                ty,
                name,
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(params)
    }

    fn function(&mut self) -> PResult<Function> {
        let start = self.bump().span.start;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let params = self.param_list()?;
        self.expect_punct(")")?;
        let mut modifiers = Vec::new();
        let mut visibility = None;
        loop {
            if visibility.is_none() && self.eat_kw(Keyword::Internal) {
                visibility = Some(Visibility::Internal);
            } else if visibility.is_none() && self.eat_kw(Keyword::External) {
                visibility = Some(Visibility::External);
            } else if matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident) {
                let mname = self.ident()?;
                let mstart = mname.span.start;
                let args = if self.eat_punct("(") {
                    let a = self.args()?;
                    self.expect_punct(")")?;
                    a
                } else {
                    Vec::new()
                };
                modifiers.push(ModifierInvocation {
                    id: 0,
                    span: self.span_from(mstart),
                    name: mname,
                    args,
                });
            } else {
                break;
            }
        }
        let returns = if self.eat_kw(Keyword::Returns) {
            self.expect_punct("(")?;
            let t = self.type_name()?;
            self.expect_punct(")")?;
            Some(t)
        } else {
            None
        };
        if !self.is_punct("{") {
            return self.error(&["'{'", "modifier", "'internal'", "'external'", "'returns'"]);
        }
        let body = self.block()?;
        let close = SourceSpan::new(body.span.end() - 1, 1, self.file);
        Ok(Function {
            id: 0,
            span: self.span_from(start),
            name,
            params,
            modifiers,
            visibility: visibility.unwrap_or(Visibility::External),
            returns,
            body,
            exit: ExitStmt { id: 0, span: close },
        })
    }

    fn modifier_def(&mut self) -> PResult<ModifierDef> {
        let start = self.bump().span.start;
        let name = self.ident()?;
        let params = if self.eat_punct("(") {
            let p = self.param_list()?;
            self.expect_punct(")")?;
            p
        } else {
            Vec::new()
        };
        let body = self.block()?;
        let mut placeholders = 0;
        for s in &body.stmts {
            walk_stmts(s, &mut |s| {
                if matches!(s.kind, StmtKind::Placeholder) {
                    placeholders += 1;
                }
            });
        }
        if placeholders != 1 {
            return Err(SyntaxError {
                span: body.span,
                expected: vec!["exactly one '_;' in modifier body".into()],
                found: format!("{placeholders} placeholders"),
            });
        }
        Ok(ModifierDef {
            id: 0,
            span: self.span_from(start),
            name,
            params,
            body,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect_punct("{")?.span.start;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if self.peek().is_none() {
                return self.error(&["'}'"]);
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(Block {
            id: 0,
            span: self.span_from(start),
            stmts,
        })
    }

    fn mk_stmt(&self, start: u32, kind: StmtKind) -> Stmt {
        Stmt {
            id: 0,
            span: self.span_from(start),
            kind,
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let Some(tok) = self.peek() else {
            return self.error(&["statement"]);
        };
        let start = tok.span.start;
        if self.is_punct("{") {
            let b = self.block()?;
            return Ok(self.mk_stmt(start, StmtKind::Block(b)));
        }
        if self.eat_kw(Keyword::If) {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_branch = Box::new(self.stmt()?);
            let else_branch = if self.eat_kw(Keyword::Else) {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(self.mk_stmt(
                start,
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                },
            ));
        }
        if self.eat_kw(Keyword::While) {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(self.mk_stmt(start, StmtKind::While { cond, body }));
        }
        if self.eat_kw(Keyword::For) {
            self.expect_punct("(")?;
            let init = if self.eat_punct(";") {
                None
            } else {
                let s = self.simple_stmt(true)?;
                Some(Box::new(s))
            };
            let cond = self.expr()?;
            self.expect_punct(";")?;
            let step = if self.is_punct(")") {
                None
            } else {
                Some(Box::new(self.simple_stmt(false)?))
            };
            self.expect_punct(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(self.mk_stmt(
                start,
                StmtKind::For {
                    init,
                    cond,
                    step,
                    body,
                },
            ));
        }
        if self.eat_kw(Keyword::Require) {
            self.expect_punct("(")?;
            let cond = self.expr()?;
            let message = if self.eat_punct(",") {
                match self.peek() {
                    Some(Token {
                        kind: TokenKind::Str(s),
                        ..
                    }) => {
                        self.pos += 1;
                        Some(s.clone())
                    }
                    _ => return self.error(&["string literal"]),
                }
            } else {
                None
            };
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(self.mk_stmt(start, StmtKind::Require { cond, message }));
        }
        if self.eat_kw(Keyword::Emit) {
            let event = self.ident()?;
            self.expect_punct("(")?;
            let args = self.args()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(self.mk_stmt(start, StmtKind::Emit { event, args }));
        }
        if self.eat_kw(Keyword::Return) {
            let value = if self.is_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_punct(";")?;
            return Ok(self.mk_stmt(start, StmtKind::Return(value)));
        }
        if tok.kind == TokenKind::Ident
            && tok.text == "_"
            && matches!(
                self.peek_at(1),
                Some(Token {
                    kind: TokenKind::Punct(";"),
                    ..
                })
            )
        {
            self.pos += 2;
            return Ok(self.mk_stmt(start, StmtKind::Placeholder));
        }
        self.simple_stmt(true)
    }

    /// Variable declaration, assignment or expression statement.
    /// With `terminated == false` (for-loop step) no `;` is consumed and declarations are refused.
    fn simple_stmt(&mut self, terminated: bool) -> PResult<Stmt> {
        let start = match self.peek() {
            Some(t) => t.span.start,
            None => return self.error(&["statement"]),
        };
        if terminated && self.starts_type() {
            let ty = self.type_name()?;
            let name = self.ident()?;
            let init = if self.eat_punct("=") {
                Some(self.expr()?)
            } else {
                None
            };
            self.expect_punct(";")?;
            return Ok(self.mk_stmt(start, StmtKind::VarDecl { ty, name, init }));
        }
        let lhs = self.expr()?;
        let kind = if self.eat_punct("=") {
            if !matches!(lhs.kind, ExprKind::Ident(_) | ExprKind::Index { .. }) {
                return Err(SyntaxError {
                    span: lhs.span,
                    expected: vec!["assignable expression".into()],
                    found: "expression".into(),
                });
            }
            let value = self.expr()?;
            StmtKind::Assign { target: lhs, value }
        } else {
            StmtKind::Expr(lhs)
        };
        if terminated {
            self.expect_punct(";")?;
        }
        Ok(self.mk_stmt(start, kind))
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.is_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(args)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        const LEVELS: &[&[(&str, BinaryOp)]] = &[
            &[("||", BinaryOp::Or)],
            &[("&&", BinaryOp::And)],
            &[("==", BinaryOp::Eq), ("!=", BinaryOp::Ne)],
            &[
                ("<", BinaryOp::Lt),
                (">", BinaryOp::Gt),
                ("<=", BinaryOp::Le),
                (">=", BinaryOp::Ge),
            ],
            &[("|", BinaryOp::BitOr)],
            &[("^", BinaryOp::BitXor)],
            &[("&", BinaryOp::BitAnd)],
            &[("<<", BinaryOp::Shl), (">>", BinaryOp::Shr)],
            &[("+", BinaryOp::Add), ("-", BinaryOp::Sub)],
            &[
                ("*", BinaryOp::Mul),
                ("/", BinaryOp::Div),
                ("%", BinaryOp::Mod),
            ],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (sym, op) in LEVELS[level] {
                if self.eat_punct(sym) {
                    let rhs = self.binary(level + 1)?;
                    let span = lhs.span.cover(rhs.span);
                    lhs = Expr {
                        id: 0,
                        span,
                        kind: ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)),
                    };
                    continue 'outer;
                }
            }
            break;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = if self.is_punct("!") {
            Some(UnaryOp::Not)
        } else if self.is_punct("-") {
            Some(UnaryOp::Neg)
        } else {
            None
        };
        if let Some(op) = op {
            let start = self.bump().span.start;
            let inner = self.unary()?;
            return Ok(Expr {
                id: 0,
                span: self.span_from(start),
                kind: ExprKind::Unary(op, Box::new(inner)),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.is_punct("(") {
                let ExprKind::Ident(name) = &e.kind else {
                    return self.error(&["operator", "';'"]);
                };
                let callee = Ident {
                    name: name.clone(),
                    span: e.span,
                };
                self.bump();
                let args = self.args()?;
                self.expect_punct(")")?;
                e = Expr {
                    id: 0,
                    span: self.span_from(callee.span.start),
                    kind: ExprKind::Call { callee, args },
                };
            } else if self.eat_punct("[") {
                let index = self.expr()?;
                self.expect_punct("]")?;
                let start = e.span.start;
                e = Expr {
                    id: 0,
                    span: self.span_from(start),
                    kind: ExprKind::Index {
                        base: Box::new(e),
                        index: Box::new(index),
                    },
                };
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(t) = self.peek() else {
            return self.error(&["expression"]);
        };
        let kind = match &t.kind {
            TokenKind::Number(n) => ExprKind::Number(*n),
            TokenKind::Keyword(Keyword::True) => ExprKind::Bool(true),
            TokenKind::Keyword(Keyword::False) => ExprKind::Bool(false),
            TokenKind::Ident if t.text == "msg" => {
                self.bump();
                self.expect_punct(".")?;
                match self.peek() {
                    Some(s) if s.kind == TokenKind::Ident && s.text == "sender" => {
                        self.bump();
                    }
                    _ => return self.error(&["'sender'"]),
                }
                return Ok(Expr {
                    id: 0,
                    span: self.span_from(t.span.start),
                    kind: ExprKind::MsgSender,
                });
            }
            TokenKind::Ident => ExprKind::Ident(t.text.clone()),
            TokenKind::Punct("(") => {
                self.bump();
                let mut inner = self.expr()?;
                self.expect_punct(")")?;
                // Parentheses make no node of their own; the inner expression absorbs them.
                inner.span = self.span_from(t.span.start);
                return Ok(inner);
            }
            _ => return self.error(&["expression"]),
        };
        self.bump();
        Ok(Expr {
            id: 0,
            span: t.span,
            kind,
        })
    }
}
