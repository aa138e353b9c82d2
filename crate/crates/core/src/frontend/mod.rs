//! MiniSol lexing, parsing, name resolution and the statement registry.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod registry;
pub mod resolve;

use thiserror::Error;

pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse, SyntaxError};
pub use registry::{
    build_statement_registry, EdgeKind, Owner, StatementInfo, StatementKind, StatementRegistry,
};
pub use resolve::{resolve, ResolveError, ResolvedUnit, Symbol, SymbolTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

/// Lex, parse and resolve one source file.
pub fn analyze(source: &str, file: u32) -> Result<ResolvedUnit, FrontendError> {
    let tokens = tokenize(source, file)?;
    let ast = parse(&tokens, file, source.len() as u32)?;
    Ok(resolve(ast)?)
}
