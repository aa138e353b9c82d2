use thiserror::Error;

use crate::model::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Contract,
    Function,
    Modifier,
    Event,
    Mapping,
    Uint,
    Bool,
    Address,
    True,
    False,
    If,
    Else,
    While,
    For,
    Require,
    Emit,
    Return,
    Returns,
    Internal,
    External,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Self> {
        Some(match word {
            "contract" => Keyword::Contract,
            "function" => Keyword::Function,
            "modifier" => Keyword::Modifier,
            "event" => Keyword::Event,
            "mapping" => Keyword::Mapping,
            "uint" => Keyword::Uint,
            "bool" => Keyword::Bool,
            "address" => Keyword::Address,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "while" => Keyword::While,
            "for" => Keyword::For,
            "require" => Keyword::Require,
            "emit" => Keyword::Emit,
            "return" => Keyword::Return,
            "returns" => Keyword::Returns,
            "internal" => Keyword::Internal,
            "external" => Keyword::External,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident,
    Number(u64),
    Punct(&'static str),
    /// String literal; `text` holds the quoted source, this holds the contents.
    Str(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unknown character at byte {0}")]
    UnknownCharacter(u32),
    #[error("unterminated string starting at byte {0}")]
    UnterminatedString(u32),
    #[error("unterminated comment starting at byte {0}")]
    UnterminatedComment(u32),
    #[error("number literal at {0} does not fit in 64 bits")]
    NumberTooLarge(SourceSpan),
}

// Longest first so that maximal munch works with a linear scan.
const PUNCTS: &[&str] = &[
    "=>", "==", "!=", "<=", ">=", "||", "&&", "<<", ">>", "{", "}", "(", ")", "[", "]", ";", ",",
    ".", "=", "<", ">", "|", "&", "^", "+", "-", "*", "/", "%", "!",
];

pub fn tokenize(source: &str, file: u32) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    let span = |start: usize, end: usize| SourceSpan::new(start as u32, (end - start) as u32, file);
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if source[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if source[i..].starts_with("/*") {
            match source[i + 2..].find("*/") {
                Some(rel) => i += rel + 4,
                None => return Err(LexError::UnterminatedComment(i as u32)),
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &source[start..i];
            let kind = Keyword::lookup(word).map_or(TokenKind::Ident, TokenKind::Keyword);
            tokens.push(Token {
                kind,
                text: word.to_string(),
                span: span(start, i),
            });
            continue;
        }
        if c.is_ascii_digit() {
            let hex = source[i..].starts_with("0x") || source[i..].starts_with("0X");
            if hex {
                i += 2;
                while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
                    i += 1;
                }
            } else {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text = &source[start..i];
            let value = if hex {
                u64::from_str_radix(&text[2..], 16)
            } else {
                text.parse::<u64>()
            }
            .map_err(|_| LexError::NumberTooLarge(span(start, i)))?;
            tokens.push(Token {
                kind: TokenKind::Number(value),
                text: text.to_string(),
                span: span(start, i),
            });
            continue;
        }
        if c == b'"' {
            i += 1;
            while i < bytes.len() && bytes[i] != b'"' && bytes[i] != b'\n' {
                i += 1;
            }
            if i >= bytes.len() || bytes[i] != b'"' {
                return Err(LexError::UnterminatedString(start as u32));
            }
            i += 1;
            tokens.push(Token {
                kind: TokenKind::Str(source[start + 1..i - 1].to_string()),
                text: source[start..i].to_string(),
                span: span(start, i),
            });
            continue;
        }
        match PUNCTS.iter().find(|p| source[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                tokens.push(Token {
                    kind: TokenKind::Punct(p),
                    text: (*p).to_string(),
                    span: span(start, i),
                });
            }
            None => return Err(LexError::UnknownCharacter(start as u32)),
        }
    }
    Ok(tokens)
}
