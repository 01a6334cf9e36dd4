//! Tokenizer for MiniLang source text.

use serde::{Deserialize, Serialize};

use super::{LexError, SymbolId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Keyword,
    Identifier,
    IntLiteral,
    StringLiteral,
    BoolLiteral,
    Operator,
    Punctuation,
}

impl TokenKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Keyword => "keyword",
            TokenKind::Identifier => "identifier",
            TokenKind::IntLiteral => "int-literal",
            TokenKind::StringLiteral => "string-literal",
            TokenKind::BoolLiteral => "bool-literal",
            TokenKind::Operator => "operator",
            TokenKind::Punctuation => "punctuation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub index: usize,
    pub text: String,
    pub kind: TokenKind,
    /// Set by the checker when the token is a variable occurrence.
    pub symbol: Option<SymbolId>,
    /// True for the defining occurrence of a declaration or parameter.
    pub is_def: bool,
    /// Byte offset of the lexeme in the source.
    pub offset: usize,
    pub line: u32,
    pub col: u32,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }
}

pub const KEYWORDS: &[&str] = &[
    "int", "bool", "string", "void", "type", "implements", "extern", "fn", "if", "else", "while",
    "for", "return",
];

const OPERATORS: &[&str] = &[
    "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "++", "--", "->", "+", "-", "*", "/", "%", "<",
    ">", "!", "=",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ','];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }
}

/// Splits `source` into tokens. Whitespace and `//` comments are skipped but
/// remain recoverable through each token's byte offset.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { src: source, pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();
    loop {
        // trivia
        loop {
            match cur.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    cur.bump();
                }
                Some('/') if cur.peek2() == Some('/') => {
                    while let Some(c) = cur.peek() {
                        if c == '\n' {
                            break;
                        }
                        cur.bump();
                    }
                }
                _ => break,
            }
        }
        let Some(c) = cur.peek() else { break };
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                cur.bump();
            }
            let word = &source[start..cur.pos];
            if word == "true" || word == "false" {
                TokenKind::BoolLiteral
            } else if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() {
            while matches!(cur.peek(), Some(c) if c.is_ascii_digit()) {
                cur.bump();
            }
            TokenKind::IntLiteral
        } else if c == '"' {
            cur.bump();
            loop {
                match cur.bump() {
                    Some('"') => break,
                    Some('\\') => {
                        if cur.bump().is_none() {
                            return Err(LexError { line, col, message: "unterminated string literal".into() });
                        }
                    }
                    Some('\n') | None => {
                        return Err(LexError { line, col, message: "unterminated string literal".into() })
                    }
                    Some(_) => {}
                }
            }
            TokenKind::StringLiteral
        } else if PUNCTUATION.contains(&c) {
            cur.bump();
            TokenKind::Punctuation
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(**op)) {
            for _ in 0..op.len() {
                cur.bump();
            }
            TokenKind::Operator
        } else {
            return Err(LexError { line, col, message: format!("unexpected character {c:?}") });
        };
        tokens.push(Token {
            index: tokens.len(),
            text: source[start..cur.pos].to_string(),
            kind,
            symbol: None,
            is_def: false,
            offset: start,
            line,
            col,
        });
    }
    Ok(tokens)
}

/// Rebuilds the original source from tokens and the trivia between them.
pub fn reconstruct(source: &str, tokens: &[Token]) -> String {
    let mut out = String::with_capacity(source.len());
    let mut prev = 0;
    for t in tokens {
        out.push_str(&source[prev..t.offset]);
        out.push_str(&t.text);
        prev = t.offset + t.text.len();
    }
    out.push_str(&source[prev..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(String, TokenKind)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.text, t.kind)).collect()
    }

    #[test]
    fn declaration_splits_into_five_tokens() {
        use TokenKind::*;
        let got = kinds("int x = 0;");
        let want = vec![
            ("int".to_string(), Keyword),
            ("x".to_string(), Identifier),
            ("=".to_string(), Operator),
            ("0".to_string(), IntLiteral),
            (";".to_string(), Punctuation),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("").unwrap().is_empty());
    }

    #[test]
    fn illegal_character_reports_column() {
        let err = tokenize("int §;").unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));
    }

    #[test]
    fn longest_operator_wins() {
        let got: Vec<String> = kinds("i++ <= a&&b -> x+=1").into_iter().map(|(t, _)| t).collect();
        assert_eq!(got, ["i", "++", "<=", "a", "&&", "b", "->", "x", "+=", "1"]);
    }

    #[test]
    fn comments_and_strings() {
        let src = "// header\nstring s = \"a \\\" b\"; // tail\n";
        let toks = tokenize(src).unwrap();
        assert_eq!(toks.len(), 5);
        assert_eq!(toks[3].text, "\"a \\\" b\"");
        assert_eq!(toks[3].kind, TokenKind::StringLiteral);
        assert_eq!(toks[0].line, 2);
        assert_eq!(reconstruct(src, &toks), src);
    }

    #[test]
    fn indices_are_contiguous() {
        let toks = tokenize("for (int i = 0; i < n; i++) { s += a[i]; }").unwrap();
        for (i, t) in toks.iter().enumerate() {
            assert_eq!(t.index, i);
        }
    }
}
