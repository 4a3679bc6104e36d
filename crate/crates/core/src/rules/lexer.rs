use super::{Diagnostic, DiagnosticKind};

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    LBrace,
    RBrace,
    LBracket,
    RParen,
    Comma,
    Semi,
    Colon,
    Arrow,
    Eof,
}

impl Tok {
    pub(super) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(x) => format!("number {x}"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Splits rule text into tokens. Unrecognized characters produce diagnostics
/// and are skipped; the returned stream always ends with `Eof`.
pub(super) fn tokenize(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut lx = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        tokens: Vec::new(),
        diagnostics: Vec::new(),
    };
    lx.run();
    (lx.tokens, lx.diagnostics)
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    tokens: Vec<Token>,
    diagnostics: Vec<Diagnostic>,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&mut self, line: usize, col: usize, message: String) {
        self.diagnostics.push(Diagnostic {
            line,
            col,
            kind: DiagnosticKind::Lexical(message),
        });
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let (line, col) = (self.line, self.col);
            let push = |lx: &mut Lexer, tok: Tok| lx.tokens.push(Token { tok, line, col });
            match c {
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    while matches!(self.peek(), Some(c) if c != '\n') {
                        self.bump();
                    }
                }
                '{' | '}' | '[' | ')' | ',' | ';' | ':' => {
                    self.bump();
                    let tok = match c {
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '[' => Tok::LBracket,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        ';' => Tok::Semi,
                        _ => Tok::Colon,
                    };
                    push(self, tok);
                }
                '-' if self.peek_at(1) == Some('>') => {
                    self.bump();
                    self.bump();
                    push(self, Tok::Arrow);
                }
                '"' => {
                    self.bump();
                    if let Some(s) = self.string(line, col) {
                        push(self, Tok::Str(s));
                    }
                }
                c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                    if let Some(x) = self.number(line, col) {
                        push(self, Tok::Num(x));
                    }
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut s = String::new();
                    while let Some(c) = self.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                        s.push(c);
                        self.bump();
                    }
                    let tok = if s == "inf" { Tok::Num(f64::INFINITY) } else { Tok::Ident(s) };
                    push(self, tok);
                }
                other => {
                    self.bump();
                    self.error(line, col, format!("unexpected character {other:?}"));
                }
            }
        }
        self.tokens.push(Token {
            tok: Tok::Eof,
            line: self.line,
            col: self.col,
        });
    }

    fn string(&mut self, line: usize, col: usize) -> Option<String> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    self.error(line, col, "unterminated string".into());
                    return None;
                }
                Some('"') => return Some(s),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => s.push(c),
                    Some('n') => s.push('\n'),
                    other => {
                        self.error(line, col, format!("invalid escape {other:?} in string"));
                        return None;
                    }
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, line: usize, col: usize) -> Option<f64> {
        let mut s = String::new();
        if let Some(sign @ ('-' | '+')) = self.peek() {
            s.push(sign);
            self.bump();
            if self.peek() == Some('i') {
                // signed infinity
                let word: String = (0..3).filter_map(|i| self.peek_at(i)).collect();
                if word == "inf" {
                    for _ in 0..3 {
                        self.bump();
                    }
                    return Some(if sign == '-' { f64::NEG_INFINITY } else { f64::INFINITY });
                }
            }
        }
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit() || *c == '.') {
            s.push(c);
            self.bump();
        }
        if let Some(e @ ('e' | 'E')) = self.peek() {
            let next = self.peek_at(1);
            let exp_follows = matches!(next, Some(c) if c.is_ascii_digit())
                || (matches!(next, Some('-' | '+'))
                    && matches!(self.peek_at(2), Some(c) if c.is_ascii_digit()));
            if exp_follows {
                s.push(e);
                self.bump();
                if let Some(sign @ ('-' | '+')) = self.peek() {
                    s.push(sign);
                    self.bump();
                }
                while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
                    s.push(c);
                    self.bump();
                }
            }
        }
        match s.parse::<f64>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.error(line, col, format!("malformed number `{s}`"));
                None
            }
        }
    }
}
