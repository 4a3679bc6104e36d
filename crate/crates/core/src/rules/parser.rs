//! Recursive-descent parser for the rule language.
//!
//! ```text
//! file    := rule*
//! rule    := "rule" IDENT "{" field (";" field)* ";"? "}"
//! field   := "attribute" ":" IDENT
//!          | "category" ":" IDENT
//!          | "theme" ":" IDENT
//!          | "map" ":" arm (";" arm)*
//!          | "default" "->" weights
//! arm     := STRING "->" weights
//!          | "[" NUMBER "," NUMBER ")" "->" weights
//! weights := NUMBER ("," NUMBER)*
//! ```
//!
//! `inf` and `-inf` are numbers. `#` starts a comment.

use super::lexer::{Tok, Token};
use super::{CategoricalArm, Diagnostic, DiagnosticKind, Mapping, NumericArm, Rule};
use crate::{Category, Theme, WIDTH};

/// A syntactically valid rule and the source lines of its parts.
#[derive(Debug, Clone)]
pub(super) struct ParsedRule {
    pub rule: Rule,
    pub line: usize,
    pub attribute_line: usize,
    pub category: Option<(Category, usize)>,
    pub theme: Option<(Theme, usize)>,
    /// Source line of each arm, aligned with the stored (sorted) arms.
    pub arm_lines: Vec<usize>,
}

pub(super) fn parse_tokens(tokens: &[Token]) -> (Vec<ParsedRule>, Vec<Diagnostic>) {
    let mut p = Parser {
        tokens,
        pos: 0,
        diagnostics: Vec::new(),
    };
    let mut rules = Vec::new();
    while !p.at_eof() {
        match p.rule() {
            Ok(Some(rule)) => rules.push(rule),
            Ok(None) => {}
            Err(()) => p.recover(),
        }
    }
    (rules, p.diagnostics)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    diagnostics: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ()>;

#[derive(Default)]
struct Draft {
    attribute: Option<(String, usize)>,
    category: Option<(Category, usize)>,
    theme: Option<(Theme, usize)>,
    arms: Option<(Vec<Arm>, usize)>,
    default: Option<Vec<f64>>,
}

enum Arm {
    Categorical(String, Vec<f64>, usize),
    Numeric(f64, f64, Vec<f64>, usize),
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        // the stream always ends with Eof
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn advance(&mut self) -> &'t Token {
        let t = self.peek();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn report(&mut self, line: usize, col: usize, kind: DiagnosticKind) {
        self.diagnostics.push(Diagnostic { line, col, kind });
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let t = self.peek();
        self.report(
            t.line,
            t.col,
            DiagnosticKind::Syntax {
                expected: expected.to_string(),
                found: t.tok.describe(),
            },
        );
        Err(())
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> PResult<&'t Token> {
        if self.peek().tok == tok {
            Ok(self.advance())
        } else {
            self.unexpected(expected)
        }
    }

    fn ident(&mut self, expected: &str) -> PResult<(String, usize)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let line = self.peek().line;
                self.advance();
                Ok((s.clone(), line))
            }
            _ => self.unexpected(expected),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek().tok {
            Tok::Num(x) => {
                self.advance();
                Ok(x)
            }
            _ => self.unexpected("a number"),
        }
    }

    /// Skips to the next `rule` keyword.
    fn recover(&mut self) {
        self.advance();
        while !self.at_eof() && !self.at_keyword("rule") {
            self.advance();
        }
    }

    fn rule(&mut self) -> PResult<Option<ParsedRule>> {
        if !self.at_keyword("rule") {
            return self.unexpected("`rule`");
        }
        let start = self.advance();
        let (name, _) = self.ident("a rule name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut draft = Draft::default();
        loop {
            if self.peek().tok == Tok::RBrace {
                self.advance();
                break;
            }
            self.field(&mut draft)?;
            match self.peek().tok {
                Tok::Semi => {
                    self.advance();
                }
                Tok::RBrace => {}
                _ => return self.unexpected("`;` or `}`"),
            }
        }
        Ok(self.finish(name, start, draft))
    }

    fn field(&mut self, draft: &mut Draft) -> PResult<()> {
        let t = self.peek();
        let (key, line, col) = match &t.tok {
            Tok::Ident(s) => (s.as_str(), t.line, t.col),
            _ => return self.unexpected("a field name"),
        };
        let duplicate = |p: &mut Parser, set: bool| {
            if set {
                p.report(line, col, DiagnosticKind::DuplicateField(key.to_string()));
            }
        };
        match key {
            "attribute" => {
                self.advance();
                self.expect(Tok::Colon, "`:`")?;
                let v = self.ident("an attribute name")?;
                duplicate(self, draft.attribute.replace(v).is_some());
            }
            "category" => {
                self.advance();
                self.expect(Tok::Colon, "`:`")?;
                let (v, vline) = self.ident("a category")?;
                let Some(c) = Category::parse(&v) else {
                    self.report(vline, col, DiagnosticKind::UnknownName(format!("category `{v}`")));
                    return Err(());
                };
                duplicate(self, draft.category.replace((c, vline)).is_some());
            }
            "theme" => {
                self.advance();
                self.expect(Tok::Colon, "`:`")?;
                let (v, vline) = self.ident("a theme")?;
                let Some(th) = Theme::parse(&v) else {
                    self.report(vline, col, DiagnosticKind::UnknownName(format!("theme `{v}`")));
                    return Err(());
                };
                duplicate(self, draft.theme.replace((th, vline)).is_some());
            }
            "map" => {
                self.advance();
                self.expect(Tok::Colon, "`:`")?;
                let mut arms = vec![self.arm()?];
                while self.peek().tok == Tok::Semi
                    && matches!(
                        self.tokens.get(self.pos + 1).map(|t| &t.tok),
                        Some(Tok::Str(_) | Tok::LBracket)
                    )
                {
                    self.advance();
                    arms.push(self.arm()?);
                }
                duplicate(self, draft.arms.replace((arms, line)).is_some());
            }
            "default" => {
                self.advance();
                self.expect(Tok::Arrow, "`->`")?;
                let w = self.weights()?;
                duplicate(self, draft.default.replace(w).is_some());
            }
            _ => return self.unexpected("`attribute`, `category`, `theme`, `map` or `default`"),
        }
        Ok(())
    }

    fn arm(&mut self) -> PResult<Arm> {
        let t = self.peek();
        let line = t.line;
        match &t.tok {
            Tok::Str(s) => {
                self.advance();
                self.expect(Tok::Arrow, "`->`")?;
                Ok(Arm::Categorical(s.clone(), self.weights()?, line))
            }
            Tok::LBracket => {
                self.advance();
                let lo = self.number()?;
                self.expect(Tok::Comma, "`,`")?;
                let hi = self.number()?;
                self.expect(Tok::RParen, "`)` (intervals are half-open)")?;
                self.expect(Tok::Arrow, "`->`")?;
                Ok(Arm::Numeric(lo, hi, self.weights()?, line))
            }
            _ => self.unexpected("a quoted value or `[lo, hi)`"),
        }
    }

    fn weights(&mut self) -> PResult<Vec<f64>> {
        let mut w = vec![self.number()?];
        while self.peek().tok == Tok::Comma {
            self.advance();
            w.push(self.number()?);
        }
        Ok(w)
    }

    /// Checks field presence and the weight and interval invariants.
    fn finish(&mut self, name: String, start: &Token, draft: Draft) -> Option<ParsedRule> {
        let before = self.diagnostics.len();
        let (line, col) = (start.line, start.col);
        let missing = |p: &mut Parser, field: &str| {
            p.report(line, col, DiagnosticKind::MissingField(field.to_string()));
        };
        if draft.attribute.is_none() {
            missing(self, "attribute");
        }
        if draft.arms.is_none() {
            missing(self, "map");
        }
        if draft.default.is_none() {
            missing(self, "default");
        }
        let (Some((attribute, attribute_line)), Some((arms, map_line)), Some(default)) =
            (draft.attribute, draft.arms, draft.default)
        else {
            return None;
        };
        self.check_weights(&default, line);

        let mapping = if arms.iter().all(|a| matches!(a, Arm::Categorical(..))) {
            let mut out: Vec<CategoricalArm> = Vec::new();
            let mut lines = Vec::new();
            for arm in arms {
                let Arm::Categorical(value, weights, aline) = arm else { unreachable!() };
                self.check_weights(&weights, aline);
                if out.iter().any(|a| a.value == value) {
                    self.report(aline, 1, DiagnosticKind::DuplicateArm(value.clone()));
                }
                out.push(CategoricalArm { value, weights });
                lines.push(aline);
            }
            (Mapping::Categorical(out), lines)
        } else if arms.iter().all(|a| matches!(a, Arm::Numeric(..))) {
            let mut out: Vec<(NumericArm, usize)> = Vec::new();
            for arm in arms {
                let Arm::Numeric(lo, hi, weights, aline) = arm else { unreachable!() };
                self.check_weights(&weights, aline);
                if lo.is_nan() || hi.is_nan() || lo >= hi || lo == f64::INFINITY {
                    self.report(aline, 1, DiagnosticKind::EmptyInterval { lo, hi });
                }
                out.push((NumericArm { lo, hi, weights }, aline));
            }
            out.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
            for pair in out.windows(2) {
                let (a, b) = (&pair[0].0, &pair[1].0);
                if a.hi > b.lo {
                    self.report(
                        pair[1].1,
                        1,
                        DiagnosticKind::OverlappingIntervals {
                            first: (a.lo, a.hi),
                            second: (b.lo, b.hi),
                        },
                    );
                }
            }
            let lines = out.iter().map(|(_, l)| *l).collect();
            (Mapping::Numeric(out.into_iter().map(|(a, _)| a).collect()), lines)
        } else {
            self.report(map_line, 1, DiagnosticKind::MixedArms);
            return None;
        };

        if self.diagnostics.len() > before {
            return None;
        }
        let (mapping, arm_lines) = mapping;
        Some(ParsedRule {
            rule: Rule {
                name,
                attribute,
                category: draft.category.map(|c| c.0),
                theme: draft.theme.map(|t| t.0),
                mapping,
                default,
            },
            line,
            attribute_line,
            category: draft.category,
            theme: draft.theme,
            arm_lines,
        })
    }

    fn check_weights(&mut self, weights: &[f64], line: usize) {
        if weights.len() > WIDTH {
            self.report(line, 1, DiagnosticKind::WeightCount(weights.len()));
        }
        if let Some(&w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            self.report(line, 1, DiagnosticKind::WeightRange(w));
        }
    }
}
