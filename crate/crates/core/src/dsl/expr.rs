//! Sum-of-squares expressions: `(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, Position, Token};
use super::variable::VariableId;
use super::DslError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

impl Comparator {
    pub fn flipped(self) -> Self {
        match self {
            Comparator::AtLeast => Comparator::AtMost,
            Comparator::AtMost => Comparator::AtLeast,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::AtLeast => ">=",
            Comparator::AtMost => "<=",
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One parenthesized group: a signed integer combination of distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearForm {
    terms: Vec<(i64, VariableId)>,
}

impl LinearForm {
    pub fn new(terms: Vec<(i64, VariableId)>) -> Result<Self, DslError> {
        if terms.is_empty() {
            return Err(DslError::EmptyGroup);
        }
        for (i, (c, v)) in terms.iter().enumerate() {
            if *c == 0 {
                return Err(DslError::ZeroCoefficient {
                    variable: *v,
                    position: None,
                });
            }
            if terms[..i].iter().any(|(_, w)| w == v) {
                return Err(DslError::DuplicateVariableInGroup {
                    variable: *v,
                    position: None,
                });
            }
        }
        Ok(Self { terms })
    }

    /// Terms in written order.
    pub fn terms(&self) -> &[(i64, VariableId)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn canonical(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|(_, v)| *v);
        Self { terms }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsExpression {
    groups: Vec<LinearForm>,
    constant_offset: i64,
    comparator: Comparator,
    bound: i64,
}

impl RsExpression {
    pub fn new(
        groups: Vec<LinearForm>,
        constant_offset: i64,
        comparator: Comparator,
        bound: i64,
    ) -> Result<Self, DslError> {
        if groups.is_empty() {
            return Err(DslError::NoGroups);
        }
        Ok(Self {
            groups,
            constant_offset,
            comparator,
            bound,
        })
    }

    pub fn groups(&self) -> &[LinearForm] {
        &self.groups
    }

    pub fn constant_offset(&self) -> i64 {
        self.constant_offset
    }

    pub fn comparator(&self) -> Comparator {
        self.comparator
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    /// Distinct variables in sorted order.
    pub fn variables(&self) -> Vec<VariableId> {
        let mut vars: Vec<VariableId> = self
            .groups
            .iter()
            .flat_map(|g| g.terms.iter().map(|(_, v)| *v))
            .collect();
        vars.sort();
        vars.dedup();
        vars
    }

    /// Same expression with each group's terms sorted by variable.
    pub fn canonical(&self) -> Self {
        Self {
            groups: self.groups.iter().map(LinearForm::canonical).collect(),
            ..self.clone()
        }
    }
}

impl fmt::Display for RsExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rs(self))
    }
}

/// Canonical text: variables sorted inside each group, explicit signs,
/// `2*X1` for non-unit coefficients, offset omitted when zero.
pub fn format_rs(expr: &RsExpression) -> String {
    let mut out = String::new();
    for (g, group) in expr.groups.iter().enumerate() {
        if g > 0 {
            out.push_str(" + ");
        }
        out.push('(');
        for (i, (c, v)) in group.canonical().terms.iter().enumerate() {
            let magnitude = c.unsigned_abs();
            if i == 0 {
                if *c < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if *c < 0 { " - " } else { " + " });
            }
            if magnitude != 1 {
                out.push_str(&format!("{magnitude}*"));
            }
            out.push_str(&v.to_string());
        }
        out.push_str(")^2");
    }
    if expr.constant_offset != 0 {
        let sign = if expr.constant_offset < 0 { '-' } else { '+' };
        out.push_str(&format!(" {sign} {}", expr.constant_offset.unsigned_abs()));
    }
    out.push_str(&format!(" {} {}", expr.comparator, expr.bound));
    out
}

/// Reads one expression. The grammar, whitespace-insensitive:
///
/// ```text
/// expression := sum comparator signed-int
/// sum        := ["+"] item { ("+" | "-") item }
/// item       := square | int | "{" sum "}"
/// square     := "(" form ")" "^" "2"
/// form       := [sign] term { sign term }
/// term       := [int ["*"]] variable
/// ```
///
/// Integer items accumulate into the constant offset; braces only group.
pub fn parse_rs(text: &str) -> Result<RsExpression, DslError> {
    let tokens = tokenize(text).map_err(|e| DslError::Syntax {
        line: e.position.line,
        column: e.position.column,
        message: e.message,
    })?;
    let end = match tokens.last() {
        Some((_, p)) => Position {
            line: p.line,
            column: p.column + 1,
        },
        None => Position { line: 1, column: 1 },
    };
    let mut parser = Parser {
        tokens,
        cursor: 0,
        end,
    };
    let mut groups = Vec::new();
    let mut offset = 0i64;
    parser.sum(&mut groups, &mut offset, false)?;
    let comparator = match parser.next() {
        Some((Token::GreaterEq, _)) => Comparator::AtLeast,
        Some((Token::LessEq, _)) => Comparator::AtMost,
        Some((t, p)) => return Err(syntax(p, format!("expected `>=` or `<=`, found {}", t.describe()))),
        None => return Err(syntax(parser.end, "expected `>=` or `<=` at end of input")),
    };
    let bound = parser.signed_int()?;
    if let Some((t, p)) = parser.next() {
        return Err(syntax(p, format!("unexpected {} after the bound", t.describe())));
    }
    RsExpression::new(groups, offset, comparator, bound)
}

fn syntax(p: Position, message: impl Into<String>) -> DslError {
    DslError::Syntax {
        line: p.line,
        column: p.column,
        message: message.into(),
    }
}

struct Parser {
    tokens: Vec<(Token, Position)>,
    cursor: usize,
    end: Position,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(t, _)| t)
    }

    fn position(&self) -> Position {
        self.tokens
            .get(self.cursor)
            .map(|(_, p)| *p)
            .unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(Token, Position)> {
        let t = self.tokens.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, want: Token) -> Result<Position, DslError> {
        match self.next() {
            Some((t, p)) if t == want => Ok(p),
            Some((t, p)) => Err(syntax(
                p,
                format!("expected {}, found {}", want.describe(), t.describe()),
            )),
            None => Err(syntax(
                self.end,
                format!("expected {}, found end of input", want.describe()),
            )),
        }
    }

    fn signed_int(&mut self) -> Result<i64, DslError> {
        let mut sign = 1;
        match self.peek() {
            Some(Token::Minus) => {
                sign = -1;
                self.cursor += 1;
            }
            Some(Token::Plus) => self.cursor += 1,
            _ => {}
        }
        match self.next() {
            Some((Token::Int(n), _)) => Ok(sign * n),
            Some((t, p)) => Err(syntax(p, format!("expected an integer, found {}", t.describe()))),
            None => Err(syntax(self.end, "expected an integer at end of input")),
        }
    }

    fn sum(
        &mut self,
        groups: &mut Vec<LinearForm>,
        offset: &mut i64,
        in_braces: bool,
    ) -> Result<(), DslError> {
        let mut first = true;
        loop {
            let sign_pos = self.position();
            let negative = match self.peek() {
                Some(Token::Plus) => {
                    self.cursor += 1;
                    false
                }
                Some(Token::Minus) => {
                    self.cursor += 1;
                    true
                }
                _ if first => false,
                _ => break,
            };
            first = false;
            let pos = self.position();
            match self.peek() {
                Some(Token::LParen) => {
                    if negative {
                        return Err(syntax(sign_pos, "a squared group cannot be subtracted"));
                    }
                    groups.push(self.square()?);
                }
                Some(Token::LBrace) => {
                    if negative {
                        return Err(syntax(sign_pos, "a braced sum cannot be subtracted"));
                    }
                    self.cursor += 1;
                    self.sum(groups, offset, true)?;
                    self.expect(Token::RBrace)?;
                }
                Some(Token::Int(n)) => {
                    let n = *n;
                    self.cursor += 1;
                    *offset += if negative { -n } else { n };
                }
                Some(t) => {
                    return Err(syntax(
                        pos,
                        format!("expected `(`, `{{` or an integer, found {}", t.describe()),
                    ))
                }
                None => return Err(syntax(self.end, "expected a squared group at end of input")),
            }
            match self.peek() {
                Some(Token::Plus) | Some(Token::Minus) => continue,
                Some(Token::RBrace) if in_braces => break,
                _ => break,
            }
        }
        Ok(())
    }

    fn square(&mut self) -> Result<LinearForm, DslError> {
        self.expect(Token::LParen)?;
        let mut terms: Vec<(i64, VariableId)> = Vec::new();
        let mut first = true;
        loop {
            let sign = match self.peek() {
                Some(Token::Plus) => {
                    self.cursor += 1;
                    1
                }
                Some(Token::Minus) => {
                    self.cursor += 1;
                    -1
                }
                _ if first => 1,
                _ => break,
            };
            first = false;
            let term_pos = self.position();
            let mut coefficient = 1;
            if let Some(Token::Int(n)) = self.peek() {
                coefficient = *n;
                self.cursor += 1;
                if self.peek() == Some(&Token::Star) {
                    self.cursor += 1;
                }
            }
            let variable = match self.next() {
                Some((Token::Var(v), _)) => v,
                Some((t, p)) => {
                    return Err(syntax(p, format!("expected a variable, found {}", t.describe())))
                }
                None => return Err(syntax(self.end, "expected a variable at end of input")),
            };
            if coefficient == 0 {
                return Err(DslError::ZeroCoefficient {
                    variable,
                    position: Some((term_pos.line, term_pos.column)),
                });
            }
            if terms.iter().any(|(_, v)| *v == variable) {
                return Err(DslError::DuplicateVariableInGroup {
                    variable,
                    position: Some((term_pos.line, term_pos.column)),
                });
            }
            terms.push((sign * coefficient, variable));
        }
        self.expect(Token::RParen)?;
        self.expect(Token::Caret)?;
        match self.next() {
            Some((Token::Int(2), _)) => {}
            Some((t, p)) => {
                return Err(syntax(p, format!("only `^2` is supported, found {}", t.describe())))
            }
            None => return Err(syntax(self.end, "expected `2` after `^`")),
        }
        LinearForm::new(terms)
    }
}
