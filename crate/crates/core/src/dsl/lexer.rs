//! Tokenizer shared by the expression and scenario readers.

use super::variable::VariableId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    LParen,
    RParen,
    LBrace,
    RBrace,
    Caret,
    Plus,
    Minus,
    Star,
    GreaterEq,
    LessEq,
    Int(i64),
    Var(VariableId),
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::LBrace => "`{`".into(),
            Token::RBrace => "`}`".into(),
            Token::Caret => "`^`".into(),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::GreaterEq => "`>=`".into(),
            Token::LessEq => "`<=`".into(),
            Token::Int(n) => format!("integer `{n}`"),
            Token::Var(v) => format!("variable `{v}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub position: Position,
    pub message: String,
}

/// Splits `text` into tokens. `#` starts a comment running to end of line.
///
/// Unicode `−`, `·`, `≥` and `≤` are accepted as aliases for `-`, `*`, `>=`
/// and `<=`.
pub fn tokenize(text: &str) -> Result<Vec<(Token, Position)>, LexError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Position { line, column };
        let mut advance = 1;
        match c {
            '\n' => {
                line += 1;
                column = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => out.push((Token::LParen, pos)),
            ')' => out.push((Token::RParen, pos)),
            '{' => out.push((Token::LBrace, pos)),
            '}' => out.push((Token::RBrace, pos)),
            '^' => out.push((Token::Caret, pos)),
            '+' => out.push((Token::Plus, pos)),
            '-' | '−' => out.push((Token::Minus, pos)),
            '*' | '·' => out.push((Token::Star, pos)),
            '≥' => out.push((Token::GreaterEq, pos)),
            '≤' => out.push((Token::LessEq, pos)),
            '>' | '<' => {
                if chars.get(i + 1) != Some(&'=') {
                    return Err(LexError {
                        position: pos,
                        message: format!("expected `{c}=`"),
                    });
                }
                advance = 2;
                out.push((
                    if c == '>' { Token::GreaterEq } else { Token::LessEq },
                    pos,
                ));
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i + advance < chars.len() && chars[i + advance].is_ascii_digit() {
                    advance += 1;
                }
                let digits: String = chars[start..start + advance].iter().collect();
                let n = digits.parse::<i64>().map_err(|_| LexError {
                    position: pos,
                    message: format!("integer `{digits}` is out of range"),
                })?;
                out.push((Token::Int(n), pos));
            }
            c if c.is_ascii_uppercase() => {
                while i + advance < chars.len() && chars[i + advance].is_ascii_digit() {
                    advance += 1;
                }
                if i + advance < chars.len() && chars[i + advance].is_alphabetic() {
                    return Err(LexError {
                        position: pos,
                        message: "variable names are one uppercase letter followed by digits"
                            .into(),
                    });
                }
                let name: String = chars[i..i + advance].iter().collect();
                let v = name.parse::<VariableId>().map_err(|e| LexError {
                    position: pos,
                    message: e.to_string(),
                })?;
                out.push((Token::Var(v), pos));
            }
            other => {
                return Err(LexError {
                    position: pos,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += advance;
        column += advance;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::var;

    #[test]
    fn tracks_lines_and_columns() {
        let toks = tokenize("(X1\n  - Y12)^2 >= 2").unwrap();
        assert_eq!(toks[1], (Token::Var(var("X1")), Position { line: 1, column: 2 }));
        assert_eq!(toks[2].1, Position { line: 2, column: 3 });
        assert_eq!(toks[3].0, Token::Var(var("Y12")));
        assert_eq!(toks.last().unwrap().0, Token::Int(2));
    }

    #[test]
    fn unicode_aliases() {
        let toks: Vec<Token> = tokenize("−2·X1 ≥ ≤").unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(
            toks,
            vec![
                Token::Minus,
                Token::Int(2),
                Token::Star,
                Token::Var(var("X1")),
                Token::GreaterEq,
                Token::LessEq
            ]
        );
    }

    #[test]
    fn bad_character_reports_position() {
        let err = tokenize("(X1 % Y1)").unwrap_err();
        assert_eq!(err.position, Position { line: 1, column: 5 });
        assert!(tokenize("X1 > 2").is_err());
        assert!(tokenize("Xa").is_err());
    }
}
