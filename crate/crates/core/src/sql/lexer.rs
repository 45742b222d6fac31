use std::fmt;

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Select,
    From,
    Where,
    As,
    And,
    Or,
    Not,
    Like,
    Insert,
    Into,
    Values,
    Update,
    Set,
    Delete,
    Null,
    Create,
    Table,
    Primary,
    // Recognized only so they can be rejected as unsupported features.
    In,
    Any,
    Some,
    All,
    Exists,
    Group,
    Having,
    Order,
    By,
    Join,
    Inner,
    Left,
    Right,
    Full,
    Outer,
    Cross,
    On,
    Distinct,
    Union,
    Intersect,
    Except,
    Limit,
    Is,
    Between,
    Case,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        use Keyword::*;
        Option::Some(match word {
            "select" => Select,
            "from" => From,
            "where" => Where,
            "as" => As,
            "and" => And,
            "or" => Or,
            "not" => Not,
            "like" => Like,
            "insert" => Insert,
            "into" => Into,
            "values" => Values,
            "update" => Update,
            "set" => Set,
            "delete" => Delete,
            "null" => Null,
            "create" => Create,
            "table" => Table,
            "primary" => Primary,
            "in" => In,
            "any" => Any,
            "some" => Some,
            "all" => All,
            "exists" => Exists,
            "group" => Group,
            "having" => Having,
            "order" => Order,
            "by" => By,
            "join" => Join,
            "inner" => Inner,
            "left" => Left,
            "right" => Right,
            "full" => Full,
            "outer" => Outer,
            "cross" => Cross,
            "on" => On,
            "distinct" => Distinct,
            "union" => Union,
            "intersect" => Intersect,
            "except" => Except,
            "limit" => Limit,
            "is" => Is,
            "between" => Between,
            "case" => Case,
            _ => return None,
        })
    }

    /// Name of the unsupported SQL feature this keyword introduces, if any.
    pub fn unsupported_feature(self) -> Option<&'static str> {
        use Keyword::*;
        Option::Some(match self {
            In => "IN",
            Any | Some => "ANY",
            All => "ALL",
            Exists => "EXISTS",
            Group => "GROUP BY",
            Having => "HAVING",
            Order => "ORDER BY",
            By => "GROUP BY",
            Join | Inner | Cross | On => "JOIN",
            Left | Right | Full | Outer => "outer join",
            Distinct => "DISTINCT",
            Union | Intersect | Except => "set operations",
            Limit => "LIMIT",
            Is => "IS NULL",
            Between => "BETWEEN",
            Case => "CASE",
            _ => return None,
        })
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format!("{self:?}").to_uppercase())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Keyword(Keyword),
    Ident(String),
    /// Numeric literal as written.
    Number(String),
    Str(String),
    Comma,
    Dot,
    LParen,
    RParen,
    Semicolon,
    Star,
    Plus,
    Minus,
    Slash,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Keyword(k) => write!(f, "{k}"),
            Token::Ident(s) => write!(f, "identifier {s}"),
            Token::Number(n) => write!(f, "number {n}"),
            Token::Str(s) => write!(f, "string '{s}'"),
            Token::Comma => f.write_str("','"),
            Token::Dot => f.write_str("'.'"),
            Token::LParen => f.write_str("'('"),
            Token::RParen => f.write_str("')'"),
            Token::Semicolon => f.write_str("';'"),
            Token::Star => f.write_str("'*'"),
            Token::Plus => f.write_str("'+'"),
            Token::Minus => f.write_str("'-'"),
            Token::Slash => f.write_str("'/'"),
            Token::Eq => f.write_str("'='"),
            Token::NotEq => f.write_str("'<>'"),
            Token::Lt => f.write_str("'<'"),
            Token::LtEq => f.write_str("'<='"),
            Token::Gt => f.write_str("'>'"),
            Token::GtEq => f.write_str("'>='"),
            Token::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub token: Token,
    /// Byte offset of the first character.
    pub offset: usize,
}

pub fn tokenize(input: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |t: Token| Spanned { token: t, offset: start };
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'-') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b',' => {
                out.push(single(Token::Comma));
                i += 1;
            }
            b'(' => {
                out.push(single(Token::LParen));
                i += 1;
            }
            b')' => {
                out.push(single(Token::RParen));
                i += 1;
            }
            b';' => {
                out.push(single(Token::Semicolon));
                i += 1;
            }
            b'*' => {
                out.push(single(Token::Star));
                i += 1;
            }
            b'+' => {
                out.push(single(Token::Plus));
                i += 1;
            }
            b'-' => {
                out.push(single(Token::Minus));
                i += 1;
            }
            b'/' => {
                out.push(single(Token::Slash));
                i += 1;
            }
            b'=' => {
                out.push(single(Token::Eq));
                i += 1;
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                out.push(single(Token::NotEq));
                i += 2;
            }
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => {
                    out.push(single(Token::LtEq));
                    i += 2;
                }
                Some(b'>') => {
                    out.push(single(Token::NotEq));
                    i += 2;
                }
                _ => {
                    out.push(single(Token::Lt));
                    i += 1;
                }
            },
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(single(Token::GtEq));
                    i += 2;
                } else {
                    out.push(single(Token::Gt));
                    i += 1;
                }
            }
            b'\'' | b'"' => {
                let (s, next) = lex_string(input, i)?;
                out.push(single(Token::Str(s)));
                i = next;
            }
            b'.' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                let next = lex_number(bytes, i);
                out.push(single(Token::Number(input[i..next].to_string())));
                i = next;
            }
            b'.' => {
                out.push(single(Token::Dot));
                i += 1;
            }
            b'0'..=b'9' => {
                let next = lex_number(bytes, i);
                out.push(single(Token::Number(input[i..next].to_string())));
                i = next;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = input[start..i].to_ascii_lowercase();
                let token = match Keyword::lookup(&word) {
                    Some(k) => Token::Keyword(k),
                    None => Token::Ident(word),
                };
                out.push(single(token));
            }
            _ => {
                let ch = input[i..].chars().next().unwrap_or('?');
                return Err(ParseError::syntax(start, vec![], format!("character {ch:?}")));
            }
        }
    }
    out.push(Spanned { token: Token::Eof, offset: input.len() });
    Ok(out)
}

fn lex_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    i
}

/// Reads a quoted string starting at `start`; a doubled quote escapes itself.
fn lex_string(input: &str, start: usize) -> Result<(String, usize), ParseError> {
    let bytes = input.as_bytes();
    let quote = bytes[start];
    let mut out = String::new();
    let mut i = start + 1;
    let mut seg = i;
    loop {
        match bytes.get(i) {
            None => {
                return Err(ParseError::syntax(start, vec!["closing quote".into()], "unterminated string".into()));
            }
            Some(&b) if b == quote => {
                out.push_str(&input[seg..i]);
                if bytes.get(i + 1) == Some(&quote) {
                    out.push(quote as char);
                    i += 2;
                    seg = i;
                } else {
                    return Ok((out, i + 1));
                }
            }
            Some(_) => i += 1,
        }
    }
}

/// Splits a script into statements on `;` outside string literals. A leading
/// `-- name` comment line is returned as the statement's label.
pub fn split_statements(script: &str) -> Vec<(Option<String>, String)> {
    let mut out = Vec::new();
    let mut label: Option<String> = None;
    let mut current = String::new();
    let mut quote: Option<char> = None;
    let mut chars = script.chars().peekable();
    let mut at_line_start = true;
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                current.push(c);
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '\'' | '"' => {
                    quote = Some(c);
                    current.push(c);
                }
                '-' if chars.peek() == Some(&'-') => {
                    let mut comment = String::new();
                    chars.next();
                    while let Some(&n) = chars.peek() {
                        if n == '\n' {
                            break;
                        }
                        comment.push(n);
                        chars.next();
                    }
                    if at_line_start && current.trim().is_empty() && label.is_none() {
                        let name = comment.trim();
                        if !name.is_empty() {
                            label = Some(name.to_string());
                        }
                    }
                }
                ';' => {
                    let stmt = current.trim();
                    if !stmt.is_empty() {
                        out.push((label.take(), stmt.to_string()));
                    }
                    label = None;
                    current.clear();
                }
                _ => current.push(c),
            },
        }
        at_line_start = c == '\n' || (at_line_start && c.is_whitespace());
    }
    let stmt = current.trim();
    if !stmt.is_empty() {
        out.push((label, stmt.to_string()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Token> {
        tokenize(s).unwrap().into_iter().map(|t| t.token).collect()
    }

    #[test]
    fn keywords_fold_case_and_identifiers_lowercase() {
        assert_eq!(
            kinds("SeLeCt T1.A from X"),
            vec![
                Token::Keyword(Keyword::Select),
                Token::Ident("t1".into()),
                Token::Dot,
                Token::Ident("a".into()),
                Token::Keyword(Keyword::From),
                Token::Ident("x".into()),
                Token::Eof
            ]
        );
    }

    #[test]
    fn strings_keep_case_and_unescape() {
        assert_eq!(kinds("'It''s'")[0], Token::Str("It's".into()));
        assert_eq!(kinds("\"ASIA\"")[0], Token::Str("ASIA".into()));
        assert!(tokenize("'open").is_err());
    }

    #[test]
    fn operators_and_numbers() {
        assert_eq!(
            kinds("a<>1.5 <= .5 != 2"),
            vec![
                Token::Ident("a".into()),
                Token::NotEq,
                Token::Number("1.5".into()),
                Token::LtEq,
                Token::Number(".5".into()),
                Token::NotEq,
                Token::Number("2".into()),
                Token::Eof
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(kinds("a -- trailing\n b").len(), 3);
    }

    #[test]
    fn split_respects_quotes_and_labels() {
        let parts = split_statements("-- q1\nselect ';' from t;\n\n-- q2\nselect 1 from u;select 2 from v");
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0], (Some("q1".into()), "select ';' from t".into()));
        assert_eq!(parts[1].0.as_deref(), Some("q2"));
        assert_eq!(parts[2], (None, "select 2 from v".into()));
    }
}
