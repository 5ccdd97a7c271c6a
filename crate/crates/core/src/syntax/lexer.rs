use alloc::string::String;
use alloc::vec::Vec;

use super::ParseError;
use crate::term::SourcePos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Unquoted lowercase-initial name or digit-initial constant, already
    /// normalized.
    Name(String),
    /// Quoted name with its case preserved.
    Quoted(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    Bang,
    Plus,
    Query,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        use alloc::format;
        match self {
            Tok::Name(n) => format!("name `{n}`"),
            Tok::Quoted(n) => format!("quoted name '{n}'"),
            Tok::Var(v) => format!("variable `{v}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Plus => "`(+)`".into(),
            Tok::Query => "`?-`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: SourcePos,
}

pub(crate) fn is_name_start(c: char) -> bool {
    c.is_ascii_lowercase()
}

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Cursor<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    rest: &'a str,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            chars: text.chars().peekable(),
            rest: text,
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> SourcePos {
        SourcePos {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        self.rest.starts_with(s)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.rest = &self.rest[c.len_utf8()..];
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, mut pred: impl FnMut(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
        out
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor::new(text);
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '%' {
                while let Some(c) = cur.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = if cur.starts_with("(+)") {
            for _ in 0..3 {
                cur.bump();
            }
            Tok::Plus
        } else if cur.starts_with(":-") {
            cur.bump();
            cur.bump();
            Tok::Neck
        } else if cur.starts_with("?-") {
            cur.bump();
            cur.bump();
            Tok::Query
        } else {
            match c {
                '(' => {
                    cur.bump();
                    Tok::LParen
                }
                ')' => {
                    cur.bump();
                    Tok::RParen
                }
                ',' | '⊗' => {
                    cur.bump();
                    Tok::Comma
                }
                '.' => {
                    cur.bump();
                    Tok::Dot
                }
                '!' => {
                    cur.bump();
                    Tok::Bang
                }
                '⊕' => {
                    cur.bump();
                    Tok::Plus
                }
                '\'' => {
                    cur.bump();
                    Tok::Quoted(quoted(&mut cur, pos)?)
                }
                c if is_name_start(c) => Tok::Name(cur.take_while(is_name_char)),
                c if c.is_ascii_digit() => {
                    Tok::Name(cur.take_while(is_name_char).to_ascii_lowercase())
                }
                c if c.is_ascii_uppercase() || c == '_' => Tok::Var(cur.take_while(is_name_char)),
                other => {
                    return Err(ParseError::new(
                        pos,
                        alloc::format!("unexpected character `{other}`"),
                        Vec::new(),
                    ))
                }
            }
        };
        out.push(Token { tok, pos });
    }
}

fn quoted(cur: &mut Cursor<'_>, start: SourcePos) -> Result<String, ParseError> {
    let mut out = String::new();
    loop {
        match cur.bump() {
            None => {
                return Err(ParseError::new(
                    start,
                    "unterminated quoted name".into(),
                    alloc::vec!["`'`".into()],
                ))
            }
            Some('\'') => {
                if cur.peek() == Some('\'') {
                    cur.bump();
                    out.push('\'');
                } else {
                    break;
                }
            }
            Some('\\') => match cur.bump() {
                Some('\\') => out.push('\\'),
                Some('\'') => out.push('\''),
                Some('n') => out.push('\n'),
                _ => {
                    return Err(ParseError::new(
                        start,
                        "invalid escape in quoted name".into(),
                        Vec::new(),
                    ))
                }
            },
            Some(c) => out.push(c),
        }
    }
    if out.is_empty() {
        return Err(ParseError::new(
            start,
            "empty quoted name".into(),
            Vec::new(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn digit_constants_are_lowercased() {
        assert_eq!(
            toks("tuition(40K)"),
            vec![
                Tok::Name("tuition".into()),
                Tok::LParen,
                Tok::Name("40k".into()),
                Tok::RParen,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn quoted_names_keep_case() {
        assert_eq!(toks("'40K'")[0], Tok::Quoted("40K".into()));
        assert_eq!(toks("'it''s'")[0], Tok::Quoted("it's".into()));
        assert_eq!(toks(r"'a\'b'")[0], Tok::Quoted("a'b".into()));
    }

    #[test]
    fn choice_and_tensor_symbols() {
        assert_eq!(
            toks("a (+) b ⊕ c, d ⊗ e"),
            vec![
                Tok::Name("a".into()),
                Tok::Plus,
                Tok::Name("b".into()),
                Tok::Plus,
                Tok::Name("c".into()),
                Tok::Comma,
                Tok::Name("d".into()),
                Tok::Comma,
                Tok::Name("e".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let ts = tokenize("% header\n  p :- q.").unwrap();
        assert_eq!(ts[0].pos, SourcePos { line: 2, column: 3 });
        assert_eq!(ts[1].tok, Tok::Neck);
        assert_eq!(ts[1].pos, SourcePos { line: 2, column: 5 });
    }

    #[test]
    fn bad_character_is_reported() {
        let err = tokenize("p :- q & r.").unwrap_err();
        assert_eq!((err.line, err.column), (1, 8));
    }
}
