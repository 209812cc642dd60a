use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Name(String),
    Number(String),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: u32,
    pub end_line: u32,
}

// Longest operators first so greedy matching works.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|",
    "^", "~", "<", ">", "(", ")", "[", "]", "{", "}", ",", ":", ";", ".", "=",
];

const TAB_WIDTH: usize = 8;

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    Lexer::new(text).run()
}

struct Lexer<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    line: u32,
    /// Open brackets with the line each was opened on.
    open: Vec<(&'static str, u32)>,
    indents: Vec<usize>,
    out: Vec<Token>,
    at_line_start: bool,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            src: text.as_bytes(),
            text,
            pos: 0,
            line: 1,
            open: Vec::new(),
            indents: vec![0],
            out: Vec::new(),
            at_line_start: true,
        }
    }

    fn err(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.line, message)
    }

    fn push(&mut self, tok: Tok, line: u32, end_line: u32) {
        self.out.push(Token { tok, line, end_line });
    }

    fn peek(&self, offset: usize) -> Option<u8> {
        self.src.get(self.pos + offset).copied()
    }

    fn last_is_logical_break(&self) -> bool {
        matches!(
            self.out.last().map(|t| &t.tok),
            None | Some(Tok::Newline) | Some(Tok::Indent) | Some(Tok::Dedent)
        )
    }

    fn run(mut self) -> Result<Vec<Token>, SyntaxError> {
        while self.pos < self.src.len() {
            if self.at_line_start && self.open.is_empty() && self.handle_indentation()? {
                continue;
            }
            self.at_line_start = false;
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\x0c' | b'\r' => self.pos += 1,
                b'\n' => {
                    if self.open.is_empty() && !self.last_is_logical_break() {
                        self.push(Tok::Newline, self.line, self.line);
                    }
                    self.pos += 1;
                    self.line += 1;
                    self.at_line_start = true;
                }
                b'#' => self.skip_comment(),
                b'\\' => {
                    let mut next = self.pos + 1;
                    if self.src.get(next) == Some(&b'\r') {
                        next += 1;
                    }
                    if self.src.get(next) == Some(&b'\n') {
                        self.pos = next + 1;
                        self.line += 1;
                    } else if next >= self.src.len() {
                        return Err(self.err("unexpected end of file after line continuation"));
                    } else {
                        return Err(self.err("unexpected character after line continuation"));
                    }
                }
                b'"' | b'\'' => self.string(self.pos)?,
                b'0'..=b'9' => self.number(),
                b'.' if matches!(self.peek(1), Some(b'0'..=b'9')) => self.number(),
                _ if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 => self.name_or_prefixed_string()?,
                _ => self.operator()?,
            }
        }
        if !self.last_is_logical_break() {
            self.push(Tok::Newline, self.line, self.line);
        }
        if let Some((bracket, line)) = self.open.last() {
            return Err(SyntaxError::new(*line, format!("'{bracket}' was never closed")));
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, self.line, self.line);
        }
        self.push(Tok::Eof, self.line, self.line);
        Ok(self.out)
    }

    /// Measures leading whitespace on a fresh logical line. Returns `true` if
    /// the line was blank or comment-only and has been consumed.
    fn handle_indentation(&mut self) -> Result<bool, SyntaxError> {
        let mut col = 0usize;
        let mut p = self.pos;
        while let Some(&c) = self.src.get(p) {
            match c {
                b' ' => col += 1,
                b'\t' => col = (col / TAB_WIDTH + 1) * TAB_WIDTH,
                b'\x0c' => col = 0,
                _ => break,
            }
            p += 1;
        }
        match self.src.get(p) {
            None => {
                self.pos = p;
                return Ok(true);
            }
            Some(b'\n') => {
                self.pos = p + 1;
                self.line += 1;
                return Ok(true);
            }
            Some(b'\r') if self.src.get(p + 1) == Some(&b'\n') => {
                self.pos = p + 2;
                self.line += 1;
                return Ok(true);
            }
            Some(b'#') => {
                self.pos = p;
                self.skip_comment();
                return Ok(true);
            }
            _ => {}
        }
        self.pos = p;
        self.at_line_start = false;
        let current = *self.indents.last().expect("indent stack never empty");
        if col > current {
            self.indents.push(col);
            self.push(Tok::Indent, self.line, self.line);
        } else if col < current {
            while col < *self.indents.last().expect("indent stack never empty") {
                self.indents.pop();
                self.push(Tok::Dedent, self.line, self.line);
            }
            if col != *self.indents.last().expect("indent stack never empty") {
                return Err(self.err("unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn skip_comment(&mut self) {
        while let Some(&c) = self.src.get(self.pos) {
            if c == b'\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn name_or_prefixed_string(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        let rest = &self.text[start..];
        let len: usize = rest
            .char_indices()
            .find(|&(_, ch)| !(ch == '_' || ch.is_alphanumeric()))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if len == 0 {
            let ch = rest.chars().next().unwrap_or('?');
            return Err(self.err(format!("invalid character {ch:?}")));
        }
        let word = &rest[..len];
        let after = self.src.get(start + len).copied();
        let is_prefix = len <= 2
            && word.chars().all(|c| "rRbBuUfF".contains(c))
            && matches!(after, Some(b'"') | Some(b'\''));
        if is_prefix {
            self.pos = start + len;
            return self.string(start);
        }
        self.pos = start + len;
        self.push(Tok::Name(word.to_string()), self.line, self.line);
        Ok(())
    }

    /// Scans a string literal whose prefix (if any) begins at `start`; the
    /// cursor sits on the opening quote.
    fn string(&mut self, start: usize) -> Result<(), SyntaxError> {
        let first_line = self.line;
        let quote = self.src[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        loop {
            let Some(&c) = self.src.get(self.pos) else {
                return Err(SyntaxError::new(first_line, "unterminated string literal"));
            };
            match c {
                b'\\' => {
                    if self.src.get(self.pos + 1) == Some(&b'\n') {
                        self.line += 1;
                    }
                    self.pos += 2;
                }
                b'\n' => {
                    if !triple {
                        return Err(SyntaxError::new(first_line, "unterminated string literal"));
                    }
                    self.line += 1;
                    self.pos += 1;
                }
                _ if c == quote => {
                    if !triple {
                        self.pos += 1;
                        break;
                    }
                    if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                        self.pos += 3;
                        break;
                    }
                    self.pos += 1;
                }
                _ => self.pos += 1,
            }
        }
        let end = self.pos.min(self.src.len());
        let raw = self.text[start..end].to_string();
        self.push(Tok::Str(raw), first_line, self.line);
        Ok(())
    }

    fn number(&mut self) {
        let start = self.pos;
        let mut prev = 0u8;
        while let Some(&c) = self.src.get(self.pos) {
            let exp_sign = (c == b'+' || c == b'-')
                && (prev == b'e' || prev == b'E')
                && !self.text[start..self.pos].starts_with("0x")
                && !self.text[start..self.pos].starts_with("0X");
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || exp_sign {
                prev = c;
                self.pos += 1;
            } else {
                break;
            }
        }
        let raw = self.text[start..self.pos].to_string();
        self.push(Tok::Number(raw), self.line, self.line);
    }

    fn operator(&mut self) -> Result<(), SyntaxError> {
        let rest = &self.src[self.pos..];
        let op = OPERATORS
            .iter()
            .copied()
            .find(|op| rest.starts_with(op.as_bytes()))
            .ok_or_else(|| {
                let ch = self.text[self.pos..].chars().next().unwrap_or('?');
                self.err(format!("invalid character {ch:?}"))
            })?;
        match op {
            "(" | "[" | "{" => self.open.push((op, self.line)),
            ")" | "]" | "}" if self.open.pop().is_none() => {
                return Err(self.err(format!("unmatched '{op}'")));
            }
            _ => {}
        }
        self.pos += op.len();
        self.push(Tok::Op(op), self.line, self.line);
        Ok(())
    }
}
