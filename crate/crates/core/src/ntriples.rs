//! Strict line-oriented N-Triples tokenizer.
//!
//! One line = one triple (or a comment / blank line). Anything that does
//! not scan as `subject predicate object .` is reported as malformed and
//! the caller counts it; nothing here allocates or resolves escapes, the
//! raw source bytes of each term are handed back as slices.

/// One term of a triple. IRIs carry the text between the angle brackets,
/// blank nodes the full `_:label` token. Literal content is never needed
/// downstream, so it is not captured.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Term<'a> {
    Iri(&'a str),
    Blank(&'a str),
    Literal,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Line<'a> {
    /// Blank line or comment.
    Skip,
    Malformed,
    Triple {
        subject: Term<'a>,
        predicate: &'a str,
        object: Term<'a>,
    },
}

struct Scanner<'a> {
    bytes: &'a [u8],
    s: &'a str,
    i: usize,
}

impl<'a> Scanner<'a> {
    fn new(s: &'a str) -> Self {
        Scanner { bytes: s.as_bytes(), s, i: 0 }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.i).copied()
    }

    fn skip_ws(&mut self) -> usize {
        let start = self.i;
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r')) {
            self.i += 1;
        }
        self.i - start
    }

    fn iri(&mut self) -> Option<&'a str> {
        // opening '<' already verified by the caller
        let start = self.i + 1;
        let rest = &self.bytes[start..];
        let end = rest.iter().position(|&b| b == b'>')?;
        self.i = start + end + 1;
        Some(&self.s[start..start + end])
    }

    fn blank(&mut self) -> Option<&'a str> {
        let start = self.i;
        if !self.bytes[self.i..].starts_with(b"_:") {
            return None;
        }
        self.i += 2;
        let label_start = self.i;
        while let Some(b) = self.peek() {
            if b == b' ' || b == b'\t' || b == b'\r' {
                break;
            }
            self.i += 1;
        }
        if self.i == label_start {
            return None;
        }
        Some(&self.s[start..self.i])
    }

    fn literal(&mut self) -> Option<()> {
        // opening '"' already verified; a backslash escapes the byte after
        // it, which is all the lookahead needed to find the real closing
        // quote (unicode escapes contain no quote bytes).
        self.i += 1;
        loop {
            match self.peek()? {
                b'\\' => {
                    self.i += 2;
                    if self.i > self.bytes.len() {
                        return None;
                    }
                }
                b'"' => {
                    self.i += 1;
                    break;
                }
                _ => self.i += 1,
            }
        }
        match self.peek() {
            Some(b'@') => {
                self.i += 1;
                let start = self.i;
                while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'-') {
                    self.i += 1;
                }
                if self.i == start { None } else { Some(()) }
            }
            Some(b'^') => {
                if !self.bytes[self.i..].starts_with(b"^^") {
                    return None;
                }
                self.i += 2;
                if self.peek() != Some(b'<') {
                    return None;
                }
                self.iri().map(|_| ())
            }
            _ => Some(()),
        }
    }

    fn term(&mut self, allow_literal: bool) -> Option<Term<'a>> {
        match self.peek()? {
            b'<' => self.iri().map(Term::Iri),
            b'_' => self.blank().map(Term::Blank),
            b'"' if allow_literal => self.literal().map(|_| Term::Literal),
            _ => None,
        }
    }
}

pub fn parse_line(line: &str) -> Line<'_> {
    let mut sc = Scanner::new(line);
    sc.skip_ws();
    match sc.peek() {
        None => return Line::Skip,
        Some(b'#') => return Line::Skip,
        _ => {}
    }

    let parsed = (|| {
        let subject = sc.term(false)?;
        if sc.skip_ws() == 0 {
            return None;
        }
        let predicate = match sc.peek()? {
            b'<' => sc.iri()?,
            _ => return None,
        };
        if sc.skip_ws() == 0 {
            return None;
        }
        let object = sc.term(true)?;
        sc.skip_ws();
        if sc.peek() != Some(b'.') {
            return None;
        }
        sc.i += 1;
        sc.skip_ws();
        if sc.peek().is_some() {
            return None;
        }
        Some((subject, predicate, object))
    })();

    match parsed {
        Some((subject, predicate, object)) => Line::Triple { subject, predicate, object },
        None => Line::Malformed,
    }
}
