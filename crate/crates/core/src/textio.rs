//! Small helpers shared by the line-oriented text formats (`space v1`,
//! `system v1`, `roeop v1`, `pt v1`, `decomp v1`).

use std::str::FromStr;

use crate::error::{Error, Result};

/// A whitespace-separated token together with its 1-based column.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

/// One non-blank, non-comment line split into tokens.
#[derive(Debug)]
pub(crate) struct Record<'a> {
    pub line: usize,
    pub tokens: Vec<Token<'a>>,
}

impl<'a> Record<'a> {
    pub fn keyword(&self) -> &'a str {
        self.tokens[0].text
    }

    pub fn expect_len(&self, n: usize) -> Result<()> {
        if self.tokens.len() != n {
            let column = self
                .tokens
                .get(n)
                .or(self.tokens.last())
                .map_or(1, |t| t.column);
            return Err(Error::parse(
                self.line,
                column,
                format!(
                    "`{}` expects {} fields, found {}",
                    self.keyword(),
                    n - 1,
                    self.tokens.len() - 1
                ),
            ));
        }
        Ok(())
    }

    pub fn field<T: FromStr>(&self, idx: usize, what: &str) -> Result<T> {
        let tok = self.tokens.get(idx).ok_or_else(|| {
            Error::parse(
                self.line,
                self.tokens.last().map_or(1, |t| t.column + t.text.len()),
                format!("missing {what}"),
            )
        })?;
        tok.text.parse().map_err(|_| {
            Error::parse(
                self.line,
                tok.column,
                format!("cannot parse {what} from `{}`", tok.text),
            )
        })
    }

    pub fn error(&self, idx: usize, message: impl Into<String>) -> Error {
        let column = self.tokens.get(idx).map_or(1, |t| t.column);
        Error::parse(self.line, column, message)
    }
}

pub(crate) fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    out
}

/// Splits `input` into records, skipping blank lines and `#` comments.
pub(crate) fn records(input: &str) -> Vec<Record<'_>> {
    input
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("");
            let tokens = tokenize(content);
            (!tokens.is_empty()).then_some(Record {
                line: i + 1,
                tokens,
            })
        })
        .collect()
}

/// Checks that the first record is exactly `<magic> v1`.
pub(crate) fn expect_header(records: &[Record<'_>], magic: &str) -> Result<()> {
    let first = records
        .first()
        .ok_or_else(|| Error::parse(1, 1, format!("empty input, expected `{magic} v1`")))?;
    if first.tokens.len() != 2 || first.tokens[0].text != magic || first.tokens[1].text != "v1" {
        return Err(Error::parse(
            first.line,
            1,
            format!("expected header `{magic} v1`"),
        ));
    }
    Ok(())
}
