//! Dense per-slice embedding table and its word2vec-style text format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{cosine, Real};

/// `|V| × dim` vectors, rows ordered by vocabulary id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<T> {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    vectors: Vec<T>,
}

impl<T: Real> EmbeddingModel<T> {
    /// `vectors` is row-major with `tokens.len() * dim` entries.
    pub fn new(tokens: Vec<String>, dim: usize, vectors: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if vectors.len() != tokens.len() * dim {
            return Err(Error::ShapeMismatch {
                left: format!("{} tokens × {dim}", tokens.len()),
                right: format!("{} values", vectors.len()),
            });
        }
        if let Some(pos) = vectors.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value in vector of `{}`",
                tokens[pos / dim]
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate token `{t}`")));
            }
        }
        Ok(EmbeddingModel {
            tokens,
            index,
            dim,
            vectors,
        })
    }

    pub fn from_rows(tokens: Vec<String>, rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch {
                left: format!("dimension {dim}"),
                right: "ragged rows".into(),
            });
        }
        Self::new(tokens, dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn require(&self, token: &str) -> Result<usize> {
        self.id(token).ok_or_else(|| Error::UnknownToken(token.to_string()))
    }

    pub fn vector(&self, id: usize) -> &[T] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn vector_of(&self, token: &str) -> Option<&[T]> {
        self.id(token).map(|i| self.vector(i))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.vectors
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.vectors.chunks_exact(self.dim)
    }

    pub fn cosine(&self, a: usize, b: usize) -> Option<T> {
        cosine(self.vector(a), self.vector(b))
    }

    /// Applies `f` to every row in place, e.g. a rotation or rescaling.
    pub fn map_rows(&self, mut f: impl FnMut(&[T]) -> Vec<T>) -> Result<Self> {
        let rows: Vec<Vec<T>> = self.rows().map(&mut f).collect();
        Self::from_rows(self.tokens.clone(), &rows)
    }

    /// Same vectors in another scalar type.
    pub fn cast<U: Real>(&self) -> EmbeddingModel<U> {
        EmbeddingModel {
            tokens: self.tokens.clone(),
            index: self.index.clone(),
            dim: self.dim,
            vectors: self
                .vectors
                .iter()
                .map(|x| U::from(*x).expect("finite float converts"))
                .collect(),
        }
    }

    /// Writes `<count> <dim>` then one `<token> <v1> ... <vdim>` line per row.
    /// Floats use the shortest representation that parses back exactly.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (tok, row) in self.tokens.iter().zip(self.rows()) {
            w.write_all(tok.as_bytes())?;
            for x in row {
                write!(w, " {x}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::parse(source_name, 1, "missing header"))?;
        let mut h = header.split_whitespace();
        let parse_usize = |s: Option<&str>| s.and_then(|x| x.parse::<usize>().ok());
        let (Some(count), Some(dim), None) = (parse_usize(h.next()), parse_usize(h.next()), h.next()) else {
            return Err(Error::parse(source_name, 1, format!("malformed header `{header}`")));
        };
        if dim == 0 {
            return Err(Error::parse(source_name, 1, "dimension must be positive"));
        }

        let mut tokens = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * dim);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if tokens.len() == count {
                return Err(Error::parse(source_name, line_no, format!("more than {count} rows")));
            }
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let tok = fields.next().expect("non-empty line has a field");
            let before = vectors.len();
            for f in fields {
                let x: T = f
                    .parse()
                    .map_err(|_| Error::parse(source_name, line_no, format!("bad number `{f}`")))?;
                if !x.is_finite() {
                    return Err(Error::parse(source_name, line_no, format!("non-finite value `{f}`")));
                }
                vectors.push(x);
            }
            let got = vectors.len() - before;
            if got != dim {
                return Err(Error::parse(
                    source_name,
                    line_no,
                    format!("dimension mismatch: expected {dim} values, found {got}"),
                ));
            }
            tokens.push(tok.to_string());
        }
        if tokens.len() != count {
            return Err(Error::parse(
                source_name,
                tokens.len() + 1,
                format!("header declares {count} rows, found {}", tokens.len()),
            ));
        }
        Self::new(tokens, dim, vectors)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_text(BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(BufReader::new(f), &path.display().to_string())
    }
}
