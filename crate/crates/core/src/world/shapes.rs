//! Plain-text shape definitions: one `name: x,y x,y ...` record per line,
//! `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;

use super::grid::Cell;
use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../../data/shapes.txt");

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShapeLibrary {
    shapes: BTreeMap<String, Vec<Cell>>,
}

impl ShapeLibrary {
    /// The bundled six-block shapes.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled shape file is well formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut shapes = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |d: String| Error::parse("shape file", format!("line {}: {d}", no + 1));
            let (name, body) = line.split_once(':').ok_or_else(|| err("missing ':'".into()))?;
            let mut cells = Vec::new();
            for pair in body.split_whitespace() {
                let (x, y) = pair.split_once(',').ok_or_else(|| err(format!("bad cell {pair}")))?;
                let x = x.parse().map_err(|_| err(format!("bad x in {pair}")))?;
                let y = y.parse().map_err(|_| err(format!("bad y in {pair}")))?;
                cells.push(Cell::new(x, y));
            }
            if cells.is_empty() {
                return Err(err("shape without cells".into()));
            }
            if shapes.insert(name.trim().to_string(), cells).is_some() {
                return Err(err(format!("duplicate shape {}", name.trim())));
            }
        }
        Ok(Self { shapes })
    }

    pub fn get(&self, name: &str) -> Option<&[Cell]> {
        self.shapes.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.shapes.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }
}
