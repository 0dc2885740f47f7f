//! Line-oriented label-tree files.
//!
//! ```text
//! levels: 2
//! level 0: road, sidewalk, building
//! level 1: flat, construction
//! parents 0: 0 0 1
//! ```

use std::fs;
use std::path::Path;

use hyperhier_core::LabelTree;

use crate::{FormatError, HarnessError};

pub fn format_tree(tree: &LabelTree) -> String {
    let mut out = format!("levels: {}\n", tree.num_levels());
    for (i, names) in tree.levels().iter().enumerate() {
        out.push_str(&format!("level {i}: {}\n", names.join(", ")));
    }
    for (i, parents) in tree.parent_of().iter().enumerate() {
        let list: Vec<String> = parents.iter().map(usize::to_string).collect();
        out.push_str(&format!("parents {i}: {}\n", list.join(" ")));
    }
    out
}

fn expect_prefix<'a>(line: &'a str, prefix: &str, lineno: usize) -> Result<&'a str, FormatError> {
    line.strip_prefix(prefix)
        .ok_or_else(|| FormatError::parse(lineno, format!("expected `{prefix}`")))
}

/// Parses a tree file and validates the result.
pub fn parse_tree(text: &str) -> Result<LabelTree, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (no, first) = lines.next().ok_or_else(|| FormatError::parse(1, "empty tree file"))?;
    let count: usize = expect_prefix(first, "levels:", no)?
        .trim()
        .parse()
        .map_err(|_| FormatError::parse(no, "level count is not an integer"))?;
    if count == 0 {
        return Err(FormatError::parse(no, "a tree needs at least one level"));
    }

    let mut levels = Vec::with_capacity(count);
    for i in 0..count {
        let (no, line) = lines
            .next()
            .ok_or_else(|| FormatError::parse(no, format!("missing `level {i}` line")))?;
        let names = expect_prefix(line, &format!("level {i}:"), no)?;
        let names: Vec<String> = names.split(',').map(|n| n.trim().to_string()).collect();
        if names.iter().any(String::is_empty) {
            return Err(FormatError::parse(no, "empty label name"));
        }
        levels.push(names);
    }

    let mut parent_of = Vec::with_capacity(count - 1);
    for i in 0..count - 1 {
        let (no, line) = lines
            .next()
            .ok_or_else(|| FormatError::parse(no, format!("missing `parents {i}` line")))?;
        let list = expect_prefix(line, &format!("parents {i}:"), no)?;
        let parents = list
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| FormatError::parse(no, "parent index is not a non-negative integer"))?;
        parent_of.push(parents);
    }
    if let Some((no, _)) = lines.next() {
        return Err(FormatError::parse(no, "unexpected trailing content"));
    }
    let tree = LabelTree::new_unchecked(levels, parent_of);
    tree.validate().map_err(FormatError::Tree)?;
    Ok(tree)
}

pub fn read_tree(path: &Path) -> Result<LabelTree, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_tree(&text).map_err(|e| HarnessError::format(path, e))
}

pub fn write_tree(path: &Path, tree: &LabelTree) -> Result<(), HarnessError> {
    fs::write(path, format_tree(tree)).map_err(|e| HarnessError::io(path, e))
}
