//! CIF 1.1 reader covering the geometric subset: cell, symmetry operators and
//! fractional atom sites.

use std::collections::BTreeMap;

use thiserror::Error;

use super::symop::{parse_symmetry_op, SymmetryOp, SymopError};
use crate::lattice::{cell_from_parameters, LatticeError, Motif, PeriodicSet};

/// Cartesian distance (Å) below which two sites are considered identical.
pub const SITE_MERGE_TOL: f64 = 0.001;

const CELL_TAGS: [&str; 6] = [
    "_cell_length_a",
    "_cell_length_b",
    "_cell_length_c",
    "_cell_angle_alpha",
    "_cell_angle_beta",
    "_cell_angle_gamma",
];

const SYMOP_TAGS: [&str; 2] = ["_symmetry_equiv_pos_as_xyz", "_space_group_symop_operation_xyz"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CifError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no data block found")]
    NoBlocks,
    #[error("block {block}: missing cell tag {tag}")]
    MissingTag { block: String, tag: String },
    #[error("block {block}, line {line}: cannot read {value:?} for {tag} as a number")]
    BadNumber { block: String, tag: String, value: String, line: usize },
    #[error("block {block}, line {line}: bad symmetry operator {op:?}: {source}")]
    BadSymop { block: String, line: usize, op: String, source: SymopError },
    #[error("block {block}: no atom sites")]
    NoAtoms { block: String },
    #[error("block {block}: {source}")]
    Lattice { block: String, source: LatticeError },
}

/// A value with the line it started on.
#[derive(Debug, Clone, PartialEq)]
pub struct CifValue {
    pub text: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopTable {
    pub tags: Vec<String>,
    pub rows: Vec<Vec<CifValue>>,
    pub line: usize,
}

impl LoopTable {
    pub fn column(&self, tag: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CifBlock {
    pub name: String,
    /// Single-valued items keyed by lower-case tag.
    pub items: BTreeMap<String, CifValue>,
    pub loops: Vec<LoopTable>,
}

impl CifBlock {
    pub fn find_loop(&self, tag: &str) -> Option<&LoopTable> {
        self.loops.iter().find(|l| l.column(tag).is_some())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CifDocument {
    pub blocks: Vec<CifBlock>,
}

/// Something unusual that did not stop parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum CifWarning {
    /// The block declares partial occupancy or disorder and was skipped.
    SkippedDisordered { block: String, reason: String },
    /// Sites within the merge tolerance carried different labels.
    ConflictingLabels { block: String, labels: Vec<String>, position: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CifOutcome {
    pub structures: Vec<PeriodicSet>,
    pub warnings: Vec<CifWarning>,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Data(String),
    Loop,
    Tag(String),
    Value(String),
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, CifError> {
    let mut tokens = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((index, line)) = lines.next() {
        let number = index + 1;
        if let Some(rest) = line.strip_prefix(';') {
            // semicolon text field runs until a line starting with ';'
            let mut field = rest.to_string();
            let mut closed = false;
            for (_, next) in lines.by_ref() {
                if next.starts_with(';') {
                    closed = true;
                    break;
                }
                field.push('\n');
                field.push_str(next);
            }
            if !closed {
                return Err(CifError::Syntax {
                    line: number,
                    message: "unterminated text field".into(),
                });
            }
            tokens.push((Token::Value(field.trim().to_string()), number));
            continue;
        }
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c == '\'' || c == '"' {
                // a quote closes only when followed by whitespace or end of line
                let mut j = i + 1;
                loop {
                    if j >= chars.len() {
                        return Err(CifError::Syntax {
                            line: number,
                            message: format!("unterminated {c} quote"),
                        });
                    }
                    if chars[j] == c && chars.get(j + 1).is_none_or(|n| n.is_whitespace()) {
                        break;
                    }
                    j += 1;
                }
                tokens.push((Token::Value(chars[i + 1..j].iter().collect()), number));
                i = j + 1;
                continue;
            }
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let lower = word.to_ascii_lowercase();
            let token = if lower.starts_with("data_") {
                Token::Data(word[5..].to_string())
            } else if lower == "loop_" {
                Token::Loop
            } else if word.starts_with('_') {
                Token::Tag(lower)
            } else if lower.starts_with("save_") || lower == "global_" || lower == "stop_" {
                return Err(CifError::Syntax {
                    line: number,
                    message: format!("unsupported reserved word {word:?}"),
                });
            } else {
                Token::Value(word)
            };
            tokens.push((token, number));
        }
    }
    Ok(tokens)
}

/// Parses CIF text into blocks of tag/value items and loop tables.
pub fn parse_document(text: &str) -> Result<CifDocument, CifError> {
    let tokens = tokenize(text)?;
    let mut blocks: Vec<CifBlock> = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let (token, line) = (&tokens[pos].0, tokens[pos].1);
        match token {
            Token::Data(name) => {
                blocks.push(CifBlock { name: name.clone(), items: BTreeMap::new(), loops: vec![] });
                pos += 1;
            }
            Token::Loop => {
                let block = blocks.last_mut().ok_or_else(|| CifError::Syntax {
                    line,
                    message: "loop_ before any data block".into(),
                })?;
                pos += 1;
                let mut tags = Vec::new();
                while let Some((Token::Tag(t), _)) = tokens.get(pos) {
                    tags.push(t.clone());
                    pos += 1;
                }
                if tags.is_empty() {
                    return Err(CifError::Syntax { line, message: "loop_ without tags".into() });
                }
                let mut values = Vec::new();
                while let Some((Token::Value(v), l)) = tokens.get(pos) {
                    values.push(CifValue { text: v.clone(), line: *l });
                    pos += 1;
                }
                if values.len() % tags.len() != 0 {
                    return Err(CifError::Syntax {
                        line,
                        message: format!(
                            "loop has {} values, not a multiple of its {} tags",
                            values.len(),
                            tags.len()
                        ),
                    });
                }
                let rows = values.chunks(tags.len()).map(|c| c.to_vec()).collect();
                block.loops.push(LoopTable { tags, rows, line });
            }
            Token::Tag(tag) => {
                let block = blocks.last_mut().ok_or_else(|| CifError::Syntax {
                    line,
                    message: "tag before any data block".into(),
                })?;
                match tokens.get(pos + 1) {
                    Some((Token::Value(v), l)) => {
                        block.items.insert(tag.clone(), CifValue { text: v.clone(), line: *l });
                        pos += 2;
                    }
                    _ => {
                        return Err(CifError::Syntax {
                            line,
                            message: format!("tag {tag} has no value"),
                        })
                    }
                }
            }
            Token::Value(v) => {
                return Err(CifError::Syntax { line, message: format!("unexpected value {v:?}") })
            }
        }
    }
    if blocks.is_empty() {
        return Err(CifError::NoBlocks);
    }
    Ok(CifDocument { blocks })
}

/// Reads a numeric CIF value, dropping a standard-uncertainty suffix like `1.234(5)`.
pub fn parse_cif_number(text: &str) -> Option<f64> {
    let core = match text.find('(') {
        Some(i) if text.ends_with(')') => &text[..i],
        Some(_) => return None,
        None => text,
    };
    core.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn number(block: &CifBlock, tag: &str, value: &CifValue) -> Result<f64, CifError> {
    parse_cif_number(&value.text).ok_or_else(|| CifError::BadNumber {
        block: block.name.clone(),
        tag: tag.to_string(),
        value: value.text.clone(),
        line: value.line,
    })
}

fn is_placeholder(text: &str) -> bool {
    text == "." || text == "?"
}

/// Parses every data block into a periodic set, logging warnings.
pub fn parse_cif(text: &str) -> Result<Vec<PeriodicSet>, CifError> {
    let outcome = parse_cif_detailed(text)?;
    for w in &outcome.warnings {
        log::warn!("{w:?}");
    }
    Ok(outcome.structures)
}

/// Parses every data block, returning the structures together with warnings.
pub fn parse_cif_detailed(text: &str) -> Result<CifOutcome, CifError> {
    let doc = parse_document(text)?;
    let mut outcome = CifOutcome { structures: Vec::new(), warnings: Vec::new() };
    for block in &doc.blocks {
        if let Some(set) = block_to_set(block, &mut outcome.warnings)? {
            outcome.structures.push(set);
        }
    }
    Ok(outcome)
}

fn symmetry_ops(block: &CifBlock) -> Result<Vec<SymmetryOp>, CifError> {
    let mut raw: Vec<CifValue> = Vec::new();
    for tag in SYMOP_TAGS {
        if let Some(table) = block.find_loop(tag) {
            let col = table.column(tag).expect("column exists");
            raw.extend(table.rows.iter().map(|r| r[col].clone()));
            break;
        }
        if let Some(v) = block.items.get(tag) {
            raw.push(v.clone());
            break;
        }
    }
    if raw.is_empty() {
        return Ok(vec![SymmetryOp::identity(3)]);
    }
    let mut ops: Vec<SymmetryOp> = Vec::new();
    for v in raw {
        let op = parse_symmetry_op(&v.text).map_err(|source| CifError::BadSymop {
            block: block.name.clone(),
            line: v.line,
            op: v.text.clone(),
            source,
        })?;
        if op.dim() != 3 {
            return Err(CifError::BadSymop {
                block: block.name.clone(),
                line: v.line,
                op: v.text.clone(),
                source: SymopError::Malformed(v.text.clone()),
            });
        }
        if !ops.contains(&op) {
            ops.push(op);
        }
    }
    Ok(ops)
}

fn block_to_set(
    block: &CifBlock,
    warnings: &mut Vec<CifWarning>,
) -> Result<Option<PeriodicSet>, CifError> {
    let mut cell = [0.0; 6];
    for (slot, tag) in cell.iter_mut().zip(CELL_TAGS) {
        let value = block.items.get(tag).ok_or_else(|| CifError::MissingTag {
            block: block.name.clone(),
            tag: tag.to_string(),
        })?;
        *slot = number(block, tag, value)?;
    }
    let lattice = cell_from_parameters(cell[0], cell[1], cell[2], cell[3], cell[4], cell[5])
        .map_err(|source| CifError::Lattice { block: block.name.clone(), source })?;

    let ops = symmetry_ops(block)?;

    let table = match block.find_loop("_atom_site_fract_x") {
        Some(t) => t,
        None => return Err(CifError::NoAtoms { block: block.name.clone() }),
    };
    let coord_cols: Vec<usize> = ["_atom_site_fract_x", "_atom_site_fract_y", "_atom_site_fract_z"]
        .iter()
        .map(|t| {
            table.column(t).ok_or_else(|| CifError::MissingTag {
                block: block.name.clone(),
                tag: t.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    let label_col = table
        .column("_atom_site_type_symbol")
        .or_else(|| table.column("_atom_site_label"));
    let occupancy_col = table.column("_atom_site_occupancy");
    let disorder_col = table.column("_atom_site_disorder_group");

    let mut sites: Vec<(Vec<f64>, String)> = Vec::new();
    for row in &table.rows {
        if let Some(c) = occupancy_col {
            if !is_placeholder(&row[c].text) {
                let occ = number(block, "_atom_site_occupancy", &row[c])?;
                if occ < 1.0 - 1e-6 {
                    warnings.push(CifWarning::SkippedDisordered {
                        block: block.name.clone(),
                        reason: format!("occupancy {} at line {}", row[c].text, row[c].line),
                    });
                    return Ok(None);
                }
            }
        }
        if let Some(c) = disorder_col {
            if !is_placeholder(&row[c].text) {
                warnings.push(CifWarning::SkippedDisordered {
                    block: block.name.clone(),
                    reason: format!("disorder group {} at line {}", row[c].text, row[c].line),
                });
                return Ok(None);
            }
        }
        let mut p = Vec::with_capacity(3);
        for (&c, tag) in coord_cols.iter().zip(["_atom_site_fract_x", "_atom_site_fract_y", "_atom_site_fract_z"]) {
            p.push(number(block, tag, &row[c])?);
        }
        let label = label_col.map(|c| row[c].text.clone()).unwrap_or_default();
        sites.push((p, label));
    }
    if sites.is_empty() {
        return Err(CifError::NoAtoms { block: block.name.clone() });
    }

    let mut images: Vec<(Vec<f64>, String)> = Vec::with_capacity(sites.len() * ops.len());
    for (p, label) in &sites {
        for op in &ops {
            images.push((op.apply(p), label.clone()));
        }
    }
    let merged = merge_sites(&lattice, images, SITE_MERGE_TOL);
    let mut points = Vec::with_capacity(merged.len());
    let mut species = Vec::with_capacity(merged.len());
    for group in merged {
        if group.labels.len() > 1 {
            warnings.push(CifWarning::ConflictingLabels {
                block: block.name.clone(),
                labels: group.labels.clone(),
                position: group.point.clone(),
            });
        }
        points.push(group.point);
        species.push(group.labels.join("/"));
    }
    let motif =
        Motif::new(points).map_err(|source| CifError::Lattice { block: block.name.clone(), source })?;
    let set = PeriodicSet::new(lattice, motif)
        .map_err(|source| CifError::Lattice { block: block.name.clone(), source })?
        .with_label(block.name.clone());
    let set = if label_col.is_some() { set.with_species(species) } else { set };
    Ok(Some(set))
}

/// A cluster of sites closer than the merge tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedSite {
    /// Lexicographically smallest wrapped fractional position in the cluster.
    pub point: Vec<f64>,
    /// Distinct labels found in the cluster, sorted.
    pub labels: Vec<String>,
}

/// Merges wrapped fractional sites whose periodic Cartesian distance is below `tol`.
///
/// Clusters are the connected components of the "closer than `tol`" relation,
/// so the result does not depend on the order of the input.
pub fn merge_sites(
    lattice: &crate::lattice::Lattice,
    sites: Vec<(Vec<f64>, String)>,
    tol: f64,
) -> Vec<MergedSite> {
    let n = sites.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if periodic_distance(lattice, &sites[i].0, &sites[j].0) < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<MergedSite> = groups
        .into_values()
        .map(|members| {
            let point = members
                .iter()
                .map(|&i| &sites[i].0)
                .min_by(|a, b| crate::invariants::lex_cmp(a, b))
                .expect("non-empty group")
                .clone();
            let mut labels: Vec<String> = members.iter().map(|&i| sites[i].1.clone()).collect();
            labels.sort();
            labels.dedup();
            MergedSite { point, labels }
        })
        .collect();
    out.sort_by(|a, b| crate::invariants::lex_cmp(&a.point, &b.point));
    out
}

/// Shortest Cartesian distance between the lattice images of two fractional points.
fn periodic_distance(lattice: &crate::lattice::Lattice, a: &[f64], b: &[f64]) -> f64 {
    let base: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) - (x - y).round()).collect();
    let n = base.len();
    let mut best = f64::INFINITY;
    let mut shift = vec![-1i64; n];
    loop {
        let frac: Vec<f64> = base.iter().zip(&shift).map(|(d, s)| d + *s as f64).collect();
        best = best.min(crate::lattice::norm(&lattice.to_cartesian(&frac)));
        let mut t = 0;
        loop {
            if t == n {
                return best;
            }
            if shift[t] < 1 {
                shift[t] += 1;
                break;
            }
            shift[t] = -1;
            t += 1;
        }
    }
}
