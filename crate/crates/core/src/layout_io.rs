//! Text format for saved layouts.
//!
//! ```text
//! [meta]
//! objective 131.68
//! [chromosome]
//! 3 1 2
//! 2 1
//! 1 0
//! [layout]
//! 1 0 0 1 2
//! ...
//! ```
//!
//! `[meta]` and `[chromosome]` are optional. Meta values run to the end of the line.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{parse_rects, split_sections, write_rects, ProblemInstance};
use crate::slicing::{Chromosome, Layout, Rect};

#[derive(Debug, Clone, PartialEq)]
pub struct SavedLayout {
    pub layout: Layout,
    pub chromosome: Option<Chromosome>,
    pub meta: Vec<(String, String)>,
}

impl SavedLayout {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn render_layout_file(layout: &Layout, chromosome: Option<&Chromosome>, meta: &[(String, String)]) -> String {
    let mut out = String::new();
    if !meta.is_empty() {
        out.push_str("[meta]\n");
        for (k, v) in meta {
            let _ = writeln!(out, "{k} {v}");
        }
        out.push('\n');
    }
    if let Some(c) = chromosome {
        let _ = writeln!(out, "[chromosome]\n{c}\n");
    }
    out.push_str("[layout]\n");
    write_rects(&mut out, &layout.rects);
    out
}

fn parse_row(line: usize, text: &str) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse { line, msg: format!("`{t}` is not a gene") }))
        .collect()
}

/// Parses a saved layout against `instance`, recomputing the feasibility
/// flags from the instance's max ratios.
pub fn parse_layout_file(text: &str, instance: &ProblemInstance) -> Result<SavedLayout> {
    let sections = split_sections(text)?;
    let mut meta = Vec::new();
    let mut chromosome = None;
    let mut rects: Option<Vec<Rect>> = None;
    for s in &sections {
        match s.name {
            "meta" => {
                for &(_, l) in &s.body {
                    let (k, v) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
                    meta.push((k.to_string(), v.trim().to_string()));
                }
            }
            "chromosome" => {
                let [(l1, d), (l2, sl), (l3, o)] = s.body.as_slice() else {
                    return Err(Error::Parse { line: s.line, msg: "[chromosome] takes exactly three rows".into() });
                };
                let orient: Vec<u8> = parse_row(*l3, o)?
                    .into_iter()
                    .map(|b| {
                        u8::try_from(b).map_err(|_| Error::Parse { line: *l3, msg: "orientation bits are 0/1".into() })
                    })
                    .collect::<Result<_>>()?;
                let c = Chromosome::from_rows(&parse_row(*l1, d)?, &parse_row(*l2, sl)?, &orient)?;
                if c.n() != instance.n() {
                    return Err(Error::Dimension { expected: instance.n(), got: c.n() });
                }
                chromosome = Some(c);
            }
            "layout" => rects = Some(parse_rects(s, instance.n())?),
            other => return Err(Error::Parse { line: s.line, msg: format!("unknown section [{other}]") }),
        }
    }
    let rects = rects.ok_or_else(|| Error::Parse { line: 1, msg: "missing [layout] section".into() })?;
    for (k, r) in rects.iter().enumerate() {
        if !(r.w > 0.0 && r.h > 0.0) || ![r.x, r.y, r.w, r.h].iter().all(|v| v.is_finite()) {
            return Err(Error::Validation(format!("department {} has a degenerate rectangle", k + 1)));
        }
    }
    Ok(SavedLayout { layout: Layout::new(rects, &instance.max_ratios()), chromosome, meta })
}

/// Pairs of departments (1-based) whose rectangles overlap by more than `tol` area.
pub fn overlapping_pairs(layout: &Layout, tol: f64) -> Vec<(usize, usize)> {
    let r = &layout.rects;
    let mut out = Vec::new();
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            if r[i].overlap_area(&r[j]) > tol {
                out.push((i + 1, j + 1));
            }
        }
    }
    out
}
