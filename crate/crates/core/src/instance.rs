//! Problem data model and the line-oriented instance / layout text format.
//!
//! ```text
//! [facility]
//! 2 2
//! [departments]
//! 1 2 4
//! 2 1 4
//! 3 1 4
//! [flow_lower]
//! 0 5 1
//! 5 0 2
//! 1 2 0
//! [flow_upper]          # optional, defaults to flow_lower
//! ...
//! [rearrange_cost]      # optional
//! 110 130
//! [initial_layout]      # optional, `id x y w h`
//! ...
//! [config]              # optional
//! life_cycle_scale 1
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::slicing::{Layout, Rect};

const AREA_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Department {
    /// 1-based id, equal to the department's position in [`ProblemInstance::departments`] plus one.
    pub id: usize,
    pub area: f64,
    pub max_ratio: f64,
}

/// Independent uniform flows `F_ij ~ U(lower_ij, upper_ij)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    lower: Matrix,
    upper: Matrix,
    mean: Matrix,
    std: Matrix,
}

impl FlowModel {
    pub fn new(lower: Matrix, upper: Matrix) -> Result<Self> {
        let n = lower.n();
        if upper.n() != n {
            return Err(Error::Dimension { expected: n, got: upper.n() });
        }
        for i in 0..n {
            if lower[(i, i)] != 0.0 || upper[(i, i)] != 0.0 {
                return Err(Error::Validation(format!("flow diagonal entry {} must be 0", i + 1)));
            }
            for j in 0..n {
                let (lo, hi) = (lower[(i, j)], upper[(i, j)]);
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::Validation(format!("non-finite flow at ({}, {})", i + 1, j + 1)));
                }
                if lo < 0.0 {
                    return Err(Error::Validation(format!("negative flow at ({}, {})", i + 1, j + 1)));
                }
                if lo > hi {
                    return Err(Error::Validation(format!(
                        "flow lower bound {lo} exceeds upper bound {hi} at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let mean = Matrix::from_fn(n, |i, j| 0.5 * (lower[(i, j)] + upper[(i, j)]));
        let std = Matrix::from_fn(n, |i, j| (upper[(i, j)] - lower[(i, j)]) / 12f64.sqrt());
        Ok(Self { lower, upper, mean, std })
    }

    pub fn deterministic(flow: Matrix) -> Result<Self> {
        Self::new(flow.clone(), flow)
    }

    pub fn n(&self) -> usize {
        self.lower.n()
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn upper(&self) -> &Matrix {
        &self.upper
    }

    pub fn mean(&self) -> &Matrix {
        &self.mean
    }

    pub fn std(&self) -> &Matrix {
        &self.std
    }

    pub fn is_deterministic(&self) -> bool {
        self.lower == self.upper
    }
}

/// Deterministic flow matrix `max(0, mu + b * sigma)` with a zero diagonal.
pub fn candidate_flows(flows: &FlowModel, b: f64) -> Matrix {
    let (mu, sigma) = (flows.mean(), flows.std());
    Matrix::from_fn(flows.n(), |i, j| if i == j { 0.0 } else { (mu[(i, j)] + b * sigma[(i, j)]).max(0.0) })
}

/// Uniform rearrangement cost interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RearrangeCost {
    pub lo: f64,
    pub hi: f64,
}

impl RearrangeCost {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub width: f64,
    pub height: f64,
    pub departments: Vec<Department>,
    pub flows: FlowModel,
    pub initial_layout: Option<Layout>,
    pub rearrange_cost: Option<RearrangeCost>,
    pub life_cycle_scale: f64,
}

impl ProblemInstance {
    /// Builds and validates a static instance with `life_cycle_scale = 1`.
    pub fn new(width: f64, height: f64, departments: Vec<Department>, flows: FlowModel) -> Result<Self> {
        let inst = Self {
            width,
            height,
            departments,
            flows,
            initial_layout: None,
            rearrange_cost: None,
            life_cycle_scale: 1.0,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Adds an initial layout and rearrangement cost, turning the instance dynamic.
    pub fn with_dynamic(mut self, initial: Vec<Rect>, cost: RearrangeCost) -> Result<Self> {
        let ratios = self.max_ratios();
        self.initial_layout = Some(Layout::new(initial, &ratios));
        self.rearrange_cost = Some(cost);
        self.validate()?;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.departments.len()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.departments.iter().map(|d| d.area).collect()
    }

    pub fn max_ratios(&self) -> Vec<f64> {
        self.departments.iter().map(|d| d.max_ratio).collect()
    }

    pub fn is_dynamic(&self) -> bool {
        self.initial_layout.is_some()
    }

    /// Threshold below which a department counts as not rearranged.
    pub fn rearrange_eps(&self) -> f64 {
        1e-6 * self.width.max(self.height)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.width > 0.0 && self.height > 0.0) || !self.width.is_finite() || !self.height.is_finite() {
            return bad(format!("facility dimensions must be positive, got {} x {}", self.width, self.height));
        }
        let n = self.n();
        if n < 2 {
            return bad(format!("need at least 2 departments, got {n}"));
        }
        for (k, d) in self.departments.iter().enumerate() {
            if d.id != k + 1 {
                return bad(format!("department ids must be 1..{n} in order, found {} at {}", d.id, k + 1));
            }
            if !(d.area > 0.0) || !d.area.is_finite() {
                return bad(format!("department {} has non-positive area {}", d.id, d.area));
            }
            if !(d.max_ratio >= 1.0) {
                return bad(format!("department {} has max_ratio {} < 1", d.id, d.max_ratio));
            }
        }
        if self.flows.n() != n {
            return Err(Error::Dimension { expected: n, got: self.flows.n() });
        }
        let total: f64 = self.departments.iter().map(|d| d.area).sum();
        let facility = self.width * self.height;
        if (total - facility).abs() > AREA_TOLERANCE * facility {
            return bad(format!("department areas sum to {total} but facility area is {facility}"));
        }
        if let Some(rc) = self.rearrange_cost {
            if !(rc.lo >= 0.0 && rc.lo <= rc.hi) || !rc.hi.is_finite() {
                return bad(format!("rearrange cost interval ({}, {}) is invalid", rc.lo, rc.hi));
            }
        }
        if let Some(layout) = &self.initial_layout {
            if self.rearrange_cost.is_none() {
                return bad("initial_layout requires a rearrange_cost section".into());
            }
            if layout.rects.len() != n {
                return Err(Error::Dimension { expected: n, got: layout.rects.len() });
            }
            if layout.rects.iter().any(|r| !(r.w > 0.0 && r.h > 0.0)) {
                return bad("initial layout rectangles must have positive size".into());
            }
        }
        if !(self.life_cycle_scale > 0.0) || !self.life_cycle_scale.is_finite() {
            return bad(format!("life_cycle_scale must be positive, got {}", self.life_cycle_scale));
        }
        Ok(())
    }

    /// Canonical text form. `parse_instance(&inst.render())` reproduces `inst` exactly.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[facility]\n{} {}", self.width, self.height);
        out.push_str("\n[departments]\n");
        for d in &self.departments {
            let _ = writeln!(out, "{} {} {}", d.id, d.area, d.max_ratio);
        }
        out.push_str("\n[flow_lower]\n");
        write_matrix(&mut out, self.flows.lower());
        if !self.flows.is_deterministic() {
            out.push_str("\n[flow_upper]\n");
            write_matrix(&mut out, self.flows.upper());
        }
        if let Some(rc) = self.rearrange_cost {
            let _ = writeln!(out, "\n[rearrange_cost]\n{} {}", rc.lo, rc.hi);
        }
        if let Some(layout) = &self.initial_layout {
            out.push_str("\n[initial_layout]\n");
            write_rects(&mut out, &layout.rects);
        }
        if self.life_cycle_scale != 1.0 {
            let _ = writeln!(out, "\n[config]\nlife_cycle_scale {}", self.life_cycle_scale);
        }
        out
    }
}

fn write_matrix(out: &mut String, m: &Matrix) {
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

pub(crate) fn write_rects(out: &mut String, rects: &[Rect]) {
    for (k, r) in rects.iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {} {}", k + 1, r.x, r.y, r.w, r.h);
    }
}

/// A `[section]` with its body lines (1-based line numbers kept for errors).
pub(crate) struct Section<'a> {
    pub name: &'a str,
    pub line: usize,
    pub body: Vec<(usize, &'a str)>,
}

pub(crate) fn split_sections(text: &str) -> Result<Vec<Section<'_>>> {
    let mut sections: Vec<Section<'_>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse { line: line_no, msg: format!("malformed section header `{line}`") })?
                .trim();
            if sections.iter().any(|s| s.name == name) {
                return Err(Error::Parse { line: line_no, msg: format!("duplicate section [{name}]") });
            }
            sections.push(Section { name, line: line_no, body: Vec::new() });
        } else {
            match sections.last_mut() {
                Some(s) => s.body.push((line_no, line)),
                None => return Err(Error::Parse { line: line_no, msg: "content before first section header".into() }),
            }
        }
    }
    Ok(sections)
}

pub(crate) fn parse_reals(line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse { line: line_no, msg: format!("`{tok}` is not a number") })
        })
        .collect::<Result<_>>()?;
    if vals.len() != expected {
        return Err(Error::Parse { line: line_no, msg: format!("expected {expected} values, found {}", vals.len()) });
    }
    Ok(vals)
}

fn parse_id(line_no: usize, v: f64, n: usize) -> Result<usize> {
    if v.fract() != 0.0 || v < 1.0 || v > n as f64 {
        return Err(Error::Parse { line: line_no, msg: format!("department id {v} outside 1..{n}") });
    }
    Ok(v as usize)
}

fn parse_matrix(section: &Section<'_>, n: usize) -> Result<Matrix> {
    if section.body.len() != n {
        return Err(Error::Parse {
            line: section.line,
            msg: format!("[{}] needs {n} rows, found {}", section.name, section.body.len()),
        });
    }
    let rows: Vec<Vec<f64>> = section.body.iter().map(|&(ln, l)| parse_reals(ln, l, n)).collect::<Result<_>>()?;
    Ok(Matrix::from_rows(&rows).expect("rows checked square"))
}

/// Parses `id x y w h` lines into rectangles ordered by department id.
pub(crate) fn parse_rects(section: &Section<'_>, n: usize) -> Result<Vec<Rect>> {
    if section.body.len() != n {
        return Err(Error::Parse {
            line: section.line,
            msg: format!("[{}] needs {n} rows, found {}", section.name, section.body.len()),
        });
    }
    let mut rects: Vec<Option<Rect>> = vec![None; n];
    for &(ln, l) in &section.body {
        let v = parse_reals(ln, l, 5)?;
        let id = parse_id(ln, v[0], n)?;
        if rects[id - 1].is_some() {
            return Err(Error::Parse { line: ln, msg: format!("duplicate department id {id}") });
        }
        rects[id - 1] = Some(Rect { x: v[1], y: v[2], w: v[3], h: v[4] });
    }
    Ok(rects.into_iter().map(|r| r.expect("n distinct ids in 1..n")).collect())
}

fn single_line<'a>(section: &Section<'a>) -> Result<(usize, &'a str)> {
    match section.body.as_slice() {
        [one] => Ok(*one),
        _ => Err(Error::Parse { line: section.line, msg: format!("[{}] takes exactly one line", section.name) }),
    }
}

pub fn parse_instance(text: &str) -> Result<ProblemInstance> {
    let sections = split_sections(text)?;
    let find = |name: &str| sections.iter().find(|s| s.name == name);
    for s in &sections {
        if !matches!(
            s.name,
            "facility" | "departments" | "flow_lower" | "flow_upper" | "rearrange_cost" | "initial_layout" | "config"
        ) {
            return Err(Error::Parse { line: s.line, msg: format!("unknown section [{}]", s.name) });
        }
    }
    let missing = |name: &str| Error::Parse { line: 0, msg: format!("missing required section [{name}]") };

    let facility = find("facility").ok_or_else(|| missing("facility"))?;
    let (ln, l) = single_line(facility)?;
    let wh = parse_reals(ln, l, 2)?;

    let depts = find("departments").ok_or_else(|| missing("departments"))?;
    let n = depts.body.len();
    let mut slots: Vec<Option<Department>> = vec![None; n];
    for &(ln, l) in &depts.body {
        let v = parse_reals(ln, l, 3)?;
        let id = parse_id(ln, v[0], n)?;
        if slots[id - 1].is_some() {
            return Err(Error::Parse { line: ln, msg: format!("duplicate department id {id}") });
        }
        slots[id - 1] = Some(Department { id, area: v[1], max_ratio: v[2] });
    }
    let departments: Vec<Department> = slots.into_iter().map(|d| d.expect("ids distinct")).collect();

    let lower = parse_matrix(find("flow_lower").ok_or_else(|| missing("flow_lower"))?, n)?;
    let upper = match find("flow_upper") {
        Some(s) => parse_matrix(s, n)?,
        None => lower.clone(),
    };
    let flows = FlowModel::new(lower, upper)?;

    let rearrange_cost = match find("rearrange_cost") {
        Some(s) => {
            let (ln, l) = single_line(s)?;
            let v = parse_reals(ln, l, 2)?;
            Some(RearrangeCost { lo: v[0], hi: v[1] })
        }
        None => None,
    };

    let mut life_cycle_scale = 1.0;
    if let Some(s) = find("config") {
        for &(ln, l) in &s.body {
            let mut it = l.split_whitespace();
            match (it.next(), it.next(), it.next()) {
                (Some("life_cycle_scale"), Some(v), None) => {
                    life_cycle_scale =
                        v.parse().map_err(|_| Error::Parse { line: ln, msg: format!("`{v}` is not a number") })?;
                }
                _ => return Err(Error::Parse { line: ln, msg: format!("unrecognized config entry `{l}`") }),
            }
        }
    }

    let max_ratios: Vec<f64> = departments.iter().map(|d| d.max_ratio).collect();
    let initial_layout = match find("initial_layout") {
        Some(s) => Some(Layout::new(parse_rects(s, n)?, &max_ratios)),
        None => None,
    };

    let inst = ProblemInstance {
        width: wh[0],
        height: wh[1],
        departments,
        flows,
        initial_layout,
        rearrange_cost,
        life_cycle_scale,
    };
    inst.validate()?;
    Ok(inst)
}
