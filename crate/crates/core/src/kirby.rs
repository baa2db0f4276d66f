//! Kirby diagrams of 4-thickenings as slice words: cups, caps, crossings,
//! dotted circles and base points, read top to bottom.
//!
//! Conventions:
//! - `cup P` is a local maximum creating strands `P, P+1`; `cap P` is a local
//!   minimum joining strands `P, P+1`.
//! - `x+ P` puts the strand running from top `P+1` to bottom `P` over the one
//!   running from top `P` to bottom `P+1`; `x- P` puts the latter over.
//! - `dot LO HI ID` is a 0-framed dotted unknot whose spanning disk is pierced
//!   by strands `LO..=HI` (empty when `HI = LO-1`), normal vector up.
//! - `base P C` marks the base point of closed component `C`. Without it the
//!   base sits on the left leg of the component's first cup.
//! - Each closed component is oriented so that the left leg of its first cup
//!   points down, unless `flip C` is given.
//! - `top N` declares an open tangle with `N` strands entering at the top.
//! - `color C NAME` attaches a color name to closed component `C`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::grpalg::Presentation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KirbyError {
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("row {row}: {msg}")]
    Invalid { row: usize, msg: String },
    #[error("open tangle: {0}")]
    Open(String),
    #[error("move not applicable: {0}")]
    Move(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    Cup(usize),
    Cap(usize),
    Cross { pos: usize, positive: bool },
    /// Dotted circle around `len` strands starting at `lo`.
    Dot { lo: usize, len: usize, id: usize },
    Base { pos: usize, comp: usize },
}

impl Event {
    /// `(first position, strands consumed, strands produced)`.
    fn span(&self) -> (usize, usize, usize) {
        match *self {
            Event::Cup(p) => (p, 0, 2),
            Event::Cap(p) => (p, 2, 0),
            Event::Cross { pos, .. } => (pos, 2, 2),
            Event::Dot { lo, len, .. } => (lo, len, len),
            Event::Base { pos, .. } => (pos, 1, 1),
        }
    }

    fn shifted(&self, d: isize) -> Event {
        let s = |x: usize| (x as isize + d) as usize;
        match *self {
            Event::Cup(p) => Event::Cup(s(p)),
            Event::Cap(p) => Event::Cap(s(p)),
            Event::Cross { pos, positive } => Event::Cross {
                pos: s(pos),
                positive,
            },
            Event::Dot { lo, len, id } => Event::Dot { lo: s(lo), len, id },
            Event::Base { pos, comp } => Event::Base { pos: s(pos), comp },
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Event::Cup(p) => write!(f, "cup {p}"),
            Event::Cap(p) => write!(f, "cap {p}"),
            Event::Cross { pos, positive } => {
                write!(f, "x{} {pos}", if positive { '+' } else { '-' })
            }
            Event::Dot { lo, len, id } => {
                write!(f, "dot {lo} {} {id}", lo as isize + len as isize - 1)
            }
            Event::Base { pos, comp } => write!(f, "base {pos} {comp}"),
        }
    }
}

/// A BOK-tangle as a slice word plus per-component metadata.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Diagram {
    /// `Some(n)` for an open tangle with `n` strands at the top.
    pub top: Option<usize>,
    pub events: Vec<Event>,
    /// Closed components whose automatic orientation is reversed.
    pub flips: BTreeSet<usize>,
    pub colors: BTreeMap<usize, String>,
}

/// Which kind of component a strand belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompRef {
    Closed(usize),
    Open(usize),
}

/// One traversed piece of a component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// Vertical passage through `row` between top position `top` and bottom position `bot`.
    Vert {
        row: usize,
        top: usize,
        bot: usize,
        down: bool,
    },
    /// The arc of `Cup(pos)` at `row`, traversed leftward or rightward.
    Cup { row: usize, pos: usize, leftward: bool },
    Cap { row: usize, pos: usize, leftward: bool },
}

#[derive(Clone, Debug)]
pub struct TracedComponent {
    /// Steps in orientation order; closed components start at the base point.
    pub steps: Vec<Step>,
    /// Row of the first cup (closed components).
    pub first_cup: Option<usize>,
}

/// Strand-level structure derived from a diagram.
#[derive(Clone, Debug)]
pub struct Tracing {
    /// Width of each boundary `0..=rows`.
    pub widths: Vec<usize>,
    pub closed: Vec<TracedComponent>,
    pub open: Vec<TracedComponent>,
    /// Per row: top position of each vertical passage → (component, points down).
    pub vert: Vec<HashMap<usize, (CompRef, bool)>>,
    /// Per row with a cup or cap: owning component.
    pub arc_owner: HashMap<usize, CompRef>,
    /// Dot ids in increasing order; index = generator number − 1.
    pub dot_ids: Vec<usize>,
}

impl Tracing {
    pub fn n_closed(&self) -> usize {
        self.closed.len()
    }

    pub fn n_dotted(&self) -> usize {
        self.dot_ids.len()
    }
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> KirbyError {
    KirbyError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

fn invalid(row: usize, msg: impl Into<String>) -> KirbyError {
    KirbyError::Invalid {
        row,
        msg: msg.into(),
    }
}

impl Diagram {
    pub fn new(events: Vec<Event>) -> Self {
        Diagram {
            events,
            ..Default::default()
        }
    }

    /// Parse the `.kbl` text format and validate the result.
    pub fn parse(text: &str) -> Result<Self, KirbyError> {
        let mut d = Diagram::default();
        let mut lines: Vec<usize> = Vec::new();
        for (ln0, raw) in text.lines().enumerate() {
            let ln = ln0 + 1;
            let content = raw.split('#').next().unwrap_or("");
            // Allow several events per line separated by `/` or `;`.
            let mut offset = 0;
            for chunk in content.split(['/', ';']) {
                let col = offset + chunk.len() - chunk.trim_start().len() + 1;
                offset += chunk.len() + 1;
                let toks: Vec<&str> = chunk.split_whitespace().collect();
                if toks.is_empty() {
                    continue;
                }
                let num = |k: usize| -> Result<isize, KirbyError> {
                    toks.get(k)
                        .ok_or_else(|| perr(ln, col, format!("`{}` needs more arguments", toks[0])))?
                        .parse::<isize>()
                        .map_err(|e| perr(ln, col, format!("bad number `{}`: {e}", toks[k])))
                };
                let unum = |k: usize| -> Result<usize, KirbyError> {
                    let x = num(k)?;
                    usize::try_from(x).map_err(|_| perr(ln, col, format!("negative value {x}")))
                };
                let arity = |n: usize| -> Result<(), KirbyError> {
                    if toks.len() != n + 1 {
                        Err(perr(ln, col, format!("`{}` takes {n} arguments", toks[0])))
                    } else {
                        Ok(())
                    }
                };
                let ev = match toks[0] {
                    "cup" => {
                        arity(1)?;
                        Event::Cup(unum(1)?)
                    }
                    "cap" => {
                        arity(1)?;
                        Event::Cap(unum(1)?)
                    }
                    "x+" | "x-" => {
                        arity(1)?;
                        Event::Cross {
                            pos: unum(1)?,
                            positive: toks[0] == "x+",
                        }
                    }
                    "dot" => {
                        arity(3)?;
                        let lo = unum(1)?;
                        let hi = num(2)?;
                        if hi < lo as isize - 1 {
                            return Err(perr(ln, col, "dot range has HI < LO-1"));
                        }
                        Event::Dot {
                            lo,
                            len: (hi - lo as isize + 1) as usize,
                            id: unum(3)?,
                        }
                    }
                    "base" => {
                        arity(2)?;
                        Event::Base {
                            pos: unum(1)?,
                            comp: unum(2)?,
                        }
                    }
                    "top" => {
                        arity(1)?;
                        if !d.events.is_empty() || d.top.is_some() {
                            return Err(perr(ln, col, "`top` must come first and only once"));
                        }
                        d.top = Some(unum(1)?);
                        continue;
                    }
                    "flip" => {
                        arity(1)?;
                        d.flips.insert(unum(1)?);
                        continue;
                    }
                    "color" => {
                        if toks.len() != 3 {
                            return Err(perr(ln, col, "`color` takes 2 arguments"));
                        }
                        d.colors.insert(unum(1)?, toks[2].to_string());
                        continue;
                    }
                    other => return Err(perr(ln, col, format!("unknown event `{other}`"))),
                };
                d.events.push(ev);
                lines.push(ln);
            }
        }
        d.trace().map_err(|e| match e {
            KirbyError::Invalid { row, msg } => perr(lines.get(row).copied().unwrap_or(0), 1, msg),
            other => other,
        })?;
        Ok(d)
    }

    pub fn is_open(&self) -> bool {
        self.top.is_some()
    }

    /// Widths of the boundaries, checking every event fits.
    pub fn widths(&self) -> Result<Vec<usize>, KirbyError> {
        let mut w = self.top.unwrap_or(0);
        let mut out = vec![w];
        for (r, e) in self.events.iter().enumerate() {
            match *e {
                Event::Cup(p) => {
                    if p > w {
                        return Err(invalid(r, format!("cup at {p} beyond width {w}")));
                    }
                    w += 2;
                }
                Event::Cap(p) => {
                    if p + 2 > w {
                        return Err(invalid(r, format!("cap at {p} needs strands {p},{} of {w}", p + 1)));
                    }
                    w -= 2;
                }
                Event::Cross { pos, .. } => {
                    if pos + 2 > w {
                        return Err(invalid(r, format!("crossing at {pos} needs strands {pos},{} of {w}", pos + 1)));
                    }
                }
                Event::Dot { lo, len, .. } => {
                    if lo + len > w {
                        return Err(invalid(r, format!("dot over {lo}..{} beyond width {w}", lo + len)));
                    }
                }
                Event::Base { pos, .. } => {
                    if pos >= w {
                        return Err(invalid(r, format!("base at {pos} beyond width {w}")));
                    }
                }
            }
            out.push(w);
        }
        if self.top.is_none() && w != 0 {
            return Err(invalid(
                self.events.len().saturating_sub(1),
                format!("dangling strands: {w} strands reach the bottom (declare `top N` for open tangles)"),
            ));
        }
        Ok(out)
    }

    /// Trace strands into components, orient and number them.
    pub fn trace(&self) -> Result<Tracing, KirbyError> {
        let widths = self.widths()?;
        let rows = self.events.len();
        // Node (b, i); edges: `down` goes into row b, `up` into row b-1.
        let below = |b: usize, i: usize| -> Option<((usize, usize), Step)> {
            if b == rows {
                return None;
            }
            let st = |bot: usize, down: bool| Step::Vert {
                row: b,
                top: i,
                bot,
                down,
            };
            Some(match self.events[b] {
                Event::Cap(p) if i == p || i == p + 1 => {
                    let other = if i == p { p + 1 } else { p };
                    (
                        (b, other),
                        Step::Cap {
                            row: b,
                            pos: p,
                            leftward: i == p + 1,
                        },
                    )
                }
                Event::Cap(p) => {
                    let j = if i < p { i } else { i - 2 };
                    ((b + 1, j), st(j, true))
                }
                Event::Cup(p) => {
                    let j = if i < p { i } else { i + 2 };
                    ((b + 1, j), st(j, true))
                }
                Event::Cross { pos, .. } if i == pos => ((b + 1, pos + 1), st(pos + 1, true)),
                Event::Cross { pos, .. } if i == pos + 1 => ((b + 1, pos), st(pos, true)),
                _ => ((b + 1, i), st(i, true)),
            })
        };
        let above = |b: usize, i: usize| -> Option<((usize, usize), Step)> {
            if b == 0 {
                return None;
            }
            let r = b - 1;
            let st = |top: usize| Step::Vert {
                row: r,
                top,
                bot: i,
                down: false,
            };
            Some(match self.events[r] {
                Event::Cup(p) if i == p || i == p + 1 => {
                    let other = if i == p { p + 1 } else { p };
                    (
                        (b, other),
                        Step::Cup {
                            row: r,
                            pos: p,
                            leftward: i == p + 1,
                        },
                    )
                }
                Event::Cup(p) => {
                    let j = if i < p { i } else { i - 2 };
                    ((r, j), st(j))
                }
                Event::Cap(p) => {
                    let j = if i < p { i } else { i + 2 };
                    ((r, j), st(j))
                }
                Event::Cross { pos, .. } if i == pos => ((r, pos + 1), st(pos + 1)),
                Event::Cross { pos, .. } if i == pos + 1 => ((r, pos), st(pos)),
                _ => ((r, i), st(i)),
            })
        };
        // Walk from `start` leaving in direction `down_first`; stops at the start node or an end.
        let walk = |start: (usize, usize), down_first: bool| -> (Vec<Step>, (usize, usize)) {
            let mut steps = Vec::new();
            let mut node = start;
            let mut go_down = down_first;
            loop {
                let next = if go_down { below(node.0, node.1) } else { above(node.0, node.1) };
                let Some((n2, step)) = next else { break };
                steps.push(step);
                // Arriving through a vertical step keeps the direction; arcs reverse it.
                go_down = match step {
                    Step::Vert { down, .. } => down,
                    Step::Cup { .. } => true,
                    Step::Cap { .. } => false,
                };
                node = n2;
                if node == start {
                    break;
                }
            }
            (steps, node)
        };

        let mut seen: HashMap<(usize, usize), CompRef> = HashMap::new();
        let nodes_of = |start: (usize, usize), steps: &[Step]| -> Vec<(usize, usize)> {
            let mut v = vec![start];
            for s in steps {
                match *s {
                    Step::Vert { row, top, bot, .. } => {
                        v.push((row, top));
                        v.push((row + 1, bot));
                    }
                    Step::Cup { row, pos, .. } => {
                        v.push((row + 1, pos));
                        v.push((row + 1, pos + 1));
                    }
                    Step::Cap { row, pos, .. } => {
                        v.push((row, pos));
                        v.push((row, pos + 1));
                    }
                }
            }
            v
        };

        // Open components: start from the first free endpoint, top then bottom.
        let mut open = Vec::new();
        let endpoints: Vec<((usize, usize), bool)> = (0..widths[0])
            .map(|i| ((0, i), true))
            .chain((0..widths[rows]).map(|i| ((rows, i), false)))
            .collect();
        for (ep, down) in endpoints {
            if seen.contains_key(&ep) {
                continue;
            }
            let (steps, _) = walk(ep, down);
            let cref = CompRef::Open(open.len());
            for n in nodes_of(ep, &steps) {
                seen.insert(n, cref);
            }
            open.push(TracedComponent {
                steps,
                first_cup: None,
            });
        }

        // Closed components, in order of their first cup.
        let mut closed_raw: Vec<(usize, Vec<Step>)> = Vec::new();
        for (r, e) in self.events.iter().enumerate() {
            if let Event::Cup(p) = *e {
                let start = (r + 1, p);
                if seen.contains_key(&start) {
                    continue;
                }
                let (steps, end) = walk(start, true);
                if end != start {
                    return Err(invalid(r, "strand from this cup does not close up"));
                }
                let tag = CompRef::Closed(usize::MAX - closed_raw.len());
                for n in nodes_of(start, &steps) {
                    seen.insert(n, tag);
                }
                closed_raw.push((r, steps));
            }
        }

        // Bases fix numbering; the rest take the smallest unused numbers.
        let n = closed_raw.len();
        let raw_of = |b: usize, i: usize| match seen.get(&(b, i)) {
            Some(CompRef::Closed(t)) => Some(usize::MAX - t),
            _ => None,
        };
        let mut base_at: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut number: Vec<Option<usize>> = vec![None; n];
        let mut used = BTreeSet::new();
        for (r, e) in self.events.iter().enumerate() {
            if let Event::Base { pos, comp } = *e {
                let raw = match raw_of(r, pos) {
                    Some(x) => x,
                    None => return Err(invalid(r, "base point on an open strand")),
                };
                if comp >= n {
                    return Err(invalid(r, format!("component id {comp} outside 0..{n}")));
                }
                if number[raw].is_some() {
                    return Err(invalid(r, "component has two base points"));
                }
                if !used.insert(comp) {
                    return Err(invalid(r, format!("component id {comp} used twice")));
                }
                number[raw] = Some(comp);
                base_at.insert(raw, (r, pos));
            }
        }
        let mut free = (0..n).filter(|c| !used.contains(c));
        for slot in number.iter_mut() {
            if slot.is_none() {
                *slot = free.next();
            }
        }
        for f in &self.flips {
            if *f >= n {
                return Err(invalid(0, format!("flip of unknown component {f}")));
            }
        }
        for c in self.colors.keys() {
            if *c >= n {
                return Err(invalid(0, format!("color for unknown component {c}")));
            }
        }

        let mut closed: Vec<Option<TracedComponent>> = vec![None; n];
        for (raw, (cup_row, steps)) in closed_raw.into_iter().enumerate() {
            let num = number[raw].unwrap();
            let mut steps = steps;
            if self.flips.contains(&num) {
                steps = reverse_steps(&steps);
            }
            if let Some(&(br, bp)) = base_at.get(&raw) {
                let k = steps
                    .iter()
                    .position(|s| matches!(*s, Step::Vert { row, top, .. } if row == br && top == bp))
                    .expect("base lies on the component");
                steps.rotate_left(k);
            }
            closed[num] = Some(TracedComponent {
                steps,
                first_cup: Some(cup_row),
            });
        }
        let closed: Vec<TracedComponent> = closed.into_iter().map(|c| c.unwrap()).collect();

        let mut vert: Vec<HashMap<usize, (CompRef, bool)>> = vec![HashMap::new(); rows];
        let mut arc_owner = HashMap::new();
        let comps = closed
            .iter()
            .enumerate()
            .map(|(i, c)| (CompRef::Closed(i), c))
            .chain(open.iter().enumerate().map(|(i, c)| (CompRef::Open(i), c)));
        for (cref, c) in comps {
            for s in &c.steps {
                match *s {
                    Step::Vert { row, top, down, .. } => {
                        vert[row].insert(top, (cref, down));
                    }
                    Step::Cup { row, .. } | Step::Cap { row, .. } => {
                        arc_owner.insert(row, cref);
                    }
                }
            }
        }

        let mut dot_ids: Vec<usize> = Vec::new();
        for (r, e) in self.events.iter().enumerate() {
            if let Event::Dot { id, .. } = *e {
                if dot_ids.contains(&id) {
                    return Err(invalid(r, format!("dot id {id} used twice")));
                }
                dot_ids.push(id);
            }
        }
        dot_ids.sort_unstable();

        Ok(Tracing {
            widths,
            closed,
            open,
            vert,
            arc_owner,
            dot_ids,
        })
    }

    /// Component owning the strand at boundary `b`, position `i`.
    pub fn strand_owner(&self, t: &Tracing, b: usize, i: usize) -> Option<CompRef> {
        if b < self.events.len() {
            if let Some((c, _)) = t.vert[b].get(&i) {
                return Some(*c);
            }
            if let Event::Cap(p) = self.events[b] {
                if i == p || i == p + 1 {
                    return t.arc_owner.get(&b).copied();
                }
            }
        }
        if b > 0 {
            let r = b - 1;
            match self.events[r] {
                Event::Cup(p) if i == p || i == p + 1 => return t.arc_owner.get(&r).copied(),
                _ => {
                    for (top, (c, _)) in &t.vert[r] {
                        if bottom_of(&self.events[r], *top) == i {
                            return Some(*c);
                        }
                    }
                }
            }
        }
        None
    }

    /// Disjoint union, `other` placed to the right (both closed).
    pub fn disjoint_union(&self, other: &Diagram) -> Result<Diagram, KirbyError> {
        if self.is_open() || other.is_open() {
            return Err(KirbyError::Open("disjoint union needs closed diagrams".into()));
        }
        let n = self.trace()?.n_closed();
        let max_dot = self
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Dot { id, .. } => Some(id + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let mut d = self.clone();
        for e in &other.events {
            d.events.push(match *e {
                Event::Base { pos, comp } => Event::Base { pos, comp: comp + n },
                Event::Dot { lo, len, id } => Event::Dot {
                    lo,
                    len,
                    id: id + max_dot,
                },
                e => e,
            });
        }
        d.flips.extend(other.flips.iter().map(|f| f + n));
        d.colors.extend(other.colors.iter().map(|(c, s)| (c + n, s.clone())));
        // Components of `other` without an explicit base must keep their
        // numbers after the shift; give every component a base.
        d.with_explicit_bases()
    }

    /// Make every closed component's base explicit (at its current position).
    pub fn with_explicit_bases(&self) -> Result<Diagram, KirbyError> {
        let t = self.trace()?;
        let mut d = self.clone();
        let mut inserts: Vec<(usize, Event)> = Vec::new();
        for (num, c) in t.closed.iter().enumerate() {
            let has = self
                .events
                .iter()
                .any(|e| matches!(*e, Event::Base { comp, .. } if comp == num));
            if has {
                continue;
            }
            let cup = c.first_cup.unwrap();
            let Event::Cup(p) = self.events[cup] else { unreachable!() };
            // A base right below the cup, on its left leg.
            inserts.push((cup + 1, Event::Base { pos: p, comp: num }));
        }
        inserts.sort_by(|a, b| b.0.cmp(&a.0));
        for (row, e) in inserts {
            d.events.insert(row, e);
        }
        d.trace()?;
        Ok(d)
    }
}

fn bottom_of(e: &Event, top: usize) -> usize {
    match *e {
        Event::Cup(p) => {
            if top < p {
                top
            } else {
                top + 2
            }
        }
        Event::Cap(p) => {
            if top < p {
                top
            } else {
                top - 2
            }
        }
        Event::Cross { pos, .. } if top == pos => pos + 1,
        Event::Cross { pos, .. } if top == pos + 1 => pos,
        _ => top,
    }
}

fn reverse_steps(steps: &[Step]) -> Vec<Step> {
    steps
        .iter()
        .rev()
        .map(|s| match *s {
            Step::Vert { row, top, bot, down } => Step::Vert {
                row,
                top,
                bot,
                down: !down,
            },
            Step::Cup { row, pos, leftward } => Step::Cup {
                row,
                pos,
                leftward: !leftward,
            },
            Step::Cap { row, pos, leftward } => Step::Cap {
                row,
                pos,
                leftward: !leftward,
            },
        })
        .collect()
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.top {
            writeln!(f, "top {n}")?;
        }
        for e in &self.events {
            writeln!(f, "{e}")?;
        }
        for c in &self.flips {
            writeln!(f, "flip {c}")?;
        }
        for (c, s) in &self.colors {
            writeln!(f, "color {c} {s}")?;
        }
        Ok(())
    }
}

/// Signed crossing data: `(row, component of A, component of B, sign)`, where
/// `A` runs from top `P+1` to bottom `P`.
pub fn crossings(d: &Diagram, t: &Tracing) -> Vec<(usize, CompRef, CompRef, i64)> {
    let mut out = Vec::new();
    for (r, e) in d.events.iter().enumerate() {
        if let Event::Cross { pos, positive } = *e {
            let (ca, da) = t.vert[r][&(pos + 1)];
            let (cb, db) = t.vert[r][&pos];
            let same = da == db;
            let sign = if positive == same { 1 } else { -1 };
            out.push((r, ca, cb, sign));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkingData {
    /// Undotted closed components; diagonal entries are writhes.
    pub matrix: Vec<Vec<i64>>,
    pub sigma_plus: usize,
    pub sigma_minus: usize,
    pub sigma_zero: usize,
    pub n_dotted: usize,
    pub parity: Vec<u8>,
    /// Matrix over undotted then dotted components, dotted circles read as
    /// 0-framed unknots; entries against a dot count signed piercings.
    pub full_matrix: Vec<Vec<i64>>,
    /// `(σ_+, σ_−, σ_0)` of `full_matrix`.
    pub full_sigma: (usize, usize, usize),
}

pub fn linking_data(d: &Diagram) -> Result<LinkingData, KirbyError> {
    if d.is_open() {
        return Err(KirbyError::Open("linking data needs a closed diagram".into()));
    }
    let t = d.trace()?;
    let n = t.n_closed();
    let mut twice = vec![vec![0i64; n]; n];
    for (_, a, b, s) in crossings(d, &t) {
        let (CompRef::Closed(a), CompRef::Closed(b)) = (a, b) else { unreachable!() };
        if a == b {
            twice[a][a] += 2 * s;
        } else {
            twice[a][b] += s;
            twice[b][a] += s;
        }
    }
    let matrix: Vec<Vec<i64>> = twice
        .iter()
        .map(|r| r.iter().map(|x| x / 2).collect())
        .collect();
    let (sp, sm, sz) = signature(&matrix);
    let nd = t.n_dotted();
    let mut full = vec![vec![0i64; n + nd]; n + nd];
    for (i, row) in matrix.iter().enumerate() {
        full[i][..n].copy_from_slice(row);
    }
    for (c, rel) in extract_presentation(d)?.relators.iter().enumerate() {
        for &l in rel {
            let k = n + l.unsigned_abs() as usize - 1;
            full[c][k] += i64::from(l.signum());
            full[k][c] += i64::from(l.signum());
        }
    }
    Ok(LinkingData {
        full_sigma: signature(&full),
        full_matrix: full,
        parity: (0..n).map(|i| matrix[i][i].rem_euclid(2) as u8).collect(),
        matrix,
        sigma_plus: sp,
        sigma_minus: sm,
        sigma_zero: sz,
        n_dotted: t.n_dotted(),
    })
}

/// Inertia `(σ_+, σ_−, σ_0)` of a symmetric integer matrix by exact congruence.
pub fn signature(m: &[Vec<i64>]) -> (usize, usize, usize) {
    let n = m.len();
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| r.iter().map(|x| BigRational::from_integer(BigInt::from(*x))).collect())
        .collect();
    let (mut pos, mut neg) = (0, 0);
    let mut active: Vec<usize> = (0..n).collect();
    while !active.is_empty() {
        // Find a nonzero diagonal; otherwise create one from an off-diagonal entry.
        let diag = active.iter().copied().find(|&i| !a[i][i].is_zero());
        let k = match diag {
            Some(k) => k,
            None => {
                let pair = active.iter().find_map(|&i| {
                    active
                        .iter()
                        .copied()
                        .find(|&j| j != i && !a[i][j].is_zero())
                        .map(|j| (i, j))
                });
                let Some((i, j)) = pair else { break };
                // e_i ← e_i + e_j gives a_ii = 2 a_ij ≠ 0.
                for c in 0..n {
                    let v = a[j][c].clone();
                    a[i][c] += v;
                }
                for r in 0..n {
                    let v = a[r][j].clone();
                    a[r][i] += v;
                }
                i
            }
        };
        let piv = a[k][k].clone();
        if piv.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        active.retain(|&x| x != k);
        for &i in &active {
            let f = &a[i][k] / &piv;
            if f.is_zero() {
                continue;
            }
            for c in 0..n {
                let v = &f * &a[k][c];
                a[i][c] -= v;
            }
            for r in 0..n {
                let v = &f * &a[r][k];
                a[r][i] -= v;
            }
        }
    }
    (pos, neg, n - pos - neg)
}

/// Letters `±(generator)` met along each undotted component from its base.
pub fn extract_presentation(d: &Diagram) -> Result<Presentation, KirbyError> {
    if d.is_open() {
        return Err(KirbyError::Open("presentation needs a closed diagram".into()));
    }
    let t = d.trace()?;
    let gen_of: HashMap<usize, i32> = t
        .dot_ids
        .iter()
        .enumerate()
        .map(|(k, id)| (*id, k as i32 + 1))
        .collect();
    let mut relators = Vec::new();
    for c in &t.closed {
        let mut word = Vec::new();
        for s in &c.steps {
            if let Step::Vert { row, top, down, .. } = *s {
                if let Event::Dot { lo, len, id } = d.events[row] {
                    if top >= lo && top < lo + len {
                        let g = gen_of[&id];
                        word.push(if down { g } else { -g });
                    }
                }
            }
        }
        relators.push(word);
    }
    Presentation::new(t.n_dotted(), relators).map_err(|e| KirbyError::Move(e.to_string()))
}

/// Diagram rewrites. Rows are event indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    /// Insert `x± P; x∓ P` before `row`.
    InsertR2 { row: usize, pos: usize, positive_first: bool },
    /// Remove an adjacent inverse crossing pair starting at `row`.
    RemoveR2 { row: usize },
    /// `σ_P σ_{P+1} σ_P ↔ σ_{P+1} σ_P σ_{P+1}` (same crossing type) at `row..row+3`.
    R3 { row: usize },
    /// Insert a zigzag `cup P+1; cap P` (`left = false`) or `cup P; cap P+1`.
    InsertSnake { row: usize, pos: usize, left: bool },
    RemoveSnake { row: usize },
    /// Slide a cup or cap past an adjacent crossing at `row, row+1`.
    Swing { row: usize },
    /// Swap two adjacent events acting on disjoint strands.
    Commute { row: usize },
    /// Move the base of a closed component to the strand at boundary `row`, position `pos`.
    MoveBase { comp: usize, row: usize, pos: usize },
    /// Reverse the orientation of a closed component.
    Flip { comp: usize },
    /// Slide component `x` over `onto` along a push-off; `outside` picks the
    /// push-off side at the first cup, `site` the adjacency used for the band.
    HandleSlide { x: usize, onto: usize, outside: bool, site: usize },
    /// Erase dot `dot` and the component passing once through it.
    CancelPair { dot: usize, comp: usize },
    /// Insert `cup P; dot P P id; cap P` before `row`.
    IntroducePair { row: usize, pos: usize, id: usize },
    /// Replace a dotted circle by a 0-framed undotted unknot.
    RemoveDot { dot: usize },
    /// Replace a 0-framed unknot pattern starting at `row` by a dotted circle.
    AddDot { row: usize, id: usize },
    /// Insert an isolated `±1` unknot before `row`.
    BlowUp { row: usize, pos: usize, positive: bool },
    /// Remove an isolated `±1` curl component.
    BlowDown { comp: usize },
}

fn mv_err(msg: impl Into<String>) -> KirbyError {
    KirbyError::Move(msg.into())
}

fn cross(pos: usize, positive: bool) -> Event {
    Event::Cross { pos, positive }
}

/// Rows of the unknotted 0-framed loop around `len` strands starting at `lo`.
fn clasp_rows(lo: usize, len: usize) -> Vec<Event> {
    let mut v = vec![Event::Cup(lo)];
    for k in 0..len {
        v.push(cross(lo + 1 + k, false));
    }
    for k in (0..len).rev() {
        v.push(cross(lo + 1 + k, false));
    }
    v.push(Event::Cap(lo));
    v
}

fn curl_rows(pos: usize, positive: bool) -> Vec<Event> {
    vec![
        Event::Cup(pos),
        Event::Cup(pos + 2),
        cross(pos + 1, positive),
        Event::Cap(pos + 2),
        Event::Cap(pos),
    ]
}

fn fresh_dot_id(d: &Diagram) -> usize {
    d.events
        .iter()
        .filter_map(|e| match e {
            Event::Dot { id, .. } => Some(id + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Rows `lo..hi` rewritten by a local isotopy move.
fn local_window(mv: &Move) -> Option<(usize, usize, usize)> {
    Some(match *mv {
        Move::InsertR2 { row, .. } | Move::InsertSnake { row, .. } => (row, row, row),
        Move::RemoveR2 { row } | Move::RemoveSnake { row } | Move::Swing { row } | Move::Commute { row } => {
            (row, row, row + 2)
        }
        Move::R3 { row } => (row, row, row + 3),
        _ => return None,
    })
}

fn with_row(mv: &Move, r: usize) -> Move {
    let mut m = mv.clone();
    match &mut m {
        Move::InsertR2 { row, .. }
        | Move::InsertSnake { row, .. }
        | Move::RemoveR2 { row }
        | Move::RemoveSnake { row }
        | Move::Swing { row }
        | Move::Commute { row }
        | Move::R3 { row } => *row = r,
        _ => unreachable!(),
    }
    m
}

/// Apply a move. Local isotopy moves keep component numbers and orientations:
/// every closed component is first pinned by a base outside the rewritten rows.
pub fn apply_move(d: &Diagram, mv: &Move) -> Result<Diagram, KirbyError> {
    let Some((row, lo, hi)) = local_window(mv) else {
        return apply_move_raw(d, mv);
    };
    if row > d.events.len() {
        return Err(mv_err(format!("no row {row}")));
    }
    let (a, shift) = d.anchored(lo, hi)?;
    let ta = a.trace()?;
    let mut out = apply_move_raw(&a, &with_row(mv, row + shift))?;
    let to = out.trace()?;
    for c in 0..ta.n_closed() {
        if base_direction(&a, &ta, c) != base_direction(&out, &to, c) && !out.flips.remove(&c) {
            out.flips.insert(c);
        }
    }
    out.trace()?;
    Ok(out)
}

fn base_direction(d: &Diagram, t: &Tracing, c: usize) -> Option<bool> {
    d.events.iter().enumerate().find_map(|(r, e)| match *e {
        Event::Base { pos, comp } if comp == c => t.vert[r].get(&pos).map(|x| x.1),
        _ => None,
    })
}

impl Diagram {
    /// Give every closed component an explicit base at a boundary outside
    /// `lo+1..hi`; returns the diagram and the shift of row `lo`.
    fn anchored(&self, lo: usize, hi: usize) -> Result<(Diagram, usize), KirbyError> {
        let t = self.trace()?;
        let ok = |b: usize| b <= lo || b >= hi;
        let mut inserts: Vec<(usize, Event)> = Vec::new();
        for (num, c) in t.closed.iter().enumerate() {
            if self.events.iter().any(|e| matches!(*e, Event::Base { comp, .. } if comp == num)) {
                continue;
            }
            let cup = c.first_cup.unwrap();
            let Event::Cup(p) = self.events[cup] else { unreachable!() };
            let node = if ok(cup + 1) {
                Some((cup + 1, p))
            } else {
                c.steps.iter().find_map(|s| match *s {
                    Step::Vert { row, top, bot, .. } => {
                        if ok(row) {
                            Some((row, top))
                        } else if ok(row + 1) {
                            Some((row + 1, bot))
                        } else {
                            None
                        }
                    }
                    _ => None,
                })
            };
            let (b, i) = node.ok_or_else(|| mv_err(format!("component {num} lies inside the move")))?;
            inserts.push((b, Event::Base { pos: i, comp: num }));
        }
        let shift = inserts.iter().filter(|(b, _)| *b <= lo).count();
        inserts.sort_by(|x, y| y.0.cmp(&x.0));
        let mut d = self.clone();
        for (b, e) in inserts {
            d.events.insert(b, e);
        }
        d.trace()?;
        Ok((d, shift))
    }
}

fn apply_move_raw(d: &Diagram, mv: &Move) -> Result<Diagram, KirbyError> {
    let t = d.trace()?;
    let ev = &d.events;
    let get = |r: usize| ev.get(r).copied().ok_or_else(|| mv_err(format!("no row {r}")));
    let mut out = d.clone();
    match *mv {
        Move::InsertR2 {
            row,
            pos,
            positive_first,
        } => {
            if row > ev.len() || pos + 2 > t.widths[row] {
                return Err(mv_err("R2 site outside the diagram"));
            }
            out.events.insert(row, cross(pos, !positive_first));
            out.events.insert(row, cross(pos, positive_first));
        }
        Move::RemoveR2 { row } => match (get(row)?, get(row + 1)?) {
            (Event::Cross { pos: a, positive: s }, Event::Cross { pos: b, positive: u }) if a == b && s != u => {
                out.events.drain(row..row + 2);
            }
            _ => return Err(mv_err("rows are not an inverse crossing pair")),
        },
        Move::R3 { row } => {
            let (e0, e1, e2) = (get(row)?, get(row + 1)?, get(row + 2)?);
            let (
                Event::Cross { pos: a, positive: s0 },
                Event::Cross { pos: b, positive: s1 },
                Event::Cross { pos: c, positive: s2 },
            ) = (e0, e1, e2)
            else {
                return Err(mv_err("R3 needs three crossings"));
            };
            if !(s0 == s1 && s1 == s2 && a == c && (b == a + 1 || a == b + 1)) {
                return Err(mv_err("rows are not a same-type braid triple"));
            }
            out.events[row] = cross(b, s0);
            out.events[row + 1] = cross(a, s0);
            out.events[row + 2] = cross(b, s0);
        }
        Move::InsertSnake { row, pos, left } => {
            if row > ev.len() || pos >= t.widths[row] {
                return Err(mv_err("snake site outside the diagram"));
            }
            // The strand at `pos` turns into a zigzag.
            let (cup, cap) = if left { (pos, pos + 1) } else { (pos + 1, pos) };
            out.events.insert(row, Event::Cap(cap));
            out.events.insert(row, Event::Cup(cup));
        }
        Move::RemoveSnake { row } => match (get(row)?, get(row + 1)?) {
            (Event::Cup(a), Event::Cap(b)) if a == b + 1 || b == a + 1 => {
                out.events.drain(row..row + 2);
            }
            _ => return Err(mv_err("rows are not a zigzag")),
        },
        Move::Swing { row } => {
            let pair = (get(row)?, get(row + 1)?);
            let new = match pair {
                (Event::Cup(p), Event::Cross { pos, positive }) if pos == p + 1 => {
                    [Event::Cup(p + 1), cross(p, !positive)]
                }
                (Event::Cup(p), Event::Cross { pos, positive }) if pos + 1 == p => {
                    [Event::Cup(pos), cross(pos + 1, !positive)]
                }
                (Event::Cross { pos, positive }, Event::Cap(p)) if pos == p + 1 => {
                    [cross(p, !positive), Event::Cap(p + 1)]
                }
                (Event::Cross { pos, positive }, Event::Cap(p)) if pos + 1 == p => {
                    [cross(pos + 1, !positive), Event::Cap(pos)]
                }
                _ => return Err(mv_err("rows are not a cup/cap next to a crossing on its leg")),
            };
            out.events[row] = new[0];
            out.events[row + 1] = new[1];
        }
        Move::Commute { row } => {
            let (e1, e2) = (get(row)?, get(row + 1)?);
            let (a1, i1, o1) = e1.span();
            let (a2, i2, o2) = e2.span();
            let (n2, n1) = if a2 + i2 <= a1 {
                (e2, e1.shifted(o2 as isize - i2 as isize))
            } else if a2 >= a1 + o1 {
                (e2.shifted(i1 as isize - o1 as isize), e1)
            } else {
                return Err(mv_err("events share strands"));
            };
            out.events[row] = n2;
            out.events[row + 1] = n1;
        }
        Move::MoveBase { comp, row, pos } => {
            if comp >= t.n_closed() {
                return Err(mv_err(format!("no component {comp}")));
            }
            if row >= ev.len() || d.strand_owner(&t, row, pos) != Some(CompRef::Closed(comp)) {
                return Err(mv_err("the strand does not belong to the component"));
            }
            let mut events: Vec<Event> = Vec::new();
            let mut inserted = false;
            for (r, e) in ev.iter().enumerate() {
                if r == row {
                    events.push(Event::Base { pos, comp });
                    inserted = true;
                }
                if !matches!(*e, Event::Base { comp: c, .. } if c == comp) {
                    events.push(*e);
                }
            }
            if !inserted {
                events.push(Event::Base { pos, comp });
            }
            out.events = events;
            // Other components' numbering must not move.
            out = out.with_explicit_bases_keeping(d)?;
        }
        Move::Flip { comp } => {
            if comp >= t.n_closed() {
                return Err(mv_err(format!("no component {comp}")));
            }
            if !out.flips.remove(&comp) {
                out.flips.insert(comp);
            }
        }
        Move::HandleSlide {
            x,
            onto,
            outside,
            site,
        } => out = handle_slide(d, x, onto, outside, site)?,
        Move::CancelPair { dot, comp } => out = cancel_pair(d, dot, comp)?,
        Move::IntroducePair { row, pos, id } => {
            if row > ev.len() || pos > t.widths[row] {
                return Err(mv_err("site outside the diagram"));
            }
            if fresh_dot_id(d) > id && ev.iter().any(|e| matches!(*e, Event::Dot { id: i, .. } if i == id)) {
                return Err(mv_err(format!("dot id {id} in use")));
            }
            let d0 = d.with_explicit_bases()?;
            out = d0.clone();
            let rows = [Event::Cup(pos), Event::Dot { lo: pos, len: 1, id }, Event::Cap(pos)];
            for e in rows.iter().rev() {
                out.events.insert(row_in(&d0, d, row), *e);
            }
        }
        Move::RemoveDot { dot } => {
            let r = ev
                .iter()
                .position(|e| matches!(*e, Event::Dot { id, .. } if id == dot))
                .ok_or_else(|| mv_err(format!("no dot {dot}")))?;
            let d0 = d.with_explicit_bases()?;
            let r0 = row_in(&d0, d, r);
            let Event::Dot { lo, len, .. } = d0.events[r0] else { unreachable!() };
            out = d0.clone();
            out.events.splice(r0..r0 + 1, clasp_rows(lo, len));
        }
        Move::AddDot { row, id } => {
            let Event::Cup(lo) = get(row)? else {
                return Err(mv_err("pattern must start with a cup"));
            };
            let mut len = 0;
            while matches!(ev.get(row + 1 + len), Some(Event::Cross { pos, positive: false }) if *pos == lo + 1 + len)
            {
                len += 1;
            }
            let expect = clasp_rows(lo, len);
            if ev.len() < row + expect.len() || ev[row..row + expect.len()] != expect[..] {
                return Err(mv_err("rows are not an unknotted 0-framed loop around adjacent strands"));
            }
            if ev.iter().any(|e| matches!(*e, Event::Dot { id: i, .. } if i == id)) {
                return Err(mv_err(format!("dot id {id} in use")));
            }
            // The loop component must carry no base point.
            let cref = t.arc_owner[&row];
            let CompRef::Closed(c) = cref else { unreachable!() };
            if ev.iter().any(|e| matches!(*e, Event::Base { comp, .. } if comp == c)) {
                return Err(mv_err("the loop carries a base point"));
            }
            let d0 = d.with_explicit_bases_except(c)?;
            let r0 = row_in(&d0, d, row);
            out = d0;
            out.events.splice(r0..r0 + expect.len(), [Event::Dot { lo, len, id }]);
            out.flips.remove(&c);
            out = renumber_after_removal(out, c);
        }
        Move::BlowUp { row, pos, positive } => {
            if row > ev.len() || pos > t.widths[row] {
                return Err(mv_err("site outside the diagram"));
            }
            let d0 = d.with_explicit_bases()?;
            let r0 = row_in(&d0, d, row);
            out = d0;
            out.events.splice(r0..r0, curl_rows(pos, positive));
        }
        Move::BlowDown { comp } => {
            if comp >= t.n_closed() {
                return Err(mv_err(format!("no component {comp}")));
            }
            // One self-crossing, no other crossings and no piercings: a split ±1 unknot.
            let me = CompRef::Closed(comp);
            let mut own = 0;
            for (_, a, b, _) in crossings(d, &t) {
                match (a == me, b == me) {
                    (true, true) => own += 1,
                    (false, false) => {}
                    _ => return Err(mv_err("component crosses another component")),
                }
            }
            let pierced = ev.iter().enumerate().any(|(r, e)| {
                matches!(*e, Event::Dot { lo, len, .. } if (lo..lo + len).any(|k| t.vert[r][&k].0 == me))
            });
            if own != 1 || pierced {
                return Err(mv_err("component is not an isolated ±1 curl"));
            }
            let d0 = d.with_explicit_bases()?;
            out = delete_component(&d0, &d0.trace()?, comp)?;
        }
    }
    out.trace()?;
    Ok(out)
}

/// Row of `d` expressed in `d0`, which is `d` with extra base events inserted.
fn row_in(d0: &Diagram, d: &Diagram, row: usize) -> usize {
    let mut k = 0;
    let mut r0 = 0;
    while k < row {
        if d0.events[r0] == d.events[k] {
            k += 1;
        }
        r0 += 1;
    }
    // Skip bases inserted right at `row`.
    while r0 < d0.events.len() && (k >= d.events.len() || d0.events[r0] != d.events[k]) {
        r0 += 1;
    }
    r0
}

/// Shift component numbers above `removed` down by one.
fn renumber_after_removal(mut d: Diagram, removed: usize) -> Diagram {
    let dec = |c: usize| if c > removed { c - 1 } else { c };
    for e in d.events.iter_mut() {
        if let Event::Base { comp, .. } = e {
            *comp = dec(*comp);
        }
    }
    d.flips = d.flips.iter().filter(|&&c| c != removed).map(|&c| dec(c)).collect();
    d.colors = d
        .colors
        .iter()
        .filter(|(c, _)| **c != removed)
        .map(|(c, s)| (dec(*c), s.clone()))
        .collect();
    d
}

impl Diagram {
    fn with_explicit_bases_except(&self, skip: usize) -> Result<Diagram, KirbyError> {
        let t = self.trace()?;
        let mut d = self.clone();
        let mut inserts: Vec<(usize, Event)> = Vec::new();
        for (num, c) in t.closed.iter().enumerate() {
            let has = self
                .events
                .iter()
                .any(|e| matches!(*e, Event::Base { comp, .. } if comp == num));
            if has || num == skip {
                continue;
            }
            let cup = c.first_cup.unwrap();
            let Event::Cup(p) = self.events[cup] else { unreachable!() };
            inserts.push((cup + 1, Event::Base { pos: p, comp: num }));
        }
        inserts.sort_by(|a, b| b.0.cmp(&a.0));
        for (row, e) in inserts {
            d.events.insert(row, e);
        }
        Ok(d)
    }

    /// After editing bases of one component, pin every other component's
    /// number as it was in `orig`.
    fn with_explicit_bases_keeping(&self, orig: &Diagram) -> Result<Diagram, KirbyError> {
        let t0 = orig.trace()?;
        let mut d = self.clone();
        let mut inserts: Vec<(usize, Event)> = Vec::new();
        for (num, c) in t0.closed.iter().enumerate() {
            let has = d
                .events
                .iter()
                .any(|e| matches!(*e, Event::Base { comp, .. } if comp == num));
            if has {
                continue;
            }
            let cup = c.first_cup.unwrap();
            let Event::Cup(p) = orig.events[cup] else { unreachable!() };
            let r = row_in(&d, orig, cup + 1);
            inserts.push((r, Event::Base { pos: p, comp: num }));
        }
        inserts.sort_by(|a, b| b.0.cmp(&a.0));
        for (row, e) in inserts {
            d.events.insert(row, e);
        }
        Ok(d)
    }
}

/// Erase component `comp` (all its events) from a closed diagram.
fn delete_component(d: &Diagram, t: &Tracing, comp: usize) -> Result<Diagram, KirbyError> {
    let me = CompRef::Closed(comp);
    let mut events = Vec::new();
    let shift = |b: usize, i: usize| -> usize {
        (0..i).filter(|&k| d.strand_owner(t, b, k) == Some(me)).count()
    };
    for (r, e) in d.events.iter().enumerate() {
        let new = match *e {
            Event::Cup(_) | Event::Cap(_) if t.arc_owner.get(&r) == Some(&me) => None,
            Event::Cross { pos, positive } => {
                let a = t.vert[r][&(pos + 1)].0;
                let b = t.vert[r][&pos].0;
                match (a == me, b == me) {
                    (true, true) => None,
                    (false, false) => Some(cross(pos - shift(r, pos), positive)),
                    _ => return Err(mv_err("component crosses another component")),
                }
            }
            Event::Base { comp: c, .. } if c == comp => None,
            Event::Dot { lo, len, id } => {
                let inside = (lo..lo + len).filter(|&k| t.vert[r][&k].0 == me).count();
                Some(Event::Dot {
                    lo: lo - shift(r, lo),
                    len: len - inside,
                    id,
                })
            }
            other => {
                let (a, _, _) = other.span();
                Some(other.shifted(-(shift(r, a) as isize)))
            }
        };
        events.extend(new);
    }
    let mut out = d.clone();
    out.events = events;
    out.flips.remove(&comp);
    Ok(renumber_after_removal(out, comp))
}

fn cancel_pair(d: &Diagram, dot: usize, comp: usize) -> Result<Diagram, KirbyError> {
    let d = d.with_explicit_bases()?;
    let t = d.trace()?;
    if comp >= t.n_closed() {
        return Err(mv_err(format!("no component {comp}")));
    }
    let me = CompRef::Closed(comp);
    let r = d
        .events
        .iter()
        .position(|e| matches!(*e, Event::Dot { id, .. } if id == dot))
        .ok_or_else(|| mv_err(format!("no dot {dot}")))?;
    let Event::Dot { lo, len, .. } = d.events[r] else { unreachable!() };
    if len != 1 || t.vert[r][&lo].0 != me {
        return Err(mv_err(format!(
            "dot {dot} must be pierced exactly by component {comp} and nothing else"
        )));
    }
    for (row, e) in d.events.iter().enumerate() {
        if let Event::Dot { lo, len, id } = *e {
            if id != dot && (lo..lo + len).any(|k| t.vert[row][&k].0 == me) {
                return Err(mv_err(format!("component {comp} also passes through dot {id}")));
            }
        }
    }
    let mut out = delete_component(&d, &t, comp)?;
    out.events.retain(|e| !matches!(*e, Event::Dot { id, .. } if id == dot));
    Ok(out)
}

/// Slide `x` over `onto`: double `onto` by a blackboard push-off, then join
/// `x` to the push-off by a band at an adjacency.
fn handle_slide(d: &Diagram, x: usize, onto: usize, outside: bool, site: usize) -> Result<Diagram, KirbyError> {
    if x == onto {
        return Err(mv_err("a component cannot slide over itself"));
    }
    let d = d.with_explicit_bases()?;
    let t = d.trace()?;
    if x >= t.n_closed() || onto >= t.n_closed() {
        return Err(mv_err("no such component"));
    }
    let j = CompRef::Closed(onto);
    let rows = d.events.len();
    let is_j = |b: usize, i: usize| d.strand_owner(&t, b, i) == Some(j);
    // Push-off side per node of `onto`: true when the copy sits to the left.
    let mut left_side: HashMap<(usize, usize), bool> = HashMap::new();
    {
        let c = &t.closed[onto];
        let cup = c.first_cup.unwrap();
        let Event::Cup(p) = d.events[cup] else { unreachable!() };
        // On the left leg of the first cup, "outside" is to the left.
        let mut side = outside;
        // Walk the component from that node going down the left leg.
        let mut node = (cup + 1, p);
        let start = node;
        let mut go_down = true;
        loop {
            left_side.insert(node, side);
            let step = next_step(&d, node, go_down);
            let Some((n2, st)) = step else { break };
            match st {
                Step::Vert { down, .. } => go_down = down,
                Step::Cup { .. } => {
                    go_down = true;
                    side = !side;
                }
                Step::Cap { .. } => {
                    go_down = false;
                    side = !side;
                }
            }
            node = n2;
            if node == start {
                break;
            }
        }
    }
    let newpos = |b: usize, i: usize| i + (0..i).filter(|&k| is_j(b, k)).count();
    let mut events = Vec::new();
    for r in 0..rows {
        match d.events[r] {
            Event::Cup(p) => {
                let q = newpos(r, p);
                if t.arc_owner.get(&r) == Some(&j) {
                    events.push(Event::Cup(q));
                    events.push(Event::Cup(q + 1));
                } else {
                    events.push(Event::Cup(q));
                }
            }
            Event::Cap(p) => {
                let q = newpos(r, p);
                if t.arc_owner.get(&r) == Some(&j) {
                    events.push(Event::Cap(q + 1));
                    events.push(Event::Cap(q));
                } else {
                    events.push(Event::Cap(q));
                }
            }
            Event::Cross { pos, positive } => {
                let q = newpos(r, pos);
                let a = 1 + usize::from(is_j(r, pos));
                let c = 1 + usize::from(is_j(r, pos + 1));
                // Each right strand passes left across the whole left block.
                for k in 0..c {
                    for m in (0..a).rev() {
                        events.push(cross(q + k + m, positive));
                    }
                }
            }
            Event::Dot { lo, len, id } => {
                let nlo = newpos(r, lo);
                let nlen = (lo..lo + len).map(|k| 1 + usize::from(is_j(r, k))).sum();
                events.push(Event::Dot { lo: nlo, len: nlen, id });
            }
            Event::Base { pos, comp } => {
                let q = newpos(r, pos);
                let shift = if comp == onto && left_side[&(r, pos)] { 1 } else { 0 };
                events.push(Event::Base { pos: q + shift, comp });
            }
        }
    }
    let mut doubled = d.clone();
    doubled.events = events;
    let n_old = t.n_closed();
    let td = doubled.trace()?;
    // The push-off took the first free number, `n_old`.
    let copy = CompRef::Closed(n_old);
    if td.n_closed() != n_old + 1 {
        return Err(mv_err("doubling did not produce one new component"));
    }
    let xr = CompRef::Closed(x);
    let mut sites = Vec::new();
    for b in 1..doubled.events.len() {
        for q in 0..td.widths[b].saturating_sub(1) {
            let (o1, o2) = (doubled.strand_owner(&td, b, q), doubled.strand_owner(&td, b, q + 1));
            if (o1 == Some(xr) && o2 == Some(copy)) || (o1 == Some(copy) && o2 == Some(xr)) {
                sites.push((b, q));
            }
        }
    }
    let &(b, q) = sites
        .get(site)
        .ok_or_else(|| mv_err(format!("component {x} meets the push-off at {} sites", sites.len())))?;
    let mut out = doubled;
    out.events.insert(b, Event::Cup(q));
    out.events.insert(b, Event::Cap(q));
    // Keep the orientation `x` had before the slide.
    let to = out.trace()?;
    if base_direction(&d, &t, x) != base_direction(&out, &to, x) && !out.flips.remove(&x) {
        out.flips.insert(x);
    }
    Ok(out)
}

fn next_step(d: &Diagram, node: (usize, usize), go_down: bool) -> Option<((usize, usize), Step)> {
    // Local copy of the tracing step rule.
    let (b, i) = node;
    let rows = d.events.len();
    if go_down {
        if b == rows {
            return None;
        }
        Some(match d.events[b] {
            Event::Cap(p) if i == p || i == p + 1 => {
                let other = if i == p { p + 1 } else { p };
                ((b, other), Step::Cap { row: b, pos: p, leftward: i == p + 1 })
            }
            e => {
                let j = bottom_of(&e, i);
                ((b + 1, j), Step::Vert { row: b, top: i, bot: j, down: true })
            }
        })
    } else {
        if b == 0 {
            return None;
        }
        let r = b - 1;
        Some(match d.events[r] {
            Event::Cup(p) if i == p || i == p + 1 => {
                let other = if i == p { p + 1 } else { p };
                ((b, other), Step::Cup { row: r, pos: p, leftward: i == p + 1 })
            }
            e => {
                let w = d.widths().ok()?[r];
                let top = (0..w).find(|&k| !matches!(e, Event::Cap(p) if k == p || k == p + 1) && bottom_of(&e, k) == i)?;
                ((r, top), Step::Vert { row: r, top, bot: i, down: false })
            }
        })
    }
}

/// A random isotopy or base/orientation move for `d`, not yet checked for
/// applicability. `None` when the drawn kind has no valid location.
pub fn random_isotopy_move<R: Rng + ?Sized>(d: &Diagram, t: &Tracing, rng: &mut R) -> Option<Move> {
    let rows = d.events.len();
    let n = t.n_closed();
    if rows == 0 {
        return None;
    }
    Some(match rng.gen_range(0..9) {
        0 => {
            let row = rng.gen_range(0..=rows);
            let w = t.widths[row];
            if w < 2 {
                return None;
            }
            Move::InsertR2 { row, pos: rng.gen_range(0..w - 1), positive_first: rng.gen() }
        }
        1 => Move::RemoveR2 { row: rng.gen_range(0..rows) },
        2 => Move::R3 { row: rng.gen_range(0..rows) },
        3 => {
            let row = rng.gen_range(0..=rows);
            let w = t.widths[row];
            if w == 0 {
                return None;
            }
            Move::InsertSnake { row, pos: rng.gen_range(0..w), left: rng.gen() }
        }
        4 => Move::RemoveSnake { row: rng.gen_range(0..rows) },
        5 => Move::Swing { row: rng.gen_range(0..rows) },
        6 => Move::Commute { row: rng.gen_range(0..rows) },
        7 if n > 0 => Move::Flip { comp: rng.gen_range(0..n) },
        _ if n > 0 => {
            let row = rng.gen_range(0..rows);
            let w = t.widths[row];
            if w == 0 {
                return None;
            }
            Move::MoveBase { comp: rng.gen_range(0..n), row, pos: rng.gen_range(0..w) }
        }
        _ => return None,
    })
}

/// Builders for standard diagrams.
pub mod builders {
    use super::*;

    /// Unknot with blackboard framing `f` (|f| kinks on the left leg).
    pub fn unknot(f: i64) -> Diagram {
        let mut ev = vec![Event::Cup(0), Event::Base { pos: 0, comp: 0 }];
        for _ in 0..f.unsigned_abs() {
            ev.extend([Event::Cup(1), cross(0, f > 0), Event::Cap(1)]);
        }
        ev.push(Event::Cap(0));
        Diagram::new(ev)
    }

    /// `L(n,1)` as the `n`-framed unknot.
    pub fn lens(n: i64) -> Diagram {
        unknot(n)
    }

    /// Hopf link with linking number +1 and zero framings.
    pub fn hopf() -> Diagram {
        Diagram::new(vec![
            Event::Cup(0),
            Event::Cup(1),
            cross(0, true),
            cross(2, true),
            Event::Cap(1),
            Event::Cap(0),
        ])
    }

    /// A single empty dotted circle.
    pub fn s1xd3() -> Diagram {
        Diagram::new(vec![Event::Dot { lo: 0, len: 0, id: 0 }])
    }

    /// A 0-framed unknot passing once through a dotted circle.
    pub fn cancel_pair() -> Diagram {
        Diagram::new(vec![Event::Cup(0), Event::Dot { lo: 0, len: 1, id: 0 }, Event::Cap(0)])
    }

    pub fn by_name(name: &str) -> Option<Diagram> {
        let mut it = name.split_whitespace();
        let head = it.next()?;
        let arg = it.next().map(|s| s.parse::<i64>());
        match (head, arg) {
            ("unknot", Some(Ok(f))) => Some(unknot(f)),
            ("lens", Some(Ok(n))) => Some(lens(n)),
            ("hopf", None) => Some(hopf()),
            ("s1xd3", None) => Some(s1xd3()),
            ("cancel-pair", None) => Some(cancel_pair()),
            _ => None,
        }
    }
}
