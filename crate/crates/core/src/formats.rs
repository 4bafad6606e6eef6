//! Text formats: DIMACS min-cost flow (`p min`), PACE `.gr` and `.td`, and
//! DIMACS-style flow solutions. All vertex and bag ids are 1-indexed on disk.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, FlowInstance, TreeDecomposition};

fn tokens(line: &str) -> std::str::SplitWhitespace<'_> {
    line.split_whitespace()
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} `{tok}`")))
}

fn vertex(tok: Option<&str>, line: usize, n: usize) -> Result<usize> {
    let v: usize = num(tok, line, "vertex id")?;
    if v == 0 || v > n {
        return Err(Error::parse(line, format!("vertex {v} outside 1..={n}")));
    }
    Ok(v - 1)
}

/// Parses a DIMACS min-cost flow file. `n` lines give supplies, which become
/// demands of opposite sign. Arcs must have lower bound 0.
pub fn parse_dimacs_min(text: &str) -> Result<FlowInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut supply = Vec::new();
    let mut edges = Vec::new();
    let mut cap = Vec::new();
    let mut cost = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut tok = tokens(raw);
        let Some(kind) = tok.next() else { continue };
        match kind {
            "c" => {}
            "p" => {
                if header.is_some() {
                    return Err(Error::parse(line, "duplicate problem line"));
                }
                if tok.next() != Some("min") {
                    return Err(Error::parse(line, "expected `p min <n> <m>`"));
                }
                let n: usize = num(tok.next(), line, "vertex count")?;
                let m: usize = num(tok.next(), line, "arc count")?;
                supply = vec![0i64; n];
                header = Some((n, m));
            }
            "n" | "a" => {
                let (n, _) = header.ok_or_else(|| Error::parse(line, "data before problem line"))?;
                if kind == "n" {
                    let v = vertex(tok.next(), line, n)?;
                    supply[v] += num::<i64>(tok.next(), line, "supply")?;
                } else {
                    let t = vertex(tok.next(), line, n)?;
                    let h = vertex(tok.next(), line, n)?;
                    let low: i64 = num(tok.next(), line, "lower bound")?;
                    let u: i64 = num(tok.next(), line, "capacity")?;
                    let c: i64 = num(tok.next(), line, "cost")?;
                    if low != 0 {
                        return Err(Error::parse(line, "nonzero lower bounds are not supported"));
                    }
                    if t == h {
                        return Err(Error::parse(line, "self loop"));
                    }
                    if u <= 0 {
                        return Err(Error::parse(line, "capacity must be positive"));
                    }
                    edges.push((t, h));
                    cap.push(u);
                    cost.push(c);
                }
            }
            other => return Err(Error::parse(line, format!("unknown line type `{other}`"))),
        }
    }
    let (n, m) = header.ok_or_else(|| Error::parse(0, "missing problem line"))?;
    if edges.len() != m {
        return Err(Error::parse(0, format!("header declares {m} arcs, found {}", edges.len())));
    }
    let demand = supply.iter().map(|s| -s).collect();
    FlowInstance::new(DirectedGraph::new(n, edges)?, demand, cap, cost)
}

pub fn write_dimacs_min(inst: &FlowInstance) -> String {
    let g = &inst.graph;
    let mut out = format!("p min {} {}\n", g.n(), g.m());
    for (v, &d) in inst.demand.iter().enumerate() {
        if d != 0 {
            let _ = writeln!(out, "n {} {}", v + 1, -d);
        }
    }
    for (e, &(t, h)) in g.edges().iter().enumerate() {
        let _ = writeln!(
            out,
            "a {} {} 0 {} {}",
            t + 1,
            h + 1,
            inst.capacity[e],
            inst.cost[e]
        );
    }
    out
}

/// Parses a PACE `.gr` file into `(n, undirected edge list)`.
pub fn parse_gr(text: &str) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut tok = tokens(raw);
        let Some(first) = tok.next() else { continue };
        match first {
            "c" => {}
            "p" => {
                if header.is_some() {
                    return Err(Error::parse(line, "duplicate problem line"));
                }
                if tok.next() != Some("tw") {
                    return Err(Error::parse(line, "expected `p tw <n> <m>`"));
                }
                header = Some((
                    num(tok.next(), line, "vertex count")?,
                    num(tok.next(), line, "edge count")?,
                ));
            }
            _ => {
                let (n, _) = header.ok_or_else(|| Error::parse(line, "edge before problem line"))?;
                let mut all = std::iter::once(first).chain(tok);
                let u = vertex(all.next(), line, n)?;
                let v = vertex(all.next(), line, n)?;
                if all.next().is_some() {
                    return Err(Error::parse(line, "trailing tokens"));
                }
                edges.push((u, v));
            }
        }
    }
    let (n, m) = header.ok_or_else(|| Error::parse(0, "missing problem line"))?;
    if edges.len() != m {
        return Err(Error::parse(0, format!("header declares {m} edges, found {}", edges.len())));
    }
    Ok((n, edges))
}

pub fn write_gr(n: usize, edges: &[(usize, usize)]) -> String {
    let mut out = format!("p tw {} {}\n", n, edges.len());
    for &(u, v) in edges {
        let _ = writeln!(out, "{} {}", u + 1, v + 1);
    }
    out
}

/// Parses a PACE `.td` file. Returns the decomposition and the declared
/// vertex count.
pub fn parse_td(text: &str) -> Result<(TreeDecomposition, usize)> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut bags: Vec<Option<Vec<usize>>> = Vec::new();
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut tok = tokens(raw);
        let Some(first) = tok.next() else { continue };
        match first {
            "c" => {}
            "s" => {
                if header.is_some() {
                    return Err(Error::parse(line, "duplicate solution line"));
                }
                if tok.next() != Some("td") {
                    return Err(Error::parse(line, "expected `s td <bags> <width+1> <n>`"));
                }
                let nb: usize = num(tok.next(), line, "bag count")?;
                let w: usize = num(tok.next(), line, "max bag size")?;
                let n: usize = num(tok.next(), line, "vertex count")?;
                bags = vec![None; nb];
                header = Some((nb, w, n));
            }
            "b" => {
                let (nb, w, n) =
                    header.ok_or_else(|| Error::parse(line, "bag before solution line"))?;
                let id: usize = num(tok.next(), line, "bag id")?;
                if id == 0 || id > nb {
                    return Err(Error::parse(line, format!("bag id {id} outside 1..={nb}")));
                }
                if bags[id - 1].is_some() {
                    return Err(Error::parse(line, format!("bag {id} defined twice")));
                }
                let mut bag = Vec::new();
                for t in tok {
                    bag.push(vertex(Some(t), line, n)?);
                }
                if bag.len() > w {
                    return Err(Error::parse(line, format!("bag {id} exceeds declared size {w}")));
                }
                bags[id - 1] = Some(bag);
            }
            _ => {
                let (nb, _, _) =
                    header.ok_or_else(|| Error::parse(line, "tree edge before solution line"))?;
                let mut all = std::iter::once(first).chain(tok);
                let a: usize = num(all.next(), line, "bag id")?;
                let b: usize = num(all.next(), line, "bag id")?;
                if a == 0 || b == 0 || a > nb || b > nb {
                    return Err(Error::parse(line, "tree edge references unknown bag"));
                }
                edges.push((a - 1, b - 1));
            }
        }
    }
    let (_, _, n) = header.ok_or_else(|| Error::parse(0, "missing solution line"))?;
    let bags = bags
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| Error::parse(0, format!("bag {} missing", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    Ok((TreeDecomposition::new(bags, edges), n))
}

pub fn write_td(td: &TreeDecomposition, n: usize) -> String {
    let mut out = format!("s td {} {} {}\n", td.bags.len(), td.width() + 1, n);
    for (i, bag) in td.bags.iter().enumerate() {
        let _ = write!(out, "b {}", i + 1);
        for v in bag {
            let _ = write!(out, " {}", v + 1);
        }
        out.push('\n');
    }
    for &(a, b) in &td.edges {
        let _ = writeln!(out, "{} {}", a + 1, b + 1);
    }
    out
}

/// Solution summary printed next to the flow lines.
#[derive(Debug, Clone, Default)]
pub struct SolveSummary {
    pub cost: i64,
    pub iterations: usize,
    pub restarts: usize,
}

/// `s <cost>`, one `f <tail> <head> <flow>` line per arc with nonzero flow,
/// and a trailing summary comment.
pub fn write_flow(inst: &FlowInstance, flow: &[i64], summary: &SolveSummary) -> String {
    let mut out = format!("s {}\n", summary.cost);
    for (e, &(t, h)) in inst.graph.edges().iter().enumerate() {
        if flow[e] != 0 {
            let _ = writeln!(out, "f {} {} {}", t + 1, h + 1, flow[e]);
        }
    }
    let _ = writeln!(
        out,
        "c cost {} iterations {} restarts {}",
        summary.cost, summary.iterations, summary.restarts
    );
    out
}
