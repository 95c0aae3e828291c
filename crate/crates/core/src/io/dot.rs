//! Graphviz export of the graph `Γ_n` of a trace.

use std::fmt::Write;

use crate::cone::ConeError;
use crate::induction::Trace;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// One node per component labeled with its diameter, one edge per letter.
/// Edges of the same generalized edge share a color and a `gN` tag.
pub fn export_dot(trace: &Trace, n: usize) -> Result<String, ConeError> {
    if n > trace.len() {
        return Err(ConeError::OutOfRange { index: n, len: trace.len() });
    }
    let s = trace.system(n);
    let f = s.forest();
    let g = s.graph();
    let mut ge_of = vec![0usize; s.letter_count()];
    for (i, ge) in trace.ges[n].iter().enumerate() {
        for l in &ge.path {
            ge_of[l.id] = i;
        }
    }
    let mut out = String::new();
    writeln!(out, "digraph gamma_{n} {{").unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    for c in 0..g.vertex_count {
        writeln!(out, "  v{c} [label=\"{c}\\ndiam {}\"];", f.component_diameter(c)).unwrap();
    }
    for e in &g.edges {
        let k = ge_of[e.letter];
        writeln!(
            out,
            "  v{} -> v{} [label=\"{} (g{k})\", color=\"{}\"];",
            e.from,
            e.to,
            s.letters()[e.letter].name,
            PALETTE[k % PALETTE.len()]
        )
        .unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::induction::{unfold, UnfoldOptions};
    use crate::io::builders;

    fn count(text: &str, pat: &str) -> usize {
        text.lines().filter(|l| l.contains(pat)).count()
    }

    #[test]
    fn rose_is_loops_on_one_node() {
        let t = unfold(&builders::golden(), &UnfoldOptions::new(0)).unwrap();
        let dot = export_dot(&t, 0).unwrap();
        assert_eq!(count(&dot, "[label=\"0\\ndiam"), 1);
        assert_eq!(count(&dot, "v0 -> v0"), 2);
    }

    #[test]
    fn after_first_split() {
        let t = unfold(&builders::golden(), &UnfoldOptions::new(1)).unwrap();
        let dot = export_dot(&t, 1).unwrap();
        assert_eq!(count(&dot, "diam "), 2);
        assert_eq!(count(&dot, " -> "), 3);
        assert!(export_dot(&t, 2).is_err());
    }
}
