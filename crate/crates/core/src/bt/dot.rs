use std::fmt::Write;

use super::{BtNode, DecoratorKind, NodeKind};
use crate::mission::infix;

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

fn decorator_label(kind: &DecoratorKind) -> String {
    match kind {
        DecoratorKind::Negation => "◇ not".into(),
        DecoratorKind::PreconditionLatch => "◇ latch".into(),
        DecoratorKind::FinallyReset { theta } => format!("◇ finally θ={theta}"),
        DecoratorKind::MissionRoot { t_task_max } => format!("◇ mission T={t_task_max}"),
        DecoratorKind::TaskBoundary { task } => format!("◇ task {task}"),
    }
}

/// Graphviz rendering of a tree. Node names are `n<id>`.
pub fn export_dot(root: &BtNode) -> String {
    let mut out = String::from("digraph bt {\n  node [fontname=\"Helvetica\"];\n");
    for node in root.preorder() {
        let (label, shape) = match &node.kind {
            NodeKind::Sequence { .. } => ("→".to_string(), "box"),
            NodeKind::Selector { .. } => ("?".to_string(), "box"),
            NodeKind::Parallel { .. } => ("⇉".to_string(), "box"),
            NodeKind::Decorator { kind, .. } => (decorator_label(kind), "diamond"),
            NodeKind::Action { binding, .. } => (format!("□ {binding}"), "box"),
            NodeKind::Condition { formula, .. } => (format!("◯ {}", infix(formula)), "ellipse"),
        };
        let _ = writeln!(
            out,
            "  n{} [label=\"{}\", shape={}];",
            node.id,
            escape(&label),
            shape
        );
        for child in node.children() {
            let _ = writeln!(out, "  n{} -> n{};", node.id, child.id);
        }
    }
    out.push_str("}\n");
    out
}
