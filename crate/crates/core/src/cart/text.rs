//! Lossless line-oriented text serialization for fitted trees.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! `tree_from_text(tree_to_text(t)) == t` exactly. The format is strict:
//! every line has a fixed shape, indices must be consistent, and children
//! must follow their parents (breadth-first storage).

use std::fmt::Write as _;

use super::{CartError, Node, SplitRule, Surrogate, Tree};
use crate::dataset::{VariableInfo, VariableKind};

fn escape(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            ' ' => out.push_str("\\s"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(ch),
        }
    }
    out
}

fn unescape(token: &str) -> Result<String, String> {
    let mut out = String::with_capacity(token.len());
    let mut chars = token.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('s') => out.push(' '),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".to_string()),
        }
    }
    Ok(out)
}

fn cats_csv(cats: &[u16]) -> String {
    cats.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn rule_tokens(rule: &SplitRule) -> (String, String, String) {
    match rule {
        SplitRule::Numeric { var, threshold } => {
            ("num".to_string(), var.to_string(), format!("{threshold}"))
        }
        SplitRule::Categorical { var, left_cats } => {
            ("cat".to_string(), var.to_string(), cats_csv(left_cats))
        }
    }
}

/// Serializes a tree to the text format (see module docs).
pub fn tree_to_text(tree: &Tree) -> String {
    let mut s = String::new();
    s.push_str("cart-tree v1\n");
    let _ = writeln!(s, "classes {}", tree.n_classes);
    let priors: Vec<String> = tree.priors.iter().map(|p| format!("{p}")).collect();
    let _ = writeln!(s, "priors {}", priors.join(" "));
    let counts: Vec<String> = tree.root_counts.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(s, "root_counts {}", counts.join(" "));
    let _ = writeln!(s, "variables {}", tree.variables.len());
    for (i, v) in tree.variables.iter().enumerate() {
        match &v.kind {
            VariableKind::Numeric => {
                let _ = writeln!(s, "var {i} num {}", escape(&v.name));
            }
            VariableKind::Categorical(cats) => {
                let names: Vec<String> = cats.iter().map(|c| escape(c)).collect();
                let _ = writeln!(
                    s,
                    "var {i} cat {} {} {}",
                    escape(&v.name),
                    cats.len(),
                    names.join(" ")
                );
            }
        }
    }
    let _ = writeln!(s, "nodes {}", tree.nodes.len());
    for (i, node) in tree.nodes.iter().enumerate() {
        let majority = match node.majority_left {
            true => "L",
            false => "R",
        };
        let counts: Vec<String> = node.class_counts.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            s,
            "node {i} {} {} {majority} counts {}",
            node.depth,
            node.predicted,
            counts.join(" ")
        );
        if let (Some(rule), Some((l, r))) = (&node.primary, node.children) {
            let (kind, var, payload) = rule_tokens(rule);
            let _ = writeln!(s, "split {i} {kind} {var} {payload} {} {l} {r}", node.decrease);
            for surr in &node.surrogates {
                let (kind, var, payload) = rule_tokens(&surr.rule);
                let dir = if surr.reversed { "rev" } else { "fwd" };
                let _ = writeln!(
                    s,
                    "surr {i} {kind} {var} {payload} {} {dir}",
                    surr.agreement
                );
            }
        }
    }
    s.push_str("end\n");
    s
}

struct Parser<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        Parser {
            lines: text.lines(),
            line_no: 0,
        }
    }

    fn next_line(&mut self) -> Result<&'a str, CartError> {
        loop {
            match self.lines.next() {
                None => return Err(CartError::ParseTree("unexpected end of input".to_string())),
                Some(line) => {
                    self.line_no += 1;
                    if !line.trim().is_empty() {
                        return Ok(line);
                    }
                }
            }
        }
    }

    fn fail(&self, message: impl std::fmt::Display) -> CartError {
        CartError::ParseTree(format!("line {}: {message}", self.line_no))
    }

    fn expect_keyword<'b>(
        &self,
        tokens: &'b [&'a str],
        index: usize,
        keyword: &str,
    ) -> Result<(), CartError> {
        match tokens.get(index) {
            Some(&t) if t == keyword => Ok(()),
            Some(&t) => Err(self.fail(format_args!("expected `{keyword}`, found `{t}`"))),
            None => Err(self.fail(format_args!("expected `{keyword}`, found end of line"))),
        }
    }

    fn parse_at<T: std::str::FromStr>(
        &self,
        tokens: &[&str],
        index: usize,
        what: &str,
    ) -> Result<T, CartError> {
        let token = tokens
            .get(index)
            .ok_or_else(|| self.fail(format_args!("missing {what}")))?;
        token
            .parse::<T>()
            .map_err(|_| self.fail(format_args!("bad {what} `{token}`")))
    }
}

fn parse_cats(parser: &Parser, token: &str, n_cats: usize) -> Result<Vec<u16>, CartError> {
    let mut cats = Vec::new();
    for part in token.split(',') {
        let c: u16 = part
            .parse()
            .map_err(|_| parser.fail(format_args!("bad category index `{part}`")))?;
        if (c as usize) >= n_cats {
            return Err(parser.fail(format_args!(
                "category index {c} out of range (variable has {n_cats})"
            )));
        }
        cats.push(c);
    }
    if cats.is_empty() {
        return Err(parser.fail("empty category subset"));
    }
    if cats.windows(2).any(|w| w[0] >= w[1]) {
        return Err(parser.fail("category subset must be strictly increasing"));
    }
    Ok(cats)
}

fn parse_rule(
    parser: &Parser,
    tokens: &[&str],
    variables: &[VariableInfo],
) -> Result<SplitRule, CartError> {
    let var: usize = parser.parse_at(tokens, 3, "variable index")?;
    let info = variables
        .get(var)
        .ok_or_else(|| parser.fail(format_args!("variable index {var} out of range")))?;
    match (tokens[2], &info.kind) {
        ("num", VariableKind::Numeric) => {
            let threshold: f64 = parser.parse_at(tokens, 4, "threshold")?;
            if !threshold.is_finite() {
                return Err(parser.fail("threshold must be finite"));
            }
            Ok(SplitRule::Numeric { var, threshold })
        }
        ("cat", VariableKind::Categorical(cats)) => {
            let left_cats = parse_cats(parser, tokens[4], cats.len())?;
            if left_cats.len() >= cats.len() {
                return Err(parser.fail("category subset must be proper"));
            }
            Ok(SplitRule::Categorical { var, left_cats })
        }
        (kind @ ("num" | "cat"), _) => Err(parser.fail(format_args!(
            "rule kind `{kind}` does not match the kind of variable {var}"
        ))),
        (other, _) => Err(parser.fail(format_args!("unknown rule kind `{other}`"))),
    }
}

/// Parses the text format produced by [`tree_to_text`], validating structural
/// invariants (index ranges, breadth-first child order, per-class count
/// lengths).
pub fn tree_from_text(text: &str) -> Result<Tree, CartError> {
    let mut parser = Parser::new(text);

    let header = parser.next_line()?;
    if header.trim() != "cart-tree v1" {
        return Err(parser.fail("expected header `cart-tree v1`"));
    }

    let line = parser.next_line()?;
    let tokens: Vec<&str> = line.split_whitespace().collect();
    parser.expect_keyword(&tokens, 0, "classes")?;
    let n_classes: usize = parser.parse_at(&tokens, 1, "class count")?;
    if n_classes == 0 {
        return Err(parser.fail("class count must be positive"));
    }

    let line = parser.next_line()?;
    let tokens: Vec<&str> = line.split_whitespace().collect();
    parser.expect_keyword(&tokens, 0, "priors")?;
    if tokens.len() != 1 + n_classes {
        return Err(parser.fail(format_args!("expected {n_classes} priors")));
    }
    let mut priors = Vec::with_capacity(n_classes);
    for i in 0..n_classes {
        let p: f64 = parser.parse_at(&tokens, 1 + i, "prior")?;
        if !(p.is_finite() && p > 0.0) {
            return Err(parser.fail("priors must be finite and positive"));
        }
        priors.push(p);
    }

    let line = parser.next_line()?;
    let tokens: Vec<&str> = line.split_whitespace().collect();
    parser.expect_keyword(&tokens, 0, "root_counts")?;
    if tokens.len() != 1 + n_classes {
        return Err(parser.fail(format_args!("expected {n_classes} root counts")));
    }
    let mut root_counts = Vec::with_capacity(n_classes);
    for i in 0..n_classes {
        root_counts.push(parser.parse_at::<u32>(&tokens, 1 + i, "root count")?);
    }

    let line = parser.next_line()?;
    let tokens: Vec<&str> = line.split_whitespace().collect();
    parser.expect_keyword(&tokens, 0, "variables")?;
    let n_variables: usize = parser.parse_at(&tokens, 1, "variable count")?;
    let mut variables = Vec::with_capacity(n_variables);
    for expect_idx in 0..n_variables {
        let line = parser.next_line()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        parser.expect_keyword(&tokens, 0, "var")?;
        let idx: usize = parser.parse_at(&tokens, 1, "variable index")?;
        if idx != expect_idx {
            return Err(parser.fail(format_args!("expected variable {expect_idx}, found {idx}")));
        }
        let name = unescape(
            tokens
                .get(3)
                .ok_or_else(|| parser.fail("missing variable name"))?,
        )
        .map_err(|e| parser.fail(e))?;
        let kind = match tokens.get(2) {
            Some(&"num") => {
                if tokens.len() != 4 {
                    return Err(parser.fail("numeric variable line has extra tokens"));
                }
                VariableKind::Numeric
            }
            Some(&"cat") => {
                let m: usize = parser.parse_at(&tokens, 4, "category count")?;
                if tokens.len() != 5 + m {
                    return Err(parser.fail(format_args!("expected {m} category names")));
                }
                let mut cats = Vec::with_capacity(m);
                for t in &tokens[5..] {
                    cats.push(unescape(t).map_err(|e| parser.fail(e))?);
                }
                VariableKind::Categorical(cats)
            }
            Some(other) => {
                return Err(parser.fail(format_args!("unknown variable kind `{other}`")))
            }
            None => return Err(parser.fail("missing variable kind")),
        };
        variables.push(VariableInfo { name, kind });
    }

    let line = parser.next_line()?;
    let tokens: Vec<&str> = line.split_whitespace().collect();
    parser.expect_keyword(&tokens, 0, "nodes")?;
    let n_nodes: usize = parser.parse_at(&tokens, 1, "node count")?;
    if n_nodes == 0 {
        return Err(parser.fail("a tree has at least one node"));
    }

    let mut nodes: Vec<Node> = Vec::with_capacity(n_nodes);
    let mut line = parser.next_line()?;
    for expect_idx in 0..n_nodes {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        parser.expect_keyword(&tokens, 0, "node")?;
        let idx: usize = parser.parse_at(&tokens, 1, "node index")?;
        if idx != expect_idx {
            return Err(parser.fail(format_args!("expected node {expect_idx}, found {idx}")));
        }
        let depth: usize = parser.parse_at(&tokens, 2, "depth")?;
        let predicted: usize = parser.parse_at(&tokens, 3, "predicted class")?;
        if predicted >= n_classes {
            return Err(parser.fail("predicted class out of range"));
        }
        let majority_left = match tokens.get(4) {
            Some(&"L") => true,
            Some(&"R") => false,
            _ => return Err(parser.fail("expected majority side `L` or `R`")),
        };
        parser.expect_keyword(&tokens, 5, "counts")?;
        if tokens.len() != 6 + n_classes {
            return Err(parser.fail(format_args!("expected {n_classes} class counts")));
        }
        let mut class_counts = Vec::with_capacity(n_classes);
        for i in 0..n_classes {
            class_counts.push(parser.parse_at::<u32>(&tokens, 6 + i, "class count")?);
        }
        nodes.push(Node {
            depth,
            class_counts,
            predicted,
            primary: None,
            decrease: 0.0,
            surrogates: Vec::new(),
            majority_left,
            children: None,
        });

        // A node line is followed by an optional split line, surrogate
        // lines, and then the next node line (or `end`).
        line = parser.next_line()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.first() == Some(&"split") {
            let owner: usize = parser.parse_at(&tokens, 1, "node index")?;
            if owner != expect_idx {
                return Err(parser.fail(format_args!(
                    "split line for node {owner} after node {expect_idx}"
                )));
            }
            if tokens.len() != 8 {
                return Err(parser.fail("split line must have 8 tokens"));
            }
            let rule = parse_rule(&parser, &tokens, &variables)?;
            let decrease: f64 = parser.parse_at(&tokens, 5, "impurity decrease")?;
            let left: usize = parser.parse_at(&tokens, 6, "left child")?;
            let right: usize = parser.parse_at(&tokens, 7, "right child")?;
            if left <= expect_idx || right <= left || right >= n_nodes {
                return Err(parser.fail(
                    "children must satisfy parent < left < right < node count",
                ));
            }
            let node = nodes.last_mut().expect("just pushed");
            node.primary = Some(rule);
            node.decrease = decrease;
            node.children = Some((left, right));

            line = parser.next_line()?;
            loop {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                if tokens.first() != Some(&"surr") {
                    break;
                }
                let owner: usize = parser.parse_at(&tokens, 1, "node index")?;
                if owner != expect_idx {
                    return Err(parser.fail(format_args!(
                        "surrogate line for node {owner} after node {expect_idx}"
                    )));
                }
                if tokens.len() != 7 {
                    return Err(parser.fail("surrogate line must have 7 tokens"));
                }
                let rule = parse_rule(&parser, &tokens, &variables)?;
                let agreement: f64 = parser.parse_at(&tokens, 5, "agreement")?;
                if !(agreement.is_finite() && (0.0..=1.0).contains(&agreement)) {
                    return Err(parser.fail("agreement must be in [0, 1]"));
                }
                let reversed = match tokens.get(6) {
                    Some(&"fwd") => false,
                    Some(&"rev") => true,
                    _ => return Err(parser.fail("expected direction `fwd` or `rev`")),
                };
                if reversed && matches!(rule, SplitRule::Categorical { .. }) {
                    return Err(parser.fail("categorical surrogates cannot be reversed"));
                }
                let node = nodes.last_mut().expect("just pushed");
                node.surrogates.push(Surrogate {
                    rule,
                    agreement,
                    reversed,
                });
                line = parser.next_line()?;
            }
        }
    }
    if line.trim() != "end" {
        return Err(parser.fail("expected `end`"));
    }

    // Structural validation: each non-root node is some parent's child
    // exactly once, depths increase by one, and the root counts match the
    // root node.
    let mut seen_as_child = vec![false; n_nodes];
    for (i, node) in nodes.iter().enumerate() {
        if let Some((l, r)) = node.children {
            for child in [l, r] {
                if seen_as_child[child] {
                    return Err(CartError::ParseTree(format!(
                        "node {child} appears as a child twice"
                    )));
                }
                seen_as_child[child] = true;
                if nodes[child].depth != node.depth + 1 {
                    return Err(CartError::ParseTree(format!(
                        "node {child} has depth {} but its parent {i} has depth {}",
                        nodes[child].depth, node.depth
                    )));
                }
            }
        }
    }
    if nodes[0].depth != 0 {
        return Err(CartError::ParseTree("root must have depth 0".to_string()));
    }
    if let Some(orphan) = (1..n_nodes).find(|&i| !seen_as_child[i]) {
        return Err(CartError::ParseTree(format!(
            "node {orphan} is not reachable from the root"
        )));
    }

    Ok(Tree {
        variables,
        n_classes,
        priors,
        root_counts,
        nodes,
    })
}
