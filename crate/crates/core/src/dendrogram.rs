//! Ultrametric spaces as leveled trees, with Newick and DOT export.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metric::{distance_set, UltrametricSpace};
use crate::metric::union_find::UnionFind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Leaf(String),
    Internal { height: u64, children: Vec<usize> },
}

/// Tree whose leaves are the points and whose internal nodes sit at merge
/// heights; the distance of two points is the height of their lowest common
/// ancestor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dendrogram {
    nodes: Vec<Node>,
    root: usize,
}

impl Dendrogram {
    pub fn from_space(space: &UltrametricSpace) -> Self {
        let n = space.len();
        let mut nodes: Vec<Node> = space.labels().iter().cloned().map(Node::Leaf).collect();
        // cluster node currently representing each union-find root
        let mut top: Vec<usize> = (0..n).collect();
        let mut uf = UnionFind::new(n);
        for &a in distance_set(space).levels() {
            let mut merged: Vec<(usize, Vec<usize>)> = Vec::new();
            let mut seen = vec![false; n];
            let before: Vec<usize> = (0..n).map(|p| uf.find(p)).collect();
            for i in 0..n {
                for j in i + 1..n {
                    if space.dist(i, j) == a {
                        uf.union(i, j);
                    }
                }
            }
            for p in 0..n {
                let old = before[p];
                if seen[old] {
                    continue;
                }
                seen[old] = true;
                let new = uf.find(p);
                match merged.iter_mut().find(|m| m.0 == new) {
                    Some(m) => m.1.push(top[old]),
                    None => merged.push((new, vec![top[old]])),
                }
            }
            for (root, children) in merged {
                if children.len() > 1 {
                    nodes.push(Node::Internal { height: a, children });
                    top[root] = nodes.len() - 1;
                } else {
                    top[root] = children[0];
                }
            }
        }
        let root = top[uf.find(0)];
        Self { nodes, root }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    fn height(&self, node: usize) -> u64 {
        match &self.nodes[node] {
            Node::Leaf(_) => 0,
            Node::Internal { height, .. } => *height,
        }
    }

    /// Reads the distance matrix back off the tree.
    pub fn to_space(&self) -> Result<UltrametricSpace> {
        let mut labels = Vec::new();
        let mut rows: Vec<Vec<u64>> = Vec::new();
        self.collect(self.root, &mut labels, &mut rows);
        UltrametricSpace::from_rows(labels, rows)
    }

    /// Appends the leaves under `node`, filling distances to earlier leaves.
    fn collect(&self, node: usize, labels: &mut Vec<String>, rows: &mut Vec<Vec<u64>>) {
        match &self.nodes[node] {
            Node::Leaf(label) => {
                labels.push(label.clone());
                for row in rows.iter_mut() {
                    row.push(0);
                }
                rows.push(vec![0; labels.len()]);
            }
            Node::Internal { height, children } => {
                let mut bounds = Vec::new();
                for &c in children {
                    let from = labels.len();
                    self.collect(c, labels, rows);
                    bounds.push(from..labels.len());
                }
                for (k, a) in bounds.iter().enumerate() {
                    for b in &bounds[k + 1..] {
                        for i in a.clone() {
                            for j in b.clone() {
                                rows[i][j] = *height;
                                rows[j][i] = *height;
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.newick_node(self.root, None, &mut out);
        out.push(';');
        out
    }

    fn newick_node(&self, node: usize, parent: Option<u64>, out: &mut String) {
        match &self.nodes[node] {
            Node::Leaf(label) => out.push_str(&newick_label(label)),
            Node::Internal { children, .. } => {
                out.push('(');
                for (k, &c) in children.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    self.newick_node(c, Some(self.height(node)), out);
                }
                out.push(')');
            }
        }
        if let Some(p) = parent {
            let _ = write!(out, ":{}", p - self.height(node));
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph dendrogram {\n");
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Leaf(label) => {
                    let _ = writeln!(out, "  n{i} [label=\"{}\", shape=plaintext];", dot_escape(label));
                }
                Node::Internal { height, children } => {
                    let _ = writeln!(out, "  n{i} [label=\"{height}\", shape=circle];");
                    for c in children {
                        let _ = writeln!(out, "  n{i} -- n{c};");
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// Parses the output of [`Dendrogram::to_newick`]: integer branch
    /// lengths, all leaves at height 0.
    pub fn from_newick(text: &str) -> Result<Self> {
        let mut parser = NewickParser {
            chars: text.trim().chars().collect(),
            pos: 0,
            nodes: Vec::new(),
        };
        let (root, _) = parser.subtree()?;
        parser.expect(';')?;
        if parser.pos != parser.chars.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(Self {
            nodes: parser.nodes,
            root,
        })
    }
}

fn newick_label(label: &str) -> String {
    if label.chars().any(|c| "()[]':;, \t\n".contains(c)) {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

fn dot_escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

struct NewickParser {
    chars: Vec<char>,
    pos: usize,
    nodes: Vec<Node>,
}

impl NewickParser {
    fn error(&self, what: &str) -> Error {
        Error::Invalid(format!("newick: {what} at offset {}", self.pos))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    /// Returns the node and its height.
    fn subtree(&mut self) -> Result<(usize, u64)> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let mut children = Vec::new();
            let mut height = None;
            loop {
                let (child, h) = self.subtree()?;
                let branch = self.branch()?;
                let total = h + branch;
                if height.is_some_and(|x| x != total) {
                    return Err(self.error("leaves at different depths"));
                }
                height = Some(total);
                children.push(child);
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected ',' or ')'")),
                }
            }
            let height = height.expect("at least one child");
            if height == 0 || children.len() < 2 {
                return Err(self.error("internal node needs two children and positive height"));
            }
            self.nodes.push(Node::Internal { height, children });
            Ok((self.nodes.len() - 1, height))
        } else {
            let label = self.label()?;
            self.nodes.push(Node::Leaf(label));
            Ok((self.nodes.len() - 1, 0))
        }
    }

    fn branch(&mut self) -> Result<u64> {
        self.expect(':')?;
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        digits.parse().map_err(|_| self.error("expected integer branch length"))
    }

    fn label(&mut self) -> Result<String> {
        if self.peek() == Some('\'') {
            self.pos += 1;
            let mut out = String::new();
            loop {
                match self.peek() {
                    Some('\'') if self.chars.get(self.pos + 1) == Some(&'\'') => {
                        out.push('\'');
                        self.pos += 2;
                    }
                    Some('\'') => {
                        self.pos += 1;
                        return Ok(out);
                    }
                    Some(c) => {
                        out.push(c);
                        self.pos += 1;
                    }
                    None => return Err(self.error("unterminated quoted label")),
                }
            }
        }
        let start = self.pos;
        while self.peek().is_some_and(|c| !"():;,".contains(c)) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected label"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }
}

pub fn export_newick(space: &UltrametricSpace) -> String {
    Dendrogram::from_space(space).to_newick()
}

pub fn export_dot(space: &UltrametricSpace) -> String {
    Dendrogram::from_space(space).to_dot()
}
