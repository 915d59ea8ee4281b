//! Directed acyclic graph specifications for multi-information.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node set plus a parent map. Construction validates acyclicity and that
/// every parent is a declared node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DagSpec {
    nodes: Vec<String>,
    parents: BTreeMap<String, Vec<String>>,
}

impl DagSpec {
    pub fn new(
        nodes: Vec<String>,
        parents: BTreeMap<String, Vec<String>>,
    ) -> Result<Self> {
        let node_set: BTreeSet<&String> = nodes.iter().collect();
        if node_set.len() != nodes.len() {
            return Err(Error::DuplicateVariable("duplicate dag node".into()));
        }
        for (node, ps) in &parents {
            if !node_set.contains(node) {
                return Err(Error::UnknownVariable(node.clone()));
            }
            for p in ps {
                if !node_set.contains(p) {
                    return Err(Error::UndeclaredParent {
                        node: node.clone(),
                        parent: p.clone(),
                    });
                }
            }
        }
        let dag = DagSpec { nodes, parents };
        dag.topological_order()?;
        Ok(dag)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn parents_of(&self, node: &str) -> &[String] {
        self.parents
            .get(node)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Kahn's algorithm; errors on cycles.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let mut indegree: BTreeMap<&str, usize> =
            self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for node in &self.nodes {
            for p in self.parents_of(node) {
                *indegree.get_mut(node.as_str()).unwrap() += 1;
                children.entry(p.as_str()).or_default().push(node.as_str());
            }
        }
        let mut ready: Vec<&str> = self
            .nodes
            .iter()
            .map(|n| n.as_str())
            .filter(|n| indegree[n] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop() {
            order.push(n.to_string());
            for &c in children.get(n).map(|v| v.as_slice()).unwrap_or(&[]) {
                let d = indegree.get_mut(c).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(c);
                }
            }
        }
        if order.len() != self.nodes.len() {
            return Err(Error::CyclicDag);
        }
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cycle_is_rejected() {
        let mut parents = BTreeMap::new();
        parents.insert("a".to_string(), names(&["b"]));
        parents.insert("b".to_string(), names(&["a"]));
        assert!(matches!(
            DagSpec::new(names(&["a", "b"]), parents),
            Err(Error::CyclicDag)
        ));
    }

    #[test]
    fn undeclared_parent_is_rejected() {
        let mut parents = BTreeMap::new();
        parents.insert("a".to_string(), names(&["ghost"]));
        assert!(DagSpec::new(names(&["a"]), parents).is_err());
    }

    #[test]
    fn topological_order_respects_edges() {
        let mut parents = BTreeMap::new();
        parents.insert("c".to_string(), names(&["a", "b"]));
        parents.insert("b".to_string(), names(&["a"]));
        let dag = DagSpec::new(names(&["a", "b", "c"]), parents).unwrap();
        let order = dag.topological_order().unwrap();
        let pos = |n: &str| order.iter().position(|x| x == n).unwrap();
        assert!(pos("a") < pos("b"));
        assert!(pos("b") < pos("c"));
    }
}
