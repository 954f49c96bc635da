//! Declarative description of an ASTD composition.
//!
//! A [`Node`] only names its guards, actions and initializers; they are
//! resolved against a [`Registry`](super::Registry) when the machine is built.

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub attributes: Vec<AttrDecl>,
    /// Runs after the node's descendants whenever the node executes an event.
    pub action: Option<String>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttrDecl {
    pub name: String,
    pub initializer: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Automaton {
        states: Vec<String>,
        initial: String,
        transitions: Vec<TransitionSpec>,
    },
    Flow {
        left: Box<Node>,
        right: Box<Node>,
    },
    Interleave {
        variable: String,
        child: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSpec {
    pub from: String,
    pub to: String,
    pub label: String,
    pub guard: Option<String>,
    pub action: Option<String>,
}

impl TransitionSpec {
    pub fn new(from: impl Into<String>, label: impl Into<String>, to: impl Into<String>) -> Self {
        TransitionSpec {
            from: from.into(),
            to: to.into(),
            label: label.into(),
            guard: None,
            action: None,
        }
    }

    /// A transition from `state` back to itself.
    pub fn looping(state: impl Into<String>, label: impl Into<String>) -> Self {
        let state = state.into();
        TransitionSpec::new(state.clone(), label, state)
    }

    pub fn guard(mut self, name: impl Into<String>) -> Self {
        self.guard = Some(name.into());
        self
    }

    pub fn action(mut self, name: impl Into<String>) -> Self {
        self.action = Some(name.into());
        self
    }
}

impl Node {
    pub fn automaton(
        name: impl Into<String>,
        states: &[&str],
        initial: impl Into<String>,
        transitions: Vec<TransitionSpec>,
    ) -> Self {
        Node {
            name: name.into(),
            attributes: Vec::new(),
            action: None,
            kind: NodeKind::Automaton {
                states: states.iter().map(|s| (*s).to_owned()).collect(),
                initial: initial.into(),
                transitions,
            },
        }
    }

    pub fn flow(name: impl Into<String>, left: Node, right: Node) -> Self {
        Node {
            name: name.into(),
            attributes: Vec::new(),
            action: None,
            kind: NodeKind::Flow {
                left: Box::new(left),
                right: Box::new(right),
            },
        }
    }

    pub fn interleave(name: impl Into<String>, variable: impl Into<String>, child: Node) -> Self {
        Node {
            name: name.into(),
            attributes: Vec::new(),
            action: None,
            kind: NodeKind::Interleave {
                variable: variable.into(),
                child: Box::new(child),
            },
        }
    }

    pub fn attribute(mut self, name: impl Into<String>, initializer: impl Into<String>) -> Self {
        self.attributes.push(AttrDecl {
            name: name.into(),
            initializer: initializer.into(),
        });
        self
    }

    pub fn action(mut self, name: impl Into<String>) -> Self {
        self.action = Some(name.into());
        self
    }
}
