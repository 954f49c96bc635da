//! A small interpreter for Algebraic State-Transition Diagrams.
//!
//! Only three operators are supported: automata, the binary flow operator
//! (every child that can execute an event does), and quantified interleave
//! (one isolated child per value of a quantified variable, created on first
//! sight). Each node may declare attributes and a node action. Within one
//! step, transition actions run before the actions of enclosing nodes.
//!
//! ```
//! use kdewatch::astd::{Domain, EventMessage, Machine, Node, Registry, TransitionSpec};
//! use std::collections::BTreeMap;
//!
//! struct Counter;
//! impl Domain for Counter {
//!     type Value = u64;
//!     type Payload = BTreeMap<String, String>;
//!     type Output = ();
//! }
//!
//! let spec = Node::interleave(
//!     "PerUser",
//!     "user",
//!     Node::automaton("Count", &["S"], "S", vec![TransitionSpec::looping("S", "e").action("inc")])
//!         .attribute("seen", "zero"),
//! );
//! let registry = Registry::<Counter>::new()
//!     .initializer("zero", |_| 0)
//!     .action("inc", |ctx| {
//!         *ctx.get_mut("seen").unwrap() += 1;
//!         Ok(())
//!     });
//! let mut machine = Machine::build(&spec, &registry).unwrap();
//! let payload = BTreeMap::from([("user".to_string(), "alice".to_string())]);
//! machine.step(&EventMessage::new("e", payload.clone())).unwrap();
//! machine.step(&EventMessage::new("e", payload)).unwrap();
//! let alice = machine.instance().child("alice").unwrap();
//! assert_eq!(alice.attributes().get("seen"), Some(&2));
//! ```

mod machine;
mod scope;
mod spec;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use machine::{Fired, Instance, InstanceKind, Machine, StepReport};
pub use scope::{AttrView, Attributes, Chained, EmptyView, Scope};
pub use spec::{AttrDecl, Node, NodeKind, TransitionSpec};

/// Types a particular composition works with.
pub trait Domain: 'static {
    /// Attribute values.
    type Value: fmt::Debug + Send;
    /// Event parameters.
    type Payload: Payload;
    /// Records actions hand back to the caller.
    type Output: fmt::Debug + Send;
}

/// Named event parameters. Quantified interleaves select their child by
/// looking up the quantified variable here.
pub trait Payload {
    fn param(&self, name: &str) -> Option<&str>;
}

impl Payload for BTreeMap<String, String> {
    fn param(&self, name: &str) -> Option<&str> {
        self.get(name).map(String::as_str)
    }
}

impl Payload for HashMap<String, String> {
    fn param(&self, name: &str) -> Option<&str> {
        self.get(name).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventMessage<P> {
    pub label: String,
    pub payload: P,
}

impl<P> EventMessage<P> {
    pub fn new(label: impl Into<String>, payload: P) -> Self {
        EventMessage {
            label: label.into(),
            payload,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("unresolved {kind} reference {name:?} in node {node:?}")]
    Unresolved {
        kind: &'static str,
        name: String,
        node: String,
    },
    #[error("node {node:?} declares attribute {name:?} twice")]
    DuplicateAttribute { node: String, name: String },
    #[error("automaton {node:?} has no state named {state:?}")]
    UnknownState { node: String, state: String },
    #[error("automaton {node:?} declares state {state:?} twice")]
    DuplicateState { node: String, state: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("event has no value for quantified variable {variable:?}")]
    MissingQuantifiedValue { variable: String },
    #[error("action {action:?} of {node:?} failed: {message}")]
    Action {
        node: String,
        action: String,
        message: String,
    },
}

/// Failure reported by a registered action.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ActionError(pub String);

impl ActionError {
    pub fn new(message: impl Into<String>) -> Self {
        ActionError(message.into())
    }
}

pub type GuardFn<D> =
    Arc<dyn Fn(&<D as Domain>::Payload, &dyn AttrView<<D as Domain>::Value>) -> bool + Send + Sync>;
pub type ActionFn<D> =
    Arc<dyn Fn(&mut ActionContext<'_, '_, D>) -> Result<(), ActionError> + Send + Sync>;
pub type InitializerFn<D> =
    Arc<dyn Fn(&dyn AttrView<<D as Domain>::Value>) -> <D as Domain>::Value + Send + Sync>;

/// What an action sees: the triggering event, every attribute visible from
/// its node, and an outbox for records returned with the step report.
pub struct ActionContext<'c, 'a, D: Domain> {
    pub label: &'c str,
    pub payload: &'c D::Payload,
    pub scope: &'c mut Scope<'a, D::Value>,
    outputs: &'c mut Vec<D::Output>,
}

impl<D: Domain> ActionContext<'_, '_, D> {
    pub fn get(&self, name: &str) -> Option<&D::Value> {
        self.scope.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut D::Value> {
        self.scope.get_mut(name)
    }

    pub fn param(&self, name: &str) -> Option<&str> {
        self.payload.param(name)
    }

    pub fn emit(&mut self, output: D::Output) {
        self.outputs.push(output);
    }
}

/// Named callables that a [`Node`] tree refers to.
pub struct Registry<D: Domain> {
    guards: HashMap<String, GuardFn<D>>,
    actions: HashMap<String, ActionFn<D>>,
    initializers: HashMap<String, InitializerFn<D>>,
}

impl<D: Domain> Default for Registry<D> {
    fn default() -> Self {
        Registry {
            guards: HashMap::new(),
            actions: HashMap::new(),
            initializers: HashMap::new(),
        }
    }
}

impl<D: Domain> Clone for Registry<D> {
    fn clone(&self) -> Self {
        Registry {
            guards: self.guards.clone(),
            actions: self.actions.clone(),
            initializers: self.initializers.clone(),
        }
    }
}

impl<D: Domain> Registry<D> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn guard<F>(mut self, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&D::Payload, &dyn AttrView<D::Value>) -> bool + Send + Sync + 'static,
    {
        self.guards.insert(name.into(), Arc::new(f));
        self
    }

    pub fn action<F>(mut self, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&mut ActionContext<'_, '_, D>) -> Result<(), ActionError> + Send + Sync + 'static,
    {
        self.actions.insert(name.into(), Arc::new(f));
        self
    }

    /// Initializers may compute their value from attributes already visible
    /// (ancestors and earlier declarations of the same node).
    pub fn initializer<F>(mut self, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&dyn AttrView<D::Value>) -> D::Value + Send + Sync + 'static,
    {
        self.initializers.insert(name.into(), Arc::new(f));
        self
    }

    fn resolve_guard(&self, name: &str, node: &str) -> Result<GuardFn<D>, BuildError> {
        self.guards
            .get(name)
            .cloned()
            .ok_or_else(|| BuildError::Unresolved {
                kind: "guard",
                name: name.to_owned(),
                node: node.to_owned(),
            })
    }

    fn resolve_action(&self, name: &str, node: &str) -> Result<ActionFn<D>, BuildError> {
        self.actions
            .get(name)
            .cloned()
            .ok_or_else(|| BuildError::Unresolved {
                kind: "action",
                name: name.to_owned(),
                node: node.to_owned(),
            })
    }

    fn resolve_initializer(&self, name: &str, node: &str) -> Result<InitializerFn<D>, BuildError> {
        self.initializers
            .get(name)
            .cloned()
            .ok_or_else(|| BuildError::Unresolved {
                kind: "initializer",
                name: name.to_owned(),
                node: node.to_owned(),
            })
    }
}
