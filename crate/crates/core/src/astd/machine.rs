use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::scope::{AttrView, Attributes, Chained, EmptyView, Scope};
use super::spec::{Node, NodeKind};
use super::{
    ActionContext, ActionFn, BuildError, Domain, EventMessage, GuardFn, InitializerFn, Payload,
    Registry, StepError,
};

struct Compiled<D: Domain> {
    name: Arc<str>,
    attributes: Vec<(String, InitializerFn<D>)>,
    action: Option<(Arc<str>, ActionFn<D>)>,
    kind: CompiledKind<D>,
}

enum CompiledKind<D: Domain> {
    Automaton {
        states: Vec<Arc<str>>,
        initial: usize,
        transitions: Vec<CompiledTransition<D>>,
    },
    Flow {
        left: Box<Compiled<D>>,
        right: Box<Compiled<D>>,
    },
    Interleave {
        variable: String,
        child: Box<Compiled<D>>,
    },
}

struct CompiledTransition<D: Domain> {
    from: usize,
    to: usize,
    label: String,
    guard: Option<GuardFn<D>>,
    action: Option<(Arc<str>, ActionFn<D>)>,
}

fn compile<D: Domain>(node: &Node, registry: &Registry<D>) -> Result<Compiled<D>, BuildError> {
    let mut seen = HashSet::new();
    let mut attributes = Vec::with_capacity(node.attributes.len());
    for decl in &node.attributes {
        if !seen.insert(decl.name.as_str()) {
            return Err(BuildError::DuplicateAttribute {
                node: node.name.clone(),
                name: decl.name.clone(),
            });
        }
        let init = registry.resolve_initializer(&decl.initializer, &node.name)?;
        attributes.push((decl.name.clone(), init));
    }
    let action = match &node.action {
        Some(name) => Some((
            Arc::from(name.as_str()),
            registry.resolve_action(name, &node.name)?,
        )),
        None => None,
    };

    let kind = match &node.kind {
        NodeKind::Automaton {
            states,
            initial,
            transitions,
        } => {
            let mut names = HashSet::new();
            for s in states {
                if !names.insert(s.as_str()) {
                    return Err(BuildError::DuplicateState {
                        node: node.name.clone(),
                        state: s.clone(),
                    });
                }
            }
            let index_of = |state: &str| {
                states
                    .iter()
                    .position(|s| s == state)
                    .ok_or_else(|| BuildError::UnknownState {
                        node: node.name.clone(),
                        state: state.to_owned(),
                    })
            };
            let initial = index_of(initial)?;
            let transitions = transitions
                .iter()
                .map(|t| {
                    Ok(CompiledTransition {
                        from: index_of(&t.from)?,
                        to: index_of(&t.to)?,
                        label: t.label.clone(),
                        guard: match &t.guard {
                            Some(g) => Some(registry.resolve_guard(g, &node.name)?),
                            None => None,
                        },
                        action: match &t.action {
                            Some(a) => Some((
                                Arc::from(a.as_str()),
                                registry.resolve_action(a, &node.name)?,
                            )),
                            None => None,
                        },
                    })
                })
                .collect::<Result<Vec<_>, BuildError>>()?;
            CompiledKind::Automaton {
                states: states.iter().map(|s| Arc::from(s.as_str())).collect(),
                initial,
                transitions,
            }
        }
        NodeKind::Flow { left, right } => CompiledKind::Flow {
            left: Box::new(compile(left, registry)?),
            right: Box::new(compile(right, registry)?),
        },
        NodeKind::Interleave { variable, child } => CompiledKind::Interleave {
            variable: variable.clone(),
            child: Box::new(compile(child, registry)?),
        },
    };

    Ok(Compiled {
        name: Arc::from(node.name.as_str()),
        attributes,
        action,
        kind,
    })
}

/// Runtime state of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<V> {
    attributes: Attributes<V>,
    kind: InstanceKind<V>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceKind<V> {
    Automaton {
        state: usize,
    },
    Flow {
        left: Box<Instance<V>>,
        right: Box<Instance<V>>,
    },
    Interleave {
        children: BTreeMap<String, Instance<V>>,
    },
}

impl<V> Instance<V> {
    pub fn attributes(&self) -> &Attributes<V> {
        &self.attributes
    }

    pub fn attributes_mut(&mut self) -> &mut Attributes<V> {
        &mut self.attributes
    }

    pub fn kind(&self) -> &InstanceKind<V> {
        &self.kind
    }

    /// Child of an interleave instance.
    pub fn child(&self, key: &str) -> Option<&Instance<V>> {
        match &self.kind {
            InstanceKind::Interleave { children } => children.get(key),
            _ => None,
        }
    }

    pub fn child_mut(&mut self, key: &str) -> Option<&mut Instance<V>> {
        match &mut self.kind {
            InstanceKind::Interleave { children } => children.get_mut(key),
            _ => None,
        }
    }

    /// Children of an interleave instance, ordered by key.
    pub fn children(&self) -> impl Iterator<Item = (&str, &Instance<V>)> {
        let map = match &self.kind {
            InstanceKind::Interleave { children } => Some(children),
            _ => None,
        };
        map.into_iter()
            .flat_map(|m| m.iter().map(|(k, v)| (k.as_str(), v)))
    }

    pub fn child_count(&self) -> usize {
        match &self.kind {
            InstanceKind::Interleave { children } => children.len(),
            _ => 0,
        }
    }

    pub fn left(&self) -> Option<&Instance<V>> {
        match &self.kind {
            InstanceKind::Flow { left, .. } => Some(left),
            _ => None,
        }
    }

    pub fn right(&self) -> Option<&Instance<V>> {
        match &self.kind {
            InstanceKind::Flow { right, .. } => Some(right),
            _ => None,
        }
    }

    /// Current state index of an automaton instance.
    pub fn state(&self) -> Option<usize> {
        match &self.kind {
            InstanceKind::Automaton { state } => Some(*state),
            _ => None,
        }
    }
}

/// One entry of a step's execution log, in execution order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fired {
    Transition {
        automaton: Arc<str>,
        from: Arc<str>,
        to: Arc<str>,
    },
    TransitionAction {
        automaton: Arc<str>,
        action: Arc<str>,
    },
    NodeAction {
        node: Arc<str>,
        action: Arc<str>,
    },
}

impl Fired {
    /// Name of the action this entry ran, if any.
    pub fn action_name(&self) -> Option<&str> {
        match self {
            Fired::Transition { .. } => None,
            Fired::TransitionAction { action, .. } | Fired::NodeAction { action, .. } => {
                Some(action)
            }
        }
    }
}

#[derive(Debug)]
pub struct StepReport<O> {
    /// False when no path could execute the event.
    pub executed: bool,
    pub log: Vec<Fired>,
    pub outputs: Vec<O>,
}

impl<O> StepReport<O> {
    pub fn is_noop(&self) -> bool {
        !self.executed
    }

    pub fn actions(&self) -> impl Iterator<Item = &str> {
        self.log.iter().filter_map(Fired::action_name)
    }
}

/// A built composition together with its runtime state.
pub struct Machine<D: Domain> {
    root: Arc<Compiled<D>>,
    instance: Instance<D::Value>,
}

impl<D: Domain> Clone for Machine<D>
where
    D::Value: Clone,
{
    fn clone(&self) -> Self {
        Machine {
            root: Arc::clone(&self.root),
            instance: self.instance.clone(),
        }
    }
}

struct StepCtx<'e, D: Domain> {
    event: &'e EventMessage<D::Payload>,
    log: Vec<Fired>,
    outputs: Vec<D::Output>,
}

impl<D: Domain> Machine<D> {
    /// Resolves every reference in `spec` and instantiates the root.
    pub fn build(spec: &Node, registry: &Registry<D>) -> Result<Self, BuildError> {
        let root = compile(spec, registry)?;
        let instance = instantiate(&root, &EmptyView);
        Ok(Machine {
            root: Arc::new(root),
            instance,
        })
    }

    pub fn instance(&self) -> &Instance<D::Value> {
        &self.instance
    }

    pub fn instance_mut(&mut self) -> &mut Instance<D::Value> {
        &mut self.instance
    }

    pub fn root_name(&self) -> &str {
        &self.root.name
    }

    /// Whether some path of the composition would execute `event`.
    pub fn can_execute(&self, event: &EventMessage<D::Payload>) -> bool {
        can_execute(&self.root, &self.instance, event, &EmptyView).unwrap_or(false)
    }

    /// Executes `event`: every capable path fires, transition actions first,
    /// then node actions bottom-up.
    pub fn step(
        &mut self,
        event: &EventMessage<D::Payload>,
    ) -> Result<StepReport<D::Output>, StepError> {
        let mut ctx = StepCtx::<D> {
            event,
            log: Vec::new(),
            outputs: Vec::new(),
        };
        let mut scope = Scope::new();
        let executed = step_node(&self.root, &mut self.instance, &mut scope, &mut ctx)?;
        Ok(StepReport {
            executed,
            log: ctx.log,
            outputs: ctx.outputs,
        })
    }

    /// Returns the root interleave's child for `key`, creating it with fresh
    /// attributes when absent. `None` if the root is not an interleave.
    pub fn spawn_child(&mut self, key: &str) -> Option<&mut Instance<D::Value>> {
        let CompiledKind::Interleave { child, .. } = &self.root.kind else {
            return None;
        };
        let Instance { attributes, kind } = &mut self.instance;
        let InstanceKind::Interleave { children } = kind else {
            return None;
        };
        if !children.contains_key(key) {
            let fresh = instantiate(child, &*attributes);
            children.insert(key.to_owned(), fresh);
        }
        children.get_mut(key)
    }

    /// Removes the root interleave's child for `key`. Nothing is evicted
    /// unless a caller asks.
    pub fn evict(&mut self, key: &str) -> bool {
        match &mut self.instance.kind {
            InstanceKind::Interleave { children } => children.remove(key).is_some(),
            _ => false,
        }
    }

    /// Keeps only the root interleave children for which `keep` holds.
    pub fn retain_children<F>(&mut self, mut keep: F) -> usize
    where
        F: FnMut(&str, &Instance<D::Value>) -> bool,
    {
        match &mut self.instance.kind {
            InstanceKind::Interleave { children } => {
                let before = children.len();
                children.retain(|k, v| keep(k, v));
                before - children.len()
            }
            _ => 0,
        }
    }
}

fn instantiate<D: Domain>(
    node: &Compiled<D>,
    parent: &dyn AttrView<D::Value>,
) -> Instance<D::Value> {
    let mut attributes = Attributes::new();
    for (name, init) in &node.attributes {
        let value = init(&Chained {
            parent,
            local: &attributes,
        });
        attributes.insert(name.clone(), value);
    }
    let kind = {
        let view = Chained {
            parent,
            local: &attributes,
        };
        match &node.kind {
            CompiledKind::Automaton { initial, .. } => InstanceKind::Automaton { state: *initial },
            CompiledKind::Flow { left, right } => InstanceKind::Flow {
                left: Box::new(instantiate(left, &view)),
                right: Box::new(instantiate(right, &view)),
            },
            CompiledKind::Interleave { .. } => InstanceKind::Interleave {
                children: BTreeMap::new(),
            },
        }
    };
    Instance { attributes, kind }
}

fn can_execute<D: Domain>(
    node: &Compiled<D>,
    instance: &Instance<D::Value>,
    event: &EventMessage<D::Payload>,
    parent: &dyn AttrView<D::Value>,
) -> Result<bool, StepError> {
    let view = Chained {
        parent,
        local: &instance.attributes,
    };
    match (&node.kind, &instance.kind) {
        (CompiledKind::Automaton { transitions, .. }, InstanceKind::Automaton { state }) => {
            Ok(transitions.iter().any(|t| {
                t.from == *state
                    && t.label == event.label
                    && t.guard.as_ref().is_none_or(|g| g(&event.payload, &view))
            }))
        }
        (
            CompiledKind::Flow { left, right },
            InstanceKind::Flow {
                left: li,
                right: ri,
            },
        ) => Ok(can_execute(left, li, event, &view)? || can_execute(right, ri, event, &view)?),
        (CompiledKind::Interleave { variable, child }, InstanceKind::Interleave { children }) => {
            let key = quantified_value(&event.payload, variable)?;
            match children.get(key) {
                Some(existing) => can_execute(child, existing, event, &view),
                None => {
                    let fresh = instantiate(child, &view);
                    can_execute(child, &fresh, event, &view)
                }
            }
        }
        _ => unreachable!("instance shape always mirrors its compiled node"),
    }
}

fn quantified_value<'p, P: Payload>(payload: &'p P, variable: &str) -> Result<&'p str, StepError> {
    payload
        .param(variable)
        .ok_or_else(|| StepError::MissingQuantifiedValue {
            variable: variable.to_owned(),
        })
}

fn run_action<D: Domain>(
    node: &Arc<str>,
    (name, action): &(Arc<str>, ActionFn<D>),
    scope: &mut Scope<'_, D::Value>,
    ctx: &mut StepCtx<'_, D>,
) -> Result<(), StepError> {
    let mut action_ctx = ActionContext::<D> {
        label: &ctx.event.label,
        payload: &ctx.event.payload,
        scope,
        outputs: &mut ctx.outputs,
    };
    action(&mut action_ctx).map_err(|e| StepError::Action {
        node: node.to_string(),
        action: name.to_string(),
        message: e.0,
    })
}

fn step_node<'a, D: Domain>(
    node: &Compiled<D>,
    instance: &'a mut Instance<D::Value>,
    scope: &mut Scope<'a, D::Value>,
    ctx: &mut StepCtx<'_, D>,
) -> Result<bool, StepError> {
    let Instance { attributes, kind } = instance;
    let base = scope.depth();
    scope.push(attributes);
    let own = scope.depth();

    let executed = match (&node.kind, kind) {
        (
            CompiledKind::Automaton {
                states,
                transitions,
                ..
            },
            InstanceKind::Automaton { state },
        ) => {
            let event = ctx.event;
            let chosen = transitions.iter().find(|t| {
                t.from == *state
                    && t.label == event.label
                    && t.guard.as_ref().is_none_or(|g| g(&event.payload, &*scope))
            });
            match chosen {
                Some(t) => {
                    ctx.log.push(Fired::Transition {
                        automaton: Arc::clone(&node.name),
                        from: Arc::clone(&states[t.from]),
                        to: Arc::clone(&states[t.to]),
                    });
                    if let Some(action) = &t.action {
                        ctx.log.push(Fired::TransitionAction {
                            automaton: Arc::clone(&node.name),
                            action: Arc::clone(&action.0),
                        });
                        run_action(&node.name, action, scope, ctx)?;
                    }
                    *state = t.to;
                    true
                }
                None => false,
            }
        }
        (
            CompiledKind::Flow { left, right },
            InstanceKind::Flow {
                left: li,
                right: ri,
            },
        ) => {
            let left_ran = step_node(left, li, scope, ctx)?;
            scope.truncate(own);
            let right_ran = step_node(right, ri, scope, ctx)?;
            scope.truncate(own);
            left_ran || right_ran
        }
        (CompiledKind::Interleave { variable, child }, InstanceKind::Interleave { children }) => {
            let key = quantified_value(&ctx.event.payload, variable)?;
            if !children.contains_key(key) {
                let fresh = instantiate(child, &*scope);
                if can_execute(child, &fresh, ctx.event, &*scope)? {
                    children.insert(key.to_owned(), fresh);
                }
            }
            match children.get_mut(key) {
                Some(target) => {
                    let ran = step_node(child, target, scope, ctx)?;
                    scope.truncate(own);
                    ran
                }
                None => false,
            }
        }
        _ => unreachable!("instance shape always mirrors its compiled node"),
    };

    if executed {
        if let Some(action) = &node.action {
            ctx.log.push(Fired::NodeAction {
                node: Arc::clone(&node.name),
                action: Arc::clone(&action.0),
            });
            run_action(&node.name, action, scope, ctx)?;
        }
    }
    scope.truncate(base);
    Ok(executed)
}
