//! Attribute stores and lexically scoped views over them.

/// Attributes declared by one node, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Attributes<V> {
    entries: Vec<(String, V)>,
}

impl<V> Default for Attributes<V> {
    fn default() -> Self {
        Attributes {
            entries: Vec::new(),
        }
    }
}

impl<V> Attributes<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&V> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut V> {
        self.entries
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    /// Sets `name`, returning the previous value if it was declared.
    pub fn insert(&mut self, name: impl Into<String>, value: V) -> Option<V> {
        let name = name.into();
        match self.get_mut(&name) {
            Some(slot) => Some(std::mem::replace(slot, value)),
            None => {
                self.entries.push((name, value));
                None
            }
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &V)> {
        self.entries.iter().map(|(n, v)| (n.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Read access to the attributes visible from some node.
pub trait AttrView<V> {
    fn lookup(&self, name: &str) -> Option<&V>;
}

impl<V> AttrView<V> for Attributes<V> {
    fn lookup(&self, name: &str) -> Option<&V> {
        self.get(name)
    }
}

/// Nothing visible; the view above a root node.
pub struct EmptyView;

impl<V> AttrView<V> for EmptyView {
    fn lookup(&self, _name: &str) -> Option<&V> {
        None
    }
}

/// A node's own attributes shadowing everything visible from its parent.
pub struct Chained<'p, 'l, V> {
    pub parent: &'p dyn AttrView<V>,
    pub local: &'l Attributes<V>,
}

impl<V> AttrView<V> for Chained<'_, '_, V> {
    fn lookup(&self, name: &str) -> Option<&V> {
        self.local.get(name).or_else(|| self.parent.lookup(name))
    }
}

/// Mutable access to the attribute stores along the path from the root to
/// the node currently executing. The innermost declaration of a name wins.
pub struct Scope<'a, V> {
    frames: Vec<&'a mut Attributes<V>>,
}

impl<'a, V> Scope<'a, V> {
    pub(crate) fn new() -> Self {
        Scope { frames: Vec::new() }
    }

    pub(crate) fn push(&mut self, frame: &'a mut Attributes<V>) {
        self.frames.push(frame);
    }

    pub(crate) fn depth(&self) -> usize {
        self.frames.len()
    }

    pub(crate) fn truncate(&mut self, depth: usize) {
        self.frames.truncate(depth);
    }

    pub fn get(&self, name: &str) -> Option<&V> {
        self.frames.iter().rev().find_map(|f| f.get(name))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut V> {
        self.frames.iter_mut().rev().find_map(|f| f.get_mut(name))
    }

    /// Replaces a visible attribute. Returns `None` when no frame declares it.
    pub fn replace(&mut self, name: &str, value: V) -> Option<V> {
        self.get_mut(name)
            .map(|slot| std::mem::replace(slot, value))
    }
}

impl<V> AttrView<V> for Scope<'_, V> {
    fn lookup(&self, name: &str) -> Option<&V> {
        self.get(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_frame_shadows_outer() {
        let mut outer = Attributes::new();
        outer.insert("x", 1);
        outer.insert("y", 2);
        let mut inner = Attributes::new();
        inner.insert("x", 10);

        let mut scope = Scope::new();
        scope.push(&mut outer);
        scope.push(&mut inner);
        assert_eq!(scope.get("x"), Some(&10));
        assert_eq!(scope.get("y"), Some(&2));
        *scope.get_mut("y").unwrap() = 20;
        assert_eq!(scope.replace("z", 0), None);
        scope.truncate(1);
        assert_eq!(scope.get("x"), Some(&1));
        drop(scope);
        assert_eq!(outer.get("y"), Some(&20));
    }

    #[test]
    fn chained_view() {
        let mut parent = Attributes::new();
        parent.insert("a", "parent");
        let mut local = Attributes::new();
        local.insert("b", "local");
        let view = Chained {
            parent: &parent,
            local: &local,
        };
        assert_eq!(view.lookup("a"), Some(&"parent"));
        assert_eq!(view.lookup("b"), Some(&"local"));
        assert_eq!(view.lookup("c"), None);
    }

    #[test]
    fn insert_overwrites() {
        let mut attrs = Attributes::new();
        assert_eq!(attrs.insert("k", 1), None);
        assert_eq!(attrs.insert("k", 2), Some(1));
        assert_eq!(attrs.len(), 1);
    }
}
