//! Events of the cylinder algebra as a hash-consed, depth-tagged 7-ary DAG.
//!
//! A non-terminal node at depth `n` branches on the `n`-th move symbol and has
//! one child per symbol; each child is either a node at depth `n + 1` or one of
//! the two terminals. A path that reaches `FULL` spells a prefix cylinder
//! contained in the event, so the `FULL` leaves are a decomposition of the
//! event into pairwise disjoint planes.
//!
//! Nodes whose seven children are all `FULL` (or all `EMPTY`) are replaced by
//! that terminal and structurally equal nodes are shared, which makes the
//! representation canonical: two handles from one arena are equal exactly when
//! they denote the same set of trajectories.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::symbol::{PlaneWord, Symbol, SYMBOL_COUNT};
use crate::table::StepProbabilityTable;

static NEXT_ARENA_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub const EMPTY: NodeId = NodeId(0);
    pub const FULL: NodeId = NodeId(1);

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    depth: u32,
    children: [NodeId; SYMBOL_COUNT],
}

/// Handle to an event stored in an [`EventArena`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventSet {
    arena: u64,
    node: NodeId,
}

impl EventSet {
    pub fn is_empty(&self) -> bool {
        self.node == NodeId::EMPTY
    }

    pub fn is_universe(&self) -> bool {
        self.node == NodeId::FULL
    }

    pub fn root(&self) -> NodeId {
        self.node
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Union,
    Intersect,
    Complement,
}

/// Owner of all event nodes. Construction needs `&mut self`; queries such as
/// [`EventArena::measure`] only borrow, so a finished arena can be shared
/// between threads.
#[derive(Debug)]
pub struct EventArena {
    id: u64,
    // nodes[k] holds NodeId(k + 2); children always have smaller ids.
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeId>,
    memo: HashMap<(Op, NodeId, NodeId), NodeId>,
}

impl Default for EventArena {
    fn default() -> Self {
        Self::new()
    }
}

impl EventArena {
    pub fn new() -> Self {
        EventArena {
            id: NEXT_ARENA_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            unique: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    /// Number of non-terminal nodes allocated so far.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn handle(&self, node: NodeId) -> EventSet {
        EventSet { arena: self.id, node }
    }

    fn check(&self, e: EventSet) -> Result<NodeId> {
        if e.arena == self.id {
            Ok(e.node)
        } else {
            Err(Error::ArenaMismatch)
        }
    }

    fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize - 2]
    }

    fn mk(&mut self, depth: u32, children: [NodeId; SYMBOL_COUNT]) -> NodeId {
        if children.iter().all(|&c| c == NodeId::FULL) {
            return NodeId::FULL;
        }
        if children.iter().all(|&c| c == NodeId::EMPTY) {
            return NodeId::EMPTY;
        }
        let node = Node { depth, children };
        if let Some(&id) = self.unique.get(&node) {
            return id;
        }
        let id = NodeId(
            u32::try_from(self.nodes.len() + 2).expect("event arena exceeds u32 node ids"),
        );
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    pub fn empty(&self) -> EventSet {
        self.handle(NodeId::EMPTY)
    }

    pub fn universe(&self) -> EventSet {
        self.handle(NodeId::FULL)
    }

    /// The prefix cylinder `D[i0,...,in]`.
    pub fn plane(&mut self, word: &PlaneWord) -> EventSet {
        let mut node = NodeId::FULL;
        for (depth, s) in word.letters().iter().enumerate().rev() {
            let mut children = [NodeId::EMPTY; SYMBOL_COUNT];
            children[s.index()] = node;
            node = self.mk(depth as u32, children);
        }
        self.handle(node)
    }

    /// The hyperplane `C(n, i)`: trajectories whose `n`-th symbol is `i`.
    pub fn hyperplane(&mut self, n: usize, symbol: Symbol) -> EventSet {
        let depth = u32::try_from(n).expect("coordinate index exceeds u32");
        let mut children = [NodeId::EMPTY; SYMBOL_COUNT];
        children[symbol.index()] = NodeId::FULL;
        let mut node = self.mk(depth, children);
        for d in (0..depth).rev() {
            node = self.mk(d, [node; SYMBOL_COUNT]);
        }
        self.handle(node)
    }

    pub fn complement(&mut self, e: EventSet) -> Result<EventSet> {
        let a = self.check(e)?;
        let r = self.apply(Op::Complement, a, NodeId::EMPTY);
        Ok(self.handle(r))
    }

    pub fn union(&mut self, a: EventSet, b: EventSet) -> Result<EventSet> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        let r = self.apply(Op::Union, a, b);
        Ok(self.handle(r))
    }

    pub fn intersect(&mut self, a: EventSet, b: EventSet) -> Result<EventSet> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        let r = self.apply(Op::Intersect, a, b);
        Ok(self.handle(r))
    }

    /// `a \ b`.
    pub fn difference(&mut self, a: EventSet, b: EventSet) -> Result<EventSet> {
        let not_b = self.complement(b)?;
        self.intersect(a, not_b)
    }

    fn terminal_case(op: Op, a: NodeId, b: NodeId) -> Option<NodeId> {
        match op {
            Op::Complement => match a {
                NodeId::EMPTY => Some(NodeId::FULL),
                NodeId::FULL => Some(NodeId::EMPTY),
                _ => None,
            },
            Op::Union => {
                if a == NodeId::FULL || b == NodeId::FULL {
                    Some(NodeId::FULL)
                } else if a == NodeId::EMPTY {
                    Some(b)
                } else if b == NodeId::EMPTY || a == b {
                    Some(a)
                } else {
                    None
                }
            }
            Op::Intersect => {
                if a == NodeId::EMPTY || b == NodeId::EMPTY {
                    Some(NodeId::EMPTY)
                } else if a == NodeId::FULL {
                    Some(b)
                } else if b == NodeId::FULL || a == b {
                    Some(a)
                } else {
                    None
                }
            }
        }
    }

    fn memo_key(op: Op, a: NodeId, b: NodeId) -> (Op, NodeId, NodeId) {
        match op {
            Op::Complement => (op, a, NodeId::EMPTY),
            _ if a <= b => (op, a, b),
            _ => (op, b, a),
        }
    }

    // Explicit-stack apply so that events constraining far coordinates do
    // not exhaust the call stack.
    fn apply(&mut self, op: Op, a: NodeId, b: NodeId) -> NodeId {
        enum Task {
            Visit(NodeId, NodeId),
            Build(NodeId, NodeId, u32),
        }
        let mut tasks = vec![Task::Visit(a, b)];
        let mut values: Vec<NodeId> = Vec::new();
        while let Some(task) = tasks.pop() {
            match task {
                Task::Visit(x, y) => {
                    if let Some(r) = Self::terminal_case(op, x, y) {
                        values.push(r);
                        continue;
                    }
                    if let Some(&r) = self.memo.get(&Self::memo_key(op, x, y)) {
                        values.push(r);
                        continue;
                    }
                    let nx = *self.node(x);
                    let depth = nx.depth;
                    let ny = if op == Op::Complement || y.is_terminal() {
                        None
                    } else {
                        let ny = *self.node(y);
                        debug_assert_eq!(ny.depth, depth, "operands at different depths");
                        Some(ny)
                    };
                    tasks.push(Task::Build(x, y, depth));
                    for k in (0..SYMBOL_COUNT).rev() {
                        let cy = match (op, ny) {
                            (Op::Complement, _) => NodeId::EMPTY,
                            (_, Some(ny)) => ny.children[k],
                            // y is a terminal that the terminal case did not resolve
                            (_, None) => y,
                        };
                        tasks.push(Task::Visit(nx.children[k], cy));
                    }
                }
                Task::Build(x, y, depth) => {
                    let start = values.len() - SYMBOL_COUNT;
                    let children: [NodeId; SYMBOL_COUNT] =
                        values[start..].try_into().expect("seven child results");
                    values.truncate(start);
                    let r = self.mk(depth, children);
                    self.memo.insert(Self::memo_key(op, x, y), r);
                    values.push(r);
                }
            }
        }
        debug_assert_eq!(values.len(), 1);
        values[0]
    }

    /// Non-terminal nodes reachable from `root`, in increasing id order
    /// (children before parents).
    fn reachable(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![root];
        let mut out = Vec::new();
        while let Some(id) = stack.pop() {
            if id.is_terminal() || !seen.insert(id) {
                continue;
            }
            out.push(id);
            stack.extend(self.node(id).children.iter().copied());
        }
        out.sort_unstable();
        out
    }

    /// Largest coordinate index the event constrains, or `None` for the
    /// empty set and the universe.
    pub fn constrained_depth(&self, e: EventSet) -> Result<Option<usize>> {
        let root = self.check(e)?;
        Ok(self
            .reachable(root)
            .into_iter()
            .map(|id| self.node(id).depth as usize)
            .max())
    }

    /// Exact probability of `e` under the product pre-measure given by `table`.
    pub fn measure(&self, e: EventSet, table: &StepProbabilityTable) -> Result<Rational> {
        let root = self.check(e)?;
        let order = self.reachable(root);
        if let Some(depth) = order.iter().map(|&id| self.node(id).depth as usize).max() {
            if depth >= table.len() {
                return Err(Error::DepthExceedsTable {
                    depth,
                    rows: table.len(),
                });
            }
        }
        let mut value: HashMap<NodeId, Rational> = HashMap::with_capacity(order.len() + 2);
        value.insert(NodeId::EMPTY, Rational::zero());
        value.insert(NodeId::FULL, Rational::one());
        for id in order {
            let node = self.node(id);
            let row = table.row(node.depth as usize)?;
            let mut acc = Rational::zero();
            for (p, child) in row.iter().zip(node.children.iter()) {
                if !p.is_zero() {
                    acc += p * &value[child];
                }
            }
            value.insert(id, acc);
        }
        Ok(value.remove(&root).expect("root evaluated"))
    }

    /// Whether a trajectory starting with `word` lies in `e`. `None` when the
    /// word is too short to decide.
    pub fn contains(&self, e: EventSet, word: &[Symbol]) -> Result<Option<bool>> {
        let mut id = self.check(e)?;
        loop {
            match id {
                NodeId::FULL => return Ok(Some(true)),
                NodeId::EMPTY => return Ok(Some(false)),
                _ => {
                    let node = self.node(id);
                    match word.get(node.depth as usize) {
                        Some(s) => id = node.children[s.index()],
                        None => return Ok(None),
                    }
                }
            }
        }
    }

    /// The pairwise disjoint planes whose union is `e`, in lexicographic
    /// order. Fails for the universe, whose decomposition needs a length.
    pub fn to_disjoint_planes(&self, e: EventSet) -> Result<Vec<PlaneWord>> {
        self.planes(e, 0)
    }

    /// As [`EventArena::to_disjoint_planes`], but every plane shorter than
    /// `min_len` is split into its `7^k` extensions of length `min_len`.
    pub fn to_disjoint_planes_padded(&self, e: EventSet, min_len: usize) -> Result<Vec<PlaneWord>> {
        self.planes(e, min_len)
    }

    fn planes(&self, e: EventSet, min_len: usize) -> Result<Vec<PlaneWord>> {
        let root = self.check(e)?;
        if root == NodeId::FULL && min_len == 0 {
            return Err(Error::UnboundedDecomposition);
        }
        let mut out = Vec::new();
        let mut path: Vec<Symbol> = Vec::new();
        // (node, next child index to explore)
        let mut stack: Vec<(NodeId, usize)> = vec![(root, 0)];
        while let Some(top) = stack.last_mut() {
            let (id, next) = *top;
            match id {
                NodeId::EMPTY => {
                    stack.pop();
                    path.pop();
                }
                NodeId::FULL => {
                    emit_padded(&mut path, min_len, &mut out);
                    stack.pop();
                    path.pop();
                }
                _ if next == SYMBOL_COUNT => {
                    stack.pop();
                    path.pop();
                }
                _ => {
                    top.1 += 1;
                    let child = self.node(id).children[next];
                    if child != NodeId::EMPTY {
                        path.push(Symbol::new(next as u64).expect("index below 7"));
                        stack.push((child, 0));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn emit_padded(path: &mut Vec<Symbol>, min_len: usize, out: &mut Vec<PlaneWord>) {
    if path.len() >= min_len {
        out.push(PlaneWord::new(path.clone()).expect("non-empty path"));
        return;
    }
    for s in Symbol::all() {
        path.push(s);
        emit_padded(path, min_len, out);
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rational_from_ints;
    use crate::table::{row_from_weights, uniform_row};

    fn sym(i: u64) -> Symbol {
        Symbol::new(i).unwrap()
    }

    fn word(ix: &[u64]) -> PlaneWord {
        PlaneWord::from_indices(ix).unwrap()
    }

    #[test]
    fn terminals() {
        let mut a = EventArena::new();
        let t = StepProbabilityTable::uniform(1).unwrap();
        assert_eq!(a.measure(a.empty(), &t).unwrap(), Rational::zero());
        assert_eq!(a.measure(a.universe(), &t).unwrap(), Rational::one());
        let e = a.empty();
        assert_eq!(a.complement(e).unwrap(), a.universe());
    }

    #[test]
    fn plane_measure_is_product_of_entries() {
        let mut a = EventArena::new();
        let r0 = row_from_weights([0, 1, 0, 0, 0, 0, 1]).unwrap();
        let r1 = row_from_weights([1, 0, 1, 0, 0, 0, 1]).unwrap();
        let t = StepProbabilityTable::new(vec![r0, r1]).unwrap();
        let e = a.plane(&word(&[1, 2]));
        assert_eq!(a.measure(e, &t).unwrap(), rational_from_ints(1, 6));
    }

    #[test]
    fn hyperplane_at_zero_is_plane() {
        let mut a = EventArena::new();
        assert_eq!(a.hyperplane(0, sym(3)), a.plane(&word(&[3])));
    }

    #[test]
    fn hyperplane_expands_to_seven_planes() {
        let mut a = EventArena::new();
        let h = a.hyperplane(1, sym(5));
        let planes = a.to_disjoint_planes(h).unwrap();
        let expected: Vec<_> = (0..7).map(|i| word(&[i, 5])).collect();
        assert_eq!(planes, expected);
    }

    #[test]
    fn hyperplane_shares_levels() {
        let mut a = EventArena::new();
        a.hyperplane(40, sym(2));
        assert_eq!(a.node_count(), 41);
    }

    #[test]
    fn hyperplane_measure_is_table_entry() {
        let mut a = EventArena::new();
        let rows = (0..5u64)
            .map(|n| row_from_weights([1, n + 1, 2, 0, 3, n, 1]).unwrap())
            .collect();
        let t = StepProbabilityTable::new(rows).unwrap();
        for n in 0..5 {
            for i in Symbol::all() {
                let h = a.hyperplane(n, i);
                assert_eq!(&a.measure(h, &t).unwrap(), t.prob(n, i).unwrap());
            }
        }
    }

    #[test]
    fn set_operation_examples() {
        let mut a = EventArena::new();
        let p12 = a.plane(&word(&[1, 2]));
        let p1 = a.plane(&word(&[1]));
        let p3 = a.plane(&word(&[3]));
        assert_eq!(a.union(p12, p1).unwrap(), p1);
        assert_eq!(a.intersect(p12, p3).unwrap(), a.empty());

        let h = a.hyperplane(0, sym(3));
        let not_h = a.complement(h).unwrap();
        let t = StepProbabilityTable::uniform(1).unwrap();
        assert_eq!(a.measure(not_h, &t).unwrap(), rational_from_ints(6, 7));
    }

    #[test]
    fn uniform_plane_measure() {
        let mut a = EventArena::new();
        let e = a.plane(&word(&[0, 0]));
        let t = StepProbabilityTable::uniform(2).unwrap();
        assert_eq!(a.measure(e, &t).unwrap(), rational_from_ints(1, 49));
    }

    #[test]
    fn product_of_two_hyperplanes() {
        let mut a = EventArena::new();
        let rows = (0..4u64)
            .map(|n| row_from_weights([n, 1, 2, 3, 1, 1, n + 2]).unwrap())
            .collect();
        let t = StepProbabilityTable::new(rows).unwrap();
        let (k, l) = (sym(4), sym(6));
        let h1 = a.hyperplane(1, k);
        let h3 = a.hyperplane(3, l);
        let both = a.intersect(h1, h3).unwrap();
        let expected = t.prob(1, k).unwrap() * t.prob(3, l).unwrap();
        assert_eq!(a.measure(both, &t).unwrap(), expected);
    }

    #[test]
    fn depth_exceeding_table_errors() {
        let mut a = EventArena::new();
        let h = a.hyperplane(3, sym(0));
        let t = StepProbabilityTable::uniform(3).unwrap();
        assert_eq!(
            a.measure(h, &t),
            Err(Error::DepthExceedsTable { depth: 3, rows: 3 })
        );
        assert_eq!(a.constrained_depth(h).unwrap(), Some(3));
        assert_eq!(a.constrained_depth(a.universe()).unwrap(), None);
    }

    #[test]
    fn disjoint_plane_examples() {
        let mut a = EventArena::new();
        assert!(a.to_disjoint_planes(a.empty()).unwrap().is_empty());
        let p = a.plane(&word(&[2, 5]));
        assert_eq!(a.to_disjoint_planes(p).unwrap(), vec![word(&[2, 5])]);
        let p0 = a.plane(&word(&[0]));
        let c = a.complement(p0).unwrap();
        let expected: Vec<_> = (1..7).map(|i| word(&[i])).collect();
        assert_eq!(a.to_disjoint_planes(c).unwrap(), expected);
    }

    #[test]
    fn universe_needs_a_length() {
        let a = EventArena::new();
        assert_eq!(
            a.to_disjoint_planes(a.universe()),
            Err(Error::UnboundedDecomposition)
        );
        let planes = a.to_disjoint_planes_padded(a.universe(), 2).unwrap();
        assert_eq!(planes.len(), 49);
        assert_eq!(planes[0], word(&[0, 0]));
        assert_eq!(planes[48], word(&[6, 6]));
    }

    #[test]
    fn cross_arena_is_an_error() {
        let mut a = EventArena::new();
        let mut b = EventArena::new();
        let x = a.hyperplane(0, sym(1));
        let y = b.hyperplane(0, sym(1));
        assert_eq!(a.union(x, y), Err(Error::ArenaMismatch));
        assert_eq!(
            b.measure(x, &StepProbabilityTable::uniform(1).unwrap()),
            Err(Error::ArenaMismatch)
        );
    }

    #[test]
    fn covering_by_first_coordinate() {
        let mut a = EventArena::new();
        let mut acc = a.empty();
        for i in Symbol::all() {
            let h = a.hyperplane(0, i);
            acc = a.union(acc, h).unwrap();
        }
        assert!(acc.is_universe());
    }

    #[test]
    fn contains_walks_prefix() {
        let mut a = EventArena::new();
        let h = a.hyperplane(2, sym(4));
        assert_eq!(a.contains(h, &[sym(0), sym(1)]).unwrap(), None);
        assert_eq!(a.contains(h, &[sym(0), sym(1), sym(4)]).unwrap(), Some(true));
        assert_eq!(a.contains(h, &[sym(0), sym(1), sym(3)]).unwrap(), Some(false));
    }

    #[test]
    fn deep_hyperplane_operations_do_not_recurse() {
        let mut a = EventArena::new();
        let h = a.hyperplane(20_000, sym(1));
        let g = a.hyperplane(20_000, sym(2));
        let u = a.union(h, g).unwrap();
        let c = a.complement(u).unwrap();
        let t = StepProbabilityTable::constant(uniform_row(), 20_001).unwrap();
        assert_eq!(a.measure(c, &t).unwrap(), rational_from_ints(5, 7));
    }

    #[test]
    fn arena_is_shareable() {
        fn assert_sync<T: Send + Sync>() {}
        assert_sync::<EventArena>();
    }
}
