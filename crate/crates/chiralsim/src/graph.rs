//! Spectral-graph controllability analysis.
//!
//! Nodes are the ro-vibrational eigenstates, edges the nonzero transition
//! matrix elements of the control Hamiltonians (plus, in static-field
//! scenarios, the first-order couplings between field-dressed states,
//! tagged `order = 1`).
//!
//! Two edges are *coupled* by a control when both belong to it and have
//! equal energy gaps — such transitions cannot be driven separately by
//! that field. An edge is addressable once some effective control contains
//! it with no equal-gap companion; effective controls beyond the original
//! ones are generated by graphical commutators: the commutator of a
//! single-edge matrix `(n,m)` with a control containing `(n,k)` carries the
//! edge `(m,k)`. The closure repeatedly derives such commutator controls
//! from already-addressable edges, recording every derivation so a
//! certificate can be replayed independently.
//!
//! The verdict `Controllable` is a sufficient condition: it requires a
//! connected spanning set of addressable edges. Failure reports
//! `NotProven`, never "uncontrollable".
//!
//! For purely rotational (microwave) controls the M-degenerate partner
//! edges can never be separated at the edge-set level; when the control
//! set spans x, y and z polarizations and the molecule has two orthogonal
//! permanent-dipole components, the asymmetric-top controllability theorem
//! guarantees the rotational subsystem is controllable within each
//! vibrational block. The certificate records this as an explicit grant:
//! same-block M-partner couplings of rotational edges are treated as
//! resolved by the theorem, while cross-block (ν-twin) couplings must
//! still be broken by commutator derivations.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex64;

use crate::angmom::Polarization;
use crate::rovib::{
    field_dressed_coupling, ControlBlock, ControlHamiltonian, DipoleSet, RoVibBasis,
    StaticField,
};

/// Gap tolerance for coupled-pair detection, units of B.
pub const GAP_TOL: f64 = 1e-9;
/// Default amplitude threshold below which elements are treated as zero.
pub const AMP_TOL: f64 = 1e-12;

/// Canonical unordered node pair (m < k).
pub type Pair = (usize, usize);

fn canon(a: usize, b: usize) -> Pair {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Descriptor of one control field in the graph.
#[derive(Debug, Clone)]
pub struct ControlDescriptor {
    pub name: String,
    pub polarization: Polarization,
    pub block: ControlBlock,
}

/// Edge status assigned by [`decide_controllability`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeStatus {
    /// Not (yet) separable from an equal-gap companion.
    Coupled,
    /// Gap-isolated within the original control `control`.
    Uncoupled { control: usize },
    /// Separable through the derived commutator control `derived` (possibly
    /// together with the rotational-subsystem grant).
    Decoupled { derived: usize },
}

/// One transition edge of the spectral graph.
#[derive(Debug, Clone)]
pub struct TransitionEdge {
    pub nodes: Pair,
    pub control: usize,
    /// |E_m − E_k| in units of B (bare energies).
    pub gap: f64,
    /// 0 = bare element, 1 = first order in the static field.
    pub order: u8,
    pub amplitude: Complex64,
}

/// The spectral graph of one control scenario.
#[derive(Debug, Clone)]
pub struct SpectralGraph {
    pub n_nodes: usize,
    pub n_rot: usize,
    pub node_labels: Vec<String>,
    pub energies: Vec<f64>,
    pub controls: Vec<ControlDescriptor>,
    pub edges: Vec<TransitionEdge>,
    /// Unordered pair sets per control.
    pub control_pairs: Vec<BTreeSet<Pair>>,
    /// Molecule admits the rotational-subsystem controllability theorem
    /// (two orthogonal permanent-dipole components, two consecutive J).
    pub rotor_grant_eligible: bool,
}

/// Build the graph from a basis and a list of controls. With
/// `dressed: Some(field)` the vibrational controls also contribute
/// first-order edges between field-dressed states.
pub fn build_graph(
    basis: &RoVibBasis,
    dipoles: &DipoleSet,
    controls: &[ControlHamiltonian],
    amplitude_tol: f64,
    dressed: Option<&StaticField>,
) -> SpectralGraph {
    assert!(!controls.is_empty(), "graph needs at least one control");
    let n = basis.len();
    let n_rot = basis.n_rot;
    let mut edges = Vec::new();
    let mut control_pairs = Vec::new();
    for (ci, ctrl) in controls.iter().enumerate() {
        let mut pairs = BTreeSet::new();
        for e in &ctrl.elements {
            if e.value.norm() <= amplitude_tol {
                continue;
            }
            let p = canon(e.bra, e.ket);
            if pairs.insert(p) {
                edges.push(TransitionEdge {
                    nodes: p,
                    control: ci,
                    gap: (basis.energies[p.0] - basis.energies[p.1]).abs(),
                    order: 0,
                    amplitude: e.value,
                });
            }
        }
        if let Some(field) = dressed {
            if ctrl.block == ControlBlock::Vibrational && field.epsilon != 0.0 {
                for i in 0..n_rot {
                    for j in n_rot..n {
                        let p = canon(i, j);
                        if pairs.contains(&p) {
                            continue;
                        }
                        let v =
                            field_dressed_coupling(basis, j, i, ctrl, field.epsilon, field);
                        if v.norm() > amplitude_tol {
                            pairs.insert(p);
                            edges.push(TransitionEdge {
                                nodes: p,
                                control: ci,
                                gap: (basis.energies[i] - basis.energies[j]).abs(),
                                order: 1,
                                amplitude: v,
                            });
                        }
                    }
                }
            }
        }
        control_pairs.push(pairs);
    }
    SpectralGraph {
        n_nodes: n,
        n_rot,
        node_labels: (0..n).map(|i| basis.state_label(i)).collect(),
        energies: basis.energies.clone(),
        controls: controls
            .iter()
            .map(|c| ControlDescriptor {
                name: c.name.clone(),
                polarization: c.polarization,
                block: c.block,
            })
            .collect(),
        edges,
        control_pairs,
        rotor_grant_eligible: dipoles.mu_a_perm != 0.0
            && dipoles.mu_b_perm != 0.0
            && basis.jmax >= 1,
    }
}

/// Pairs of edge indices coupled by a shared control (equal gaps within
/// [`GAP_TOL`]).
pub fn find_coupled_pairs(graph: &SpectralGraph) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in graph.edges.iter().enumerate() {
        for (j, b) in graph.edges.iter().enumerate().skip(i + 1) {
            if a.nodes == b.nodes {
                continue;
            }
            let share = graph.control_pairs[a.control].contains(&b.nodes)
                || graph.control_pairs[b.control].contains(&a.nodes);
            if share && (a.gap - b.gap).abs() < GAP_TOL {
                out.push((i, j));
            }
        }
    }
    out
}

/// Graphical commutator of two edges sharing exactly one node.
pub fn graphical_commutator(a: Pair, b: Pair) -> Option<Pair> {
    if canon(a.0, a.1) == canon(b.0, b.1) {
        return None;
    }
    let shared: Vec<usize> = [a.0, a.1]
        .iter()
        .filter(|&&x| x == b.0 || x == b.1)
        .copied()
        .collect();
    if shared.len() != 1 {
        return None;
    }
    let n = shared[0];
    let m = if a.0 == n { a.1 } else { a.0 };
    let k = if b.0 == n { b.1 } else { b.0 };
    if m == k {
        None
    } else {
        Some(canon(m, k))
    }
}

/// Reference to an effective control (original or derived).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ControlRef {
    Original(usize),
    Derived(usize),
}

/// One derived commutator control: the commutator of the single-edge
/// matrix on `seed` with the base control, represented by its edge set.
#[derive(Debug, Clone)]
pub struct DerivedControl {
    pub id: usize,
    pub seed: Pair,
    pub base: ControlRef,
    pub pairs: BTreeSet<Pair>,
}

/// Why an edge is addressable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Justification {
    /// Gap-isolated within the original control.
    Uncoupled { control: usize },
    /// Gap-isolated within a derived control (equal-gap companions, if
    /// any, resolved by the rotational grant).
    Derived { derived: usize },
}

/// A member of the spanning set.
#[derive(Debug, Clone)]
pub struct SpanningMember {
    pub pair: Pair,
    /// Whether the pair is a physical transition of some original control.
    pub physical: bool,
    pub justification: Justification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Controllable,
    NotProven(String),
}

/// Record of the rotational-subsystem grant.
#[derive(Debug, Clone)]
pub struct RotorGrant {
    /// Original rotational controls providing the x, y, z polarizations.
    pub rotational_controls: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ControllabilityCertificate {
    pub verdict: Verdict,
    pub spanning: Vec<SpanningMember>,
    pub derived: Vec<DerivedControl>,
    pub grant: Option<RotorGrant>,
    /// Status per graph edge, aligned with `graph.edges`.
    pub edge_statuses: Vec<EdgeStatus>,
}

const MAX_DERIVED: usize = 60_000;
const MAX_COMBOS: usize = 4_000_000;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        if self.0[x] != x {
            let r = self.find(self.0[x]);
            self.0[x] = r;
            r
        } else {
            x
        }
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            false
        } else {
            self.0[ra] = rb;
            true
        }
    }
}

struct Closure<'g> {
    graph: &'g SpectralGraph,
    grant: Option<RotorGrant>,
    /// Physical rotational pairs with both endpoints in the same
    /// vibrational block (the grant's scope).
    rot_physical: BTreeSet<Pair>,
}

impl<'g> Closure<'g> {
    fn new(graph: &'g SpectralGraph) -> Self {
        let mut rot_physical = BTreeSet::new();
        for (ci, c) in graph.controls.iter().enumerate() {
            if c.block == ControlBlock::Rotational {
                for &p in &graph.control_pairs[ci] {
                    if (p.0 < graph.n_rot) == (p.1 < graph.n_rot) {
                        rot_physical.insert(p);
                    }
                }
            }
        }
        let mut pols = BTreeSet::new();
        let mut rot_controls = Vec::new();
        for (ci, c) in graph.controls.iter().enumerate() {
            if c.block == ControlBlock::Rotational {
                rot_controls.push(ci);
                pols.insert(c.polarization.label());
            }
        }
        let grant = if graph.rotor_grant_eligible
            && pols.contains("x")
            && pols.contains("y")
            && pols.contains("z")
        {
            Some(RotorGrant {
                rotational_controls: rot_controls,
            })
        } else {
            None
        };
        Closure {
            graph,
            grant,
            rot_physical,
        }
    }

    fn gap(&self, p: Pair) -> f64 {
        (self.graph.energies[p.0] - self.graph.energies[p.1]).abs()
    }

    /// Couplings between two rotational edges of the *same* vibrational
    /// block are resolved by the theorem when the grant is active. An edge
    /// and its ν-twin live in different blocks and stay coupled until a
    /// commutator derivation separates them.
    fn granted_pair(&self, a: Pair, b: Pair) -> bool {
        let block = |p: Pair| usize::from(p.0 >= self.graph.n_rot);
        self.grant.is_some()
            && self.rot_physical.contains(&a)
            && self.rot_physical.contains(&b)
            && block(a) == block(b)
    }

    /// Edge `e` is addressable within the effective control `set` when
    /// every equal-gap companion is resolved by the grant.
    fn isolated(&self, e: Pair, set: &BTreeSet<Pair>) -> Option<bool> {
        if !set.contains(&e) {
            return None;
        }
        let ge = self.gap(e);
        for &f in set {
            if f == e {
                continue;
            }
            if (self.gap(f) - ge).abs() < GAP_TOL && !self.granted_pair(e, f) {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Edge set of the commutator of the single-edge matrix on `seed` with
    /// the control given by `set`.
    fn commutator_pairs(&self, seed: Pair, set: &BTreeSet<Pair>) -> BTreeSet<Pair> {
        let (n, m) = seed;
        let mut out = BTreeSet::new();
        for &(a, b) in set {
            for (x, other) in [(n, m), (m, n)] {
                let y = if a == x {
                    Some(b)
                } else if b == x {
                    Some(a)
                } else {
                    None
                };
                if let Some(y) = y {
                    if y != other && y != x {
                        out.insert(canon(other, y));
                    }
                }
            }
        }
        out
    }
}

/// Decide controllability by commutator closure over addressable edges.
pub fn decide_controllability(graph: &SpectralGraph) -> ControllabilityCertificate {
    let cl = Closure::new(graph);
    let mut uf = UnionFind::new(graph.n_nodes);
    let mut addressable: BTreeMap<Pair, Justification> = BTreeMap::new();
    let mut spanning: Vec<SpanningMember> = Vec::new();
    let mut derived: Vec<DerivedControl> = Vec::new();
    let mut signatures: BTreeSet<Vec<Pair>> = BTreeSet::new();
    let mut combos: VecDeque<(Pair, ControlRef)> = VecDeque::new();
    let mut combos_done: BTreeSet<(Pair, ControlRef)> = BTreeSet::new();
    let mut n_components = graph.n_nodes;

    let physical = |p: Pair| graph.control_pairs.iter().any(|s| s.contains(&p));

    // seed: edges gap-isolated within an original control
    let mut newly: Vec<(Pair, Justification)> = Vec::new();
    for (ci, set) in graph.control_pairs.iter().enumerate() {
        for &e in set {
            if newly.iter().any(|(p, _)| *p == e) {
                continue;
            }
            if cl.isolated(e, set) == Some(true) {
                newly.push((e, Justification::Uncoupled { control: ci }));
            }
        }
    }

    let mut budget = MAX_COMBOS;
    loop {
        // absorb newly addressable edges
        for (e, just) in newly.drain(..) {
            if addressable.contains_key(&e) {
                continue;
            }
            addressable.insert(e, just);
            if uf.union(e.0, e.1) {
                n_components -= 1;
                spanning.push(SpanningMember {
                    pair: e,
                    physical: physical(e),
                    justification: just,
                });
            }
            for ci in 0..graph.controls.len() {
                combos.push_back((e, ControlRef::Original(ci)));
            }
            for d in &derived {
                combos.push_back((e, ControlRef::Derived(d.id)));
            }
        }
        if n_components == 1 {
            break;
        }
        let Some((seed, base)) = combos.pop_front() else {
            break;
        };
        if budget == 0 || derived.len() >= MAX_DERIVED {
            break;
        }
        budget -= 1;
        if !combos_done.insert((seed, base)) {
            continue;
        }
        let base_set = match base {
            ControlRef::Original(i) => &graph.control_pairs[i],
            ControlRef::Derived(i) => &derived[i].pairs,
        };
        let pairs = cl.commutator_pairs(seed, base_set);
        if pairs.is_empty() {
            continue;
        }
        let sig: Vec<Pair> = pairs.iter().copied().collect();
        if !signatures.insert(sig) {
            continue;
        }
        let id = derived.len();
        for &e in &pairs {
            if !addressable.contains_key(&e) && cl.isolated(e, &pairs) == Some(true) {
                newly.push((e, Justification::Derived { derived: id }));
            }
        }
        for &e in addressable.keys() {
            combos.push_back((e, ControlRef::Derived(id)));
        }
        derived.push(DerivedControl {
            id,
            seed,
            base,
            pairs,
        });
    }

    let verdict = if n_components == 1 {
        Verdict::Controllable
    } else {
        let connected_by_any = {
            let mut uf2 = UnionFind::new(graph.n_nodes);
            let mut comps = graph.n_nodes;
            for e in &graph.edges {
                if uf2.union(e.nodes.0, e.nodes.1) {
                    comps -= 1;
                }
            }
            comps == 1
        };
        if connected_by_any {
            Verdict::NotProven(format!(
                "commutator closure left {n_components} components of addressable edges"
            ))
        } else {
            Verdict::NotProven("graph is disconnected".into())
        }
    };

    let edge_statuses = graph
        .edges
        .iter()
        .map(|e| match addressable.get(&e.nodes) {
            Some(Justification::Uncoupled { control }) => EdgeStatus::Uncoupled {
                control: *control,
            },
            Some(Justification::Derived { derived }) => EdgeStatus::Decoupled {
                derived: *derived,
            },
            None => EdgeStatus::Coupled,
        })
        .collect();

    ControllabilityCertificate {
        verdict,
        spanning,
        derived,
        grant: cl.grant,
        edge_statuses,
    }
}

/// Re-validate a certificate against its graph: replays every derivation,
/// re-checks each spanning member's isolation and the connectivity of the
/// spanning set.
pub fn replay_certificate(
    graph: &SpectralGraph,
    cert: &ControllabilityCertificate,
) -> std::result::Result<(), String> {
    let cl = Closure::new(graph);
    if cert.grant.is_some() && cl.grant.is_none() {
        return Err("certificate claims an ineligible grant".into());
    }
    // replay derivations in order
    let mut replayed: Vec<BTreeSet<Pair>> = Vec::new();
    for d in &cert.derived {
        let base_set = match d.base {
            ControlRef::Original(i) => graph
                .control_pairs
                .get(i)
                .ok_or_else(|| format!("derived {} references missing control {i}", d.id))?,
            ControlRef::Derived(i) => replayed
                .get(i)
                .ok_or_else(|| format!("derived {} references later derivation {i}", d.id))?,
        };
        let pairs = cl.commutator_pairs(d.seed, base_set);
        if pairs != d.pairs {
            return Err(format!("derived control {} does not replay", d.id));
        }
        replayed.push(pairs);
    }
    // spanning members: isolation within their recorded control
    for m in &cert.spanning {
        let ok = match m.justification {
            Justification::Uncoupled { control } => graph
                .control_pairs
                .get(control)
                .and_then(|s| cl.isolated(m.pair, s)),
            Justification::Derived { derived } => replayed
                .get(derived)
                .and_then(|s| cl.isolated(m.pair, s)),
        };
        if ok != Some(true) {
            return Err(format!(
                "spanning edge {:?} is not isolated in its recorded control",
                m.pair
            ));
        }
    }
    if cert.verdict == Verdict::Controllable {
        let mut uf = UnionFind::new(graph.n_nodes);
        let mut comps = graph.n_nodes;
        for m in &cert.spanning {
            if uf.union(m.pair.0, m.pair.1) {
                comps -= 1;
            }
        }
        if comps != 1 {
            return Err(format!("spanning set leaves {comps} components"));
        }
    }
    Ok(())
}
