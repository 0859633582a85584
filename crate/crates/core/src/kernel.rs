//! Edge isomorphism classes, the automorphism kernel constraint and its
//! nullspace, and transport of class kernels to member edges.
//!
//! Vectorization is row-major: `vec(k)[r * cols + c] = k[r][c]`, so that
//! `vec(A k B) = (A ⊗ Bᵀ) vec(k)`.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    automorphism_generators, canonical_form_marked, AutGenerators, CanonicalEncoding, ConcreteGraph, GraphIso, NodeId, Perm,
    DEFAULT_GROUP_CAP,
};
use crate::graph::group::closure;
use crate::neighbourhood::{ball, edge_neighbourhood, EdgeNeighbourhood, NeighbourhoodAssignment};
use crate::rep::{RepKind, RepSpec};

/// Relative singular-value threshold below which a direction counts as
/// part of the nullspace.
pub const NULLSPACE_TOL: f64 = 1e-8;

/// One edge of the corpus inside a class.
#[derive(Clone, Debug)]
pub struct ClassMember {
    pub graph: usize,
    pub edge: (NodeId, NodeId),
    /// Marked-edge isomorphism from the representative to this member's
    /// edge neighbourhood.
    pub transport: GraphIso,
}

/// Edges whose marked edge neighbourhoods are isomorphic.
#[derive(Clone, Debug)]
pub struct EdgeClass {
    pub representative: EdgeNeighbourhood,
    pub encoding: CanonicalEncoding,
    pub members: Vec<ClassMember>,
    /// Automorphisms of the representative fixing `p` and `q`.
    pub aut: AutGenerators,
    hops: usize,
    /// Canonical order of the representative.
    order: Vec<usize>,
}

/// Which member becomes the representative of a class. The canonical
/// encoding is shared by all members, so this is only a tie-break.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Representative {
    #[default]
    First,
    Last,
}

/// Canonical data for one marked edge neighbourhood.
struct Keyed {
    nb: EdgeNeighbourhood,
    encoding: CanonicalEncoding,
    order: Vec<usize>,
}

fn keyed(g: &ConcreteGraph, p: NodeId, q: NodeId, a: &NeighbourhoodAssignment) -> Result<Keyed> {
    let nb = edge_neighbourhood(g, p, q, a)?;
    let cf = canonical_form_marked(&nb.graph, &[p, q])?;
    Ok(Keyed {
        encoding: cf.encoding().clone(),
        order: cf.order().to_vec(),
        nb,
    })
}

/// Transport between two neighbourhoods with equal canonical encodings.
fn transport(from: &Keyed, to: &Keyed) -> Result<GraphIso> {
    let mut image = vec![0; from.order.len()];
    for (&a, &b) in from.order.iter().zip(&to.order) {
        image[a] = b;
    }
    let t = GraphIso::from_index_map(from.nb.graph.clone(), to.nb.graph.clone(), &image)?;
    debug_assert!(t.validate()? && t.apply(from.nb.marked.0) == Some(to.nb.marked.0));
    Ok(t)
}

impl EdgeClass {
    fn build(members: Vec<(usize, Keyed)>, rep: Representative, hops: usize) -> Result<Self> {
        let ri = match rep {
            Representative::First => 0,
            Representative::Last => members.len() - 1,
        };
        let r = &members[ri].1;
        let mut out = Vec::with_capacity(members.len());
        for (gi, m) in &members {
            out.push(ClassMember {
                graph: *gi,
                edge: m.nb.marked,
                transport: transport(r, m)?,
            });
        }
        let (p, q) = r.nb.marked;
        Ok(EdgeClass {
            aut: automorphism_generators(&r.nb.graph, &[p, q])?,
            representative: r.nb.clone(),
            encoding: r.encoding.clone(),
            members: out,
            hops,
            order: r.order.clone(),
        })
    }

    /// A single-member class for one edge neighbourhood.
    pub fn singleton(nb: EdgeNeighbourhood, hops: usize) -> Result<Self> {
        let (p, q) = nb.marked;
        let cf = canonical_form_marked(&nb.graph, &[p, q])?;
        let k = Keyed {
            encoding: cf.encoding().clone(),
            order: cf.order().to_vec(),
            nb,
        };
        EdgeClass::build(vec![(0, k)], Representative::First, hops)
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    /// Positions (in the representative) of `G_p` and `G_q`.
    pub fn endpoint_balls(&self) -> (Vec<usize>, Vec<usize>) {
        let g = &self.representative.graph;
        let (p, q) = self.representative.marked;
        let ip = g.index_of(p).expect("marked");
        let iq = g.index_of(q).expect("marked");
        (ball(g, &[ip], self.hops), ball(g, &[iq], self.hops))
    }

    /// Every automorphism of the representative fixing `p` and `q`, as
    /// position permutations, identity first.
    pub fn group(&self) -> Result<Vec<Perm>> {
        closure(self.representative.graph.node_count(), self.aut.perms(), DEFAULT_GROUP_CAP)
    }

    pub fn member(&self, graph: usize, edge: (NodeId, NodeId)) -> Option<&ClassMember> {
        self.members.iter().find(|m| m.graph == graph && m.edge == edge)
    }
}

/// Position map of a permutation restricted to a ball it preserves.
fn restrict_perm(perm: &[usize], ball: &[usize]) -> Vec<usize> {
    ball.iter()
        .map(|&u| ball.binary_search(&perm[u]).expect("automorphism fixing the marked edge preserves endpoint balls"))
        .collect()
}

/// Position maps `(χ_p, χ_q)` for an automorphism of the representative.
pub fn endpoint_maps(class: &EdgeClass, chi: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let (bp, bq) = class.endpoint_balls();
    (restrict_perm(chi, &bp), restrict_perm(chi, &bq))
}

/// Partition of every directed edge of the corpus into classes, in order of
/// first appearance.
pub fn classify_edges(corpus: &[ConcreteGraph], a: &NeighbourhoodAssignment) -> Result<Vec<EdgeClass>> {
    classify_edges_with(corpus, a, Representative::First)
}

pub fn classify_edges_with(corpus: &[ConcreteGraph], a: &NeighbourhoodAssignment, rep: Representative) -> Result<Vec<EdgeClass>> {
    let mut index: HashMap<CanonicalEncoding, usize> = HashMap::new();
    let mut groups: Vec<Vec<(usize, Keyed)>> = Vec::new();
    for (gi, g) in corpus.iter().enumerate() {
        for (p, q) in g.edges() {
            let k = keyed(g, p, q, a)?;
            let slot = *index.entry(k.encoding.clone()).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[slot].push((gi, k));
        }
    }
    groups.into_iter().map(|m| EdgeClass::build(m, rep, a.hops)).collect()
}

/// Permutation matrix sending entry `i` to `perm[i]`.
fn perm_matrix(perm: &[usize]) -> DMatrix<f64> {
    let n = perm.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        m[(j, i)] = 1.0;
    }
    m
}

/// Constraint block `ρ′(χ_q) ⊗ I − I ⊗ ρ(χ_p)ᵀ` for one automorphism.
fn constraint_block(rho: &RepSpec, rho_out: &RepSpec, mp: &[usize], mq: &[usize]) -> DMatrix<f64> {
    let a = perm_matrix(&rho_out.index_perm(mq));
    let b = perm_matrix(&rho.index_perm(mp));
    let (dq, dp) = (a.nrows(), b.nrows());
    a.kronecker(&DMatrix::identity(dp, dp)) - DMatrix::<f64>::identity(dq, dq).kronecker(&b.transpose())
}

/// The stacked system `L vec(k) = 0` over every non-identity automorphism of
/// the class. Zero rows when the group is trivial.
pub fn constraint_matrix(class: &EdgeClass, rho: &RepSpec, rho_out: &RepSpec) -> Result<DMatrix<f64>> {
    let group = class.group()?;
    let (bp, bq) = class.endpoint_balls();
    let cols = rho_out.dim(bq.len()) * rho.dim(bp.len());
    let blocks: Vec<DMatrix<f64>> = group
        .iter()
        .filter(|g| !g.is_identity())
        .map(|g| constraint_block(rho, rho_out, &restrict_perm(g.as_slice(), &bp), &restrict_perm(g.as_slice(), &bq)))
        .collect();
    let mut l = DMatrix::zeros(blocks.len() * cols, cols);
    for (i, b) in blocks.iter().enumerate() {
        l.view_mut((i * cols, 0), (cols, cols)).copy_from(b);
    }
    Ok(l)
}

/// Orthonormal nullspace basis of one kind pair for one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBasis {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols` matrices, orthonormal under the Frobenius
    /// inner product.
    pub basis: Vec<Vec<f64>>,
}

impl KernelBasis {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.basis[i])
    }
}

/// Nullspace of `L` via a QR-compressed SVD, with `L` given as a stream of
/// row blocks of width `n`.
fn nullspace(n: usize, blocks: impl Iterator<Item = DMatrix<f64>>) -> Vec<Vec<f64>> {
    let mut r = DMatrix::<f64>::zeros(0, n);
    let mut pending: Vec<DMatrix<f64>> = Vec::new();
    let mut pending_rows = 0;
    let compress = |r: &mut DMatrix<f64>, pending: &mut Vec<DMatrix<f64>>| {
        let rows = r.nrows() + pending.iter().map(|b| b.nrows()).sum::<usize>();
        let mut m = DMatrix::zeros(rows, n);
        m.view_mut((0, 0), (r.nrows(), n)).copy_from(r);
        let mut at = r.nrows();
        for b in pending.drain(..) {
            m.view_mut((at, 0), (b.nrows(), n)).copy_from(&b);
            at += b.nrows();
        }
        *r = if rows > n { m.qr().r() } else { m };
    };
    for b in blocks {
        pending_rows += b.nrows();
        pending.push(b);
        if pending_rows >= 2 * n.max(1) {
            compress(&mut r, &mut pending);
            pending_rows = 0;
        }
    }
    if !pending.is_empty() {
        compress(&mut r, &mut pending);
    }
    if r.nrows() == 0 {
        return (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    // pad to square so the SVD returns a full right-singular basis
    let mut sq = DMatrix::zeros(n, n);
    let k = r.nrows().min(n);
    sq.view_mut((0, 0), (k, n)).copy_from(&r.rows(0, k));
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let tol = NULLSPACE_TOL * smax;
    let mut out: Vec<(usize, Vec<f64>)> = (0..n)
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| (i, vt.row(i).iter().copied().collect()))
        .collect();
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, v)| v).collect()
}

/// Nullspace basis of the class constraint for reps `rho → rho_out`.
pub fn solve_basis(class: &EdgeClass, rho: &RepSpec, rho_out: &RepSpec) -> Result<KernelBasis> {
    let group = class.group()?;
    let (bp, bq) = class.endpoint_balls();
    let (rows, cols) = (rho_out.dim(bq.len()), rho.dim(bp.len()));
    let block_of = |g: &Perm| constraint_block(rho, rho_out, &restrict_perm(g.as_slice(), &bp), &restrict_perm(g.as_slice(), &bq));
    let basis = nullspace(rows * cols, group.iter().filter(|g| !g.is_identity()).map(block_of));
    debug_assert_eq!(
        basis.len(),
        nullspace(rows * cols, class.aut.perms().iter().map(block_of)).len(),
        "generator-only constraint disagrees with the full group"
    );
    Ok(KernelBasis { rows, cols, basis })
}

/// Residual `max_χ ‖ρ′(χ_q) k − k ρ(χ_p)‖_F` of a kernel over the class group.
pub fn constraint_residual(class: &EdgeClass, rho: &RepSpec, rho_out: &RepSpec, k: &DMatrix<f64>) -> Result<f64> {
    let (bp, bq) = class.endpoint_balls();
    let mut worst: f64 = 0.0;
    for g in class.group()? {
        let a = perm_matrix(&rho_out.index_perm(&restrict_perm(g.as_slice(), &bq)));
        let b = perm_matrix(&rho.index_perm(&restrict_perm(g.as_slice(), &bp)));
        worst = worst.max((&a * k - k * &b).norm());
    }
    Ok(worst)
}

/// Kernel weights of one class: a basis per (input field kind, output field
/// kind) pair and coefficients per (input field channel, output field
/// channel).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassKernel {
    pub encoding: CanonicalEncoding,
    pub np: usize,
    pub nq: usize,
    /// Indexed `[out_field * in_fields + in_field]`.
    pub bases: Vec<KernelBasis>,
    /// Same indexing; each holds `out_ch * in_ch * rank` coefficients laid
    /// out `[(b * in_ch + a) * rank + r]`.
    pub weights: Vec<Vec<f64>>,
}

impl ClassKernel {
    /// Solves all kind pairs and draws weights from `rng` (uniform, scaled
    /// by the number of summed terms).
    pub fn solve(class: &EdgeClass, rho: &RepSpec, rho_out: &RepSpec, rng: &mut impl Rng) -> Result<Self> {
        let mut cache: HashMap<(RepKind, RepKind), KernelBasis> = HashMap::new();
        let mut bases = Vec::new();
        let mut weights = Vec::new();
        let fan_in: usize = rho.fields().iter().map(|f| f.channels).sum();
        for fo in rho_out.fields() {
            for fi in rho.fields() {
                let key = (fi.kind, fo.kind);
                let b = match cache.entry(key) {
                    Entry::Occupied(e) => e.get().clone(),
                    Entry::Vacant(e) => e
                        .insert(solve_basis(class, &RepSpec::new(vec![single(fi.kind)])?, &RepSpec::new(vec![single(fo.kind)])?)?)
                        .clone(),
                };
                let scale = (3.0 / (fan_in * b.rank().max(1)) as f64).sqrt();
                weights.push((0..fi.channels * fo.channels * b.rank()).map(|_| rng.random_range(-scale..scale)).collect());
                bases.push(b);
            }
        }
        let (bp, bq) = class.endpoint_balls();
        Ok(ClassKernel {
            encoding: class.encoding.clone(),
            np: bp.len(),
            nq: bq.len(),
            bases,
            weights,
        })
    }

    /// The representative's kernel as a dense `dim ρ′(G_q) × dim ρ(G_p)`
    /// matrix.
    pub fn matrix(&self, rho: &RepSpec, rho_out: &RepSpec) -> DMatrix<f64> {
        let (rows, cols) = (rho_out.dim(self.nq), rho.dim(self.np));
        let mut k = DMatrix::zeros(rows, cols);
        let off_in = rho.offsets(self.np);
        let off_out = rho_out.offsets(self.nq);
        let nin = rho.fields().len();
        for (j, fo) in rho_out.fields().iter().enumerate() {
            for (i, fi) in rho.fields().iter().enumerate() {
                let basis = &self.bases[j * nin + i];
                let w = &self.weights[j * nin + i];
                let rank = basis.rank();
                for b in 0..fo.channels {
                    for a in 0..fi.channels {
                        for (r, m) in basis.basis.iter().enumerate() {
                            let c = w[(b * fi.channels + a) * rank + r];
                            for s in 0..basis.rows {
                                for t in 0..basis.cols {
                                    let row = off_out[j] + s * fo.channels + b;
                                    let col = off_in[i] + t * fi.channels + a;
                                    k[(row, col)] += c * m[s * basis.cols + t];
                                }
                            }
                        }
                    }
                }
            }
        }
        k
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }
}

fn single(kind: RepKind) -> crate::rep::RepField {
    crate::rep::RepField { kind, channels: 1 }
}

/// `ρ′(ψ_q) k ρ(ψ_p)⁻¹` for a transport `ψ` out of the class representative.
pub fn transport_kernel(class: &EdgeClass, rho: &RepSpec, rho_out: &RepSpec, k: &DMatrix<f64>, psi: &GraphIso) -> Result<DMatrix<f64>> {
    let (pp, pq) = transport_perms(class, rho, rho_out, psi)?;
    let mut out = DMatrix::zeros(k.nrows(), k.ncols());
    for r in 0..k.nrows() {
        for c in 0..k.ncols() {
            out[(pq[r], pp[c])] = k[(r, c)];
        }
    }
    Ok(out)
}

/// Index permutations of `ρ(ψ_p)` and `ρ′(ψ_q)` for a transport out of the
/// representative.
pub fn transport_perms(class: &EdgeClass, rho: &RepSpec, rho_out: &RepSpec, psi: &GraphIso) -> Result<(Vec<usize>, Vec<usize>)> {
    if psi.source() != &class.representative.graph {
        return Err(Error::InvalidIso("transport does not start at the representative".into()));
    }
    let (bp, bq) = class.endpoint_balls();
    let dst = psi.target();
    let imap = psi.index_map()?;
    let (p, q) = class.representative.marked;
    let tp = dst.require_index(psi.apply(p).ok_or(Error::UnknownNode(p))?)?;
    let tq = dst.require_index(psi.apply(q).ok_or(Error::UnknownNode(q))?)?;
    let local = |src_ball: &[usize], centre: usize| -> Result<Vec<usize>> {
        let to = ball(dst, &[centre], class.hops);
        src_ball
            .iter()
            .map(|&u| to.binary_search(&imap[u]).map_err(|_| Error::InvalidIso("transport leaves the endpoint ball".into())))
            .collect()
    };
    Ok((rho.index_perm(&local(&bp, tp)?), rho_out.index_perm(&local(&bq, tq)?)))
}

/// Classes plus solved kernels for one `ρ → ρ′` layer, with lookup by
/// canonical encoding of the marked edge neighbourhood.
#[derive(Clone, Debug)]
pub struct SharedKernel {
    pub rho: RepSpec,
    pub rho_out: RepSpec,
    pub assignment: NeighbourhoodAssignment,
    pub seed: u64,
    classes: Vec<EdgeClass>,
    kernels: Vec<ClassKernel>,
    index: HashMap<CanonicalEncoding, usize>,
}

/// A resolved edge: its class and the transport from the representative.
#[derive(Clone, Debug)]
pub struct EdgeRef {
    pub class: usize,
    pub transport: GraphIso,
}

impl SharedKernel {
    pub fn new(rho: RepSpec, rho_out: RepSpec, assignment: NeighbourhoodAssignment, seed: u64) -> Self {
        SharedKernel {
            rho,
            rho_out,
            assignment,
            seed,
            classes: Vec::new(),
            kernels: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Classifies and solves every edge of `corpus`.
    pub fn from_corpus(
        corpus: &[ConcreteGraph],
        rho: RepSpec,
        rho_out: RepSpec,
        assignment: NeighbourhoodAssignment,
        seed: u64,
    ) -> Result<Self> {
        let mut s = SharedKernel::new(rho, rho_out, assignment, seed);
        for class in classify_edges(corpus, &assignment)? {
            s.insert(class)?;
        }
        Ok(s)
    }

    pub fn classes(&self) -> &[EdgeClass] {
        &self.classes
    }

    pub fn kernels(&self) -> &[ClassKernel] {
        &self.kernels
    }

    pub fn kernels_mut(&mut self) -> &mut [ClassKernel] {
        &mut self.kernels
    }

    pub fn class_of(&self, encoding: &CanonicalEncoding) -> Option<usize> {
        self.index.get(encoding).copied()
    }

    fn insert(&mut self, class: EdgeClass) -> Result<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(&class.encoding));
        let k = ClassKernel::solve(&class, &self.rho, &self.rho_out, &mut rng)?;
        let id = self.classes.len();
        self.index.insert(class.encoding.clone(), id);
        self.classes.push(class);
        self.kernels.push(k);
        Ok(id)
    }

    /// Finds the class of edge `(p, q)` of `g`, solving a new class when
    /// `solve` is set.
    pub fn resolve(&mut self, g: &ConcreteGraph, p: NodeId, q: NodeId, solve: bool) -> Result<EdgeRef> {
        let k = keyed(g, p, q, &self.assignment)?;
        let id = match self.index.get(&k.encoding) {
            Some(&id) => id,
            None if solve => {
                log::debug!("solving new edge class for ({p}, {q})");
                let fresh = Keyed {
                    nb: k.nb.clone(),
                    encoding: k.encoding.clone(),
                    order: k.order.clone(),
                };
                self.insert(EdgeClass::build(vec![(usize::MAX, fresh)], Representative::First, self.assignment.hops)?)?
            }
            None => return Err(Error::ClassMiss(p, q)),
        };
        self.edge_ref(id, &k)
    }

    /// Like [`resolve`](Self::resolve) without mutation; misses are errors.
    pub fn lookup(&self, g: &ConcreteGraph, p: NodeId, q: NodeId) -> Result<EdgeRef> {
        let k = keyed(g, p, q, &self.assignment)?;
        let id = *self.index.get(&k.encoding).ok_or(Error::ClassMiss(p, q))?;
        self.edge_ref(id, &k)
    }

    fn edge_ref(&self, id: usize, k: &Keyed) -> Result<EdgeRef> {
        let c = &self.classes[id];
        let from = Keyed {
            nb: c.representative.clone(),
            encoding: c.encoding.clone(),
            order: c.order.clone(),
        };
        Ok(EdgeRef {
            class: id,
            transport: transport(&from, k)?,
        })
    }

    /// Dense kernel of a resolved edge.
    pub fn realize(&self, e: &EdgeRef) -> Result<DMatrix<f64>> {
        let class = &self.classes[e.class];
        let k = self.kernels[e.class].matrix(&self.rho, &self.rho_out);
        transport_kernel(class, &self.rho, &self.rho_out, &k, &e.transport)
    }

    /// Serializable snapshot of the solved table.
    pub fn to_cache(&self) -> KernelCache {
        KernelCache {
            version: KernelCache::VERSION,
            rho: self.rho.to_string(),
            rho_out: self.rho_out.to_string(),
            hops: self.assignment.hops,
            seed: self.seed,
            classes: self
                .classes
                .iter()
                .zip(&self.kernels)
                .map(|(c, k)| CachedClass {
                    representative: (*c.representative.graph).clone(),
                    marked: c.representative.marked,
                    kernel: k.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a table from a cache; group generators are recomputed.
    pub fn from_cache(cache: KernelCache) -> Result<Self> {
        if cache.version != KernelCache::VERSION {
            return Err(Error::Format(format!("kernel cache version {} (expected {})", cache.version, KernelCache::VERSION)));
        }
        let a = NeighbourhoodAssignment::new(cache.hops);
        let mut s = SharedKernel::new(cache.rho.parse()?, cache.rho_out.parse()?, a, cache.seed);
        for c in cache.classes {
            let nb = EdgeNeighbourhood {
                graph: Arc::new(c.representative),
                marked: c.marked,
            };
            let class = EdgeClass::singleton(nb, a.hops)?;
            if class.encoding != c.kernel.encoding {
                return Err(Error::Format("cached representative does not match its encoding".into()));
            }
            s.index.insert(class.encoding.clone(), s.classes.len());
            s.classes.push(class);
            s.kernels.push(c.kernel);
        }
        Ok(s)
    }
}

/// On-disk form of a [`SharedKernel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCache {
    pub version: u32,
    pub rho: String,
    pub rho_out: String,
    pub hops: usize,
    pub seed: u64,
    pub classes: Vec<CachedClass>,
}

impl KernelCache {
    pub const VERSION: u32 = 1;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachedClass {
    pub representative: ConcreteGraph,
    pub marked: (NodeId, NodeId),
    pub kernel: ClassKernel,
}

fn fnv1a(e: &CanonicalEncoding) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(e.n as u64);
    e.colors.iter().for_each(|&c| eat(c as u64));
    e.bits.iter().for_each(|&w| eat(w));
    h
}
