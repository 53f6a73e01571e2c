//! Instance generators: seeded random families, adversarial gap families,
//! and the independent-set reduction pipeline.
//!
//! The gap families are minimal constructions whose OPT/WST ratios attain
//! the worst-case gaps of their models (`n + 1` for the general model,
//! `upper/lower` for the uniform model, `2` for the marriage model); the
//! enumeration oracle certifies the ratios in the test suites. The
//! reduction chain MAX-IS -> MAX-2-IS -> instance realizes the score
//! identity `OPT = |E| + p * IS2(G)` that makes score maximization as hard
//! as 2-independent set.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Instance, PreferenceOrder};

/// An undirected simple graph with a canonical (sorted) edge list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("loop at vertex {0}")]
    Loop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(GraphError::OutOfRange {
                    index: u.max(v),
                    limit: vertices,
                });
            }
            if u == v {
                return Err(GraphError::Loop(u));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(Graph {
            vertices,
            edges: normalized,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }

    /// BFS distances from `start` (`None` for unreachable vertices).
    pub fn distances_from(&self, start: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.vertices];
        let mut queue = std::collections::VecDeque::from([start]);
        dist[start] = Some(0);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.vertices == 0 || self.distances_from(0).iter().all(|d| d.is_some())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("graph too large for exhaustive search ({vertices} vertices)")]
    BudgetExceeded { vertices: usize },
}

/// The four instance families with distinct worst-case guarantees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelTag {
    General,
    Uniform,
    Marriage,
    RSideMasterList,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::General => "general",
            ModelTag::Uniform => "uniform",
            ModelTag::Marriage => "marriage",
            ModelTag::RSideMasterList => "rml",
        }
    }
}

/// Parameters for [`gen_random`]. Quota ranges are inclusive and clamped to
/// the instance invariants; quotas are resampled until the undersupply
/// assumption holds.
#[derive(Clone, Debug)]
pub struct GenParams {
    pub model: ModelTag,
    pub n: usize,
    pub m: usize,
    pub lower_range: (usize, usize),
    pub upper_range: (usize, usize),
    pub resident_tie_density: f64,
    pub hospital_tie_density: f64,
    pub resident_master_list: bool,
    pub hospital_master_list: bool,
    pub seed: u64,
}

impl GenParams {
    pub fn new(model: ModelTag, n: usize, m: usize, seed: u64) -> Self {
        GenParams {
            model,
            n,
            m,
            lower_range: (0, 2),
            upper_range: (1, 3),
            resident_tie_density: 0.4,
            hospital_tie_density: 0.4,
            resident_master_list: false,
            hospital_master_list: false,
            seed,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("unsatisfiable generator parameters: {0}")]
    UnsatisfiableParams(String),
}

/// A random tiered order over `0..k`: a shuffle grouped into ties, where
/// each element joins the previous tie with probability `density`.
pub fn random_order(rng: &mut ChaCha8Rng, k: usize, density: f64) -> PreferenceOrder {
    let mut items: Vec<usize> = (0..k).collect();
    items.shuffle(rng);
    let mut tiers: Vec<Vec<usize>> = Vec::new();
    for x in items {
        let join = !tiers.is_empty() && rng.gen_bool(density.clamp(0.0, 1.0));
        if join {
            tiers.last_mut().unwrap().push(x);
        } else {
            tiers.push(vec![x]);
        }
    }
    PreferenceOrder::new(tiers, k).unwrap()
}

/// Deterministic seeded sampler for the requested model family.
pub fn gen_random(params: &GenParams) -> Result<Instance, GenError> {
    let GenParams { n, m, .. } = *params;
    if n == 0 || m == 0 {
        return Err(GenError::UnsatisfiableParams(
            "need at least one resident and one hospital".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let sample = |rng: &mut ChaCha8Rng, range: (usize, usize), lo: usize, hi: usize| {
        let a = range.0.clamp(lo, hi);
        let b = range.1.clamp(lo, hi);
        if a > b {
            None
        } else {
            Some(rng.gen_range(a..=b))
        }
    };

    let mut lower = vec![0usize; m];
    let mut upper = vec![0usize; m];
    let mut ok = false;
    for _ in 0..1000 {
        match params.model {
            ModelTag::General | ModelTag::RSideMasterList => {
                for h in 0..m {
                    upper[h] = sample(&mut rng, params.upper_range, 1, n).ok_or_else(|| {
                        GenError::UnsatisfiableParams("empty upper quota range".into())
                    })?;
                    lower[h] = sample(&mut rng, params.lower_range, 0, upper[h])
                        .unwrap_or(upper[h].min(params.lower_range.0));
                }
            }
            ModelTag::Uniform => {
                let u = sample(&mut rng, params.upper_range, 1, n).ok_or_else(|| {
                    GenError::UnsatisfiableParams("empty upper quota range".into())
                })?;
                let l = sample(&mut rng, params.lower_range, 0, u)
                    .unwrap_or(u.min(params.lower_range.0));
                lower.fill(l);
                upper.fill(u);
            }
            ModelTag::Marriage => {
                if m <= n {
                    return Err(GenError::UnsatisfiableParams(format!(
                        "marriage model needs more hospitals than residents ({m} <= {n})"
                    )));
                }
                for h in 0..m {
                    upper[h] = 1;
                    lower[h] = sample(&mut rng, params.lower_range, 0, 1).ok_or_else(|| {
                        GenError::UnsatisfiableParams("empty lower quota range".into())
                    })?;
                }
            }
        }
        if upper.iter().sum::<usize>() > n {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(GenError::UnsatisfiableParams(format!(
            "could not reach {n} < total upper quota within the quota ranges"
        )));
    }

    let master_residents = params.resident_master_list
        || matches!(params.model, ModelTag::RSideMasterList);
    let resident_prefs: Vec<PreferenceOrder> = if master_residents {
        let shared = random_order(&mut rng, m, params.resident_tie_density);
        vec![shared; n]
    } else {
        (0..n)
            .map(|_| random_order(&mut rng, m, params.resident_tie_density))
            .collect()
    };
    let hospital_prefs: Vec<PreferenceOrder> = if params.hospital_master_list {
        let shared = random_order(&mut rng, n, params.hospital_tie_density);
        vec![shared; m]
    } else {
        (0..m)
            .map(|_| random_order(&mut rng, n, params.hospital_tie_density))
            .collect()
    };

    Ok(Instance::new(resident_prefs, hospital_prefs, lower, upper)
        .expect("sampled parts satisfy the instance invariants"))
}

/// General-model family with gap `n + 1`: one flexible hospital `[0, n]`
/// plus `n` hospitals `[1, 1]`, all residents fully indifferent (a master
/// list), hospital lists strict. Spreading scores `n + 1`; packing everyone
/// into the flexible hospital scores 1.
pub fn gap_family_general(n: usize) -> Instance {
    assert!(n >= 1, "need at least one resident");
    let m = n + 1;
    let strict_residents: Vec<usize> = (0..n).collect();
    let mut lower = vec![1usize; m];
    let mut upper = vec![1usize; m];
    lower[0] = 0;
    upper[0] = n;
    Instance::new(
        vec![PreferenceOrder::single_tie(m); n],
        vec![PreferenceOrder::strict(&strict_residents).unwrap(); m],
        lower,
        upper,
    )
    .unwrap()
}

/// Uniform-model family with gap `upper/lower`: `upper` residents and
/// enough hospitals `[lower, upper]` to spread them `lower` at a time, all
/// residents fully indifferent. Packing one hospital scores 1; spreading
/// scores exactly `upper/lower`.
pub fn gap_family_uniform(lower: usize, upper: usize) -> Instance {
    assert!(
        (1..=upper).contains(&lower),
        "need 1 <= lower <= upper"
    );
    let n = upper;
    let m = upper.div_ceil(lower) + 1;
    let strict_residents: Vec<usize> = (0..n).collect();
    Instance::new(
        vec![PreferenceOrder::single_tie(m); n],
        vec![PreferenceOrder::strict(&strict_residents).unwrap(); m],
        vec![lower; m],
        vec![upper; m],
    )
    .unwrap()
}

/// Marriage-model family with gap 2: `k` independent copies of one resident
/// indifferent between an `[1, 1]` hospital and a `[0, 1]` hospital.
pub fn gap_family_marriage(k: usize) -> Instance {
    assert!(k >= 1, "need at least one copy");
    let m = 2 * k;
    let strict_residents: Vec<usize> = (0..k).collect();
    let resident_prefs = (0..k)
        .map(|t| {
            let mut tiers = vec![vec![2 * t, 2 * t + 1]];
            tiers.extend((0..m).filter(|&h| h / 2 != t).map(|h| vec![h]));
            PreferenceOrder::new(tiers, m).unwrap()
        })
        .collect();
    let lower = (0..m).map(|h| if h % 2 == 0 { 1 } else { 0 }).collect();
    Instance::new(
        resident_prefs,
        vec![PreferenceOrder::strict(&strict_residents).unwrap(); m],
        lower,
        vec![1; m],
    )
    .unwrap()
}

/// Reduces maximum independent set to maximum 2-independent set: vertices
/// become `V + E + {s}`, and each original edge `e = (u, v)` contributes the
/// three edges `(u, e)`, `(v, e)`, `(s, e)`.
pub fn is_to_2is(g: &Graph) -> Result<Graph, ReductionError> {
    if g.edges().is_empty() {
        return Err(ReductionError::EmptyGraph);
    }
    if !g.is_connected() {
        return Err(ReductionError::DisconnectedGraph);
    }
    let nv = g.vertices();
    let ne = g.edges().len();
    let star = nv + ne;
    let mut edges = Vec::with_capacity(3 * ne);
    for (k, &(u, v)) in g.edges().iter().enumerate() {
        let ek = nv + k;
        edges.push((u, ek));
        edges.push((v, ek));
        edges.push((star, ek));
    }
    Ok(Graph::new(nv + ne + 1, edges).expect("construction is simple"))
}

/// Encodes maximum 2-independent set into score maximization.
///
/// Each vertex `v_i` becomes `p` residents; each edge `e_k` becomes a
/// hospital `[0, p]` fully indifferent among the residents of its
/// endpoints; each resident also gets a personal `[1, 1]` hospital that
/// ranks it first. List tails are completed in ascending index order. The
/// resulting instance satisfies `OPT = |E| + p * IS2(g)`.
pub fn reduce_2is_to_mslq(g: &Graph, p: usize) -> Result<Instance, ReductionError> {
    assert!(p >= 1, "need at least one resident per vertex");
    if g.edges().is_empty() {
        return Err(ReductionError::EmptyGraph);
    }
    if !g.is_connected() {
        return Err(ReductionError::DisconnectedGraph);
    }
    let nv = g.vertices();
    let ne = g.edges().len();
    let n = p * nv;
    let m = ne + n;
    // resident (i, j) has index i*p + j; hospital e_k has index k and the
    // personal hospital of resident (i, j) has index ne + i*p + j.
    let resident = |i: usize, j: usize| i * p + j;
    let personal = |i: usize, j: usize| ne + i * p + j;

    let adj_edges: Vec<Vec<usize>> = {
        let mut adj = vec![Vec::new(); nv];
        for (k, &(u, v)) in g.edges().iter().enumerate() {
            adj[u].push(k);
            adj[v].push(k);
        }
        adj
    };

    let mut resident_prefs = Vec::with_capacity(n);
    for i in 0..nv {
        for j in 0..p {
            let mut tiers: Vec<Vec<usize>> = Vec::new();
            if !adj_edges[i].is_empty() {
                tiers.push(adj_edges[i].clone());
            }
            tiers.push(vec![personal(i, j)]);
            let mut used = vec![false; m];
            for tier in &tiers {
                for &h in tier {
                    used[h] = true;
                }
            }
            tiers.extend((0..m).filter(|&h| !used[h]).map(|h| vec![h]));
            resident_prefs.push(PreferenceOrder::new(tiers, m).unwrap());
        }
    }

    let mut hospital_prefs = Vec::with_capacity(m);
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for &(u, v) in g.edges() {
        let tie: Vec<usize> = [u, v]
            .iter()
            .flat_map(|&i| (0..p).map(move |j| resident(i, j)))
            .collect();
        let mut tiers = vec![tie.clone()];
        let mut used = vec![false; n];
        for &r in &tie {
            used[r] = true;
        }
        tiers.extend((0..n).filter(|&r| !used[r]).map(|r| vec![r]));
        hospital_prefs.push(PreferenceOrder::new(tiers, n).unwrap());
        lower.push(0);
        upper.push(p);
    }
    for i in 0..nv {
        for j in 0..p {
            let first = resident(i, j);
            let mut tiers = vec![vec![first]];
            tiers.extend((0..n).filter(|&r| r != first).map(|r| vec![r]));
            hospital_prefs.push(PreferenceOrder::new(tiers, n).unwrap());
            lower.push(1);
            upper.push(1);
        }
    }

    Ok(Instance::new(resident_prefs, hospital_prefs, lower, upper)
        .expect("reduction output satisfies the instance invariants"))
}

const BRUTE_FORCE_LIMIT: usize = 20;

/// Maximum independent set size by subset enumeration (graphs up to 20
/// vertices).
pub fn brute_force_is(g: &Graph) -> Result<usize, ReductionError> {
    if g.vertices() > BRUTE_FORCE_LIMIT {
        return Err(ReductionError::BudgetExceeded {
            vertices: g.vertices(),
        });
    }
    let mut conflict = vec![0u32; g.vertices()];
    for &(u, v) in g.edges() {
        conflict[u] |= 1 << v;
        conflict[v] |= 1 << u;
    }
    Ok(best_conflict_free(g.vertices(), &conflict))
}

/// Maximum 2-independent set size (pairwise distance at least 3) by subset
/// enumeration.
pub fn brute_force_2is(g: &Graph) -> Result<usize, ReductionError> {
    if g.vertices() > BRUTE_FORCE_LIMIT {
        return Err(ReductionError::BudgetExceeded {
            vertices: g.vertices(),
        });
    }
    let mut conflict = vec![0u32; g.vertices()];
    for v in 0..g.vertices() {
        for (u, d) in g.distances_from(v).iter().enumerate() {
            if u != v && d.is_some_and(|d| d <= 2) {
                conflict[v] |= 1 << u;
            }
        }
    }
    Ok(best_conflict_free(g.vertices(), &conflict))
}

fn best_conflict_free(nv: usize, conflict: &[u32]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1u32 << nv) {
        if mask.count_ones() as usize <= best {
            continue;
        }
        let ok = (0..nv).all(|v| mask & (1 << v) == 0 || conflict[v] & mask == 0);
        if ok {
            best = mask.count_ones() as usize;
        }
    }
    best
}
