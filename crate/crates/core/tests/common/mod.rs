#![allow(dead_code)]

use std::f64::consts::PI;

use ndarray::Array2;
use pfde_core::model::{
    BoundaryKind, BoundarySpec, Coefficient, DriverState, Mesh1D, ProblemSpec, ReactionTerm,
    Segment,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn problem(
    kind: BoundaryKind,
    length: f64,
    intervals: usize,
    delay_steps: usize,
    diffusion: Vec<f64>,
    reaction: ReactionTerm,
    driver: DriverState,
) -> ProblemSpec {
    let n = diffusion.len();
    ProblemSpec::new(
        diffusion,
        Mesh1D::new(length, intervals).unwrap(),
        BoundarySpec::uniform(kind, n).unwrap(),
        reaction,
        driver,
        delay_steps,
    )
    .unwrap()
}

/// `y' = d y_xx + a y + b y(t - 1)` on one species.
pub fn linear_scalar(
    kind: BoundaryKind,
    length: f64,
    intervals: usize,
    m: usize,
    d: f64,
    a: f64,
    b: f64,
) -> ProblemSpec {
    problem(
        kind,
        length,
        intervals,
        m,
        vec![d],
        ReactionTerm::linear_constant(&[&[a]], &[&[b]]),
        DriverState::autonomous(),
    )
}

pub fn logistic(
    kind: BoundaryKind,
    length: f64,
    intervals: usize,
    m: usize,
    d: f64,
    a: f64,
    b: f64,
) -> ProblemSpec {
    problem(
        kind,
        length,
        intervals,
        m,
        vec![d],
        ReactionTerm::delayed_logistic(&[a], &[b]),
        DriverState::autonomous(),
    )
}

fn forced(mean: f64, amp: f64, harmonics: Vec<i32>) -> Coefficient {
    Coefficient::constant(mean).with_term(harmonics, amp, 0.5 * amp)
}

/// Quasi-periodically forced cooperative system on two species, monotone
/// regime of the scheme (`d h / dx^2 <= 0.4`).
pub fn cooperative_pair(kind: BoundaryKind) -> ProblemSpec {
    let reaction = ReactionTerm::CooperativeLv {
        growth: vec![forced(0.5, 0.2, vec![1, 0]), Coefficient::constant(-0.2)],
        crowding: vec![Coefficient::constant(1.0), forced(1.0, 0.2, vec![0, 1])],
        coupling: vec![
            vec![Coefficient::zero(), forced(0.3, 0.1, vec![1, 1])],
            vec![
                Coefficient::constant(0.4).with_poly(vec![1.0, 0.5]),
                Coefficient::zero(),
            ],
        ],
        delayed_coupling: vec![
            vec![Coefficient::constant(0.1), Coefficient::zero()],
            vec![Coefficient::constant(0.2), forced(0.2, 0.1, vec![0, 1])],
        ],
    };
    problem(
        kind,
        1.0,
        16,
        64,
        vec![0.1, 0.05],
        reaction,
        DriverState::new(vec![0.3, 1.1], vec![1.0, 2f64.sqrt()]),
    )
}

/// Three species in a cycle, cooperative, Robin ends.
pub fn cooperative_triple() -> ProblemSpec {
    let c = |v: f64| Coefficient::constant(v);
    let reaction = ReactionTerm::CooperativeLv {
        growth: vec![forced(0.3, 0.1, vec![1]), c(0.2), c(-0.1)],
        crowding: vec![c(1.0), c(0.5), c(1.0)],
        coupling: vec![
            vec![c(0.0), c(0.2), c(0.0)],
            vec![c(0.0), c(0.0), c(0.3)],
            vec![forced(0.2, 0.1, vec![1]), c(0.0), c(0.0)],
        ],
        delayed_coupling: vec![
            vec![c(0.1), c(0.0), c(0.0)],
            vec![c(0.0), c(0.0), c(0.0)],
            vec![c(0.0), c(0.1), c(0.05)],
        ],
    };
    ProblemSpec::new(
        vec![0.1, 0.08, 0.12],
        Mesh1D::new(1.0, 16).unwrap(),
        BoundarySpec::uniform(BoundaryKind::robin(0.5, 1.0).unwrap(), 3).unwrap(),
        reaction,
        DriverState::new(vec![0.7], vec![1.3]),
        64,
    )
    .unwrap()
}

/// Segment with the given smooth profile at every delay time.
pub fn profile_segment(p: &ProblemSpec, f: impl Fn(usize, f64, f64) -> f64) -> Segment {
    let m = p.delay_steps();
    let nodes = p.mesh().nodes();
    let history = (0..=m)
        .map(|j| {
            let s = -1.0 + j as f64 / m as f64;
            Array2::from_shape_fn((p.species(), nodes), |(i, k)| f(i, s, p.mesh().x(k)))
        })
        .collect();
    Segment::new(history).unwrap()
}

pub fn sine_segment(p: &ProblemSpec, amplitude: f64) -> Segment {
    let l = p.mesh().length();
    profile_segment(p, |_, _, x| amplitude * (PI * x / l).sin())
}

/// Forward-Euler scalar delay equation `y' = g(y, y(t - 1))` on the grid
/// `h = 1 / m`, from constant history `y0`. Returns `y(n h)` for `n = 0..=steps`.
pub fn scalar_delay_euler(
    g: impl Fn(f64, f64) -> f64,
    y0: f64,
    m: usize,
    steps: usize,
) -> Vec<f64> {
    let h = 1.0 / m as f64;
    let mut ys = vec![y0; m + 1];
    for n in 0..steps {
        let (y, z) = (ys[n + m], ys[n]);
        ys.push(y + h * g(y, z));
    }
    ys[m..].to_vec()
}

pub fn random_adjacency(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<bool>> {
    let density: f64 = rng.random_range(0.05..0.6);
    (0..n)
        .map(|i| (0..n).map(|j| i != j && rng.random_bool(density)).collect())
        .collect()
}

pub fn to_matrix(adj: &[Vec<bool>]) -> Array2<f64> {
    let n = adj.len();
    Array2::from_shape_fn((n, n), |(i, j)| if adj[i][j] { 1.0 } else { 0.0 })
}

/// Reflexive transitive closure by Floyd-Warshall.
pub fn closure(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut r: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i == j || adj[i][j]).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

pub fn strongly_connected(adj: &[Vec<bool>]) -> bool {
    closure(adj).iter().all(|row| row.iter().all(|&b| b))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                go(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Finest partition into contiguous diagonal blocks, over every ordering
/// of the species, such that nothing lies above the block diagonal.
/// Blocks are sorted sets, listed in ascending order of their first element.
pub fn brute_force_partition(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut best: Vec<Vec<usize>> = vec![(0..n).collect()];
    for perm in permutations(n) {
        // a cut before position c is allowed when no row above it has an
        // entry in a column at or after it
        let mut blocks = Vec::new();
        let mut start = 0;
        for c in 1..=n {
            let allowed = c == n || (0..c).all(|r| (c..n).all(|q| !adj[perm[r]][perm[q]]));
            if allowed {
                blocks.push(perm[start..c].to_vec());
                start = c;
            }
        }
        if blocks.len() > best.len() {
            best = blocks;
        }
    }
    normalize(best)
}

pub fn normalize(mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in blocks.iter_mut() {
        b.sort_unstable();
    }
    blocks.sort();
    blocks
}
