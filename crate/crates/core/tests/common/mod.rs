//! Independent oracles and random fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_integer::Integer;
use pdd_core::invariants::lex_cmp;
use pdd_core::lattice::{Lattice, PeriodicSet};
use pdd_core::nnsearch::translate;
use pdd_core::PddMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random, moderately skewed basis with vectors of length roughly 1 to 2.
pub fn random_lattice(rng: &mut TestRng, n: usize) -> Lattice {
    loop {
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { rng.gen_range(0.9..1.6) } else { rng.gen_range(-0.4..0.4) })
                    .collect()
            })
            .collect();
        let lattice = Lattice::from_vectors(&vectors).unwrap();
        if lattice.volume() > 0.3 {
            return lattice;
        }
    }
}

fn frac_separation(lattice: &Lattice, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut best = f64::INFINITY;
    let count = 3usize.pow(n as u32);
    for code in 0..count {
        let mut c = code;
        let diff: Vec<f64> = (0..n)
            .map(|t| {
                let shift = (c % 3) as f64 - 1.0;
                c /= 3;
                a[t] - b[t] + shift
            })
            .collect();
        let v = lattice.to_cartesian(&diff);
        best = best.min(v.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    best
}

/// Fractional motif points at least `min_sep` apart, including across cell faces.
pub fn random_motif(rng: &mut TestRng, lattice: &Lattice, m: usize, min_sep: f64) -> Vec<Vec<f64>> {
    let n = lattice.dim();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    while pts.len() < m {
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        if pts.iter().all(|q| frac_separation(lattice, &p, q) >= min_sep) {
            pts.push(p);
        }
    }
    pts
}

pub fn random_periodic_set(rng: &mut TestRng, n: usize, m: usize) -> PeriodicSet {
    let lattice = random_lattice(rng, n);
    let frac = random_motif(rng, &lattice, m, 0.05);
    PeriodicSet::new(lattice, pdd_core::Motif::new(frac).unwrap()).unwrap()
}

/// A random orthogonal matrix; with `mirror` the determinant may be -1.
pub fn random_orthogonal(rng: &mut TestRng, n: usize, mirror: bool) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut q = g.qr().q();
    if mirror && rng.gen_bool(0.5) {
        for r in 0..n {
            q[(r, 0)] = -q[(r, 0)];
        }
    }
    q
}

/// The same set moved by a random rotation (or mirror) and translation.
pub fn rigid_copy(rng: &mut TestRng, set: &PeriodicSet) -> PeriodicSet {
    let n = set.dim();
    let q = random_orthogonal(rng, n, true);
    let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let lattice = set.lattice().transformed(&q).unwrap();
    let pts: Vec<Vec<f64>> = set
        .to_cartesian()
        .iter()
        .map(|p| {
            let v = &q * nalgebra::DVector::from_column_slice(p);
            v.iter().zip(&t).map(|(a, b)| a + b).collect()
        })
        .collect();
    PeriodicSet::from_cartesian(lattice, &pts).unwrap()
}

/// A random unimodular integer matrix built from elementary column operations.
pub fn random_unimodular(rng: &mut TestRng, n: usize) -> DMatrix<i64> {
    let mut u = DMatrix::<i64>::identity(n, n);
    if n == 1 {
        if rng.gen_bool(0.5) {
            u[(0, 0)] = -1;
        }
        return u;
    }
    for _ in 0..4 {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        while b == a {
            b = rng.gen_range(0..n);
        }
        let f = rng.gen_range(-1..=1);
        for r in 0..n {
            u[(r, a)] += f * u[(r, b)];
        }
    }
    u
}

/// The same set described by a different, possibly non-primitive cell: the
/// basis is rewritten by a unimodular matrix, then some vectors are doubled.
pub fn rewritten_cell(rng: &mut TestRng, set: &PeriodicSet) -> PeriodicSet {
    let n = set.dim();
    let u = random_unimodular(rng, n);
    let scale: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=2)).collect();
    let basis = set.lattice().basis();
    let bu = basis * u.map(|x| x as f64);
    let sub_lattice = Lattice::new(bu.clone()).unwrap();
    let super_basis = DMatrix::from_fn(n, n, |r, c| bu[(r, c)] * scale[c] as f64);
    let cells: i64 = scale.iter().product();
    let mut pts = Vec::new();
    for p in set.to_cartesian() {
        for code in 0..cells {
            let mut c = code;
            let coeffs: Vec<i64> = scale
                .iter()
                .map(|&s| {
                    let v = c % s;
                    c /= s;
                    v
                })
                .collect();
            let shift = sub_lattice.lattice_vector(&coeffs);
            pts.push(p.iter().zip(&shift).map(|(a, b)| a + b).collect());
        }
    }
    PeriodicSet::from_cartesian(Lattice::new(super_basis).unwrap(), &pts).unwrap()
}

/// Brute-force `k` nearest distances of every motif point: all points with
/// lattice coefficients in a box `[-b, b]^n`, enlarged until the box provably
/// contains the ball through the k-th neighbour.
pub fn brute_force_rows(set: &PeriodicSet, k: usize) -> Vec<Vec<f64>> {
    let lattice = set.lattice();
    let n = set.dim();
    let motif = set.to_cartesian();
    let h_min = lattice.min_height();
    let mut b: i64 = 1;
    loop {
        let side = (2 * b + 1) as usize;
        let mut translates = Vec::new();
        for code in 0..side.pow(n as u32) {
            let mut c = code;
            let coeffs: Vec<i64> = (0..n)
                .map(|_| {
                    let v = (c % side) as i64 - b;
                    c /= side;
                    v
                })
                .collect();
            let shift = lattice.lattice_vector(&coeffs);
            let zero = coeffs.iter().all(|&x| x == 0);
            for (j, p) in motif.iter().enumerate() {
                let q: Vec<f64> = p.iter().zip(&shift).map(|(x, s)| translate(*x, *s)).collect();
                translates.push((j, zero, q));
            }
        }
        let rows: Vec<Vec<f64>> = motif
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut d: Vec<f64> = translates
                    .iter()
                    .filter(|(j, zero, _)| !(*zero && *j == i))
                    .map(|(_, _, q)| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                    .collect();
                d.sort_by(f64::total_cmp);
                d.truncate(k);
                d
            })
            .collect();
        if rows.iter().all(|r| r.len() == k) {
            let worst = rows.iter().map(|r| r[k - 1]).fold(0.0, f64::max);
            if worst <= b as f64 * h_min {
                return rows;
            }
        }
        b += 1;
    }
}

/// Brute-force `k` nearest distances in a finite set.
pub fn brute_force_finite_rows(points: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .collect();
            d.sort_by(f64::total_cmp);
            d.truncate(k);
            d
        })
        .collect()
}

/// Same `k` and a weight-preserving matching of rows within `tol` in every
/// entry. Matching rather than zipping tolerates rows whose lexicographic
/// order flips under rounding noise.
pub fn pdd_close(a: &PddMatrix, b: &PddMatrix, tol: f64) -> bool {
    if a.k() != b.k() || a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    a.rows().iter().all(|x| {
        let found = b.rows().iter().enumerate().position(|(j, y)| {
            !used[j]
                && x.weight == y.weight
                && x.distances.iter().zip(&y.distances).all(|(p, q)| (p - q).abs() <= tol)
        });
        match found {
            Some(j) => {
                used[j] = true;
                true
            }
            None => false,
        }
    })
}

/// EMD by successive shortest paths with Bellman-Ford on integer masses.
pub fn ssp_emd(p: &PddMatrix, q: &PddMatrix) -> f64 {
    let lcm = p
        .rows()
        .iter()
        .chain(q.rows())
        .fold(1u64, |l, r| l.lcm(r.weight.denom()));
    let mass = |w: &pdd_core::Weight| (w.numer() * (lcm / w.denom())) as i64;
    let (a, b) = (p.len(), q.len());
    // nodes: 0 source, 1..=a rows of p, a+1..=a+b rows of q, a+b+1 sink
    let nodes = a + b + 2;
    let sink = a + b + 1;
    struct Arc {
        to: usize,
        cap: i64,
        cost: f64,
    }
    let mut arcs: Vec<Arc> = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let add = |arcs: &mut Vec<Arc>, out: &mut Vec<Vec<usize>>, u: usize, v: usize, cap: i64, cost: f64| {
        out[u].push(arcs.len());
        arcs.push(Arc { to: v, cap, cost });
        out[v].push(arcs.len());
        arcs.push(Arc { to: u, cap: 0, cost: -cost });
    };
    for (i, r) in p.rows().iter().enumerate() {
        add(&mut arcs, &mut out, 0, 1 + i, mass(&r.weight), 0.0);
    }
    for (j, r) in q.rows().iter().enumerate() {
        add(&mut arcs, &mut out, 1 + a + j, sink, mass(&r.weight), 0.0);
    }
    for (i, x) in p.rows().iter().enumerate() {
        for (j, y) in q.rows().iter().enumerate() {
            let c = x
                .distances
                .iter()
                .zip(&y.distances)
                .fold(0.0_f64, |m, (s, t)| m.max((s - t).abs()));
            add(&mut arcs, &mut out, 1 + i, 1 + a + j, i64::MAX / 4, c);
        }
    }
    let mut total = 0.0;
    loop {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut via: Vec<Option<usize>> = vec![None; nodes];
        dist[0] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for &e in &out[u] {
                    let arc = &arcs[e];
                    if arc.cap > 0 && dist[u] + arc.cost < dist[arc.to] - 1e-15 {
                        dist[arc.to] = dist[u] + arc.cost;
                        via[arc.to] = Some(e);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[sink] == f64::INFINITY {
            break;
        }
        let mut push = i64::MAX;
        let mut v = sink;
        while let Some(e) = via[v] {
            push = push.min(arcs[e].cap);
            v = arcs[e ^ 1].to;
        }
        let mut v = sink;
        while let Some(e) = via[v] {
            arcs[e].cap -= push;
            arcs[e ^ 1].cap += push;
            total += push as f64 * arcs[e].cost;
            v = arcs[e ^ 1].to;
        }
    }
    total / lcm as f64
}

/// Minimum total weight over all spanning trees of the complete graph on
/// `n` vertices, enumerated through Prüfer sequences.
pub fn exhaustive_mst_weight(n: usize, weight: impl Fn(usize, usize) -> f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return weight(0, 1);
    }
    let len = n - 2;
    let mut best = f64::INFINITY;
    for code in 0..n.pow(len as u32) {
        let mut c = code;
        let seq: Vec<usize> = (0..len)
            .map(|_| {
                let v = c % n;
                c /= n;
                v
            })
            .collect();
        let mut degree = vec![1usize; n];
        for &v in &seq {
            degree[v] += 1;
        }
        let mut total = 0.0;
        for &v in &seq {
            let leaf = (0..n).find(|&u| degree[u] == 1).unwrap();
            total += weight(leaf, v);
            degree[leaf] -= 1;
            degree[v] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
        total += weight(rest[0], rest[1]);
        best = best.min(total);
    }
    best
}

/// Whether two sets with the same lattice coincide after moving some point of
/// `a` to the origin and applying `x ↦ ±x`, compared modulo the lattice.
pub fn same_up_to_sign_and_shift(a: &PeriodicSet, b: &PeriodicSet, tol: f64) -> bool {
    let lattice = a.lattice();
    let ca = a.to_cartesian();
    let cb = b.to_cartesian();
    if ca.len() != cb.len() {
        return false;
    }
    let n = a.dim();
    let frac_of = |v: &[f64]| lattice.to_fractional(v);
    let same_mod_lattice = |x: &[f64], y: &[f64]| {
        let fx = frac_of(x);
        let fy = frac_of(y);
        let diff: Vec<f64> = fx.iter().zip(&fy).map(|(s, t)| s - t - (s - t).round()).collect();
        // compare the min-image difference over neighbouring shifts
        let count = 3usize.pow(n as u32);
        (0..count).any(|code| {
            let mut c = code;
            let d: Vec<f64> = diff
                .iter()
                .map(|v| {
                    let s = (c % 3) as f64 - 1.0;
                    c /= 3;
                    v + s
                })
                .collect();
            let cart = lattice.to_cartesian(&d);
            cart.iter().map(|x| x * x).sum::<f64>().sqrt() <= tol
        })
    };
    for o in &ca {
        for sign in [1.0, -1.0] {
            let moved: Vec<Vec<f64>> = ca
                .iter()
                .map(|p| p.iter().zip(o).map(|(x, y)| sign * (x - y)).collect())
                .collect();
            let shift = &cb[0];
            let target: Vec<Vec<f64>> =
                cb.iter().map(|p| p.iter().zip(shift).map(|(x, y)| x - y).collect()).collect();
            let mut used = vec![false; target.len()];
            let all = moved.iter().all(|p| {
                match (0..target.len()).find(|&j| !used[j] && same_mod_lattice(p, &target[j])) {
                    Some(j) => {
                        used[j] = true;
                        true
                    }
                    None => false,
                }
            });
            if all {
                return true;
            }
        }
    }
    false
}

/// Smallest tried `k` whose last PDD column exceeds `radius` in every row.
pub fn k_reaching(set: &PeriodicSet, radius: f64) -> usize {
    let mut k = 4;
    loop {
        let d = pdd_core::neighbor_distances(set, k).unwrap();
        if d.rows().iter().all(|r| r[k - 1] > radius) {
            return k;
        }
        k += (k / 2).max(4);
    }
}

/// Rows sorted lexicographically.
pub fn sorted_rows(mut rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    rows.sort_by(|a, b| lex_cmp(a, b));
    rows
}

/// A 1D periodic set with period `period` and the given motif.
pub fn line_set(period: f64, points: &[f64]) -> PeriodicSet {
    let lattice = Lattice::from_vectors(&[vec![period]]).unwrap();
    let pts: Vec<Vec<f64>> = points.iter().map(|&x| vec![x]).collect();
    PeriodicSet::from_cartesian(lattice, &pts).unwrap()
}

/// `{0, r, 2+r, 4} + 8ℤ`.
pub fn s_of(r: f64) -> PeriodicSet {
    line_set(8.0, &[0.0, r, 2.0 + r, 4.0])
}

/// `{0, 2+r, 4, 4+r} + 8ℤ`.
pub fn q_of(r: f64) -> PeriodicSet {
    line_set(8.0, &[0.0, 2.0 + r, 4.0, 4.0 + r])
}

pub fn trapezium() -> pdd_core::FiniteSet {
    pdd_core::FiniteSet::new(vec![vec![-2.0, 0.0], vec![2.0, 0.0], vec![-1.0, 1.0], vec![1.0, 1.0]]).unwrap()
}

pub fn kite() -> pdd_core::FiniteSet {
    pdd_core::FiniteSet::new(vec![vec![-2.0, 0.0], vec![2.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap()
}

/// Sum and difference sets `X ± Y + 15ℤ` with `X = {0,4,9}`, `Y = {0,1,3}`.
pub fn homometric_pair() -> (PeriodicSet, PeriodicSet) {
    let x = [0i64, 4, 9];
    let y = [0i64, 1, 3];
    let build = |sign: i64| {
        let mut pts: Vec<i64> = x
            .iter()
            .flat_map(|a| y.iter().map(move |b| (a + sign * b).rem_euclid(15)))
            .collect();
        pts.sort();
        pts.dedup();
        let pts: Vec<f64> = pts.into_iter().map(|p| p as f64).collect();
        line_set(15.0, &pts)
    };
    (build(1), build(-1))
}

/// Honeycomb with unit bond length.
pub fn honeycomb() -> PeriodicSet {
    let s3 = 3f64.sqrt();
    let lattice = Lattice::from_vectors(&[vec![s3, 0.0], vec![s3 / 2.0, 1.5]]).unwrap();
    PeriodicSet::from_cartesian(lattice, &[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap()
}


/// Moves every motif point by a random vector of length at most `eps`.
pub fn perturbed(rng: &mut TestRng, set: &PeriodicSet, eps: f64) -> PeriodicSet {
    let pts: Vec<Vec<f64>> = set
        .to_cartesian()
        .iter()
        .map(|p| {
            let dir: Vec<f64> = p.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            let t = rng.gen_range(0.0..=1.0) * eps / len;
            p.iter().zip(&dir).map(|(x, d)| x + t * d).collect()
        })
        .collect();
    PeriodicSet::from_cartesian(set.lattice().clone(), &pts).unwrap()
}

/// A random set that passes the genericity check, retrying on the rare failure.
pub fn generic_set(rng: &mut TestRng, n: usize, m: usize) -> PeriodicSet {
    loop {
        let set = random_periodic_set(rng, n, m);
        if pdd_core::check_distance_generic(&set).unwrap().is_generic {
            return set;
        }
    }
}

/// Whether `p` equals a table listing one row per motif point, all of weight
/// `1/rows.len()`, entry by entry within `tol`.
pub fn matches_point_table(p: &PddMatrix, rows: Vec<Vec<f64>>, tol: f64) -> bool {
    let share = pdd_core::Weight::new(1, rows.len() as u64);
    let mut want: Vec<(pdd_core::Weight, Vec<f64>)> = Vec::new();
    for r in sorted_rows(rows) {
        match want.last_mut() {
            Some(last) if last.1 == r => last.0 += share,
            _ => want.push((share, r)),
        }
    }
    p.len() == want.len()
        && p.rows().iter().zip(&want).all(|(got, (w, d))| {
            got.weight == *w
                && got.distances.len() == d.len()
                && got.distances.iter().zip(d).all(|(a, b)| (a - b).abs() <= tol)
        })
}

/// Reference per-point tables of `S(r)` and `Q(r)` for `k = 8`.
pub fn line_tables(r: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (
        vec![
            vec![r, 2.0 + r, 4.0, 4.0, 6.0 - r, 8.0 - r, 8.0, 8.0],
            vec![r, 2.0, 4.0 - r, 4.0 + r, 6.0, 8.0 - r, 8.0, 8.0],
            vec![2.0 - r, 2.0, 2.0 + r, 6.0 - r, 6.0, 6.0 + r, 8.0, 8.0],
            vec![2.0 - r, 4.0 - r, 4.0, 4.0, 4.0 + r, 6.0 + r, 8.0, 8.0],
        ],
        vec![
            vec![r, 2.0 - r, 4.0, 4.0, 6.0 + r, 8.0 - r, 8.0, 8.0],
            vec![r, 2.0, 4.0 - r, 4.0 + r, 6.0, 8.0 - r, 8.0, 8.0],
            vec![2.0 - r, 2.0, 2.0 + r, 6.0 - r, 6.0, 6.0 + r, 8.0, 8.0],
            vec![2.0 + r, 4.0 - r, 4.0, 4.0, 4.0 + r, 6.0 - r, 8.0, 8.0],
        ],
    )
}
