//! Brute-force reference implementations used to validate the exact
//! algorithms. Everything here is deliberately independent of the pivot
//! machinery: distances come from breadth first search over an explicitly
//! enumerated bounded piece of the Farey graph.
//!
//! The Farey graph has infinite degree, so a bound is mandatory; callers
//! pick a denominator bound and a value window, and [`stable_bfs_distance`]
//! doubles both until the reported distance stops changing.

use std::collections::{HashMap, VecDeque};

use num_integer::Integer;

use crate::slopes::Slope;

type S = Slope<i64>;

/// A finite induced subgraph of the Farey graph: all canonical slopes with
/// `1 <= q <= max_den` and value in `[lo, hi]`, together with `1/0`.
pub struct FareyUniverse {
    verts: Vec<S>,
    index: HashMap<S, u32>,
    adj: Vec<Vec<u32>>,
}

impl FareyUniverse {
    /// `lo`, `hi` are value bounds as (num, den) with positive den.
    pub fn build(max_den: i64, lo: (i64, i64), hi: (i64, i64)) -> Self {
        assert!(max_den >= 1 && lo.1 > 0 && hi.1 > 0);
        let mut verts = vec![S::infinity()];
        for q in 1..=max_den {
            // lo.0/lo.1 <= p/q  <=>  p >= lo.0 * q / lo.1
            let p_min = num_integer::Integer::div_ceil(&(lo.0 * q), &lo.1);
            let p_max = (hi.0 * q).div_floor(&hi.1);
            for p in p_min..=p_max {
                if p.gcd(&q) == 1 {
                    verts.push(Slope::new(p, q));
                }
            }
        }
        let index: HashMap<S, u32> = verts
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i as u32))
            .collect();
        let mut adj = vec![Vec::new(); verts.len()];
        for (i, v) in verts.iter().enumerate() {
            for n in neighbors_in_box(v, max_den, lo, hi) {
                if let Some(&j) = index.get(&n) {
                    if (j as usize) > i {
                        adj[i].push(j);
                        adj[j as usize].push(i as u32);
                    }
                }
            }
        }
        FareyUniverse { verts, index, adj }
    }

    pub fn contains(&self, v: &S) -> bool {
        self.index.contains_key(v)
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    /// BFS distances from `src` to every vertex; `u32::MAX` marks
    /// unreachable vertices.
    pub fn bfs_from(&self, src: &S) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.verts.len()];
        let s = self.index[src] as usize;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            for &j in &self.adj[i] {
                if dist[j as usize] == u32::MAX {
                    dist[j as usize] = dist[i] + 1;
                    queue.push_back(j as usize);
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: &S, b: &S) -> Option<u32> {
        let d = self.bfs_from(a)[self.index[b] as usize];
        (d != u32::MAX).then_some(d)
    }

    pub fn vertex_id(&self, v: &S) -> Option<u32> {
        self.index.get(v).copied()
    }

    pub fn vertices(&self) -> &[S] {
        &self.verts
    }
}

/// Neighbors of `v` with denominator and value inside the box. Neighbors of
/// `p/q` are exactly `(r0 + t p)/(s0 + t q)` over all `t`, up to the sign
/// normalization.
fn neighbors_in_box(v: &S, max_den: i64, lo: (i64, i64), hi: (i64, i64)) -> Vec<S> {
    let mut out = Vec::new();
    let in_window = |n: &S| {
        if n.is_infinity() {
            return true;
        }
        let (p, q) = (*n.numer(), *n.denom());
        lo.0 * q <= p * lo.1 && p * hi.1 <= hi.0 * q
    };
    if v.is_infinity() {
        let p_min = num_integer::Integer::div_ceil(&lo.0, &lo.1);
        let p_max = hi.0.div_floor(&hi.1);
        for p in p_min..=p_max {
            out.push(Slope::new(p, 1));
        }
        return out;
    }
    let (p, q) = (*v.numer(), *v.denom());
    let eg = p.extended_gcd(&q);
    let (r0, s0) = (-eg.y, eg.x);
    // |s0 + t q| <= max_den
    let t_min = num_integer::Integer::div_ceil(&(-max_den - s0), &q);
    let t_max = (max_den - s0).div_floor(&q);
    for t in t_min..=t_max {
        let (r, s) = (r0 + t * p, s0 + t * q);
        let n = if s == 0 {
            S::infinity()
        } else {
            Slope::new(r, s)
        };
        if in_window(&n) {
            out.push(n);
        }
    }
    out
}

/// Oracle distance with the default policy: denominators bounded at 8x the
/// inputs, value window padded around the inputs, doubled until the answer
/// is stable.
pub fn stable_bfs_distance(a: &S, b: &S) -> u64 {
    let den = [*a.denom(), *b.denom(), 1].into_iter().max().unwrap();
    let mut vals: Vec<(i64, i64)> = Vec::new();
    for s in [a, b] {
        if !s.is_infinity() {
            vals.push((*s.numer(), *s.denom()));
        }
    }
    if vals.is_empty() {
        return 0;
    }
    let lo_val = vals
        .iter()
        .map(|&(p, q)| p.div_floor(&q))
        .min()
        .unwrap();
    let hi_val = vals.iter().map(|&(p, q)| num_integer::Integer::div_ceil(&p, &q)).max().unwrap();
    let mut bound = 8 * den;
    let mut pad = 2;
    let mut prev: Option<u32> = None;
    loop {
        let uni = FareyUniverse::build(bound, (lo_val - pad, 1), (hi_val + pad, 1));
        let d = uni.distance(a, b).expect("endpoints connected in window");
        if prev == Some(d) {
            return d as u64;
        }
        prev = Some(d);
        bound *= 2;
        pad *= 2;
    }
}
