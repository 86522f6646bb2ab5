//! Exact arithmetic for the Farey graph: slopes, intersection numbers,
//! pivot sequences, graph distances and geodesics, continued fractions.
//!
//! Vertices are reduced fractions `p/q` with `q >= 0` and `1/0` for the
//! vertical slope; two vertices span an edge when `|p s - q r| = 1`.
//! Distances are computed exactly on the finite subgraph induced by the
//! ideal triangles crossed by the hyperbolic geodesic between the
//! endpoints; the reduction is validated against a brute-force breadth
//! first search in the test suite.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::FareyInt;

/// A vertex of the Farey graph: a reduced fraction `p/q`, with `1/0`
/// for the slope at infinity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Slope<I> {
    p: I,
    q: I,
}

impl<I: FareyInt> Slope<I> {
    /// Canonical slope from any pair with `(p, q) != (0, 0)`.
    pub fn new(p: I, q: I) -> Self {
        Self::try_new(p, q).expect("0/0 is not a slope")
    }

    pub fn try_new(p: I, q: I) -> Result<Self> {
        if p.is_zero() && q.is_zero() {
            return Err(Error::ZeroSlope);
        }
        if q.is_zero() {
            return Ok(Slope {
                p: I::one(),
                q: I::zero(),
            });
        }
        let g = p.gcd(&q);
        let (mut p, mut q) = (p / g.clone(), q / g);
        if q.is_negative() {
            p = -p;
            q = -q;
        }
        Ok(Slope { p, q })
    }

    pub fn infinity() -> Self {
        Slope {
            p: I::one(),
            q: I::zero(),
        }
    }

    pub fn from_integer(n: I) -> Self {
        Slope { p: n, q: I::one() }
    }

    pub fn from_i64(p: i64, q: i64) -> Self {
        Slope::new(
            I::from_i64(p).expect("scalar from i64"),
            I::from_i64(q).expect("scalar from i64"),
        )
    }

    pub fn numer(&self) -> &I {
        &self.p
    }

    pub fn denom(&self) -> &I {
        &self.q
    }

    pub fn is_infinity(&self) -> bool {
        self.q.is_zero()
    }

    /// Value as an exact rational; `None` for `1/0`.
    pub fn value(&self) -> Option<Ratio<I>> {
        if self.is_infinity() {
            None
        } else {
            Some(Ratio::new(self.p.clone(), self.q.clone()))
        }
    }
}

/// Signed cross product `p_a q_b - q_a p_b`; zero exactly on equal slopes.
pub fn cross<I: FareyInt>(a: &Slope<I>, b: &Slope<I>) -> I {
    a.p.clone() * b.q.clone() - a.q.clone() * b.p.clone()
}

/// Geometric intersection number on the torus: `|p_a q_b - q_a p_b|`.
pub fn intersection_number<I: FareyInt>(a: &Slope<I>, b: &Slope<I>) -> I {
    cross(a, b).abs()
}

/// Farey adjacency: minimal intersection.
pub fn is_edge<I: FareyInt>(a: &Slope<I>, b: &Slope<I>) -> bool {
    intersection_number(a, b).is_one()
}

impl<I: fmt::Display> fmt::Display for Slope<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl<I: fmt::Debug> fmt::Debug for Slope<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}", self.p, self.q)
    }
}

impl<I: FareyInt> FromStr for Slope<I> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("expected p/q, got {s:?}")))?;
        let p = I::from_str(p.trim())
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let q = I::from_str(q.trim())
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        Slope::try_new(p, q)
    }
}

/// Value ordering with `1/0` greatest; used for deterministic sweeps.
impl<I: FareyInt> Ord for Slope<I> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self.is_infinity(), other.is_infinity()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            // q > 0 on both sides, so cross-multiplication preserves order.
            (false, false) => {
                (self.p.clone() * other.q.clone()).cmp(&(other.p.clone() * self.q.clone()))
            }
        }
    }
}

impl<I: FareyInt> PartialOrd for Slope<I> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical continued fraction of a finite slope.
///
/// `[a0; a1, ..., ak]` with `a_i >= 1` for `i >= 1` and `a_k >= 2` when the
/// list is non-empty, so every finite slope has exactly one code.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContinuedFraction<I> {
    integer_part: I,
    quotients: Vec<I>,
}

impl<I: FareyInt> ContinuedFraction<I> {
    pub fn of_slope(a: &Slope<I>) -> Result<Self> {
        if a.is_infinity() {
            return Err(Error::InfiniteSlopeCf);
        }
        let a0 = a.p.div_floor(&a.q);
        let mut quotients = Vec::new();
        // Euclidean algorithm on the fractional part; remainders strictly
        // decrease, so the last quotient is automatically >= 2.
        let mut num = a.p.mod_floor(&a.q);
        let mut den = a.q.clone();
        while !num.is_zero() {
            let (q, r) = (den.div_floor(&num), den.mod_floor(&num));
            quotients.push(q);
            den = num;
            num = r;
        }
        Ok(ContinuedFraction {
            integer_part: a0,
            quotients,
        })
    }

    /// Rebuild from a word `[a0, a1, ...]`; rejects non-canonical input.
    pub fn from_word(word: &[I]) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::BadContinuedFraction("empty word".into()));
        }
        let cf = ContinuedFraction {
            integer_part: word[0].clone(),
            quotients: word[1..].to_vec(),
        };
        for q in &cf.quotients {
            if !q.is_positive() {
                return Err(Error::BadContinuedFraction(format!(
                    "partial quotient {q} is not positive"
                )));
            }
        }
        if let Some(last) = cf.quotients.last() {
            if *last < I::one() + I::one() {
                return Err(Error::BadContinuedFraction(
                    "last partial quotient must be >= 2".into(),
                ));
            }
        }
        Ok(cf)
    }

    pub fn integer_part(&self) -> &I {
        &self.integer_part
    }

    pub fn quotients(&self) -> &[I] {
        &self.quotients
    }

    /// Full word `[a0, a1, ..., ak]`.
    pub fn word(&self) -> Vec<I> {
        let mut w = Vec::with_capacity(1 + self.quotients.len());
        w.push(self.integer_part.clone());
        w.extend(self.quotients.iter().cloned());
        w
    }

    /// Exact value of the code.
    pub fn value(&self) -> Slope<I> {
        eval_word(&self.word())
    }
}

/// Evaluate a continued-fraction word to a slope; the empty word codes `1/0`.
pub fn eval_word<I: FareyInt>(word: &[I]) -> Slope<I> {
    let Some((last, rest)) = word.split_last() else {
        return Slope::infinity();
    };
    let mut p = last.clone();
    let mut q = I::one();
    for a in rest.iter().rev() {
        let new_p = a.clone() * p.clone() + q;
        q = p;
        p = new_p;
    }
    Slope::new(p, q)
}

/// Longest common prefix length of two words.
pub fn common_prefix_len<I: PartialEq>(a: &[I], b: &[I]) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}

impl<I: FareyInt> fmt::Display for ContinuedFraction<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.integer_part)?;
        if !self.quotients.is_empty() {
            write!(f, ";")?;
            for (i, q) in self.quotients.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{q}")?;
            }
        }
        write!(f, "]")
    }
}

/// The ordered ideal triangles of the Farey tessellation crossed by the
/// hyperbolic geodesic between two slopes. Adjacent endpoints cross no
/// triangle interior and yield the empty sequence.
#[derive(Clone, PartialEq, Eq)]
pub struct PivotSequence<I> {
    triangles: Vec<[Slope<I>; 3]>,
}

impl<I: fmt::Debug> fmt::Debug for PivotSequence<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.triangles).finish()
    }
}

impl<I: FareyInt> PivotSequence<I> {
    pub fn triangles(&self) -> &[[Slope<I>; 3]] {
        &self.triangles
    }

    /// Triangle vertices in first-crossing order, deduplicated.
    pub fn vertices(&self) -> Vec<Slope<I>> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for tri in &self.triangles {
            for v in tri {
                if seen.insert(v.clone(), ()).is_none() {
                    out.push(v.clone());
                }
            }
        }
        out
    }
}

/// Do `u, v` separate `a, b` on the boundary circle? Möbius-invariant
/// sign test on the cross ratio; all four points must be distinct from the
/// edge endpoints.
fn separates<I: FareyInt>(u: &Slope<I>, v: &Slope<I>, a: &Slope<I>, b: &Slope<I>) -> bool {
    let s = cross(u, a).signum() * cross(v, a).signum() * cross(u, b).signum()
        * cross(v, b).signum();
    s.is_negative()
}

/// One solution `(r0, s0)` of `p*s - q*r = 1` for a canonical slope `p/q`;
/// all neighbors of `p/q` are `(r0 + t p) / (s0 + t q)` up to sign.
fn neighbor_base<I: FareyInt>(a: &Slope<I>) -> (I, I) {
    let eg = a.p.extended_gcd(&a.q);
    debug_assert!(eg.gcd.is_one());
    // x*p + y*q = 1  =>  p*(x) - q*(-y) = 1
    (-eg.y, eg.x)
}

fn fan_neighbor<I: FareyInt>(a: &Slope<I>, base: &(I, I), t: &I) -> Slope<I> {
    Slope::new(
        base.0.clone() + t.clone() * a.p.clone(),
        base.1.clone() + t.clone() * a.q.clone(),
    )
}

/// The second common neighbor of the Farey edge `(u, v)`, i.e. the one
/// different from `w`. The two candidates are `u + v` and `u - v`.
fn other_apex<I: FareyInt>(u: &Slope<I>, v: &Slope<I>, w: &Slope<I>) -> Slope<I> {
    let sum = Slope::new(u.p.clone() + v.p.clone(), u.q.clone() + v.q.clone());
    if &sum != w {
        return sum;
    }
    Slope::new(u.p.clone() - v.p.clone(), u.q.clone() - v.q.clone())
}

/// Ordered triangles crossed by the geodesic from `a` to `b`.
pub fn pivot_sequence<I: FareyInt>(a: &Slope<I>, b: &Slope<I>) -> Result<PivotSequence<I>> {
    if a == b {
        return Err(Error::EqualSlopes);
    }
    if is_edge(a, b) {
        return Ok(PivotSequence {
            triangles: Vec::new(),
        });
    }
    // First triangle: the fan triangle at `a` whose opposite edge separates
    // `a` from `b`. With u_t = (r0 + t p)/(s0 + t q) one has
    // cross(u_t, b) = cross(u_0, b) + t * cross(a, b), so the sign change
    // sits between t = k and t = k + 1 for k = floor(-cross(u_0,b)/cross(a,b)).
    let base = neighbor_base(a);
    // Raw cross product of the un-normalized pair (r0, s0) with b; slope
    // canonicalization may negate the pair, which would break the
    // progression.
    let c0 = base.0.clone() * b.q.clone() - base.1.clone() * b.p.clone();
    let ca = cross(a, b);
    let k = (-c0).div_floor(&ca);
    let u = fan_neighbor(a, &base, &k);
    let v = fan_neighbor(a, &base, &(k + I::one()));
    debug_assert!(separates(&u, &v, a, b));
    let mut triangles = vec![[a.clone(), u.clone(), v.clone()]];
    let (mut e1, mut e2, mut from) = (u, v, a.clone());
    loop {
        let apex = other_apex(&e1, &e2, &from);
        triangles.push([e1.clone(), e2.clone(), apex.clone()]);
        if &apex == b {
            break;
        }
        if separates(&e1, &apex, a, b) {
            from = std::mem::replace(&mut e2, apex);
        } else {
            debug_assert!(separates(&e2, &apex, a, b));
            from = std::mem::replace(&mut e1, apex);
        }
    }
    Ok(PivotSequence { triangles })
}

/// Exact graph distance, as a shortest path in the subgraph induced by the
/// pivot vertices together with the endpoints.
pub fn farey_distance<I: FareyInt>(a: &Slope<I>, b: &Slope<I>) -> u64 {
    farey_geodesic(a, b).len() as u64 - 1
}

/// A witness shortest path from `a` to `b`; consecutive entries are edges.
pub fn farey_geodesic<I: FareyInt>(a: &Slope<I>, b: &Slope<I>) -> Vec<Slope<I>> {
    if a == b {
        return vec![a.clone()];
    }
    let pivots = pivot_sequence(a, b).expect("distinct slopes");
    let mut verts: Vec<Slope<I>> = vec![a.clone(), b.clone()];
    for v in pivots.vertices() {
        if v != *a && v != *b {
            verts.push(v);
        }
    }
    let n = verts.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if is_edge(&verts[i], &verts[j]) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    // BFS from a (index 0) to b (index 1).
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    seen[0] = true;
    queue.push_back(0);
    while let Some(i) = queue.pop_front() {
        if i == 1 {
            break;
        }
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                parent[j] = Some(i);
                queue.push_back(j);
            }
        }
    }
    debug_assert!(seen[1], "pivot subgraph must connect the endpoints");
    let mut path = vec![1];
    while let Some(p) = parent[*path.last().unwrap()] {
        path.push(p);
    }
    path.reverse();
    path.into_iter().map(|i| verts[i].clone()).collect()
}
