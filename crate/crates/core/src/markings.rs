//! Markings of the complexity-one surface: ordered pairs of slopes
//! intersecting once, the marking graph with its twist and swap moves,
//! the staged geodesic construction along a Farey geodesic, and the
//! subsurface-projection gap that bounds marking distance from below.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::action::{annular_projection_distance, normalizer_to_infinity, twist_coordinate};
use crate::error::{Error, Result};
use crate::slopes::{cross, farey_distance, farey_geodesic, intersection_number, Slope};
use crate::FareyInt;

/// An ordered pair `(base, transversal)` of slopes with intersection
/// number one.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Marking<I> {
    base: Slope<I>,
    transversal: Slope<I>,
}

impl<I: FareyInt> Ord for Marking<I> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.base, &self.transversal).cmp(&(&other.base, &other.transversal))
    }
}

impl<I: FareyInt> PartialOrd for Marking<I> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<I: FareyInt> Marking<I> {
    pub fn new(base: Slope<I>, transversal: Slope<I>) -> Result<Self> {
        if !intersection_number(&base, &transversal).is_one() {
            return Err(Error::InvalidMarking);
        }
        Ok(Marking { base, transversal })
    }

    pub fn base(&self) -> &Slope<I> {
        &self.base
    }

    pub fn transversal(&self) -> &Slope<I> {
        &self.transversal
    }

    pub fn components(&self) -> [&Slope<I>; 2] {
        [&self.base, &self.transversal]
    }

    /// Left Dehn twist about the base applied `k` times to the
    /// transversal.
    pub fn twisted(&self, k: &I) -> Marking<I> {
        Marking {
            base: self.base.clone(),
            transversal: twist_image(&self.transversal, &self.base, k),
        }
    }

    pub fn swapped(&self) -> Marking<I> {
        Marking {
            base: self.transversal.clone(),
            transversal: self.base.clone(),
        }
    }
}

impl<I: FareyInt> fmt::Display for Marking<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.base, self.transversal)
    }
}

impl<I: fmt::Debug> fmt::Debug for Marking<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.base, self.transversal)
    }
}

impl<I: FareyInt> FromStr for Marking<I> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (b, t) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected p/q:r/s, got {s:?}")))?;
        Marking::new(b.parse()?, t.parse()?)
    }
}

/// `T_b^k(x) = x - k * cross(x, b) * b` on primitive vectors; the left
/// twist about `1/0` sends `x` to `x + 1`.
pub fn twist_image<I: FareyInt>(x: &Slope<I>, about: &Slope<I>, k: &I) -> Slope<I> {
    let c = cross(x, about);
    let p = x.numer().clone() - k.clone() * c.clone() * about.numer().clone();
    let q = x.denom().clone() - k.clone() * c * about.denom().clone();
    Slope::new(p, q)
}

/// One step in the marking graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkingMove<I> {
    /// `k` left twists about the base applied to the transversal
    /// (`k` nonzero, possibly negative).
    Twist(I),
    /// Exchange base and transversal.
    Swap,
}

/// A path of moves; its length counts unit twists and swaps.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkingPath<I> {
    pub moves: Vec<MarkingMove<I>>,
}

impl<I: FareyInt> MarkingPath<I> {
    pub fn length(&self) -> I {
        let mut total = I::zero();
        for mv in &self.moves {
            match mv {
                MarkingMove::Twist(k) => total = total + k.abs(),
                MarkingMove::Swap => total = total + I::one(),
            }
        }
        total
    }

    pub fn apply(&self, start: &Marking<I>) -> Marking<I> {
        let mut cur = start.clone();
        for mv in &self.moves {
            cur = match mv {
                MarkingMove::Twist(k) => cur.twisted(k),
                MarkingMove::Swap => cur.swapped(),
            };
        }
        cur
    }
}

/// The unit-move neighbors of a marking:
/// `(base, T_base^{±1} transversal)` and `(transversal, base)`.
pub fn elementary_moves<I: FareyInt>(m: &Marking<I>) -> Vec<Marking<I>> {
    let mut out = vec![m.twisted(&I::one()), m.twisted(&(-I::one())), m.swapped()];
    out.sort();
    out.dedup();
    out
}

/// Result of a capped distance computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CappedDistance {
    Within(u64),
    ExceedsCap,
}

impl CappedDistance {
    pub fn unwrap_within(self) -> u64 {
        match self {
            CappedDistance::Within(d) => d,
            CappedDistance::ExceedsCap => panic!("distance exceeds cap"),
        }
    }
}

/// Exact marking-graph distance when it is at most `cap`, by bidirectional
/// breadth first search over unit moves.
pub fn marking_distance_bfs<I: FareyInt>(
    m1: &Marking<I>,
    m2: &Marking<I>,
    cap: u64,
) -> CappedDistance {
    if m1 == m2 {
        return CappedDistance::Within(0);
    }
    let mut da: HashMap<Marking<I>, u64> = HashMap::from([(m1.clone(), 0)]);
    let mut db: HashMap<Marking<I>, u64> = HashMap::from([(m2.clone(), 0)]);
    let mut fa = vec![m1.clone()];
    let mut fb = vec![m2.clone()];
    let (mut la, mut lb) = (0u64, 0u64);
    let mut best: Option<u64> = None;
    loop {
        let expand_a = fa.len() <= fb.len();
        let (frontier, this, other, level) = if expand_a {
            (&mut fa, &mut da, &db, &mut la)
        } else {
            (&mut fb, &mut db, &da, &mut lb)
        };
        let mut next = Vec::new();
        for node in frontier.iter() {
            for n in elementary_moves(node) {
                if !this.contains_key(&n) {
                    this.insert(n.clone(), *level + 1);
                    if let Some(&d_other) = other.get(&n) {
                        let total = *level + 1 + d_other;
                        if best.map_or(true, |b| total < b) {
                            best = Some(total);
                        }
                    }
                    next.push(n);
                }
            }
        }
        *level += 1;
        *frontier = next;
        // Any undiscovered path is longer than la + lb.
        if let Some(b) = best {
            if b <= la + lb {
                return if b <= cap {
                    CappedDistance::Within(b)
                } else {
                    CappedDistance::ExceedsCap
                };
            }
        }
        if la + lb >= cap {
            return match best {
                Some(b) if b <= cap => CappedDistance::Within(b),
                _ => CappedDistance::ExceedsCap,
            };
        }
        if fa.is_empty() && fb.is_empty() {
            return CappedDistance::ExceedsCap;
        }
    }
}

/// The number of base twists taking one transversal of `base` to another:
/// both are neighbors of `base`, hence on a single twist orbit.
fn twist_steps<I: FareyInt>(base: &Slope<I>, from: &Slope<I>, to: &Slope<I>) -> I {
    let n = normalizer_to_infinity(base);
    let a = twist_coordinate(from, base, &n).expect("transversal differs from base");
    let b = twist_coordinate(to, base, &n).expect("transversal differs from base");
    // Images of neighbors of base are integers m/1, so these coordinates
    // are exact, not just coarse.
    debug_assert!(n.act_slope(from).denom().is_one());
    debug_assert!(n.act_slope(to).denom().is_one());
    b - a
}

/// The staged path: walk the Farey geodesic between the bases, at each
/// stage twisting the transversal onto the next geodesic vertex and
/// swapping, with a final twist adjustment.
pub fn mm_path<I: FareyInt>(m1: &Marking<I>, m2: &Marking<I>) -> MarkingPath<I> {
    let mut moves = Vec::new();
    let mut cur = m1.clone();
    let geo = farey_geodesic(&m1.base, &m2.base);
    for next_base in geo.iter().skip(1) {
        let k = twist_steps(&cur.base, &cur.transversal, next_base);
        if !k.is_zero() {
            cur = cur.twisted(&k);
            moves.push(MarkingMove::Twist(k));
        }
        cur = cur.swapped();
        moves.push(MarkingMove::Swap);
        debug_assert_eq!(&cur.base, next_base);
    }
    let k = twist_steps(&cur.base, &cur.transversal, &m2.transversal);
    if !k.is_zero() {
        cur = cur.twisted(&k);
        moves.push(MarkingMove::Twist(k));
    }
    debug_assert_eq!(&cur, m2);
    MarkingPath { moves }
}

/// Witness subsurface for the maximal projection gap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GapWitness<I> {
    WholeSurface,
    Annulus(Slope<I>),
}

/// The maximal projection diameter separating two markings: the Farey
/// distance between the base curves, or the largest annular twist
/// difference over the vertices of the connecting Farey geodesic.
pub fn max_projection_gap<I: FareyInt>(m1: &Marking<I>, m2: &Marking<I>) -> (GapWitness<I>, I) {
    let whole = farey_distance(&m1.base, &m2.base);
    let mut witness = GapWitness::WholeSurface;
    let mut diameter = I::from_u64(whole).expect("distance fits the scalar");
    for v in farey_geodesic(&m1.base, &m2.base) {
        for x in m1.components() {
            if x == &v {
                continue;
            }
            for y in m2.components() {
                if y == &v {
                    continue;
                }
                let d = annular_projection_distance(x, y, &v)
                    .expect("components distinct from the annulus core");
                if d > diameter {
                    diameter = d;
                    witness = GapWitness::Annulus(v.clone());
                }
            }
        }
    }
    (witness, diameter)
}

/// Fixed-seed corpus of marking pairs: the first marking is a bounded word
/// in the two standard twist generators applied to `(1/0, 0/1)`, the
/// second is reached from it by at most `max_moves` unit moves, so the
/// pair's marking distance is at most `max_moves`.
pub fn marking_corpus<I: FareyInt>(
    seed: u64,
    pairs: usize,
    word_len: usize,
    max_moves: usize,
) -> Vec<(Marking<I>, Marking<I>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ta = crate::action::twist_about(&Slope::<I>::infinity());
    let tb = crate::action::twist_about(&Slope::<I>::from_i64(0, 1));
    let gens = [ta.clone(), ta.inverse(), tb.clone(), tb.inverse()];
    let mut out = Vec::with_capacity(pairs);
    while out.len() < pairs {
        let base = Marking::new(Slope::infinity(), Slope::from_i64(0, 1)).unwrap();
        let wl = rng.gen_range(0..=word_len);
        let mut word = crate::action::MappingClass::identity();
        for _ in 0..wl {
            word = word.compose(&gens[rng.gen_range(0..4)]);
        }
        let m1 = Marking::new(
            word.act_slope(&base.base),
            word.act_slope(&base.transversal),
        )
        .expect("the action preserves intersection numbers");
        let steps = rng.gen_range(1..=max_moves.max(1));
        let mut m2 = m1.clone();
        for _ in 0..steps {
            match rng.gen_range(0..3) {
                0 => m2 = m2.twisted(&I::one()),
                1 => m2 = m2.twisted(&(-I::one())),
                _ => m2 = m2.swapped(),
            }
        }
        out.push((m1, m2));
    }
    out
}
