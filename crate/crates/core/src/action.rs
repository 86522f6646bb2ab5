//! The mapping class group as integer 2x2 matrices of determinant one
//! modulo sign, acting on slopes, boundary codes and annular twist
//! coordinates, with the trace classification and north-south dynamics
//! checks.
//!
//! Twist convention: the left twist about `1/0` is `(1 1; 0 1)`, which adds
//! one to the twist coordinate `floor(p/q)`; left twists about other curves
//! are its conjugates by the canonical normalizer.

use std::fmt;
use std::str::FromStr;


use crate::boundary::{BoundaryPoint, CfStream, PeriodicCf, QuadraticSurd};
use crate::error::{Error, Result};
use crate::slopes::{farey_distance, Slope};
use crate::FareyInt;

/// An integer matrix `(a b; c d)` with `ad - bc = 1`, canonicalized modulo
/// sign so that the first nonzero entry of `(a, b, c, d)` is positive.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MappingClass<I> {
    a: I,
    b: I,
    c: I,
    d: I,
}

impl<I: FareyInt> MappingClass<I> {
    pub fn new(a: I, b: I, c: I, d: I) -> Result<Self> {
        let det = a.clone() * d.clone() - b.clone() * c.clone();
        if !det.is_one() {
            return Err(Error::InvalidDeterminant(det.to_string()));
        }
        let mut m = MappingClass { a, b, c, d };
        m.canonicalize();
        Ok(m)
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let f = |n: i64| I::from_i64(n).expect("scalar from i64");
        MappingClass::new(f(a), f(b), f(c), f(d))
    }

    fn canonicalize(&mut self) {
        for entry in [&self.a, &self.b, &self.c, &self.d] {
            if entry.is_positive() {
                return;
            }
            if entry.is_negative() {
                break;
            }
        }
        self.a = -self.a.clone();
        self.b = -self.b.clone();
        self.c = -self.c.clone();
        self.d = -self.d.clone();
    }

    pub fn identity() -> Self {
        MappingClass {
            a: I::one(),
            b: I::zero(),
            c: I::zero(),
            d: I::one(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self == &Self::identity()
    }

    pub fn entries(&self) -> (&I, &I, &I, &I) {
        (&self.a, &self.b, &self.c, &self.d)
    }

    pub fn trace(&self) -> I {
        self.a.clone() + self.d.clone()
    }

    pub fn compose(&self, other: &Self) -> Self {
        let mut m = MappingClass {
            a: self.a.clone() * other.a.clone() + self.b.clone() * other.c.clone(),
            b: self.a.clone() * other.b.clone() + self.b.clone() * other.d.clone(),
            c: self.c.clone() * other.a.clone() + self.d.clone() * other.c.clone(),
            d: self.c.clone() * other.b.clone() + self.d.clone() * other.d.clone(),
        };
        m.canonicalize();
        m
    }

    pub fn inverse(&self) -> Self {
        let mut m = MappingClass {
            a: self.d.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: self.a.clone(),
        };
        m.canonicalize();
        m
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity();
        for _ in 0..k {
            out = out.compose(self);
        }
        out
    }

    /// Möbius action on slopes: `p/q -> (a p + b q)/(c p + d q)`.
    pub fn act_slope(&self, s: &Slope<I>) -> Slope<I> {
        let p = self.a.clone() * s.numer().clone() + self.b.clone() * s.denom().clone();
        let q = self.c.clone() * s.numer().clone() + self.d.clone() * s.denom().clone();
        // The matrix is unimodular, so the image pair is primitive.
        Slope::new(p, q)
    }
}

impl<I: FareyInt> fmt::Display for MappingClass<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

impl<I: fmt::Debug> fmt::Debug for MappingClass<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?} {:?}; {:?} {:?}]", self.a, self.b, self.c, self.d)
    }
}

impl<I: FareyInt> FromStr for MappingClass<I> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("expected a,b,c,d, got {s:?}")));
        }
        let mut vals = Vec::with_capacity(4);
        for p in parts {
            vals.push(I::from_str(p).map_err(|_| Error::Parse(format!("bad entry {p:?}")))?);
        }
        let d = vals.pop().unwrap();
        let c = vals.pop().unwrap();
        let b = vals.pop().unwrap();
        let a = vals.pop().unwrap();
        MappingClass::new(a, b, c, d)
    }
}

/// Nielsen-Thurston type of a mapping class, with its fixed data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NTClass<I> {
    FiniteOrder,
    TwistReducible { about: Slope<I> },
    PseudoAnosov {
        attracting: PeriodicCf<I>,
        repelling: PeriodicCf<I>,
    },
}

/// Trace classification: `|tr| < 2` finite order, `|tr| = 2` twist about
/// the rational eigendirection (the identity counts as finite order),
/// `|tr| > 2` pseudo-Anosov with exact periodic eigendirection codes.
pub fn classify<I: FareyInt>(m: &MappingClass<I>) -> NTClass<I> {
    let two = I::one() + I::one();
    let tr = m.trace();
    if m.is_identity() {
        return NTClass::FiniteOrder;
    }
    if tr.abs() < two {
        return NTClass::FiniteOrder;
    }
    if tr.abs() == two {
        // Eigenvector for the eigenvalue tr/2 = ±1.
        let lambda = tr / two;
        let (a, b, c, d) = m.entries();
        let v1 = (b.clone(), lambda.clone() - a.clone());
        let about = if !v1.0.is_zero() || !v1.1.is_zero() {
            Slope::new(v1.0, v1.1)
        } else {
            Slope::new(lambda - d.clone(), c.clone())
        };
        return NTClass::TwistReducible { about };
    }
    // Hyperbolic: fixed points ((a - d) ± sqrt(tr^2 - 4)) / (2c). The
    // attracting one carries the eigenvalue of larger modulus, which is
    // (tr + sqrt)/2 for tr > 0 and (tr - sqrt)/2 for tr < 0. c != 0 since
    // c = 0 forces ad = 1 and |tr| = 2.
    let (a, _b, c, d) = m.entries();
    let disc = tr.clone() * tr.clone() - I::from_i64(4).unwrap();
    let p = a.clone() - d.clone();
    let two_c = c.clone() + c.clone();
    let (att, rep) = if tr.is_positive() {
        (
            QuadraticSurd::new(p.clone(), two_c.clone(), disc.clone()),
            // (p - sqrt(D)) / (2c) = (-p + sqrt(D)) / (-2c)
            QuadraticSurd::new(-p, -two_c, disc),
        )
    } else {
        (
            QuadraticSurd::new(-p.clone(), -two_c.clone(), disc.clone()),
            QuadraticSurd::new(p, two_c, disc),
        )
    };
    NTClass::PseudoAnosov {
        attracting: att.to_periodic(),
        repelling: rep.to_periodic(),
    }
}

/// The canonical matrix sending `about` to `1/0`, with the smallest
/// Bézout row: the representative of `p^{-1} mod q` of least absolute
/// value. Deterministic, so twist coordinates are reproducible.
pub fn normalizer_to_infinity<I: FareyInt>(about: &Slope<I>) -> MappingClass<I> {
    if about.is_infinity() {
        return MappingClass::identity();
    }
    let p = about.numer().clone();
    let q = about.denom().clone();
    let eg = p.extended_gcd(&q);
    // x p + y q = 1.
    let (mut x, mut y) = (eg.x, eg.y);
    if q > I::one() {
        let two = I::one() + I::one();
        let mut r = x.mod_floor(&q);
        if r.clone() + r.clone() > q {
            r = r - q.clone();
        }
        y = y.clone() + (x.clone() - r.clone()) / q.clone() * p.clone();
        x = r;
        debug_assert!(x.clone().abs() * two <= q.clone() + q.clone());
    }
    MappingClass::new(x, y, -q, p).expect("unimodular by construction")
}

/// Left Dehn twist about a slope: the conjugate of `(1 1; 0 1)` by the
/// canonical normalizer.
pub fn twist_about<I: FareyInt>(about: &Slope<I>) -> MappingClass<I> {
    let n = normalizer_to_infinity(about);
    let l = MappingClass::new(I::one(), I::one(), I::zero(), I::one()).unwrap();
    n.inverse().compose(&l).compose(&n)
}

/// Twist coordinate of `s` about `about` under a normalizer that sends
/// `about` to `1/0`: the integer part of the image slope. Exactly additive
/// under powers of the left twist.
pub fn twist_coordinate<I: FareyInt>(
    s: &Slope<I>,
    about: &Slope<I>,
    normalizer: &MappingClass<I>,
) -> Result<I> {
    if s == about {
        return Err(Error::DegenerateTwist);
    }
    if !normalizer.act_slope(about).is_infinity() {
        return Err(Error::BadNormalizer);
    }
    let image = normalizer.act_slope(s);
    Ok(image.numer().div_floor(image.denom()))
}

/// Twist coordinate with the canonical normalizer of `about`.
pub fn canonical_twist_coordinate<I: FareyInt>(s: &Slope<I>, about: &Slope<I>) -> Result<I> {
    twist_coordinate(s, about, &normalizer_to_infinity(about))
}

/// Distance between the annular projections of two slopes: the absolute
/// twist difference under a shared normalizer.
pub fn annular_projection_distance<I: FareyInt>(
    x: &Slope<I>,
    y: &Slope<I>,
    about: &Slope<I>,
) -> Result<I> {
    let n = normalizer_to_infinity(about);
    let tx = twist_coordinate(x, about, &n)?;
    let ty = twist_coordinate(y, about, &n)?;
    Ok((tx - ty).abs())
}

/// Exact image of a boundary point. Periodic codes map through the
/// quadratic surd; oriented curves transport the label (an orientation
/// preserving action keeps the twist side); prefix streams map by the
/// homographic algorithm, emitting exactly the quotients the available
/// prefix determines.
pub fn act_boundary<I: FareyInt>(
    m: &MappingClass<I>,
    x: &BoundaryPoint<I>,
    depth: usize,
) -> BoundaryPoint<I> {
    match x {
        BoundaryPoint::OrientedCurve { slope, sign } => BoundaryPoint::OrientedCurve {
            slope: m.act_slope(slope),
            sign: *sign,
        },
        BoundaryPoint::QuadraticIrrational(cf) => {
            let (a, b, c, d) = m.entries();
            let image = cf.to_surd().moebius(a, b, c, d);
            BoundaryPoint::QuadraticIrrational(image.to_periodic())
        }
        BoundaryPoint::PrefixStream(stream) => {
            let m = m.clone();
            let stream = stream.clone();
            let _ = depth;
            BoundaryPoint::PrefixStream(CfStream::from_fn(move |n| {
                homographic_image(&m, &stream, n)
            }))
        }
    }
}

/// First `n` output quotients of `(a x + b)/(c x + d)` for a stream `x`,
/// as far as the available input prefix determines them.
fn homographic_image<I: FareyInt>(m: &MappingClass<I>, x: &CfStream<I>, n: usize) -> Vec<I> {
    // Read generously: each absorbed quotient usually emits about one.
    let input = x.prefix(2 * n + 16);
    let (a, b, c, d) = m.entries();
    let mut st = [a.clone(), b.clone(), c.clone(), d.clone()];
    let mut out = Vec::with_capacity(n);
    let mut absorbed = 0usize;
    while out.len() < n {
        // Emit while the integer part is pinned down over the whole range
        // of the remaining tail t in (1, oo): compare floors at t -> 1 and
        // t -> oo. Valid only once at least one quotient was absorbed.
        let mut emitted = false;
        if absorbed > 0 {
            let [a, b, c, d] = st.clone();
            let c1 = c.clone() + d.clone();
            if !c.is_zero() && !c1.is_zero() && c.is_positive() == c1.is_positive() {
                let v_inf = a.div_floor(&c);
                let v_one = (a.clone() + b.clone()).div_floor(&c1);
                if v_inf == v_one {
                    let e = v_inf;
                    st = [
                        c.clone(),
                        d.clone(),
                        a - e.clone() * c,
                        b - e.clone() * d,
                    ];
                    debug_assert!(out.is_empty() || e.is_positive());
                    out.push(e);
                    emitted = true;
                }
            }
        }
        if !emitted {
            if absorbed >= input.len() {
                break;
            }
            let e = &input[absorbed];
            absorbed += 1;
            let [a, b, c, d] = st;
            st = [
                a.clone() * e.clone() + b,
                a,
                c.clone() * e.clone() + d,
                c,
            ];
        }
    }
    out
}

/// One orbit row of a north-south dynamics report.
#[derive(Clone, Debug)]
pub struct OrbitRow<I> {
    pub iter: u32,
    pub slope: Slope<I>,
    pub product_with_target: u64,
}

/// Per-seed orbit table for a pseudo-Anosov element.
#[derive(Clone, Debug)]
pub struct NorthSouthReport<I> {
    pub attracting: PeriodicCf<I>,
    pub repelling: PeriodicCf<I>,
    pub seeds: Vec<(Slope<I>, Vec<OrbitRow<I>>)>,
}

/// Iterate each seed under `m` and record the Gromov product of the orbit
/// with the attracting fixed point, evaluated against its depth-truncation
/// from the base `1/0`.
pub fn north_south_report<I: FareyInt>(
    m: &MappingClass<I>,
    seeds: &[Slope<I>],
    iters: u32,
    depth: usize,
) -> Result<NorthSouthReport<I>> {
    let NTClass::PseudoAnosov {
        attracting,
        repelling,
    } = classify(m)
    else {
        return Err(Error::NotPseudoAnosov);
    };
    let base = Slope::infinity();
    let target = attracting.convergent(depth);
    let d_base_target = farey_distance(&base, &target);
    let mut out = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let mut rows = Vec::with_capacity(iters as usize);
        let mut x = seed.clone();
        for iter in 1..=iters {
            x = m.act_slope(&x);
            let product = if x == target {
                farey_distance(&base, &x)
            } else {
                let dbx = farey_distance(&base, &x);
                let dxt = farey_distance(&x, &target);
                (dbx + d_base_target - dxt) / 2
            };
            rows.push(OrbitRow {
                iter,
                slope: x.clone(),
                product_with_target: product,
            });
        }
        out.push((seed.clone(), rows));
    }
    Ok(NorthSouthReport {
        attracting,
        repelling,
        seeds: out,
    })
}
