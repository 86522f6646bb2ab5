//! The boundary of the Farey graph as a space of continued-fraction codes,
//! with doubled rational points, Gromov products and a visual metric.
//!
//! Boundary points come in three flavours: an oriented curve `c^+`/`c^-`
//! (the two ideal points attached to a vertex), an exact eventually
//! periodic code (quadratic irrational), and a finite-evidence prefix
//! stream. Products and the visual metric are evaluated on depth-truncated
//! approximating slopes; every verdict names its depth, and equality of
//! codes is only ever decided up to a depth.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::slopes::{common_prefix_len, eval_word, farey_distance, ContinuedFraction, Slope};
use crate::{two_pow, FareyInt};

/// Orientation label on a simple closed curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }

    pub fn parse(s: &str) -> Result<Sign> {
        match s {
            "+" => Ok(Sign::Plus),
            "-" => Ok(Sign::Minus),
            other => Err(Error::Parse(format!("bad sign {other:?}"))),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Canonical eventually periodic continued fraction `pre (per)^inf`.
///
/// The period is primitive (not a power of a shorter word) and rolled back
/// into the preperiod as far as possible, so equal quadratic irrationals
/// have equal codes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicCf<I> {
    pre: Vec<I>,
    per: Vec<I>,
}

impl<I: FareyInt> PeriodicCf<I> {
    pub fn new(pre: Vec<I>, per: Vec<I>) -> Result<Self> {
        if per.is_empty() {
            return Err(Error::BadContinuedFraction("empty period".into()));
        }
        for q in &per {
            if !q.is_positive() {
                return Err(Error::BadContinuedFraction(
                    "period quotients must be positive".into(),
                ));
            }
        }
        for q in pre.iter().skip(1) {
            if !q.is_positive() {
                return Err(Error::BadContinuedFraction(
                    "partial quotients after the first must be positive".into(),
                ));
            }
        }
        let mut cf = PeriodicCf { pre, per };
        cf.canonicalize();
        Ok(cf)
    }

    fn canonicalize(&mut self) {
        // Primitive period.
        let n = self.per.len();
        for d in 1..n {
            if n % d == 0 && (0..n).all(|i| self.per[i] == self.per[i % d]) {
                self.per.truncate(d);
                break;
            }
        }
        // Roll the period back into the preperiod while the last entries
        // match; the infinite word is unchanged.
        while let (Some(last_pre), Some(last_per)) = (self.pre.last(), self.per.last()) {
            if last_pre != last_per {
                break;
            }
            self.pre.pop();
            self.per.rotate_right(1);
        }
    }

    pub fn preperiod(&self) -> &[I] {
        &self.pre
    }

    pub fn period(&self) -> &[I] {
        &self.per
    }

    /// First `n` partial quotients of the infinite word.
    pub fn quotients(&self, n: usize) -> Vec<I> {
        let mut out: Vec<I> = self.pre.iter().take(n).cloned().collect();
        let mut i = 0;
        while out.len() < n {
            out.push(self.per[i % self.per.len()].clone());
            i += 1;
        }
        out
    }

    /// Convergent at the given depth.
    pub fn convergent(&self, depth: usize) -> Slope<I> {
        eval_word(&self.quotients(depth.max(1)))
    }

    /// Exact value as a quadratic surd.
    pub fn to_surd(&self) -> QuadraticSurd<I> {
        QuadraticSurd::from_periodic(self)
    }
}

impl<I: FareyInt> fmt::Display for PeriodicCf<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |w: &[I]| {
            w.iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "[{};({})]", join(&self.pre), join(&self.per))
    }
}

/// Exact quadratic irrational `(p + sqrt(d)) / q` with `d > 0` not a
/// square and `q | d - p^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticSurd<I> {
    p: I,
    q: I,
    d: I,
}

impl<I: FareyInt> QuadraticSurd<I> {
    /// Build from raw data, restoring the divisibility invariant.
    pub fn new(p: I, q: I, d: I) -> Self {
        assert!(!q.is_zero(), "surd denominator must be nonzero");
        assert!(d.is_positive(), "surd discriminant must be positive");
        debug_assert!(d.sqrt().clone() * d.sqrt() != d, "discriminant is a square");
        let mut s = QuadraticSurd { p, q, d };
        s.reduce();
        if !((s.d.clone() - s.p.clone() * s.p.clone()).mod_floor(&s.q)).is_zero() {
            let scale = s.q.abs();
            s.p = s.p * scale.clone();
            s.d = s.d * scale.clone() * scale.clone();
            s.q = s.q * scale;
        }
        s
    }

    fn reduce(&mut self) {
        // Strip common factors g of p and q whose square divides d.
        let mut g = self.p.gcd(&self.q);
        while g > I::one() {
            let g2 = g.clone() * g.clone();
            if (self.d.mod_floor(&g2)).is_zero() {
                self.p = self.p.clone() / g.clone();
                self.q = self.q.clone() / g.clone();
                self.d = self.d.clone() / g2;
                g = self.p.gcd(&self.q);
            } else {
                break;
            }
        }
    }

    /// Floor of the value; exact, using the integer square root.
    pub fn floor(&self) -> I {
        let s = self.d.sqrt();
        let num = self.p.clone() + s;
        if self.q.is_positive() {
            num.div_floor(&self.q)
        } else {
            // The value is irrational, hence never an integer, and
            // floor(x) = -floor(-x) - 1.
            let neg_q = -self.q.clone();
            -(num.div_floor(&neg_q)) - I::one()
        }
    }

    /// Image under the Möbius transformation with matrix rows `(a b; c d)`.
    pub fn moebius(&self, a: &I, b: &I, c: &I, d: &I) -> Self {
        let den_rat = c.clone() * self.p.clone() + d.clone() * self.q.clone();
        let num_rat = a.clone() * self.p.clone() + b.clone() * self.q.clone();
        let det = a.clone() * d.clone() - b.clone() * c.clone();
        let mut e = den_rat.clone() * den_rat.clone() - c.clone() * c.clone() * self.d.clone();
        let mut n0 = num_rat * den_rat - a.clone() * c.clone() * self.d.clone();
        let mut k = det * self.q.clone();
        if k.is_negative() {
            n0 = -n0;
            k = -k;
            e = -e;
        }
        let g = n0.gcd(&k).gcd(&e);
        let (n0, k, e) = (n0 / g.clone(), k / g.clone(), e / g);
        QuadraticSurd::new(n0, e, k.clone() * k * self.d.clone())
    }

    /// Canonical eventually periodic continued fraction of the value.
    pub fn to_periodic(&self) -> PeriodicCf<I> {
        let mut p = self.p.clone();
        let mut q = self.q.clone();
        let d = self.d.clone();
        let mut quotients: Vec<I> = Vec::new();
        let mut seen: HashMap<(I, I), usize> = HashMap::new();
        loop {
            if let Some(&start) = seen.get(&(p.clone(), q.clone())) {
                let per = quotients.split_off(start);
                return PeriodicCf::new(quotients, per).expect("algorithm emits canonical data");
            }
            seen.insert((p.clone(), q.clone()), quotients.len());
            let a = QuadraticSurd {
                p: p.clone(),
                q: q.clone(),
                d: d.clone(),
            }
            .floor();
            quotients.push(a.clone());
            let p_next = a * q.clone() - p;
            let q_next = (d.clone() - p_next.clone() * p_next.clone()) / q;
            p = p_next;
            q = q_next;
            assert!(
                quotients.len() < 100_000,
                "period detection runaway; non-canonical surd?"
            );
        }
    }

    /// Fixed point `> 1` of the matrix of a purely periodic word, pushed
    /// through the preperiod.
    pub fn from_periodic(cf: &PeriodicCf<I>) -> Self {
        let (pa, pb, pc, pd) = word_matrix(&cf.per);
        // t = (A t + B)/(C t + D), t > 1: the positive root.
        let tr_diff = pa.clone() - pd.clone();
        let four = I::one() + I::one() + I::one() + I::one();
        let disc = tr_diff.clone() * tr_diff.clone() + four * pb * pc.clone();
        let two_c = pc.clone() + pc;
        let t = QuadraticSurd::new(tr_diff, two_c, disc);
        if cf.pre.is_empty() {
            t
        } else {
            let (a, b, c, d) = word_matrix(&cf.pre);
            t.moebius(&a, &b, &c, &d)
        }
    }
}

/// Convergent matrix of a word: product of `(a 1; 1 0)` over the letters.
pub(crate) fn word_matrix<I: FareyInt>(word: &[I]) -> (I, I, I, I) {
    let (mut a, mut b, mut c, mut d) = (I::one(), I::zero(), I::zero(), I::one());
    for x in word {
        let (na, nb) = (a.clone() * x.clone() + b, a);
        let (nc, nd) = (c.clone() * x.clone() + d, c);
        a = na;
        b = nb;
        c = nc;
        d = nd;
    }
    (a, b, c, d)
}

/// A replayable source of partial quotients: `prefix(n)` returns the first
/// `min(n, available)` quotients and never contradicts an earlier call.
#[derive(Clone)]
pub struct CfStream<I> {
    source: Arc<dyn Fn(usize) -> Vec<I> + Send + Sync>,
}

impl<I: FareyInt> CfStream<I> {
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(usize) -> Vec<I> + Send + Sync + 'static,
    {
        CfStream {
            source: Arc::new(f),
        }
    }

    /// Finite evidence: a fixed prefix, exhausted beyond its length.
    pub fn from_prefix(word: Vec<I>) -> Self {
        CfStream::from_fn(move |n| word.iter().take(n).cloned().collect())
    }

    pub fn prefix(&self, n: usize) -> Vec<I> {
        let out = (self.source)(n);
        debug_assert!(out.len() <= n);
        debug_assert!(out.iter().skip(1).all(|q| q.is_positive()));
        out
    }

    fn ptr_eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.source, &other.source)
    }
}

impl<I: fmt::Debug> fmt::Debug for CfStream<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CfStream({:?}…)", (self.source)(8))
    }
}

/// A point of the doubled-rational boundary model.
#[derive(Clone, Debug)]
pub enum BoundaryPoint<I> {
    /// A labeled vertex: the two ideal points `c^+`, `c^-` over a slope.
    OrientedCurve { slope: Slope<I>, sign: Sign },
    /// An exact quadratic irrational as an eventually periodic code.
    QuadraticIrrational(PeriodicCf<I>),
    /// Finite-prefix evidence for an irrational point.
    PrefixStream(CfStream<I>),
}

impl<I: FareyInt> BoundaryPoint<I> {
    pub fn curve(slope: Slope<I>, sign: Sign) -> Self {
        BoundaryPoint::OrientedCurve { slope, sign }
    }

    pub fn golden() -> Self {
        BoundaryPoint::QuadraticIrrational(
            PeriodicCf::new(vec![], vec![I::one()]).expect("canonical"),
        )
    }

    /// Irrational-coded points fill the surface; oriented curves do not.
    pub fn is_filling(&self) -> bool {
        !matches!(self, BoundaryPoint::OrientedCurve { .. })
    }

    /// First `n` partial quotients of the code. Oriented curves expose the
    /// finite word of their slope (`1/0` has the empty word).
    pub fn cf_prefix(&self, n: usize) -> Vec<I> {
        match self {
            BoundaryPoint::OrientedCurve { slope, .. } => {
                if slope.is_infinity() {
                    Vec::new()
                } else {
                    let cf = ContinuedFraction::of_slope(slope).expect("finite slope");
                    cf.word().into_iter().take(n).collect()
                }
            }
            BoundaryPoint::QuadraticIrrational(cf) => cf.quotients(n),
            BoundaryPoint::PrefixStream(s) => s.prefix(n),
        }
    }

    /// Depth-truncated approximating slope.
    pub fn approx_slope(&self, depth: usize) -> Result<Slope<I>> {
        match self {
            BoundaryPoint::OrientedCurve { slope, .. } => Ok(slope.clone()),
            _ => {
                let word = self.cf_prefix(depth.max(1));
                if word.is_empty() {
                    return Err(Error::InsufficientDepth {
                        needed: 1,
                        available: 0,
                    });
                }
                Ok(eval_word(&word))
            }
        }
    }

    /// Structural equality of exact codes; prefix streams only compare
    /// equal to themselves.
    pub fn same_code(&self, other: &Self) -> bool {
        match (self, other) {
            (
                BoundaryPoint::OrientedCurve { slope: a, sign: sa },
                BoundaryPoint::OrientedCurve { slope: b, sign: sb },
            ) => a == b && sa == sb,
            (BoundaryPoint::QuadraticIrrational(a), BoundaryPoint::QuadraticIrrational(b)) => {
                a == b
            }
            (BoundaryPoint::PrefixStream(a), BoundaryPoint::PrefixStream(b)) => a.ptr_eq(b),
            _ => false,
        }
    }

    /// Length of the common code prefix, capped at `depth`. Equal points
    /// count as agreeing through the cap.
    pub fn agreement(&self, other: &Self, depth: usize) -> usize {
        if self.same_code(other) {
            return depth;
        }
        if let (
            BoundaryPoint::OrientedCurve { slope: a, .. },
            BoundaryPoint::OrientedCurve { slope: b, .. },
        ) = (self, other)
        {
            if a == b {
                // Same underlying curve, opposite labels.
                return depth.saturating_sub(1);
            }
        }
        common_prefix_len(&self.cf_prefix(depth), &other.cf_prefix(depth))
    }

    /// Do the codes agree through `depth`?
    pub fn eq_at_depth(&self, other: &Self, depth: usize) -> bool {
        self.same_code(other) || self.agreement(other, depth) >= depth
    }

    pub fn to_json(&self, depth: usize) -> Value {
        match self {
            BoundaryPoint::OrientedCurve { slope, sign } => json!({
                "kind": "curve",
                "slope": slope.to_string(),
                "sign": sign.as_str(),
            }),
            BoundaryPoint::QuadraticIrrational(cf) => json!({
                "kind": "quad",
                "pre": cf.pre.iter().map(quotient_to_json).collect::<Vec<_>>(),
                "per": cf.per.iter().map(quotient_to_json).collect::<Vec<_>>(),
            }),
            BoundaryPoint::PrefixStream(s) => json!({
                "kind": "prefix",
                "cf": s.prefix(depth).iter().map(quotient_to_json).collect::<Vec<_>>(),
            }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("boundary point needs a kind".into()))?;
        match kind {
            "curve" => {
                let slope = v
                    .get("slope")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::Parse("curve needs a slope".into()))?
                    .parse()?;
                let sign = Sign::parse(
                    v.get("sign")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::Parse("curve needs a sign".into()))?,
                )?;
                Ok(BoundaryPoint::OrientedCurve { slope, sign })
            }
            "quad" => {
                let pre = json_word(v.get("pre"))?;
                let per = json_word(v.get("per"))?;
                Ok(BoundaryPoint::QuadraticIrrational(PeriodicCf::new(
                    pre, per,
                )?))
            }
            "prefix" => {
                let cf = json_word(v.get("cf"))?;
                Ok(BoundaryPoint::PrefixStream(CfStream::from_prefix(cf)))
            }
            other => Err(Error::Parse(format!("unknown boundary kind {other:?}"))),
        }
    }
}

fn quotient_to_json<I: FareyInt>(q: &I) -> Value {
    match q.to_i64() {
        Some(n) => json!(n),
        None => json!(q.to_string()),
    }
}

fn json_word<I: FareyInt>(v: Option<&Value>) -> Result<Vec<I>> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("expected an array of partial quotients".into()))?;
    arr.iter()
        .map(|x| match x {
            Value::Number(n) => n
                .as_i64()
                .and_then(I::from_i64)
                .ok_or_else(|| Error::Parse(format!("bad quotient {n}"))),
            Value::String(s) => {
                I::from_str(s).map_err(|_| Error::Parse(format!("bad quotient {s}")))
            }
            other => Err(Error::Parse(format!("bad quotient {other}"))),
        })
        .collect()
}

/// Either a vertex of the graph or an ideal point: the two kinds of
/// arguments a Gromov product accepts.
#[derive(Clone, Debug)]
pub enum Site<I> {
    Vertex(Slope<I>),
    Ideal(BoundaryPoint<I>),
}

impl<I: FareyInt> Site<I> {
    pub fn approx(&self, depth: usize) -> Result<Slope<I>> {
        match self {
            Site::Vertex(s) => Ok(s.clone()),
            Site::Ideal(p) => p.approx_slope(depth),
        }
    }
}

impl<I: FareyInt> From<Slope<I>> for Site<I> {
    fn from(s: Slope<I>) -> Self {
        Site::Vertex(s)
    }
}

impl<I: FareyInt> From<BoundaryPoint<I>> for Site<I> {
    fn from(p: BoundaryPoint<I>) -> Self {
        Site::Ideal(p)
    }
}

/// A certified lower bound for a Gromov product, with a stability flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GromovProductEstimate {
    /// Minimum of the values observed at the three deepest truncations.
    pub lower: u64,
    /// True when the value was unchanged for three consecutive depths.
    pub exact: bool,
}

fn product_at<I: FareyInt>(x: &Site<I>, y: &Site<I>, base: &Slope<I>, depth: usize) -> Result<u64> {
    let ax = x.approx(depth)?;
    let ay = y.approx(depth)?;
    if ax == ay {
        return Err(Error::IndistinguishableAtDepth { depth });
    }
    let dbx = farey_distance(base, &ax);
    let dby = farey_distance(base, &ay);
    let dxy = farey_distance(&ax, &ay);
    debug_assert!(dbx + dby >= dxy);
    Ok((dbx + dby - dxy) / 2)
}

/// Gromov product `(x | y)` at `base`, evaluated on depth-truncated
/// approximating slopes at the three deepest truncations.
pub fn gromov_product<I: FareyInt>(
    x: &Site<I>,
    y: &Site<I>,
    base: &Slope<I>,
    depth: usize,
) -> Result<GromovProductEstimate> {
    let depth = depth.max(1);
    let depths: Vec<usize> = [depth.saturating_sub(2), depth.saturating_sub(1), depth]
        .into_iter()
        .filter(|&d| d >= 1)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut values = Vec::with_capacity(3);
    for d in &depths {
        values.push(product_at(x, y, base, *d)?);
    }
    let lower = *values.iter().min().expect("nonempty");
    let exact = values.len() == 3 && values.iter().all(|v| *v == values[0]);
    Ok(GromovProductEstimate { lower, exact })
}

/// Visual metric `2^-(x|y)`; zero for identical codes by convention.
pub fn visual_distance<I: FareyInt>(
    x: &Site<I>,
    y: &Site<I>,
    base: &Slope<I>,
    depth: usize,
) -> Result<Ratio<I>> {
    let same = match (x, y) {
        (Site::Vertex(a), Site::Vertex(b)) => a == b,
        (Site::Ideal(a), Site::Ideal(b)) => a.same_code(b),
        _ => false,
    };
    if same {
        return Ok(Ratio::zero());
    }
    let est = gromov_product(x, y, base, depth)?;
    Ok(Ratio::new(I::one(), two_pow(est.lower as usize)))
}

/// Per-entry divergence scores of a slope sequence against an ideal
/// target: the sum of doubled Gromov products with the target's two
/// deepest truncations. Doubling keeps the products integral, and summing
/// over both truncation parities removes the phase artifact where both
/// distance terms step on the same move.
pub(crate) fn product_scores<I: FareyInt>(
    seq: &[Slope<I>],
    target: &BoundaryPoint<I>,
    base: &Slope<I>,
    depth: usize,
) -> Vec<i64> {
    let depth = depth.max(2);
    let truncs: Vec<Slope<I>> = [depth - 1, depth]
        .into_iter()
        .filter_map(|d| target.approx_slope(d).ok())
        .collect();
    if truncs.is_empty() {
        return vec![0; seq.len()];
    }
    let d_base: Vec<u64> = truncs.iter().map(|t| farey_distance(base, t)).collect();
    seq.iter()
        .map(|s| {
            truncs
                .iter()
                .zip(&d_base)
                .map(|(t, dbt)| {
                    let dbx = farey_distance(base, s);
                    let dxt = farey_distance(s, t);
                    if dbx == dbt + dxt {
                        // The truncation lies between the base and the
                        // entry: the finite code cannot separate them, so
                        // the entry counts with its full distance.
                        2 * dbx as i64
                    } else {
                        (dbx + dbt) as i64 - dxt as i64
                    }
                })
                .sum()
        })
        .collect()
}

/// Does each full window raise the running maximum? The finite-evidence
/// divergence criterion used throughout.
pub(crate) fn window_divergent(scores: &[i64], window: usize) -> bool {
    let window = window.max(1);
    let blocks = scores.len() / window;
    if blocks < 2 {
        return false;
    }
    let mut best = i64::MIN;
    for b in 0..blocks {
        let block_max = scores[b * window..(b + 1) * window]
            .iter()
            .copied()
            .max()
            .expect("nonempty block");
        if block_max <= best {
            return false;
        }
        best = block_max;
    }
    true
}

/// Does the sequence of slopes converge to the target, judged on finite
/// evidence? Irrational targets require Gromov products with the target to
/// climb in every window; oriented-curve targets require the annular twist
/// coordinate about the curve to diverge on the labeled side.
pub fn converges_to<I: FareyInt>(
    seq: &[Slope<I>],
    target: &BoundaryPoint<I>,
    base: &Slope<I>,
    depth: usize,
    window: usize,
) -> bool {
    if seq.is_empty() {
        return false;
    }
    match target {
        BoundaryPoint::OrientedCurve { slope, sign } => {
            let mut scores = Vec::with_capacity(seq.len());
            for s in seq {
                if s == slope {
                    // The core curve itself carries no twist data.
                    continue;
                }
                let t = crate::action::canonical_twist_coordinate(s, slope)
                    .expect("distinct slopes have twist coordinates");
                let signed = match sign {
                    Sign::Plus => t,
                    Sign::Minus => -t,
                };
                scores.push(signed.to_i64().unwrap_or(i64::MAX / 2));
            }
            window_divergent(&scores, window)
        }
        _ => {
            let scores = product_scores(seq, target, base, depth);
            window_divergent(&scores, window)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    type I = i64;
    type BP = BoundaryPoint<I>;

    fn s(p: i64, q: i64) -> Slope<I> {
        Slope::new(p, q)
    }

    fn golden() -> BP {
        BP::golden()
    }

    #[test]
    fn periodic_cf_canonical_forms() {
        // A power of a shorter word collapses.
        let cf = PeriodicCf::<i64>::new(vec![], vec![2, 1, 2, 1]).unwrap();
        assert_eq!(cf.period(), &[2, 1]);
        // Rollback: pre [2], per [1,2] is the same word as per [2,1].
        let a = PeriodicCf::<i64>::new(vec![2], vec![1, 2]).unwrap();
        let b = PeriodicCf::<i64>::new(vec![], vec![2, 1]).unwrap();
        assert_eq!(a, b);
        assert!(PeriodicCf::<i64>::new(vec![1], vec![]).is_err());
        assert!(PeriodicCf::<i64>::new(vec![1], vec![0]).is_err());
    }

    #[test]
    fn golden_quotients_and_convergents() {
        let g = golden();
        assert_eq!(g.cf_prefix(5), vec![1, 1, 1, 1, 1]);
        // Convergents are ratios of consecutive Fibonacci numbers.
        assert_eq!(g.approx_slope(5).unwrap(), s(8, 5));
    }

    #[test]
    fn surd_roundtrip() {
        // sqrt(2) = [1;(2)], sqrt(3) = [1;(1,2)], golden = [(1)].
        let cases: Vec<(QuadraticSurd<i64>, PeriodicCf<i64>)> = vec![
            (
                QuadraticSurd::new(0, 1, 2),
                PeriodicCf::new(vec![1], vec![2]).unwrap(),
            ),
            (
                QuadraticSurd::new(0, 1, 3),
                PeriodicCf::new(vec![1], vec![1, 2]).unwrap(),
            ),
            (
                QuadraticSurd::new(1, 2, 5),
                PeriodicCf::new(vec![], vec![1]).unwrap(),
            ),
        ];
        for (surd, cf) in cases {
            assert_eq!(surd.to_periodic(), cf);
            let back = QuadraticSurd::from_periodic(&cf);
            assert_eq!(back.to_periodic(), cf, "roundtrip through from_periodic");
        }
    }

    #[test]
    fn surd_floor_negative_denominator() {
        // (1 - sqrt(5))/2 ≈ -0.618: floor is -1.
        let x = QuadraticSurd::new(-1, -2, 5);
        assert_eq!(x.floor(), -1);
        let cf = x.to_periodic();
        // The code starts with -1 and has positive quotients afterwards.
        assert_eq!(cf.quotients(1), vec![-1]);
        assert!(cf.quotients(8).iter().skip(1).all(|&q| q > 0));
        // Roundtrip through the exact value.
        assert_eq!(QuadraticSurd::from_periodic(&cf).to_periodic(), cf);
    }

    #[test]
    fn product_base_at_endpoint_is_zero() {
        let est = gromov_product(
            &Site::Vertex(s(0, 1)),
            &Site::Vertex(Slope::infinity()),
            &Slope::infinity(),
            6,
        )
        .unwrap();
        assert_eq!(est.lower, 0);
        assert!(est.exact);
    }

    #[test]
    fn product_of_indistinguishable_codes_errors() {
        let g = golden();
        let err = gromov_product(
            &Site::Ideal(g.clone()),
            &Site::Ideal(g),
            &Slope::infinity(),
            6,
        );
        assert!(matches!(err, Err(Error::IndistinguishableAtDepth { .. })));
    }

    #[test]
    fn product_truncations_differing_early() {
        // Codes that split at position 1 have a small product over any base.
        let x = BP::PrefixStream(CfStream::from_prefix(vec![0, 2, 1, 1, 1, 1]));
        let y = BP::PrefixStream(CfStream::from_prefix(vec![0, 3, 1, 1, 1, 1]));
        let est = gromov_product(&Site::Ideal(x), &Site::Ideal(y), &Slope::infinity(), 6).unwrap();
        assert!(est.lower <= 3);
    }

    #[test]
    fn product_golden_vs_shifted() {
        // [1;1,1,...] against [2;1,1,...]: truncations stay within
        // denominator 100 at depth 10; cross-checked against the
        // brute-force BFS oracle at full depth.
        let g = golden();
        let h = BP::QuadraticIrrational(PeriodicCf::new(vec![2], vec![1]).unwrap());
        let depth = 10;
        let est = gromov_product(
            &Site::Ideal(g.clone()),
            &Site::Ideal(h.clone()),
            &Slope::infinity(),
            depth,
        )
        .unwrap();
        let ax = g.approx_slope(depth).unwrap();
        let ay = h.approx_slope(depth).unwrap();
        assert!(*ax.denom() <= 100 && *ay.denom() <= 100);
        let b = Slope::infinity();
        let want = (oracle::stable_bfs_distance(&b, &ax) + oracle::stable_bfs_distance(&b, &ay)
            - oracle::stable_bfs_distance(&ax, &ay))
            / 2;
        assert!(est.lower <= want && want <= est.lower + 1);
    }

    #[test]
    fn visual_distance_conventions() {
        let g = golden();
        let d = visual_distance(
            &Site::Ideal(g.clone()),
            &Site::Ideal(g.clone()),
            &Slope::infinity(),
            8,
        )
        .unwrap();
        assert_eq!(d, Ratio::zero());

        // Endpoints of a common edge from the base: product 0, distance 1.
        let d = visual_distance(
            &Site::Vertex(s(0, 1)),
            &Site::Vertex(s(1, 1)),
            &Slope::infinity(),
            8,
        )
        .unwrap();
        assert_eq!(d, Ratio::new(1, 1));
    }

    #[test]
    fn visual_distance_halves_along_matched_tails() {
        // Pairs of Fibonacci-style tails sharing a prefix of length L that
        // then diverge: as L grows by matched steps the visual distance at
        // least halves.
        let g = golden();
        let mut prev: Option<Ratio<I>> = None;
        for shared in [5usize, 10, 15] {
            let mut word = g.cf_prefix(shared);
            word.extend([3, 1, 1, 1, 1, 1, 1, 1]);
            let other = BP::PrefixStream(CfStream::from_prefix(word));
            let d = visual_distance(
                &Site::Ideal(g.clone()),
                &Site::Ideal(other),
                &Slope::infinity(),
                shared + 8,
            )
            .unwrap();
            if let Some(p) = &prev {
                assert!(
                    d.clone() + d.clone() <= *p,
                    "distance must at least halve: {d} vs {p}"
                );
            }
            prev = Some(d);
        }
    }

    #[test]
    fn convergents_converge() {
        let g = golden();
        let seq: Vec<Slope<I>> = (1..=12).map(|n| g.approx_slope(n).unwrap()).collect();
        assert!(converges_to(&seq, &g, &Slope::infinity(), 20, 3));
    }

    #[test]
    fn constant_sequence_does_not_converge() {
        let g = golden();
        let seq = vec![s(0, 1); 12];
        assert!(!converges_to(&seq, &g, &Slope::infinity(), 20, 3));
    }

    #[test]
    fn corrupted_subsequence_behaviour() {
        let g = golden();
        let mut seq: Vec<Slope<I>> = (1..=15).map(|n| g.approx_slope(n).unwrap()).collect();
        for i in (2..seq.len()).step_by(3) {
            seq[i] = s(0, 1);
        }
        assert!(!converges_to(&seq, &g, &Slope::infinity(), 25, 1));
        let clean: Vec<Slope<I>> = seq.iter().filter(|x| **x != s(0, 1)).cloned().collect();
        assert!(converges_to(&clean, &g, &Slope::infinity(), 25, 1));
    }

    #[test]
    fn subsequence_stability_on_honest_data() {
        let g = golden();
        let seq: Vec<Slope<I>> = (1..=24).map(|n| g.approx_slope(n).unwrap()).collect();
        assert!(converges_to(&seq, &g, &Slope::infinity(), 30, 2));
        let every_other: Vec<Slope<I>> = seq.iter().step_by(2).cloned().collect();
        let every_third: Vec<Slope<I>> = seq.iter().step_by(3).cloned().collect();
        assert!(converges_to(&every_other, &g, &Slope::infinity(), 30, 2));
        assert!(converges_to(&every_third, &g, &Slope::infinity(), 30, 2));
    }

    #[test]
    fn hyperbolicity_proxy_on_sampled_triples() {
        // Four-point condition min((x|y),(y|z)) <= (x|z) + delta with an
        // empirical delta of at most 3 across the sample.
        let pts: Vec<BP> = vec![
            golden(),
            BP::QuadraticIrrational(PeriodicCf::new(vec![2], vec![1]).unwrap()),
            BP::QuadraticIrrational(PeriodicCf::new(vec![0, 2], vec![3]).unwrap()),
            BP::QuadraticIrrational(PeriodicCf::new(vec![-1, 1], vec![2, 1]).unwrap()),
            BP::QuadraticIrrational(PeriodicCf::new(vec![], vec![4]).unwrap()),
            BP::QuadraticIrrational(PeriodicCf::new(vec![1, 5], vec![1, 3]).unwrap()),
        ];
        let base = Slope::infinity();
        let depth = 14;
        let p = |x: &BP, y: &BP| {
            gromov_product(
                &Site::Ideal(x.clone()),
                &Site::Ideal(y.clone()),
                &base,
                depth,
            )
            .unwrap()
            .lower as i64
        };
        for x in &pts {
            for y in &pts {
                for z in &pts {
                    if x.same_code(y) || y.same_code(z) || x.same_code(z) {
                        continue;
                    }
                    let (a, b, c) = (p(x, y), p(y, z), p(x, z));
                    assert!(a.min(b) <= c + 3, "delta proxy violated: {a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let points = vec![
            BP::curve(s(3, 2), Sign::Minus),
            golden(),
            BP::PrefixStream(CfStream::from_prefix(vec![0, 2, 1, 1])),
        ];
        for p in points {
            let v = p.to_json(8);
            let q = BP::from_json(&v).unwrap();
            assert!(p.eq_at_depth(&q, 4));
        }
    }
}
