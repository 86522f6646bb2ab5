use curvex_core::boundary::{BoundaryPoint, PeriodicCf, Sign};

use curvex_core::join::*;
use curvex_core::slopes::{farey_geodesic, ContinuedFraction, Slope};
use num_bigint::BigInt;
use num_rational::Ratio;
use std::collections::HashMap;

type I = BigInt;

fn golden() -> BoundaryPoint<I> { BoundaryPoint::golden() }
fn sqrt2() -> BoundaryPoint<I> {
    BoundaryPoint::QuadraticIrrational(PeriodicCf::new(vec![1.into()], vec![2.into()]).unwrap())
}
fn ray(target: &BoundaryPoint<I>, steps: usize, rate: usize) -> Vec<Slope<I>> {
    let deep = target.approx_slope(60).unwrap();
    let path = farey_geodesic(&Slope::infinity(), &deep);
    (1..=steps).map(|n| path[(rate * n).min(path.len() - 1)].clone()).collect()
}

fn main() {
    let uni = Universe::<I>::farey(1);
    let tol = Ratio::new(BigInt::from(1), BigInt::from(10));
    // interleaved
    let ra = ray(&golden(), 10, 2);
    let rb = ray(&sqrt2(), 10, 2);
    let mut seq = Vec::new();
    for n in 0..10 {
        seq.push(WeightedLamination::minimal(&uni, "c1",
            TermPoint::Farey(BoundaryPoint::curve(ra[n].clone(), Sign::Plus))).unwrap());
        seq.push(WeightedLamination::minimal(&uni, "c1",
            TermPoint::Farey(BoundaryPoint::curve(rb[n].clone(), Sign::Plus))).unwrap());
    }
    match extract_limit(&seq, &uni, &tol, 30, 2) {
        Ok(ex) => println!("interleaved indices: {:?}\nlimit {:?}", ex.indices, ex.limit.to_json(8)),
        Err(e) => println!("interleaved err: {e}"),
    }

    // equivariance
    let seq2: Vec<WeightedLamination<I>> = (1..=12).map(|n| {
        WeightedLamination::minimal(&uni, "c1",
            TermPoint::Farey(BoundaryPoint::curve(golden().approx_slope(n).unwrap(), Sign::Plus))).unwrap()
    }).collect();
    let mc: curvex_core::action::MappingClass<I> = "1,1,0,1".parse().unwrap();
    let maps = HashMap::from([("c1".to_string(), mc)]);
    let moved: Vec<WeightedLamination<I>> = seq2.iter().map(|e| act_lamination(&maps, e, 30)).collect();
    let ex = extract_limit(&seq2, &uni, &tol, 25, 2).unwrap();
    let ex_moved = extract_limit(&moved, &uni, &tol, 25, 2).unwrap();
    println!("plain limit:  {:?}", ex.limit.to_json(12));
    println!("moved limit:  {:?}", ex_moved.limit.to_json(12));
    let phi_limit = act_lamination(&maps, &ex.limit, 25);
    println!("phi(plain):   {:?}", phi_limit.to_json(12));
}
