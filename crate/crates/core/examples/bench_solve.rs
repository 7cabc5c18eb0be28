//! Times the exact solver on two random clouds: `cargo run --release --example bench_solve -- 2000`.

use itx::discrete_it::{solve_it, ItInstance};
use itx::measures::{CostKind, DiscreteMeasure, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let n: usize = std::env::args().nth(1).map(|s| s.parse().expect("atom count")).unwrap_or(2000);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cloud = |s: f64| {
        let pts: Vec<Point> =
            (0..n).map(|_| Point::from([rng.random_range(-1.0..1.0) * s, rng.random_range(-1.0..1.0)])).collect();
        DiscreteMeasure::uniform(&pts, 1.0).unwrap()
    };
    let p = cloud(0.3);
    let q = cloud(1.0);
    for w in [1.0, 1.5, 3.0, n as f64] {
        let t = std::time::Instant::now();
        let inst = ItInstance::from_measures(p.clone(), q.clone(), w, CostKind::SqEuclideanNormalized).unwrap();
        let s = solve_it(&inst).unwrap();
        println!(
            "w={w} cost={:.6} gap={:.1e} pivots={} {:.2?}",
            s.primal_cost,
            s.primal_cost - s.dual.objective,
            s.pivots,
            t.elapsed()
        );
    }
}
