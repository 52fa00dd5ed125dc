use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use market_frag::auction::{clear_market, MarketSpec, OrderBook, OrderDistribution};
use market_frag::bifurcation::{fixed_points, RootOptions};
use market_frag::fw::{minimize_path, ActionOptions};
use market_frag::phases::{classify_steady_state, fair_field, PhaseOptions};
use market_frag::simulate::{ClassPopulation, Simulation, SimulationConfig};
use market_frag::theory::{LangevinField, MarketSystem};
use market_frag::TraderClassSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn auction(c: &mut Criterion) {
    let dist = OrderDistribution::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bids: Vec<_> = (0..5000).map(|i| (i, dist.sample_bid(&mut rng))).collect();
    let asks: Vec<_> = (5000..10_000).map(|i| (i, dist.sample_ask(&mut rng))).collect();
    let book = OrderBook::new(bids, asks).unwrap();
    let market = MarketSpec::new(0.3).unwrap();
    c.bench_function("clear_market 10k orders", |b| {
        b.iter(|| clear_market(black_box(&book), &market, &mut rng))
    });
}

fn engine(c: &mut Criterion) {
    let classes = [0.8, 0.2].map(|p| ClassPopulation {
        spec: TraderClassSpec::new(p, 1.0 / 0.21, 0.01).unwrap(),
        count: 5000,
    });
    let cfg = SimulationConfig::new(
        MarketSpec::list(&[0.3, 0.35, 0.7]).unwrap(),
        classes.to_vec(),
        OrderDistribution::default(),
        1,
    )
    .unwrap();
    c.bench_function("simulation round 10k agents", |b| {
        b.iter_batched_ref(|| Simulation::new(cfg.clone()).unwrap(), |s| s.step(), BatchSize::LargeInput)
    });
}

fn analysis(c: &mut Criterion) {
    let dist = OrderDistribution::default();
    let field = fair_field(0.8, 0.24, &dist).unwrap();
    c.bench_function("drift and covariance", |b| {
        b.iter(|| (field.drift(black_box([0.1, -0.05])), field.covariance(black_box([0.1, -0.05]))))
    });
    c.bench_function("fixed points 50x50 starts", |b| {
        b.iter(|| fixed_points(&field, 0, &RootOptions::default()))
    });
    let roots = fixed_points(&field, 0, &RootOptions::default());
    let centre = roots.central().unwrap().location;
    let saddle = roots.saddles().next().unwrap().location;
    c.bench_function("minimal action K=10", |b| {
        b.iter(|| minimize_path(&field, centre, saddle, &ActionOptions::default()).unwrap())
    });
    let sys = MarketSystem::two_class([0.3, 0.5, 0.7], [0.8, 0.2], 1.0 / 0.25, 0.01, dist).unwrap();
    let mut g = c.benchmark_group("steady state");
    g.sample_size(10);
    g.bench_function("classify_steady_state", |b| {
        b.iter(|| classify_steady_state(&sys, &PhaseOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, auction, engine, analysis);
criterion_main!(benches);
