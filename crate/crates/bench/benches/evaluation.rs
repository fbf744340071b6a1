use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use fadingrx::channel::Constellation;
use fadingrx::detectors::{MapDetector, MinDistanceDetector, RayleighMap};
use fadingrx::harness::{ber_evaluate, TestFading, TestStream};
use fadingrx::SeedTree;

fn evaluation(c: &mut Criterion) {
    let con = Constellation::qam16(10.0).unwrap();
    let n = 1 << 16;
    let stream = TestStream::new(SeedTree::new(1), n, 1 << 14, TestFading::Fixed { sigma: 1.0 });
    let map = MapDetector::new(RayleighMap::new(1.0).unwrap(), con.clone());
    let md = MinDistanceDetector { constellation: con.clone() };

    let mut g = c.benchmark_group("ber_evaluate");
    g.throughput(Throughput::Elements(n as u64));
    g.bench_function("map_rayleigh_65536", |b| b.iter(|| ber_evaluate(&map, &stream, &con).unwrap().bit_errors));
    g.bench_function("min_distance_65536", |b| b.iter(|| ber_evaluate(&md, &stream, &con).unwrap().bit_errors));
    g.finish();
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(10).measurement_time(Duration::from_secs(3));
    targets = evaluation
);
criterion_main!(benches);
