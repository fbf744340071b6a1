//! Fixtures shared by the benchmarks.

use fadingrx::channel::{apply_channel, derotate_features, draw_fading, gen_dataset, Constellation, FadingSpec};
use fadingrx::nn::Sample;
use fadingrx::{Features, PilotDataset, Purpose, SeedTree};

/// `n` derotated received samples, messages cycling through the alphabet.
pub fn features(n: usize, c: &Constellation, spec: &FadingSpec, seed: u64) -> Vec<Features> {
    let mut rng = SeedTree::new(seed).rng(Purpose::TestSymbols, 0, 0);
    (0..n)
        .map(|i| {
            let h = draw_fading(&mut rng, spec);
            let r = apply_channel(c.points()[i % c.order()], &h, &mut rng);
            derotate_features(r, h.phase)
        })
        .collect()
}

/// Pilot datasets of `users` users with unit Rayleigh scale.
pub fn datasets(users: usize, per_user: usize, c: &Constellation, seed: u64) -> Vec<PilotDataset> {
    let seeds = SeedTree::new(seed);
    (0..users)
        .map(|u| gen_dataset(u, 1.0, per_user, c, &mut seeds.rng(Purpose::Dataset, 0, u as u64)).unwrap())
        .collect()
}

pub fn samples(d: &[PilotDataset]) -> Vec<Sample> {
    d.iter().flat_map(|x| x.samples()).collect()
}
