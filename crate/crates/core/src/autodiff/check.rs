use rand::Rng;

use super::params::{ParamId, ParamStore};
use super::tape::Gradients;

/// Picks `n` random (parameter, flat index) coordinates.
pub fn sample_coords<R: Rng + ?Sized>(
    store: &ParamStore,
    n: usize,
    rng: &mut R,
) -> Vec<(ParamId, usize)> {
    let ids: Vec<ParamId> = store.ids().filter(|&id| !store.get(id).is_empty()).collect();
    (0..n)
        .map(|_| {
            let id = ids[rng.gen_range(0..ids.len())];
            (id, rng.gen_range(0..store.get(id).len()))
        })
        .collect()
}

/// Largest `|analytic − central difference| / max(1, |analytic|)` over the
/// given coordinates. `loss` evaluates the scalar loss for a parameter set.
pub fn grad_check<F>(
    store: &ParamStore,
    analytic: &Gradients,
    coords: &[(ParamId, usize)],
    eps: f64,
    mut loss: F,
) -> f64
where
    F: FnMut(&ParamStore) -> f64,
{
    assert!((1e-7..=1e-3).contains(&eps), "eps outside [1e-7, 1e-3]");
    let mut worst: f64 = 0.0;
    let mut probe = store.clone();
    for &(id, k) in coords {
        let cols = store.get(id).ncols();
        let (r, c) = (k / cols, k % cols);
        let orig = store.get(id)[[r, c]];
        probe.get_mut(id)[[r, c]] = orig + eps;
        let plus = loss(&probe);
        probe.get_mut(id)[[r, c]] = orig - eps;
        let minus = loss(&probe);
        probe.get_mut(id)[[r, c]] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.param(id).map_or(0.0, |g| g[[r, c]]);
        worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
    }
    worst
}
