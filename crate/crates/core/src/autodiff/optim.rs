use ndarray::{Array2, Zip};

use super::params::ParamStore;
use super::tape::Gradients;
use super::AutodiffError;

/// Adam with the L2 penalty added to the gradient before the moment updates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(store: &ParamStore) -> Self {
        let zeros: Vec<Array2<f64>> = store
            .ids()
            .map(|id| Array2::zeros(store.get(id).dim()))
            .collect();
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Parameters without a gradient are treated as having a zero gradient.
    /// On a non-finite update nothing is written.
    pub fn step(
        &mut self,
        store: &mut ParamStore,
        grads: &Gradients,
        lr: f64,
        l2: f64,
    ) -> Result<(), AutodiffError> {
        let t = self.t + 1;
        let bc1 = 1.0 - self.beta1.powf(t as f64);
        let bc2 = 1.0 - self.beta2.powf(t as f64);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let mut updates = Vec::with_capacity(store.len());
        for id in store.ids() {
            let theta = store.get(id);
            let mut m = self.m[id.index()].clone();
            let mut v = self.v[id.index()].clone();
            let mut next = theta.clone();
            let zero;
            let g = match grads.param(id) {
                Some(g) => g,
                None => {
                    zero = Array2::zeros(theta.dim());
                    &zero
                }
            };
            Zip::from(&mut next)
                .and(&mut m)
                .and(&mut v)
                .and(g)
                .for_each(|p, m, v, &g| {
                    let g = g + l2 * *p;
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
                });
            if !next.iter().all(|x| x.is_finite()) {
                return Err(AutodiffError::NonFinite { op: "adam_step" });
            }
            updates.push((next, m, v));
        }
        for (id, (next, m, v)) in store.ids().collect::<Vec<_>>().into_iter().zip(updates) {
            *store.get_mut(id) = next;
            self.m[id.index()] = m;
            self.v[id.index()] = v;
        }
        self.t = t;
        Ok(())
    }
}

/// `lr(t) = lr0 · decay^t`, one step per optimizer update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialSchedule {
    pub lr0: f64,
    pub decay: f64,
}

impl ExponentialSchedule {
    pub fn new(lr0: f64, decay: f64) -> Result<Self, AutodiffError> {
        if !(lr0 > 0.0 && lr0.is_finite()) || !(decay > 0.0 && decay <= 1.0) {
            return Err(AutodiffError::InvalidSchedule { lr0, decay });
        }
        Ok(ExponentialSchedule { lr0, decay })
    }

    pub fn lr(&self, step: u64) -> f64 {
        self.lr0 * self.decay.powf(step as f64)
    }
}
