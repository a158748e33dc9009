use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::neuro::graph::{Graph, ParamId, ParamStore, Var};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

fn eval<F>(store: &ParamStore<f64>, f: &F) -> Result<f64>
where
    F: Fn(&mut Graph<'_, f64>) -> Result<Var>,
{
    let mut g = Graph::new(store);
    let loss = f(&mut g)?;
    Ok(g.value(loss)[0])
}

/// Compares analytic gradients against central differences on up to
/// `per_tensor` seeded coordinates of every parameter tensor.
///
/// Relative error is `|a - n| / max(1, |a|, |n|)`.
pub fn grad_check<F>(store: &ParamStore<f64>, loss_fn: F, per_tensor: usize, seed: u64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_, f64>) -> Result<Var>,
{
    let analytic = {
        let mut g = Graph::new(store);
        let loss = loss_fn(&mut g)?;
        if !g.value(loss)[0].is_finite() {
            return Err(Error::GradCheck("non-finite loss at the base point".into()));
        }
        g.backward(loss)?.params
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    let mut probe = store.clone();
    for p in 0..store.len() {
        let id = ParamId(p);
        let n = store.get(id).len();
        let coords: Vec<usize> = if n <= per_tensor {
            (0..n).collect()
        } else {
            let mut c = sample(&mut rng, n, per_tensor).into_vec();
            c.sort_unstable();
            c
        };
        for k in coords {
            let orig = store.get(id).data()[k];
            probe.get_mut(id).data_mut()[k] = orig + FD_STEP;
            let up = eval(&probe, &loss_fn)?;
            probe.get_mut(id).data_mut()[k] = orig - FD_STEP;
            let down = eval(&probe, &loss_fn)?;
            probe.get_mut(id).data_mut()[k] = orig;
            let a = analytic.get(id)[k];
            if !(up.is_finite() && down.is_finite() && a.is_finite()) {
                return Err(Error::GradCheck(format!("non-finite value at {}[{k}]", store.name(id))));
            }
            let numeric = (up - down) / (2.0 * FD_STEP);
            let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            report.checked += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((store.name(id).to_string(), k));
            }
        }
    }
    Ok(report)
}
