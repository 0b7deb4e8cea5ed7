use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{NodeId, NumError, ParamSet, Tape};

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    pub step: f64,
    /// Parameters larger than this are checked on a random sample of entries.
    pub max_entries: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-4,
            max_entries: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(name, max relative error)` per parameter; frozen ones report 0.
    pub per_param: Vec<(String, f64)>,
    pub entries_checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn eval_loss<F>(params: &ParamSet<f64>, f: &F) -> Result<f64, NumError>
where
    F: for<'a> Fn(&mut Tape<'a, f64>) -> Result<NodeId, NumError>,
{
    let mut tape = Tape::new(params);
    let loss = f(&mut tape)?;
    tape.value(loss).item()
}

/// Compares backward gradients of the scalar built by `f` against central
/// finite differences. `f` must be deterministic across calls.
pub fn grad_check<F>(
    params: &mut ParamSet<f64>,
    f: F,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport, NumError>
where
    F: for<'a> Fn(&mut Tape<'a, f64>) -> Result<NodeId, NumError>,
{
    let grads = {
        let mut tape = Tape::new(&*params);
        let loss = f(&mut tape)?;
        tape.backward(loss)?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradCheckReport::default();
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let name = params.get(id).name.clone();
        if params.is_frozen(id) {
            report.per_param.push((name, 0.0));
            continue;
        }
        let n = params.get(id).value.numel();
        let entries: Vec<usize> = if n <= cfg.max_entries {
            (0..n).collect()
        } else {
            sample(&mut rng, n, cfg.max_entries).into_vec()
        };
        let mut worst: f64 = 0.0;
        for e in entries {
            let analytic = grads.get(id).map_or(0.0, |g| g.data()[e]);
            let orig = params.get(id).value.data()[e];
            let mut at = |delta: f64| {
                params.get_mut(id).value.data_mut()[e] = orig + delta;
                let v = eval_loss(params, &f);
                params.get_mut(id).value.data_mut()[e] = orig;
                v
            };
            let h = cfg.step;
            let numeric = (at(h)? - at(-h)?) / (2.0 * h);
            worst = worst.max(relative_error(analytic, numeric));
            report.entries_checked += 1;
        }
        report.max_rel_error = report.max_rel_error.max(worst);
        report.per_param.push((name, worst));
    }
    Ok(report)
}
