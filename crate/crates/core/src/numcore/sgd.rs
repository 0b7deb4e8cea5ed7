use super::{ParamSet, Scalar};

/// `p ← p − lr · ∇p` for every unfrozen parameter, then clears gradients.
pub fn sgd_step<T: Scalar>(params: &mut ParamSet<T>, lr: f64) {
    let lr = T::of(lr);
    for p in params.iter_mut().filter(|p| !p.frozen) {
        for (v, &g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
            *v -= lr * g;
        }
    }
    params.zero_grad();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Tensor;

    #[test]
    fn step_moves_against_gradient_and_skips_frozen() {
        let mut ps = ParamSet::<f64>::new();
        let a = ps.add("a.w", Tensor::scalar(1.0)).unwrap();
        let b = ps.add("b.w", Tensor::scalar(1.0)).unwrap();
        ps.get_mut(a).grad = Tensor::scalar(0.5);
        ps.get_mut(b).grad = Tensor::scalar(0.5);
        ps.set_frozen_prefix("b.", true);
        sgd_step(&mut ps, 1.0);
        assert_eq!(ps.get(a).value.item().unwrap(), 0.5);
        assert_eq!(ps.get(b).value.item().unwrap(), 1.0);
        assert_eq!(ps.get(a).grad.item().unwrap(), 0.0);
    }
}
