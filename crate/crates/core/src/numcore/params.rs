use std::collections::HashMap;

use rand::Rng;

use super::{NumError, Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub frozen: bool,
}

/// How a freshly created parameter is filled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Uniform(f64),
    Zeros,
    /// LSTM gate bias laid out `[input | forget | cell | output]`: zeros with
    /// the forget block set to the given value.
    ForgetBias { hidden: usize, value: f64 },
}

impl Init {
    fn fill<T: Scalar>(self, shape: &[usize], rng: &mut impl Rng) -> Tensor<T> {
        let mut t = Tensor::zeros(shape);
        match self {
            Init::Uniform(scale) => {
                for v in t.data_mut() {
                    *v = T::of(rng.gen_range(-scale..scale));
                }
            }
            Init::Zeros => {}
            Init::ForgetBias { hidden, value } => {
                let data = t.data_mut();
                for v in &mut data[hidden..2 * hidden] {
                    *v = T::of(value);
                }
            }
        }
        t
    }
}

/// Gradient per parameter as produced by one backward pass.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub(crate) grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }
}

/// Named trainable tensors with their accumulated gradients.
#[derive(Clone, Debug, Default)]
pub struct ParamSet<T> {
    params: Vec<Parameter<T>>,
    by_name: HashMap<String, ParamId>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet {
            params: Vec::new(),
            by_name: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: &str, value: Tensor<T>) -> Result<ParamId, NumError> {
        if self.by_name.contains_key(name) {
            return Err(NumError::InvalidArgument(format!("duplicate parameter {name:?}")));
        }
        let id = ParamId(self.params.len());
        let grad = Tensor::zeros(value.shape());
        self.params.push(Parameter {
            name: name.to_owned(),
            value,
            grad,
            frozen: false,
        });
        self.by_name.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn init(
        &mut self,
        name: &str,
        shape: &[usize],
        init: Init,
        rng: &mut impl Rng,
    ) -> Result<ParamId, NumError> {
        let value = init.fill(shape, rng);
        self.add(name, value)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter<T> {
        &mut self.params[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter<T>> {
        self.params.iter_mut()
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.numel()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(T::zero());
        }
    }

    /// Adds a backward result into the stored gradients. Frozen parameters
    /// are skipped.
    pub fn accumulate(&mut self, grads: &Gradients<T>) {
        for (p, g) in self.params.iter_mut().zip(&grads.grads) {
            if let (false, Some(g)) = (p.frozen, g) {
                p.grad.add_assign(g);
            }
        }
    }

    pub fn is_frozen(&self, id: ParamId) -> bool {
        self.params[id.0].frozen
    }

    /// Freezes (or thaws) every parameter whose name starts with `prefix`,
    /// returning how many matched.
    pub fn set_frozen_prefix(&mut self, prefix: &str, frozen: bool) -> usize {
        let mut n = 0;
        for p in self.params.iter_mut().filter(|p| p.name.starts_with(prefix)) {
            p.frozen = frozen;
            n += 1;
        }
        n
    }

    /// Overwrites every value with uniform noise in `[-scale, scale)`.
    pub fn randomize(&mut self, scale: f64, rng: &mut impl Rng) {
        for p in &mut self.params {
            for v in p.value.data_mut() {
                *v = T::of(rng.gen_range(-scale..scale));
            }
        }
    }

    /// Values only, in id order.
    pub fn snapshot(&self) -> Vec<Tensor<T>> {
        self.params.iter().map(|p| p.value.clone()).collect()
    }

    pub fn restore(&mut self, values: &[Tensor<T>]) {
        assert_eq!(values.len(), self.params.len());
        for (p, v) in self.params.iter_mut().zip(values) {
            assert_eq!(p.value.shape(), v.shape());
            p.value = v.clone();
        }
    }
}
