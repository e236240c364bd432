use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::tensor::Matrix;

/// Named parameter tensors in a fixed (lexicographic) order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, Matrix>", into = "BTreeMap<String, Matrix>")]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
    index: BTreeMap<String, usize>,
}

impl From<BTreeMap<String, Matrix>> for ParamStore {
    fn from(map: BTreeMap<String, Matrix>) -> Self {
        let mut store = ParamStore::default();
        for (name, value) in map {
            store.insert(name, value);
        }
        store
    }
}

impl From<ParamStore> for BTreeMap<String, Matrix> {
    fn from(store: ParamStore) -> Self {
        store.names.into_iter().zip(store.values).collect()
    }
}

impl ParamStore {
    /// Inserts or replaces; indices of existing names are stable, but a new
    /// name re-sorts the store.
    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) {
        let name = name.into();
        if let Some(&i) = self.index.get(&name) {
            self.values[i] = value;
            return;
        }
        let mut map: BTreeMap<String, Matrix> = std::mem::take(self).into();
        map.insert(name, value);
        self.names = map.keys().cloned().collect();
        self.values = map.into_values().collect();
        self.index = self.names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.id(name).map(|i| &self.values[i])
    }

    pub fn by_id(&self, id: usize) -> &Matrix {
        &self.values[id]
    }

    pub fn by_id_mut(&mut self, id: usize) -> &mut Matrix {
        &mut self.values[id]
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(|m| m.data.len()).sum()
    }
}

/// Per-parameter generator: one ChaCha stream per parameter name, so adding
/// a parameter never changes how the others are initialized.
pub fn param_rng(seed: u64, name: &str) -> ChaCha8Rng {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(name.as_bytes());
    let stream = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn normal_init(seed: u64, name: &str, rows: usize, cols: usize, mean: f64, std: f64) -> Matrix {
    let mut rng = param_rng(seed, name);
    let dist = Normal::new(mean, std).expect("valid normal");
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| dist.sample(&mut rng)).collect())
}
