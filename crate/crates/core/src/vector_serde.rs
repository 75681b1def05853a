//! `DVector` as a plain JSON array instead of nalgebra's `[data, rows, cols]`.

use nalgebra::DVector;
use serde::{Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &DVector<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_seq(v.iter())
}

pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<DVector<f64>, D::Error> {
    Vec::<f64>::deserialize(deserializer).map(DVector::from_vec)
}
