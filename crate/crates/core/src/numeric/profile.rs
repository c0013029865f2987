use std::io::{Read, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{prefix_density, ExactRational, NumericError, SetPrefix};

/// Density quotients `|Z ∩ [0, n)| / n` sampled at strictly increasing
/// checkpoints `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityProfile {
    checkpoints: Vec<u64>,
    values: Vec<ExactRational>,
}

impl DensityProfile {
    pub fn new(checkpoints: Vec<u64>, values: Vec<ExactRational>) -> Result<Self, NumericError> {
        if checkpoints.len() != values.len() {
            return Err(NumericError::LengthMismatch { checkpoints: checkpoints.len(), values: values.len() });
        }
        if let Some(i) = checkpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(NumericError::NonIncreasingCheckpoints { index: i + 1 });
        }
        let zero = BigRational::zero();
        let one = BigRational::one();
        if let Some(i) = values.iter().position(|v| *v < zero || *v > one) {
            return Err(NumericError::ValueOutOfUnit { index: i, value: super::format_rational(&values[i]) });
        }
        Ok(Self { checkpoints, values })
    }

    /// Profile of the position set `z` at each checkpoint.
    pub fn of_set(z: &SetPrefix, checkpoints: &[u64]) -> Result<Self, NumericError> {
        let values = checkpoints.iter().map(|&n| prefix_density(z, n)).collect::<Result<Vec<_>, _>>()?;
        Self::new(checkpoints.to_vec(), values)
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn values(&self) -> &[ExactRational] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    /// Writes `checkpoint,numerator,denominator` rows under a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), NumericError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| NumericError::Csv(e.to_string());
        w.write_record(["checkpoint", "numerator", "denominator"]).map_err(err)?;
        for (c, v) in self.checkpoints.iter().zip(&self.values) {
            w.write_record([c.to_string(), v.numer().to_string(), v.denom().to_string()]).map_err(err)?;
        }
        w.flush().map_err(|e| NumericError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, NumericError> {
        let mut r = csv::Reader::from_reader(input);
        let mut checkpoints = Vec::new();
        let mut values = Vec::new();
        for row in r.records() {
            let row = row.map_err(|e| NumericError::Csv(e.to_string()))?;
            let field = |i: usize| row.get(i).ok_or_else(|| NumericError::Csv(format!("missing column {i}")));
            let c: u64 = field(0)?.parse().map_err(|_| NumericError::Csv("bad checkpoint".into()))?;
            let num: BigInt = field(1)?.parse().map_err(|_| NumericError::Csv("bad numerator".into()))?;
            let den: BigInt = field(2)?.parse().map_err(|_| NumericError::Csv("bad denominator".into()))?;
            if den.is_zero() {
                return Err(NumericError::Csv("zero denominator".into()));
            }
            checkpoints.push(c);
            values.push(BigRational::new(num, den));
        }
        Self::new(checkpoints, values)
    }
}
