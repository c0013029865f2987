//! Exhaustive check of the hypergeometric tail bound on a parameter grid.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use super::config::HypergridConfig;
use super::HarnessError;
use crate::hypergeom::{hoeffding_bound, tail_leq, HypergeomParams};
use crate::numeric::{format_rational, ExactRational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridRow {
    pub draws: u64,
    pub population: u64,
    pub successes: u64,
    pub q: ExactRational,
    pub exact_tail: ExactRational,
    pub upper: ExactRational,
    pub upper_text: String,
}

impl GridRow {
    pub fn holds(&self) -> bool {
        self.exact_tail <= self.upper
    }
}

/// Every `(K, N, n, q)` with `1 <= N <= max_population`, `K, n <= N`,
/// `q = j/q_steps` for `0 <= j < q_steps`, and `K/N > q`. Row order is
/// `N`, then `K`, then `n`, then `q`.
pub fn grid(config: &HypergridConfig) -> Vec<GridRow> {
    let triples: Vec<(u64, u64, u64)> = (1..=config.max_population)
        .flat_map(|pop| (0..=pop).flat_map(move |k| (0..=pop).map(move |n| (pop, k, n))))
        .collect();
    triples
        .into_par_iter()
        .flat_map_iter(|(pop, k, n)| {
            let h = HypergeomParams::new(k, pop, n).expect("k, n <= N");
            let drawn = h.draw_fraction();
            (0..config.q_steps).filter_map(move |j| {
                let q = BigRational::new(BigInt::from(j), BigInt::from(config.q_steps));
                if drawn <= q {
                    return None;
                }
                let threshold = &q * BigRational::from_integer(BigInt::from(n));
                let exact_tail = tail_leq(&h, &threshold);
                let bound = hoeffding_bound(&(&drawn - &q), n).expect("K/N > q");
                Some(GridRow {
                    draws: k,
                    population: pop,
                    successes: n,
                    q,
                    exact_tail,
                    upper: bound.to_rational(),
                    upper_text: bound.to_decimal_upper(20),
                })
            })
        })
        .collect()
}

/// CSV with columns `K,N,n,q,exact_tail_num,exact_tail_den,hoeffding_upper`.
pub fn write_csv<W: Write>(rows: &[GridRow], out: W) -> Result<(), HarnessError> {
    let err = |e: csv::Error| HarnessError::Resource(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["K", "N", "n", "q", "exact_tail_num", "exact_tail_den", "hoeffding_upper"]).map_err(err)?;
    for r in rows {
        w.write_record([
            r.draws.to_string(),
            r.population.to_string(),
            r.successes.to_string(),
            format_rational(&r.q),
            r.exact_tail.numer().to_string(),
            r.exact_tail.denom().to_string(),
            r.upper_text.clone(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| HarnessError::Resource(e.to_string()))?;
    Ok(())
}
