//! Deterministic parallel summation: fixed-size chunks summed sequentially,
//! then combined pairwise in index order, so the result does not depend on
//! the number of worker threads.

use std::ops::AddAssign;

use rayon::prelude::*;

use crate::error::Result;

const CHUNK: usize = 16;

pub(crate) fn ordered_sum<T, Z, F>(count: usize, zero: Z, term: F) -> Result<T>
where
    T: Send + AddAssign,
    Z: Fn() -> T + Sync,
    F: Fn(usize) -> Result<Option<T>> + Sync,
{
    let partial: Vec<T> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = zero();
            for i in c * CHUNK..count.min((c + 1) * CHUNK) {
                if let Some(t) = term(i)? {
                    acc += t;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut level = partial;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a += b;
            }
            next.push(a);
        }
        level = next;
    }
    Ok(level.pop().unwrap_or_else(zero))
}
