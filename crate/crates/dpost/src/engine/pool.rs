//! Thread-local recycling pool for the large f64 scratch buffers of the
//! forward/backward passes. Training allocates tens of megabytes per step;
//! without reuse every step pays mmap/page-fault costs.

use std::cell::RefCell;

const MIN_POOLED_LEN: usize = 8 * 1024; // don't bother below 64 KiB
const MAX_POOLED_BUFFERS: usize = 96;

thread_local! {
    static POOL: RefCell<Vec<Vec<f64>>> = const { RefCell::new(Vec::new()) };
}

/// A zeroed buffer of exactly `len`, reusing retired capacity when possible.
pub fn take_zeroed(len: usize) -> Vec<f64> {
    if len >= MIN_POOLED_LEN {
        let reused = POOL.with(|p| {
            let mut pool = p.borrow_mut();
            pool.iter()
                .position(|v| v.capacity() >= len)
                .map(|pos| pool.swap_remove(pos))
        });
        if let Some(mut v) = reused {
            v.clear();
            v.resize(len, 0.0);
            return v;
        }
    }
    vec![0.0; len]
}

/// Retire a buffer for later reuse.
pub fn recycle(v: Vec<f64>) {
    if v.capacity() < MIN_POOLED_LEN {
        return;
    }
    POOL.with(|p| {
        let mut pool = p.borrow_mut();
        if pool.len() < MAX_POOLED_BUFFERS {
            pool.push(v);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reuses_capacity_and_zeroes() {
        let mut v = take_zeroed(20_000);
        v[7] = 5.0;
        let cap = v.capacity();
        recycle(v);
        let v2 = take_zeroed(16_000);
        assert!(v2.capacity() >= 16_000 && cap >= v2.capacity());
        assert!(v2.iter().all(|&x| x == 0.0));
        assert_eq!(v2.len(), 16_000);
    }
}
