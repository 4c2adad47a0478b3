//! Small numeric and data-structure helpers.

use std::rc::Rc;

/// `log Σ exp(x)`, or `-∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// 64-bit FNV-1a; stable across platforms and runs, unlike `std`'s hasher.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives an independent seed from a base seed and a label.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(label.as_bytes());
    bytes.extend_from_slice(&index.to_le_bytes());
    stable_hash(&bytes)
}

/// An immutable singly-linked list with shared tails.
#[derive(Debug)]
pub struct PList<T>(Option<Rc<Node<T>>>);

#[derive(Debug)]
struct Node<T> {
    head: T,
    tail: PList<T>,
}

impl<T> Clone for PList<T> {
    fn clone(&self) -> Self {
        PList(self.0.clone())
    }
}

impl<T> Default for PList<T> {
    fn default() -> Self {
        PList(None)
    }
}

impl<T> PList<T> {
    pub fn new() -> Self {
        PList(None)
    }

    pub fn push(&self, head: T) -> Self {
        PList(Some(Rc::new(Node {
            head,
            tail: self.clone(),
        })))
    }

    pub fn head(&self) -> Option<&T> {
        self.0.as_ref().map(|n| &n.head)
    }

    pub fn tail(&self) -> Option<PList<T>> {
        self.0.as_ref().map(|n| n.tail.clone())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub fn iter(&self) -> PListIter<'_, T> {
        PListIter(self.0.as_deref())
    }
}

pub struct PListIter<'a, T>(Option<&'a Node<T>>);

impl<'a, T> Iterator for PListIter<'a, T> {
    type Item = &'a T;
    fn next(&mut self) -> Option<&'a T> {
        let n = self.0?;
        self.0 = n.tail.0.as_deref();
        Some(&n.head)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn plist_shares_tails() {
        let a = PList::new().push(1).push(2);
        let b = a.push(3);
        assert_eq!(b.iter().copied().collect::<Vec<_>>(), vec![3, 2, 1]);
        assert_eq!(a.iter().copied().collect::<Vec<_>>(), vec![2, 1]);
        assert_eq!(b.tail().unwrap().head(), Some(&2));
    }

    #[test]
    fn hashing_is_stable() {
        assert_eq!(stable_hash(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(stable_hash(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_ne!(derive_seed(1, "x", 0), derive_seed(1, "x", 1));
    }
}
