//! Seven coupled addressable heaps maintaining the three partitions
//! `close` / `mid` / `far` of the candidate points.
//!
//! Layout (one row per partition):
//!
//! - far:   min-heap on `d_hat`, min-heap on `d_hat - alpha`
//! - mid:   min-heap and max-heap on `d_hat`, max-heap on `alpha`
//! - close: max-heap on `d_hat`, max-heap on `d_hat + alpha`
//!
//! Each heap is an array-backed binary heap with a handle table mapping
//! point index to slot, so arbitrary-position key updates cost O(log n).
//! All comparisons break ties on the point index, making roots and
//! partitions deterministic.

use crate::error::{Error, Result};
use crate::estimate::ArmState;

const ABSENT: usize = usize::MAX;

/// Array-backed binary heap addressable by point index.
#[derive(Debug, Clone)]
pub struct AddressableHeap {
    is_max: bool,
    entries: Vec<(f64, usize)>,
    pos: Vec<usize>,
    moves: u64,
}

impl AddressableHeap {
    pub fn new(is_max: bool, n: usize) -> Self {
        Self {
            is_max,
            entries: Vec::new(),
            pos: vec![ABSENT; n],
            moves: 0,
        }
    }

    fn better(&self, a: (f64, usize), b: (f64, usize)) -> bool {
        if a.0 != b.0 {
            if self.is_max {
                a.0 > b.0
            } else {
                a.0 < b.0
            }
        } else {
            a.1 < b.1
        }
    }

    fn place(&mut self, slot: usize, entry: (f64, usize)) {
        self.entries[slot] = entry;
        self.pos[entry.1] = slot;
        self.moves += 1;
    }

    fn sift_up(&mut self, mut slot: usize) {
        let entry = self.entries[slot];
        while slot > 0 {
            let parent = (slot - 1) / 2;
            if self.better(entry, self.entries[parent]) {
                let moved = self.entries[parent];
                self.place(slot, moved);
                slot = parent;
            } else {
                break;
            }
        }
        self.place(slot, entry);
    }

    fn sift_down(&mut self, mut slot: usize) {
        let entry = self.entries[slot];
        let len = self.entries.len();
        loop {
            let left = 2 * slot + 1;
            if left >= len {
                break;
            }
            let right = left + 1;
            let mut best = left;
            if right < len && self.better(self.entries[right], self.entries[left]) {
                best = right;
            }
            if self.better(self.entries[best], entry) {
                let moved = self.entries[best];
                self.place(slot, moved);
                slot = best;
            } else {
                break;
            }
        }
        self.place(slot, entry);
    }

    /// Floyd heap construction from an unordered entry list.
    pub fn build(&mut self, items: &[(f64, usize)]) {
        self.entries = items.to_vec();
        for &(_, idx) in items {
            self.pos[idx] = 0; // fixed up below
        }
        for (slot, &(_, idx)) in self.entries.iter().enumerate() {
            self.pos[idx] = slot;
        }
        let len = self.entries.len();
        for slot in (0..len / 2).rev() {
            self.sift_down(slot);
        }
    }

    pub fn insert(&mut self, key: f64, idx: usize) {
        debug_assert_eq!(self.pos[idx], ABSENT);
        let slot = self.entries.len();
        self.entries.push((key, idx));
        self.pos[idx] = slot;
        self.moves += 1;
        self.sift_up(slot);
    }

    pub fn remove(&mut self, idx: usize) {
        let slot = self.pos[idx];
        debug_assert_ne!(slot, ABSENT);
        self.pos[idx] = ABSENT;
        let last = self.entries.len() - 1;
        if slot == last {
            self.entries.pop();
            return;
        }
        let moved = self.entries.pop().unwrap();
        self.place(slot, moved);
        self.sift_up(slot);
        self.sift_down(self.pos[moved.1]);
    }

    pub fn update(&mut self, idx: usize, key: f64) {
        let slot = self.pos[idx];
        debug_assert_ne!(slot, ABSENT);
        self.entries[slot].0 = key;
        self.sift_up(slot);
        self.sift_down(self.pos[idx]);
    }

    pub fn peek(&self) -> Option<(f64, usize)> {
        self.entries.first().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.pos[idx] != ABSENT
    }

    pub fn slot_of(&self, idx: usize) -> Option<usize> {
        match self.pos[idx] {
            ABSENT => None,
            s => Some(s),
        }
    }

    pub fn moves(&self) -> u64 {
        self.moves
    }

    /// Full traversal check of the heap-order property and handle table.
    pub fn validate(&self) -> bool {
        for slot in 1..self.entries.len() {
            let parent = (slot - 1) / 2;
            if self.better(self.entries[slot], self.entries[parent]) {
                return false;
            }
        }
        self.entries
            .iter()
            .enumerate()
            .all(|(slot, &(_, idx))| self.pos[idx] == slot)
    }
}

/// Which partition a point currently belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Close,
    Mid,
    Far,
}

/// The seven coupled heaps plus the per-arm key material they index.
#[derive(Debug, Clone)]
pub struct HeapBank {
    n: usize,
    k: usize,
    h: usize,
    est: Vec<f64>,
    alpha: Vec<f64>,
    partition: Vec<Partition>,
    far_est_min: AddressableHeap,
    far_lcb_min: AddressableHeap,
    mid_est_min: AddressableHeap,
    mid_est_max: AddressableHeap,
    mid_alpha_max: AddressableHeap,
    close_est_max: AddressableHeap,
    close_ucb_max: AddressableHeap,
}

impl HeapBank {
    /// Partitions the arms by sorted `(estimate, index)` and heapifies all
    /// seven heaps.
    pub fn build(arms: &[ArmState], k: usize, h: usize) -> Result<Self> {
        let n = arms.len();
        if k < 1 || k + h >= n {
            return Err(Error::Config(format!(
                "heap bank requires 1 <= k and k + h < n (k={k}, h={h}, n={n})"
            )));
        }
        let est: Vec<f64> = arms.iter().map(|a| a.estimate).collect();
        let alpha: Vec<f64> = arms.iter().map(|a| a.alpha).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            est[a]
                .partial_cmp(&est[b])
                .unwrap()
                .then_with(|| a.cmp(&b))
        });

        let mut partition = vec![Partition::Far; n];
        for &i in &order[..k] {
            partition[i] = Partition::Close;
        }
        for &i in &order[k..k + h] {
            partition[i] = Partition::Mid;
        }

        let mut bank = Self {
            n,
            k,
            h,
            est,
            alpha,
            partition,
            far_est_min: AddressableHeap::new(false, n),
            far_lcb_min: AddressableHeap::new(false, n),
            mid_est_min: AddressableHeap::new(false, n),
            mid_est_max: AddressableHeap::new(true, n),
            mid_alpha_max: AddressableHeap::new(true, n),
            close_est_max: AddressableHeap::new(true, n),
            close_ucb_max: AddressableHeap::new(true, n),
        };

        let close: Vec<usize> = order[..k].to_vec();
        let mid: Vec<usize> = order[k..k + h].to_vec();
        let far: Vec<usize> = order[k + h..].to_vec();
        let key = |v: &[f64], idxs: &[usize]| -> Vec<(f64, usize)> {
            idxs.iter().map(|&i| (v[i], i)).collect()
        };
        let est_k = bank.est.clone();
        let lcb: Vec<f64> = (0..n).map(|i| bank.est[i] - bank.alpha[i]).collect();
        let ucb: Vec<f64> = (0..n).map(|i| bank.est[i] + bank.alpha[i]).collect();
        let alpha_k = bank.alpha.clone();

        bank.far_est_min.build(&key(&est_k, &far));
        bank.far_lcb_min.build(&key(&lcb, &far));
        bank.mid_est_min.build(&key(&est_k, &mid));
        bank.mid_est_max.build(&key(&est_k, &mid));
        bank.mid_alpha_max.build(&key(&alpha_k, &mid));
        bank.close_est_max.build(&key(&est_k, &close));
        bank.close_ucb_max.build(&key(&ucb, &close));
        Ok(bank)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Arm with the largest `d_hat + alpha` among the close set.
    pub fn peek_d1(&self) -> usize {
        self.close_ucb_max.peek().expect("close set nonempty").1
    }

    /// Arm with the smallest `d_hat - alpha` among the far set.
    pub fn peek_d2(&self) -> usize {
        self.far_lcb_min.peek().expect("far set nonempty").1
    }

    /// Arm with the largest confidence radius among the mid set and d2.
    /// Ties go to d2, then to the lower point index (heap tie rule).
    pub fn peek_b2(&self) -> usize {
        let d2 = self.peek_d2();
        match self.mid_alpha_max.peek() {
            Some((a_mid, i_mid)) if a_mid > self.alpha[d2] => i_mid,
            _ => d2,
        }
    }

    /// Reflects a changed `(estimate, alpha)` in all heaps of the arm's
    /// current partition.
    pub fn update_arm(&mut self, idx: usize, state: &ArmState) -> Result<()> {
        if idx >= self.n {
            return Err(Error::Logic(format!("unknown arm index {idx}")));
        }
        self.est[idx] = state.estimate;
        self.alpha[idx] = state.alpha;
        let est = state.estimate;
        let alpha = state.alpha;
        match self.partition[idx] {
            Partition::Far => {
                self.far_est_min.update(idx, est);
                self.far_lcb_min.update(idx, est - alpha);
            }
            Partition::Mid => {
                self.mid_est_min.update(idx, est);
                self.mid_est_max.update(idx, est);
                self.mid_alpha_max.update(idx, alpha);
            }
            Partition::Close => {
                self.close_est_max.update(idx, est);
                self.close_ucb_max.update(idx, est + alpha);
            }
        }
        Ok(())
    }

    fn remove_from_partition(&mut self, idx: usize) {
        match self.partition[idx] {
            Partition::Far => {
                self.far_est_min.remove(idx);
                self.far_lcb_min.remove(idx);
            }
            Partition::Mid => {
                self.mid_est_min.remove(idx);
                self.mid_est_max.remove(idx);
                self.mid_alpha_max.remove(idx);
            }
            Partition::Close => {
                self.close_est_max.remove(idx);
                self.close_ucb_max.remove(idx);
            }
        }
    }

    fn insert_into_partition(&mut self, idx: usize, part: Partition) {
        let est = self.est[idx];
        let alpha = self.alpha[idx];
        match part {
            Partition::Far => {
                self.far_est_min.insert(est, idx);
                self.far_lcb_min.insert(est - alpha, idx);
            }
            Partition::Mid => {
                self.mid_est_min.insert(est, idx);
                self.mid_est_max.insert(est, idx);
                self.mid_alpha_max.insert(alpha, idx);
            }
            Partition::Close => {
                self.close_est_max.insert(est, idx);
                self.close_ucb_max.insert(est + alpha, idx);
            }
        }
        self.partition[idx] = part;
    }

    fn swap_partitions(&mut self, a: usize, b: usize) {
        let pa = self.partition[a];
        let pb = self.partition[b];
        self.remove_from_partition(a);
        self.remove_from_partition(b);
        self.insert_into_partition(a, pb);
        self.insert_into_partition(b, pa);
    }

    /// Swaps boundary extremes until the close/mid/far estimate ordering
    /// holds again. Each swap strictly reduces the number of cross-boundary
    /// inversions, so the loop terminates; with at most two arms changed
    /// per iteration the swap count is bounded by a small constant.
    pub fn restore_ordering(&mut self) -> usize {
        let mut swaps = 0;
        loop {
            let violation = if self.h > 0 {
                let close_max = self.close_est_max.peek().expect("close nonempty");
                let mid_min = self.mid_est_min.peek().expect("mid nonempty");
                if close_max.0 > mid_min.0 {
                    Some((close_max.1, mid_min.1))
                } else {
                    let mid_max = self.mid_est_max.peek().expect("mid nonempty");
                    let far_min = self.far_est_min.peek().expect("far nonempty");
                    if mid_max.0 > far_min.0 {
                        Some((mid_max.1, far_min.1))
                    } else {
                        None
                    }
                }
            } else {
                let close_max = self.close_est_max.peek().expect("close nonempty");
                let far_min = self.far_est_min.peek().expect("far nonempty");
                if close_max.0 > far_min.0 {
                    Some((close_max.1, far_min.1))
                } else {
                    None
                }
            };
            match violation {
                Some((a, b)) => {
                    self.swap_partitions(a, b);
                    swaps += 1;
                }
                None => return swaps,
            }
        }
    }

    pub fn estimate(&self, idx: usize) -> f64 {
        self.est[idx]
    }

    pub fn alpha(&self, idx: usize) -> f64 {
        self.alpha[idx]
    }

    pub fn partition_of(&self, idx: usize) -> Partition {
        self.partition[idx]
    }

    /// Point indices of the close and mid partitions, i.e. the returned
    /// superset of the k nearest neighbors.
    pub fn result_set(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.n)
            .filter(|&i| self.partition[i] != Partition::Far)
            .collect();
        out.sort_unstable();
        out
    }

    /// Total element moves across all seven heaps since construction.
    pub fn move_count(&self) -> u64 {
        self.far_est_min.moves()
            + self.far_lcb_min.moves()
            + self.mid_est_min.moves()
            + self.mid_est_max.moves()
            + self.mid_alpha_max.moves()
            + self.close_est_max.moves()
            + self.close_ucb_max.moves()
    }

    /// Checks every structural invariant: heap order on all seven heaps,
    /// handle consistency, partition sizes, membership exclusivity, and
    /// the boundary estimate ordering.
    pub fn validate(&self) -> bool {
        let heaps = [
            &self.far_est_min,
            &self.far_lcb_min,
            &self.mid_est_min,
            &self.mid_est_max,
            &self.mid_alpha_max,
            &self.close_est_max,
            &self.close_ucb_max,
        ];
        if !heaps.iter().all(|h| h.validate()) {
            return false;
        }
        if self.close_est_max.len() != self.k
            || self.mid_est_min.len() != self.h
            || self.far_est_min.len() != self.n - self.k - self.h
        {
            return false;
        }
        for i in 0..self.n {
            let in_close = self.close_est_max.contains(i) && self.close_ucb_max.contains(i);
            let in_mid = self.mid_est_min.contains(i)
                && self.mid_est_max.contains(i)
                && self.mid_alpha_max.contains(i);
            let in_far = self.far_est_min.contains(i) && self.far_lcb_min.contains(i);
            let expected = match self.partition[i] {
                Partition::Close => in_close && !in_mid && !in_far,
                Partition::Mid => in_mid && !in_close && !in_far,
                Partition::Far => in_far && !in_close && !in_mid,
            };
            if !expected {
                return false;
            }
        }
        self.ordering_holds()
    }

    /// The partition-boundary inequality on estimates (ties permitted).
    pub fn ordering_holds(&self) -> bool {
        let close_max = self.close_est_max.peek().map(|e| e.0);
        let far_min = self.far_est_min.peek().map(|e| e.0);
        if self.h > 0 {
            let mid_min = self.mid_est_min.peek().map(|e| e.0);
            let mid_max = self.mid_est_max.peek().map(|e| e.0);
            close_max <= mid_min && mid_max <= far_min
        } else {
            close_max <= far_min
        }
    }
}
