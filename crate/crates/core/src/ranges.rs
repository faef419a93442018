//! Set of received object ranges, in MB.

/// Gaps narrower than this are treated as closed. Keeps float residue from
/// leaving slivers between adjacent transfers.
pub const GAP_EPS: f64 = 1e-9;

/// Disjoint, sorted, half-open ranges `[start, end)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RangeSet {
    ranges: Vec<(f64, f64)>,
}

impl RangeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn total(&self) -> f64 {
        self.ranges.iter().map(|(s, e)| e - s).sum()
    }

    /// End of the contiguous range starting at 0.
    pub fn prefix(&self) -> f64 {
        match self.ranges.first() {
            Some(&(s, e)) if s <= GAP_EPS => e,
            _ => 0.0,
        }
    }

    pub fn covers(&self, start: f64, end: f64) -> bool {
        self.missing(start, end).next().is_none()
    }

    pub fn insert(&mut self, mut start: f64, mut end: f64) {
        if end - start <= 0.0 {
            return;
        }
        let first = self.ranges.partition_point(|&(_, e)| e < start - GAP_EPS);
        let mut last = first;
        while last < self.ranges.len() && self.ranges[last].0 <= end + GAP_EPS {
            start = start.min(self.ranges[last].0);
            end = end.max(self.ranges[last].1);
            last += 1;
        }
        self.ranges.splice(first..last, [(start, end)]);
    }

    /// Missing sub-ranges of `[start, end)`, ascending.
    pub fn missing(&self, start: f64, end: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut cursor = start;
        let mut idx = self.ranges.partition_point(|&(_, e)| e <= start);
        std::iter::from_fn(move || {
            while cursor < end - GAP_EPS {
                match self.ranges.get(idx) {
                    Some(&(s, e)) if s <= cursor + GAP_EPS => {
                        cursor = cursor.max(e);
                        idx += 1;
                    }
                    Some(&(s, _)) => {
                        let gap = (cursor, s.min(end));
                        cursor = s;
                        return Some(gap);
                    }
                    None => {
                        let gap = (cursor, end);
                        cursor = end;
                        return Some(gap);
                    }
                }
            }
            None
        })
    }

    pub fn missing_len(&self, start: f64, end: f64) -> f64 {
        self.missing(start, end).map(|(s, e)| e - s).sum()
    }

    /// Marks up to `amount` MB of the missing part of `[start, end)` as
    /// received, lowest positions first. Returns the amount actually added.
    pub fn fill_ascending(&mut self, start: f64, end: f64, amount: f64) -> f64 {
        let mut left = amount;
        let mut added = Vec::new();
        for (s, e) in self.missing(start, end) {
            if left <= 0.0 {
                break;
            }
            let take = (e - s).min(left);
            added.push((s, s + take));
            left -= take;
        }
        for (s, e) in added {
            self.insert(s, e);
        }
        amount - left
    }
}
