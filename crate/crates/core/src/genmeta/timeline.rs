use super::Priority;

#[derive(Clone, Copy, Debug)]
struct Segment {
    start: u64,
    len: u64,
    p0: Priority,
    /// Priority grows by one per step inside the segment.
    slope: bool,
}

impl Segment {
    fn end(&self) -> u64 {
        self.start + self.len - 1
    }

    fn last_value(&self) -> Priority {
        if self.slope {
            self.p0.plus(self.len - 1)
        } else {
            self.p0
        }
    }
}

/// Piecewise record of one language's priority over the steps it was active.
#[derive(Clone, Debug, Default)]
pub struct Timeline {
    segs: Vec<Segment>,
}

impl Timeline {
    pub fn push(&mut self, step: u64, p: Priority) {
        let Some(seg) = self.segs.last_mut() else {
            self.segs.push(Segment { start: step, len: 1, p0: p, slope: false });
            return;
        };
        debug_assert_eq!(seg.end() + 1, step, "timeline steps must be consecutive");
        let last = seg.last_value();
        if p == last && !seg.slope {
            seg.len += 1;
        } else if p == last && seg.len == 1 {
            seg.slope = false;
            seg.len += 1;
        } else if p == last.plus(1) && p != Priority::Top && (seg.slope || seg.len == 1) {
            seg.slope = true;
            seg.len += 1;
        } else {
            self.segs.push(Segment { start: step, len: 1, p0: p, slope: false });
        }
    }

    pub fn first_step(&self) -> Option<u64> {
        self.segs.first().map(|s| s.start)
    }

    pub fn current(&self) -> Option<Priority> {
        self.segs.last().map(Segment::last_value)
    }

    pub fn segments(&self) -> usize {
        self.segs.len()
    }

    /// Last step at which this language's status within `{P <= p}` changed,
    /// counting priority changes of members and the activation step.
    pub fn last_relevant_change(&self, p: u64) -> Option<u64> {
        let within = |q: Priority| q <= Priority::Finite(p);
        let mut last = None;
        let mut prev: Option<Priority> = None;
        for seg in &self.segs {
            match prev {
                None if within(seg.p0) => last = Some(seg.start),
                Some(v) if v != seg.p0 && (within(v) || within(seg.p0)) => last = Some(seg.start),
                _ => {}
            }
            if seg.slope && seg.len > 1 {
                if let Priority::Finite(p0) = seg.p0 {
                    if p0 <= p {
                        // change at step s is relevant while P(s-1) = p0 + (s-1-start) <= p
                        let s = seg.end().min(seg.start + 1 + (p - p0));
                        last = Some(last.map_or(s, |l: u64| l.max(s)));
                    }
                }
            }
            prev = Some(seg.last_value());
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(v: u64) -> Priority {
        Priority::Finite(v)
    }

    fn brute(values: &[(u64, Priority)], p: u64) -> Option<u64> {
        let within = |q: Priority| q <= fin(p);
        let mut last = None;
        for (k, &(s, v)) in values.iter().enumerate() {
            let changed = match k {
                0 => within(v),
                _ => {
                    let u = values[k - 1].1;
                    u != v && (within(u) || within(v))
                }
            };
            if changed {
                last = Some(s);
            }
        }
        last
    }

    #[test]
    fn compressed_matches_pointwise() {
        let seq = [fin(3), fin(4), fin(5), fin(5), fin(5), fin(6), fin(9), fin(10), Priority::Top, Priority::Top, fin(2), fin(2), fin(3)];
        for start in [1u64, 4] {
            let mut t = Timeline::default();
            let values: Vec<(u64, Priority)> = seq.iter().enumerate().map(|(k, &v)| (start + k as u64, v)).collect();
            for &(s, v) in &values {
                t.push(s, v);
            }
            for p in 0..12 {
                assert_eq!(t.last_relevant_change(p), brute(&values, p), "p = {p}");
            }
        }
    }

    #[test]
    fn steady_violation_is_one_segment() {
        let mut t = Timeline::default();
        for s in 1..=1000 {
            t.push(s, fin(s + 2));
        }
        assert_eq!(t.segments(), 1);
        assert_eq!(t.last_relevant_change(10), Some(9));
        assert_eq!(t.last_relevant_change(2), None);
    }
}
