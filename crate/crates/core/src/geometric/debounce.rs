use std::collections::VecDeque;

/// Sliding-window majority vote with a minimum dwell.
///
/// The output switches to a new value only when that value holds a strict
/// majority of the last `k` raw inputs and the current value has already been
/// emitted for at least `⌈k/2⌉` frames. Every run of the output except the
/// last is therefore at least `⌈k/2⌉` frames long.
#[derive(Debug, Clone)]
pub struct Debouncer<T> {
    k: usize,
    window: VecDeque<T>,
    current: Option<T>,
    held: usize,
}

impl<T: Copy + PartialEq> Debouncer<T> {
    pub fn new(k: usize) -> Self {
        let k = k.max(1);
        Debouncer {
            k,
            window: VecDeque::with_capacity(k),
            current: None,
            held: 0,
        }
    }

    pub fn window(&self) -> usize {
        self.k
    }

    pub fn min_dwell(&self) -> usize {
        self.k.div_ceil(2)
    }

    pub fn current(&self) -> Option<T> {
        self.current
    }

    pub fn reset(&mut self) {
        self.window.clear();
        self.current = None;
        self.held = 0;
    }

    fn majority(&self) -> Option<T> {
        self.window.iter().find_map(|&candidate| {
            let votes = self.window.iter().filter(|&&v| v == candidate).count();
            (2 * votes > self.k).then_some(candidate)
        })
    }

    pub fn push(&mut self, raw: T) -> T {
        if self.window.len() == self.k {
            self.window.pop_front();
        }
        self.window.push_back(raw);
        match self.current {
            None => {
                self.current = Some(raw);
                self.held = 1;
                raw
            }
            Some(cur) => {
                match self.majority() {
                    Some(m) if m != cur && self.held >= self.min_dwell() => {
                        self.current = Some(m);
                        self.held = 1;
                    }
                    _ => self.held += 1,
                }
                self.current.expect("set above")
            }
        }
    }
}

/// Lengths of maximal constant runs.
pub fn run_lengths<T: PartialEq>(values: &[T]) -> Vec<usize> {
    let mut runs = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 && values[i - 1] == *v {
            *runs.last_mut().expect("run started") += 1;
        } else {
            runs.push(1);
        }
    }
    runs
}
