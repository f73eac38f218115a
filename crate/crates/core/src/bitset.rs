use std::fmt;

/// Fixed-universe bitset over component indices `0..n`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PartSet {
    words: Vec<u64>,
}

impl PartSet {
    pub fn new(universe: usize) -> Self {
        PartSet {
            words: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn from_parts(universe: usize, parts: impl IntoIterator<Item = usize>) -> Self {
        let mut set = PartSet::new(universe);
        for p in parts {
            set.insert(p);
        }
        set
    }

    pub fn insert(&mut self, part: usize) {
        let word = part / 64;
        if word >= self.words.len() {
            self.words.resize(word + 1, 0);
        }
        self.words[word] |= 1 << (part % 64);
    }

    pub fn remove(&mut self, part: usize) {
        if let Some(w) = self.words.get_mut(part / 64) {
            *w &= !(1 << (part % 64));
        }
    }

    pub fn contains(&self, part: usize) -> bool {
        self.words
            .get(part / 64)
            .is_some_and(|w| w & (1 << (part % 64)) != 0)
    }

    /// True when every member of `self` is also in `other`.
    pub fn is_subset(&self, other: &PartSet) -> bool {
        self.words.iter().enumerate().all(|(i, &w)| {
            let o = other.words.get(i).copied().unwrap_or(0);
            w & !o == 0
        })
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| i * 64 + b)
        })
    }
}

impl fmt::Debug for PartSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
