use std::collections::VecDeque;

use crate::error::{PlateauError, Result};

/// A finite group given by its multiplication table, with a marked generating
/// set and shortlex canonical words computed by breadth-first search.
#[derive(Debug, Clone)]
pub struct FiniteTable {
    pub(crate) name: String,
    pub(crate) order: usize,
    pub(crate) table: Vec<u32>,
    pub(crate) inverse: Vec<u32>,
    pub(crate) identity: u32,
    pub(crate) generators: Vec<u32>,
    pub(crate) words: Vec<Vec<i32>>,
}

impl FiniteTable {
    /// Validates the table (closure, identity, inverses, associativity) and
    /// that the generators reach every element.
    pub fn new(name: impl Into<String>, order: usize, table: Vec<u32>, generators: Vec<u32>) -> Result<Self> {
        if order == 0 || table.len() != order * order {
            return Err(PlateauError::InvalidArgument(format!(
                "table for order {order} must have {} entries",
                order * order
            )));
        }
        if table.iter().any(|&x| x as usize >= order) {
            return Err(PlateauError::InvalidArgument("table entry out of range".into()));
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|x| table[e * order + x] as usize == x && table[x * order + e] as usize == x))
            .ok_or_else(|| PlateauError::InvalidArgument("table has no identity".into()))? as u32;
        let mut inverse = vec![0u32; order];
        for x in 0..order {
            inverse[x] = (0..order)
                .find(|&y| table[x * order + y] == identity)
                .ok_or_else(|| PlateauError::InvalidArgument(format!("element {x} has no inverse")))?
                as u32;
        }
        for x in 0..order {
            for y in 0..order {
                let xy = table[x * order + y] as usize;
                for z in 0..order {
                    let yz = table[y * order + z] as usize;
                    if table[xy * order + z] != table[x * order + yz] {
                        return Err(PlateauError::InvalidArgument(format!(
                            "table is not associative at ({x},{y},{z})"
                        )));
                    }
                }
            }
        }
        if generators.iter().any(|&g| g as usize >= order) {
            return Err(PlateauError::InvalidArgument("generator out of range".into()));
        }
        let mut t = Self {
            name: name.into(),
            order,
            table,
            inverse,
            identity,
            generators,
            words: Vec::new(),
        };
        t.words = t.shortlex_words()?;
        Ok(t)
    }

    pub fn cyclic(n: usize) -> Result<Self> {
        let table = (0..n * n).map(|i| ((i / n + i % n) % n) as u32).collect();
        let gens = if n > 1 { vec![1] } else { vec![] };
        Self::new(format!("cyclic {n}"), n, table, gens)
    }

    /// Dihedral group of order `2n`: element `r^k s^e` has index `k + n·e`.
    pub fn dihedral(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(PlateauError::InvalidArgument("dihedral needs n >= 2".into()));
        }
        let ord = 2 * n;
        let mut table = vec![0u32; ord * ord];
        for x in 0..ord {
            let (a, e) = (x % n, x / n);
            for y in 0..ord {
                let (b, f) = (y % n, y / n);
                let k = if e == 0 { (a + b) % n } else { (a + n - b) % n };
                table[x * ord + y] = (k + n * ((e + f) % 2)) as u32;
            }
        }
        Self::new(format!("dihedral {n}"), ord, table, vec![1, n as u32])
    }

    pub fn mul(&self, x: u32, y: u32) -> u32 {
        self.table[x as usize * self.order + y as usize]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn letter_value(&self, l: i32) -> u32 {
        let g = self.generators[(l.unsigned_abs() - 1) as usize];
        if l > 0 {
            g
        } else {
            self.inverse[g as usize]
        }
    }

    fn shortlex_words(&self) -> Result<Vec<Vec<i32>>> {
        let mut words: Vec<Option<Vec<i32>>> = vec![None; self.order];
        words[self.identity as usize] = Some(Vec::new());
        let mut letters = Vec::new();
        for k in 1..=self.generators.len() as i32 {
            letters.push(k);
            letters.push(-k);
        }
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            let wx = words[x as usize].clone().unwrap_or_default();
            for &l in &letters {
                let y = self.mul(x, self.letter_value(l));
                if words[y as usize].is_none() {
                    let mut w = wx.clone();
                    w.push(l);
                    words[y as usize] = Some(w);
                    queue.push_back(y);
                }
            }
        }
        words
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                w.ok_or_else(|| {
                    PlateauError::InvalidArgument(format!("generators do not reach element {i}"))
                })
            })
            .collect()
    }

    pub fn eval_word(&self, w: &[i32]) -> u32 {
        w.iter()
            .fold(self.identity, |acc, &l| self.mul(acc, self.letter_value(l)))
    }

    /// Closure of `gens` under multiplication, sorted by parent index.
    pub fn subgroup_elements(&self, gens: &[u32]) -> Vec<u32> {
        let mut seen = vec![false; self.order];
        seen[self.identity as usize] = true;
        let mut stack = vec![self.identity];
        let mut all = vec![self.identity];
        while let Some(x) = stack.pop() {
            for &g in gens {
                for h in [g, self.inverse[g as usize]] {
                    let y = self.mul(x, h);
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        stack.push(y);
                        all.push(y);
                    }
                }
            }
        }
        all.sort_unstable();
        all
    }
}
