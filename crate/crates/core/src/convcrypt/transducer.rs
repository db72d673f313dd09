use std::collections::{BTreeMap, HashMap};

use super::bits::{format_field, parse_field, Bits};
use super::gf2::{mask, Gf2Matrix};
use super::CryptError;

/// Hard cap on the dense state space of a compiled transducer.
pub const MAX_STATES: usize = 1 << 20;

/// One row of a transition table: `(input, in_state) -> (output, out_state)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TableRow {
    pub input: u32,
    pub in_state: u32,
    pub output: u32,
    pub out_state: u32,
}

/// A keyed finite-state transducer emitting `n` bits per `k`-bit input.
///
/// States are dense indices `0..num_states()`; index 0 is always the initial
/// (all-zero) state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transducer {
    Table(TableTransducer),
    Linear(LinearTransducer),
}

impl Transducer {
    pub fn k(&self) -> usize {
        match self {
            Self::Table(t) => t.k,
            Self::Linear(t) => t.k,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Table(t) => t.n,
            Self::Linear(t) => t.n,
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Self::Table(t) => t.labels.len(),
            Self::Linear(t) => t.sets.len() << (t.memory * t.k),
        }
    }

    pub fn initial_state(&self) -> usize {
        0
    }

    /// `(output, next_state)` for `input` in `state`.
    pub fn step(&self, state: usize, input: u32) -> (u32, usize) {
        match self {
            Self::Table(t) => {
                let i = (state << t.k) | input as usize;
                (t.output[i], t.next[i])
            }
            Self::Linear(t) => t.step(state, input),
        }
    }

    /// Human-readable label of a dense state index.
    pub fn state_label(&self, state: usize) -> String {
        match self {
            Self::Table(t) => format_field(t.labels[state], t.state_width),
            Self::Linear(t) => {
                let regs_bits = t.memory * t.k;
                let set = state >> regs_bits;
                let regs = state & ((1usize << regs_bits) - 1);
                if regs_bits == 0 {
                    format!("{}", set + 1)
                } else {
                    format!("{}:{}", set + 1, format_field(regs as u32, regs_bits))
                }
            }
        }
    }

    /// Rate-1 with a bijective output map in every state.
    pub fn is_invertible(&self) -> bool {
        match self {
            Self::Table(t) => t.inverse.is_some(),
            Self::Linear(t) => t.g0_inverse.is_some(),
        }
    }

    /// Recovers `(input, next_state)` from an output symbol.
    pub fn invert_step(&self, state: usize, output: u32) -> Option<(u32, usize)> {
        let input = match self {
            Self::Table(t) => *t.inverse.as_ref()?.get((state << t.n) | output as usize)?,
            Self::Linear(t) => {
                let (set, _) = t.split(state);
                t.g0_inverse.as_ref()?[set].apply(output ^ t.register_term(state))
            }
        };
        let (_, next) = self.step(state, input);
        Some((input, next))
    }

    /// Number of all-zero input steps that drive every state back to the
    /// initial state, if such a number exists.
    pub fn flush_steps(&self) -> Option<usize> {
        let n = self.num_states();
        let mut current: Vec<usize> = (0..n).collect();
        current.sort_unstable();
        current.dedup();
        for steps in 0..=n {
            if current.iter().all(|&s| s == 0) {
                return Some(steps);
            }
            let mut next: Vec<usize> = current.iter().map(|&s| self.step(s, 0).1).collect();
            next.sort_unstable();
            next.dedup();
            if next == current {
                return None;
            }
            current = next;
        }
        None
    }

    pub fn encoder(&self) -> Encoder<'_> {
        Encoder {
            transducer: self,
            state: self.initial_state(),
        }
    }

    /// Enumerates the table rows in (state, input) order.
    pub fn rows(&self) -> Vec<TableRow> {
        let mut rows = Vec::with_capacity(self.num_states() << self.k());
        for s in 0..self.num_states() {
            for u in 0..(1u32 << self.k()) {
                let (o, ns) = self.step(s, u);
                rows.push(TableRow {
                    input: u,
                    in_state: s as u32,
                    output: o,
                    out_state: ns as u32,
                });
            }
        }
        rows
    }
}

/// Streaming encoder over a transducer; holds the current state.
#[derive(Debug, Clone)]
pub struct Encoder<'a> {
    transducer: &'a Transducer,
    state: usize,
}

impl Encoder<'_> {
    pub fn push(&mut self, input: u32) -> u32 {
        let (out, next) = self.transducer.step(self.state, input);
        self.state = next;
        out
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = self.transducer.initial_state();
    }
}

/// Encodes a bit sequence from the initial state.
pub fn encode_block(t: &Transducer, input: &Bits) -> Result<Bits, CryptError> {
    let symbols = input.to_symbols(t.k())?;
    let mut enc = t.encoder();
    let mut out = Bits::new();
    for u in symbols {
        out.push_symbol(enc.push(u), t.n());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableTransducer {
    k: usize,
    n: usize,
    state_width: usize,
    labels: Vec<u32>,
    output: Vec<u32>,
    next: Vec<usize>,
    inverse: Option<Vec<u32>>,
}

impl TableTransducer {
    pub fn state_width(&self) -> usize {
        self.state_width
    }

    /// Rows in the line-oriented fixture format, ordered by (state, input).
    pub fn to_table_text(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (s, &label) in self.labels.iter().enumerate() {
            for u in 0..(1usize << self.k) {
                let i = (s << self.k) | u;
                lines.push(format!(
                    "{} {} {} {}",
                    format_field(u as u32, self.k),
                    format_field(label, self.state_width),
                    format_field(self.output[i], self.n),
                    format_field(self.labels[self.next[i]], self.state_width)
                ));
            }
        }
        lines
    }
}

/// Parses the transition-table text format: one `input in_state output
/// out_state` row per line as binary fields, `#` starts a comment.
pub fn parse_table(text: &str) -> Result<Vec<TableRow>, CryptError> {
    let mut rows = Vec::new();
    let mut widths = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(CryptError::TableValidation(format!(
                "line {}: expected 4 fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut parsed = [(0u32, 0usize); 4];
        for (slot, f) in parsed.iter_mut().zip(&fields) {
            *slot = parse_field(f)
                .map_err(|e| CryptError::TableValidation(format!("line {}: {e}", lineno + 1)))?;
        }
        let w = (parsed[0].1, parsed[1].1, parsed[2].1, parsed[3].1);
        if w.1 != w.3 {
            return Err(CryptError::TableValidation(format!(
                "line {}: state fields differ in width",
                lineno + 1
            )));
        }
        if *widths.get_or_insert(w) != w {
            return Err(CryptError::TableValidation(format!(
                "line {}: field widths differ from earlier rows",
                lineno + 1
            )));
        }
        rows.push(TableRow {
            input: parsed[0].0,
            in_state: parsed[1].0,
            output: parsed[2].0,
            out_state: parsed[3].0,
        });
    }
    Ok(rows)
}

/// Builds a table transducer from rows; widths come from the text form.
pub fn load_transducer_table(text: &str) -> Result<Transducer, CryptError> {
    let rows = parse_table(text)?;
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .ok_or_else(|| CryptError::TableValidation("table is empty".into()))?;
    let f: Vec<&str> = first.split_whitespace().collect();
    transducer_from_rows(&rows, f[0].len(), f[2].len(), f[1].len())
}

pub fn transducer_from_rows(
    rows: &[TableRow],
    k: usize,
    n: usize,
    state_width: usize,
) -> Result<Transducer, CryptError> {
    if k == 0 || k > 16 || n == 0 || n > 32 || state_width == 0 || state_width > 32 {
        return Err(CryptError::TableValidation(format!(
            "unsupported widths k={k}, n={n}, state={state_width}"
        )));
    }
    let mut by_key: BTreeMap<(u32, u32), (u32, u32)> = BTreeMap::new();
    for r in rows {
        if r.input > mask(k)
            || r.output > mask(n)
            || r.in_state > mask(state_width)
            || r.out_state > mask(state_width)
        {
            return Err(CryptError::TableValidation(format!(
                "row {r:?} exceeds the declared widths"
            )));
        }
        if by_key
            .insert((r.in_state, r.input), (r.output, r.out_state))
            .is_some()
        {
            return Err(CryptError::TableValidation(format!(
                "duplicate row for state {} input {}",
                format_field(r.in_state, state_width),
                format_field(r.input, k)
            )));
        }
    }
    let mut labels: Vec<u32> = by_key.keys().map(|&(s, _)| s).collect();
    labels.dedup();
    if labels.first() != Some(&0) {
        return Err(CryptError::TableValidation(
            "table has no all-zero state".into(),
        ));
    }
    if labels.len() > MAX_STATES {
        return Err(CryptError::TableValidation("too many states".into()));
    }
    let index: HashMap<u32, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let inputs = 1usize << k;
    let mut output = vec![0; labels.len() * inputs];
    let mut next = vec![0; labels.len() * inputs];
    for (si, &label) in labels.iter().enumerate() {
        for u in 0..inputs as u32 {
            let (o, ns) = by_key.get(&(label, u)).ok_or_else(|| {
                CryptError::TableValidation(format!(
                    "missing row for state {} input {}",
                    format_field(label, state_width),
                    format_field(u, k)
                ))
            })?;
            let nsi = *index.get(ns).ok_or_else(|| {
                CryptError::TableValidation(format!(
                    "next state {} has no rows of its own",
                    format_field(*ns, state_width)
                ))
            })?;
            output[(si << k) | u as usize] = *o;
            next[(si << k) | u as usize] = nsi;
        }
    }
    let inverse = (k == n)
        .then(|| invert_outputs(&output, labels.len(), k))
        .flatten();
    Ok(Transducer::Table(TableTransducer {
        k,
        n,
        state_width,
        labels,
        output,
        next,
        inverse,
    }))
}

fn invert_outputs(output: &[u32], states: usize, k: usize) -> Option<Vec<u32>> {
    let inputs = 1usize << k;
    let mut inv = vec![u32::MAX; states * inputs];
    for s in 0..states {
        for u in 0..inputs {
            let slot = &mut inv[(s << k) | output[(s << k) | u] as usize];
            if *slot != u32::MAX {
                return None;
            }
            *slot = u as u32;
        }
    }
    Some(inv)
}

/// Keyed next-set selection: inputs `lo..=hi` in set `from` move to set `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransitionRule {
    pub from: usize,
    pub lo: u32,
    pub hi: u32,
    pub to: usize,
}

/// State-selected linear convolutional map:
/// `y = u·G0 ⊕ r1·G1 ⊕ … ⊕ rL·GL`, registers shift `r1 <- u` after each
/// step and the active generator set switches by the transition rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearTransducer {
    k: usize,
    n: usize,
    memory: usize,
    sets: Vec<Vec<Gf2Matrix>>,
    rules: Vec<TransitionRule>,
    next_set: Vec<Vec<u16>>,
    g0_inverse: Option<Vec<Gf2Matrix>>,
}

impl LinearTransducer {
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn generator_sets(&self) -> &[Vec<Gf2Matrix>] {
        &self.sets
    }

    pub fn rules(&self) -> &[TransitionRule] {
        &self.rules
    }

    fn split(&self, state: usize) -> (usize, usize) {
        let regs_bits = self.memory * self.k;
        (state >> regs_bits, state & ((1usize << regs_bits) - 1))
    }

    fn register_term(&self, state: usize) -> u32 {
        let (set, regs) = self.split(state);
        let gens = &self.sets[set];
        let mut acc = 0;
        for (i, g) in gens.iter().enumerate().skip(1) {
            let r = (regs >> ((self.memory - i) * self.k)) as u32 & mask(self.k);
            acc ^= g.apply(r);
        }
        acc
    }

    fn step(&self, state: usize, input: u32) -> (u32, usize) {
        let (set, regs) = self.split(state);
        let out = self.sets[set][0].apply(input) ^ self.register_term(state);
        let regs_bits = self.memory * self.k;
        let next_regs = if regs_bits == 0 {
            0
        } else {
            ((input as usize) << (regs_bits - self.k)) | (regs >> self.k)
        };
        let next_set = self.next_set[set][input as usize] as usize;
        (out, (next_set << regs_bits) | next_regs)
    }
}

/// Compiles generator matrices and a keyed transition function into a
/// transducer.
///
/// `generators[s]` is the matrix list `[G0, G1, …, GL]` used while set `s` is
/// active (sets are numbered from 0 here). Every matrix is `k × n`. The rules
/// for each set must partition the `k`-bit input space.
pub fn compile_linear_transducer(
    generators: Vec<Vec<Gf2Matrix>>,
    rules: Vec<TransitionRule>,
) -> Result<Transducer, CryptError> {
    let bad = |m: String| Err(CryptError::KeyValidation(m));
    let Some(first) = generators.first().and_then(|s| s.first()) else {
        return bad("no generator matrices".into());
    };
    let (k, n) = (first.rows(), first.cols());
    let memory = generators[0].len() - 1;
    if k == 0 || k > 16 || n == 0 {
        return bad(format!("unsupported generator shape {k}x{n}"));
    }
    for (s, set) in generators.iter().enumerate() {
        if set.len() != memory + 1 {
            return bad(format!(
                "set {} has {} matrices, expected {}",
                s + 1,
                set.len(),
                memory + 1
            ));
        }
        if set.iter().any(|g| g.rows() != k || g.cols() != n) {
            return bad(format!("set {} mixes matrix shapes", s + 1));
        }
    }
    let states = generators
        .len()
        .checked_shl((memory * k) as u32)
        .unwrap_or(usize::MAX);
    if memory * k >= 32 || states > MAX_STATES {
        return bad(format!(
            "state space of {} sets with {memory}x{k} register bits is too large",
            generators.len()
        ));
    }
    let inputs = 1usize << k;
    let mut next_set = vec![vec![u16::MAX; inputs]; generators.len()];
    for r in &rules {
        if r.from >= generators.len() || r.to >= generators.len() {
            return bad(format!("rule {r:?} names an unknown set"));
        }
        if r.lo > r.hi || r.hi as usize >= inputs {
            return bad(format!("rule {r:?} has an invalid input range"));
        }
        for u in r.lo..=r.hi {
            let slot = &mut next_set[r.from][u as usize];
            if *slot != u16::MAX {
                return bad(format!(
                    "input {} of set {} is covered twice",
                    format_field(u, k),
                    r.from + 1
                ));
            }
            *slot = r.to as u16;
        }
    }
    for (s, row) in next_set.iter().enumerate() {
        if let Some(u) = row.iter().position(|&v| v == u16::MAX) {
            return bad(format!(
                "input {} of set {} has no transition",
                format_field(u as u32, k),
                s + 1
            ));
        }
    }
    let g0_inverse = if k == n {
        generators
            .iter()
            .map(|set| set[0].inverse())
            .collect::<Option<Vec<_>>>()
    } else {
        None
    };
    Ok(Transducer::Linear(LinearTransducer {
        k,
        n,
        memory,
        sets: generators,
        rules,
        next_set,
        g0_inverse,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{CODE_STAGE1_TABLE, CODE_STAGE2_TABLE};

    fn bits(s: &str) -> Bits {
        s.parse().unwrap()
    }

    fn label_index(t: &Transducer, label: &str) -> usize {
        (0..t.num_states())
            .find(|&s| t.state_label(s) == label)
            .unwrap()
    }

    #[test]
    fn code_stage_rows() {
        let s1 = load_transducer_table(CODE_STAGE1_TABLE).unwrap();
        assert_eq!((s1.k(), s1.n(), s1.num_states()), (2, 2, 16));
        let (o, ns) = s1.step(0, 0b10);
        assert_eq!((o, s1.state_label(ns).as_str()), (0b10, "1000"));

        let s2 = load_transducer_table(CODE_STAGE2_TABLE).unwrap();
        assert_eq!((s2.k(), s2.n(), s2.num_states()), (2, 4, 16));
        let (o, ns) = s2.step(0, 0b11);
        assert_eq!((o, s2.state_label(ns).as_str()), (0b1111, "1010"));
        let st = label_index(&s2, "1101");
        assert_eq!(s2.state_label(s2.step(st, 0b10).1), "0110");
    }

    #[test]
    fn code_stage_encodings() {
        let s1 = load_transducer_table(CODE_STAGE1_TABLE).unwrap();
        let s2 = load_transducer_table(CODE_STAGE2_TABLE).unwrap();
        assert_eq!(
            encode_block(&s1, &bits("10110000")).unwrap(),
            bits("10 01 01 11")
        );
        assert_eq!(
            encode_block(&s2, &bits("00 11 11 10")).unwrap(),
            bits("0000 1111 0101 1001")
        );
        assert_eq!(encode_block(&s1, &bits("000000")).unwrap(), bits("000000"));
        assert_eq!(encode_block(&s2, &bits("000000")).unwrap(), Bits::zeros(12));
        assert!(matches!(
            encode_block(&s1, &bits("101")),
            Err(CryptError::Length { len: 3, unit: 2 })
        ));
    }

    #[test]
    fn code_stage_invertibility_and_flush() {
        let s1 = load_transducer_table(CODE_STAGE1_TABLE).unwrap();
        let s2 = load_transducer_table(CODE_STAGE2_TABLE).unwrap();
        assert!(s1.is_invertible());
        assert!(!s2.is_invertible());
        assert_eq!(s1.flush_steps(), Some(2));
        assert_eq!(s2.flush_steps(), Some(2));
        for s in 0..16 {
            for u in 0..4 {
                let (o, ns) = s1.step(s, u);
                assert_eq!(s1.invert_step(s, o), Some((u, ns)));
            }
        }
    }

    #[test]
    fn table_validation() {
        let mut lines: Vec<&str> = CODE_STAGE1_TABLE.lines().collect();
        let last = lines.pop().unwrap();
        let missing = lines.join("\n");
        let err = load_transducer_table(&missing).unwrap_err();
        assert!(
            matches!(err, CryptError::TableValidation(ref m) if m.contains("missing row")),
            "{err}"
        );

        let dup = format!("{CODE_STAGE1_TABLE}\n{last}\n");
        let err = load_transducer_table(&dup).unwrap_err();
        assert!(
            matches!(err, CryptError::TableValidation(ref m) if m.contains("duplicate")),
            "{err}"
        );

        assert!(load_transducer_table("00 00 00").is_err());
        assert!(load_transducer_table("# nothing\n").is_err());
    }

    #[test]
    fn table_text_is_stable() {
        let s1 = load_transducer_table(CODE_STAGE1_TABLE).unwrap();
        let Transducer::Table(t) = &s1 else {
            unreachable!()
        };
        let reparsed = load_transducer_table(&t.to_table_text().join("\n")).unwrap();
        assert_eq!(reparsed, s1);
        let fixture_rows: Vec<&str> = CODE_STAGE1_TABLE
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .collect();
        assert_eq!(t.to_table_text(), fixture_rows);
    }

    #[test]
    fn pass_through_linear() {
        let g = vec![vec![
            Gf2Matrix::identity(8),
            Gf2Matrix::zeros(8, 8),
            Gf2Matrix::zeros(8, 8),
        ]];
        let t = compile_linear_transducer(
            g,
            vec![TransitionRule {
                from: 0,
                lo: 0,
                hi: 255,
                to: 0,
            }],
        )
        .unwrap();
        let mut enc = t.encoder();
        for u in [0u32, 1, 77, 255, 128] {
            assert_eq!(enc.push(u), u);
        }
        assert!(t.is_invertible());
    }

    #[test]
    fn transition_partition_is_checked() {
        let g = || vec![vec![Gf2Matrix::identity(2)]; 2];
        let gap = vec![
            TransitionRule {
                from: 0,
                lo: 0,
                hi: 2,
                to: 0,
            },
            TransitionRule {
                from: 1,
                lo: 0,
                hi: 3,
                to: 0,
            },
        ];
        assert!(matches!(
            compile_linear_transducer(g(), gap),
            Err(CryptError::KeyValidation(_))
        ));
        let overlap = vec![
            TransitionRule {
                from: 0,
                lo: 0,
                hi: 3,
                to: 0,
            },
            TransitionRule {
                from: 0,
                lo: 3,
                hi: 3,
                to: 1,
            },
            TransitionRule {
                from: 1,
                lo: 0,
                hi: 3,
                to: 0,
            },
        ];
        assert!(compile_linear_transducer(g(), overlap).is_err());
    }

    #[test]
    fn linear_memory_and_set_switching() {
        // y = u ⊕ r1 with two sets that differ only in G1
        let sets = vec![
            vec![Gf2Matrix::identity(2), Gf2Matrix::identity(2)],
            vec![Gf2Matrix::identity(2), Gf2Matrix::zeros(2, 2)],
        ];
        let rules = vec![
            TransitionRule {
                from: 0,
                lo: 0,
                hi: 1,
                to: 0,
            },
            TransitionRule {
                from: 0,
                lo: 2,
                hi: 3,
                to: 1,
            },
            TransitionRule {
                from: 1,
                lo: 0,
                hi: 3,
                to: 1,
            },
        ];
        let t = compile_linear_transducer(sets, rules).unwrap();
        assert_eq!(t.num_states(), 8);
        let mut enc = t.encoder();
        assert_eq!(enc.push(0b01), 0b01);
        assert_eq!(enc.push(0b01), 0b00);
        assert_eq!(enc.push(0b10), 0b11);
        // now in set 2, register term dropped
        assert_eq!(enc.push(0b00), 0b00);
        assert_eq!(t.state_label(enc.state()), "2:00");
    }
}
