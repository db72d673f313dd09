//! Hard-decision Viterbi decoding of (possibly nonlinear) transducers.
//!
//! The path metric is the number of agreeing bits, which is maximized.
//! At a merge the survivor with the higher metric wins; ties go to the smaller
//! input symbol, then to the smaller previous state. Among final states the
//! best metric wins, ties to the smaller state id.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::convcrypt::{Bits, CascadeKey, CryptError, Transducer};

/// Upper bound on `states · 2^k` for an explicit trellis.
pub const MAX_EDGES: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViterbiError {
    #[error("received length {len} is not a multiple of {n}")]
    Length { len: usize, n: usize },
    #[error("no survivor path reaches an allowed final state")]
    NoSurvivor,
    #[error("trellis too large: {states} states with {inputs} inputs each")]
    TooLarge { states: usize, inputs: usize },
    #[error("block has {steps} steps, fewer than the {tail} tail steps")]
    ShortBlock { steps: usize, tail: usize },
    #[error("first stage has no zero-input flush sequence")]
    NotTerminable,
    #[error(transparent)]
    Crypt(#[from] CryptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub input: u32,
    pub output: u32,
    pub to: usize,
}

/// Explicit state-transition graph: edge `s · 2^k + u` leaves state `s` on
/// input `u`. State 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    k: usize,
    n: usize,
    num_states: usize,
    edges: Vec<Edge>,
    /// States a terminated block may end in.
    accepting: Vec<bool>,
}

impl Trellis {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, state: usize, input: u32) -> &Edge {
        &self.edges[(state << self.k) | input as usize]
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }
}

/// One edge per `(state, input)` of the transducer; only the all-zero state
/// is accepting.
pub fn build_trellis(t: &Transducer) -> Result<Trellis, ViterbiError> {
    let (k, states) = (t.k(), t.num_states());
    check_size(states, k)?;
    let mut edges = Vec::with_capacity(states << k);
    for from in 0..states {
        for input in 0..1u32 << k {
            let (output, to) = t.step(from, input);
            edges.push(Edge {
                from,
                input,
                output,
                to,
            });
        }
    }
    let mut accepting = vec![false; states];
    accepting[t.initial_state()] = true;
    Ok(Trellis {
        k,
        n: t.n(),
        num_states: states,
        edges,
        accepting,
    })
}

fn check_size(states: usize, k: usize) -> Result<(), ViterbiError> {
    let inputs = 1usize << k;
    if states.saturating_mul(inputs) > MAX_EDGES {
        return Err(ViterbiError::TooLarge { states, inputs });
    }
    Ok(())
}

/// Where a decoded path may end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Only accepting states.
    Terminated,
    /// Any state.
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOptions {
    pub termination: Termination,
    /// The last `zero_tail_steps` inputs are known to be zero.
    pub zero_tail_steps: usize,
}

impl DecodeOptions {
    pub const TERMINATED: Self = Self {
        termination: Termination::Terminated,
        zero_tail_steps: 0,
    };
    pub const OPEN: Self = Self {
        termination: Termination::Open,
        zero_tail_steps: 0,
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub inputs: Vec<u32>,
    pub agreements: u32,
    pub final_state: usize,
}

impl Decoded {
    pub fn input_bits(&self, k: usize) -> Bits {
        Bits::from_symbols(&self.inputs, k)
    }
}

/// Cumulative metric of one surviving state after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub step: usize,
    pub state: usize,
    pub metric: u32,
}

pub fn decode_block(
    tr: &Trellis,
    received: &Bits,
    opts: DecodeOptions,
) -> Result<Decoded, ViterbiError> {
    run(tr, received, opts, None)
}

/// Like [`decode_block`] and also records every survivor metric per step.
pub fn decode_block_traced(
    tr: &Trellis,
    received: &Bits,
    opts: DecodeOptions,
) -> Result<(Decoded, Vec<TraceRow>), ViterbiError> {
    let mut trace = Vec::new();
    let d = run(tr, received, opts, Some(&mut trace))?;
    Ok((d, trace))
}

/// Renders a trace as `step,state,metric` CSV.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = String::from("step,state,metric\n");
    for r in trace {
        let _ = writeln!(s, "{},{},{}", r.step, r.state, r.metric);
    }
    s
}

/// Agreement count of every edge leaving `state` against one received
/// symbol, indexed by input.
pub fn edge_metrics(tr: &Trellis, state: usize, symbol: u32) -> Vec<u32> {
    (0..1u32 << tr.k)
        .map(|u| tr.n as u32 - (tr.edge(state, u).output ^ symbol).count_ones())
        .collect()
}

const NONE: u32 = u32::MAX;

fn run(
    tr: &Trellis,
    received: &Bits,
    opts: DecodeOptions,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<Decoded, ViterbiError> {
    let symbols = received
        .to_symbols(tr.n)
        .map_err(|_| ViterbiError::Length {
            len: received.len(),
            n: tr.n,
        })?;
    let steps = symbols.len();
    if opts.zero_tail_steps > steps {
        return Err(ViterbiError::ShortBlock {
            steps,
            tail: opts.zero_tail_steps,
        });
    }
    let states = tr.num_states;
    let mut metric = vec![NONE; states];
    metric[0] = 0;
    let mut next = vec![NONE; states];
    // survivor (prev_state, input) per step and state
    let mut back: Vec<(u32, u32)> = vec![(0, 0); steps * states];
    let inputs = 1u32 << tr.k;

    for (step, &rx) in symbols.iter().enumerate() {
        let max_input = if step >= steps - opts.zero_tail_steps {
            1
        } else {
            inputs
        };
        next.fill(NONE);
        let row = &mut back[step * states..(step + 1) * states];
        for (s, &m) in metric.iter().enumerate() {
            if m == NONE {
                continue;
            }
            for u in 0..max_input {
                let e = tr.edge(s, u);
                let cand = m + tr.n as u32 - (e.output ^ rx).count_ones();
                let cur = next[e.to];
                let better = cur == NONE
                    || cand > cur
                    || (cand == cur && (u, s as u32) < (row[e.to].1, row[e.to].0));
                if better {
                    next[e.to] = cand;
                    row[e.to] = (s as u32, u);
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
        if let Some(t) = trace.as_deref_mut() {
            t.extend(
                metric
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m != NONE)
                    .map(|(state, &m)| TraceRow {
                        step,
                        state,
                        metric: m,
                    }),
            );
        }
    }

    let mut best: Option<(u32, usize)> = None;
    for (s, &m) in metric.iter().enumerate() {
        if m == NONE || (opts.termination == Termination::Terminated && !tr.accepting[s]) {
            continue;
        }
        if best.is_none_or(|(bm, _)| m > bm) {
            best = Some((m, s));
        }
    }
    let (agreements, final_state) = best.ok_or(ViterbiError::NoSurvivor)?;
    let mut inputs_out = vec![0; steps];
    let mut s = final_state;
    for step in (0..steps).rev() {
        let (prev, u) = back[step * states + s];
        inputs_out[step] = u;
        s = prev as usize;
    }
    Ok(Decoded {
        inputs: inputs_out,
        agreements,
        final_state,
    })
}

/// Product trellis of a whole cascade over its reachable joint states.
///
/// A joint state is accepting when the first stage is in its initial state:
/// flushing the first stage with zeros is the only termination the encoder
/// controls, since the interstage S-box need not map zero to zero.
#[derive(Debug, Clone)]
pub struct CascadeDecoder {
    trellis: Trellis,
    tail_steps: usize,
    labels: Vec<Vec<usize>>,
}

impl CascadeDecoder {
    pub fn new(key: &CascadeKey) -> Result<Self, ViterbiError> {
        let tail_steps = key.tail_steps().ok_or(ViterbiError::NotTerminable)?;
        let k = key.input_width();
        let start = key.initial_states();
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::from([(start.clone(), 0)]);
        let mut labels = vec![start];
        let mut edges = Vec::new();
        let mut i = 0;
        while i < labels.len() {
            check_size(labels.len(), k)?;
            for input in 0..1u32 << k {
                let mut st = labels[i].clone();
                let output = key.step(&mut st, input);
                let next_id = labels.len();
                let to = *ids.entry(st.clone()).or_insert_with(|| {
                    labels.push(st);
                    next_id
                });
                edges.push(Edge {
                    from: i,
                    input,
                    output,
                    to,
                });
            }
            i += 1;
        }
        let accepting = labels
            .iter()
            .map(|l| l[0] == key.stages()[0].initial_state())
            .collect();
        Ok(Self {
            trellis: Trellis {
                k,
                n: key.output_width(),
                num_states: labels.len(),
                edges,
                accepting,
            },
            tail_steps,
            labels,
        })
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    pub fn tail_steps(&self) -> usize {
        self.tail_steps
    }

    /// Per-stage states of a joint state id.
    pub fn joint_state(&self, id: usize) -> &[usize] {
        &self.labels[id]
    }

    pub fn options(&self) -> DecodeOptions {
        DecodeOptions {
            termination: Termination::Terminated,
            zero_tail_steps: self.tail_steps,
        }
    }

    pub fn decode(&self, received: &Bits) -> Result<CascadeDecoded, ViterbiError> {
        let d = decode_block(&self.trellis, received, self.options())?;
        let k = self.trellis.k;
        let input = d.input_bits(k);
        let message = input.slice(0, input.len() - self.tail_steps * k);
        Ok(CascadeDecoded {
            input,
            message,
            agreements: d.agreements,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeDecoded {
    /// Recovered encoder input including the zero tail.
    pub input: Bits,
    /// The input with the tail stripped.
    pub message: Bits,
    pub agreements: u32,
}

/// Appends the zero tail that returns the first stage to its initial state.
pub fn append_tail(key: &CascadeKey, message: &Bits) -> Result<Bits, ViterbiError> {
    let tail = key.tail_steps().ok_or(ViterbiError::NotTerminable)?;
    let mut out = message.clone();
    out.extend(&Bits::zeros(tail * key.input_width()));
    Ok(out)
}

/// Maximum-likelihood decoding over the joint trellis of the cascade.
pub fn cascade_decode(key: &CascadeKey, received: &Bits) -> Result<CascadeDecoded, ViterbiError> {
    CascadeDecoder::new(key)?.decode(received)
}

/// Decodes the cascade one stage at a time, last stage first. The last
/// stages are decoded with an open end, the first stage terminated with its
/// zero tail forced.
pub fn cascade_decode_stagewise(
    key: &CascadeKey,
    received: &Bits,
) -> Result<CascadeDecoded, ViterbiError> {
    let tail = key.tail_steps().ok_or(ViterbiError::NotTerminable)?;
    let stages = key.stages();
    let mut current = received.clone();
    let mut agreements = 0;
    for i in (0..stages.len()).rev() {
        let tr = build_trellis(&stages[i])?;
        let opts = if i == 0 {
            DecodeOptions {
                termination: Termination::Terminated,
                zero_tail_steps: tail,
            }
        } else {
            DecodeOptions::OPEN
        };
        let d = decode_block(&tr, &current, opts)?;
        if i == stages.len() - 1 {
            agreements = d.agreements;
        }
        current = match i {
            0 => d.input_bits(tr.k),
            _ => {
                let layer = &key.interstage()[i - 1];
                let back: Vec<u32> = d.inputs.iter().map(|&s| layer.backward(s)).collect();
                Bits::from_symbols(&back, tr.k)
            }
        };
    }
    let k = key.input_width();
    let message = current.slice(0, current.len() - tail * k);
    Ok(CascadeDecoded {
        input: current,
        message,
        agreements,
    })
}

/// Minimum Hamming distance between the codewords of two distinct input
/// blocks of `steps` symbols whose last `opts.zero_tail_steps` symbols are
/// zero, both paths starting in state 0 and ending as `opts` requires.
/// Returns `None` when fewer than two valid inputs exist.
pub fn min_block_distance(tr: &Trellis, steps: usize, opts: DecodeOptions) -> Option<u32> {
    let s = tr.num_states;
    let inputs = 1u32 << tr.k;
    // dist[diverged][a * s + b]
    let mut dist = vec![vec![NONE; s * s]; 2];
    dist[0][0] = 0;
    for step in 0..steps {
        let max_input = if step + opts.zero_tail_steps >= steps {
            1
        } else {
            inputs
        };
        let mut next = vec![vec![NONE; s * s]; 2];
        for (flag, row) in dist.iter().enumerate() {
            for (pair, &d) in row.iter().enumerate() {
                if d == NONE {
                    continue;
                }
                let (a, b) = (pair / s, pair % s);
                for u in 0..max_input {
                    let ea = tr.edge(a, u);
                    for v in 0..max_input {
                        if flag == 0 && v < u {
                            // symmetric pairs only need one order
                            continue;
                        }
                        let eb = tr.edge(b, v);
                        let nf = flag | usize::from(u != v);
                        let nd = d + (ea.output ^ eb.output).count_ones();
                        let slot = &mut next[nf][ea.to * s + eb.to];
                        if *slot == NONE || nd < *slot {
                            *slot = nd;
                        }
                    }
                }
            }
        }
        dist = next;
    }
    let ok = |st: usize| opts.termination == Termination::Open || tr.accepting[st];
    dist[1]
        .iter()
        .enumerate()
        .filter(|&(pair, &d)| d != NONE && ok(pair / s) && ok(pair % s))
        .map(|(_, &d)| d)
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convcrypt::{cascade_encrypt, encode_block, presets};
    use crate::fixtures::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Bits {
        s.parse().unwrap()
    }

    fn flip(b: &Bits, i: usize) -> Bits {
        let mut c = b.clone();
        c.flip(i);
        c
    }

    #[test]
    fn trellis_sizes() {
        assert_eq!(
            build_trellis(&presets::code_stage2())
                .unwrap()
                .edges()
                .len(),
            64
        );
        assert_eq!(
            build_trellis(&presets::code_stage1())
                .unwrap()
                .edges()
                .len(),
            64
        );
        let id = build_trellis(&presets::identity(3).stages()[0]).unwrap();
        assert_eq!(id.num_states(), 1);
        assert_eq!(id.edges().len(), 8);
        assert!(id
            .edges()
            .iter()
            .all(|e| e.from == 0 && e.to == 0 && e.output == e.input));
    }

    #[test]
    fn edges_mirror_the_table() {
        let t = presets::code_stage2();
        let tr = build_trellis(&t).unwrap();
        for e in tr.edges() {
            assert_eq!(t.step(e.from, e.input), (e.output, e.to));
        }
    }

    #[test]
    fn stage2_worked_decode() {
        let tr = build_trellis(&presets::code_stage2()).unwrap();
        let d = decode_block(&tr, &bits(CODE_RECEIVED), DecodeOptions::OPEN).unwrap();
        assert_eq!(d.input_bits(2), bits(CODE_PBOX_OUTPUT));
        assert_eq!(d.agreements, 15);
        let clean = decode_block(&tr, &bits(CODE_CODEWORD), DecodeOptions::OPEN).unwrap();
        assert_eq!(clean.input_bits(2), bits(CODE_PBOX_OUTPUT));
        assert_eq!(clean.agreements, 16);
        let zero = decode_block(&tr, &Bits::zeros(16), DecodeOptions::TERMINATED).unwrap();
        assert_eq!(zero.inputs, vec![0; 4]);
        assert_eq!(zero.agreements, 16);
    }

    #[test]
    fn stage2_worked_path_does_not_terminate() {
        // the encoder leaves stage 2 outside the zero state on this block
        let t = presets::code_stage2();
        let mut enc = t.encoder();
        for s in bits(CODE_PBOX_OUTPUT).to_symbols(2).unwrap() {
            enc.push(s);
        }
        assert_ne!(enc.state(), 0);
        assert_eq!(t.state_label(enc.state()), "1101");
    }

    #[test]
    fn first_step_edge_metrics() {
        let tr = build_trellis(&presets::code_stage2()).unwrap();
        let outs: Vec<u32> = (0..4).map(|u| tr.edge(0, u).output).collect();
        assert_eq!(outs, vec![0b0000, 0b0011, 0b1100, 0b1111]);
        assert_eq!(edge_metrics(&tr, 0, 0b1000), vec![3, 1, 3, 1]);
    }

    #[test]
    fn trace_records_first_step() {
        let tr = build_trellis(&presets::code_stage2()).unwrap();
        let (_, trace) =
            decode_block_traced(&tr, &bits(CODE_RECEIVED), DecodeOptions::OPEN).unwrap();
        let first: Vec<u32> = trace
            .iter()
            .filter(|r| r.step == 0)
            .map(|r| r.metric)
            .collect();
        let mut sorted = first.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 1, 3, 3]);
        assert!(trace_csv(&trace).starts_with("step,state,metric\n0,"));
    }

    #[test]
    fn worked_cascade_decode() {
        let key = presets::fig4x23();
        let d = cascade_decode(&key, &bits(CODE_RECEIVED)).unwrap();
        assert_eq!(d.input, bits(CODE_MESSAGE));
        assert_eq!(d.message, bits("1011"));
        assert_eq!(d.agreements, 15);
        let z = cascade_decode(&key, &cascade_encrypt(&key, &Bits::zeros(8)).unwrap()).unwrap();
        assert_eq!(z.input, Bits::zeros(8));
    }

    #[test]
    fn worked_codeword_corrects_every_single_flip() {
        let key = presets::fig4x23();
        let dec = CascadeDecoder::new(&key).unwrap();
        let cw = bits(CODE_CODEWORD);
        assert_eq!(dec.decode(&cw).unwrap().input, bits(CODE_MESSAGE));
        for i in 0..cw.len() {
            assert_eq!(
                dec.decode(&flip(&cw, i)).unwrap().input,
                bits(CODE_MESSAGE),
                "flip {i}"
            );
        }
    }

    #[test]
    fn stagewise_recovers_the_worked_received_word() {
        let key = presets::fig4x23();
        let d = cascade_decode_stagewise(&key, &bits(CODE_RECEIVED)).unwrap();
        assert_eq!(d.input, bits(CODE_MESSAGE));
        let clean = cascade_decode_stagewise(&key, &bits(CODE_CODEWORD)).unwrap();
        assert_eq!(clean.input, bits(CODE_MESSAGE));
    }

    #[test]
    fn terminated_decode_without_survivor() {
        // a single step cannot return the stage-1 table to zero from a
        // non-zero input, but zero input always can
        let tr = build_trellis(&presets::code_stage1()).unwrap();
        let d = decode_block(&tr, &bits("11"), DecodeOptions::TERMINATED).unwrap();
        assert_eq!(tr.edge(0, d.inputs[0]).to, 0);
        assert!(matches!(
            decode_block(&tr, &bits("101"), DecodeOptions::OPEN),
            Err(ViterbiError::Length { len: 3, n: 2 })
        ));
    }

    #[test]
    fn block_distances() {
        let fec = CascadeDecoder::new(&presets::fec()).unwrap();
        for steps in 3..=6 {
            assert!(min_block_distance(fec.trellis(), steps, fec.options()).unwrap() >= 3);
        }
        let fig = CascadeDecoder::new(&presets::fig4x23()).unwrap();
        // the worked-code cascade is not single-error correcting in general,
        // only around the worked codeword
        for steps in 4..=6 {
            assert!(min_block_distance(fig.trellis(), steps, fig.options()).unwrap() < 3);
        }
    }

    #[test]
    fn too_large_trellis_is_refused() {
        assert!(matches!(
            build_trellis(&presets::demo8().stages()[0]),
            Err(ViterbiError::TooLarge { .. })
        ));
    }

    fn random_message(seed: &[u8]) -> Bits {
        let symbols: Vec<u32> = seed.iter().map(|&b| b as u32 & 3).collect();
        Bits::from_symbols(&symbols, 2)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn noiseless_decode_matches_encoder(data in proptest::collection::vec(any::<u8>(), 0..24)) {
            let t = presets::code_stage1();
            let tr = build_trellis(&t).unwrap();
            let mut msg = random_message(&data);
            msg.extend(&Bits::zeros(4));
            let cw = encode_block(&t, &msg).unwrap();
            let d = decode_block(&tr, &cw, DecodeOptions::TERMINATED).unwrap();
            prop_assert_eq!(d.input_bits(2), msg);
            prop_assert_eq!(d.agreements as usize, cw.len());
        }

        #[test]
        fn agreement_accounting(data in proptest::collection::vec(any::<u8>(), 1..12), noise in proptest::collection::vec(any::<bool>(), 64)) {
            let key = presets::fig4x23();
            let dec = CascadeDecoder::new(&key).unwrap();
            let msg = append_tail(&key, &random_message(&data)).unwrap();
            let mut rx = cascade_encrypt(&key, &msg).unwrap();
            for (i, &hit) in noise.iter().take(rx.len()).enumerate() {
                if hit {
                    rx.flip(i);
                }
            }
            let d = dec.decode(&rx).unwrap();
            let re = cascade_encrypt(&key, &d.input).unwrap();
            prop_assert_eq!(d.agreements as usize, rx.len() - rx.hamming(&re));
        }

        #[test]
        fn fec_cascade_corrects_any_single_flip(data in proptest::collection::vec(any::<u8>(), 1..10), pos in any::<prop::sample::Index>()) {
            let key = presets::fec();
            let dec = CascadeDecoder::new(&key).unwrap();
            let msg = random_message(&data);
            let cw = cascade_encrypt(&key, &append_tail(&key, &msg).unwrap()).unwrap();
            let d = dec.decode(&flip(&cw, pos.index(cw.len()))).unwrap();
            prop_assert_eq!(d.message, msg);
        }
    }
}
