use super::bits::Bits;
use super::boxes::{PBoxLayer, SBoxLayer};
use super::transducer::Transducer;
use super::CryptError;

/// Interstage product-cipher layer: S-boxes first, then the P-box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interstage {
    pub sbox: SBoxLayer,
    pub pbox: PBoxLayer,
}

impl Interstage {
    pub fn forward(&self, symbol: u32) -> u32 {
        self.pbox.apply(self.sbox.apply(symbol, false), false)
    }

    pub fn backward(&self, symbol: u32) -> u32 {
        self.sbox.apply(self.pbox.apply(symbol, true), true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeKey {
    stages: Vec<Transducer>,
    interstage: Vec<Interstage>,
}

impl CascadeKey {
    pub fn new(stages: Vec<Transducer>, interstage: Vec<Interstage>) -> Result<Self, CryptError> {
        if stages.is_empty() {
            return Err(CryptError::KeyValidation("cascade has no stages".into()));
        }
        if interstage.len() + 1 != stages.len() {
            return Err(CryptError::KeyValidation(format!(
                "{} stages need {} interstage layers, found {}",
                stages.len(),
                stages.len() - 1,
                interstage.len()
            )));
        }
        for (i, layer) in interstage.iter().enumerate() {
            let (out, next_in) = (stages[i].n(), stages[i + 1].k());
            let (sw, pw) = (layer.sbox.symbol_width(), layer.pbox.width());
            if out != sw || sw != pw || pw != next_in {
                return Err(CryptError::KeyValidation(format!(
                    "width chain broken between stage {} and {}: output {out}, s-box {sw}, p-box {pw}, input {next_in}",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(Self { stages, interstage })
    }

    pub fn stages(&self) -> &[Transducer] {
        &self.stages
    }

    pub fn interstage(&self) -> &[Interstage] {
        &self.interstage
    }

    /// Input bits consumed per cascade step.
    pub fn input_width(&self) -> usize {
        self.stages[0].k()
    }

    /// Output bits produced per cascade step.
    pub fn output_width(&self) -> usize {
        self.stages.last().expect("non-empty").n()
    }

    /// True when every stage is rate-1 and invertible, so decryption is
    /// algebraic and no termination tail is needed.
    pub fn is_invertible(&self) -> bool {
        self.stages.iter().all(Transducer::is_invertible)
    }

    /// Zero input steps appended per block when the cascade is decoded with
    /// the Viterbi decoder: the flush length of the first stage.
    pub fn tail_steps(&self) -> Option<usize> {
        self.stages[0].flush_steps()
    }

    /// Runs one cascade step from the given per-stage states.
    pub fn step(&self, states: &mut [usize], input: u32) -> u32 {
        let mut sym = input;
        for (i, stage) in self.stages.iter().enumerate() {
            let (out, next) = stage.step(states[i], sym);
            states[i] = next;
            sym = match self.interstage.get(i) {
                Some(layer) => layer.forward(out),
                None => out,
            };
        }
        sym
    }

    pub fn initial_states(&self) -> Vec<usize> {
        self.stages.iter().map(Transducer::initial_state).collect()
    }
}

/// Stage 1 → S-box → P-box → stage 2 → … from reset states.
pub fn cascade_encrypt(key: &CascadeKey, data: &Bits) -> Result<Bits, CryptError> {
    let symbols = data.to_symbols(key.input_width())?;
    let mut states = key.initial_states();
    let mut out = Bits::new();
    for u in symbols {
        out.push_symbol(key.step(&mut states, u), key.output_width());
    }
    Ok(out)
}

/// Algebraic inverse of [`cascade_encrypt`] for rate-1 invertible cascades.
pub fn cascade_decrypt(key: &CascadeKey, data: &Bits) -> Result<Bits, CryptError> {
    if let Some(i) = key.stages.iter().position(|s| !s.is_invertible()) {
        return Err(CryptError::RequiresViterbi(i + 1));
    }
    let symbols = data.to_symbols(key.output_width())?;
    let mut states = key.initial_states();
    let mut out = Bits::new();
    for y in symbols {
        let mut sym = y;
        for i in (0..key.stages.len()).rev() {
            let (input, next) = key.stages[i]
                .invert_step(states[i], sym)
                .expect("invertible stage accepts every symbol");
            states[i] = next;
            sym = if i > 0 {
                key.interstage[i - 1].backward(input)
            } else {
                input
            };
        }
        out.push_symbol(sym, key.input_width());
    }
    Ok(out)
}
