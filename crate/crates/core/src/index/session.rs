use super::{retrieve, Codebook, RetrievalResult};
use crate::bitcode::Bitcode;
use crate::encoder::{EncoderModel, EncoderState};
use crate::error::{ensure, Result};

/// A query that grows one clip at a time.
///
/// Each push costs one encoder step regardless of how many clips came
/// before; queries read the current bitcode and leave the state alone.
#[derive(Debug, Clone)]
pub struct StreamSession<'a> {
    id: u64,
    encoder: &'a EncoderModel,
    state: EncoderState,
    code: Option<Bitcode>,
}

impl<'a> StreamSession<'a> {
    pub fn open(encoder: &'a EncoderModel, id: u64) -> Self {
        Self {
            id,
            encoder,
            state: encoder.fresh_state(),
            code: None,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn clips_consumed(&self) -> usize {
        self.state.steps()
    }

    /// Bitcode of the clips pushed so far, if any.
    pub fn code(&self) -> Option<&Bitcode> {
        self.code.as_ref()
    }

    pub fn push(&mut self, clip: &[f32]) -> Result<&Bitcode> {
        let code = self.encoder.encode_step(&mut self.state, clip)?;
        Ok(self.code.insert(code))
    }

    /// Top-`k` distinct videos for the current prefix.
    pub fn query(&self, codebook: &Codebook, k: usize) -> Result<RetrievalResult> {
        let code = self.code.as_ref();
        ensure!(
            code.is_some(),
            InvalidInput,
            "session {} queried before any clip was pushed",
            self.id
        );
        Ok(retrieve(codebook, code.unwrap(), k)?.with_query_id(self.id))
    }
}
