use std::fmt;
use std::str::FromStr;

/// The five hashing methods compared in the evaluation.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub enum Regime {
    /// Autoencoder trained on full videos only.
    #[serde(rename = "ssth-rt")]
    SsthRt,
    /// Autoencoder also trained on truncated videos.
    #[serde(rename = "ssth-rt+")]
    SsthRtPlus,
    /// `SsthRtPlus` encoder with truncated duplicates hashed into the codebook.
    #[serde(rename = "ssth-rt++")]
    SsthRtPlusPlus,
    /// Secondary encoder distilled through the frozen decoder.
    #[serde(rename = "la-reco")]
    LaReco,
    /// Secondary encoder distilled onto the primary's full-video bitcodes.
    #[serde(rename = "la-code")]
    LaCode,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::SsthRt,
        Regime::SsthRtPlus,
        Regime::SsthRtPlusPlus,
        Regime::LaReco,
        Regime::LaCode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::SsthRt => "ssth-rt",
            Regime::SsthRtPlus => "ssth-rt+",
            Regime::SsthRtPlusPlus => "ssth-rt++",
            Regime::LaReco => "la-reco",
            Regime::LaCode => "la-code",
        }
    }

    /// Query encoder is a distilled secondary encoder.
    pub fn is_secondary(self) -> bool {
        matches!(self, Regime::LaReco | Regime::LaCode)
    }

    /// Codebook holds one entry per (video, observation level).
    pub fn duplicated_codebook(self) -> bool {
        self == Regime::SsthRtPlusPlus
    }

    /// Regime the primary encoder is trained with. `++` shares the `+`
    /// training, and both distillation methods start from a `+` primary.
    pub fn primary_training(self) -> Regime {
        match self {
            Regime::SsthRt => Regime::SsthRt,
            _ => Regime::SsthRtPlus,
        }
    }

    pub(crate) fn code(self) -> u32 {
        Regime::ALL.iter().position(|r| *r == self).unwrap() as u32
    }

    pub(crate) fn from_code(code: u32) -> Option<Regime> {
        Regime::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Regime::ALL
            .iter()
            .copied()
            .find(|r| r.name() == norm)
            .ok_or_else(|| format!("unknown regime `{s}` (expected ssth-rt, ssth-rt+, ssth-rt++, la-reco or la-code)"))
    }
}
