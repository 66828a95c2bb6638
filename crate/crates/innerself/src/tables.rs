//! Strategy, substitution and prosody tables, word lists and the classifier
//! head, each either shipped with the core crate or loaded from a file.

use std::path::Path;

use innerself_core::conversation::{
    Lexicons, ProsodyTable, Reframer, StrategyTable, SubstitutionTable,
};
use innerself_core::emotion::{english_absolute_terms, ClassifierHead, ValenceLexicon};
use innerself_core::lexicon::Lexicon;

use crate::config::TablePaths;

#[derive(Debug, Clone)]
pub struct Tables {
    pub strategies: StrategyTable,
    pub reframer: Reframer,
    pub prosody: ProsodyTable,
    pub lexicons: Lexicons,
    pub head: ClassifierHead,
}

impl Tables {
    pub fn shipped() -> Self {
        Self {
            strategies: StrategyTable::english(),
            reframer: Reframer::english(),
            prosody: ProsodyTable::english(),
            lexicons: Lexicons::english(),
            head: ClassifierHead::reference(),
        }
    }

    pub fn load(paths: &TablePaths) -> anyhow::Result<Self> {
        let read = |p: &Path| -> anyhow::Result<String> {
            std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read table {}: {e}", p.display()))
        };
        let lexicon = |p: &Option<std::path::PathBuf>, shipped: Lexicon| -> anyhow::Result<Lexicon> {
            Ok(match p {
                Some(p) => Lexicon::parse(&read(p)?),
                None => shipped,
            })
        };
        let shipped_valence = ValenceLexicon::english();
        let lexicons = Lexicons {
            valence: ValenceLexicon {
                positive: lexicon(&paths.positive, shipped_valence.positive)?,
                negative: lexicon(&paths.negative, shipped_valence.negative)?,
            },
            absolutes: lexicon(&paths.absolutes, english_absolute_terms())?,
        };
        let substitutions = match &paths.substitutions {
            Some(p) => SubstitutionTable::from_json(&read(p)?)?,
            None => SubstitutionTable::english(),
        };
        let reframer = Reframer::new(lexicons.absolutes.clone(), substitutions)?;
        let strategies = match &paths.strategies {
            Some(p) => StrategyTable::from_json(&read(p)?)?,
            None => StrategyTable::english(),
        };
        let prosody = match &paths.prosody {
            Some(p) => ProsodyTable::from_json(&read(p)?)?,
            None => ProsodyTable::english(),
        };
        let head = match &paths.head {
            Some(p) => ClassifierHead::from_json(&read(p)?)?,
            None => ClassifierHead::reference(),
        };
        Ok(Self {
            strategies,
            reframer,
            prosody,
            lexicons,
            head,
        })
    }
}
