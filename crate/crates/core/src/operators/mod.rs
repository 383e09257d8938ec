//! Variation machinery: repairs, mutations, crossovers and initialisers.
//!
//! Every operator is a method on [`Variation`], which bundles the instance,
//! the run's [`RandomStream`] and an [`EventLog`] that records fallback and
//! no-op paths. Given the same inputs and seed, every operator is
//! deterministic.

mod crossover;
mod init;
mod mutation;
mod repair;
mod rng;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genotype::Genotype;
use crate::instance::Instance;

pub use mutation::MutationPlan;
pub use rng::RandomStream;

/// Probability of each optional step inside MutC / MutC2.
pub const MUTATION_GATE: f64 = 0.10;
/// Probability that a DRC/IDRC mask is taken from the second parent.
pub const MASK_SWAP_PROBABILITY: f64 = 0.5;

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::validation(format!(
                        concat!("unknown ", stringify!($name), " {:?}; expected one of {}"),
                        other,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

named_enum!(
    /// Crossover operator.
    CrossoverKind {
        Ac => "AC",
        Src => "SRC",
        Drc => "DRC",
        Idrc => "IDRC",
    }
);

named_enum!(
    MutationKind {
        MutC => "MutC",
        MutC2 => "MutC2",
    }
);

named_enum!(
    /// Repair applied to offspring still infeasible after mutation.
    RepairKind {
        Rrm => "RRM",
        Brm => "BRM",
    }
);

named_enum!(
    InitKind {
        SpI => "SP-I",
        SqI => "SQ-I",
        TelI => "TEL-I",
        HybI => "HYB-I",
        HalI => "HAL-I",
    }
);

/// Operator selection and variation probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub crossover: CrossoverKind,
    pub mutation: MutationKind,
    pub repair: RepairKind,
    pub init: InitKind,
    pub p_cross: f64,
    pub p_mut: f64,
    /// Let fixed urban cells connect DRC/IDRC clusters.
    #[serde(default)]
    pub drc_bridge_fixed_urban: bool,
    /// Largest RBM block side; `None` means ceil(min(R, C) / 4).
    #[serde(default)]
    pub max_block: Option<usize>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            crossover: CrossoverKind::Ac,
            mutation: MutationKind::MutC,
            repair: RepairKind::Rrm,
            init: InitKind::SpI,
            p_cross: 0.5,
            p_mut: 0.5,
            drc_bridge_fixed_urban: false,
            max_block: None,
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_cross", self.p_cross), ("p_mut", self.p_mut)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.max_block == Some(0) {
            return Err(Error::validation("max_block must be >= 1"));
        }
        Ok(())
    }
}

/// Counts of operator fallbacks and no-ops, keyed by event name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog(BTreeMap<String, u64>);

impl EventLog {
    pub fn record(&mut self, event: &str) {
        log::trace!("operator event: {event}");
        *self.0.entry(event.to_owned()).or_default() += 1;
    }

    pub fn count(&self, event: &str) -> u64 {
        self.0.get(event).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Operator kit bound to one instance and one random stream.
pub struct Variation<'a> {
    inst: &'a Instance,
    rng: RandomStream,
    events: EventLog,
}

impl<'a> Variation<'a> {
    pub fn new(inst: &'a Instance, seed: u64) -> Self {
        Self::with_stream(inst, RandomStream::new(seed))
    }

    pub fn with_stream(inst: &'a Instance, rng: RandomStream) -> Self {
        Self {
            inst,
            rng,
            events: EventLog::default(),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    pub fn rng(&mut self) -> &mut RandomStream {
        &mut self.rng
    }

    pub fn events(&self) -> &EventLog {
        &self.events
    }

    pub fn into_events(self) -> EventLog {
        self.events
    }

    fn check_len(&self, g: &Genotype) -> Result<()> {
        if g.len() != self.inst.genotype_len() {
            return Err(Error::contract(format!(
                "genotype has length {}, instance expects {}",
                g.len(),
                self.inst.genotype_len()
            )));
        }
        Ok(())
    }

    /// Post-crossover pipeline: mutation with probability `p_mut`, then the
    /// configured repair if the result is still infeasible. RRM can only
    /// remove conversions, so a deficiency under RRM is fixed by BRM.
    pub fn finish_offspring(&mut self, g: Genotype, cfg: &OperatorConfig) -> Result<Genotype> {
        let g = if self.rng.chance(cfg.p_mut) {
            self.mutate_combined(&g, cfg.mutation, cfg)?
        } else {
            g
        };
        let u = g.unitation();
        let t = self.inst.budget();
        if u == t {
            return Ok(g);
        }
        match cfg.repair {
            RepairKind::Rrm if u > t => self.repair_rrm(&g),
            RepairKind::Rrm => {
                self.events.record("rrm_deficiency_repaired_by_brm");
                self.repair_brm(&g)
            }
            RepairKind::Brm => self.repair_brm(&g),
        }
    }

    /// One reproduction step: crossover with probability `p_cross` (parents
    /// copied otherwise), then [`Self::finish_offspring`] on both children.
    pub fn breed(
        &mut self,
        a: &Genotype,
        b: &Genotype,
        cfg: &OperatorConfig,
    ) -> Result<(Genotype, Genotype)> {
        let (x, y) = if self.rng.chance(cfg.p_cross) {
            self.crossover(a, b, cfg)?
        } else {
            (a.clone(), b.clone())
        };
        Ok((
            self.finish_offspring(x, cfg)?,
            self.finish_offspring(y, cfg)?,
        ))
    }

    /// Single-child variant of [`Self::breed`]: the first crossover child
    /// (or a copy of `a`) passed through [`Self::finish_offspring`].
    pub fn offspring(
        &mut self,
        a: &Genotype,
        b: &Genotype,
        cfg: &OperatorConfig,
    ) -> Result<Genotype> {
        let x = if self.rng.chance(cfg.p_cross) {
            self.crossover(a, b, cfg)?.0
        } else {
            a.clone()
        };
        self.finish_offspring(x, cfg)
    }
}
