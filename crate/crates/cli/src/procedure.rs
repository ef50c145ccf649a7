//! Resolution of `--procedure` identifiers into schedules.

use fdr_control::estimators::{clamp_estimate, storey_estimate};
use fdr_control::schedules::{
    adaptive_schedule, bh_schedule, bonferroni_schedule, by_schedule,
    early_stop_corrected_schedule, plugin_schedule, sparsity_schedule, truncated_bh_schedule,
    CriticalSchedule, GeneratorFamily, GeneratorSpec,
};
use fdr_control::PValueSet;

use crate::{CliError, ProcedureArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcedureId {
    Bh,
    By,
    Bonferroni,
    BhK,
    EsK,
    SpK,
    W2,
    W3,
    W4,
    AdaptiveBh,
    AdaptiveW2,
    AdaptiveW3,
    AdaptiveW4,
}

impl ProcedureId {
    pub fn parse(id: &str) -> Result<Self, CliError> {
        Ok(match id {
            "bh" => Self::Bh,
            "by" => Self::By,
            "bonferroni" => Self::Bonferroni,
            "bh-k" => Self::BhK,
            "es-k" => Self::EsK,
            "sp-k" => Self::SpK,
            "w2" => Self::W2,
            "w3" => Self::W3,
            "w4" => Self::W4,
            "adaptive-bh" => Self::AdaptiveBh,
            "adaptive-w2" => Self::AdaptiveW2,
            "adaptive-w3" => Self::AdaptiveW3,
            "adaptive-w4" => Self::AdaptiveW4,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown procedure `{other}` (expected bh, by, bonferroni, bh-k, es-k, sp-k, \
                     w2, w3, w4, adaptive-bh, adaptive-w2, adaptive-w3 or adaptive-w4)"
                )))
            }
        })
    }

    pub fn family(self) -> Option<GeneratorFamily> {
        match self {
            Self::W2 | Self::AdaptiveW2 => Some(GeneratorFamily::Aorc),
            Self::W3 | Self::AdaptiveW3 => Some(GeneratorFamily::BlanchardRoquain),
            Self::W4 | Self::AdaptiveW4 => Some(GeneratorFamily::TemperedAorc),
            Self::AdaptiveBh => Some(GeneratorFamily::Linear),
            _ => None,
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(
            self,
            Self::AdaptiveBh | Self::AdaptiveW2 | Self::AdaptiveW3 | Self::AdaptiveW4
        )
    }
}

/// Parameters resolved from the command line, with the documented defaults
/// filled in.
#[derive(Debug, Clone)]
pub struct ResolvedProcedure {
    pub id: ProcedureId,
    pub alpha: f64,
    pub lambda: f64,
    pub k: Option<usize>,
    pub kappa: Option<usize>,
    pub c: f64,
    pub delta: f64,
    pub unclamped: bool,
    /// Warnings to surface on stderr (defaulted clamp fractions, generator
    /// feasibility conditions).
    pub warnings: Vec<String>,
}

pub fn resolve(args: &ProcedureArgs) -> Result<ResolvedProcedure, CliError> {
    let id = ProcedureId::parse(&args.procedure)?;
    let mut warnings = Vec::new();

    let lambda = args.lambda.unwrap_or(match id {
        ProcedureId::Bh
        | ProcedureId::By
        | ProcedureId::Bonferroni
        | ProcedureId::BhK
        | ProcedureId::EsK
        | ProcedureId::SpK
        | ProcedureId::W2 => 1.0,
        _ => 0.5,
    });
    let c = match args.c {
        Some(c) => c,
        None => {
            if id.is_adaptive() && !args.unclamped {
                warnings.push(
                    "no --C supplied; defaulting to C = 0.5 (exploratory choice, set it \
                     explicitly for dependence-valid adaptive bounds)"
                        .into(),
                );
            }
            0.5
        }
    };
    let delta = match args.delta {
        Some(d) => d,
        None => {
            if id.is_adaptive() && !args.unclamped {
                warnings.push("no --delta supplied; defaulting to delta = 1".into());
            }
            1.0
        }
    };

    match id {
        ProcedureId::BhK | ProcedureId::SpK if args.k.is_none() => {
            return Err(CliError::Validation(format!(
                "procedure `{}` needs --k",
                args.procedure
            )));
        }
        ProcedureId::EsK if args.kappa.is_none() => {
            return Err(CliError::Validation(
                "procedure `es-k` needs --kappa".into(),
            ));
        }
        _ => {}
    }

    Ok(ResolvedProcedure {
        id,
        alpha: args.alpha,
        lambda,
        k: args.k,
        kappa: args.kappa,
        c,
        delta,
        unclamped: args.unclamped,
        warnings,
    })
}

impl ResolvedProcedure {
    /// Human-readable parameter list for summaries.
    pub fn describe(&self) -> String {
        let mut parts = vec![format!("alpha={}", self.alpha)];
        parts.push(format!("lambda={}", self.lambda));
        if let Some(k) = self.k {
            parts.push(format!("k={k}"));
        }
        if let Some(kappa) = self.kappa {
            parts.push(format!("kappa={kappa}"));
        }
        if self.id.is_adaptive() {
            if self.unclamped {
                parts.push("unclamped".into());
            } else {
                parts.push(format!("C={} delta={}", self.c, self.delta));
            }
        }
        parts.join(" ")
    }

    pub fn generator_spec(&self, m: usize) -> Result<GeneratorSpec, CliError> {
        let family = self
            .id
            .family()
            .ok_or_else(|| CliError::Validation("procedure has no generator family".into()))?;
        let spec = GeneratorSpec::new(family, self.alpha, self.lambda, m)?;
        Ok(spec)
    }

    /// Build the critical schedule for this procedure over the data set.
    pub fn schedule(&self, p: &PValueSet) -> Result<CriticalSchedule, CliError> {
        let m = p.m();
        let alpha = self.alpha;
        let schedule = match self.id {
            ProcedureId::Bh => bh_schedule(m, alpha)?,
            ProcedureId::By => by_schedule(m, alpha)?,
            ProcedureId::Bonferroni => bonferroni_schedule(m, alpha)?,
            ProcedureId::BhK => truncated_bh_schedule(m, self.k.unwrap(), alpha)?,
            ProcedureId::SpK => sparsity_schedule(m, self.k.unwrap(), alpha)?,
            ProcedureId::EsK => {
                let kappa = self.kappa.unwrap();
                early_stop_corrected_schedule(p, kappa, self.k.unwrap_or(kappa), alpha)?
            }
            ProcedureId::W2 | ProcedureId::W3 | ProcedureId::W4 => {
                let spec = self.generator_spec(m)?;
                fdr_control::schedules::deterministic_schedule(&spec, m, self.k.unwrap_or(m))?
            }
            ProcedureId::AdaptiveBh
            | ProcedureId::AdaptiveW2
            | ProcedureId::AdaptiveW3
            | ProcedureId::AdaptiveW4 => {
                let spec = self.generator_spec(m)?;
                let raw = storey_estimate(p, self.lambda)?;
                let k = self.k.unwrap_or(m);
                if self.unclamped {
                    plugin_schedule(&spec, m, k, raw)?
                } else {
                    let m0_hat = clamp_estimate(raw, m, self.c, self.delta)?;
                    adaptive_schedule(&spec, m, k, m0_hat, self.c, self.delta)?
                }
            }
        };
        Ok(schedule)
    }
}
