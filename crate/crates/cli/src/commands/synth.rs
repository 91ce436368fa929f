use pkde_core::{GeometryKind, SectionLayout};
use pkde_synth::{write_synthetic_dataset, BuildPlan, SynthConfig};

use crate::args::SynthArgs;
use crate::error::CliError;
use crate::metadata::RunClock;
use crate::{options_value, paths, RunConfig};

pub const DEFAULT_LAYERS: u32 = 32;
pub const DEFAULT_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub triplets: usize,
    /// `(part, E_v)` in J/m³.
    pub energy_densities: Vec<(u32, f64)>,
    /// Section ranges used when the layer count does not scale exactly.
    pub inexact_sections: Option<String>,
}

pub fn run(rc: &RunConfig, a: &SynthArgs) -> Result<SynthSummary, CliError> {
    let clock = RunClock::start();
    let seed = rc.require_seed("synth")?;
    let out = rc.require_out("synth")?;
    let plan = match &a.plan {
        Some(p) => {
            paths::require_file(p, "plan file")?;
            BuildPlan::load(p)?
        }
        None => BuildPlan::reference(),
    };
    let layers = a.layers.unwrap_or(DEFAULT_LAYERS);
    let size = a.size.unwrap_or(DEFAULT_SIZE);
    let mut cfg = SynthConfig::new(layers, size, size, seed);
    if let Some(r) = a.pore_rate {
        cfg.pores.base_rate = r;
    }
    if let Some(f) = a.signature {
        if !(f.is_finite() && f >= 0.0) {
            return Err(CliError::Usage(format!("signature factor must be finite and non-negative, got {f}")));
        }
        cfg.render.hr_signature *= f;
        cfg.render.ot_signature *= f;
    }
    cfg.validate()?;

    let layout = SectionLayout::new(layers)?;
    let inexact_sections = (!layout.is_exact()).then(|| {
        layout
            .ranges()
            .iter()
            .map(|(s, lo, hi)| format!("{s} {lo}-{hi}"))
            .collect::<Vec<_>>()
            .join(", ")
    });
    if let Some(r) = &inexact_sections {
        log::warn!("{layers} layers do not scale the section boundaries exactly; using {r}");
    }

    paths::create_dir(&out)?;
    let m = write_synthetic_dataset(&plan, &cfg, &out)?;
    println!("T = {} triplets ({} parts x {} layers)", m.triplet_count, m.parts, m.layers_per_part);
    for p in &m.part_info {
        let geometry = match p.geometry {
            GeometryKind::Cube => "cube",
            GeometryKind::Complex => "complex",
        };
        println!("part {:>2} {geometry:<7} E_v = {:.2}e9 J/m^3", p.part, p.energy_density / 1e9);
    }
    clock.write(&out, "synth", Some(seed), rc.threads, &options_value(a))?;
    Ok(SynthSummary {
        triplets: m.triplet_count,
        energy_densities: m.part_info.iter().map(|p| (p.part, p.energy_density)).collect(),
        inexact_sections,
    })
}
