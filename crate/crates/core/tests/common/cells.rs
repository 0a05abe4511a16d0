//! Cell gluing scenarios shared by the model-structure tests and the
//! acceptance run.

use coherent::builtin;
use coherent::modelstruct::{
    builtin_j, enumerate_attachments, factorize, pushout_cell, FactorizationResult, GeneratorTag, ProbeStatus,
};
use coherent::prover::ProverBudget;
use coherent::semantics::{enumerate_models, isomorphic, models_equivalent, restrict_along, SearchBudget, TheoryMorphism};
use coherent::syntax::Theory;

pub fn budget() -> ProverBudget {
    ProverBudget::default()
}

#[derive(Debug, Clone)]
pub struct CellCheck {
    pub generator: GeneratorTag,
    pub attachment: String,
    pub ess_surj: bool,
    pub fully_faithful: bool,
}

impl CellCheck {
    pub fn passed(&self) -> bool {
        self.ess_surj && self.fully_faithful
    }
}

/// Glue every attachment of each generator into its home theory (EqRel for
/// the quotient cell, AB for the cover) and compare models of the two
/// sides along the pushout inclusion.
pub fn cell_invariance(depth: usize, per_generator: usize, k: usize, k_prime: usize) -> Vec<CellCheck> {
    let (q, c) = builtin_j();
    let mut out = Vec::new();
    for (t, g) in [(builtin::eqrel(), q), (builtin::ab(), c)] {
        let found = enumerate_attachments(&t, &g, depth, budget()).unwrap();
        for a in found.attachments.iter().take(per_generator) {
            let p = pushout_cell(&t, a).unwrap();
            let r = models_equivalent(&p.inclusion, k, k_prime, SearchBudget::default()).unwrap();
            out.push(CellCheck {
                generator: g.tag,
                attachment: format!("{:?}", a.describe()),
                ess_surj: r.ess_surj,
                fully_faithful: r.fully_faithful,
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct FactorCheck {
    pub morphism: String,
    pub target_models: usize,
    pub disagreements: usize,
    pub probes: usize,
    pub failed_probes: usize,
    pub glued: usize,
}

/// `restrict_along(F, N) ≅ restrict_along(F′, restrict_along(G, N))` on
/// target models up to size `k`, plus the probe tally.
pub fn composite_law(f: &TheoryMorphism, r: &FactorizationResult, k: usize) -> FactorCheck {
    let ns = enumerate_models(&f.target, k, SearchBudget::default()).unwrap();
    let disagreements = ns
        .iter()
        .filter(|n| {
            let direct = restrict_along(f, n).unwrap();
            let mid = restrict_along(&r.right, n).unwrap();
            let via = restrict_along(&r.left, &mid).unwrap();
            isomorphic(&f.source.signature, &direct, &via).is_none()
        })
        .count();
    FactorCheck {
        morphism: f.name.clone(),
        target_models: ns.len(),
        disagreements,
        probes: r.probes.len(),
        failed_probes: r.probes.iter().filter(|p| p.status != ProbeStatus::Pass).count(),
        glued: r.log.len(),
    }
}

pub fn factor_check(f: &TheoryMorphism, depth: usize, k: usize) -> FactorCheck {
    let r = factorize(f, 1, depth, budget()).unwrap();
    composite_law(f, &r, k)
}

/// `S₁ = EqRel ⊔ (⊤, R)` and `S₂ = S₁ ⊔ (⊤, R)` with the inclusion
/// `S₁ → S₂`.
pub fn curated_pair() -> (Theory, Theory, TheoryMorphism) {
    let (q, _) = builtin_j();
    let eq = builtin::eqrel();
    let found = enumerate_attachments(&eq, &q, 1, budget()).unwrap();
    let cell = found
        .attachments
        .into_iter()
        .find(|a| {
            let d = a.describe();
            d["A"].ends_with(". true") && d["R"].contains("R(")
        })
        .expect("the (true, R) cell");
    let s1 = pushout_cell(&eq, &cell).unwrap().theory;
    let s2 = pushout_cell(&s1, &cell.retarget(&s1)).unwrap();
    (s1, s2.theory, s2.inclusion)
}
