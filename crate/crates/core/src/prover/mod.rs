//! Semi-decision of `T ⊢ φ ⇒ ψ` by a fair chase with disjunctive branching,
//! interleaved with bounded countermodel search.

mod chase;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::compile::SymbolIndex;
use crate::semantics::search::{ModelSearch, SearchBudget};
use crate::semantics::{holds_sequent, is_model, FiniteStructure};
use crate::syntax::{fresh_name, validate_sequent, Context, Formula, FormulaInContext, LogicError, Sequent, Term, Theory};
use chase::{compile_dnf, Cq, State};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProverError {
    #[error("contexts overlap in variable `{0}`")]
    ContextOverlap(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("replay failed at step {step}: {reason}")]
    Replay { step: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverBudget {
    pub max_steps: usize,
    pub max_branches: usize,
    pub max_model_size: usize,
}

impl Default for ProverBudget {
    fn default() -> Self {
        ProverBudget { max_steps: 10_000, max_branches: 512, max_model_size: 3 }
    }
}

/// One inference. Axiom steps fire `axiom` with its context bound by
/// `assignment`, choosing head disjunct `disjunct`; totality steps
/// (axiom `total:f`) define `f` at the elements in `assignment`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub branch: Vec<usize>,
    pub axiom: String,
    pub assignment: BTreeMap<String, usize>,
    pub disjunct: usize,
    pub new_elements: Vec<usize>,
    pub merges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum Closure {
    Goal,
    Bottom { axiom: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub branch: Vec<usize>,
    pub closed: Closure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proof {
    pub steps: Vec<TraceStep>,
    pub leaves: Vec<Leaf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ProofOutcome {
    Proved { proof: Proof },
    Refuted { countermodel: FiniteStructure },
    Unknown { steps: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    Proved,
    Refuted,
    Unknown,
}

impl ProofOutcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            ProofOutcome::Proved { .. } => Verdict::Proved,
            ProofOutcome::Refuted { .. } => Verdict::Refuted,
            ProofOutcome::Unknown { .. } => Verdict::Unknown,
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, ProofOutcome::Proved { .. })
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, ProofOutcome::Refuted { .. })
    }

    pub fn steps(&self) -> usize {
        match self {
            ProofOutcome::Proved { proof } => proof.steps.len(),
            ProofOutcome::Refuted { .. } => 0,
            ProofOutcome::Unknown { steps, .. } => *steps,
        }
    }
}

struct Rule {
    axiom: String,
    ctx_names: Vec<String>,
    body: Cq,
    heads: Vec<Cq>,
}

/// A theory compiled for chasing.
pub struct Prover<'a> {
    theory: &'a Theory,
    idx: SymbolIndex,
    rules: Vec<Rule>,
}

struct Goal {
    lhs: Vec<Cq>,
    rhs: Vec<Cq>,
}

struct Branch {
    path: Vec<usize>,
    state: State,
    ctx: Vec<usize>,
    /// Rounds for which a disjunctive trigger has been waiting.
    waiting: usize,
}

enum Status {
    Running,
    Proved,
    Countermodel(FiniteStructure),
    Exhausted(String),
}

struct Run<'p, 'a> {
    prover: &'p Prover<'a>,
    goal: Goal,
    sequent: &'p Sequent,
    stack: Vec<Branch>,
    steps: Vec<TraceStep>,
    leaves: Vec<Leaf>,
    branches: usize,
    budget: ProverBudget,
}

const SLICE: usize = 256;
const PATIENCE: usize = 3;
const COUNTERMODEL_NODES: u64 = 2_000_000;

impl<'a> Prover<'a> {
    pub fn new(theory: &'a Theory) -> Self {
        let sig = &theory.signature;
        let idx = SymbolIndex::new(sig);
        let mut rules = Vec::new();
        for ax in &theory.axioms {
            let s = &ax.sequent;
            let heads = compile_dnf(sig, &idx, &s.context, &s.rhs);
            for body in compile_dnf(sig, &idx, &s.context, &s.lhs) {
                rules.push(Rule { axiom: ax.name.clone(), ctx_names: s.context.names(), body, heads: heads.clone() });
            }
        }
        Prover { theory, idx, rules }
    }

    pub fn theory(&self) -> &Theory {
        self.theory
    }

    fn goal(&self, s: &Sequent) -> Goal {
        let sig = &self.theory.signature;
        Goal {
            lhs: compile_dnf(sig, &self.idx, &s.context, &s.lhs),
            rhs: compile_dnf(sig, &self.idx, &s.context, &s.rhs),
        }
    }

    fn initial(&self, goal: &Goal, s: &Sequent, disjunct: usize) -> Branch {
        let mut state = State::new();
        let ctx: Vec<usize> = s.context.vars.iter().map(|v| state.add_element(self.idx.sorts[&v.sort])).collect();
        state.apply_cq(&goal.lhs[disjunct], &ctx, &self.idx.func_result);
        Branch { path: vec![disjunct], state, ctx, waiting: 0 }
    }

    /// Active triggers `(rule, context tuple)`: body matches whose head is
    /// not yet satisfied, deduplicated, in rule then match order.
    fn triggers(&self, state: &State) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (ri, rule) in self.rules.iter().enumerate() {
            let nctx = rule.body.nctx;
            let mut seen = BTreeSet::new();
            let pre = vec![None; rule.body.sorts.len()];
            state.matches(&rule.body, &pre, &mut |env| {
                let tuple = env[..nctx].to_vec();
                if seen.insert(tuple.clone()) && !state.satisfies(&rule.heads, &tuple) {
                    out.push((ri, tuple));
                }
                true
            });
        }
        out
    }

    fn assignment(&self, rule: &Rule, tuple: &[usize]) -> BTreeMap<String, usize> {
        rule.ctx_names.iter().cloned().zip(tuple.iter().copied()).collect()
    }

    /// Decide `T ⊢ s` within the budget.
    pub fn prove(&self, s: &Sequent, budget: ProverBudget) -> Result<ProofOutcome, ProverError> {
        validate_sequent(&self.theory.signature, s)?;
        let goal = self.goal(s);
        let mut run = Run {
            prover: self,
            stack: (0..goal.lhs.len()).rev().map(|d| self.initial(&goal, s, d)).collect(),
            goal,
            sequent: s,
            steps: Vec::new(),
            leaves: Vec::new(),
            branches: 0,
            budget,
        };
        run.branches = run.stack.len();
        let mut next_size = 0;
        let mut size_budget_ok = true;
        let mut limit = 0;
        loop {
            limit = (limit + SLICE).min(budget.max_steps);
            match run.advance(limit) {
                Status::Proved => {
                    return Ok(ProofOutcome::Proved { proof: Proof { steps: run.steps, leaves: run.leaves } })
                }
                Status::Countermodel(m) => return Ok(ProofOutcome::Refuted { countermodel: m }),
                Status::Running => {
                    if next_size <= budget.max_model_size && size_budget_ok {
                        match self.countermodel(s, next_size) {
                            Ok(Some(m)) => return Ok(ProofOutcome::Refuted { countermodel: m }),
                            Ok(None) => next_size += 1,
                            Err(()) => size_budget_ok = false,
                        }
                    }
                }
                Status::Exhausted(reason) => {
                    while next_size <= budget.max_model_size && size_budget_ok {
                        match self.countermodel(s, next_size) {
                            Ok(Some(m)) => return Ok(ProofOutcome::Refuted { countermodel: m }),
                            Ok(None) => next_size += 1,
                            Err(()) => size_budget_ok = false,
                        }
                    }
                    return Ok(ProofOutcome::Unknown { steps: run.steps.len(), reason });
                }
            }
        }
    }

    /// A model of the theory with every carrier of size ≤ `k` violating `s`.
    fn countermodel(&self, s: &Sequent, k: usize) -> Result<Option<FiniteStructure>, ()> {
        let sig = &self.theory.signature;
        let vectors = (k as u64 + 1).checked_pow(sig.sorts.len() as u32).unwrap_or(u64::MAX);
        if vectors > COUNTERMODEL_NODES {
            return Err(());
        }
        let mut found = None;
        let mut search = ModelSearch::new(self.theory, k).budget(SearchBudget { max_nodes: COUNTERMODEL_NODES });
        let r = search.for_each(&mut |m| {
            if holds_sequent(&m, sig, s).unwrap_or(true) {
                ControlFlow::Continue(())
            } else {
                found = Some(m);
                ControlFlow::Break(())
            }
        });
        match r {
            Ok(_) => Ok(found),
            Err(_) => Err(()),
        }
    }

    /// Check that a recorded proof replays: every step's trigger is present,
    /// its application reproduces the recorded elements and merges, and
    /// every leaf closes. Returns the number of leaves.
    pub fn replay(&self, s: &Sequent, proof: &Proof) -> Result<usize, ProverError> {
        validate_sequent(&self.theory.signature, s)?;
        let goal = self.goal(s);
        let fail = |step: usize, reason: &str| ProverError::Replay { step, reason: reason.to_string() };
        let mut states: BTreeMap<Vec<usize>, Branch> = BTreeMap::new();
        let mut splits: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for d in 0..goal.lhs.len() {
            states.insert(vec![d], self.initial(&goal, s, d));
        }
        for (i, step) in proof.steps.iter().enumerate() {
            if !states.contains_key(&step.branch) {
                let parent = step.branch[..step.branch.len().saturating_sub(1)].to_vec();
                let b = states.get(&parent).ok_or_else(|| fail(i, "unknown branch"))?;
                let child = Branch { path: step.branch.clone(), state: b.state.clone(), ctx: b.ctx.clone(), waiting: 0 };
                states.insert(step.branch.clone(), child);
            }
            let b = states.get_mut(&step.branch).unwrap();
            let (created, merges) = if let Some(fname) = step.axiom.strip_prefix("total:") {
                let f = *self.idx.funcs.get(fname).ok_or_else(|| fail(i, "unknown function"))?;
                let args: Vec<usize> = (0..self.idx.func_args[f].len())
                    .map(|j| step.assignment.get(&format!("#{j}")).copied().ok_or_else(|| fail(i, "missing argument")))
                    .collect::<Result<_, _>>()?;
                if args.iter().any(|&a| a >= b.state.sort.len()) {
                    return Err(fail(i, "element out of range"));
                }
                let mut created = Vec::new();
                b.state.apply(f, &args, self.idx.func_result[f], &mut created);
                (created, Vec::new())
            } else {
                let rule = self
                    .rules
                    .iter()
                    .find(|r| {
                        r.axiom == step.axiom && {
                            let tuple: Option<Vec<usize>> =
                                r.ctx_names.iter().map(|n| step.assignment.get(n).copied()).collect();
                            tuple.is_some_and(|t| {
                                t.iter().all(|&x| x < b.state.sort.len()) && {
                                    let mut pre: Vec<Option<usize>> = t.iter().map(|&x| Some(x)).collect();
                                    pre.resize(r.body.sorts.len(), None);
                                    !b.state.matches(&r.body, &pre, &mut |_| false)
                                }
                            })
                        }
                    })
                    .ok_or_else(|| fail(i, "trigger does not match"))?;
                let tuple: Vec<usize> = rule.ctx_names.iter().map(|n| step.assignment[n]).collect();
                let head = rule.heads.get(step.disjunct).ok_or_else(|| fail(i, "no such disjunct"))?;
                if rule.heads.len() > 1 {
                    splits.insert(step.branch[..step.branch.len() - 1].to_vec(), rule.heads.len());
                }
                b.state.apply_cq(head, &tuple, &self.idx.func_result)
            };
            if created != step.new_elements || merges != step.merges {
                return Err(fail(i, "application differs from the record"));
            }
        }
        let leaves: BTreeSet<Vec<usize>> = proof.leaves.iter().map(|l| l.branch.clone()).collect();
        for (i, leaf) in proof.leaves.iter().enumerate() {
            let b = states.get(&leaf.branch).ok_or_else(|| fail(proof.steps.len() + i, "unknown leaf"))?;
            let ok = match &leaf.closed {
                Closure::Goal => b.state.satisfies(&goal.rhs, &b.ctx),
                Closure::Bottom { axiom } => self.rules.iter().any(|r| {
                    &r.axiom == axiom && r.heads.is_empty() && {
                        let pre = vec![None; r.body.sorts.len()];
                        !b.state.matches(&r.body, &pre, &mut |_| false)
                    }
                }),
            };
            if !ok {
                return Err(fail(proof.steps.len() + i, "leaf does not close"));
            }
        }
        // Every branch of the tree ends in a leaf.
        fn covered(p: &[usize], leaves: &BTreeSet<Vec<usize>>, splits: &BTreeMap<Vec<usize>, usize>) -> bool {
            if leaves.contains(p) {
                return true;
            }
            match splits.get(p) {
                Some(&k) => (0..k).all(|j| {
                    let mut c = p.to_vec();
                    c.push(j);
                    covered(&c, leaves, splits)
                }),
                None => false,
            }
        }
        for d in 0..goal.lhs.len() {
            if !covered(&[d], &leaves, &splits) {
                return Err(fail(proof.steps.len(), "open branch"));
            }
        }
        Ok(proof.leaves.len())
    }
}

impl Run<'_, '_> {
    fn exhausted(&self) -> bool {
        self.steps.len() >= self.budget.max_steps
    }

    fn advance(&mut self, limit: usize) -> Status {
        let p = self.prover;
        while let Some(mut b) = self.stack.pop() {
            loop {
                if b.state.satisfies(&self.goal.rhs, &b.ctx) {
                    self.leaves.push(Leaf { branch: b.path.clone(), closed: Closure::Goal });
                    break;
                }
                if self.steps.len() >= limit {
                    self.stack.push(b);
                    return if self.exhausted() {
                        Status::Exhausted(format!("step budget {} spent", self.budget.max_steps))
                    } else {
                        Status::Running
                    };
                }
                let triggers = p.triggers(&b.state);
                if let Some((ri, _)) = triggers.iter().find(|(ri, _)| p.rules[*ri].heads.is_empty()) {
                    self.leaves.push(Leaf { branch: b.path.clone(), closed: Closure::Bottom { axiom: p.rules[*ri].axiom.clone() } });
                    break;
                }
                let (single, multi): (Vec<_>, Vec<_>) =
                    triggers.into_iter().partition(|(ri, _)| p.rules[*ri].heads.len() == 1);
                if !multi.is_empty() && (single.is_empty() || b.waiting >= PATIENCE) {
                    let (ri, tuple) = &multi[0];
                    let rule = &p.rules[*ri];
                    if self.branches + rule.heads.len() - 1 > self.budget.max_branches {
                        self.stack.push(b);
                        return Status::Exhausted(format!("branch budget {} spent", self.budget.max_branches));
                    }
                    self.branches += rule.heads.len() - 1;
                    let mut children = Vec::new();
                    for (j, head) in rule.heads.iter().enumerate() {
                        let mut state = b.state.clone();
                        let (new_elements, merges) = state.apply_cq(head, tuple, &p.idx.func_result);
                        let mut path = b.path.clone();
                        path.push(j);
                        self.steps.push(TraceStep {
                            branch: path.clone(),
                            axiom: rule.axiom.clone(),
                            assignment: p.assignment(rule, tuple),
                            disjunct: j,
                            new_elements,
                            merges,
                        });
                        children.push(Branch { path, state, ctx: b.ctx.clone(), waiting: 0 });
                    }
                    // Children are explored in disjunct order, each to completion.
                    let mut children = children.into_iter();
                    let first = children.next().unwrap();
                    for c in children.rev() {
                        self.stack.push(c);
                    }
                    b = first;
                    continue;
                }
                if !multi.is_empty() {
                    b.waiting += 1;
                }
                if !single.is_empty() {
                    for (ri, tuple) in single {
                        let rule = &p.rules[ri];
                        let tuple = b.state.canon(&tuple);
                        if b.state.satisfies(&rule.heads, &tuple) {
                            continue;
                        }
                        let (new_elements, merges) = b.state.apply_cq(&rule.heads[0], &tuple, &p.idx.func_result);
                        self.steps.push(TraceStep {
                            branch: b.path.clone(),
                            axiom: rule.axiom.clone(),
                            assignment: p.assignment(rule, &tuple),
                            disjunct: 0,
                            new_elements,
                            merges,
                        });
                    }
                    continue;
                }
                let missing = b.state.undefined_entries(&p.idx);
                if missing.is_empty() {
                    let m = b.state.to_structure(&p.theory.signature, &p.idx);
                    if is_model(&m, p.theory) && !holds_sequent(&m, &p.theory.signature, self.sequent).unwrap_or(true) {
                        return Status::Countermodel(m);
                    }
                    self.stack.push(b);
                    return Status::Exhausted("saturated branch did not yield a verified countermodel".into());
                }
                for (f, args) in missing {
                    let args = b.state.canon(&args);
                    if b.state.funcs.contains_key(&(f, args.clone())) {
                        continue;
                    }
                    let mut created = Vec::new();
                    b.state.apply(f, &args, p.idx.func_result[f], &mut created);
                    self.steps.push(TraceStep {
                        branch: b.path.clone(),
                        axiom: format!("total:{}", p.theory.signature.functions[f].name),
                        assignment: args.iter().enumerate().map(|(j, a)| (format!("#{j}"), *a)).collect(),
                        disjunct: 0,
                        new_elements: created,
                        merges: Vec::new(),
                    });
                }
            }
        }
        Status::Proved
    }
}

/// Decide `T ⊢ s` within the budget.
pub fn prove(t: &Theory, s: &Sequent, budget: ProverBudget) -> Result<ProofOutcome, ProverError> {
    Prover::new(t).prove(s, budget)
}

/// Replay a proof of `s` against `t`.
pub fn replay(t: &Theory, s: &Sequent, proof: &Proof) -> Result<usize, ProverError> {
    Prover::new(t).replay(s, proof)
}

/// The three conditions making `θ(x⃗, y⃗)` a functional relation from
/// `[φ(x⃗)]` to `[ψ(y⃗)]`, in the order graph, totality, single-valuedness.
pub fn functionality_sequents(
    theta: &FormulaInContext,
    phi: &FormulaInContext,
    psi: &FormulaInContext,
) -> Result<[Sequent; 3], ProverError> {
    if let Some(v) = phi.context.vars.iter().find(|v| psi.context.contains(&v.name)) {
        return Err(ProverError::ContextOverlap(v.name.clone()));
    }
    let joint = phi.context.concat(&psi.context);
    let theta = theta.rename_context(&joint.names());
    let graph = Sequent::new(joint.clone(), theta.formula.clone(), Formula::and2(phi.formula.clone(), psi.formula.clone()));
    let total = Sequent::new(phi.context.clone(), phi.formula.clone(), Formula::exists_many(&psi.context, theta.formula.clone()));
    let mut avoid: BTreeSet<String> = joint.names().into_iter().collect();
    avoid.extend(theta.formula.all_vars());
    let mut primed = Context::new();
    let mut map = BTreeMap::new();
    for v in &psi.context.vars {
        let n = fresh_name(&v.name, &avoid);
        avoid.insert(n.clone());
        primed.push(&n, &v.sort);
        map.insert(v.name.clone(), Term::var(&n));
    }
    let theta2 = theta.formula.substitute(&map);
    let single = Sequent::new(
        joint.concat(&primed),
        Formula::and2(theta.formula.clone(), theta2),
        Formula::vars_eq(&psi.context.names(), &primed.names()),
    );
    Ok([graph, total, single])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalityCheck {
    pub graph: ProofOutcome,
    pub total: ProofOutcome,
    pub single_valued: ProofOutcome,
}

impl FunctionalityCheck {
    pub fn certified(&self) -> bool {
        self.graph.is_proved() && self.total.is_proved() && self.single_valued.is_proved()
    }

    pub fn outcomes(&self) -> [&ProofOutcome; 3] {
        [&self.graph, &self.total, &self.single_valued]
    }
}

pub fn is_provably_functional(
    t: &Theory,
    theta: &FormulaInContext,
    phi: &FormulaInContext,
    psi: &FormulaInContext,
    budget: ProverBudget,
) -> Result<FunctionalityCheck, ProverError> {
    let [g, tot, sv] = functionality_sequents(theta, phi, psi)?;
    let p = Prover::new(t);
    Ok(FunctionalityCheck { graph: p.prove(&g, budget)?, total: p.prove(&tot, budget)?, single_valued: p.prove(&sv, budget)? })
}
