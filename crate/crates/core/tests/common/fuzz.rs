//! Randomized action sequences with a shadow-model oracle.
//!
//! The shadow model re-derives every precondition from its own bookkeeping
//! (it never queries the contract state), predicts whether each action may
//! mutate state, and the harness asserts that the real dispatch agreed and
//! that denied actions left the contract digests untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use caretrust_core::config::{ChainConfig, Genesis, GenesisAccount};
use caretrust_core::crypto::{keccak256, sign, Address, PrivateKey, Signature};
use caretrust_core::trust::{
    consent_digest, AuthorityAction, Method, MoveKind, TrustKind, TrustState,
};
use caretrust_core::tx::UnsignedTransaction;
use caretrust_core::{Chain, TxStatus};

pub const ACTOR_COUNT: usize = 6;
pub const PATIENT_COUNT: usize = 5;

/// Shared key pool; deriving keys is the expensive part, so it happens once.
fn key_pool() -> &'static (Vec<(PrivateKey, Address)>, Vec<(PrivateKey, Address)>) {
    static POOL: OnceLock<(Vec<(PrivateKey, Address)>, Vec<(PrivateKey, Address)>)> =
        OnceLock::new();
    POOL.get_or_init(|| {
        let mk = |seed: u64| {
            let mut bytes = [0u8; 32];
            bytes[24..].copy_from_slice(&seed.to_be_bytes());
            let key = PrivateKey::from_bytes(bytes).expect("valid scalar");
            let address = key.address();
            (key, address)
        };
        (
            (1..=ACTOR_COUNT as u64).map(mk).collect(),
            (101..=100 + PATIENT_COUNT as u64).map(mk).collect(),
        )
    })
}

pub fn actor(i: usize) -> (PrivateKey, Address) {
    key_pool().0[i]
}

pub fn patient(i: usize) -> (PrivateKey, Address) {
    key_pool().1[i]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsentVariant {
    Valid,
    WrongSigner,
    WrongTreatment,
    Garbage,
}

/// One randomized protocol action; actors and patients are pool indices.
#[derive(Clone, Debug)]
pub enum Action {
    Propose {
        caller: usize,
        action: AuthorityAction,
        target: usize,
    },
    Vote {
        caller: usize,
        proposal: u64,
    },
    Enact {
        caller: usize,
        proposal: u64,
    },
    Register {
        caller: usize,
        kind: TrustKind,
    },
    SetTrust {
        caller: usize,
        kind: TrustKind,
        subject: usize,
        trusted: bool,
    },
    IssueLicense {
        caller: usize,
        holder: usize,
    },
    ProposeMove {
        caller: usize,
        kind: MoveKind,
        holder: usize,
        destination: usize,
    },
    ApproveMove {
        caller: usize,
        kind: MoveKind,
        holder: usize,
    },
    CreateTreatment {
        caller: usize,
        patient: usize,
    },
    ApproveTreatment {
        caller: usize,
        treatment: u64,
        consent: ConsentVariant,
    },
    SubmitEvaluation {
        caller_patient: usize,
        treatment: u64,
        rating: u8,
    },
}

const KINDS: [TrustKind; 3] = [
    TrustKind::TreatmentProvider,
    TrustKind::LicenseIssuer,
    TrustKind::LicenseProvider,
];

pub fn generate_actions(rng: &mut ChaCha8Rng, count: usize, max_treatment: u64) -> Vec<Action> {
    let mut actions = Vec::with_capacity(count);
    for _ in 0..count {
        let caller = rng.gen_range(0..ACTOR_COUNT);
        let action = match rng.gen_range(0..11u32) {
            0 => Action::Propose {
                caller,
                action: if rng.gen_bool(0.6) {
                    AuthorityAction::AddAuthority
                } else {
                    AuthorityAction::RemoveAuthority
                },
                target: rng.gen_range(0..ACTOR_COUNT),
            },
            1 => Action::Vote {
                caller,
                proposal: rng.gen_range(1..=4),
            },
            2 => Action::Enact {
                caller,
                proposal: rng.gen_range(1..=4),
            },
            3 => Action::Register {
                caller,
                kind: KINDS[rng.gen_range(0..3)],
            },
            4 => Action::SetTrust {
                caller,
                kind: KINDS[rng.gen_range(0..3)],
                subject: rng.gen_range(0..ACTOR_COUNT),
                trusted: rng.gen_bool(0.8),
            },
            5 => Action::IssueLicense {
                caller,
                holder: rng.gen_range(0..ACTOR_COUNT),
            },
            6 => Action::ProposeMove {
                caller,
                kind: if rng.gen_bool(0.5) {
                    MoveKind::Issuer
                } else {
                    MoveKind::Provider
                },
                holder: rng.gen_range(0..ACTOR_COUNT),
                destination: rng.gen_range(0..ACTOR_COUNT),
            },
            7 => Action::ApproveMove {
                caller,
                kind: if rng.gen_bool(0.5) {
                    MoveKind::Issuer
                } else {
                    MoveKind::Provider
                },
                holder: rng.gen_range(0..ACTOR_COUNT),
            },
            8 => Action::CreateTreatment {
                caller,
                patient: rng.gen_range(0..PATIENT_COUNT),
            },
            9 => Action::ApproveTreatment {
                caller,
                treatment: rng.gen_range(1..=max_treatment),
                consent: match rng.gen_range(0..6u32) {
                    0 => ConsentVariant::WrongSigner,
                    1 => ConsentVariant::WrongTreatment,
                    2 => ConsentVariant::Garbage,
                    _ => ConsentVariant::Valid,
                },
            },
            _ => Action::SubmitEvaluation {
                caller_patient: rng.gen_range(0..PATIENT_COUNT),
                treatment: rng.gen_range(1..=max_treatment),
                rating: rng.gen_range(0..=11),
            },
        };
        actions.push(action);
    }
    actions
}

// ---------------------------------------------------------------------------
// Shadow model
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct ShadowProposal {
    action: AuthorityAction,
    target: usize,
    votes: BTreeSet<usize>,
    enacted: bool,
}

#[derive(Clone, Debug, Default)]
struct ShadowLicense {
    issuer: usize,
    provider: Option<usize>,
    pending_issuer: Option<(usize, usize)>,   // (destination, proposer)
    pending_provider: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
struct ShadowTreatment {
    provider: usize,
    patient: usize,
    approved: bool,
    approving_license: Option<usize>,
}

/// Independent bookkeeping of what the contracts should allow.
pub struct Shadow {
    members: BTreeSet<usize>,
    proposals: BTreeMap<u64, ShadowProposal>,
    next_proposal: u64,
    registered: BTreeMap<TrustKind, BTreeSet<usize>>,
    endorsements: BTreeSet<(usize, TrustKind, usize)>,
    licenses: BTreeMap<usize, ShadowLicense>,
    treatments: BTreeMap<u64, ShadowTreatment>,
    next_treatment: u64,
    measures: BTreeMap<u64, u8>,
}

impl Shadow {
    pub fn new(bootstrap: usize) -> Shadow {
        Shadow {
            members: BTreeSet::from([bootstrap]),
            proposals: BTreeMap::new(),
            next_proposal: 1,
            registered: BTreeMap::new(),
            endorsements: BTreeSet::new(),
            licenses: BTreeMap::new(),
            treatments: BTreeMap::new(),
            next_treatment: 1,
            measures: BTreeMap::new(),
        }
    }

    fn trusted(&self, kind: TrustKind, subject: usize) -> bool {
        self.endorsements
            .iter()
            .any(|(a, k, s)| *k == kind && *s == subject && self.members.contains(a))
    }

    fn license_trusted(&self, holder: usize) -> bool {
        match self.licenses.get(&holder) {
            Some(license) => {
                self.trusted(TrustKind::LicenseIssuer, license.issuer)
                    && license
                        .provider
                        .map(|p| self.trusted(TrustKind::LicenseProvider, p))
                        .unwrap_or(false)
            }
            None => false,
        }
    }

    fn is_registered(&self, kind: TrustKind, subject: usize) -> bool {
        self.registered
            .get(&kind)
            .map(|s| s.contains(&subject))
            .unwrap_or(false)
    }

    /// Predict admissibility and apply the expected mutation when allowed.
    pub fn predict_and_apply(&mut self, action: &Action) -> bool {
        match action {
            Action::Propose {
                caller,
                action,
                target,
            } => {
                if !self.members.contains(caller) {
                    return false;
                }
                match action {
                    AuthorityAction::AddAuthority if self.members.contains(target) => return false,
                    AuthorityAction::RemoveAuthority if !self.members.contains(target) => {
                        return false
                    }
                    AuthorityAction::RemoveAuthority if self.members.len() == 1 => return false,
                    _ => {}
                }
                if self
                    .proposals
                    .values()
                    .any(|p| !p.enacted && p.action == *action && p.target == *target)
                {
                    return false;
                }
                let id = self.next_proposal;
                self.next_proposal += 1;
                let sole = self.members.len() == 1;
                self.proposals.insert(
                    id,
                    ShadowProposal {
                        action: *action,
                        target: *target,
                        votes: BTreeSet::from([*caller]),
                        enacted: sole,
                    },
                );
                if sole {
                    self.apply_governance(*action, *target);
                }
                true
            }
            Action::Vote { caller, proposal } => {
                if !self.members.contains(caller) {
                    return false;
                }
                match self.proposals.get_mut(proposal) {
                    Some(p) if !p.enacted => {
                        p.votes.insert(*caller);
                        true
                    }
                    _ => false,
                }
            }
            Action::Enact { caller, proposal } => {
                if !self.members.contains(caller) {
                    return false;
                }
                let Some(p) = self.proposals.get(proposal).cloned() else {
                    return false;
                };
                if p.enacted {
                    return false;
                }
                let valid = p.votes.intersection(&self.members).count();
                if 2 * valid <= self.members.len() {
                    return false;
                }
                match p.action {
                    AuthorityAction::AddAuthority if self.members.contains(&p.target) => {
                        return false
                    }
                    AuthorityAction::RemoveAuthority if !self.members.contains(&p.target) => {
                        return false
                    }
                    AuthorityAction::RemoveAuthority if self.members.len() == 1 => return false,
                    _ => {}
                }
                self.apply_governance(p.action, p.target);
                self.proposals.get_mut(proposal).expect("exists").enacted = true;
                true
            }
            Action::Register { caller, kind } => {
                if self.is_registered(*kind, *caller) {
                    return false;
                }
                self.registered.entry(*kind).or_default().insert(*caller);
                true
            }
            Action::SetTrust {
                caller,
                kind,
                subject,
                trusted,
            } => {
                if !self.members.contains(caller) || !self.is_registered(*kind, *subject) {
                    return false;
                }
                if *trusted {
                    self.endorsements.insert((*caller, *kind, *subject));
                } else {
                    self.endorsements.remove(&(*caller, *kind, *subject));
                }
                true
            }
            Action::IssueLicense { caller, holder } => {
                if !self.is_registered(TrustKind::LicenseIssuer, *caller)
                    || self.licenses.contains_key(holder)
                {
                    return false;
                }
                self.licenses.insert(
                    *holder,
                    ShadowLicense {
                        issuer: *caller,
                        ..ShadowLicense::default()
                    },
                );
                true
            }
            Action::ProposeMove {
                caller,
                kind,
                holder,
                destination,
            } => {
                let Some(license) = self.licenses.get(holder) else {
                    return false;
                };
                if *caller != *holder && *caller != license.issuer {
                    return false;
                }
                let role = match kind {
                    MoveKind::Issuer => TrustKind::LicenseIssuer,
                    MoveKind::Provider => TrustKind::LicenseProvider,
                };
                if !self.is_registered(role, *destination) {
                    return false;
                }
                let license = self.licenses.get_mut(holder).expect("checked");
                match kind {
                    MoveKind::Issuer => license.pending_issuer = Some((*destination, *caller)),
                    MoveKind::Provider => license.pending_provider = Some((*destination, *caller)),
                }
                true
            }
            Action::ApproveMove {
                caller,
                kind,
                holder,
            } => {
                let Some(license) = self.licenses.get(holder) else {
                    return false;
                };
                let pending = match kind {
                    MoveKind::Issuer => license.pending_issuer,
                    MoveKind::Provider => license.pending_provider,
                };
                let Some((destination, _)) = pending else {
                    return false;
                };
                if *caller != destination {
                    return false;
                }
                let license = self.licenses.get_mut(holder).expect("checked");
                match kind {
                    MoveKind::Issuer => {
                        license.issuer = destination;
                        license.pending_issuer = None;
                    }
                    MoveKind::Provider => {
                        license.provider = Some(destination);
                        license.pending_provider = None;
                    }
                }
                true
            }
            Action::CreateTreatment { caller, patient } => {
                if !self.is_registered(TrustKind::TreatmentProvider, *caller)
                    || !self.trusted(TrustKind::TreatmentProvider, *caller)
                {
                    return false;
                }
                let id = self.next_treatment;
                self.next_treatment += 1;
                self.treatments.insert(
                    id,
                    ShadowTreatment {
                        provider: *caller,
                        patient: *patient,
                        approved: false,
                        approving_license: None,
                    },
                );
                true
            }
            Action::ApproveTreatment {
                caller,
                treatment,
                consent,
            } => {
                let Some(t) = self.treatments.get(treatment) else {
                    return false;
                };
                if t.approved || !self.license_trusted(*caller) {
                    return false;
                }
                if *consent != ConsentVariant::Valid {
                    return false;
                }
                let t = self.treatments.get_mut(treatment).expect("checked");
                t.approved = true;
                t.approving_license = Some(*caller);
                true
            }
            Action::SubmitEvaluation {
                caller_patient,
                treatment,
                rating,
            } => {
                if !(1..=10).contains(rating) {
                    return false;
                }
                let Some(t) = self.treatments.get(treatment) else {
                    return false;
                };
                if t.patient != *caller_patient || !t.approved {
                    return false;
                }
                if self.measures.contains_key(treatment) {
                    return false;
                }
                self.measures.insert(*treatment, *rating);
                true
            }
        }
    }

    fn apply_governance(&mut self, action: AuthorityAction, target: usize) {
        match action {
            AuthorityAction::AddAuthority => {
                self.members.insert(target);
            }
            AuthorityAction::RemoveAuthority => {
                self.members.remove(&target);
            }
        }
    }

    /// The four security invariants, checked against the real contract state.
    pub fn check_security_invariants(&self, trust: &TrustState) {
        for t in trust.treatments() {
            let shadow = self
                .treatments
                .get(&t.id)
                .unwrap_or_else(|| panic!("treatment {} unknown to the shadow model", t.id));
            // Sec1: created by a provider that was trusted at creation time.
            assert_eq!(actor(shadow.provider).1, t.treatment_provider);
            // Sec2: approvals only with valid patient consent, via a trusted
            // license at approval time.
            assert_eq!(shadow.approved, t.approved, "treatment {}", t.id);
            if t.approved {
                let holder = shadow.approving_license.expect("shadow recorded approver");
                assert_eq!(Some(actor(holder).1), t.approving_license);
            }
            // Sec3/Sec4: evaluations only for approved treatments, one each.
            match (self.measures.get(&t.id), trust.measure(t.id)) {
                (None, None) => {}
                (Some(rating), Some(m)) => {
                    assert!(t.approved, "evaluated treatment {} must be approved", t.id);
                    assert_eq!(*rating, m.rating);
                }
                (shadow, real) => panic!(
                    "measure divergence for treatment {}: shadow {shadow:?}, real {real:?}",
                    t.id
                ),
            }
        }
        // No orphan measures.
        for m in trust.measures() {
            assert!(
                trust.treatment(m.treatment_id).map(|t| t.approved) == Some(true),
                "measure without approved treatment"
            );
        }
    }

    /// Trust-cascade agreement for every (kind, subject) pair.
    pub fn check_cascade(&self, trust: &TrustState) {
        for kind in KINDS {
            for subject in 0..ACTOR_COUNT {
                assert_eq!(
                    self.trusted(kind, subject),
                    trust.query_trust(&actor(subject).1, kind),
                    "cascade divergence: {kind:?} actor {subject}"
                );
            }
        }
    }
}

/// Build the concrete method for an action. `consent_patient` indexes the
/// patient whose key signs Valid/WrongTreatment consents.
fn build_method(action: &Action, consent_patient: usize) -> Method {
    match action {
        Action::Propose {
            action, target, ..
        } => Method::ProposeAuthorityChange {
            action: *action,
            target: actor(*target).1,
        },
        Action::Vote { proposal, .. } => Method::Vote {
            proposal_id: *proposal,
        },
        Action::Enact { proposal, .. } => Method::Enact {
            proposal_id: *proposal,
        },
        Action::Register { kind, .. } => Method::Register { kind: *kind },
        Action::SetTrust {
            kind,
            subject,
            trusted,
            ..
        } => Method::SetTrust {
            kind: *kind,
            subject: actor(*subject).1,
            trusted: *trusted,
        },
        Action::IssueLicense { holder, .. } => Method::IssueLicense {
            holder: actor(*holder).1,
        },
        Action::ProposeMove {
            kind,
            holder,
            destination,
            ..
        } => Method::ProposeLicenseMove {
            kind: *kind,
            license_holder: actor(*holder).1,
            destination: actor(*destination).1,
        },
        Action::ApproveMove { kind, holder, .. } => Method::ApproveLicenseMove {
            kind: *kind,
            license_holder: actor(*holder).1,
        },
        Action::CreateTreatment { patient, .. } => Method::CreateTreatment {
            patient: patient_key(*patient).1,
            data_hash: keccak256(b"fuzz treatment"),
            data_url: "off-chain".into(),
        },
        Action::ApproveTreatment {
            caller,
            treatment,
            consent,
        } => Method::ApproveTreatment {
            treatment_id: *treatment,
            consent_signature: consent_signature(*caller, *treatment, *consent, consent_patient),
        },
        Action::SubmitEvaluation {
            treatment, rating, ..
        } => Method::SubmitEvaluation {
            treatment_id: *treatment,
            rating: *rating,
            comment_hash: None,
        },
    }
}

fn patient_key(i: usize) -> (PrivateKey, Address) {
    patient(i)
}

fn consent_signature(
    license_holder: usize,
    treatment: u64,
    variant: ConsentVariant,
    consent_patient: usize,
) -> Signature {
    match variant {
        ConsentVariant::Garbage => Signature {
            r: [0xAB; 32],
            s: [0x01; 32],
            v: 0,
        },
        ConsentVariant::WrongSigner => {
            // Signed by an actor key instead of the patient's.
            let digest = consent_digest(treatment, &actor(license_holder).1);
            sign(&digest, &actor((license_holder + 1) % ACTOR_COUNT).0).expect("signs")
        }
        ConsentVariant::WrongTreatment => {
            let digest = consent_digest(treatment + 100, &actor(license_holder).1);
            sign(&digest, &patient_key(consent_patient).0).expect("signs")
        }
        ConsentVariant::Valid => {
            let digest = consent_digest(treatment, &actor(license_holder).1);
            sign(&digest, &patient_key(consent_patient).0).expect("signs")
        }
    }
}

fn caller_of(action: &Action) -> (PrivateKey, Address) {
    match action {
        Action::Propose { caller, .. }
        | Action::Vote { caller, .. }
        | Action::Enact { caller, .. }
        | Action::Register { caller, .. }
        | Action::SetTrust { caller, .. }
        | Action::IssueLicense { caller, .. }
        | Action::ProposeMove { caller, .. }
        | Action::ApproveMove { caller, .. }
        | Action::CreateTreatment { caller, .. }
        | Action::ApproveTreatment { caller, .. } => actor(*caller),
        Action::SubmitEvaluation { caller_patient, .. } => patient(*caller_patient),
    }
}

/// Run one sequence directly against the contract layer.
/// Returns (allowed, denied) action counts.
pub fn run_dispatch_sequence(seed: u64, action_count: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trust = TrustState::genesis(actor(0).1);
    let mut shadow = Shadow::new(0);
    let actions = generate_actions(&mut rng, action_count, 4);
    let (mut allowed_count, mut denied_count) = (0, 0);

    for (i, action) in actions.iter().enumerate() {
        let method = build_method(action, consent_patient_for(&trust, action));
        let caller = caller_of(action).1;
        let before = trust.contract_digests();
        let outcome = trust.execute(caller, &method.call());
        let allowed = shadow.predict_and_apply(action);
        assert_eq!(
            outcome.result.is_ok(),
            allowed,
            "seed {seed} action {i} {action:?}: dispatch {:?} vs shadow {allowed}",
            outcome.result
        );
        if allowed {
            allowed_count += 1;
        } else {
            denied_count += 1;
            assert_eq!(
                trust.contract_digests(),
                before,
                "seed {seed} action {i}: denied action mutated state"
            );
        }
        shadow.check_security_invariants(&trust);
    }
    shadow.check_cascade(&trust);
    (allowed_count, denied_count)
}

/// For a Valid/WrongTreatment consent, the signer must be the treatment's
/// real patient; look it up from the live state.
fn consent_patient_for(trust: &TrustState, action: &Action) -> usize {
    if let Action::ApproveTreatment { treatment, .. } = action {
        if let Some(record) = trust.treatment(*treatment) {
            for i in 0..PATIENT_COUNT {
                if patient(i).1 == record.patient {
                    return i;
                }
            }
        }
    }
    0
}

/// Run one sequence through the full pipeline: signed transactions, mempool
/// admission, block production, receipts. One block per action keeps the
/// stream order authoritative.
pub fn run_chain_sequence(seed: u64, action_count: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(seed));
    let (actors, patients) = key_pool();
    let mut accounts: Vec<GenesisAccount> = Vec::new();
    for (_, address) in actors.iter().chain(patients.iter()) {
        accounts.push(GenesisAccount {
            address: *address,
            balance_wei: 1_000 * 1_000_000_000_000_000_000,
        });
    }
    let genesis = Genesis {
        coinbase: Address([0xEE; 20]),
        bootstrap_authority: actor(0).1,
        accounts,
        genesis_timestamp: 0,
    };
    let mut chain = Chain::new(ChainConfig::default(), &genesis);
    let mut shadow = Shadow::new(0);
    let actions = generate_actions(&mut rng, action_count, 4);
    let (mut allowed_count, mut denied_count) = (0, 0);

    for (i, action) in actions.iter().enumerate() {
        let method = build_method(action, consent_patient_for(chain.trust(), action));
        let (caller_key, caller) = caller_of(action);
        let call = method.call();
        // One block per action keeps the state nonce current.
        let nonce = chain.state().nonce(&caller) + 1;
        let tx = UnsignedTransaction::contract_call(nonce, 20_000_000_000, 300_000, &call)
            .sign(&caller_key)
            .expect("signs");
        let hash = chain
            .submit_transaction(tx)
            .unwrap_or_else(|e| panic!("seed {seed} action {i}: admission failed: {e}"));
        chain.produce_block();
        let (_, receipt) = chain.find_receipt(&hash).expect("mined in this block");
        let allowed = shadow.predict_and_apply(action);
        assert_eq!(
            receipt.status == TxStatus::Succeeded,
            allowed,
            "seed {seed} action {i} {action:?}: receipt {:?} vs shadow {allowed} ({:?})",
            receipt.status,
            receipt.failure
        );
        if allowed {
            allowed_count += 1;
        } else {
            denied_count += 1;
        }
        // Conservation and cascade hold after every block.
        assert_eq!(
            chain.state().total_balance(),
            chain.genesis_supply(),
            "seed {seed} action {i}: supply drifted"
        );
        shadow.check_cascade(chain.trust());
        shadow.check_security_invariants(chain.trust());
    }
    (allowed_count, denied_count)
}
