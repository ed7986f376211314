//! The five healthcare-trust contracts as native state machines:
//! AuthorityManager, TreatmentProvider, License, Treatment, and Measure.
//!
//! Authorities govern themselves by strict-majority voting and endorse the
//! other stakeholder roles. Trust is evaluated live against the current
//! authority set, so removing an authority instantly cascades to everything
//! that depended on its endorsement alone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{
    contract_address, encode_personal_message, keccak256, recover, rlp_encode, Address, Digest,
    RlpItem, Signature,
};
use crate::gas::{GasKey, StorageOp};

/// Longest accepted off-chain document locator.
pub const MAX_DATA_URL_BYTES: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrustError {
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("consent invalid: {0}")]
    ConsentInvalid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// The five native contracts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractId {
    AuthorityManager,
    TreatmentProvider,
    License,
    Treatment,
    Measure,
}

impl ContractId {
    pub const ALL: [ContractId; 5] = [
        ContractId::AuthorityManager,
        ContractId::TreatmentProvider,
        ContractId::License,
        ContractId::Treatment,
        ContractId::Measure,
    ];

    /// Deterministic deployment address: the contracts are installed at
    /// genesis by the zero-address deployer with nonces 1 through 5.
    pub fn address(self) -> Address {
        let nonce_after = match self {
            ContractId::AuthorityManager => 1,
            ContractId::TreatmentProvider => 2,
            ContractId::License => 3,
            ContractId::Treatment => 4,
            ContractId::Measure => 5,
        };
        contract_address(&Address::ZERO, nonce_after)
    }

    pub fn by_address(addr: &Address) -> Option<ContractId> {
        ContractId::ALL.into_iter().find(|c| c.address() == *addr)
    }
}

/// Stakeholder roles that authorities can endorse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrustKind {
    TreatmentProvider,
    LicenseIssuer,
    LicenseProvider,
}

impl TrustKind {
    pub fn parse(s: &str) -> Option<TrustKind> {
        match s {
            "treatment-provider" => Some(TrustKind::TreatmentProvider),
            "license-issuer" => Some(TrustKind::LicenseIssuer),
            "license-provider" => Some(TrustKind::LicenseProvider),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuthorityAction {
    AddAuthority,
    RemoveAuthority,
}

/// Which license association a move targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveKind {
    Issuer,
    Provider,
}

impl MoveKind {
    fn destination_role(self) -> TrustKind {
        match self {
            MoveKind::Issuer => TrustKind::LicenseIssuer,
            MoveKind::Provider => TrustKind::LicenseProvider,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: u64,
    pub action: AuthorityAction,
    pub target: Address,
    pub votes: BTreeSet<Address>,
    pub enacted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingMove {
    pub destination: Address,
    pub proposed_by: Address,
}

/// The on-chain credential bound to a health worker's keypair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct License {
    pub holder: Address,
    pub issuer: Address,
    pub provider: Option<Address>,
    pub pending_issuer_move: Option<PendingMove>,
    pub pending_provider_move: Option<PendingMove>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreatmentRecord {
    pub id: u64,
    pub treatment_provider: Address,
    pub patient: Address,
    pub data_hash: Digest,
    pub data_url: String,
    pub approving_license: Option<Address>,
    pub approved: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub treatment_id: u64,
    pub rating: u8,
    pub comment_hash: Option<Digest>,
}

/// Event emitted into the transaction receipt log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub contract: ContractId,
    pub name: String,
    pub args: serde_json::Value,
}

/// A dispatched contract invocation: target contract plus method arguments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractCall {
    pub target: ContractId,
    pub method: Method,
}

/// The closed set of contract methods.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ProposeAuthorityChange {
        action: AuthorityAction,
        target: Address,
    },
    Vote {
        proposal_id: u64,
    },
    Enact {
        proposal_id: u64,
    },
    Register {
        kind: TrustKind,
    },
    SetTrust {
        kind: TrustKind,
        subject: Address,
        trusted: bool,
    },
    IssueLicense {
        holder: Address,
    },
    ProposeLicenseMove {
        kind: MoveKind,
        license_holder: Address,
        destination: Address,
    },
    ApproveLicenseMove {
        kind: MoveKind,
        license_holder: Address,
    },
    CreateTreatment {
        patient: Address,
        data_hash: Digest,
        data_url: String,
    },
    ApproveTreatment {
        treatment_id: u64,
        consent_signature: Signature,
    },
    SubmitEvaluation {
        treatment_id: u64,
        rating: u8,
        comment_hash: Option<Digest>,
    },
}

impl Method {
    /// The contract this method belongs to.
    pub fn home_contract(&self) -> ContractId {
        match self {
            Method::ProposeAuthorityChange { .. } | Method::Vote { .. } | Method::Enact { .. } => {
                ContractId::AuthorityManager
            }
            Method::Register { kind } | Method::SetTrust { kind, .. } => match kind {
                TrustKind::TreatmentProvider => ContractId::TreatmentProvider,
                TrustKind::LicenseIssuer | TrustKind::LicenseProvider => ContractId::License,
            },
            Method::IssueLicense { .. }
            | Method::ProposeLicenseMove { .. }
            | Method::ApproveLicenseMove { .. } => ContractId::License,
            Method::CreateTreatment { .. } | Method::ApproveTreatment { .. } => {
                ContractId::Treatment
            }
            Method::SubmitEvaluation { .. } => ContractId::Measure,
        }
    }

    pub fn call(self) -> ContractCall {
        ContractCall {
            target: self.home_contract(),
            method: self,
        }
    }
}

/// Outcome of dispatching a call. Failures become failed receipts; the gas
/// key always reflects what execution actually did.
#[derive(Debug)]
pub struct CallOutcome {
    pub result: Result<serde_json::Value, TrustError>,
    pub gas_key: GasKey,
    pub events: Vec<Event>,
    pub trace: Vec<StorageOp>,
}

/// Consent digest a patient signs to approve a treatment: the personal-message
/// encoding of rlp([treatment_id, license holder address]).
pub fn consent_digest(treatment_id: u64, license_holder: &Address) -> Digest {
    let body = rlp_encode(&RlpItem::List(vec![
        RlpItem::uint(treatment_id as u128),
        RlpItem::bytes(license_holder.as_bytes()),
    ]));
    keccak256(&encode_personal_message(&body))
}

/// Combined state of the five contracts.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrustState {
    members: BTreeSet<Address>,
    proposals: BTreeMap<u64, Proposal>,
    next_proposal_id: u64,
    registered: BTreeMap<TrustKind, BTreeSet<Address>>,
    endorsements: BTreeSet<(Address, TrustKind, Address)>,
    licenses: BTreeMap<Address, License>,
    treatments: BTreeMap<u64, TreatmentRecord>,
    next_treatment_id: u64,
    measures: BTreeMap<u64, MeasureRecord>,
}

impl TrustState {
    /// Genesis state with the bootstrap authority installed.
    pub fn genesis(bootstrap_authority: Address) -> TrustState {
        let mut state = TrustState {
            next_proposal_id: 1,
            next_treatment_id: 1,
            ..TrustState::default()
        };
        state.members.insert(bootstrap_authority);
        state
    }

    // ----- read-only queries (zero gas) -----

    pub fn is_authority(&self, addr: &Address) -> bool {
        self.members.contains(addr)
    }

    pub fn authorities(&self) -> &BTreeSet<Address> {
        &self.members
    }

    pub fn proposal(&self, id: u64) -> Option<&Proposal> {
        self.proposals.get(&id)
    }

    pub fn is_registered(&self, kind: TrustKind, addr: &Address) -> bool {
        self.registered
            .get(&kind)
            .map(|set| set.contains(addr))
            .unwrap_or(false)
    }

    /// Effective trust: at least one endorsement from a current authority.
    pub fn query_trust(&self, entity: &Address, kind: TrustKind) -> bool {
        self.endorsements
            .iter()
            .any(|(a, k, s)| *k == kind && s == entity && self.members.contains(a))
    }

    /// A license is trusted iff both the issuer leg and the provider
    /// association leg carry effective trust.
    pub fn query_license_trust(&self, holder: &Address) -> bool {
        let Some(license) = self.licenses.get(holder) else {
            return false;
        };
        let issuer_ok = self.query_trust(&license.issuer, TrustKind::LicenseIssuer);
        let provider_ok = license
            .provider
            .map(|p| self.query_trust(&p, TrustKind::LicenseProvider))
            .unwrap_or(false);
        issuer_ok && provider_ok
    }

    pub fn license(&self, holder: &Address) -> Option<&License> {
        self.licenses.get(holder)
    }

    pub fn treatment(&self, id: u64) -> Option<&TreatmentRecord> {
        self.treatments.get(&id)
    }

    pub fn treatments(&self) -> impl Iterator<Item = &TreatmentRecord> {
        self.treatments.values()
    }

    pub fn measure(&self, treatment_id: u64) -> Option<&MeasureRecord> {
        self.measures.get(&treatment_id)
    }

    pub fn measures(&self) -> impl Iterator<Item = &MeasureRecord> {
        self.measures.values()
    }

    /// Experience and competence evidence for a license holder.
    pub fn query_evidence(&self, holder: &Address) -> Evidence {
        let mut ratings = Vec::new();
        let mut count = 0usize;
        for treatment in self.treatments.values() {
            if treatment.approved && treatment.approving_license == Some(*holder) {
                count += 1;
                if let Some(measure) = self.measures.get(&treatment.id) {
                    ratings.push(measure.rating);
                }
            }
        }
        let mean_rating = if ratings.is_empty() {
            None
        } else {
            Some(ratings.iter().map(|&r| r as f64).sum::<f64>() / ratings.len() as f64)
        };
        Evidence {
            experience_count: count,
            ratings,
            mean_rating,
        }
    }

    /// Treatments approved under a holder's license.
    pub fn treatments_for_license(&self, holder: &Address) -> Vec<&TreatmentRecord> {
        self.treatments
            .values()
            .filter(|t| t.approving_license == Some(*holder))
            .collect()
    }

    // ----- dispatch -----

    /// Execute a call in the context of a recovered sender. Failed calls make
    /// no state change; the caller is responsible for charging gas either way.
    pub fn execute(&mut self, caller: Address, call: &ContractCall) -> CallOutcome {
        let mut trace = vec![StorageOp::JumpDest];
        if call.target != call.method.home_contract() {
            return CallOutcome {
                result: Err(TrustError::InvalidArgument(format!(
                    "method belongs to {:?}, call targets {:?}",
                    call.method.home_contract(),
                    call.target
                ))),
                gas_key: method_gas_key(&call.method, caller, self),
                events: Vec::new(),
                trace,
            };
        }
        let gas_key = method_gas_key(&call.method, caller, self);
        let mut events = Vec::new();
        let result = self.dispatch(caller, &call.method, &mut events, &mut trace);
        // Invocation outcome can refine the gas key (enact without majority).
        let gas_key = match (&call.method, &result) {
            (Method::Enact { .. }, Err(_)) => GasKey::EnactNoMajority,
            _ => gas_key,
        };
        if result.is_err() {
            events.clear();
        }
        CallOutcome {
            result,
            gas_key,
            events,
            trace,
        }
    }

    fn dispatch(
        &mut self,
        caller: Address,
        method: &Method,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        match method {
            Method::ProposeAuthorityChange { action, target } => {
                self.propose_authority_change(caller, *action, *target, events, trace)
            }
            Method::Vote { proposal_id } => self.vote(caller, *proposal_id, events, trace),
            Method::Enact { proposal_id } => self.enact(caller, *proposal_id, events, trace),
            Method::Register { kind } => self.register(caller, *kind, events, trace),
            Method::SetTrust {
                kind,
                subject,
                trusted,
            } => self.set_trust(caller, *kind, *subject, *trusted, events, trace),
            Method::IssueLicense { holder } => self.issue_license(caller, *holder, events, trace),
            Method::ProposeLicenseMove {
                kind,
                license_holder,
                destination,
            } => self.propose_license_move(
                caller,
                *kind,
                *license_holder,
                *destination,
                events,
                trace,
            ),
            Method::ApproveLicenseMove {
                kind,
                license_holder,
            } => self.approve_license_move(caller, *kind, *license_holder, events, trace),
            Method::CreateTreatment {
                patient,
                data_hash,
                data_url,
            } => self.create_treatment(caller, *patient, *data_hash, data_url, events, trace),
            Method::ApproveTreatment {
                treatment_id,
                consent_signature,
            } => self.approve_treatment(caller, *treatment_id, consent_signature, events, trace),
            Method::SubmitEvaluation {
                treatment_id,
                rating,
                comment_hash,
            } => self.submit_evaluation(caller, *treatment_id, *rating, *comment_hash, events, trace),
        }
    }

    // ----- AuthorityManager -----

    fn require_authority(&self, caller: &Address, trace: &mut Vec<StorageOp>) -> Result<(), TrustError> {
        trace.push(StorageOp::Load);
        if self.members.contains(caller) {
            Ok(())
        } else {
            Err(TrustError::Unauthorized(format!(
                "{caller} is not an authority"
            )))
        }
    }

    fn propose_authority_change(
        &mut self,
        caller: Address,
        action: AuthorityAction,
        target: Address,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        self.require_authority(&caller, trace)?;
        trace.push(StorageOp::Load);
        match action {
            AuthorityAction::AddAuthority => {
                if self.members.contains(&target) {
                    return Err(TrustError::Conflict(format!(
                        "{target} is already an authority"
                    )));
                }
            }
            AuthorityAction::RemoveAuthority => {
                if !self.members.contains(&target) {
                    return Err(TrustError::NotFound(format!("{target} is not an authority")));
                }
                if self.members.len() == 1 {
                    return Err(TrustError::PreconditionFailed(
                        "cannot remove the last authority".into(),
                    ));
                }
            }
        }
        trace.push(StorageOp::Load);
        let duplicate = self
            .proposals
            .values()
            .any(|p| !p.enacted && p.action == action && p.target == target);
        if duplicate {
            return Err(TrustError::Conflict(format!(
                "open proposal for {action:?} {target} already exists"
            )));
        }

        let id = self.next_proposal_id;
        self.next_proposal_id += 1;
        let mut proposal = Proposal {
            id,
            action,
            target,
            votes: BTreeSet::from([caller]),
            enacted: false,
        };
        trace.extend([StorageOp::StoreFromZero; 3]);
        events.push(Event {
            contract: ContractId::AuthorityManager,
            name: "proposal_created".into(),
            args: serde_json::json!({
                "proposal_id": id,
                "action": action,
                "target": target,
                "proposer": caller,
            }),
        });

        // Sole-authority fast path: the proposer is the whole electorate.
        let enacted_now = self.members.len() == 1 && self.members.contains(&caller);
        if enacted_now {
            proposal.enacted = true;
            self.apply_action(action, target);
            trace.push(StorageOp::StoreFromZero);
            events.push(Event {
                contract: ContractId::AuthorityManager,
                name: "proposal_enacted".into(),
                args: serde_json::json!({
                    "proposal_id": id,
                    "action": action,
                    "target": target,
                }),
            });
        }
        self.proposals.insert(id, proposal);
        Ok(serde_json::json!({ "proposal_id": id, "enacted": enacted_now }))
    }

    fn vote(
        &mut self,
        caller: Address,
        proposal_id: u64,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        self.require_authority(&caller, trace)?;
        trace.push(StorageOp::Load);
        let proposal = self
            .proposals
            .get_mut(&proposal_id)
            .ok_or_else(|| TrustError::NotFound(format!("proposal {proposal_id} unknown")))?;
        if proposal.enacted {
            return Err(TrustError::Conflict(format!(
                "proposal {proposal_id} already enacted"
            )));
        }
        // Idempotent: re-voting does not change the set.
        if proposal.votes.insert(caller) {
            trace.push(StorageOp::StoreFromZero);
            events.push(Event {
                contract: ContractId::AuthorityManager,
                name: "vote_cast".into(),
                args: serde_json::json!({ "proposal_id": proposal_id, "voter": caller }),
            });
        }
        Ok(serde_json::json!({ "votes": proposal.votes.len() }))
    }

    fn enact(
        &mut self,
        caller: Address,
        proposal_id: u64,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        self.require_authority(&caller, trace)?;
        trace.push(StorageOp::Load);
        let proposal = self
            .proposals
            .get(&proposal_id)
            .ok_or_else(|| TrustError::NotFound(format!("proposal {proposal_id} unknown")))?
            .clone();
        if proposal.enacted {
            return Err(TrustError::Conflict(format!(
                "proposal {proposal_id} already enacted"
            )));
        }
        // Votes by since-removed authorities do not count.
        trace.push(StorageOp::Load);
        let valid_votes = proposal.votes.intersection(&self.members).count();
        if 2 * valid_votes <= self.members.len() {
            return Err(TrustError::PreconditionFailed(format!(
                "insufficient majority: {valid_votes} of {} members",
                self.members.len()
            )));
        }
        // Re-validate applicability at enactment time.
        match proposal.action {
            AuthorityAction::AddAuthority if self.members.contains(&proposal.target) => {
                return Err(TrustError::PreconditionFailed(format!(
                    "{} already became an authority",
                    proposal.target
                )));
            }
            AuthorityAction::RemoveAuthority if !self.members.contains(&proposal.target) => {
                return Err(TrustError::PreconditionFailed(format!(
                    "{} is no longer an authority",
                    proposal.target
                )));
            }
            AuthorityAction::RemoveAuthority if self.members.len() == 1 => {
                return Err(TrustError::PreconditionFailed(
                    "cannot remove the last authority".into(),
                ));
            }
            _ => {}
        }
        self.apply_action(proposal.action, proposal.target);
        self.proposals
            .get_mut(&proposal_id)
            .expect("proposal exists")
            .enacted = true;
        trace.extend([StorageOp::StoreFromZero; 2]);
        events.push(Event {
            contract: ContractId::AuthorityManager,
            name: "proposal_enacted".into(),
            args: serde_json::json!({
                "proposal_id": proposal_id,
                "action": proposal.action,
                "target": proposal.target,
            }),
        });
        Ok(serde_json::json!({ "enacted": true, "action": proposal.action }))
    }

    fn apply_action(&mut self, action: AuthorityAction, target: Address) {
        match action {
            AuthorityAction::AddAuthority => {
                self.members.insert(target);
            }
            AuthorityAction::RemoveAuthority => {
                self.members.remove(&target);
            }
        }
    }

    // ----- registration and endorsement -----

    fn register(
        &mut self,
        caller: Address,
        kind: TrustKind,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        trace.push(StorageOp::Load);
        let set = self.registered.entry(kind).or_default();
        if !set.insert(caller) {
            return Err(TrustError::Conflict(format!(
                "{caller} already registered as {kind:?}"
            )));
        }
        trace.push(StorageOp::StoreFromZero);
        events.push(Event {
            contract: registry_contract(kind),
            name: "registered".into(),
            args: serde_json::json!({ "kind": kind, "subject": caller }),
        });
        Ok(serde_json::json!({ "registered": true }))
    }

    fn set_trust(
        &mut self,
        caller: Address,
        kind: TrustKind,
        subject: Address,
        trusted: bool,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        self.require_authority(&caller, trace)?;
        trace.push(StorageOp::Load);
        if !self.is_registered(kind, &subject) {
            return Err(TrustError::NotFound(format!(
                "{subject} is not registered as {kind:?}"
            )));
        }
        if trusted {
            if self.endorsements.insert((caller, kind, subject)) {
                trace.push(StorageOp::StoreFromZero);
            }
        } else {
            self.endorsements.remove(&(caller, kind, subject));
        }
        events.push(Event {
            contract: registry_contract(kind),
            name: if trusted { "trust_added" } else { "trust_removed" }.into(),
            args: serde_json::json!({
                "authority": caller,
                "kind": kind,
                "subject": subject,
            }),
        });
        Ok(serde_json::json!({ "trusted": self.query_trust(&subject, kind) }))
    }

    // ----- License contract -----

    fn issue_license(
        &mut self,
        caller: Address,
        holder: Address,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        trace.push(StorageOp::Load);
        if !self.is_registered(TrustKind::LicenseIssuer, &caller) {
            return Err(TrustError::Unauthorized(format!(
                "{caller} is not a registered license issuer"
            )));
        }
        trace.push(StorageOp::Load);
        if self.licenses.contains_key(&holder) {
            return Err(TrustError::Conflict(format!(
                "{holder} already holds a license"
            )));
        }
        self.licenses.insert(
            holder,
            License {
                holder,
                issuer: caller,
                provider: None,
                pending_issuer_move: None,
                pending_provider_move: None,
            },
        );
        trace.extend([StorageOp::StoreFromZero; 2]);
        events.push(Event {
            contract: ContractId::License,
            name: "license_issued".into(),
            args: serde_json::json!({ "holder": holder, "issuer": caller }),
        });
        Ok(serde_json::json!({ "holder": holder }))
    }

    fn propose_license_move(
        &mut self,
        caller: Address,
        kind: MoveKind,
        license_holder: Address,
        destination: Address,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        trace.push(StorageOp::Load);
        let license = self
            .licenses
            .get(&license_holder)
            .ok_or_else(|| TrustError::NotFound(format!("no license for {license_holder}")))?;
        if caller != license.holder && caller != license.issuer {
            return Err(TrustError::Unauthorized(format!(
                "{caller} is neither the license holder nor its issuer"
            )));
        }
        trace.push(StorageOp::Load);
        if !self.is_registered(kind.destination_role(), &destination) {
            return Err(TrustError::NotFound(format!(
                "{destination} is not registered as {:?}",
                kind.destination_role()
            )));
        }
        let pending = PendingMove {
            destination,
            proposed_by: caller,
        };
        let license = self.licenses.get_mut(&license_holder).expect("checked");
        // Replaces any prior pending move of the same kind.
        match kind {
            MoveKind::Issuer => license.pending_issuer_move = Some(pending),
            MoveKind::Provider => license.pending_provider_move = Some(pending),
        }
        trace.push(StorageOp::StoreFromZero);
        events.push(Event {
            contract: ContractId::License,
            name: "license_move_proposed".into(),
            args: serde_json::json!({
                "kind": kind,
                "holder": license_holder,
                "destination": destination,
                "proposed_by": caller,
            }),
        });
        Ok(serde_json::json!({ "pending": true }))
    }

    fn approve_license_move(
        &mut self,
        caller: Address,
        kind: MoveKind,
        license_holder: Address,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        trace.push(StorageOp::Load);
        let license = self
            .licenses
            .get(&license_holder)
            .ok_or_else(|| TrustError::NotFound(format!("no license for {license_holder}")))?;
        let pending = match kind {
            MoveKind::Issuer => license.pending_issuer_move,
            MoveKind::Provider => license.pending_provider_move,
        }
        .ok_or_else(|| {
            TrustError::NotFound(format!("no pending {kind:?} move for {license_holder}"))
        })?;
        // The destination itself must consent.
        if caller != pending.destination {
            return Err(TrustError::Unauthorized(format!(
                "{caller} is not the move destination"
            )));
        }
        let license = self.licenses.get_mut(&license_holder).expect("checked");
        match kind {
            MoveKind::Issuer => {
                license.issuer = pending.destination;
                license.pending_issuer_move = None;
            }
            MoveKind::Provider => {
                license.provider = Some(pending.destination);
                license.pending_provider_move = None;
            }
        }
        trace.push(StorageOp::StoreFromZero);
        events.push(Event {
            contract: ContractId::License,
            name: "license_move_approved".into(),
            args: serde_json::json!({
                "kind": kind,
                "holder": license_holder,
                "destination": pending.destination,
            }),
        });
        Ok(serde_json::json!({ "approved": true }))
    }

    // ----- Treatment contract -----

    fn create_treatment(
        &mut self,
        caller: Address,
        patient: Address,
        data_hash: Digest,
        data_url: &str,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        if data_url.len() > MAX_DATA_URL_BYTES {
            return Err(TrustError::InvalidArgument(format!(
                "data_url exceeds {MAX_DATA_URL_BYTES} bytes"
            )));
        }
        // Registration alone is not enough; the provider needs live trust.
        trace.extend([StorageOp::Load; 2]);
        if !self.is_registered(TrustKind::TreatmentProvider, &caller)
            || !self.query_trust(&caller, TrustKind::TreatmentProvider)
        {
            return Err(TrustError::Unauthorized(format!(
                "{caller} is not a trusted treatment provider"
            )));
        }
        let id = self.next_treatment_id;
        self.next_treatment_id += 1;
        self.treatments.insert(
            id,
            TreatmentRecord {
                id,
                treatment_provider: caller,
                patient,
                data_hash,
                data_url: data_url.to_owned(),
                approving_license: None,
                approved: false,
            },
        );
        trace.extend([StorageOp::StoreFromZero; 4]);
        events.push(Event {
            contract: ContractId::Treatment,
            name: "treatment_created".into(),
            args: serde_json::json!({
                "treatment_id": id,
                "treatment_provider": caller,
                "patient": patient,
                "data_hash": data_hash,
            }),
        });
        Ok(serde_json::json!({ "treatment_id": id }))
    }

    fn approve_treatment(
        &mut self,
        caller: Address,
        treatment_id: u64,
        consent_signature: &Signature,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        trace.push(StorageOp::Load);
        let treatment = self
            .treatments
            .get(&treatment_id)
            .ok_or_else(|| TrustError::NotFound(format!("treatment {treatment_id} unknown")))?;
        if treatment.approved {
            return Err(TrustError::Conflict(format!(
                "treatment {treatment_id} already approved"
            )));
        }
        // Trust is evaluated at call time: issuer leg and provider leg.
        trace.extend([StorageOp::Load; 2]);
        if !self.query_license_trust(&caller) {
            return Err(TrustError::Unauthorized(format!(
                "{caller} does not hold a currently trusted license"
            )));
        }
        let digest = consent_digest(treatment_id, &caller);
        let signer = recover(&digest, consent_signature)
            .map_err(|e| TrustError::ConsentInvalid(e.to_string()))?;
        if signer != treatment.patient {
            return Err(TrustError::ConsentInvalid(format!(
                "consent signed by {signer}, expected the treatment's patient"
            )));
        }
        let treatment = self.treatments.get_mut(&treatment_id).expect("checked");
        treatment.approving_license = Some(caller);
        treatment.approved = true;
        trace.extend([StorageOp::StoreFromZero; 2]);
        events.push(Event {
            contract: ContractId::Treatment,
            name: "treatment_approved".into(),
            args: serde_json::json!({
                "treatment_id": treatment_id,
                "approving_license": caller,
            }),
        });
        Ok(serde_json::json!({ "approved": true }))
    }

    // ----- Measure contract -----

    fn submit_evaluation(
        &mut self,
        caller: Address,
        treatment_id: u64,
        rating: u8,
        comment_hash: Option<Digest>,
        events: &mut Vec<Event>,
        trace: &mut Vec<StorageOp>,
    ) -> Result<serde_json::Value, TrustError> {
        if !(1..=10).contains(&rating) {
            return Err(TrustError::InvalidArgument(format!(
                "rating {rating} outside 1..=10"
            )));
        }
        trace.push(StorageOp::Load);
        let treatment = self
            .treatments
            .get(&treatment_id)
            .ok_or_else(|| TrustError::NotFound(format!("treatment {treatment_id} unknown")))?;
        if caller != treatment.patient {
            return Err(TrustError::Unauthorized(
                "only the treatment's patient may evaluate it".into(),
            ));
        }
        if !treatment.approved {
            return Err(TrustError::PreconditionFailed(format!(
                "treatment {treatment_id} is not approved"
            )));
        }
        trace.push(StorageOp::Load);
        if self.measures.contains_key(&treatment_id) {
            return Err(TrustError::Conflict(format!(
                "treatment {treatment_id} already evaluated"
            )));
        }
        self.measures.insert(
            treatment_id,
            MeasureRecord {
                treatment_id,
                rating,
                comment_hash,
            },
        );
        trace.extend([StorageOp::StoreFromZero; 2]);
        events.push(Event {
            contract: ContractId::Measure,
            name: "evaluation_submitted".into(),
            args: serde_json::json!({ "treatment_id": treatment_id, "rating": rating }),
        });
        Ok(serde_json::json!({ "treatment_id": treatment_id, "rating": rating }))
    }

    /// Canonical digest of each contract's state slice, for anchoring into
    /// contract storage.
    pub fn contract_digests(&self) -> [(ContractId, Digest); 5] {
        let filter_endorsements = |kinds: &[TrustKind]| -> Vec<&(Address, TrustKind, Address)> {
            self.endorsements
                .iter()
                .filter(|(_, k, _)| kinds.contains(k))
                .collect()
        };
        let authority = serde_json::json!({
            "members": self.members,
            "proposals": self.proposals,
            "next_proposal_id": self.next_proposal_id,
        });
        let provider = serde_json::json!({
            "registered": self.registered.get(&TrustKind::TreatmentProvider),
            "endorsements": filter_endorsements(&[TrustKind::TreatmentProvider]),
        });
        let license = serde_json::json!({
            "issuers": self.registered.get(&TrustKind::LicenseIssuer),
            "license_providers": self.registered.get(&TrustKind::LicenseProvider),
            "endorsements": filter_endorsements(&[TrustKind::LicenseIssuer, TrustKind::LicenseProvider]),
            "licenses": self.licenses,
        });
        let treatment = serde_json::json!({
            "treatments": self.treatments,
            "next_treatment_id": self.next_treatment_id,
        });
        let measure = serde_json::json!({ "measures": self.measures });
        let digest_of = |value: &serde_json::Value| {
            keccak256(&serde_json::to_vec(value).expect("trust state serializes"))
        };
        [
            (ContractId::AuthorityManager, digest_of(&authority)),
            (ContractId::TreatmentProvider, digest_of(&provider)),
            (ContractId::License, digest_of(&license)),
            (ContractId::Treatment, digest_of(&treatment)),
            (ContractId::Measure, digest_of(&measure)),
        ]
    }
}

fn registry_contract(kind: TrustKind) -> ContractId {
    match kind {
        TrustKind::TreatmentProvider => ContractId::TreatmentProvider,
        TrustKind::LicenseIssuer | TrustKind::LicenseProvider => ContractId::License,
    }
}

/// Gas key for a method before outcome refinement.
fn method_gas_key(method: &Method, caller: Address, state: &TrustState) -> GasKey {
    match method {
        Method::ProposeAuthorityChange { action, .. } => match action {
            AuthorityAction::AddAuthority => GasKey::ProposeAddAuthority,
            AuthorityAction::RemoveAuthority => GasKey::ProposeRemoveAuthority,
        },
        Method::Vote { .. } => GasKey::Vote,
        Method::Enact { proposal_id } => match state.proposals.get(proposal_id).map(|p| p.action) {
            Some(AuthorityAction::RemoveAuthority) => GasKey::EnactRemoveAuthority,
            // Unknown proposals refine to the failed-enact key on error.
            _ => GasKey::EnactAddAuthority,
        },
        Method::Register { kind } => match kind {
            TrustKind::TreatmentProvider => GasKey::RegisterTreatmentProvider,
            TrustKind::LicenseIssuer => GasKey::RegisterLicenseIssuer,
            TrustKind::LicenseProvider => GasKey::RegisterLicenseProvider,
        },
        Method::SetTrust { kind, trusted, .. } => match (kind, trusted) {
            (TrustKind::TreatmentProvider, true) => GasKey::AddTrustTreatmentProvider,
            (TrustKind::TreatmentProvider, false) => GasKey::RemoveTrustTreatmentProvider,
            (TrustKind::LicenseIssuer, true) => GasKey::AddTrustLicenseIssuer,
            (TrustKind::LicenseIssuer, false) => GasKey::RemoveTrustLicenseIssuer,
            (TrustKind::LicenseProvider, true) => GasKey::AddTrustLicenseProvider,
            (TrustKind::LicenseProvider, false) => GasKey::RemoveTrustLicenseProvider,
        },
        Method::IssueLicense { .. } => GasKey::IssueLicense,
        Method::ProposeLicenseMove { license_holder, .. } => {
            // Costed by proposer role: the holder pays one rate, the issuer
            // another.
            if caller == *license_holder {
                GasKey::ProposeLicenseMoveByHolder
            } else {
                GasKey::ProposeLicenseMoveByIssuer
            }
        }
        Method::ApproveLicenseMove { kind, .. } => match kind {
            MoveKind::Issuer => GasKey::ApproveLicenseMoveIssuer,
            MoveKind::Provider => GasKey::ApproveLicenseMoveProvider,
        },
        Method::CreateTreatment { .. } => GasKey::CreateTreatment,
        Method::ApproveTreatment { .. } => GasKey::ApproveTreatment,
        Method::SubmitEvaluation { .. } => GasKey::SubmitEvaluation,
    }
}

/// Evidence of experience and competence for a license holder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub experience_count: usize,
    pub ratings: Vec<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_rating: Option<f64>,
}
